//! Whether a node should be a designated sink or a consequential sub-rate
//! sink, judged by the bits each symbol costs under the two field sizes.

use num_rational::Ratio;
use serde::Serialize;

use crate::field::{ceil_log2, smallest_prime_greater_than};
use crate::linalg::rank;
use crate::multicast::LinearCode;
use crate::netgraph::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PreferSubRate,
    PreferSink,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SinkAdvice {
    pub h_t: usize,
    pub r_t: usize,
    pub field_size: u64,
    pub field_size_as_sink: u64,
    pub f_bits: u32,
    pub f_prime_bits: u32,
    pub verdict: Verdict,
}

/// Rank of the global kernels on all links entering `t`.
pub fn consequential_maxflow(net: &Network, code: &LinearCode, t: usize) -> usize {
    rank(&code.kernel_matrix(&net.incoming(t)))
}

/// With `num_sinks` designated sinks the field has the least prime above
/// `num_sinks`; adding `t` as a sink needs the least prime above
/// `num_sinks + 1`. Sub-rate wins when `r_t / bits(F) >= h_t / bits(F')`.
pub fn rate_ratio_verdict(h_t: usize, r_t: usize, num_sinks: usize) -> SinkAdvice {
    let field_size = smallest_prime_greater_than(num_sinks as u64);
    let field_size_as_sink = smallest_prime_greater_than(num_sinks as u64 + 1);
    let f_bits = ceil_log2(field_size);
    let f_prime_bits = ceil_log2(field_size_as_sink);
    let lhs = r_t as u64 * f_prime_bits as u64;
    let rhs = h_t as u64 * f_bits as u64;
    SinkAdvice {
        h_t,
        r_t,
        field_size,
        field_size_as_sink,
        f_bits,
        f_prime_bits,
        verdict: if lhs >= rhs {
            Verdict::PreferSubRate
        } else {
            Verdict::PreferSink
        },
    }
}

/// Threshold on `r_t / h_t`: `bits(F) / bits(F')`.
pub fn rate_ratio_bound(num_sinks: usize) -> Ratio<u64> {
    let a = ceil_log2(smallest_prime_greater_than(num_sinks as u64));
    let b = ceil_log2(smallest_prime_greater_than(num_sinks as u64 + 1));
    Ratio::new(a as u64, b as u64)
}

pub fn rate_ratio_curve(max_sinks: usize) -> Vec<(usize, Ratio<u64>)> {
    (1..=max_sinks).map(|n| (n, rate_ratio_bound(n))).collect()
}

/// `num_sinks,bound_num,bound_den` rows with a header line.
pub fn rate_ratio_csv(max_sinks: usize) -> String {
    let mut out = String::from("num_sinks,bound_num,bound_den\n");
    for (n, b) in rate_ratio_curve(max_sinks) {
        out.push_str(&format!("{n},{},{}\n", b.numer(), b.denom()));
    }
    out
}
