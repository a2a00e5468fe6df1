//! Linear multicast construction, per-sink GEM extraction and symbol-level
//! simulation.
//!
//! Construction follows the deterministic greedy scheme: route `min(h_t, r)`
//! edge-disjoint paths from the imaginary source to every designated sink,
//! then walk the coded links in topological order and give each one a
//! combination of its path predecessors that keeps every sink's frontier
//! independent. Links on no chosen path forward the sum of their node's
//! inputs, so nodes outside the sink set still see something useful.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::FieldSpec;
use crate::linalg::{invert, rank, unit_vector, LinalgError, Mat};
use crate::netgraph::{EdgeId, NetError, Network};

/// Upper bound on coefficient vectors tried per coded link.
const MAX_CANDIDATES_PER_EDGE: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("GF({p}) is too small: need more than {eligible} element(s) for the eligible sinks")]
    FieldTooSmall { p: u32, eligible: usize },
    #[error("rate {rate} exceeds the source out-degree {degree}")]
    RateExceedsSourceDegree { rate: usize, degree: usize },
    #[error("code does not give sink `{0}` enough independent inputs")]
    CodeInvalidForSink(String),
    #[error("global kernel of link {0} disagrees with the local kernels")]
    Inconsistent(EdgeId),
    #[error("malformed code: {0}")]
    Malformed(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Local encoding kernel of one node: `k[d][e]` combines input `d` into
/// output `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalKernel {
    pub inputs: Vec<EdgeId>,
    pub outputs: Vec<EdgeId>,
    pub k: Mat,
}

/// An `r`-dimensional linear network code: global kernels for every link
/// (imaginary links included) and the local kernels that produce them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCode {
    field: FieldSpec,
    rate: usize,
    gek: BTreeMap<EdgeId, Vec<u32>>,
    lek: Vec<LocalKernel>,
}

impl LinearCode {
    /// Derives global kernels from local ones, upstream to downstream.
    pub fn from_local_kernels(net: &Network, lek: Vec<LocalKernel>) -> Result<Self, CodeError> {
        let f = net.field();
        let r = net.rate();
        if lek.len() != net.node_count() {
            return Err(CodeError::Malformed(format!(
                "{} local kernels for {} nodes",
                lek.len(),
                net.node_count()
            )));
        }
        let mut gek = BTreeMap::new();
        for (i, e) in net.imaginary_links().into_iter().enumerate() {
            gek.insert(e, unit_vector(r, i));
        }
        for &x in net.topo_order() {
            let kern = &lek[x];
            if kern.inputs != net.incoming(x) || kern.outputs != net.outgoing(x) {
                return Err(CodeError::Malformed(format!(
                    "local kernel of node `{}` does not match its links",
                    net.name(x)
                )));
            }
            if kern.k.rows() != kern.inputs.len()
                || kern.k.cols() != kern.outputs.len()
                || kern.k.field() != f
            {
                return Err(CodeError::Malformed(format!(
                    "local kernel of node `{}` has the wrong shape",
                    net.name(x)
                )));
            }
            for (j, &e) in kern.outputs.iter().enumerate() {
                let mut v = vec![0u32; r];
                for (i, d) in kern.inputs.iter().enumerate() {
                    let c = kern.k.get(i, j);
                    if c != 0 {
                        for (acc, &x) in v.iter_mut().zip(&gek[d]) {
                            *acc = f.add(*acc, f.mul(c, x));
                        }
                    }
                }
                gek.insert(e, v);
            }
        }
        Ok(Self {
            field: f,
            rate: r,
            gek,
            lek,
        })
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn rate(&self) -> usize {
        self.rate
    }

    pub fn gek(&self, e: EdgeId) -> Option<&[u32]> {
        self.gek.get(&e).map(Vec::as_slice)
    }

    pub fn geks(&self) -> &BTreeMap<EdgeId, Vec<u32>> {
        &self.gek
    }

    pub fn local_kernel(&self, node: usize) -> &LocalKernel {
        &self.lek[node]
    }

    pub fn local_kernels(&self) -> &[LocalKernel] {
        &self.lek
    }

    /// Checks `f_e = sum_d k_{d,e} f_d` at every node and that the imaginary
    /// links carry the standard basis.
    pub fn check_consistency(&self, net: &Network) -> Result<(), CodeError> {
        let f = self.field;
        for (i, e) in net.imaginary_links().into_iter().enumerate() {
            if self.gek.get(&e) != Some(&unit_vector(self.rate, i)) {
                return Err(CodeError::Inconsistent(e));
            }
        }
        for &x in net.topo_order() {
            let kern = &self.lek[x];
            for (j, &e) in kern.outputs.iter().enumerate() {
                let mut v = vec![0u32; self.rate];
                for (i, d) in kern.inputs.iter().enumerate() {
                    for (acc, &x) in v.iter_mut().zip(&self.gek[d]) {
                        *acc = f.add(*acc, f.mul(kern.k.get(i, j), x));
                    }
                }
                if self.gek.get(&e) != Some(&v) {
                    return Err(CodeError::Inconsistent(e));
                }
            }
        }
        Ok(())
    }

    /// Matrix whose columns are the global kernels of the given links.
    pub fn kernel_matrix(&self, edges: &[EdgeId]) -> Mat {
        let cols: Vec<&[u32]> = edges.iter().map(|e| self.gek[e].as_slice()).collect();
        Mat::from_columns(self.field, self.rate, &cols).expect("kernels have length r")
    }
}

/// Global encoding matrix of one sink: the kernels of the links it decodes
/// from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gem {
    pub sink: usize,
    pub matrix: Mat,
    pub used_edges: Vec<EdgeId>,
}

impl Gem {
    /// The symbols this sink reads off its decoding links.
    pub fn received(&self, trace: &SimTrace) -> Vec<u32> {
        self.used_edges
            .iter()
            .map(|e| trace.edge_symbols[e])
            .collect()
    }
}

/// Record of one network use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTrace {
    pub input: Vec<u32>,
    /// `v P`, the vector actually injected on the imaginary links.
    pub precoded: Vec<u32>,
    pub edge_symbols: BTreeMap<EdgeId, u32>,
    /// Raw incoming symbols of every non-source node, by ascending link id.
    pub received: BTreeMap<usize, Vec<(EdgeId, u32)>>,
}

struct PathUse {
    sink: usize,
    path: usize,
    pred: EdgeId,
}

/// Builds an `r`-dimensional linear multicast for the designated `sinks`.
/// Sinks with `h_t >= r` receive `r` independent kernels, sub-rate sinks
/// receive `h_t`.
pub fn build_multicast(net: &Network, sinks: &[usize], seed: u64) -> Result<LinearCode, CodeError> {
    let f = net.field();
    let r = net.rate();
    let q = f.modulus();
    let degree = net.outgoing(net.source()).len();
    if r > degree {
        return Err(CodeError::RateExceedsSourceDegree { rate: r, degree });
    }
    let sinks: Vec<usize> = sinks
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut paths = Vec::with_capacity(sinks.len());
    let mut eligible = 0;
    for &t in &sinks {
        if net.max_flow(t)?.value >= r {
            eligible += 1;
        }
        paths.push(net.paths_from_imaginary_source(t)?);
    }
    if q as usize <= eligible {
        return Err(CodeError::FieldTooSmall { p: q, eligible });
    }

    let mut uses: HashMap<EdgeId, Vec<PathUse>> = HashMap::new();
    let mut frontier: Vec<Vec<Vec<u32>>> = Vec::with_capacity(sinks.len());
    for (s, ps) in paths.iter().enumerate() {
        let mut front = Vec::with_capacity(ps.len());
        for (j, p) in ps.iter().enumerate() {
            let first = p[0]
                .imaginary_index()
                .expect("paths start at the imaginary source");
            front.push(unit_vector(r, first));
            for w in p.windows(2) {
                uses.entry(w[1]).or_default().push(PathUse {
                    sink: s,
                    path: j,
                    pred: w[0],
                });
            }
        }
        frontier.push(front);
    }

    let mut gek: BTreeMap<EdgeId, Vec<u32>> = BTreeMap::new();
    for (i, e) in net.imaginary_links().into_iter().enumerate() {
        gek.insert(e, unit_vector(r, i));
    }
    let mut coeffs: HashMap<(EdgeId, EdgeId), u32> = HashMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for &x in net.topo_order() {
        for e in net.outgoing(x) {
            let Some(here) = uses.get(&e) else {
                // off-path links forward the sum of their node's inputs
                let mut v = vec![0u32; r];
                for d in net.incoming(x) {
                    for (acc, &y) in v.iter_mut().zip(&gek[&d]) {
                        *acc = f.add(*acc, y);
                    }
                    coeffs.insert((d, e), 1);
                }
                gek.insert(e, v);
                continue;
            };
            let preds: Vec<EdgeId> = here
                .iter()
                .map(|u| u.pred)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let offsets: Vec<u32> = if seed == 0 {
                vec![0; preds.len()]
            } else {
                preds.iter().map(|_| rng.gen_range(0..q)).collect()
            };
            let total = (q as u64)
                .saturating_pow(preds.len() as u32)
                .min(MAX_CANDIDATES_PER_EDGE);
            let mut raw = vec![0u32; preds.len()];
            let mut chosen = None;
            for _ in 0..total {
                let c: Vec<u32> = raw
                    .iter()
                    .zip(&offsets)
                    .map(|(&a, &o)| (a + o) % q)
                    .collect();
                odometer(&mut raw, q);
                if c.iter().all(|&x| x == 0) {
                    continue;
                }
                let mut v = vec![0u32; r];
                for (ci, d) in c.iter().zip(&preds) {
                    for (acc, &y) in v.iter_mut().zip(&gek[d]) {
                        *acc = f.add(*acc, f.mul(*ci, y));
                    }
                }
                let ok = here.iter().all(|u| {
                    let mut front = frontier[u.sink].clone();
                    front[u.path] = v.clone();
                    let m = Mat::from_columns(f, r, &front).expect("length r");
                    rank(&m) == front.len()
                });
                if ok {
                    chosen = Some((c, v));
                    break;
                }
            }
            let Some((c, v)) = chosen else {
                return Err(CodeError::FieldTooSmall { p: q, eligible });
            };
            for u in here {
                frontier[u.sink][u.path] = v.clone();
            }
            for (ci, d) in c.into_iter().zip(&preds) {
                coeffs.insert((*d, e), ci);
            }
            gek.insert(e, v);
        }
    }

    let lek = (0..net.node_count())
        .map(|x| {
            let inputs = net.incoming(x);
            let outputs = net.outgoing(x);
            let mut k = Mat::zeros(f, inputs.len(), outputs.len());
            for (i, d) in inputs.iter().enumerate() {
                for (j, e) in outputs.iter().enumerate() {
                    if let Some(&c) = coeffs.get(&(*d, *e)) {
                        k.set(i, j, c);
                    }
                }
            }
            LocalKernel { inputs, outputs, k }
        })
        .collect();
    let code = LinearCode {
        field: f,
        rate: r,
        gek,
        lek,
    };
    debug_assert!(code.check_consistency(net).is_ok());
    Ok(code)
}

fn odometer(digits: &mut [u32], base: u32) {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return;
        }
        *d = 0;
    }
}

/// Picks `min(h_t, r)` incoming links of `t` with independent kernels,
/// greedily by lowest link id.
pub fn extract_gem(code: &LinearCode, net: &Network, t: usize) -> Result<Gem, CodeError> {
    let h = net.max_flow(t)?.value;
    extract_gem_with_rank(code, net, t, h.min(code.rate))
}

/// As [`extract_gem`] with an explicit number of columns.
pub fn extract_gem_with_rank(
    code: &LinearCode,
    net: &Network,
    t: usize,
    target: usize,
) -> Result<Gem, CodeError> {
    let f = code.field;
    let mut used = Vec::new();
    let mut acc = Mat::zeros(f, code.rate, 0);
    for e in net.incoming(t) {
        if used.len() == target {
            break;
        }
        let cand = acc.hstack(&code.kernel_matrix(&[e]))?;
        if rank(&cand) > used.len() {
            acc = cand;
            used.push(e);
        }
    }
    if used.len() < target {
        return Err(CodeError::CodeInvalidForSink(net.name(t).to_string()));
    }
    Ok(Gem {
        sink: t,
        matrix: acc,
        used_edges: used,
    })
}

/// Propagates one message through the network. The source injects `v P`
/// (or `v` when `precoder` is `None`); every link symbol is checked against
/// its global kernel.
pub fn simulate(
    net: &Network,
    code: &LinearCode,
    precoder: Option<&Mat>,
    v: &[u32],
) -> Result<SimTrace, CodeError> {
    let f = code.field;
    let r = code.rate;
    if v.len() != r {
        return Err(CodeError::Malformed(format!(
            "message of length {} for rate {r}",
            v.len()
        )));
    }
    let precoded = match precoder {
        Some(p) => p.left_apply(v)?,
        None => v.to_vec(),
    };
    let mut sym: BTreeMap<EdgeId, u32> = BTreeMap::new();
    for (i, e) in net.imaginary_links().into_iter().enumerate() {
        sym.insert(e, precoded[i]);
    }
    for &x in net.topo_order() {
        let kern = &code.lek[x];
        for (j, &e) in kern.outputs.iter().enumerate() {
            let mut s = 0u32;
            for (i, d) in kern.inputs.iter().enumerate() {
                s = f.add(s, f.mul(kern.k.get(i, j), sym[d]));
            }
            sym.insert(e, s);
        }
    }
    for (&e, &s) in &sym {
        let expect = code.gek[&e]
            .iter()
            .zip(&precoded)
            .fold(0u32, |acc, (&g, &x)| f.add(acc, f.mul(g, x)));
        if s != expect {
            return Err(CodeError::Inconsistent(e));
        }
    }
    let mut received = BTreeMap::new();
    for x in 0..net.node_count() {
        if x == net.source() {
            continue;
        }
        received.insert(
            x,
            net.incoming(x).into_iter().map(|e| (e, sym[&e])).collect(),
        );
    }
    Ok(SimTrace {
        input: v.to_vec(),
        precoded,
        edge_symbols: sym,
        received,
    })
}

/// Recovers `v` from `v P B_t` at a full-rate sink: `D_t = B_t^-1 P^-1`.
pub fn decode_full_rate(
    gem: &Gem,
    precoder: &Mat,
    received: &[u32],
) -> Result<Vec<u32>, CodeError> {
    let seen = precoder.mul(&gem.matrix)?;
    let d = invert(&seen)?;
    Ok(d.left_apply(received)?)
}
