mod common;

use std::collections::VecDeque;

use num_rational::Ratio;
use proptest::prelude::*;

use common::*;
use sublnc_core::blockcode::{lift_block, optimize_block_plan};
use sublnc_core::field::FieldSpec;
use sublnc_core::linalg::{
    br_factorize, change_basis_to_targets, invert, k_degree_br_factorize, rank, unit_vector, Mat,
    Subspace,
};
use sublnc_core::multicast::{build_multicast, decode_full_rate, extract_gem, simulate};
use sublnc_core::netgraph::{Edge, EdgeId, Network};
use sublnc_core::subrate::{build_precoder, compol, GemSet, DEFAULT_SEARCH_CAP};

fn prime() -> impl Strategy<Value = FieldSpec> {
    prop::sample::select(vec![2u32, 3, 5, 7]).prop_map(gf)
}

fn matrix(
    rows: std::ops::RangeInclusive<usize>,
    cols: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Mat> {
    (prime(), rows, cols).prop_flat_map(|(f, r, c)| {
        prop::collection::vec(0..f.modulus(), r * c).prop_map(move |xs| {
            let mut m = Mat::zeros(f, r, c);
            for (i, x) in xs.into_iter().enumerate() {
                m.set(i / c, i % c, x);
            }
            m
        })
    })
}

fn same_field_pair(n: usize) -> impl Strategy<Value = (Mat, Mat)> {
    (prime(), 1..=n, 0..=n, 0..=n).prop_flat_map(|(f, r, a, b)| {
        let g = move |c: usize| {
            prop::collection::vec(0..f.modulus(), r * c).prop_map(move |xs| {
                let mut m = Mat::zeros(f, r, c);
                for (i, x) in xs.into_iter().enumerate() {
                    m.set(i / c, i % c, x);
                }
                m
            })
        };
        (g(a), g(b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_is_transpose_invariant(m in matrix(1..=5, 1..=5)) {
        prop_assert_eq!(rank(&m), rank(&m.transpose()));
    }

    #[test]
    fn inverse_is_two_sided(m in matrix(1..=4, 1..=4).prop_filter("square", |m| m.is_square())) {
        if let Ok(inv) = invert(&m) {
            let id = Mat::identity(m.field(), m.rows());
            prop_assert_eq!(m.mul(&inv).unwrap(), id.clone());
            prop_assert_eq!(inv.mul(&m).unwrap(), id);
        } else {
            prop_assert!(rank(&m) < m.rows());
        }
    }

    #[test]
    fn br_factorization(m in matrix(2..=5, 1..=4)) {
        prop_assume!(m.rows() >= m.cols() && rank(&m) == m.cols());
        let (b, r) = br_factorize(&m).unwrap();
        prop_assert!(invert(&b).is_ok());
        prop_assert_eq!(b.mul(&r).unwrap(), m.clone());
        let lead: Vec<usize> = (0..m.cols()).collect();
        prop_assert_eq!(r, Mat::identity(m.field(), m.rows()).select_columns(&lead));
    }

    #[test]
    fn k_degree_factorization(m in matrix(2..=5, 1..=4), k in 0usize..=4) {
        prop_assume!(m.rows() >= m.cols() && k <= m.cols());
        match k_degree_br_factorize(&m, k) {
            Ok((b, r)) => {
                prop_assert!(invert(&b).is_ok());
                prop_assert_eq!(b.mul(&r).unwrap(), m.clone());
                let units = r.columns().iter().filter(|c| {
                    (0..m.rows()).any(|i| **c == unit_vector(m.rows(), i))
                }).count();
                prop_assert!(units >= k);
            }
            Err(_) => prop_assert!(rank(&m) < k),
        }
    }

    #[test]
    fn dimension_formula((a, b) in same_field_pair(5)) {
        let (x, y) = (Subspace::span(&a), Subspace::span(&b));
        let s = x.sum(&y).unwrap();
        let i = x.intersect(&y).unwrap();
        prop_assert_eq!(s.dim() + i.dim(), x.dim() + y.dim());
        prop_assert!(s.contains_subspace(&x) && s.contains_subspace(&y));
        prop_assert!(x.contains_subspace(&i) && y.contains_subspace(&i));
    }

    #[test]
    fn span_is_canonical(m in matrix(1..=5, 1..=5), seed in any::<u64>()) {
        let s = Subspace::span(&m);
        prop_assert_eq!(Subspace::span(s.basis()), s.clone());
        // reversed and rescaled generators span the same space
        let f = m.field();
        let mut gens = m.columns();
        gens.reverse();
        let c = 1 + (seed % (f.modulus() as u64 - 1)) as u32;
        let gens: Vec<Vec<u32>> = gens.into_iter().map(|v| v.into_iter().map(|x| f.mul(x, c)).collect()).collect();
        prop_assert_eq!(Subspace::span(&Mat::from_columns(f, m.rows(), &gens).unwrap()), s.clone());
        prop_assert_eq!(s.dim(), rank(&m));
    }

    #[test]
    fn change_basis_hits_targets((b, m) in same_field_pair(4)) {
        prop_assume!(b.cols() > 0 && rank(&b) == b.cols() && m.rows() >= b.cols() && m.cols() >= b.cols());
        let h = b.cols();
        let idx: Vec<usize> = (0..h).collect();
        let sq = {
            let top: Vec<Vec<u32>> = m.select_columns(&idx).to_rows().into_iter().take(h).collect();
            Mat::from_columns(b.field(), h, &transpose_rows(&top)).unwrap()
        };
        prop_assume!(invert(&sq).is_ok());
        let targets = b.mul(&sq).unwrap();
        let d = change_basis_to_targets(&b, &targets).unwrap();
        prop_assert_eq!(b.mul(&d).unwrap(), targets);
        prop_assert_eq!(d, sq);
    }
}

fn transpose_rows(rows: &[Vec<u32>]) -> Vec<Vec<u32>> {
    (0..rows.len())
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect()
}

// ---- max-flow ----

fn dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (3usize..=6).prop_flat_map(|n| {
        let edge = (0..n - 1).prop_flat_map(move |a| (Just(a), a + 1..n));
        (Just(n), prop::collection::vec(edge, 1..=8))
    })
}

fn net_of(n: usize, edges: &[(usize, usize)], rate: usize, sinks: Vec<usize>, p: u32) -> Network {
    Network::new(
        gf(p),
        rate,
        (0..n).map(|i| i.to_string()).collect(),
        edges
            .iter()
            .map(|&(tail, head)| Edge { tail, head })
            .collect(),
        0,
        sinks,
        Vec::new(),
    )
    .unwrap()
}

fn reaches(n: usize, edges: &[(usize, usize)], removed: usize, t: usize) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(x) = queue.pop_front() {
        for (i, &(a, b)) in edges.iter().enumerate() {
            if removed & (1 << i) == 0 && a == x && !seen[b] {
                seen[b] = true;
                queue.push_back(b);
            }
        }
    }
    seen[t]
}

/// Smallest edge cut separating node 0 from `t`, by enumeration.
fn min_cut(n: usize, edges: &[(usize, usize)], t: usize) -> usize {
    (0usize..1 << edges.len())
        .filter(|&s| !reaches(n, edges, s, t))
        .map(|s| s.count_ones() as usize)
        .min()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn max_flow_equals_min_cut((n, edges) in dag()) {
        let net = net_of(n, &edges, 1, vec![], 2);
        for t in 1..n {
            let flow = net.max_flow(t).unwrap();
            prop_assert_eq!(flow.value, min_cut(n, &edges, t));
            // paths are edge-disjoint walks from the source to t
            let mut used = std::collections::BTreeSet::new();
            for p in &flow.paths {
                let mut at = 0;
                for e in p {
                    prop_assert!(used.insert(*e));
                    let edge = net.edge(*e).unwrap();
                    prop_assert_eq!(edge.tail, at);
                    at = edge.head;
                }
                prop_assert_eq!(at, t);
            }
        }
    }

    #[test]
    fn max_flow_ignores_edge_order((n, edges) in dag(), shift in 0usize..8) {
        let mut rotated = edges.clone();
        rotated.rotate_left(shift % edges.len());
        let a = net_of(n, &edges, 1, vec![], 2);
        let b = net_of(n, &rotated, 1, vec![], 2);
        for t in 1..n {
            prop_assert_eq!(a.max_flow(t).unwrap().value, b.max_flow(t).unwrap().value);
        }
    }

    #[test]
    fn imaginary_paths_cap_at_rate((n, edges) in dag(), rate in 1usize..=3) {
        let net = net_of(n, &edges, rate, vec![], 2);
        for t in 1..n {
            let paths = net.paths_from_imaginary_source(t).unwrap();
            prop_assert_eq!(paths.len(), net.max_flow(t).unwrap().value.min(rate));
            for p in &paths {
                prop_assert!(p[0].is_imaginary());
                prop_assert!(p[1..].iter().all(|e| !e.is_imaginary()));
            }
        }
    }

    #[test]
    fn multicast_reaches_every_sink((n, edges) in dag(), seed in 0u64..4, v0 in 0u32..5, v1 in 0u32..5) {
        let probe = net_of(n, &edges, 2, vec![], 5);
        prop_assume!(probe.outgoing(0).len() >= 2);
        let sinks: Vec<usize> = (1..n).filter(|&t| probe.max_flow(t).unwrap().value >= 2).take(3).collect();
        prop_assume!(!sinks.is_empty());
        let net = net_of(n, &edges, 2, sinks.clone(), 5);
        let code = build_multicast(&net, &sinks, seed).unwrap();
        prop_assert!(code.check_consistency(&net).is_ok());
        let id = Mat::identity(net.field(), 2);
        let v = vec![v0, v1];
        let trace = simulate(&net, &code, None, &v).unwrap();
        for &t in &sinks {
            let gem = extract_gem(&code, &net, t).unwrap();
            prop_assert_eq!(rank(&gem.matrix), 2);
            prop_assert_eq!(decode_full_rate(&gem, &id, &gem.received(&trace)).unwrap(), v.clone());
        }
        for e in (0..edges.len()).map(EdgeId::real) {
            prop_assert_eq!(code.gek(e).unwrap().len(), 2);
        }
    }
}

// ---- sub-rate ----

fn gem_set(p: u32, r: usize) -> impl Strategy<Value = (FieldSpec, Vec<Mat>)> {
    let f = gf(p);
    let one = (1..r)
        .prop_flat_map(move |h| prop::collection::vec(0..p, r * h).prop_map(move |xs| (h, xs)));
    prop::collection::vec(one, 1..=3).prop_map(move |gs| {
        let mats = gs
            .into_iter()
            .filter_map(|(h, xs)| {
                let mut m = Mat::zeros(f, r, h);
                for (i, x) in xs.into_iter().enumerate() {
                    m.set(i / h, i % h, x);
                }
                (rank(&m) == h).then_some(m)
            })
            .collect();
        (f, mats)
    })
}

/// Size of a smallest exact spanner, enumerating every subset of lines.
fn brute_min_spanner(gems: &GemSet) -> usize {
    let f = gems.field();
    let r = gems.rate();
    let points = Subspace::full(f, r).projective_points();
    (0usize..1 << points.len())
        .filter(|s| {
            let vs: Vec<Vec<u32>> = (0..points.len())
                .filter(|i| s & (1 << i) != 0)
                .map(|i| points[i].clone())
                .collect();
            gems.is_exact_spanner(&vs)
        })
        .map(|s| s.count_ones() as usize)
        .min()
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn minimal_spanner_matches_enumeration((f, mats) in prop_oneof![gem_set(2, 3), gem_set(3, 3)]) {
        prop_assume!(!mats.is_empty());
        let gems = GemSet::new(f, 3, mats).unwrap();
        let v = gems.min_exact_spanner(DEFAULT_SEARCH_CAP).unwrap();
        prop_assert!(gems.is_exact_spanner(&v));
        prop_assert_eq!(v.len(), brute_min_spanner(&gems));
        prop_assert!(v.len() >= gems.dim_of_sum());
        // commonality polynomial of the degree histogram
        let hist = gems.degree_histogram(&v).unwrap();
        prop_assert_eq!(compol(&hist), gems.comd_set(&v).unwrap());
        prop_assert!(compol(&hist) >= gems.total_dim());
    }

    #[test]
    fn feasibility_matches_exhaustive_search((f, mats) in prop_oneof![gem_set(2, 3), gem_set(2, 4), gem_set(3, 3)]) {
        prop_assume!(!mats.is_empty());
        let r = mats[0].rows();
        let gems = GemSet::new(f, r, mats.clone()).unwrap();
        let fits = gems.comss_exhaustive().unwrap() == gems.dim_of_sum();
        prop_assert_eq!(gems.fsrd_check().is_some(), fits);
        if fits {
            let plan = build_precoder(&gems, &[]).unwrap();
            prop_assert!(plan.verify(&mats).is_ok());
        }
    }

    #[test]
    fn block_plans_are_sound((f, mats) in gem_set(2, 3)) {
        prop_assume!(!mats.is_empty());
        let gems = GemSet::new(f, 3, mats.clone()).unwrap();
        let plan = optimize_block_plan(&gems, 3, &[]).unwrap();
        prop_assert!(plan.l >= 1 && plan.l <= 3);
        prop_assert!(plan.verify(&mats).is_ok());
        for (s, b) in plan.sinks.iter().zip(&mats) {
            prop_assert!(s.rate <= Ratio::from_integer(b.cols() as u64));
            prop_assert_eq!(s.rate, Ratio::new(s.decoded_count() as u64, plan.l as u64));
        }
        if gems.fsrd_check().is_some() {
            let best = mats.iter().map(|b| b.cols() as u64).min().unwrap();
            prop_assert_eq!(plan.min_rate(), Ratio::from_integer(best));
        }
        // one decoded block
        let v: Vec<u32> = (0..3 * plan.l).map(|i| (i % 2) as u32).collect();
        let x = plan.p_hat.left_apply(&v).unwrap();
        for (t, b) in mats.iter().enumerate() {
            let got = plan.decode(t, &lift_block(b, plan.l).left_apply(&x).unwrap()).unwrap();
            prop_assert_eq!(got, pick(&v, &plan.sinks[t].decoded_indices));
        }
    }
}
