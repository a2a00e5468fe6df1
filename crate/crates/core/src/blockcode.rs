//! Partial sub-rate decoding over `l` consecutive network uses.
//!
//! A design picks `l` independent subsets of an exact spanner, completes each
//! to a basis, and stacks the bases block-diagonally. Inverting that stack
//! gives the block precoder; every sink decodes the spanner vectors that fall
//! in its span, block by block.

use num_rational::Ratio;
use thiserror::Error;

use crate::field::FieldSpec;
use crate::linalg::{complete_basis, invert, rank, solve, LinalgError, Mat, Subspace};
use crate::subrate::{build_precoder, mat_of, GemSet, SubrateError, DEFAULT_SEARCH_CAP};

/// Default bound on enumerated spanner subsets.
pub const DEFAULT_SUBSET_CAP: usize = 10_000;

/// Default bound on designs scored by the optimizer.
pub const DEFAULT_DESIGN_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlockError {
    #[error("infeasible block design: {0}")]
    InfeasibleDesign(String),
    #[error("{count} spanner subsets exceed the cap {cap}")]
    TooManySubsets { count: usize, cap: usize },
    #[error("contract violated: {0}")]
    ContractViolation(String),
    #[error(transparent)]
    Subrate(#[from] SubrateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `l` copies of `b` on the diagonal.
pub fn lift_block(b: &Mat, l: usize) -> Mat {
    Mat::block_diag(b.field(), &vec![b.clone(); l])
}

/// For each member of `gems`, the number of independent vectors of `vs`
/// inside its span.
pub fn is_partial_exact_spanner(vs: &[Vec<u32>], gems: &GemSet) -> Vec<usize> {
    gems.spanned_counts(vs)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDesign {
    pub spanner: Vec<Vec<u32>>,
    /// Indices into `spanner`, one independent subset per block.
    pub blocks: Vec<Vec<usize>>,
    /// Block `i`'s subset followed by its basis completion.
    pub completions: Vec<Mat>,
}

impl BlockDesign {
    pub fn new(
        field: FieldSpec,
        rate: usize,
        spanner: Vec<Vec<u32>>,
        blocks: Vec<Vec<usize>>,
    ) -> Result<Self, BlockError> {
        if blocks.is_empty() {
            return Err(BlockError::InfeasibleDesign("no blocks".into()));
        }
        if spanner.iter().any(|v| v.len() != rate) {
            return Err(BlockError::InfeasibleDesign(
                "spanner vector of wrong length".into(),
            ));
        }
        let mut completions = Vec::with_capacity(blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            if b.iter().any(|&j| j >= spanner.len()) {
                return Err(BlockError::InfeasibleDesign(format!(
                    "block {i} indexes past the spanner"
                )));
            }
            let vs: Vec<Vec<u32>> = b.iter().map(|&j| spanner[j].clone()).collect();
            let m = mat_of(field, rate, &vs);
            if rank(&m) != vs.len() {
                return Err(BlockError::InfeasibleDesign(format!(
                    "block {i} is linearly dependent"
                )));
            }
            completions.push(m.hstack(&complete_basis(&Subspace::span(&m)))?);
        }
        Ok(Self {
            spanner,
            blocks,
            completions,
        })
    }

    pub fn l(&self) -> usize {
        self.blocks.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSinkPlan {
    pub d_hat: Mat,
    pub r_hat: Mat,
    /// Block-message coordinates recovered, in decoder output order.
    pub decoded_indices: Vec<usize>,
    pub rate: Ratio<u64>,
}

impl BlockSinkPlan {
    pub fn decoded_count(&self) -> usize {
        self.decoded_indices.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPlan {
    pub field: FieldSpec,
    pub rate: usize,
    pub l: usize,
    pub p_hat: Mat,
    pub design: BlockDesign,
    /// One entry per supplied GEM, in input order.
    pub sinks: Vec<BlockSinkPlan>,
}

impl BlockPlan {
    pub fn min_rate(&self) -> Ratio<u64> {
        self.sinks
            .iter()
            .map(|s| s.rate)
            .min()
            .expect("at least one sink")
    }

    /// Decodes the `l * h_t` symbols sink `t` collected over one block,
    /// returning the recovered coordinates aligned with `decoded_indices`.
    pub fn decode(&self, sink: usize, received: &[u32]) -> Result<Vec<u32>, BlockError> {
        let s = &self.sinks[sink];
        let out = s.d_hat.left_apply(received)?;
        let cols = s.r_hat.columns();
        Ok(out
            .into_iter()
            .zip(cols)
            .filter(|(_, c)| c.iter().any(|&x| x != 0))
            .map(|(x, _)| x)
            .collect())
    }

    /// Re-checks `P B D = R` for every supplied GEM, lifted.
    pub fn verify(&self, gems: &[Mat]) -> Result<(), BlockError> {
        invert(&self.p_hat)
            .map_err(|_| BlockError::ContractViolation("block precoder is singular".into()))?;
        for (t, (b, s)) in gems.iter().zip(&self.sinks).enumerate() {
            if self.p_hat.mul(&lift_block(b, self.l))?.mul(&s.d_hat)? != s.r_hat {
                return Err(BlockError::ContractViolation(format!(
                    "P B D != R for sink {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-block decoder assembly. Within block `i`, every completion column
/// lying in `B_t'` is exposed by `D` and selected by `R`.
pub fn build_block_plan(
    gems: &GemSet,
    design: &BlockDesign,
    full_rate: &[Mat],
) -> Result<BlockPlan, BlockError> {
    let f = gems.field();
    let r = gems.rate();
    let l = design.l();
    let p_hat = invert(&Mat::block_diag(f, &design.completions))?;
    let mut sinks = Vec::with_capacity(gems.originals().len());
    for (t, b) in gems.originals().iter().enumerate() {
        let h = b.cols();
        let space = &gems.spaces()[gems.representative(t)];
        let mut d_hat = Mat::zeros(f, l * h, l * h);
        let mut r_hat = Mat::zeros(f, l * r, l * h);
        let mut decoded = Vec::new();
        for (i, comp) in design.completions.iter().enumerate() {
            let mut slot = 0;
            for (pos, col) in comp.columns().into_iter().enumerate() {
                if !space.contains(&col) {
                    continue;
                }
                if slot == h {
                    return Err(BlockError::ContractViolation(format!(
                        "block {i} has more than h_t independent vectors in sink {t}'s span"
                    )));
                }
                let x = solve(b, &mat_of(f, r, &[col]))?;
                for row in 0..h {
                    d_hat.set(i * h + row, i * h + slot, x.get(row, 0));
                }
                r_hat.set(i * r + pos, i * h + slot, 1);
                decoded.push(i * r + pos);
                slot += 1;
            }
        }
        let lifted = lift_block(b, l);
        if p_hat.mul(&lifted)?.mul(&d_hat)? != r_hat {
            return Err(BlockError::ContractViolation(format!(
                "P B D != R for sink {t}"
            )));
        }
        let rate = Ratio::new(decoded.len() as u64, l as u64);
        if rate > Ratio::from_integer(h as u64) {
            return Err(BlockError::ContractViolation(format!(
                "sink {t} rate exceeds its max-flow"
            )));
        }
        sinks.push(BlockSinkPlan {
            d_hat,
            r_hat,
            decoded_indices: decoded,
            rate,
        });
    }
    for (i, b) in full_rate.iter().enumerate() {
        if !b.is_square() || b.rows() != r || invert(&p_hat.mul(&lift_block(b, l))?).is_err() {
            return Err(BlockError::ContractViolation(format!(
                "full-rate GEM {i} is not invertible under the block precoder"
            )));
        }
    }
    Ok(BlockPlan {
        field: f,
        rate: r,
        l,
        p_hat,
        design: design.clone(),
        sinks,
    })
}

/// A smallest exact spanner when the search is tractable, otherwise the
/// union of the member bases.
fn working_spanner(gems: &GemSet) -> Vec<Vec<u32>> {
    match gems.min_exact_spanner(DEFAULT_SEARCH_CAP) {
        Ok(v) => v,
        Err(_) => {
            let mut v: Vec<Vec<u32>> = Vec::new();
            for s in gems.spaces() {
                for c in s.basis().columns() {
                    if !v.contains(&c) {
                        v.push(c);
                    }
                }
            }
            v
        }
    }
}

/// All independent subsets of `vs` of size `rank(vs)`, in lexicographic
/// index order.
fn independent_bases(
    field: FieldSpec,
    rate: usize,
    vs: &[Vec<u32>],
    cap: usize,
) -> Result<Vec<Vec<usize>>, BlockError> {
    let d = rank(&mat_of(field, rate, vs));
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(d);
    #[allow(clippy::too_many_arguments)]
    fn go(
        start: usize,
        d: usize,
        field: FieldSpec,
        rate: usize,
        vs: &[Vec<u32>],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<(), BlockError> {
        if cur.len() == d {
            if out.len() == cap {
                return Err(BlockError::TooManySubsets {
                    count: cap + 1,
                    cap,
                });
            }
            out.push(cur.clone());
            return Ok(());
        }
        for j in start..vs.len() {
            cur.push(j);
            let sel: Vec<Vec<u32>> = cur.iter().map(|&i| vs[i].clone()).collect();
            if rank(&mat_of(field, rate, &sel)) == cur.len() {
                go(j + 1, d, field, rate, vs, cur, out, cap)?;
            }
            cur.pop();
        }
        Ok(())
    }
    go(0, d, field, rate, vs, &mut cur, &mut out, cap)?;
    Ok(out)
}

/// The positive-rate construction: one block per independent
/// `rank(V)`-subset of an exact spanner `V`.
pub fn build_partial_general(
    gems: &GemSet,
    full_rate: &[Mat],
    cap: usize,
) -> Result<BlockPlan, BlockError> {
    let f = gems.field();
    let r = gems.rate();
    let v = working_spanner(gems);
    let blocks = independent_bases(f, r, &v, cap)?;
    let design = BlockDesign::new(f, r, v, blocks)?;
    build_block_plan(gems, &design, full_rate)
}

/// Best block plan with at most `l_max` blocks, maximizing the minimum
/// sink rate, then preferring fewer blocks, then the lexicographically
/// first design. A fully decodable set yields its single-use plan.
pub fn optimize_block_plan(
    gems: &GemSet,
    l_max: usize,
    full_rate: &[Mat],
) -> Result<BlockPlan, BlockError> {
    optimize_block_plan_with_budget(gems, l_max, full_rate, DEFAULT_DESIGN_BUDGET)
}

pub fn optimize_block_plan_with_budget(
    gems: &GemSet,
    l_max: usize,
    full_rate: &[Mat],
    budget: usize,
) -> Result<BlockPlan, BlockError> {
    let f = gems.field();
    let r = gems.rate();
    if l_max == 0 {
        return Err(BlockError::InfeasibleDesign(
            "block length bound is 0".into(),
        ));
    }
    if let Ok(plan) = build_precoder(gems, full_rate) {
        let blocks = vec![(0..plan.spanner.len()).collect()];
        let design = BlockDesign::new(f, r, plan.spanner, blocks)?;
        return build_block_plan(gems, &design, full_rate);
    }
    let v = working_spanner(gems);
    let subsets = independent_bases(f, r, &v, DEFAULT_SUBSET_CAP)?;
    let k = gems.k();
    // contribution of each candidate block to each distinct member
    let mut cands: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for s in subsets {
        let design = BlockDesign::new(f, r, v.clone(), vec![s.clone()])?;
        let cols = design.completions[0].columns();
        let contrib: Vec<usize> = gems
            .spaces()
            .iter()
            .map(|sp| cols.iter().filter(|c| sp.contains(c)).count())
            .collect();
        cands.push((s, contrib));
    }
    // drop candidates dominated by an earlier or strictly better one
    let dominated = |a: &[usize], b: &[usize]| a.iter().zip(b).all(|(x, y)| x <= y);
    let mut kept: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for (i, (s, c)) in cands.iter().enumerate() {
        let beaten = cands
            .iter()
            .enumerate()
            .any(|(j, (_, o))| j != i && dominated(c, o) && (o != c || j < i));
        if !beaten {
            kept.push((s.clone(), c.clone()));
        }
    }
    let mut best: Option<(Ratio<u64>, Vec<usize>)> = None;
    let mut evaluated = 0usize;
    'outer: for l in 1..=l_max {
        let mut idx = vec![0usize; l];
        loop {
            evaluated += 1;
            if evaluated > budget {
                break 'outer;
            }
            let mut totals = vec![0usize; k];
            for &i in &idx {
                for (t, x) in kept[i].1.iter().enumerate() {
                    totals[t] += x;
                }
            }
            let rate = Ratio::new(*totals.iter().min().unwrap() as u64, l as u64);
            if best.as_ref().is_none_or(|(b, _)| rate > *b) {
                best = Some((rate, idx.clone()));
            }
            // next non-decreasing index sequence
            let mut pos = l;
            while pos > 0 && idx[pos - 1] == kept.len() - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            let x = idx[pos - 1];
            for y in idx.iter_mut().skip(pos) {
                *y = x;
            }
        }
    }
    let (_, choice) =
        best.ok_or_else(|| BlockError::InfeasibleDesign("no candidate blocks".into()))?;
    let blocks = choice.into_iter().map(|i| kept[i].0.clone()).collect();
    let design = BlockDesign::new(f, r, v, blocks)?;
    build_block_plan(gems, &design, full_rate)
}

/// Embeds `v` as block `i` of an `l * r` vector.
pub fn embed(v: &[u32], i: usize, l: usize) -> Vec<u32> {
    let r = v.len();
    let mut out = vec![0; l * r];
    out[i * r..(i + 1) * r].copy_from_slice(v);
    out
}
