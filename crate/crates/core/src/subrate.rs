//! Full sub-rate decodability: commonality measures, exact spanners, the
//! feasibility search over commonality-count vectors, and the precoder that
//! lets every sub-rate sink decode `h_t` source symbols per network use.

use std::collections::HashSet;

use thiserror::Error;

use crate::field::FieldSpec;
use crate::linalg::{
    change_basis_to_targets, complete_basis, invert, rank, unit_index, unit_vector, LinalgError,
    Mat, Subspace,
};

/// Default bound on `q^r` for the exhaustive spanner search.
pub const DEFAULT_SEARCH_CAP: u64 = 10_000;

/// Largest number of sub-rate sinks handled by the subset-lattice routines.
pub const MAX_SINKS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubrateError {
    #[error("no sub-rate GEMs supplied")]
    EmptyGemSet,
    #[error("GEM {index} is not a valid sub-rate GEM: {reason}")]
    InvalidGem { index: usize, reason: String },
    #[error("commonality degree of the zero vector is undefined")]
    ZeroVector,
    #[error("vector of length {0} does not match the rate")]
    BadVector(usize),
    #[error("search space {size} exceeds the cap {cap}")]
    SearchSpaceTooLarge { size: u64, cap: u64 },
    #[error("the GEM set is not fully sub-rate decodable")]
    NotFullyDecodable,
    #[error("construction failed: {0}")]
    ConstructionFailed(String),
    #[error("contract violated: {0}")]
    ContractViolation(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub(crate) fn mat_of(field: FieldSpec, rows: usize, vecs: &[Vec<u32>]) -> Mat {
    Mat::from_columns(field, rows, vecs).expect("vectors have the ambient length")
}

/// The GEMs of a set of sub-rate sinks, with equal spans merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GemSet {
    field: FieldSpec,
    rate: usize,
    mats: Vec<Mat>,
    spaces: Vec<Subspace>,
    members: Vec<usize>,
    originals: Vec<Mat>,
}

impl GemSet {
    pub fn new(field: FieldSpec, rate: usize, mats: Vec<Mat>) -> Result<Self, SubrateError> {
        if mats.is_empty() {
            return Err(SubrateError::EmptyGemSet);
        }
        let mut out = Self {
            field,
            rate,
            mats: Vec::new(),
            spaces: Vec::new(),
            members: Vec::new(),
            originals: mats.clone(),
        };
        for (index, m) in mats.into_iter().enumerate() {
            let bad = |reason: String| SubrateError::InvalidGem { index, reason };
            if m.field() != field {
                return Err(bad(format!(
                    "entries over {} instead of {field}",
                    m.field()
                )));
            }
            if m.rows() != rate {
                return Err(bad(format!("{} rows for rate {rate}", m.rows())));
            }
            if m.cols() == 0 || m.cols() >= rate {
                return Err(bad(format!(
                    "{} columns; a sub-rate GEM has 1..{} columns",
                    m.cols(),
                    rate
                )));
            }
            if rank(&m) != m.cols() {
                return Err(bad("columns are linearly dependent".into()));
            }
            let s = Subspace::span(&m);
            match out.spaces.iter().position(|x| *x == s) {
                Some(j) => out.members.push(j),
                None => {
                    out.members.push(out.spaces.len());
                    out.spaces.push(s);
                    out.mats.push(m);
                }
            }
        }
        if out.spaces.len() > MAX_SINKS {
            return Err(SubrateError::SearchSpaceTooLarge {
                size: out.spaces.len() as u64,
                cap: MAX_SINKS as u64,
            });
        }
        Ok(out)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn rate(&self) -> usize {
        self.rate
    }

    /// Number of distinct spans.
    pub fn k(&self) -> usize {
        self.spaces.len()
    }

    pub fn mats(&self) -> &[Mat] {
        &self.mats
    }

    pub fn spaces(&self) -> &[Subspace] {
        &self.spaces
    }

    /// The GEMs as supplied, before merging.
    pub fn originals(&self) -> &[Mat] {
        &self.originals
    }

    /// Representative of the `i`-th supplied GEM.
    pub fn representative(&self, original: usize) -> usize {
        self.members[original]
    }

    pub fn h(&self, i: usize) -> usize {
        self.spaces[i].dim()
    }

    pub fn sum_space(&self) -> Subspace {
        self.spaces
            .iter()
            .skip(1)
            .fold(self.spaces[0].clone(), |acc, s| {
                acc.sum(s).expect("same ambient")
            })
    }

    /// `sum_t dim(B_t')`.
    pub fn total_dim(&self) -> usize {
        self.spaces.iter().map(Subspace::dim).sum()
    }

    /// `dim(sum_t B_t')`.
    pub fn dim_of_sum(&self) -> usize {
        self.sum_space().dim()
    }

    /// Intersections of every non-empty subset of members, indexed by bitmask.
    /// Entry 0 is the whole space.
    pub fn intersection_lattice(&self) -> Vec<Subspace> {
        let k = self.k();
        let mut out = Vec::with_capacity(1 << k);
        out.push(Subspace::full(self.field, self.rate));
        for mask in 1usize..(1 << k) {
            let low = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            let s = if rest == 0 {
                self.spaces[low].clone()
            } else {
                out[rest]
                    .intersect(&self.spaces[low])
                    .expect("same ambient")
            };
            out.push(s);
        }
        out
    }

    /// Number of members whose span contains `v`.
    pub fn comd(&self, v: &[u32]) -> Result<usize, SubrateError> {
        if v.len() != self.rate {
            return Err(SubrateError::BadVector(v.len()));
        }
        if v.iter().all(|&x| x == 0) {
            return Err(SubrateError::ZeroVector);
        }
        Ok(self.spaces.iter().filter(|s| s.contains(v)).count())
    }

    pub fn comd_set(&self, vs: &[Vec<u32>]) -> Result<usize, SubrateError> {
        vs.iter().map(|v| self.comd(v)).sum()
    }

    /// `hist[c - 1]` counts the vectors of commonality degree `c`; degree 0
    /// vectors are not counted.
    pub fn degree_histogram(&self, vs: &[Vec<u32>]) -> Result<Vec<usize>, SubrateError> {
        let mut hist = vec![0; self.k()];
        for v in vs {
            let c = self.comd(v)?;
            if c > 0 {
                hist[c - 1] += 1;
            }
        }
        Ok(hist)
    }

    /// For each member, the rank of the vectors of `vs` lying in its span.
    pub fn spanned_counts(&self, vs: &[Vec<u32>]) -> Vec<usize> {
        self.spaces
            .iter()
            .map(|s| {
                let inside: Vec<Vec<u32>> = vs.iter().filter(|v| s.contains(v)).cloned().collect();
                rank(&mat_of(self.field, self.rate, &inside))
            })
            .collect()
    }

    /// Every member has `h_i` vectors of `vs` spanning its span. Dependent
    /// or superfluous vectors are allowed.
    pub fn is_exact_spanner(&self, vs: &[Vec<u32>]) -> bool {
        if vs.iter().any(|v| v.len() != self.rate) {
            return false;
        }
        self.spanned_counts(vs)
            .into_iter()
            .enumerate()
            .all(|(i, c)| c == self.h(i))
    }

    /// c-commonality set size: for every `c`-subset `C`, the dimension of
    /// its intersection not already covered by the `(c+1)`-subset
    /// intersections above it.
    pub fn comss_c(&self, c: usize) -> usize {
        self.comss_profile()[c - 1]
    }

    /// `comss(c)` for `c = 1..=k`, index `c - 1`.
    pub fn comss_profile(&self) -> Vec<usize> {
        let k = self.k();
        let lat = self.intersection_lattice();
        let full = (1usize << k) - 1;
        let mut out = vec![0; k];
        for mask in 1..=full {
            let above: Vec<Vec<u32>> = (0..k)
                .filter(|j| mask & (1 << j) == 0)
                .flat_map(|j| lat[mask | (1 << j)].basis().columns())
                .collect();
            let covered = rank(&mat_of(self.field, self.rate, &above));
            out[mask.count_ones() as usize - 1] += lat[mask].dim() - covered;
        }
        out
    }

    /// The alternating-sign form: for each `c`-subset `C`, the sum over
    /// `S` disjoint from `C` of `(-1)^|S| dim(I_{C+S})`. Agrees with
    /// [`GemSet::comss_c`] at `c = k` and `c = k - 1`; can go negative below.
    pub fn comss_c_inclusion_exclusion(&self, c: usize) -> i64 {
        let k = self.k();
        let lat = self.intersection_lattice();
        let full = (1usize << k) - 1;
        let mut total = 0i64;
        for mask in (1..=full).filter(|m: &usize| m.count_ones() as usize == c) {
            let rest = full & !mask;
            let mut s = rest;
            loop {
                let sign = if s.count_ones().is_multiple_of(2) {
                    1
                } else {
                    -1
                };
                total += sign * lat[mask | s].dim() as i64;
                if s == 0 {
                    break;
                }
                s = (s - 1) & rest;
            }
        }
        total
    }

    /// `dim(B_t^c) - dim(B_t^{c+1})`, where `B_t^c` sums the `c`-subset
    /// intersections containing member `t`.
    pub fn comdim(&self, t: usize, c: usize) -> usize {
        let lat = self.intersection_lattice();
        let level = |c: usize| -> usize {
            if c > self.k() {
                return 0;
            }
            let gens: Vec<Vec<u32>> = (1usize..lat.len())
                .filter(|m| m & (1 << t) != 0 && m.count_ones() as usize == c)
                .flat_map(|m| lat[m].basis().columns())
                .collect();
            rank(&mat_of(self.field, self.rate, &gens))
        };
        level(c) - level(c + 1)
    }

    /// First `i_bar` (index `c - 1`) with `compol >= sum dim` and
    /// `sum i_c <= dim(sum)`, scanning `i_k` from `comss(k)` down, then
    /// `i_{k-1}`, and so on.
    pub fn fsrd_check(&self) -> Option<Vec<usize>> {
        let profile = self.comss_profile();
        let need = self.total_dim();
        let room = self.dim_of_sum();
        let k = self.k();
        // headroom[c] = max compol reachable from levels 1..=c
        let mut headroom = vec![0usize; k + 1];
        for c in 1..=k {
            headroom[c] = headroom[c - 1] + c * profile[c - 1];
        }
        let mut i_bar = vec![0; k];
        #[allow(clippy::too_many_arguments)]
        fn go(
            c: usize,
            got: usize,
            used: usize,
            profile: &[usize],
            headroom: &[usize],
            need: usize,
            room: usize,
            i_bar: &mut Vec<usize>,
        ) -> bool {
            if c == 0 {
                return got >= need;
            }
            if got + headroom[c] < need {
                return false;
            }
            for i in (0..=profile[c - 1]).rev() {
                if used + i > room {
                    continue;
                }
                i_bar[c - 1] = i;
                if go(
                    c - 1,
                    got + c * i,
                    used + i,
                    profile,
                    headroom,
                    need,
                    room,
                    i_bar,
                ) {
                    return true;
                }
            }
            false
        }
        go(k, 0, 0, &profile, &headroom, need, room, &mut i_bar).then_some(i_bar)
    }

    /// Constructs an independent exact spanner with `i_bar[c-1]`
    /// vectors of degree `c`.
    pub fn build_spanner(&self, i_bar: &[usize]) -> Result<SpannerCertificate, SubrateError> {
        let k = self.k();
        if i_bar.len() != k {
            return Err(SubrateError::ConstructionFailed(format!(
                "count vector has length {} for {k} sinks",
                i_bar.len()
            )));
        }
        let lat = self.intersection_lattice();
        let full = (1usize << k) - 1;
        let mut v: Vec<Vec<u32>> = Vec::new();
        for c in (1..=k).rev() {
            let mut budget = i_bar[c - 1];
            let mut masks: Vec<usize> = (1..=full)
                .filter(|m: &usize| m.count_ones() as usize == c)
                .collect();
            // lexicographic order of the member index sets
            masks.sort_by_key(|m| (0..k).filter(|j| m & (1 << j) != 0).collect::<Vec<_>>());
            for mask in masks {
                if budget == 0 {
                    break;
                }
                let space = &lat[mask];
                let mut have = v.iter().filter(|x| space.contains(x)).count();
                if have >= space.dim() {
                    continue;
                }
                for p in space.projective_points() {
                    if budget == 0 || have == space.dim() {
                        break;
                    }
                    if self.comd(&p)? != c {
                        continue;
                    }
                    let mut cand = v.clone();
                    cand.push(p);
                    if rank(&mat_of(self.field, self.rate, &cand)) == cand.len() {
                        v = cand;
                        have += 1;
                        budget -= 1;
                    }
                }
            }
            if budget != 0 {
                return Err(SubrateError::ConstructionFailed(format!(
                    "only {} of {} vectors of degree {c} found",
                    i_bar[c - 1] - budget,
                    i_bar[c - 1]
                )));
            }
        }
        if !self.is_exact_spanner(&v) {
            return Err(SubrateError::ConstructionFailed(
                "collected vectors are not an exact spanner".into(),
            ));
        }
        Ok(SpannerCertificate {
            i_bar: i_bar.to_vec(),
            spanner: v,
            comss_values: self.comss_profile(),
        })
    }

    /// Size of a smallest exact spanner.
    pub fn comss_exhaustive(&self) -> Result<usize, SubrateError> {
        Ok(self.min_exact_spanner(DEFAULT_SEARCH_CAP)?.len())
    }

    /// A smallest exact spanner drawn from the union of the member spans,
    /// one normalized vector per line. Deterministic.
    pub fn min_exact_spanner(&self, cap: u64) -> Result<Vec<Vec<u32>>, SubrateError> {
        let size = (self.field.modulus() as u64)
            .checked_pow(self.rate as u32)
            .unwrap_or(u64::MAX);
        if size > cap {
            return Err(SubrateError::SearchSpaceTooLarge { size, cap });
        }
        let mut points: Vec<Vec<u32>> = self
            .spaces
            .iter()
            .flat_map(Subspace::projective_points)
            .collect();
        points.sort();
        points.dedup();
        let member: Vec<Vec<usize>> = self
            .spaces
            .iter()
            .map(|s| {
                (0..points.len())
                    .filter(|&i| s.contains(&points[i]))
                    .collect()
            })
            .collect();
        let search = SpannerSearch {
            gems: self,
            points: &points,
            member: &member,
            dim_sum: self.dim_of_sum(),
        };
        let upper: usize = self.total_dim();
        for depth in self.dim_of_sum()..=upper {
            let mut chosen = Vec::new();
            let mut seen = HashSet::new();
            if search.dfs(&mut chosen, depth, &mut seen) {
                return Ok(chosen.into_iter().map(|i| points[i].clone()).collect());
            }
        }
        Err(SubrateError::ConstructionFailed(
            "no exact spanner within the union of bases".into(),
        ))
    }
}

struct SpannerSearch<'a> {
    gems: &'a GemSet,
    points: &'a [Vec<u32>],
    member: &'a [Vec<usize>],
    dim_sum: usize,
}

impl SpannerSearch<'_> {
    fn rank_of(&self, idx: impl Iterator<Item = usize>) -> usize {
        let vs: Vec<Vec<u32>> = idx.map(|i| self.points[i].clone()).collect();
        rank(&mat_of(self.gems.field, self.gems.rate, &vs))
    }

    fn dfs(&self, chosen: &mut Vec<usize>, depth: usize, seen: &mut HashSet<Vec<usize>>) -> bool {
        let mut key = chosen.clone();
        key.sort_unstable();
        if !seen.insert(key) {
            return false;
        }
        let k = self.gems.k();
        let mut deficits = Vec::with_capacity(k);
        for i in 0..k {
            let inside = chosen
                .iter()
                .copied()
                .filter(|p| self.member[i].binary_search(p).is_ok());
            deficits.push(self.gems.h(i) - self.rank_of(inside));
        }
        let total: usize = deficits.iter().sum();
        if total == 0 {
            return true;
        }
        let left = depth - chosen.len();
        let bound = [
            *deficits.iter().max().unwrap(),
            self.dim_sum
                .saturating_sub(self.rank_of(chosen.iter().copied())),
            total.div_ceil(k),
        ]
        .into_iter()
        .max()
        .unwrap();
        if bound > left {
            return false;
        }
        // branch on the unsatisfied member with the fewest useful candidates
        let mut best: Option<Vec<usize>> = None;
        for i in (0..k).filter(|&i| deficits[i] > 0) {
            let basis: Vec<Vec<u32>> = chosen
                .iter()
                .filter(|p| self.member[i].binary_search(p).is_ok())
                .map(|&p| self.points[p].clone())
                .collect();
            let span = Subspace::span_of(self.gems.field, self.gems.rate, &basis);
            let cands: Vec<usize> = self.member[i]
                .iter()
                .copied()
                .filter(|&p| !span.contains(&self.points[p]))
                .collect();
            if best.as_ref().is_none_or(|b| cands.len() < b.len()) {
                best = Some(cands);
            }
        }
        for p in best.unwrap_or_default() {
            chosen.push(p);
            if self.dfs(chosen, depth, seen) {
                return true;
            }
            chosen.pop();
        }
        false
    }
}

/// `sum_c c * i_bar[c - 1]`.
pub fn compol(i_bar: &[usize]) -> usize {
    i_bar.iter().enumerate().map(|(i, &x)| (i + 1) * x).sum()
}

/// An exact spanner with its degree counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpannerCertificate {
    pub i_bar: Vec<usize>,
    pub spanner: Vec<Vec<u32>>,
    pub comss_values: Vec<usize>,
}

/// Decoder of one sub-rate sink: `P B_t D_t = R_t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SinkPlan {
    pub d: Mat,
    pub r: Mat,
    /// Source symbol indices recovered, in decoder output order.
    pub decoded_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubRatePlan {
    pub field: FieldSpec,
    pub rate: usize,
    pub p: Mat,
    pub spanner: Vec<Vec<u32>>,
    pub i_bar: Option<Vec<usize>>,
    /// One entry per supplied GEM, in input order.
    pub sinks: Vec<SinkPlan>,
}

impl SubRatePlan {
    /// Applies `D_t` to what sink `t` received and returns the decoded
    /// symbols, aligned with `decoded_indices`.
    pub fn decode(&self, sink: usize, received: &[u32]) -> Result<Vec<u32>, SubrateError> {
        Ok(self.sinks[sink].d.left_apply(received)?)
    }

    /// Re-checks `P B_t D_t = R_t` for every supplied GEM.
    pub fn verify(&self, gems: &[Mat]) -> Result<(), SubrateError> {
        invert(&self.p).map_err(|_| SubrateError::ContractViolation("P is singular".into()))?;
        for (t, (b, s)) in gems.iter().zip(&self.sinks).enumerate() {
            if self.p.mul(b)?.mul(&s.d)? != s.r {
                return Err(SubrateError::ContractViolation(format!(
                    "P B D != R for sink {t}"
                )));
            }
        }
        Ok(())
    }
}

/// Runs the feasibility search, builds a spanner (falling back to the
/// exhaustive search) and derives the precoder and decoders. Every
/// `full_rate` GEM is checked to stay invertible under `P`.
pub fn build_precoder(gems: &GemSet, full_rate: &[Mat]) -> Result<SubRatePlan, SubrateError> {
    let i_bar = gems.fsrd_check().ok_or(SubrateError::NotFullyDecodable)?;
    let independent = |v: &[Vec<u32>]| rank(&mat_of(gems.field, gems.rate, v)) == v.len();
    let spanner = match gems.build_spanner(&i_bar) {
        Ok(cert) if independent(&cert.spanner) => cert.spanner,
        _ => {
            let v = gems.min_exact_spanner(DEFAULT_SEARCH_CAP)?;
            if !independent(&v) {
                return Err(SubrateError::ConstructionFailed(
                    "minimal exact spanner is dependent".into(),
                ));
            }
            v
        }
    };
    let mut plan = build_precoder_with_spanner(gems, &spanner, full_rate)?;
    plan.i_bar = Some(i_bar);
    Ok(plan)
}

/// Precoder from a given independent exact spanner, taken in the given
/// order: `P` is the inverse of `(V | padding)`.
pub fn build_precoder_with_spanner(
    gems: &GemSet,
    spanner: &[Vec<u32>],
    full_rate: &[Mat],
) -> Result<SubRatePlan, SubrateError> {
    let f = gems.field;
    let r = gems.rate;
    if spanner.iter().any(|v| v.len() != r) {
        return Err(SubrateError::ConstructionFailed(
            "spanner vector of wrong length".into(),
        ));
    }
    let vmat = mat_of(f, r, spanner);
    if rank(&vmat) != spanner.len() {
        return Err(SubrateError::ConstructionFailed(
            "spanner is linearly dependent".into(),
        ));
    }
    if !gems.is_exact_spanner(spanner) {
        return Err(SubrateError::ConstructionFailed(
            "not an exact spanner".into(),
        ));
    }
    let pad = complete_basis(&Subspace::span(&vmat));
    let bbar = vmat.hstack(&pad)?;
    let p = invert(&bbar)?;
    let mut sinks = Vec::with_capacity(gems.originals.len());
    for (t, b) in gems.originals.iter().enumerate() {
        let space = &gems.spaces[gems.members[t]];
        let (idx, targets): (Vec<usize>, Vec<Vec<u32>>) = spanner
            .iter()
            .enumerate()
            .filter(|(_, v)| space.contains(v))
            .map(|(i, v)| (i, v.clone()))
            .unzip();
        let d = change_basis_to_targets(b, &mat_of(f, r, &targets))?;
        let rsel = mat_of(
            f,
            r,
            &idx.iter().map(|&i| unit_vector(r, i)).collect::<Vec<_>>(),
        );
        if p.mul(b)?.mul(&d)? != rsel {
            return Err(SubrateError::ContractViolation(format!(
                "P B D != R for sink {t}"
            )));
        }
        let decoded_indices = rsel
            .columns()
            .iter()
            .map(|c| unit_index(c).expect("selection"))
            .collect();
        sinks.push(SinkPlan {
            d,
            r: rsel,
            decoded_indices,
        });
    }
    for (i, b) in full_rate.iter().enumerate() {
        if !b.is_square() || b.rows() != r || invert(&p.mul(b)?).is_err() {
            return Err(SubrateError::ContractViolation(format!(
                "full-rate GEM {i} is not invertible under P"
            )));
        }
    }
    Ok(SubRatePlan {
        field: f,
        rate: r,
        p,
        spanner: spanner.to_vec(),
        i_bar: None,
        sinks,
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn gemset(p: u32, r: usize, mats: &[&[&[i64]]]) -> GemSet {
        let f = FieldSpec::new(p).unwrap();
        let mats = mats.iter().map(|m| Mat::from_rows(f, m).unwrap()).collect();
        GemSet::new(f, r, mats).unwrap()
    }

    /// Three planes in GF(3)^3 meeting pairwise in distinct lines.
    pub fn three_planes() -> GemSet {
        gemset(
            3,
            3,
            &[
                &[&[1, 0], &[1, 0], &[0, 1]],
                &[&[1, 0], &[0, 1], &[0, 1]],
                &[&[1, 1], &[1, 0], &[0, 1]],
            ],
        )
    }

    /// Three planes in GF(3)^3 sharing one line.
    pub fn common_line() -> GemSet {
        gemset(
            3,
            3,
            &[
                &[&[1, 0], &[0, 0], &[0, 1]],
                &[&[0, 0], &[1, 0], &[0, 1]],
                &[&[1, 0], &[1, 0], &[0, 1]],
            ],
        )
    }

    /// Four planes in GF(3)^3, pairwise meeting in lines, no common line in
    /// any three.
    pub fn four_planes() -> GemSet {
        gemset(
            3,
            3,
            &[
                &[&[0, 0], &[1, 0], &[0, 1]],
                &[&[1, 0], &[0, 0], &[0, 1]],
                &[&[1, 0], &[0, 1], &[0, 0]],
                &[&[1, 1], &[2, 0], &[0, 2]],
            ],
        )
    }
}
