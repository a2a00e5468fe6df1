#![allow(dead_code)]

use rand::Rng;
use sublnc_core::field::FieldSpec;
use sublnc_core::linalg::{kernel, rank, Mat, Subspace};
use sublnc_core::subrate::GemSet;

pub fn gf(p: u32) -> FieldSpec {
    FieldSpec::new(p).unwrap()
}

/// A matrix given row by row.
pub fn mat(f: FieldSpec, rows: &[&[i64]]) -> Mat {
    Mat::from_rows(f, rows).unwrap()
}

/// A matrix whose columns are the given vectors.
pub fn cols(f: FieldSpec, r: usize, vs: &[&[u32]]) -> Mat {
    Mat::from_columns(f, r, vs).unwrap()
}

pub fn gemset(f: FieldSpec, r: usize, mats: Vec<Mat>) -> GemSet {
    GemSet::new(f, r, mats).unwrap()
}

/// Subspace intersection folded over `idx`, computed pairwise.
pub fn meet(f: FieldSpec, r: usize, spaces: &[Subspace], idx: &[usize]) -> Subspace {
    idx.iter().fold(Subspace::full(f, r), |acc, &i| {
        acc.intersect(&spaces[i]).unwrap()
    })
}

pub fn spans(mats: &[Mat]) -> Vec<Subspace> {
    mats.iter().map(Subspace::span).collect()
}

/// All `c`-subsets of `0..k`.
pub fn subsets(k: usize, c: usize) -> Vec<Vec<usize>> {
    (0usize..1 << k)
        .filter(|m| m.count_ones() as usize == c)
        .map(|m| (0..k).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

/// Every `c`-wise intersection has dimension `dims[c - 1]`.
pub fn check_profile(f: FieldSpec, r: usize, mats: &[Mat], dims: &[usize]) -> bool {
    let s = spans(mats);
    dims.iter().enumerate().all(|(i, &d)| {
        subsets(mats.len(), i + 1)
            .iter()
            .all(|c| meet(f, r, &s, c).dim() == d)
    })
}

pub fn random_vec<R: Rng>(rng: &mut R, f: FieldSpec, n: usize) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..f.modulus())).collect()
}

pub fn random_mat<R: Rng>(rng: &mut R, f: FieldSpec, rows: usize, cols: usize) -> Mat {
    let mut m = Mat::zeros(f, rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, rng.gen_range(0..f.modulus()));
        }
    }
    m
}

/// Random `rows x cols` matrix of full column rank.
pub fn random_full_rank<R: Rng>(rng: &mut R, f: FieldSpec, rows: usize, cols: usize) -> Mat {
    loop {
        let m = random_mat(rng, f, rows, cols);
        if rank(&m) == cols {
            return m;
        }
    }
}

/// Basis of the hyperplane `{x : n . x = 0}` as an `r x (r-1)` matrix.
pub fn hyperplane(f: FieldSpec, normal: &[u32]) -> Mat {
    let row = Mat::from_columns(f, normal.len(), &[normal])
        .unwrap()
        .transpose();
    kernel(&row)
}

/// `x B` for the row vector `x`.
pub fn times(x: &[u32], b: &Mat) -> Vec<u32> {
    b.left_apply(x).unwrap()
}

pub fn pick(v: &[u32], idx: &[usize]) -> Vec<u32> {
    idx.iter().map(|&i| v[i]).collect()
}
