//! Exact matrix and subspace algebra over GF(p).
//!
//! Matrices are dense and row-major. Subspaces are kept in reduced column
//! echelon form so that two spans compare equal iff their bases are equal.

use std::fmt;

use thiserror::Error;

use crate::field::FieldSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrices over GF({0}) and GF({1}) cannot be combined")]
    FieldMismatch(u32, u32),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("columns are linearly dependent")]
    DependentColumns,
    #[error("target vector lies outside the column span")]
    NotInSpan,
    #[error("no {k}-degree BR-factorization: rank {rank} < {k}")]
    InfeasibleDegree { k: usize, rank: usize },
}

/// A dense matrix over a prime field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat[{}; {}x{}](", self.field, self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, " / ")?;
            }
            let row: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            write!(f, "{}", row.join(" "))?;
        }
        write!(f, ")")
    }
}

impl Mat {
    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        Self {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from integer rows; entries are reduced mod p.
    pub fn from_rows<R: AsRef<[i64]>>(field: FieldSpec, rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend(r.iter().map(|&x| field.reduce(x)));
        }
        Ok(Self {
            field,
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds a `rows x columns.len()` matrix from column vectors.
    pub fn from_columns<C: AsRef<[u32]>>(
        field: FieldSpec,
        rows: usize,
        columns: &[C],
    ) -> Result<Self, LinalgError> {
        let mut m = Self::zeros(field, rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(LinalgError::DimensionMismatch(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            for (i, &x) in c.iter().enumerate() {
                m.data[i * m.cols + j] = x % field.modulus();
            }
        }
        Ok(m)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.cols + j] = v % self.field.modulus();
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u32> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<u32>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    /// Rows as plain integers, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    fn check_field(&self, other: &Mat) -> Result<(), LinalgError> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch(
                self.field.modulus(),
                other.field.modulus(),
            ));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat, LinalgError> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = self.field;
        let p = f.modulus() as u64;
        let mut out = Mat::zeros(f, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u64;
                for k in 0..self.cols {
                    acc = (acc + self.get(i, k) as u64 * other.get(k, j) as u64) % p;
                }
                out.data[i * other.cols + j] = acc as u32;
            }
        }
        Ok(out)
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, v: &[u32]) -> Result<Vec<u32>, LinalgError> {
        if v.len() != self.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "vector of length {} against {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let p = self.field.modulus() as u64;
        Ok((0..self.cols)
            .map(|j| {
                let mut acc = 0u64;
                for (i, &x) in v.iter().enumerate() {
                    acc = (acc + x as u64 * self.get(i, j) as u64) % p;
                }
                acc as u32
            })
            .collect())
    }

    /// Matrix times column vector.
    pub fn apply(&self, v: &[u32]) -> Result<Vec<u32>, LinalgError> {
        self.transpose().left_apply(v)
    }

    /// Horizontal concatenation `(self | other)`.
    pub fn hstack(&self, other: &Mat) -> Result<Mat, LinalgError> {
        self.check_field(other)?;
        if self.rows != other.rows {
            return Err(LinalgError::DimensionMismatch(format!(
                "cannot stack {} rows beside {} rows",
                self.rows, other.rows
            )));
        }
        let mut out = Mat::zeros(self.field, self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[i * out.cols + j] = self.get(i, j);
            }
            for j in 0..other.cols {
                out.data[i * out.cols + self.cols + j] = other.get(i, j);
            }
        }
        Ok(out)
    }

    pub fn select_columns(&self, idx: &[usize]) -> Mat {
        let cols: Vec<Vec<u32>> = idx.iter().map(|&j| self.column(j)).collect();
        Mat::from_columns(self.field, self.rows, &cols).expect("columns share the row count")
    }

    /// Block-diagonal matrix of the given blocks.
    pub fn block_diag(field: FieldSpec, blocks: &[Mat]) -> Mat {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Mat::zeros(field, rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out.data[(r0 + i) * cols + c0 + j] = b.get(i, j);
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    /// True when every column is a distinct column of the identity.
    pub fn is_selection(&self) -> bool {
        let mut seen = vec![false; self.rows];
        for j in 0..self.cols {
            match unit_index(&self.column(j)) {
                Some(i) if !seen[i] => seen[i] = true,
                _ => return false,
            }
        }
        true
    }
}

/// Position of the single 1 in a standard basis vector.
pub fn unit_index(v: &[u32]) -> Option<usize> {
    let mut found = None;
    for (i, &x) in v.iter().enumerate() {
        match x {
            0 => {}
            1 if found.is_none() => found = Some(i),
            _ => return None,
        }
    }
    found
}

pub fn unit_vector(n: usize, i: usize) -> Vec<u32> {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

/// Scales `v` so that its first nonzero coordinate is 1. Zero stays zero.
pub fn normalize(field: FieldSpec, v: &[u32]) -> Vec<u32> {
    match v.iter().find(|&&x| x != 0) {
        None => v.to_vec(),
        Some(&lead) => {
            let inv = field.inv(lead).expect("lead is nonzero");
            v.iter().map(|&x| field.mul(x, inv)).collect()
        }
    }
}

/// In-place reduced row echelon form; returns the pivot columns.
fn rref_in_place(m: &mut Mat) -> Vec<usize> {
    let f = m.field;
    let (rows, cols) = (m.rows, m.cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(piv) = (r..rows).find(|&i| m.get(i, c) != 0) else {
            continue;
        };
        if piv != r {
            for j in 0..cols {
                m.data.swap(piv * cols + j, r * cols + j);
            }
        }
        let inv = f.inv(m.get(r, c)).expect("pivot is nonzero");
        for j in 0..cols {
            m.data[r * cols + j] = f.mul(m.data[r * cols + j], inv);
        }
        for i in 0..rows {
            if i != r {
                let factor = m.get(i, c);
                if factor != 0 {
                    for j in 0..cols {
                        let sub = f.mul(factor, m.data[r * cols + j]);
                        m.data[i * cols + j] = f.sub(m.data[i * cols + j], sub);
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rref(m: &Mat) -> (Mat, Vec<usize>) {
    let mut out = m.clone();
    let piv = rref_in_place(&mut out);
    (out, piv)
}

pub fn rank(m: &Mat) -> usize {
    rref(m).1.len()
}

pub fn invert(m: &Mat) -> Result<Mat, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare(m.rows, m.cols));
    }
    let n = m.rows;
    let aug = m.hstack(&Mat::identity(m.field, n))?;
    let (red, piv) = rref(&aug);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return Err(LinalgError::Singular);
    }
    let cols: Vec<usize> = (n..2 * n).collect();
    Ok(red.select_columns(&cols))
}

/// Solves `A X = B` for `X`. `A` must have full column rank, so the solution
/// is unique; any column of `B` outside `span(A)` is an error.
pub fn solve(a: &Mat, b: &Mat) -> Result<Mat, LinalgError> {
    if a.rows != b.rows {
        return Err(LinalgError::DimensionMismatch(format!(
            "A has {} rows, B has {}",
            a.rows, b.rows
        )));
    }
    let n = a.cols;
    let aug = a.hstack(b)?;
    let (red, piv) = rref(&aug);
    if piv.iter().filter(|&&c| c < n).count() < n {
        return Err(LinalgError::DependentColumns);
    }
    if piv.iter().any(|&c| c >= n) {
        return Err(LinalgError::NotInSpan);
    }
    let mut x = Mat::zeros(a.field, n, b.cols);
    for i in 0..n {
        for j in 0..b.cols {
            x.data[i * b.cols + j] = red.get(i, n + j);
        }
    }
    Ok(x)
}

/// Basis of the right kernel `{x : A x = 0}`, one vector per column.
pub fn kernel(a: &Mat) -> Mat {
    let (red, piv) = rref(a);
    let n = a.cols;
    let free: Vec<usize> = (0..n).filter(|c| !piv.contains(c)).collect();
    let f = a.field;
    let mut k = Mat::zeros(f, n, free.len());
    for (j, &fc) in free.iter().enumerate() {
        k.set(fc, j, 1);
        for (r, &pc) in piv.iter().enumerate() {
            k.set(pc, j, f.neg(red.get(r, fc)));
        }
    }
    k
}

/// A subspace of `GF(p)^n`, stored as a canonical basis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Mat,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Subspace(dim {} in {}: {:?})",
            self.dim(),
            self.ambient_dim,
            self.basis
        )
    }
}

impl Subspace {
    /// Column span of `generators`.
    pub fn span(generators: &Mat) -> Subspace {
        let (red, piv) = rref(&generators.transpose());
        let rows: Vec<Vec<u32>> = (0..piv.len()).map(|i| red.row(i).to_vec()).collect();
        let basis = Mat::from_columns(generators.field, generators.rows, &rows)
            .expect("rows of the transpose have ambient length");
        Subspace {
            ambient_dim: generators.rows,
            basis,
        }
    }

    pub fn span_of<C: AsRef<[u32]>>(
        field: FieldSpec,
        ambient_dim: usize,
        vectors: &[C],
    ) -> Subspace {
        let m =
            Mat::from_columns(field, ambient_dim, vectors).expect("vectors have ambient length");
        Subspace::span(&m)
    }

    pub fn zero(field: FieldSpec, ambient_dim: usize) -> Subspace {
        Subspace {
            ambient_dim,
            basis: Mat::zeros(field, ambient_dim, 0),
        }
    }

    pub fn full(field: FieldSpec, ambient_dim: usize) -> Subspace {
        Subspace {
            ambient_dim,
            basis: Mat::identity(field, ambient_dim),
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.basis.field
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.cols
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    fn check_compatible(&self, other: &Subspace) -> Result<(), LinalgError> {
        self.basis.check_field(&other.basis)?;
        if self.ambient_dim != other.ambient_dim {
            return Err(LinalgError::DimensionMismatch(format!(
                "ambient dimensions {} and {}",
                self.ambient_dim, other.ambient_dim
            )));
        }
        Ok(())
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check_compatible(other)?;
        Ok(Subspace::span(&self.basis.hstack(&other.basis)?))
    }

    /// Intersection through the kernel of `(U | -W)`.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace, LinalgError> {
        self.check_compatible(other)?;
        let f = self.field();
        if self.dim() == 0 || other.dim() == 0 {
            return Ok(Subspace::zero(f, self.ambient_dim));
        }
        let mut neg_w = other.basis.clone();
        for x in neg_w.data.iter_mut() {
            *x = f.neg(*x);
        }
        let ker = kernel(&self.basis.hstack(&neg_w)?);
        let u_part: Vec<usize> = (0..self.dim()).collect();
        let coeffs = ker.transpose().select_columns(&u_part).transpose();
        Ok(Subspace::span(&self.basis.mul(&coeffs)?))
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        if v.len() != self.ambient_dim {
            return false;
        }
        if v.iter().all(|&x| x == 0) {
            return true;
        }
        let col = Mat::from_columns(self.field(), self.ambient_dim, &[v]).expect("length checked");
        solve(&self.basis, &col).is_ok()
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.basis.columns().iter().all(|c| self.contains(c))
    }

    /// One normalized representative per line of the subspace, in
    /// lexicographic order. Size is `(q^dim - 1) / (q - 1)`; callers bound it.
    pub fn projective_points(&self) -> Vec<Vec<u32>> {
        let f = self.field();
        let q = f.modulus() as usize;
        let d = self.dim();
        let mut out = Vec::new();
        if d == 0 {
            return out;
        }
        let mut coeffs = vec![0u32; d];
        let total = q.pow(d as u32);
        for _ in 1..total {
            // odometer increment
            for c in coeffs.iter_mut().rev() {
                *c += 1;
                if (*c as usize) < q {
                    break;
                }
                *c = 0;
            }
            // one representative per line: first nonzero coefficient is 1
            if coeffs.iter().find(|&&c| c != 0) != Some(&1) {
                continue;
            }
            let v = self
                .basis
                .apply(&coeffs)
                .expect("coefficient length is dim");
            out.push(normalize(f, &v));
        }
        out.sort();
        out
    }
}

/// Columns that extend the basis of `v` to a basis of the ambient space,
/// chosen by scanning standard basis vectors in index order.
pub fn complete_basis(v: &Subspace) -> Mat {
    let f = v.field();
    let n = v.ambient_dim;
    let mut current = v.basis.clone();
    let mut extra: Vec<Vec<u32>> = Vec::new();
    let mut r = v.dim();
    for i in 0..n {
        if r == n {
            break;
        }
        let e = unit_vector(n, i);
        let cand = current
            .hstack(&Mat::from_columns(f, n, &[&e]).expect("unit vector"))
            .expect("same shape");
        if rank(&cand) > r {
            current = cand;
            extra.push(e);
            r += 1;
        }
    }
    Mat::from_columns(f, n, &extra).expect("unit vectors")
}

/// `A = B R` with `B` invertible and `R` the leading columns of the identity:
/// `B = (A | completion)`.
pub fn br_factorize(a: &Mat) -> Result<(Mat, Mat), LinalgError> {
    if a.rows < a.cols {
        return Err(LinalgError::DependentColumns);
    }
    if rank(a) != a.cols {
        return Err(LinalgError::DependentColumns);
    }
    let b = a.hstack(&complete_basis(&Subspace::span(a)))?;
    let lead: Vec<usize> = (0..a.cols).collect();
    let r = Mat::identity(a.field, a.rows).select_columns(&lead);
    Ok((b, r))
}

/// `A = B R` with `B` invertible and exactly `k` columns of `R` taken
/// (distinct) from the identity. The identity columns go to the first `k`
/// independent columns of `A`, lowest index first; the remaining columns of
/// `R` are `B^-1` applied to the matching columns of `A`.
pub fn k_degree_br_factorize(a: &Mat, k: usize) -> Result<(Mat, Mat), LinalgError> {
    let (m, n) = (a.rows, a.cols);
    if m < n || n < k {
        return Err(LinalgError::DimensionMismatch(format!(
            "need rows >= cols >= k, got {m}x{n} with k = {k}"
        )));
    }
    let f = a.field;
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut acc = Mat::zeros(f, m, 0);
    for j in 0..n {
        if chosen.len() == k {
            break;
        }
        let cand = acc.hstack(&a.select_columns(&[j]))?;
        if rank(&cand) > chosen.len() {
            acc = cand;
            chosen.push(j);
        }
    }
    if chosen.len() < k {
        return Err(LinalgError::InfeasibleDegree { k, rank: rank(a) });
    }
    let b = acc.hstack(&complete_basis(&Subspace::span(&acc)))?;
    let b_inv = invert(&b)?;
    let mut r = b_inv.mul(a)?;
    // pin the identity columns at the chosen positions
    for (pos, &j) in chosen.iter().enumerate() {
        for i in 0..m {
            debug_assert_eq!(r.get(i, j), u32::from(i == pos));
            r.set(i, j, u32::from(i == pos));
        }
    }
    Ok((b, r))
}

/// Square invertible `D` with `B_t D = targets`. The targets must lie in the
/// span of `B_t` and be as many (and as independent) as its columns.
pub fn change_basis_to_targets(b_t: &Mat, targets: &Mat) -> Result<Mat, LinalgError> {
    if targets.cols != b_t.cols {
        return Err(LinalgError::DimensionMismatch(format!(
            "{} targets for {} columns",
            targets.cols, b_t.cols
        )));
    }
    let d = solve(b_t, targets)?;
    if rank(&d) != d.cols {
        return Err(LinalgError::DependentColumns);
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: u32) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    fn m(p: u32, rows: &[&[i64]]) -> Mat {
        Mat::from_rows(gf(p), rows).unwrap()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&Mat::identity(gf(3), 3)), 3);
        assert_eq!(rank(&Mat::zeros(gf(3), 3, 2)), 0);
        assert_eq!(rank(&m(3, &[&[1, 1], &[1, 0], &[0, 1]])), 2);
    }

    #[test]
    fn invert_three_planes() {
        let b = m(3, &[&[2, 1, 1], &[1, 1, 1], &[1, 0, 1]]);
        assert_eq!(
            invert(&b).unwrap(),
            m(3, &[&[1, 2, 0], &[0, 1, 2], &[2, 1, 1]])
        );
        let i = Mat::identity(gf(5), 4);
        assert_eq!(invert(&i).unwrap(), i);
        assert_eq!(
            invert(&m(3, &[&[1, 1], &[0, 0]])),
            Err(LinalgError::Singular)
        );
        assert_eq!(
            invert(&Mat::zeros(gf(3), 2, 3)),
            Err(LinalgError::NotSquare(2, 3))
        );
    }

    #[test]
    fn sum_and_intersection_basics() {
        let f = gf(3);
        let e1 = Subspace::span_of(f, 3, &[[1, 0, 0]]);
        let e2 = Subspace::span_of(f, 3, &[[0, 1, 0]]);
        let s = e1.sum(&e2).unwrap();
        assert_eq!(s, Subspace::span_of(f, 3, &[[0, 1, 0], [1, 0, 0]]));
        assert_eq!(s.dim(), 2);
        assert_eq!(e1.sum(&e1).unwrap(), e1);
        assert_eq!(e1.intersect(&e1).unwrap(), e1);
        assert_eq!(e1.intersect(&e2).unwrap().dim(), 0);
    }

    #[test]
    fn three_planes_subspaces() {
        let f = gf(3);
        let b1 = Subspace::span(&m(3, &[&[1, 0], &[1, 0], &[0, 1]]));
        let b2 = Subspace::span(&m(3, &[&[1, 0], &[0, 1], &[0, 1]]));
        let b3 = Subspace::span(&m(3, &[&[1, 1], &[1, 0], &[0, 1]]));
        let total = b1.sum(&b2).unwrap().sum(&b3).unwrap();
        assert_eq!(total, Subspace::full(f, 3));
        assert_eq!(
            b2.intersect(&b3).unwrap(),
            Subspace::span_of(f, 3, &[[2, 1, 1]])
        );
        assert_eq!(
            b1.intersect(&b3).unwrap(),
            Subspace::span_of(f, 3, &[[1, 1, 0]])
        );
        assert_eq!(
            b1.intersect(&b2).unwrap(),
            Subspace::span_of(f, 3, &[[1, 1, 1]])
        );
    }

    #[test]
    fn mismatched_ambient_is_error() {
        let a = Subspace::full(gf(3), 2);
        let b = Subspace::full(gf(3), 3);
        assert!(matches!(a.sum(&b), Err(LinalgError::DimensionMismatch(_))));
        let c = Subspace::full(gf(5), 2);
        assert_eq!(a.intersect(&c), Err(LinalgError::FieldMismatch(3, 5)));
    }

    #[test]
    fn complete_basis_examples() {
        let f2 = gf(2);
        let v = Subspace::span_of(f2, 3, &[[1, 0, 0]]);
        let c = complete_basis(&v);
        assert_eq!(c.cols(), 2);
        assert_eq!(rank(&v.basis().hstack(&c).unwrap()), 3);
        assert_eq!(complete_basis(&Subspace::full(f2, 3)).cols(), 0);
        let z = Subspace::zero(gf(3), 2);
        let c = complete_basis(&z);
        assert_eq!(c.cols(), 2);
        assert_eq!(rank(&c), 2);
    }

    #[test]
    fn br_factorization_examples() {
        let a = m(3, &[&[1, 0], &[1, 0], &[0, 1]]);
        let (b, r) = br_factorize(&a).unwrap();
        assert_eq!(b.mul(&r).unwrap(), a);
        assert_eq!(rank(&b), 3);
        assert!(r.is_selection());
        assert_eq!(r, Mat::identity(gf(3), 3).select_columns(&[0, 1]));

        let i = Mat::identity(gf(5), 3);
        assert_eq!(br_factorize(&i).unwrap(), (i.clone(), i.clone()));

        let e2 = m(2, &[&[0], &[1], &[0]]);
        let (b, r) = br_factorize(&e2).unwrap();
        assert_eq!(b.mul(&r).unwrap(), e2);
        assert_eq!(rank(&b), 3);

        assert_eq!(
            br_factorize(&m(3, &[&[1, 2], &[1, 2], &[0, 0]])),
            Err(LinalgError::DependentColumns)
        );
    }

    #[test]
    fn k_degree_examples() {
        let a = m(3, &[&[1, 0], &[1, 0], &[0, 1]]);
        assert_eq!(
            k_degree_br_factorize(&a, 2).unwrap(),
            br_factorize(&a).unwrap()
        );

        let (b, r) = k_degree_br_factorize(&a, 0).unwrap();
        assert_eq!(b, Mat::identity(gf(3), 3));
        assert_eq!(r, a);

        // rank-1 matrix admits only degree <= 1
        let d = m(3, &[&[1, 2], &[1, 2], &[0, 0]]);
        let (b, r) = k_degree_br_factorize(&d, 1).unwrap();
        assert_eq!(b.mul(&r).unwrap(), d);
        assert_eq!(r.column(0), vec![1, 0, 0]);
        assert_eq!(
            k_degree_br_factorize(&d, 2),
            Err(LinalgError::InfeasibleDegree { k: 2, rank: 1 })
        );
    }

    #[test]
    fn change_basis_three_planes() {
        let b1 = m(3, &[&[1, 0], &[1, 0], &[0, 1]]);
        let t1 = m(3, &[&[1, 1], &[1, 1], &[0, 1]]);
        assert_eq!(
            change_basis_to_targets(&b1, &t1).unwrap(),
            m(3, &[&[1, 1], &[0, 1]])
        );
        assert_eq!(
            change_basis_to_targets(&b1, &b1).unwrap(),
            Mat::identity(gf(3), 2)
        );

        let b2 = m(3, &[&[1, 0], &[0, 1], &[0, 1]]);
        let t2 = m(3, &[&[2, 1], &[1, 1], &[1, 1]]);
        assert_eq!(
            change_basis_to_targets(&b2, &t2).unwrap(),
            m(3, &[&[2, 1], &[1, 1]])
        );

        let outside = m(3, &[&[1, 0], &[0, 1], &[0, 0]]);
        assert_eq!(
            change_basis_to_targets(&b2, &outside),
            Err(LinalgError::NotInSpan)
        );
        let dependent = m(3, &[&[1, 2], &[0, 0], &[0, 0]]);
        assert_eq!(
            change_basis_to_targets(&b2, &dependent),
            Err(LinalgError::DependentColumns)
        );
    }

    #[test]
    fn projective_points_of_a_plane() {
        let f = gf(3);
        let plane = Subspace::span_of(f, 3, &[[1, 0, 0], [0, 1, 0]]);
        let pts = plane.projective_points();
        assert_eq!(
            pts,
            vec![vec![0, 1, 0], vec![1, 0, 0], vec![1, 1, 0], vec![1, 2, 0]]
        );
        assert!(Subspace::zero(f, 3).projective_points().is_empty());
    }

    #[test]
    fn kernel_is_annihilated() {
        let a = m(5, &[&[1, 2, 3, 4], &[2, 4, 1, 3]]);
        let k = kernel(&a);
        assert_eq!(k.cols(), 4 - rank(&a));
        assert!(a.mul(&k).unwrap().is_zero());
    }
}
