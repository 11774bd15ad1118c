//! Dense symmetric linear algebra.
//!
//! A small row-major matrix type plus the decompositions the spectral solvers
//! need: Cholesky, the symmetric eigendecomposition (Householder
//! tridiagonalization followed by implicit QL, with cyclic Jacobi available as
//! an independent route), and the symmetric-definite generalized eigenproblem
//! `S a = λ (B + ridge I) a` reduced through the Cholesky factor of the
//! right-hand side.

use std::fmt;
use std::ops::{Index, IndexMut};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Products above this many multiply-adds are split across rayon workers.
const PAR_THRESHOLD: usize = 1 << 18;

/// Sweep budget for cyclic Jacobi.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Per-eigenvalue iteration budget for the implicit QL step.
const QL_MAX_ITERS: usize = 60;

/// Dense `f64` matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// # Panics
    /// Panics on ragged or empty input; meant for literals in code and tests.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty(), "empty matrix literal");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix literal");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch("columns differ in length".into()));
        }
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Self::new(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// All columns as owned vectors; the natural layout for point-wise work on
    /// `d x n` data matrices.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        self.transpose().data.chunks(self.rows).map(<[f64]>::to_vec).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Columns `range` of `self` as a new matrix.
    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            let src = self.row(i);
            for (jj, &j) in idx.iter().enumerate() {
                out.data[i * idx.len() + jj] = src[j];
            }
        }
        out
    }

    pub fn column_range(&self, start: usize, end: usize) -> Self {
        let idx: Vec<usize> = (start..end).collect();
        self.select_columns(&idx)
    }

    /// `[self, other]`, concatenating columns.
    pub fn hstack(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "hstack of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "product of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (m, p) = (self.cols, other.cols);
        let mut out = Self::zeros(self.rows, p);
        let kernel = |(i, out_row): (usize, &mut [f64])| {
            let a_row = &self.data[i * m..(i + 1) * m];
            for (l, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[l * p..(l + 1) * p];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        };
        if self.rows * m * p >= PAR_THRESHOLD {
            out.data.par_chunks_mut(p).enumerate().for_each(kernel);
        } else {
            out.data.chunks_mut(p).enumerate().for_each(kernel);
        }
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose of `self`.
    pub fn t_matmul(&self, other: &Self) -> Result<Self> {
        self.transpose().matmul(other)
    }

    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "elementwise op on {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    /// `self += c * other`.
    pub fn add_scaled_assign(&mut self, c: f64, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch("scaled add".into()));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    /// `self += c * u vᵀ`.
    pub fn add_outer_assign(&mut self, c: f64, u: &[f64], v: &[f64]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (i, &ui) in u.iter().enumerate() {
            let s = c * ui;
            if s == 0.0 {
                continue;
            }
            for (a, &vj) in self.row_mut(i).iter_mut().zip(v) {
                *a += s * vj;
            }
        }
    }

    pub fn add_diagonal(&mut self, c: f64) {
        for i in 0..self.rows.min(self.cols) {
            self.data[i * self.cols + i] += c;
        }
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|m_ij - m_ji|`; `None` for non-square matrices.
    pub fn max_asymmetry(&self) -> Option<f64> {
        if !self.is_square() {
            return None;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        Some(worst)
    }

    /// Replaces `self` with `(self + selfᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.rows;
        debug_assert!(self.is_square());
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
    }

    /// Checks symmetry against `tol_rel * ‖self‖_F`.
    pub fn check_symmetric(&self, tol_rel: f64) -> Result<()> {
        let asym = self.max_asymmetry().ok_or_else(|| {
            Error::DimensionMismatch(format!("expected square matrix, got {}x{}", self.rows, self.cols))
        })?;
        let tolerance = tol_rel * self.frobenius_norm();
        if asym > tolerance {
            return Err(Error::NotSymmetric {
                asymmetry: asym,
                tolerance,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Relative symmetry tolerance accepted on input.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Keeps the first `k` pairs (the `k` smallest).
    pub fn truncate(self, k: usize) -> Self {
        let idx: Vec<usize> = (0..k).collect();
        Self {
            values: self.values[..k].to_vec(),
            vectors: self.vectors.select_columns(&idx),
        }
    }

    /// Keeps the `k` largest pairs, still in ascending order.
    pub fn largest(self, k: usize) -> Self {
        let n = self.values.len();
        let idx: Vec<usize> = (n - k..n).collect();
        Self {
            values: self.values[n - k..].to_vec(),
            vectors: self.vectors.select_columns(&idx),
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = m`.
pub fn cholesky(m: &DenseMatrix) -> Result<DenseMatrix> {
    m.check_symmetric(SYMMETRY_TOL)?;
    let n = m.rows();
    // A pivot this small relative to the diagonal is rounding noise on a
    // singular matrix, not evidence of definiteness.
    let max_diag = m.diagonal().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = n as f64 * f64::EPSILON * max_diag;
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                let pivot = m.get(i, i) - s;
                if pivot <= floor || !pivot.is_finite() {
                    return Err(Error::NotPositiveDefinite { row: i, pivot });
                }
                l.set(i, i, pivot.sqrt());
            } else {
                let v = (m.get(i, j) - s) / l.get(j, j);
                l.set(i, j, v);
            }
        }
    }
    Ok(l)
}

/// Solves `L X = rhs` for lower-triangular `L`.
pub fn solve_lower(l: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    let n = l.rows();
    if rhs.rows() != n {
        return Err(Error::DimensionMismatch("triangular solve".into()));
    }
    let p = rhs.cols();
    let mut x = rhs.clone();
    for i in 0..n {
        let (done, rest) = x.data.split_at_mut(i * p);
        let xi = &mut rest[..p];
        for j in 0..i {
            let lij = l.get(i, j);
            if lij != 0.0 {
                for (a, &b) in xi.iter_mut().zip(&done[j * p..(j + 1) * p]) {
                    *a -= lij * b;
                }
            }
        }
        let d = l.get(i, i);
        xi.iter_mut().for_each(|a| *a /= d);
    }
    Ok(x)
}

/// Solves `Lᵀ X = rhs` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    let n = l.rows();
    if rhs.rows() != n {
        return Err(Error::DimensionMismatch("triangular solve".into()));
    }
    let p = rhs.cols();
    let mut x = rhs.clone();
    for i in (0..n).rev() {
        let (head, tail) = x.data.split_at_mut((i + 1) * p);
        let xi = &mut head[i * p..];
        for j in (i + 1)..n {
            let lji = l.get(j, i);
            if lji != 0.0 {
                let xj = &tail[(j - i - 1) * p..(j - i) * p];
                for (a, &b) in xi.iter_mut().zip(xj) {
                    *a -= lji * b;
                }
            }
        }
        let d = l.get(i, i);
        xi.iter_mut().for_each(|a| *a /= d);
    }
    Ok(x)
}

/// Flips each column so that its first non-negligible coordinate is positive.
pub fn normalize_signs(v: &mut DenseMatrix) {
    for j in 0..v.cols() {
        let col_max = (0..v.rows()).fold(0.0f64, |m, i| m.max(v.get(i, j).abs()));
        let cutoff = 1e-10 * col_max;
        if let Some(first) = (0..v.rows()).map(|i| v.get(i, j)).find(|x| x.abs() > cutoff) {
            if first < 0.0 {
                for i in 0..v.rows() {
                    v.set(i, j, -v.get(i, j));
                }
            }
        }
    }
}

/// Full symmetric eigendecomposition, ascending.
///
/// Householder reduction to tridiagonal form followed by the implicit QL
/// iteration. The working array stores eigenvectors as rows so the Givens
/// updates touch contiguous memory.
pub fn sym_eigen(m: &DenseMatrix) -> Result<EigenPairs> {
    m.check_symmetric(SYMMETRY_TOL)?;
    let n = m.rows();
    let mut vt = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(n, &mut vt, &mut d, &mut e);
    tridiagonal_ql(n, &mut vt, &mut d, &mut e)?;
    Ok(sorted_pairs(n, &d, &vt))
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Slower than [`sym_eigen`] but an entirely separate algorithm; used to
/// cross-check it.
pub fn jacobi_eigen(m: &DenseMatrix) -> Result<EigenPairs> {
    m.check_symmetric(SYMMETRY_TOL)?;
    let n = m.rows();
    let mut a = m.clone();
    a.symmetrize();
    // rows of `vt` are eigenvectors
    let mut vt = DenseMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        // roundoff keeps the off-diagonal mass near n·eps·‖A‖
        if off <= n as f64 * f64::EPSILON * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vp = vt.get(p, k);
                    let vq = vt.get(q, k);
                    vt.set(p, k, c * vp - s * vq);
                    vt.set(q, k, s * vp + c * vq);
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            budget: JACOBI_MAX_SWEEPS,
        });
    }
    Ok(sorted_pairs(n, &a.diagonal(), vt.as_slice()))
}

fn sorted_pairs(n: usize, values: &[f64], vt: &[f64]) -> EigenPairs {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = &vt[src * n..(src + 1) * n];
        for (i, &x) in v.iter().enumerate() {
            vectors.set(i, col, x);
        }
    }
    normalize_signs(&mut vectors);
    EigenPairs {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors,
    }
}

/// Householder tridiagonalization (after the EISPACK `tred2` routine).
///
/// `vt` holds the symmetric input on entry and the accumulated orthogonal
/// transform on exit, indexed so that `vt[c * n + r]` is element `(r, c)`.
fn tridiagonalize(n: usize, vt: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    macro_rules! v {
        ($r:expr, $c:expr) => {
            vt[($c) * n + ($r)]
        };
    }
    for j in 0..n {
        d[j] = v!(n - 1, j);
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v!(i - 1, j);
                v!(i, j) = 0.0;
                v!(j, i) = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v!(j, i) = f;
                g = e[j] + v!(j, j) * f;
                // column j of V over rows j+1..i is contiguous in `vt`
                let col = &vt[j * n + j + 1..j * n + i];
                for (off, &vkj) in col.iter().enumerate() {
                    let k = j + 1 + off;
                    g += vkj * d[k];
                    e[k] += vkj * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                let col = &mut vt[j * n + j..j * n + i];
                for (off, vkj) in col.iter_mut().enumerate() {
                    let k = j + off;
                    *vkj -= f * e[k] + g * d[k];
                }
                d[j] = v!(i - 1, j);
                v!(i, j) = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v!(n - 1, i) = v!(i, i);
        v!(i, i) = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v!(k, i + 1) / h;
            }
            for j in 0..=i {
                let (lo, hi) = vt.split_at_mut((i + 1) * n);
                let col_next = &hi[..=i];
                let col_j = &mut lo[j * n..j * n + i + 1];
                let g = dot(col_next, col_j);
                for (vkj, &dk) in col_j.iter_mut().zip(d.iter()) {
                    *vkj -= g * dk;
                }
            }
        }
        for k in 0..=i {
            v!(k, i + 1) = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v!(n - 1, j);
        v!(n - 1, j) = 0.0;
    }
    v!(n - 1, n - 1) = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)` (after EISPACK `tql2`),
/// accumulating rotations into the rows of `vt`.
fn tridiagonal_ql(n: usize, vt: &mut [f64], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITERS {
                    return Err(Error::NoConvergence {
                        budget: QL_MAX_ITERS,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = vt.split_at_mut((i + 1) * n);
                    let vi = &mut lo[i * n..];
                    let vi1 = &mut hi[..n];
                    for (a, b) in vi.iter_mut().zip(vi1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// The `k` smallest solutions of `s a = λ (b + ridge I) a`.
///
/// Reduces to a standard problem through `B = L Lᵀ`: eigenvectors `V` of
/// `L⁻¹ S L⁻ᵀ` map back to `A = L⁻ᵀ V`, which are `B`-orthonormal.
pub fn gen_sym_eigen_smallest(
    s: &DenseMatrix,
    b: &DenseMatrix,
    k: usize,
    ridge: f64,
) -> Result<EigenPairs> {
    if !s.is_square() || s.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "generalized problem with S {}x{} and B {}x{}",
            s.rows(),
            s.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if k == 0 || k > s.rows() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} must lie in 1..={}",
            s.rows()
        )));
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(Error::InvalidArgument(format!("ridge must be >= 0, got {ridge}")));
    }
    s.check_symmetric(SYMMETRY_TOL)?;
    let mut bb = b.clone();
    bb.add_diagonal(ridge);
    let l = cholesky(&bb)?;
    // C = L⁻¹ S L⁻ᵀ = L⁻¹ (L⁻¹ S)ᵀ since S is symmetric.
    let y = solve_lower(&l, s)?;
    let mut c = solve_lower(&l, &y.transpose())?;
    c.symmetrize();
    let pairs = sym_eigen(&c)?.truncate(k);
    let mut a = solve_lower_transpose(&l, &pairs.vectors)?;
    normalize_signs(&mut a);
    Ok(EigenPairs {
        values: pairs.values,
        vectors: a,
    })
}
