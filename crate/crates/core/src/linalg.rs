//! Dense real and complex matrices and the handful of factorizations the rest
//! of the crate needs. Storage is row-major; heavy factorizations go through
//! nalgebra.

use std::ops::{Index, IndexMut};

use nalgebra::{ComplexField, DMatrix, Dyn, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for rank decisions and structural checks.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for Matrix {
    type Error = Error;
    fn try_from(raw: RawMatrix) -> Result<Self> {
        Matrix::from_vec(raw.rows, raw.cols, raw.data)
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Panics on ragged input; intended for literals.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
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
        Matrix { rows, cols, data }
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
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

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul {}x{} by {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Matrix::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let orow = &mut out.data[i * oc..(i + 1) * oc];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * oc..(k + 1) * oc];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · otherᵀ` without materializing the transpose.
    pub fn matmul_t(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols);
        Matrix::from_fn(self.rows, other.rows, |i, j| {
            self.row(i).iter().zip(other.row(j)).map(|(a, b)| a * b).sum()
        })
    }

    /// `selfᵀ · other`.
    pub fn t_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows);
        let mut out = Matrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = other.row(k);
            for (i, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape());
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape());
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn dot(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn block(&self, r0: usize, c0: usize, h: usize, w: usize) -> Matrix {
        Matrix::from_fn(h, w, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        for i in 0..b.rows {
            let dst = &mut self.data[(r0 + i) * self.cols + c0..(r0 + i) * self.cols + c0 + b.cols];
            dst.copy_from_slice(b.row(i));
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), self.cols);
        for (o, &i) in idx.iter().enumerate() {
            out.row_mut(o).copy_from_slice(self.row(i));
        }
        out
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])])
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(blocks: &[Matrix]) -> Matrix {
        let r: usize = blocks.iter().map(Matrix::rows).sum();
        let c: usize = blocks.iter().map(Matrix::cols).sum();
        let mut out = Matrix::zeros(r, c);
        let (mut ro, mut co) = (0, 0);
        for b in blocks {
            out.set_block(ro, co, b);
            ro += b.rows;
            co += b.cols;
        }
        out
    }

    /// Largest `|a_ij − a_ji|`; panics on non-square input.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetrize(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Matrix {
        Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("non-finite complex entry".into()));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_real(m: &Matrix) -> Self {
        Self::from_fn(m.rows(), m.cols(), |i, j| Complex64::new(m[(i, j)], 0.0))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn conj_transpose(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + other[(i, j)])
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Full singular value decomposition `input = u · Σ · vt`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub vt: Matrix,
}

impl SvdResult {
    /// `u · Σ · vt`, using only the first `min(m,n)` columns/rows.
    pub fn reconstruct(&self) -> Matrix {
        let q = self.singular_values.len();
        let mut us = Matrix::zeros(self.u.rows(), q);
        for i in 0..self.u.rows() {
            for j in 0..q {
                us[(i, j)] = self.u[(i, j)] * self.singular_values[j];
            }
        }
        us.matmul(&self.vt.block(0, 0, q, self.vt.cols()))
    }
}

/// Thin SVD: `u` is m×q, `vt` is q×n with q = min(m, n); values descending.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
}

const SVD_MAX_ITER: usize = 10_000;

/// nalgebra's SVD can return an inconsistent factorization of rank-deficient
/// input when run at machine epsilon, so every result is checked against
/// the input and retried at looser convergence thresholds.
fn checked_svd<T: ComplexField<RealField = f64>>(m: DMatrix<T>) -> Result<SVD<T, Dyn, Dyn>> {
    let (r, c) = m.shape();
    let scale = (1.0 + m.norm()) * (r.max(c) as f64).sqrt();
    let mut best: Option<(f64, SVD<T, Dyn, Dyn>)> = None;
    for eps in [f64::EPSILON, 5.0 * f64::EPSILON, 1e-14, 1e-12] {
        let Some(dec) = SVD::try_new(m.clone(), true, true, eps, SVD_MAX_ITER) else {
            continue;
        };
        if dec.singular_values.iter().any(|s| *s < 0.0) {
            continue;
        }
        let mut us = dec.u.clone().expect("u requested");
        for (j, s) in dec.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        let resid = (us * dec.v_t.as_ref().expect("v_t requested") - &m).norm() / scale;
        if resid <= 1e-12 {
            return Ok(dec);
        }
        if best.as_ref().is_none_or(|(b, _)| resid < *b) {
            best = Some((resid, dec));
        }
    }
    match best {
        Some((resid, dec)) if resid <= 1e-6 => Ok(dec),
        _ => Err(Error::Numerical(format!("SVD of {r}x{c} matrix did not converge"))),
    }
}

pub fn svd_thin(m: &Matrix) -> Result<ThinSvd> {
    let (r, c) = m.shape();
    let q = r.min(c);
    if q == 0 {
        return Ok(ThinSvd {
            u: Matrix::zeros(r, 0),
            s: Vec::new(),
            vt: Matrix::zeros(0, c),
        });
    }
    let dec = checked_svd(m.to_dmatrix())?;
    let u = dec.u.expect("u requested");
    let vt = dec.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    Ok(ThinSvd {
        u: Matrix::from_fn(r, q, |i, j| u[(i, order[j])]),
        s: order.iter().map(|&k| dec.singular_values[k]).collect(),
        vt: Matrix::from_fn(q, c, |i, j| vt[(order[i], j)]),
    })
}

/// Extends orthonormal columns `q` (n×k) to an orthonormal basis of ℝⁿ.
fn complete_basis(q: &Matrix) -> Matrix {
    let n = q.rows();
    let mut cols: Vec<Vec<f64>> = (0..q.cols()).map(|j| q.col(j)).collect();
    let mut candidate = 0;
    while cols.len() < n && candidate < n {
        let mut v = vec![0.0; n];
        v[candidate] = 1.0;
        candidate += 1;
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= d * ci;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            cols.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    Matrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Full SVD with square orthogonal `u` and `vt`.
pub fn svd(m: &Matrix) -> Result<SvdResult> {
    let t = svd_thin(m)?;
    let u = complete_basis(&t.u);
    let v = complete_basis(&t.vt.transpose());
    Ok(SvdResult {
        u,
        singular_values: t.s,
        vt: v.transpose(),
    })
}

pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    if m.rows().min(m.cols()) == 0 {
        return Ok(Vec::new());
    }
    Ok(svd_thin(m)?.s)
}

/// Count of singular values above `rel_tol · σ_max · max(rows, cols)`.
pub fn numeric_rank(m: &Matrix, rel_tol: f64) -> Result<usize> {
    let s = singular_values(m)?;
    Ok(rank_from_values(&s, rel_tol, m.rows().max(m.cols())))
}

pub fn rank_from_values(s: &[f64], rel_tol: f64, dim: usize) -> usize {
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    let cut = rel_tol * smax * dim as f64;
    s.iter().filter(|&&v| v > cut).count()
}

/// Rank with an absolute cutoff: singular values above `threshold`.
pub fn rank_above(m: &Matrix, threshold: f64) -> Result<usize> {
    Ok(singular_values(m)?.iter().filter(|&&v| v > threshold).count())
}

/// Circulant matrix whose first row is `v`, each later row shifted one step right.
pub fn circulant(v: &[f64]) -> Matrix {
    let n = v.len();
    Matrix::from_fn(n, n, |i, j| v[(j + n - i) % n])
}

/// Realization map: entry `z` becomes the block `[[Re z, −Im z], [Im z, Re z]]`.
pub fn realize(z: &ComplexMatrix) -> Matrix {
    let mut out = Matrix::zeros(2 * z.rows(), 2 * z.cols());
    for i in 0..z.rows() {
        for j in 0..z.cols() {
            let w = z[(i, j)];
            out[(2 * i, 2 * j)] = w.re;
            out[(2 * i, 2 * j + 1)] = -w.im;
            out[(2 * i + 1, 2 * j)] = w.im;
            out[(2 * i + 1, 2 * j + 1)] = w.re;
        }
    }
    out
}

/// Largest deviation of a 2×2 block from the realization pattern, with its index.
pub fn realization_deviation(m: &Matrix) -> (f64, usize, usize) {
    let mut worst = (0.0, 0, 0);
    for i in 0..m.rows() / 2 {
        for j in 0..m.cols() / 2 {
            let a = m[(2 * i, 2 * j)];
            let b = m[(2 * i, 2 * j + 1)];
            let c = m[(2 * i + 1, 2 * j)];
            let d = m[(2 * i + 1, 2 * j + 1)];
            let dev = (a - d).abs().max((b + c).abs());
            if dev > worst.0 {
                worst = (dev, i, j);
            }
        }
    }
    worst
}

/// Nearest realization-patterned matrix in Frobenius norm (even dimensions).
pub fn project_realization(m: &Matrix) -> Matrix {
    let mut out = m.clone();
    for i in 0..m.rows() / 2 {
        for j in 0..m.cols() / 2 {
            let (a, b) = (2 * i, 2 * j);
            let re = 0.5 * (m[(a, b)] + m[(a + 1, b + 1)]);
            let im = 0.5 * (m[(a + 1, b)] - m[(a, b + 1)]);
            out[(a, b)] = re;
            out[(a + 1, b + 1)] = re;
            out[(a + 1, b)] = im;
            out[(a, b + 1)] = -im;
        }
    }
    out
}

/// Inverse of [`realize`], reading the odd (first of each pair) rows.
pub fn unrealize(m: &Matrix, tol: f64) -> Result<ComplexMatrix> {
    if !m.rows().is_multiple_of(2) || !m.cols().is_multiple_of(2) {
        return Err(Error::Dimension(format!(
            "realization needs even dimensions, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let (dev, row, col) = realization_deviation(m);
    if dev > tol * (1.0 + m.max_abs()) {
        return Err(Error::NotRealization {
            row,
            col,
            deviation: dev,
        });
    }
    Ok(ComplexMatrix::from_fn(m.rows() / 2, m.cols() / 2, |i, j| {
        Complex64::new(m[(2 * i, 2 * j)], m[(2 * i + 1, 2 * j)])
    }))
}

fn check_symmetric(w: &Matrix, tol: f64) -> Result<()> {
    if w.rows() != w.cols() {
        return Err(Error::Dimension(format!(
            "expected a square weight, got {}x{}",
            w.rows(),
            w.cols()
        )));
    }
    let asym = w.asymmetry();
    if asym > tol * (1.0 + w.max_abs()) {
        return Err(Error::Asymmetric { asymmetry: asym });
    }
    Ok(())
}

/// `trace(a · w · bᵀ)`.
pub fn weighted_inner(a: &Matrix, b: &Matrix, w: &Matrix, tol: f64) -> Result<f64> {
    check_symmetric(w, tol)?;
    if a.shape() != b.shape() || a.cols() != w.rows() {
        return Err(Error::Dimension(format!(
            "weighted inner product of {}x{} and {}x{} under {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            w.rows(),
            w.cols()
        )));
    }
    Ok(a.matmul(w).dot(b))
}

/// Eigendecomposition of a symmetric PSD matrix, shared by its square root
/// and inverse square root so both stay consistent.
#[derive(Debug, Clone)]
pub struct PsdEigen {
    pub values: Vec<f64>,
    /// Columns are eigenvectors.
    pub vectors: Matrix,
}

impl PsdEigen {
    pub fn new(w: &Matrix, tol: f64) -> Result<Self> {
        check_symmetric(w, tol)?;
        let n = w.rows();
        if n == 0 {
            return Ok(PsdEigen {
                values: Vec::new(),
                vectors: Matrix::zeros(0, 0),
            });
        }
        let eig = SymmetricEigen::new(w.symmetrize().to_dmatrix());
        let scale = w.frobenius_norm().max(f64::MIN_POSITIVE);
        let mut values = Vec::with_capacity(n);
        for &ev in eig.eigenvalues.iter() {
            if ev < -tol.max(1e-12) * scale * n as f64 {
                return Err(Error::Indefinite { eigenvalue: ev });
            }
            values.push(ev.max(0.0));
        }
        Ok(PsdEigen {
            values,
            vectors: Matrix::from_dmatrix(&eig.eigenvectors),
        })
    }

    fn apply_fn(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let v = &self.vectors;
        let n = v.rows();
        let mut scaled = v.clone();
        for i in 0..n {
            for j in 0..n {
                scaled[(i, j)] *= f(self.values[j]);
            }
        }
        scaled.matmul_t(v)
    }

    pub fn sqrt(&self) -> Matrix {
        self.apply_fn(f64::sqrt)
    }

    /// Pseudo-inverse square root; eigenvalues below `rel_tol · λ_max` map to 0.
    pub fn inv_sqrt(&self, rel_tol: f64) -> Matrix {
        let cut = rel_tol * self.max_value();
        self.apply_fn(|x| if x > cut { 1.0 / x.sqrt() } else { 0.0 })
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, &v| m.max(v))
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        let n = self.values.len();
        let cut = rel_tol * self.max_value() * n as f64;
        self.values.iter().filter(|&&v| v > cut && v > 0.0).count()
    }
}

/// Symmetric PSD square root via eigendecomposition.
pub fn psd_sqrt(w: &Matrix, tol: f64) -> Result<Matrix> {
    Ok(PsdEigen::new(w, tol)?.sqrt())
}

/// Inverse of a square matrix by LU.
pub fn inverse(m: &Matrix) -> Result<Matrix> {
    if m.rows() != m.cols() {
        return Err(Error::Dimension("inverse of a non-square matrix".into()));
    }
    m.to_dmatrix()
        .try_inverse()
        .map(|d| Matrix::from_dmatrix(&d))
        .ok_or_else(|| Error::Numerical("singular matrix".into()))
}

/// Moore–Penrose pseudo-inverse with relative cutoff.
pub fn pinv(m: &Matrix, rel_tol: f64) -> Result<Matrix> {
    let t = svd_thin(m)?;
    let smax = t.s.first().copied().unwrap_or(0.0);
    let cut = rel_tol * smax * m.rows().max(m.cols()) as f64;
    let q = t.s.len();
    let mut vs = t.vt.transpose();
    for i in 0..vs.rows() {
        for j in 0..q {
            vs[(i, j)] *= if t.s[j] > cut { 1.0 / t.s[j] } else { 0.0 };
        }
    }
    Ok(vs.matmul_t(&t.u))
}

/// Thin complex SVD `z = u · Diag(s) · vh`, values descending.
pub fn complex_svd(z: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    let (r, c) = (z.rows(), z.cols());
    let q = r.min(c);
    if q == 0 {
        return Ok((ComplexMatrix::zeros(r, 0), Vec::new(), ComplexMatrix::zeros(0, c)));
    }
    let dec = checked_svd(z.to_dmatrix())?;
    let u = dec.u.expect("u requested");
    let vt = dec.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    Ok((
        ComplexMatrix::from_fn(r, q, |i, j| u[(i, order[j])]),
        order.iter().map(|&k| dec.singular_values[k]).collect(),
        ComplexMatrix::from_fn(q, c, |i, j| vt[(order[i], j)]),
    ))
}

/// Least-squares solution of `a · x = b` via pseudo-inverse.
pub fn lstsq(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Ok(pinv(a, 1e-13)?.matmul(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_c(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, c, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn svd_of_diagonal() {
        let s = svd(&Matrix::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(s.singular_values, vec![3.0, 1.0]);
        assert!((s.u[(0, 0)].abs() - 1.0).abs() < 1e-14);
        let z = svd(&Matrix::zeros(3, 2)).unwrap();
        assert!(z.singular_values.iter().all(|&v| v == 0.0));
        assert_eq!(z.u.shape(), (3, 3));
    }

    #[test]
    fn svd_invariants_on_random_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (r, c) in [(4, 3), (3, 4), (5, 5), (1, 4)] {
            let m = random(&mut rng, r, c);
            let s = svd(&m).unwrap();
            assert!(s.reconstruct().sub(&m).frobenius_norm() <= 1e-10 * (1.0 + m.frobenius_norm()));
            assert!(s.u.t_matmul(&s.u).max_abs_diff(&Matrix::identity(r)) < 1e-10);
            assert!(s.vt.matmul_t(&s.vt).max_abs_diff(&Matrix::identity(c)) < 1e-10);
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn numeric_rank_examples() {
        assert_eq!(numeric_rank(&Matrix::identity(3), DEFAULT_TOL).unwrap(), 3);
        let a = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![-1.0]]);
        let b = Matrix::from_rows(&[vec![0.5, 3.0, 1.0, 2.0]]);
        assert_eq!(numeric_rank(&a.matmul(&b), DEFAULT_TOL).unwrap(), 1);
        assert_eq!(numeric_rank(&Matrix::diag(&[1.0, 1e-14]), DEFAULT_TOL).unwrap(), 1);
        assert_eq!(numeric_rank(&Matrix::zeros(2, 3), DEFAULT_TOL).unwrap(), 0);
    }

    #[test]
    fn circulant_examples() {
        let c = circulant(&[0., 0., 0., 1.]);
        assert_eq!(
            c,
            Matrix::from_rows(&[
                vec![0., 0., 0., 1.],
                vec![1., 0., 0., 0.],
                vec![0., 1., 0., 0.],
                vec![0., 0., 1., 0.],
            ])
        );
        assert_eq!(circulant(&[2.5]), Matrix::from_rows(&[vec![2.5]]));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let w: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let (cv, cw) = (circulant(&v), circulant(&w));
        assert!(cv.matmul(&cw).max_abs_diff(&cw.matmul(&cv)) < 1e-14);
        let p = circulant(&[0., 0., 0., 0., 1.]);
        let c5 = circulant(&[1., 2., 3., 4., 5.]);
        assert_eq!(c5.matmul(&p), p.matmul(&c5));
    }

    #[test]
    fn realization_examples() {
        let i = ComplexMatrix::from_fn(1, 1, |_, _| Complex64::new(0.0, 1.0));
        assert_eq!(realize(&i), Matrix::from_rows(&[vec![0., -1.], vec![1., 0.]]));
        let r = realize(&ComplexMatrix::from_real(&Matrix::from_rows(&[vec![2., 3.]])));
        assert_eq!(r, Matrix::from_rows(&[vec![2., 0., 3., 0.], vec![0., 2., 0., 3.]]));
        let one = unrealize(&Matrix::identity(2), DEFAULT_TOL).unwrap();
        assert_eq!(one[(0, 0)], Complex64::new(1.0, 0.0));
        assert!(matches!(
            unrealize(&Matrix::diag(&[1.0, 2.0]), DEFAULT_TOL),
            Err(Error::NotRealization { row: 0, col: 0, .. })
        ));
    }

    #[test]
    fn realization_is_a_ring_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let z = random_c(&mut rng, 3, 3);
            let w = random_c(&mut rng, 3, 3);
            assert!(realize(&z.matmul(&w)).max_abs_diff(&realize(&z).matmul(&realize(&w))) < 1e-12);
            assert!(realize(&z.add(&w)).max_abs_diff(&realize(&z).add(&realize(&w))) < 1e-12);
            assert_eq!(unrealize(&realize(&z), DEFAULT_TOL).unwrap(), z);
        }
    }

    #[test]
    fn realization_doubles_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_c(&mut rng, 2, 1);
        let b = random_c(&mut rng, 1, 2);
        let z = a.matmul(&b);
        let (_, s, _) = complex_svd(&z).unwrap();
        let rz = rank_from_values(&s, DEFAULT_TOL, 2);
        assert_eq!(rz, 1);
        assert_eq!(numeric_rank(&realize(&z), DEFAULT_TOL).unwrap(), 2 * rz);
        let full = random_c(&mut rng, 2, 2);
        assert_eq!(numeric_rank(&realize(&full), DEFAULT_TOL).unwrap(), 4);
    }

    #[test]
    fn weighted_inner_matches_sqrt_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random(&mut rng, 3, 4);
        let b = random(&mut rng, 3, 4);
        assert!((weighted_inner(&a, &b, &Matrix::identity(4), DEFAULT_TOL).unwrap() - a.dot(&b)).abs() < 1e-14);
        let x = random(&mut rng, 4, 7);
        let w = x.matmul_t(&x);
        let s = psd_sqrt(&w, DEFAULT_TOL).unwrap();
        let lhs = weighted_inner(&a, &b, &w, DEFAULT_TOL).unwrap();
        let rhs = a.matmul(&s).dot(&b.matmul(&s));
        assert!((lhs - rhs).abs() < 1e-10);
        assert!(weighted_inner(&a, &a, &w, DEFAULT_TOL).unwrap() >= 0.0);
        let mut bad = w.clone();
        bad[(0, 1)] += 1.0;
        assert!(matches!(weighted_inner(&a, &b, &bad, DEFAULT_TOL), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn psd_sqrt_examples() {
        assert!(psd_sqrt(&Matrix::identity(3), DEFAULT_TOL).unwrap().max_abs_diff(&Matrix::identity(3)) < 1e-14);
        let s = psd_sqrt(&Matrix::diag(&[4.0, 9.0]), DEFAULT_TOL).unwrap();
        assert!(s.max_abs_diff(&Matrix::diag(&[2.0, 3.0])) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random(&mut rng, 5, 9);
        let w = x.matmul_t(&x);
        let s = psd_sqrt(&w, DEFAULT_TOL).unwrap();
        assert!(s.matmul(&s).sub(&w).frobenius_norm() <= 1e-8 * w.frobenius_norm());
        assert!(matches!(psd_sqrt(&Matrix::diag(&[1.0, -1.0]), DEFAULT_TOL), Err(Error::Indefinite { .. })));
    }

    #[test]
    fn inverse_sqrt_inverts_sqrt() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random(&mut rng, 4, 10);
        let e = PsdEigen::new(&x.matmul_t(&x), DEFAULT_TOL).unwrap();
        assert!(e.sqrt().matmul(&e.inv_sqrt(1e-14)).max_abs_diff(&Matrix::identity(4)) < 1e-10);
    }

    #[test]
    fn json_shape_is_validated() {
        let m: Matrix = serde_json::from_str(r#"{"rows":1,"cols":2,"data":[1.5,2]}"#).unwrap();
        assert_eq!(m, Matrix::from_rows(&[vec![1.5, 2.0]]));
        assert!(serde_json::from_str::<Matrix>(r#"{"rows":2,"cols":2,"data":[1]}"#).is_err());
        let back: Matrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rank_one_svd_reconstructs() {
        // nalgebra at machine epsilon mis-factors this matrix.
        let a = Matrix::from_vec(
            3,
            3,
            vec![
                0.4343049899216049, 0.8819834323172859, -2.4974136884214415, -1.7128600345537681,
                -3.478463769498786, 9.849576210065564, -2.715223363689593, -5.514055968473462,
                15.613534619586385,
            ],
        )
        .unwrap();
        let t = svd_thin(&a).unwrap();
        let rec = Matrix::from_fn(3, 3, |i, j| (0..3).map(|k| t.u[(i, k)] * t.s[k] * t.vt[(k, j)]).sum());
        assert!(rec.max_abs_diff(&a) < 1e-12);
        assert!((t.s[0] - a.frobenius_norm()).abs() < 1e-10);
    }
}
