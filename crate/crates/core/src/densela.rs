//! Small dense linear algebra: a row-major `Matrix`, Householder thin QR,
//! one-sided Jacobi SVD, truncated SVD and a pivoted LU solve.
//!
//! Everything here is sized for matrices up to a few hundred rows; there is
//! no blocking and no parallelism.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
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
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::contract(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::contract("matrix entries must be finite"));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Convenience constructor for literals; panics on ragged or non-finite input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        let data = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Matrix::from_vec(r, c, data).expect("finite literal")
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
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Column vector from a slice.
    pub fn column_vector(values: &[f64]) -> Self {
        Matrix {
            rows: values.len(),
            cols: 1,
            data: values.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    /// First `k` columns.
    pub fn leading_columns(&self, k: usize) -> Matrix {
        Matrix::from_fn(self.rows, k, |i, j| self[(i, j)])
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {:?} * {:?}",
            self.shape(),
            rhs.shape()
        );
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self^T * rhs` without materializing the transpose.
    pub fn tr_matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows, "tr_matmul shape mismatch");
        let mut out = Matrix::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let lhs_row = &self.data[k * self.cols..(k + 1) * self.cols];
            let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
            for (i, &a) in lhs_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * rhs^T` without materializing the transpose.
    pub fn matmul_tr(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.cols, "matmul_tr shape mismatch");
        Matrix::from_fn(self.rows, rhs.rows, |i, j| {
            let a = &self.data[i * self.cols..(i + 1) * self.cols];
            let b = &rhs.data[j * rhs.cols..(j + 1) * rhs.cols];
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        })
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Matrix) {
        assert_eq!(self.shape(), other.shape(), "axpy shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    /// Frobenius inner product.
    pub fn inner(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "inner shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// ‖self^T self − I‖_F, the orthonormality defect of the columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.tr_matmul(self);
        (&gram - &Matrix::identity(self.cols)).frobenius_norm()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format!("{:>12.5e}", self[(i, j)]))
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&Matrix> for Matrix {
    fn add_assign(&mut self, rhs: &Matrix) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&Matrix> for Matrix {
    fn sub_assign(&mut self, rhs: &Matrix) {
        self.axpy(-1.0, rhs);
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: f64) -> Matrix {
        self.scale(rhs)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        self.scale(-1.0)
    }
}

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// m×k, orthonormal columns.
    pub left_vectors: Matrix,
    /// Nonincreasing, nonnegative; length k = min(m, n).
    pub singular_values: Vec<f64>,
    /// n×k, orthonormal columns.
    pub right_vectors: Matrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.left_vectors.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            for i in 0..us.rows() {
                us[(i, j)] *= s;
            }
        }
        us.matmul_tr(&self.right_vectors)
    }
}

fn check_finite(a: &Matrix) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(Error::contract("matrix contains non-finite entries"))
    }
}

/// Thin QR by Householder reflections: `a = q * r` with `q` m×r having
/// orthonormal columns and `r` upper triangular with a nonnegative diagonal.
pub fn qr_thin(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::contract(format!(
            "qr_thin needs rows >= cols, got {m}x{n}"
        )));
    }
    check_finite(a)?;

    let mut work = a.clone();
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    for k in 0..n {
        let norm = (k..m).map(|i| work[(i, k)].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let x0 = work[(k, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| work[(i, k)]).collect();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            reflectors.push(None);
            continue;
        }
        for j in k..n {
            let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * work[(k + t, j)]).sum();
            let f = 2.0 * dot / vtv;
            for (t, vi) in v.iter().enumerate() {
                work[(k + t, j)] -= f * vi;
            }
        }
        // exact zeros below the diagonal
        work[(k, k)] = alpha;
        for i in k + 1..m {
            work[(i, k)] = 0.0;
        }
        reflectors.push(Some(v));
    }

    let mut r = Matrix::from_fn(n, n, |i, j| if j >= i { work[(i, j)] } else { 0.0 });

    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of the identity.
    let mut q = Matrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
    for (k, refl) in reflectors.iter().enumerate().rev() {
        let Some(v) = refl else { continue };
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        for j in 0..n {
            let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * q[(k + t, j)]).sum();
            let f = 2.0 * dot / vtv;
            for (t, vi) in v.iter().enumerate() {
                q[(k + t, j)] -= f * vi;
            }
        }
    }

    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
            for i in 0..m {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }
    Ok((q, r))
}

const JACOBI_REL_TOL: f64 = 4.0 * f64::EPSILON;
const JACOBI_MAX_SWEEPS: usize = 80;

/// Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
///
/// A column pair is rotated while its Gram entry exceeds a few ulps of the
/// geometric mean of the column norms, which is stricter than any absolute
/// threshold tied to ‖A‖_F.
pub fn svd_full(a: &Matrix) -> Result<SvdResult> {
    check_finite(a)?;
    let (m, n) = a.shape();
    if m < n {
        let t = svd_full(&a.transpose())?;
        return Ok(SvdResult {
            left_vectors: t.right_vectors,
            singular_values: t.singular_values,
            right_vectors: t.left_vectors,
        });
    }

    // Column-major working copies.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = w[p].iter().map(|x| x * x).sum();
                let beta: f64 = w[q].iter().map(|x| x * x).sum();
                let gamma: f64 = w[p].iter().zip(&w[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= JACOBI_REL_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut w, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut left = Matrix::zeros(m, n);
    let mut right = Matrix::zeros(n, n);
    let mut sigma = Vec::with_capacity(n);
    let mut missing = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        right.set_column(k, &v[j]);
        if s > f64::MIN_POSITIVE * 1e10 {
            let col: Vec<f64> = w[j].iter().map(|x| x / s).collect();
            left.set_column(k, &col);
        } else {
            missing.push(k);
        }
    }
    complete_orthonormal(&mut left, &missing);

    Ok(SvdResult {
        left_vectors: left,
        singular_values: sigma,
        right_vectors: right,
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills the listed columns of `basis` with unit vectors orthogonal to all
/// other columns (Gram–Schmidt against canonical directions, applied twice).
fn complete_orthonormal(basis: &mut Matrix, missing: &[usize]) {
    let m = basis.rows();
    let mut filled: Vec<usize> = (0..basis.cols()).filter(|j| !missing.contains(j)).collect();
    for &k in missing {
        let mut best: Option<Vec<f64>> = None;
        for e in 0..m {
            let mut x = vec![0.0; m];
            x[e] = 1.0;
            for _ in 0..2 {
                for &j in &filled {
                    let col = basis.column(j);
                    let d: f64 = col.iter().zip(&x).map(|(a, b)| a * b).sum();
                    for (xi, ci) in x.iter_mut().zip(&col) {
                        *xi -= d * ci;
                    }
                }
            }
            let nrm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
            if nrm > 0.5 {
                best = Some(x.iter().map(|t| t / nrm).collect());
                break;
            }
            if best.is_none() && nrm > 1e-8 {
                best = Some(x.iter().map(|t| t / nrm).collect());
            }
        }
        let col = best.expect("a canonical direction outside a proper subspace exists");
        basis.set_column(k, &col);
        filled.push(k);
    }
}

/// Best rank-`r` approximation in the Frobenius norm together with the norm of
/// the discarded part, `sqrt(sum_{i>r} sigma_i^2)`.
pub fn truncated_svd(a: &Matrix, r: usize) -> Result<(Matrix, f64)> {
    let (m, n) = a.shape();
    if r == 0 || r > m.min(n) {
        return Err(Error::contract(format!(
            "rank {r} outside 1..={} for a {m}x{n} matrix",
            m.min(n)
        )));
    }
    let svd = svd_full(a)?;
    let truncated = SvdResult {
        left_vectors: svd.left_vectors.leading_columns(r),
        singular_values: svd.singular_values[..r].to_vec(),
        right_vectors: svd.right_vectors.leading_columns(r),
    };
    let discarded = svd.singular_values[r..]
        .iter()
        .map(|s| s * s)
        .sum::<f64>()
        .sqrt();
    Ok((truncated.reconstruct(), discarded))
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n {
        return Err(Error::contract(format!(
            "solve expects square a and matching b, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.max_abs();
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| lu[(i, k)].abs().total_cmp(&lu[(j, k)].abs()))
            .expect("nonempty range");
        if lu[(pivot, k)].abs() <= f64::EPSILON * scale * n as f64 || lu[(pivot, k)] == 0.0 {
            return Err(Error::Singular);
        }
        if pivot != k {
            for j in 0..n {
                lu.data.swap(k * n + j, pivot * n + j);
            }
            for j in 0..x.cols() {
                let (a_idx, b_idx) = (k * x.cols() + j, pivot * x.cols() + j);
                x.data.swap(a_idx, b_idx);
            }
        }
        for i in k + 1..n {
            let f = lu[(i, k)] / lu[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                lu[(i, j)] -= f * lu[(k, j)];
            }
            for j in 0..x.cols() {
                x[(i, j)] -= f * x[(k, j)];
            }
        }
    }
    for i in (0..n).rev() {
        for j in 0..x.cols() {
            let mut s = x[(i, j)];
            for t in i + 1..n {
                s -= lu[(i, t)] * x[(t, j)];
            }
            x[(i, j)] = s / lu[(i, i)];
        }
    }
    Ok(x)
}
