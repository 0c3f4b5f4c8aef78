//! Dense real linear algebra: spectral norms, extreme eigenvalues, triangular
//! truncation and minimum-norm least squares.
//!
//! Matrices up to [`DENSE_EIGEN_LIMIT`] on the relevant side go through a cyclic
//! Jacobi eigen-solve; larger ones fall back to power iteration from the
//! normalized all-ones start vector. Both paths are deterministic.

use crate::scalar::Scalar;
use crate::vecops::{dot, norm};
use thiserror::Error;

/// Largest Gram dimension handled by the dense Jacobi path.
pub const DENSE_EIGEN_LIMIT: usize = 64;
/// Iteration cap for power iteration.
pub const POWER_ITERATION_CAP: usize = 50_000;
/// Sweep cap for both Jacobi variants.
pub const JACOBI_SWEEP_CAP: usize = 100;
/// Singular values at or below `RANK_RTOL * sigma_max` count as zero.
pub const RANK_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("entries length {len} does not match shape {rows}x{cols}")]
    Shape { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row}, {col}): gap {gap:e}")]
    Asymmetric { row: usize, col: usize, gap: f64 },
    #[error("empty matrix")]
    Empty,
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("{method} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: idx / cols.max(1),
                col: idx % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(LinalgError::Dimension(format!(
                "row {bad} has {} entries, expected {cols}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Horizontal concatenation `[M_1, ..., M_K]`.
    pub fn hconcat(blocks: &[DenseMatrix<T>]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if let Some(bad) = blocks.iter().position(|b| b.rows != rows) {
            return Err(LinalgError::Dimension(format!(
                "block {bad} has {} rows, expected {rows}",
                blocks[bad].rows
            )));
        }
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for b in blocks {
                data.extend_from_slice(b.row(i));
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Columns `start..start + width` as a new matrix.
    pub fn column_block(&self, start: usize, width: usize) -> Self {
        Self::from_fn(self.rows, width, |i, j| self.get(i, start + j))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        })
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).collect(),
        })
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `M x`
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(LinalgError::Dimension(format!(
                "vector of length {} for {}x{} matrix",
                x.len(),
                self.rows,
                self.cols
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `M^T y`
    pub fn tr_matvec(&self, y: &[T]) -> Result<Vec<T>> {
        if y.len() != self.rows {
            return Err(LinalgError::Dimension(format!(
                "vector of length {} for transpose of {}x{} matrix",
                y.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![T::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(self.row(i)) {
                *o += m * yi;
            }
        }
        Ok(out)
    }

    /// `M^T M`
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..n {
                let ra = r[a];
                if ra == T::zero() {
                    continue;
                }
                for b in a..n {
                    out.data[a * n + b] += ra * r[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                out.data[a * n + b] = out.data[b * n + a];
            }
        }
        out
    }

    /// `M M^T`
    pub fn outer_gram(&self) -> Self {
        Self::from_fn(self.rows, self.rows, |i, j| dot(self.row(i), self.row(j)))
    }

    pub fn frobenius_norm(&self) -> T {
        norm(&self.data)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Outcome of an iterative spectral computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralResult<T> {
    pub value: T,
    pub iterations: usize,
    /// Eigen-residual `||G v - lambda v||` of the Gram pair behind `value`.
    pub residual: T,
}

fn check_tol<T: Scalar>(tol: T) -> Result<()> {
    if tol > T::zero() && tol.is_finite() {
        Ok(())
    } else {
        Err(LinalgError::BadTolerance)
    }
}

/// Largest singular value `||M||_2`.
pub fn spectral_norm<T: Scalar>(m: &DenseMatrix<T>, tol: T) -> Result<SpectralResult<T>> {
    check_tol(tol)?;
    if m.rows == 0 || m.cols == 0 {
        return Err(LinalgError::Empty);
    }
    let g = if m.cols <= m.rows { m.gram() } else { m.outer_gram() };
    if g.rows <= DENSE_EIGEN_LIMIT {
        let eig = symmetric_eigen(&g)?;
        let (idx, lambda) = eig.max();
        let v = eig.vectors.column(idx);
        let gv = g.matvec(&v)?;
        let residual = gv
            .iter()
            .zip(&v)
            .map(|(&a, &b)| (a - lambda * b) * (a - lambda * b))
            .sum::<T>()
            .sqrt();
        Ok(SpectralResult {
            value: lambda.max(T::zero()).sqrt(),
            iterations: eig.sweeps,
            residual,
        })
    } else {
        let p = power_iteration(&g, tol)?;
        Ok(SpectralResult {
            value: p.value.max(T::zero()).sqrt(),
            ..p
        })
    }
}

/// Power iteration for the dominant eigenvalue of a symmetric positive
/// semidefinite matrix, started from the normalized all-ones vector.
///
/// Stops when `||G v - lambda v|| <= tol * max(1, lambda)`.
pub fn power_iteration<T: Scalar>(g: &DenseMatrix<T>, tol: T) -> Result<SpectralResult<T>> {
    check_tol(tol)?;
    if !g.is_square() {
        return Err(LinalgError::NotSquare {
            rows: g.rows,
            cols: g.cols,
        });
    }
    let n = g.rows;
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let mut v = vec![T::one() / T::from_usize_lossy(n).sqrt(); n];
    let mut residual = T::infinity();
    for it in 1..=POWER_ITERATION_CAP {
        let w = g.matvec(&v)?;
        let lambda = dot(&v, &w);
        residual = w
            .iter()
            .zip(&v)
            .map(|(&a, &b)| (a - lambda * b) * (a - lambda * b))
            .sum::<T>()
            .sqrt();
        if residual <= tol * lambda.abs().max(T::one()) {
            return Ok(SpectralResult {
                value: lambda,
                iterations: it,
                residual,
            });
        }
        let wn = norm(&w);
        if wn == T::zero() {
            return Ok(SpectralResult {
                value: T::zero(),
                iterations: it,
                residual: T::zero(),
            });
        }
        for (vi, wi) in v.iter_mut().zip(w) {
            *vi = wi / wn;
        }
    }
    Err(LinalgError::NoConvergence {
        method: "power iteration",
        iterations: POWER_ITERATION_CAP,
        residual: residual.as_f64(),
    })
}

/// Full eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Unsorted eigenvalues.
    pub values: Vec<T>,
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: DenseMatrix<T>,
    pub sweeps: usize,
}

impl<T: Scalar> SymmetricEigen<T> {
    pub fn max(&self) -> (usize, T) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, T::neg_infinity()), |b, (i, v)| if v > b.1 { (i, v) } else { b })
    }

    pub fn min(&self) -> (usize, T) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, T::infinity()), |b, (i, v)| if v < b.1 { (i, v) } else { b })
    }
}

/// Cyclic Jacobi eigen-solve. The input is symmetrized as `(M + M^T)/2`.
pub fn symmetric_eigen<T: Scalar>(m: &DenseMatrix<T>) -> Result<SymmetricEigen<T>> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    let half = T::lit(0.5);
    let mut a = DenseMatrix::from_fn(n, n, |i, j| half * (m.get(i, j) + m.get(j, i)));
    let mut v = DenseMatrix::<T>::identity(n);
    let scale = a.frobenius_norm();
    let target = T::epsilon() * scale;
    let off = |a: &DenseMatrix<T>| {
        let mut s = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                s += a.get(i, j) * a.get(i, j);
            }
        }
        (s + s).sqrt()
    };
    for sweep in 0..=JACOBI_SWEEP_CAP {
        if off(&a) <= target || scale == T::zero() {
            return Ok(SymmetricEigen {
                values: (0..n).map(|i| a.get(i, i)).collect(),
                vectors: v,
                sweeps: sweep,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
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
                a.set(p, q, T::zero());
                a.set(q, p, T::zero());
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    Err(LinalgError::NoConvergence {
        method: "cyclic Jacobi",
        iterations: JACOBI_SWEEP_CAP,
        residual: off(&a).as_f64(),
    })
}

/// Rejects matrices with `|m_ij - m_ji| > symmetry_tol * max(1, |m_ij|)`.
pub fn check_symmetric<T: Scalar>(m: &DenseMatrix<T>) -> Result<()> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    for i in 0..m.rows {
        for j in (i + 1)..m.cols {
            let gap = (m.get(i, j) - m.get(j, i)).abs();
            if gap > T::symmetry_tol() * m.get(i, j).abs().max(T::one()) {
                return Err(LinalgError::Asymmetric {
                    row: i,
                    col: j,
                    gap: gap.as_f64(),
                });
            }
        }
    }
    Ok(())
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_eig_extremes<T: Scalar>(m: &DenseMatrix<T>, tol: T) -> Result<(T, T)> {
    check_tol(tol)?;
    check_symmetric(m)?;
    if m.rows == 0 {
        return Err(LinalgError::Empty);
    }
    if m.rows <= DENSE_EIGEN_LIMIT {
        let eig = symmetric_eigen(m)?;
        return Ok((eig.min().1, eig.max().1));
    }
    // Gershgorin shift makes both shifted matrices positive semidefinite.
    let n = m.rows;
    let rho = (0..n)
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<T>())
        .fold(T::zero(), T::max);
    let up = DenseMatrix::from_fn(n, n, |i, j| m.get(i, j) + if i == j { rho } else { T::zero() });
    let down = DenseMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { rho } else { T::zero() };
        d - m.get(i, j)
    });
    let hi = power_iteration(&up, tol)?.value - rho;
    let lo = rho - power_iteration(&down, tol)?.value;
    Ok((lo, hi.max(lo)))
}

/// Hadamard product with the lower-triangular all-ones pattern (diagonal kept).
pub fn triangular_truncate<T: Scalar>(z: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !z.is_square() {
        return Err(LinalgError::NotSquare {
            rows: z.rows,
            cols: z.cols,
        });
    }
    Ok(DenseMatrix::from_fn(z.rows, z.cols, |i, j| {
        if j <= i {
            z.get(i, j)
        } else {
            T::zero()
        }
    }))
}

/// Keeps only the strictly lower-triangular entries.
pub fn strict_lower_truncate<T: Scalar>(z: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !z.is_square() {
        return Err(LinalgError::NotSquare {
            rows: z.rows,
            cols: z.cols,
        });
    }
    Ok(DenseMatrix::from_fn(z.rows, z.cols, |i, j| {
        if j < i {
            z.get(i, j)
        } else {
            T::zero()
        }
    }))
}

/// Thin singular value decomposition `M = U diag(sigma) V^T` with `p = min(rows, cols)`.
///
/// `u` is `rows x p`, `v` is `cols x p`; columns of `u` belonging to zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: DenseMatrix<T>,
    pub sigma: Vec<T>,
    pub v: DenseMatrix<T>,
}

impl<T: Scalar> Svd<T> {
    pub fn sigma_max(&self) -> T {
        self.sigma.iter().copied().fold(T::zero(), T::max)
    }

    /// Number of singular values above `RANK_RTOL * sigma_max`.
    pub fn rank(&self) -> usize {
        let thr = self.threshold();
        self.sigma.iter().filter(|&&s| s > thr).count()
    }

    pub fn threshold(&self) -> T {
        T::lit(RANK_RTOL) * self.sigma_max()
    }
}

/// One-sided (Hestenes) Jacobi SVD; wide matrices are decomposed through their transpose.
pub fn svd<T: Scalar>(m: &DenseMatrix<T>) -> Result<Svd<T>> {
    if m.rows == 0 || m.cols == 0 {
        return Err(LinalgError::Empty);
    }
    if m.cols > m.rows {
        let t = hestenes(&m.transpose())?;
        return Ok(Svd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    hestenes(m)
}

fn hestenes<T: Scalar>(m: &DenseMatrix<T>) -> Result<Svd<T>> {
    let (rows, cols) = (m.rows, m.cols);
    let mut u: Vec<Vec<T>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<T>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let eps = T::epsilon();
    // Columns below this squared norm are numerically zero and never rotated.
    let negligible = {
        let f = T::from_usize_lossy(cols) * eps * m.frobenius_norm();
        f * f
    };
    let mut converged = false;
    let mut worst = T::zero();
    for _ in 0..JACOBI_SWEEP_CAP {
        let mut rotated = false;
        worst = T::zero();
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = dot(&u[p], &u[p]);
                let beta = dot(&u[q], &u[q]);
                let gamma = dot(&u[p], &u[q]);
                if gamma == T::zero() || alpha <= negligible || beta <= negligible {
                    continue;
                }
                let coupling = gamma.abs() / (alpha * beta).sqrt();
                worst = worst.max(coupling);
                if coupling <= eps {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (gamma + gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = u.split_at_mut(q);
                for (a, b) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
                let (lo, hi) = v.split_at_mut(q);
                for (a, b) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence {
            method: "one-sided Jacobi SVD",
            iterations: JACOBI_SWEEP_CAP,
            residual: worst.as_f64(),
        });
    }
    let sigma: Vec<T> = u.iter().map(|c| norm(c)).collect();
    for (col, &s) in u.iter_mut().zip(&sigma) {
        if s > T::zero() {
            col.iter_mut().for_each(|x| *x /= s);
        }
    }
    Ok(Svd {
        u: DenseMatrix::from_fn(rows, cols, |i, j| u[j][i]),
        sigma,
        v: DenseMatrix::from_fn(cols, cols, |i, j| v[j][i]),
    })
}

/// Minimum-Euclidean-norm minimizer of `||M x - rhs||^2`.
pub fn least_squares_min_norm<T: Scalar>(m: &DenseMatrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    if rhs.len() != m.rows {
        return Err(LinalgError::Dimension(format!(
            "rhs of length {} for {}x{} matrix",
            rhs.len(),
            m.rows,
            m.cols
        )));
    }
    let dec = svd(m)?;
    solve_with_svd(&dec, rhs)
}

/// Pseudo-inverse solve with a precomputed decomposition.
pub fn solve_with_svd<T: Scalar>(dec: &Svd<T>, rhs: &[T]) -> Result<Vec<T>> {
    let coeffs = dec.u.tr_matvec(rhs)?;
    let thr = dec.threshold();
    let n = dec.v.rows();
    let mut x = vec![T::zero(); n];
    for (j, (&s, &c)) in dec.sigma.iter().zip(&coeffs).enumerate() {
        if s > thr {
            let w = c / s;
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += dec.v.get(i, j) * w;
            }
        }
    }
    Ok(x)
}
