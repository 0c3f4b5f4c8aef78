use super::{ProblemError, Result};
use crate::linalg::{self, DenseMatrix};
use crate::scalar::Scalar;
use crate::vecops::{dot, norm_sq};

/// Smooth convex `g` over scalar coordinates with Lipschitz metadata.
pub trait SmoothOracle<T: Scalar>: Sync {
    fn dimension(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;
    fn coordinate_gradient(&self, k: usize, x: &[T]) -> T {
        self.gradient(x)[k]
    }
    /// Global constant `L`.
    fn lipschitz(&self) -> T;
    /// Coordinate constants `L_k = L_kk`.
    fn coordinate_lipschitz(&self) -> Vec<T>;
    /// Entrywise bounds `|H_ij(x)| <= L_ij` when known.
    fn hessian_entry_bounds(&self) -> Option<DenseMatrix<T>> {
        None
    }
    /// The Hessian when it does not depend on `x`.
    fn constant_hessian(&self) -> Option<DenseMatrix<T>> {
        None
    }
    /// A known minimizer and the optimal value.
    fn known_optimum(&self) -> Option<(Vec<T>, T)> {
        None
    }
}

/// `g(x) = 1/2 x^T Q x - c^T x + offset` with `Q` symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticOracle<T> {
    q: DenseMatrix<T>,
    c: Vec<T>,
    offset: T,
    lipschitz: T,
    min_eig: T,
}

impl<T: Scalar> QuadraticOracle<T> {
    pub fn new(q: DenseMatrix<T>, c: Vec<T>, offset: T) -> Result<Self> {
        linalg::check_symmetric(&q)?;
        if c.len() != q.rows() {
            return Err(ProblemError::invalid(
                "c",
                format!("has length {}, Hessian is {}x{}", c.len(), q.rows(), q.cols()),
            ));
        }
        let (min_eig, max_eig) = linalg::sym_eig_extremes(&q, T::spectral_tol())?;
        let scale = T::one().max(max_eig.abs());
        if min_eig < -T::lit(1e-9) * scale {
            return Err(ProblemError::invalid(
                "q",
                format!("Hessian is not positive semidefinite (lambda_min = {min_eig:e})"),
            ));
        }
        let diag_max = (0..q.rows()).map(|i| q.get(i, i)).fold(T::zero(), T::max);
        Ok(Self {
            lipschitz: max_eig.max(diag_max),
            min_eig: min_eig.max(T::zero()),
            q,
            c,
            offset,
        })
    }

    pub fn hessian(&self) -> &DenseMatrix<T> {
        &self.q
    }

    pub fn linear_term(&self) -> &[T] {
        &self.c
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    /// `lambda_min(Q)`, clamped at zero.
    pub fn strong_convexity(&self) -> T {
        self.min_eig
    }
}

impl<T: Scalar> SmoothOracle<T> for QuadraticOracle<T> {
    fn dimension(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &[T]) -> T {
        let qx = self.q.matvec(x).expect("dimension checked by caller");
        T::lit(0.5) * dot(x, &qx) - dot(&self.c, x) + self.offset
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let mut g = self.q.matvec(x).expect("dimension checked by caller");
        for (gi, &ci) in g.iter_mut().zip(&self.c) {
            *gi -= ci;
        }
        g
    }

    fn coordinate_gradient(&self, k: usize, x: &[T]) -> T {
        dot(self.q.row(k), x) - self.c[k]
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }

    fn coordinate_lipschitz(&self) -> Vec<T> {
        (0..self.q.rows()).map(|i| self.q.get(i, i)).collect()
    }

    fn hessian_entry_bounds(&self) -> Option<DenseMatrix<T>> {
        let n = self.q.rows();
        Some(DenseMatrix::from_fn(n, n, |i, j| self.q.get(i, j).abs()))
    }

    fn constant_hessian(&self) -> Option<DenseMatrix<T>> {
        Some(self.q.clone())
    }

    fn known_optimum(&self) -> Option<(Vec<T>, T)> {
        let x = linalg::least_squares_min_norm(&self.q, &self.c).ok()?;
        let r = self.gradient(&x);
        let scale = T::one().max(self.c.iter().map(|v| v.abs()).fold(T::zero(), T::max));
        // `c` outside range(Q) means g is unbounded below; no optimum to report.
        if r.iter().any(|v| v.abs() > T::lit(1e3) * T::spectral_tol() * scale) {
            return None;
        }
        let v = self.value(&x);
        Some((x, v))
    }
}

/// `g(x) = sum_i log(1 + exp(-y_i a_i^T x)) + ridge/2 ||x||^2` with labels `y_i = +-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticOracle<T> {
    features: DenseMatrix<T>,
    labels: Vec<T>,
    ridge: T,
    lipschitz: T,
}

fn log1pexp<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> LogisticOracle<T> {
    pub fn new(features: DenseMatrix<T>, labels: Vec<T>, ridge: T) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(ProblemError::invalid(
                "labels",
                format!("has length {}, expected {}", labels.len(), features.rows()),
            ));
        }
        if let Some(i) = labels.iter().position(|&y| y != T::one() && y != -T::one()) {
            return Err(ProblemError::invalid(format!("labels[{i}]"), "must be +1 or -1"));
        }
        if !(ridge >= T::zero()) {
            return Err(ProblemError::invalid("ridge", "must be nonnegative"));
        }
        let sn = linalg::spectral_norm(&features, T::spectral_tol())?.value;
        Ok(Self {
            lipschitz: T::lit(0.25) * sn * sn + ridge,
            features,
            labels,
            ridge,
        })
    }

    fn margins(&self, x: &[T]) -> Vec<T> {
        let ax = self.features.matvec(x).expect("dimension checked by caller");
        ax.iter().zip(&self.labels).map(|(&v, &y)| y * v).collect()
    }
}

impl<T: Scalar> SmoothOracle<T> for LogisticOracle<T> {
    fn dimension(&self) -> usize {
        self.features.cols()
    }

    fn value(&self, x: &[T]) -> T {
        self.margins(x).into_iter().map(|m| log1pexp(-m)).sum::<T>()
            + T::lit(0.5) * self.ridge * norm_sq(x)
    }

    fn gradient(&self, x: &[T]) -> Vec<T> {
        let w: Vec<T> = self
            .margins(x)
            .into_iter()
            .zip(&self.labels)
            .map(|(m, &y)| -y * sigmoid(-m))
            .collect();
        let mut g = self.features.tr_matvec(&w).expect("dimension checked by caller");
        for (gi, &xi) in g.iter_mut().zip(x) {
            *gi += self.ridge * xi;
        }
        g
    }

    fn lipschitz(&self) -> T {
        self.lipschitz
    }

    fn coordinate_lipschitz(&self) -> Vec<T> {
        (0..self.dimension())
            .map(|k| T::lit(0.25) * norm_sq(&self.features.column(k)) + self.ridge)
            .collect()
    }

    fn hessian_entry_bounds(&self) -> Option<DenseMatrix<T>> {
        let n = self.dimension();
        let a = &self.features;
        Some(DenseMatrix::from_fn(n, n, |i, j| {
            let s: T = (0..a.rows()).map(|r| (a.get(r, i) * a.get(r, j)).abs()).sum();
            let d = if i == j { self.ridge } else { T::zero() };
            T::lit(0.25) * s + d
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_rejects_indefinite() {
        let q = DenseMatrix::from_diag(&[1.0f64, -1.0]);
        assert!(QuadraticOracle::new(q, vec![0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn quadratic_optimum() {
        let q = DenseMatrix::from_diag(&[2.0f64, 4.0]);
        let o = QuadraticOracle::new(q, vec![2.0, 4.0], 3.0).unwrap();
        let (x, v) = o.known_optimum().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!((v - 0.0).abs() < 1e-14);
        assert_eq!(o.coordinate_gradient(1, &[0.0, 0.0]), -4.0);
    }

    #[test]
    fn unbounded_quadratic_has_no_optimum() {
        let q = DenseMatrix::from_diag(&[1.0f64, 0.0]);
        let o = QuadraticOracle::new(q, vec![0.0, 1.0], 0.0).unwrap();
        assert!(o.known_optimum().is_none());
    }

    #[test]
    fn logistic_gradient_matches_differences() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0f64, -2.0, 0.5],
            vec![0.3, 0.1, -1.0],
            vec![-0.7, 0.4, 0.9],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap();
        let o = LogisticOracle::new(a, vec![1.0, -1.0, 1.0, -1.0], 0.1).unwrap();
        let x = [0.2, -0.4, 0.7];
        let g = o.gradient(&x);
        for k in 0..3 {
            let h = 1e-6;
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (o.value(&xp) - o.value(&xm)) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1.0));
        }
        let lk = o.coordinate_lipschitz();
        let bounds = o.hessian_entry_bounds().unwrap();
        for i in 0..3 {
            assert!(lk[i] <= o.lipschitz() + 1e-12);
            assert!((bounds.get(i, i) - lk[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn logistic_is_stable_for_large_margins() {
        let a = DenseMatrix::from_rows(&[vec![1.0f64]]).unwrap();
        let o = LogisticOracle::new(a, vec![1.0], 0.0).unwrap();
        assert!(o.value(&[-800.0]).is_finite());
        assert!((o.value(&[800.0])).abs() < 1e-300);
        assert!((o.gradient(&[-800.0])[0] + 1.0).abs() < 1e-15);
    }
}
