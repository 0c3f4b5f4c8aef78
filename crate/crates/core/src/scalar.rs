use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Real scalar the solvers and verifiers are generic over.
///
/// The associated tolerances are the thresholds used throughout the crate. For
/// `f64` they are the values the verification battery is calibrated against;
/// the `f32` values are loosened to what single precision can resolve.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Convergence tolerance for spectral computations.
    fn spectral_tol() -> Self;
    /// Relative slack applied to every per-cycle inequality check.
    fn check_slack() -> Self;
    /// Weighted-movement threshold that ends an inner proximal-gradient loop.
    fn inner_tol() -> Self;
    /// Allowed asymmetry `|m_ij - m_ji| / max(1, |m_ij|)` for symmetric inputs.
    fn symmetry_tol() -> Self;

    /// Converts an `f64` constant. Every literal used by the crate is representable.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }
}

impl Scalar for f64 {
    fn spectral_tol() -> Self {
        1e-10
    }
    fn check_slack() -> Self {
        1e-8
    }
    fn inner_tol() -> Self {
        1e-12
    }
    fn symmetry_tol() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn spectral_tol() -> Self {
        1e-5
    }
    fn check_slack() -> Self {
        1e-4
    }
    fn inner_tol() -> Self {
        1e-6
    }
    fn symmetry_tol() -> Self {
        1e-5
    }
}
