//! Complexity envelopes as explicit functions of the cycle index.
//!
//! `evaluate(kind, inputs, r)` bounds the gap `Delta^(r)` of the `r`-th iterate, `r >= 1`.
//! Statements of the form `Delta^(r+1) <= X / (r+1)` therefore evaluate to `X / r`.
//! `ln` is the natural logarithm and `ell = ln(2 N K)`.

use crate::linalg;
use crate::problems::{CompositeQuadraticProblem, ProblemConstants, SmoothOracle};
use crate::scalar::Scalar;
use crate::solvers::{Algorithm, Trajectory};
use crate::vecops::dist;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Gd,
    PriorCyclic,
    Thm1Uniform,
    Thm1Blockwise,
    Thm1Smooth,
    Thm2Case1,
    Thm2Case2,
    Thm2Case3,
    Thm2Scalar,
    Thm3,
    Coro1,
    PriorBeck,
}

impl BoundKind {
    pub const ALL: [BoundKind; 12] = [
        Self::Gd,
        Self::PriorCyclic,
        Self::Thm1Uniform,
        Self::Thm1Blockwise,
        Self::Thm1Smooth,
        Self::Thm2Case1,
        Self::Thm2Case2,
        Self::Thm2Case3,
        Self::Thm2Scalar,
        Self::Thm3,
        Self::Coro1,
        Self::PriorBeck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gd => "gd",
            Self::PriorCyclic => "prior_cyclic",
            Self::Thm1Uniform => "thm1_uniform",
            Self::Thm1Blockwise => "thm1_blockwise",
            Self::Thm1Smooth => "thm1_smooth",
            Self::Thm2Case1 => "thm2_case1",
            Self::Thm2Case2 => "thm2_case2",
            Self::Thm2Case3 => "thm2_case3",
            Self::Thm2Scalar => "thm2_scalar",
            Self::Thm3 => "thm3",
            Self::Coro1 => "coro1",
            Self::PriorBeck => "prior_beck",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Kinds whose hypothesis needs `K N >= 3`.
    pub fn needs_three_coordinates(self) -> bool {
        matches!(
            self,
            Self::Thm1Uniform
                | Self::Thm1Blockwise
                | Self::Thm1Smooth
                | Self::Thm2Case1
                | Self::Thm2Case2
                | Self::Thm2Case3
                | Self::Thm2Scalar
        )
    }

    /// Algorithms whose trajectories the bound covers.
    pub fn admits(self, algorithm: Algorithm) -> bool {
        use Algorithm::*;
        match self {
            Self::Gd => algorithm == Gd,
            Self::PriorCyclic => matches!(algorithm, Bcpg | ExactBcd | Cgd),
            Self::Thm1Uniform | Self::Thm1Blockwise | Self::Thm1Smooth => algorithm == Bcpg,
            Self::Thm2Case1 | Self::Thm2Case2 | Self::Thm2Case3 | Self::Thm2Scalar => {
                algorithm == ExactBcd
            }
            Self::Thm3 | Self::Coro1 | Self::PriorBeck => algorithm == Cgd,
        }
    }

    /// Whether the bound's numerator carries the unspecified prior constant `C`.
    pub fn up_to_constant(self) -> bool {
        self == Self::PriorCyclic
    }
}

impl std::fmt::Display for BoundKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("{kind} is inapplicable: {reason}")]
    Inapplicable { kind: BoundKind, reason: String },
    #[error("bounds are evaluated for r >= 1, got r = {0}")]
    BadCycle(usize),
    #[error("exact |H| = {exact:e} exceeds the estimate beta = {estimate:e}")]
    BetaExceedsEstimate { exact: f64, estimate: f64 },
    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, BoundError>;

/// Everything a bound formula may read.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs<T> {
    pub constants: ProblemConstants<T>,
    pub r0_upper: T,
    pub delta0: T,
    /// `|H(xi)| <= beta` for `Thm3`.
    pub beta: Option<T>,
    /// Realized `P_k` for the coordinate-descent bounds.
    pub stepsizes: Option<Vec<T>>,
    /// Constant of the prior cyclic bound.
    pub c_prior: T,
}

impl<T: Scalar> BoundInputs<T> {
    pub fn new(constants: ProblemConstants<T>, r0_upper: T, delta0: T) -> Self {
        Self {
            constants,
            r0_upper,
            delta0,
            beta: None,
            stepsizes: None,
            c_prior: T::one(),
        }
    }

    pub fn with_beta(mut self, beta: T) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn with_stepsizes(mut self, p: Vec<T>) -> Self {
        self.stepsizes = Some(p);
        self
    }

    pub fn with_c_prior(mut self, c: T) -> Self {
        self.c_prior = c;
        self
    }
}

/// A bound kind bound to its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSpec<T> {
    pub kind: BoundKind,
    pub inputs: BoundInputs<T>,
}

impl<T: Scalar> BoundSpec<T> {
    pub fn new(kind: BoundKind, inputs: BoundInputs<T>) -> Self {
        Self { kind, inputs }
    }

    pub fn evaluate(&self, r: usize) -> Result<T> {
        evaluate(self.kind, &self.inputs, r)
    }

    pub fn numerator(&self) -> Result<T> {
        numerator(self.kind, &self.inputs)
    }
}

fn inapplicable<T>(kind: BoundKind, reason: impl Into<String>) -> Result<T> {
    Err(BoundError::Inapplicable {
        kind,
        reason: reason.into(),
    })
}

fn step_extremes<T: Scalar>(kind: BoundKind, inp: &BoundInputs<T>) -> Result<(T, T)> {
    let Some(p) = inp.stepsizes.as_ref().filter(|p| !p.is_empty()) else {
        return inapplicable(kind, "stepsizes P_k are required");
    };
    let pmax = p.iter().copied().fold(T::zero(), T::max);
    let pmin = p.iter().copied().fold(T::infinity(), T::min);
    if !(pmin > T::zero()) {
        return inapplicable(kind, "stepsizes must be positive");
    }
    Ok((pmin, pmax))
}

/// `X` such that the bound is `X / (r + 4)` for `Gd` and `X / r` otherwise.
pub fn numerator<T: Scalar>(kind: BoundKind, inp: &BoundInputs<T>) -> Result<T> {
    let c = &inp.constants;
    let kn = c.total_dimension();
    if kind.needs_three_coordinates() && kn < 3 {
        return inapplicable(kind, format!("needs K N >= 3, have K N = {kn}"));
    }
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let l = c.lipschitz;
    let lmax = c.l_max;
    let lmin = c.l_min;
    let r2 = inp.r0_upper * inp.r0_upper;
    let ell2 = c.log_2nk() * c.log_2nk();
    let k = T::from_usize_lossy(c.block_count);
    let need_lmin = |kind| {
        if lmin > T::zero() {
            Ok(())
        } else {
            inapplicable(kind, "needs L_min > 0")
        }
    };
    Ok(match kind {
        BoundKind::Gd => two * r2 * l,
        BoundKind::PriorCyclic => {
            need_lmin(kind)?;
            inp.c_prior * lmax * (T::one() + k * l * l / (lmin * lmin)) * r2
        }
        BoundKind::Thm1Uniform => three * inp.delta0.max(T::lit(4.0) * ell2 * l * r2),
        BoundKind::Thm1Blockwise => {
            need_lmin(kind)?;
            three * inp.delta0.max(two * ell2 * (lmax + l * l / lmin) * r2)
        }
        BoundKind::Thm1Smooth => {
            need_lmin(kind)?;
            three * l.max(two * ell2 * (lmax + l * l / lmin)) * r2
        }
        BoundKind::Thm2Case1 | BoundKind::Thm2Case2 => {
            let Some(rank) = c.rank.as_ref() else {
                return inapplicable(kind, "rank information is unavailable");
            };
            let (s, name) = if kind == BoundKind::Thm2Case1 {
                (rank.sigma_min, "sigma_min")
            } else {
                (rank.gamma_min, "gamma_min")
            };
            if !(s > T::zero()) {
                return inapplicable(kind, format!("needs {name} > 0"));
            }
            three * inp.delta0.max(two * r2 * ell2 * (l * l + lmax * lmax) / (s * s))
        }
        BoundKind::Thm2Case3 => three * inp.delta0.max(two * r2 * lmax * (T::one() + k * k)),
        BoundKind::Thm2Scalar => {
            if c.block_size != 1 {
                return inapplicable(kind, "needs scalar blocks (N = 1)");
            }
            need_lmin(kind)?;
            three * inp.delta0.max(two * r2 * ell2 * (l * l / lmin + lmax * lmax / lmin))
        }
        BoundKind::Thm3 => {
            let (pmin, pmax) = step_extremes(kind, inp)?;
            let Some(beta) = inp.beta else {
                return inapplicable(kind, "beta is required");
            };
            two * (pmax + beta * beta / pmin) * r2
        }
        BoundKind::Coro1 => {
            let (pmin, pmax) = step_extremes(kind, inp)?;
            if pmin < lmax * (T::one() - T::lit(1e-12)) {
                return inapplicable(kind, "needs P_k >= L_max for every k");
            }
            let sum_l: T = c.block_lipschitz.iter().copied().sum();
            let b2 = (k * l * l).min(sum_l * sum_l);
            two * (pmax + b2 / pmin) * r2
        }
        BoundKind::PriorBeck => {
            let (pmin, pmax) = step_extremes(kind, inp)?;
            T::lit(4.0) * (pmax + (pmax / pmin) * (k * l * l / pmin)) * r2
        }
    })
}

/// Problem-constant factor of the rate term, so that the rate term of `numerator`
/// equals `factor * R0^2` times a kind-specific multiple of `log^2(2NK)`.
pub fn rate_factor<T: Scalar>(kind: BoundKind, inp: &BoundInputs<T>) -> Result<T> {
    numerator(kind, inp)?;
    let c = &inp.constants;
    let (l, lmax, lmin) = (c.lipschitz, c.l_max, c.l_min);
    let k = T::from_usize_lossy(c.block_count);
    Ok(match kind {
        BoundKind::Gd | BoundKind::Thm1Uniform => l,
        BoundKind::PriorCyclic => lmax * (T::one() + k * l * l / (lmin * lmin)),
        BoundKind::Thm1Blockwise | BoundKind::Thm1Smooth => lmax + l * l / lmin,
        BoundKind::Thm2Case1 | BoundKind::Thm2Case2 => {
            let rank = c.rank.as_ref().expect("checked by numerator");
            let s = if kind == BoundKind::Thm2Case1 { rank.sigma_min } else { rank.gamma_min };
            (l * l + lmax * lmax) / (s * s)
        }
        BoundKind::Thm2Case3 => lmax * (T::one() + k * k),
        BoundKind::Thm2Scalar => (l * l + lmax * lmax) / lmin,
        BoundKind::Thm3 | BoundKind::Coro1 | BoundKind::PriorBeck => {
            let (pmin, pmax) = step_extremes(kind, inp)?;
            match kind {
                BoundKind::Thm3 => {
                    let beta = inp.beta.expect("checked by numerator");
                    pmax + beta * beta / pmin
                }
                BoundKind::Coro1 => {
                    let sum_l: T = c.block_lipschitz.iter().copied().sum();
                    pmax + (k * l * l).min(sum_l * sum_l) / pmin
                }
                _ => pmax + (pmax / pmin) * (k * l * l / pmin),
            }
        }
    })
}

/// Bound on `Delta^(r)`.
pub fn evaluate<T: Scalar>(kind: BoundKind, inp: &BoundInputs<T>, r: usize) -> Result<T> {
    if r == 0 {
        return Err(BoundError::BadCycle(r));
    }
    let x = numerator(kind, inp)?;
    let denom = match kind {
        BoundKind::Gd => T::from_usize_lossy(r + 4),
        _ => T::from_usize_lossy(r),
    };
    Ok(x / denom)
}

/// `beta` estimate `min{sqrt(K) L, sum_k L_k}` and, for constant Hessians,
/// the exact `|strict_lower(Q)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEstimate<T> {
    pub estimate: T,
    pub exact: Option<T>,
}

pub fn beta_from_constants<T: Scalar>(lipschitz: T, coordinate: &[T]) -> T {
    let k = T::from_usize_lossy(coordinate.len());
    let sum: T = coordinate.iter().copied().sum();
    (k.sqrt() * lipschitz).min(sum)
}

pub fn beta_estimate<T: Scalar, O: SmoothOracle<T> + ?Sized>(o: &O) -> Result<BetaEstimate<T>> {
    let estimate = beta_from_constants(o.lipschitz(), &o.coordinate_lipschitz());
    let exact = match o.constant_hessian() {
        None => None,
        Some(q) => {
            let h = linalg::strict_lower_truncate(&q).map_err(|e| BoundError::Numerical(e.to_string()))?;
            let v = linalg::spectral_norm(&h, T::spectral_tol())
                .map_err(|e| BoundError::Numerical(e.to_string()))?
                .value;
            let slack = T::spectral_tol() * T::one().max(estimate);
            if v > estimate + slack {
                return Err(BoundError::BetaExceedsEstimate {
                    exact: v.as_f64(),
                    estimate: estimate.as_f64(),
                });
            }
            Some(v)
        }
    };
    Ok(BetaEstimate { estimate, exact })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum R0Method {
    /// `max(|x0 - x*|, sqrt(2 Delta0 / mu))` with `mu = lambda_min > 0`.
    StrongConvexity,
    /// `sqrt(2 Delta0 / mu+)` with `mu+` the smallest nonzero curvature of a smooth quadratic.
    PositiveCurvature,
    /// Diameter of a compact box feasible set.
    BoxDiameter,
    /// Twice the largest observed distance to `x*`; not a certified bound.
    Heuristic,
}

/// Upper estimate of the level-set radius measured to the optimal set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R0Estimate<T> {
    pub value: T,
    pub certified: bool,
    pub method: R0Method,
}

fn certified_candidates<T: Scalar>(
    smooth: bool,
    mu: T,
    mu_plus: T,
    init_dist: T,
    delta0: T,
    diameter: Option<T>,
) -> Option<R0Estimate<T>> {
    let two = T::lit(2.0);
    let d0 = delta0.max(T::zero());
    let mut best: Option<R0Estimate<T>> = None;
    let mut offer = |value: T, method| {
        if value.is_finite() && best.is_none_or(|b: R0Estimate<T>| value < b.value) {
            best = Some(R0Estimate {
                value,
                certified: true,
                method,
            });
        }
    };
    if mu > T::zero() {
        offer(init_dist.max((two * d0 / mu).sqrt()), R0Method::StrongConvexity);
    } else if smooth && mu_plus > T::zero() {
        offer((two * d0 / mu_plus).sqrt(), R0Method::PositiveCurvature);
    }
    if let Some(d) = diameter {
        offer(d, R0Method::BoxDiameter);
    }
    best
}

fn heuristic<T: Scalar>(x_star: &[T], x0: &[T], trajectory: Option<&Trajectory<T>>) -> R0Estimate<T> {
    let mut worst = dist(x0, x_star);
    if let Some(t) = trajectory {
        for c in &t.cycles {
            worst = worst.max(dist(&c.x, x_star));
        }
    }
    R0Estimate {
        value: T::lit(2.0) * worst,
        certified: false,
        method: R0Method::Heuristic,
    }
}

/// `R_0` estimate for a composite problem.
pub fn r0_upper_estimate<T: Scalar>(
    p: &CompositeQuadraticProblem<T>,
    constants: &ProblemConstants<T>,
    x0: &[T],
    x_star: &[T],
    f_star: T,
    trajectory: Option<&Trajectory<T>>,
) -> Result<R0Estimate<T>> {
    if x0.len() != p.dimension() || x_star.len() != p.dimension() {
        return Err(BoundError::Numerical("x0 or x* has the wrong dimension".into()));
    }
    let delta0 = p.objective(x0).map_err(|e| BoundError::Numerical(e.to_string()))? - f_star;
    Ok(certified_candidates(
        p.is_smooth(),
        constants.strong_convexity,
        constants.positive_curvature,
        dist(x0, x_star),
        delta0,
        p.box_diameter(),
    )
    .unwrap_or_else(|| heuristic(x_star, x0, trajectory)))
}

/// `R_0` estimate for a smooth oracle; constant Hessians give a certified value.
pub fn r0_upper_estimate_oracle<T: Scalar, O: SmoothOracle<T> + ?Sized>(
    o: &O,
    x0: &[T],
    x_star: &[T],
    f_star: T,
    trajectory: Option<&Trajectory<T>>,
) -> Result<R0Estimate<T>> {
    let delta0 = o.value(x0) - f_star;
    if let Some(q) = o.constant_hessian() {
        let eig = linalg::symmetric_eigen(&q).map_err(|e| BoundError::Numerical(e.to_string()))?;
        let (_, top) = eig.max();
        let thr = T::lit(linalg::RANK_RTOL) * top.abs().max(T::one());
        let mu_plus = eig
            .values
            .iter()
            .copied()
            .filter(|&v| v > thr)
            .fold(T::infinity(), T::min);
        let mu = if eig.values.iter().all(|&v| v > thr) { mu_plus } else { T::zero() };
        let mu_plus = if mu_plus.is_finite() { mu_plus } else { T::zero() };
        if let Some(est) = certified_candidates(true, mu, mu_plus, dist(x0, x_star), delta0, None) {
            return Ok(est);
        }
    }
    Ok(heuristic(x_star, x0, trajectory))
}

/// Bound curves `r = 1..=r_max`; inapplicable kinds keep their reason.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundColumn<T> {
    pub kind: BoundKind,
    pub values: std::result::Result<Vec<T>, BoundError>,
    pub numerator: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T> {
    pub r_max: usize,
    pub columns: Vec<BoundColumn<T>>,
}

pub fn bound_report<T: Scalar>(kinds: &[BoundKind], inputs: &BoundInputs<T>, r_max: usize) -> BoundReport<T> {
    let columns = kinds
        .iter()
        .map(|&kind| {
            let values: Result<Vec<T>> = (1..=r_max).map(|r| evaluate(kind, inputs, r)).collect();
            BoundColumn {
                kind,
                numerator: numerator(kind, inputs).ok(),
                values,
            }
        })
        .collect();
    BoundReport { r_max, columns }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_table1_diagonal, make_table1_full};

    fn consts(k: usize, l: f64, lk: f64) -> ProblemConstants<f64> {
        ProblemConstants::from_lipschitz(l, vec![lk; k], 1)
    }

    #[test]
    fn gd_example() {
        let inp = BoundInputs::new(consts(10, 18.0, 4.0), 1.0, 0.0);
        assert!((evaluate(BoundKind::Gd, &inp, 1).unwrap() - 7.2).abs() < 1e-15);
    }

    #[test]
    fn coro1_and_beck_on_full_hessian() {
        for k in [2usize, 10, 100] {
            let l = 3.0;
            let inp = BoundInputs::new(consts(k, l, l / k as f64), 1.0, 0.0).with_stepsizes(vec![l; k]);
            let c = evaluate(BoundKind::Coro1, &inp, 1).unwrap();
            assert!((c - 4.0 * l).abs() < 1e-12);
            let b = evaluate(BoundKind::PriorBeck, &inp, 1).unwrap();
            assert!((b - 4.0 * l * (1.0 + k as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn thm1_uniform_closed_form() {
        let inp = BoundInputs::new(consts(10, 2.0, 1.0), 1.5, 0.1);
        let ell = 20f64.ln();
        for r in 1..5 {
            let want = 12.0 * ell * ell * 2.0 * 2.25 / r as f64;
            assert!((evaluate(BoundKind::Thm1Uniform, &inp, r).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn inapplicable_signals() {
        let inp = BoundInputs::new(consts(2, 1.0, 1.0), 1.0, 0.0);
        assert!(matches!(
            evaluate(BoundKind::Thm1Uniform, &inp, 1),
            Err(BoundError::Inapplicable { .. })
        ));
        assert!(matches!(evaluate(BoundKind::Gd, &inp, 0), Err(BoundError::BadCycle(0))));
        let inp = BoundInputs::new(consts(4, 1.0, 1.0), 1.0, 0.0);
        assert!(evaluate(BoundKind::Thm2Case1, &inp, 1).is_err());
        assert!(evaluate(BoundKind::Thm3, &inp, 1).is_err());
        let inp = inp.with_stepsizes(vec![0.5; 4]);
        assert!(evaluate(BoundKind::Coro1, &inp, 1).is_err());
    }

    #[test]
    fn beta_examples() {
        let o = make_table1_diagonal(9, 2.0f64).unwrap();
        let b = beta_estimate(&o).unwrap();
        assert!((b.estimate - 6.0).abs() < 1e-12);
        assert_eq!(b.exact, Some(0.0));
        let o = make_table1_full(9, 2.0f64).unwrap();
        let b = beta_estimate(&o).unwrap();
        assert!((b.estimate - 2.0).abs() < 1e-12);
        assert!(b.exact.unwrap() <= b.estimate);
    }

    #[test]
    fn r0_strongly_convex_example() {
        let o = make_table1_diagonal(1, 1.0f64).unwrap();
        let est = r0_upper_estimate_oracle(&o, &[3.0], &[0.0], 0.0, None).unwrap();
        assert!(est.certified);
        assert!((est.value - 3.0).abs() < 1e-12);
        let est = r0_upper_estimate_oracle(&o, &[0.0], &[0.0], 0.0, None).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in BoundKind::ALL {
            assert_eq!(BoundKind::from_name(k.name()), Some(k));
            let s = serde_json::to_string(&k).unwrap();
            assert_eq!(s, format!("\"{}\"", k.name()));
        }
    }
}
