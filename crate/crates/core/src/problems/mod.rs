//! Composite quadratic problems `1/2 ||sum_k A_k x_k - b||^2 + sum_k h_k(x_k)`,
//! smooth convex oracles, proximal operators and the built-in instance generators.

mod file;
mod generators;
mod oracle;

pub use file::{
    load_problem_spec, BuiltProblem, ExplicitParams, LassoParams, ProblemSpec, RankCaseParams,
    RankCaseSpec, Table1Params, TermSpec, TermsSpec, ToeplitzParams,
};
pub use generators::{
    make_lasso, make_rank_case_instance, make_table1_diagonal, make_table1_full,
    table1_diagonal_problem, table1_full_problem, make_toeplitz_instance, toeplitz_matrix,
    toeplitz_start, LassoSpec,
};
pub use oracle::{LogisticOracle, QuadraticOracle, SmoothOracle};

use crate::linalg::{self, DenseMatrix, LinalgError};
use crate::scalar::Scalar;
use crate::vecops::{dot, norm};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl ProblemError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ProblemError>;

/// `K` blocks of uniform size `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockPartition {
    block_count: usize,
    block_size: usize,
}

impl BlockPartition {
    pub fn new(block_count: usize, block_size: usize) -> Result<Self> {
        if block_count == 0 {
            return Err(ProblemError::invalid("blocks", "need at least one block"));
        }
        if block_size == 0 {
            return Err(ProblemError::invalid("block_size", "blocks must be nonempty"));
        }
        Ok(Self {
            block_count,
            block_size,
        })
    }

    pub fn scalar(block_count: usize) -> Result<Self> {
        Self::new(block_count, 1)
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn dimension(&self) -> usize {
        self.block_count * self.block_size
    }

    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        k * self.block_size..(k + 1) * self.block_size
    }
}

/// Per-block convex term `h_k`. `Box` is the indicator of `[lo, hi]^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonsmoothTerm<T> {
    Zero,
    L1 { weight: T },
    GroupL2 { weight: T },
    Box { lo: T, hi: T },
}

impl<T: Scalar> NonsmoothTerm<T> {
    pub fn validate(&self, path: &str) -> Result<()> {
        match *self {
            Self::Zero => Ok(()),
            Self::L1 { weight } | Self::GroupL2 { weight } => {
                if weight.is_finite() && weight >= T::zero() {
                    Ok(())
                } else {
                    Err(ProblemError::invalid(
                        format!("{path}.weight"),
                        "weight must be finite and nonnegative",
                    ))
                }
            }
            Self::Box { lo, hi } => {
                if lo > hi || lo.is_nan() || hi.is_nan() {
                    Err(ProblemError::invalid(format!("{path}.lo"), "need lo <= hi"))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    pub fn is_box(&self) -> bool {
        matches!(self, Self::Box { .. })
    }

    /// `h(u)`, `+inf` outside the box.
    pub fn value(&self, u: &[T]) -> T {
        match *self {
            Self::Zero => T::zero(),
            Self::L1 { weight } => weight * u.iter().map(|v| v.abs()).sum::<T>(),
            Self::GroupL2 { weight } => weight * norm(u),
            Self::Box { lo, hi } => {
                if u.iter().all(|&v| v >= lo && v <= hi) {
                    T::zero()
                } else {
                    T::infinity()
                }
            }
        }
    }

    /// `argmin_u h(u) + ||u - v||^2 / (2 step)`.
    pub fn prox(&self, v: &[T], step: T) -> Vec<T> {
        match *self {
            Self::Zero => v.to_vec(),
            Self::L1 { weight } => {
                let t = weight * step;
                v.iter()
                    .map(|&x| x.signum() * (x.abs() - t).max(T::zero()))
                    .collect()
            }
            Self::GroupL2 { weight } => {
                let n = norm(v);
                let t = weight * step;
                if n <= t {
                    vec![T::zero(); v.len()]
                } else {
                    let s = T::one() - t / n;
                    v.iter().map(|&x| x * s).collect()
                }
            }
            Self::Box { lo, hi } => v.iter().map(|&x| x.max(lo).min(hi)).collect(),
        }
    }

    /// Minimum-norm minimizer of `h` alone, which is what an exact block step
    /// returns when the block has no influence on the smooth part.
    pub fn min_norm_minimizer(&self, n: usize) -> Vec<T> {
        match *self {
            Self::Box { lo, hi } => vec![T::zero().max(lo).min(hi); n],
            _ => vec![T::zero(); n],
        }
    }
}

/// Composite objective value split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue<T> {
    pub smooth: T,
    pub nonsmooth: T,
    pub total: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompositeQuadraticProblem<T> {
    partition: BlockPartition,
    blocks: Vec<DenseMatrix<T>>,
    a: DenseMatrix<T>,
    b: Vec<T>,
    h: Vec<NonsmoothTerm<T>>,
}

/// Rank classification of the blocks `A_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RankCase {
    FullColumn,
    FullRow,
    Neither,
}

/// Per-block singular-value data behind the rank cases.
#[derive(Debug, Clone, PartialEq)]
pub struct RankInfo<T> {
    /// `sigma_k = sqrt(lambda_min(A_k^T A_k))`, zero unless `A_k` has full column rank.
    pub sigma: Vec<T>,
    /// `gamma_k = sqrt(lambda_min(A_k A_k^T))`, zero unless `A_k` has full row rank.
    pub gamma: Vec<T>,
    pub sigma_min: T,
    pub gamma_min: T,
    pub case: RankCase,
}

/// Lipschitz and conditioning constants of a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConstants<T> {
    pub block_count: usize,
    pub block_size: usize,
    /// Global gradient Lipschitz constant `L`.
    pub lipschitz: T,
    /// Per-block constants `L_k`.
    pub block_lipschitz: Vec<T>,
    pub l_max: T,
    pub l_min: T,
    /// `lambda_min` of the Hessian when it is positive definite, zero otherwise.
    pub strong_convexity: T,
    /// Smallest nonzero Hessian eigenvalue; bounds the distance to the optimal set.
    pub positive_curvature: T,
    /// Present for composite quadratic problems.
    pub rank: Option<RankInfo<T>>,
}

impl<T: Scalar> ProblemConstants<T> {
    /// Builds the constants of a smooth problem from `L` and the `L_k`.
    pub fn from_lipschitz(lipschitz: T, block_lipschitz: Vec<T>, block_size: usize) -> Self {
        let l_max = block_lipschitz.iter().copied().fold(T::zero(), T::max);
        let l_min = block_lipschitz.iter().copied().fold(T::infinity(), T::min);
        Self {
            block_count: block_lipschitz.len(),
            block_size,
            lipschitz,
            block_lipschitz,
            l_max,
            l_min,
            strong_convexity: T::zero(),
            positive_curvature: T::zero(),
            rank: None,
        }
    }

    pub fn total_dimension(&self) -> usize {
        self.block_count * self.block_size
    }

    /// `ln(2 N K)`.
    pub fn log_2nk(&self) -> T {
        T::from_usize_lossy(2 * self.total_dimension()).ln()
    }
}

impl<T: Scalar> CompositeQuadraticProblem<T> {
    pub fn new(
        partition: BlockPartition,
        blocks: Vec<DenseMatrix<T>>,
        b: Vec<T>,
        h: Vec<NonsmoothTerm<T>>,
    ) -> Result<Self> {
        let k = partition.block_count();
        if blocks.len() != k {
            return Err(ProblemError::invalid(
                "blocks",
                format!("expected {k} block matrices, found {}", blocks.len()),
            ));
        }
        if h.len() != k {
            return Err(ProblemError::invalid(
                "h",
                format!("expected {k} nonsmooth terms, found {}", h.len()),
            ));
        }
        let m = b.len();
        for (i, blk) in blocks.iter().enumerate() {
            if blk.rows() != m {
                return Err(ProblemError::invalid(
                    format!("blocks[{i}]"),
                    format!("has {} rows, b has length {m}", blk.rows()),
                ));
            }
            if blk.cols() != partition.block_size() {
                return Err(ProblemError::invalid(
                    format!("blocks[{i}]"),
                    format!(
                        "has {} columns, block size is {}",
                        blk.cols(),
                        partition.block_size()
                    ),
                ));
            }
        }
        if let Some(i) = b.iter().position(|v| !v.is_finite()) {
            return Err(ProblemError::invalid(format!("b[{i}]"), "must be finite"));
        }
        for (i, term) in h.iter().enumerate() {
            term.validate(&format!("h[{i}]"))?;
        }
        let a = DenseMatrix::hconcat(&blocks)?;
        Ok(Self {
            partition,
            blocks,
            a,
            b,
            h,
        })
    }

    /// Splits the columns of `a` into blocks of `block_size`.
    pub fn from_matrix(
        a: DenseMatrix<T>,
        block_size: usize,
        b: Vec<T>,
        h: Vec<NonsmoothTerm<T>>,
    ) -> Result<Self> {
        if block_size == 0 || a.cols() % block_size != 0 {
            return Err(ProblemError::invalid(
                "block_size",
                format!("{} columns do not split into blocks of {block_size}", a.cols()),
            ));
        }
        let partition = BlockPartition::new(a.cols() / block_size, block_size)?;
        let blocks = (0..partition.block_count())
            .map(|k| a.column_block(k * block_size, block_size))
            .collect();
        Self::new(partition, blocks, b, h)
    }

    pub fn partition(&self) -> BlockPartition {
        self.partition
    }

    pub fn block_count(&self) -> usize {
        self.partition.block_count()
    }

    pub fn block_size(&self) -> usize {
        self.partition.block_size()
    }

    pub fn dimension(&self) -> usize {
        self.partition.dimension()
    }

    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn block(&self, k: usize) -> &DenseMatrix<T> {
        &self.blocks[k]
    }

    pub fn blocks(&self) -> &[DenseMatrix<T>] {
        &self.blocks
    }

    /// The concatenation `A = [A_1, ..., A_K]`.
    pub fn matrix(&self) -> &DenseMatrix<T> {
        &self.a
    }

    pub fn offset(&self) -> &[T] {
        &self.b
    }

    pub fn term(&self, k: usize) -> &NonsmoothTerm<T> {
        &self.h[k]
    }

    pub fn terms(&self) -> &[NonsmoothTerm<T>] {
        &self.h
    }

    /// True when every `h_k` is zero (no penalty, no constraint).
    pub fn is_smooth(&self) -> bool {
        self.h.iter().all(NonsmoothTerm::is_zero)
    }

    /// True when every block is box constrained, so the feasible set is compact.
    pub fn is_fully_boxed(&self) -> bool {
        self.h.iter().all(NonsmoothTerm::is_box)
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(ProblemError::Dimension(format!(
                "point has length {}, problem dimension is {}",
                x.len(),
                self.dimension()
            )));
        }
        Ok(())
    }

    /// `A x - b`
    pub fn residual(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        let mut r = self.a.matvec(x)?;
        for (ri, &bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        Ok(r)
    }

    pub fn smooth_value(&self, x: &[T]) -> Result<T> {
        let r = self.residual(x)?;
        Ok(T::lit(0.5) * dot(&r, &r))
    }

    pub fn nonsmooth_value(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        Ok((0..self.block_count())
            .map(|k| self.h[k].value(&x[self.partition.range(k)]))
            .sum())
    }

    /// Composite value; `total` is `+inf` when a box constraint is violated.
    pub fn eval_objective(&self, x: &[T]) -> Result<ObjectiveValue<T>> {
        let smooth = self.smooth_value(x)?;
        let nonsmooth = self.nonsmooth_value(x)?;
        Ok(ObjectiveValue {
            smooth,
            nonsmooth,
            total: smooth + nonsmooth,
        })
    }

    pub fn objective(&self, x: &[T]) -> Result<T> {
        Ok(self.eval_objective(x)?.total)
    }

    pub fn is_feasible(&self, x: &[T]) -> Result<bool> {
        Ok(self.nonsmooth_value(x)?.is_finite())
    }

    /// `A_k^T (A x - b)`
    pub fn block_gradient(&self, k: usize, x: &[T]) -> Result<Vec<T>> {
        if k >= self.block_count() {
            return Err(ProblemError::Dimension(format!(
                "block index {k} out of range for {} blocks",
                self.block_count()
            )));
        }
        let r = self.residual(x)?;
        Ok(self.blocks[k].tr_matvec(&r)?)
    }

    /// `A^T (A x - b)`
    pub fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        let r = self.residual(x)?;
        Ok(self.a.tr_matvec(&r)?)
    }

    /// Lipschitz constants and the rank classification of the blocks.
    pub fn compute_constants(&self) -> Result<ProblemConstants<T>> {
        let tol = T::spectral_tol();
        let sn = linalg::spectral_norm(&self.a, tol)?.value;
        let lipschitz = sn * sn;
        let mut block_lipschitz = Vec::with_capacity(self.block_count());
        let mut sigma = Vec::with_capacity(self.block_count());
        let mut gamma = Vec::with_capacity(self.block_count());
        let (m, n) = (self.rows(), self.block_size());
        for blk in &self.blocks {
            let dec = linalg::svd(blk)?;
            let smax = dec.sigma_max();
            block_lipschitz.push(smax * smax);
            let mut sv = dec.sigma.clone();
            sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
            let rank = dec.rank();
            let full_col = rank == n && smax > T::zero();
            let full_row = rank == m && smax > T::zero();
            sigma.push(if full_col { sv[n - 1] } else { T::zero() });
            gamma.push(if full_row { sv[m - 1] } else { T::zero() });
            }
        let all_col = sigma.iter().all(|&s| s > T::zero());
        let all_row = gamma.iter().all(|&g| g > T::zero());
        let case = if all_col {
            RankCase::FullColumn
        } else if all_row {
            RankCase::FullRow
        } else {
            RankCase::Neither
        };
        let sigma_min = sigma.iter().copied().fold(T::infinity(), T::min);
        let gamma_min = gamma.iter().copied().fold(T::infinity(), T::min);
        let full = linalg::svd(&self.a)?;
        let thr = full.threshold();
        let smin_pos = full
            .sigma
            .iter()
            .copied()
            .filter(|&s| s > thr)
            .fold(T::infinity(), T::min);
        let positive_curvature = if smin_pos.is_finite() { smin_pos * smin_pos } else { T::zero() };
        let strong_convexity = if full.rank() == self.dimension() {
            positive_curvature
        } else {
            T::zero()
        };
        let mut c = ProblemConstants::from_lipschitz(lipschitz, block_lipschitz, n);
        // L >= L_k always holds in exact arithmetic; guard against rounding.
        c.lipschitz = c.lipschitz.max(c.l_max);
        c.strong_convexity = strong_convexity;
        c.positive_curvature = positive_curvature;
        c.rank = Some(RankInfo {
            sigma,
            gamma,
            sigma_min,
            gamma_min,
            case,
        });
        Ok(c)
    }

    /// Clips a point into the feasible set (only boxes restrict feasibility).
    pub fn project(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        let mut out = x.to_vec();
        for k in 0..self.block_count() {
            if let NonsmoothTerm::Box { .. } = self.h[k] {
                let r = self.partition.range(k);
                let p = self.h[k].prox(&x[r.clone()], T::one());
                out[r].copy_from_slice(&p);
            }
        }
        Ok(out)
    }

    /// Euclidean diameter of the feasible set when every block is boxed.
    pub fn box_diameter(&self) -> Option<T> {
        if !self.is_fully_boxed() {
            return None;
        }
        let n = T::from_usize_lossy(self.block_size());
        Some(
            self.h
                .iter()
                .map(|t| match *t {
                    NonsmoothTerm::Box { lo, hi } => (hi - lo) * (hi - lo) * n,
                    _ => T::zero(),
                })
                .sum::<T>()
                .sqrt(),
        )
    }

    /// Smooth part as a quadratic oracle `1/2 x^T A^T A x - (A^T b)^T x + 1/2 ||b||^2`.
    pub fn to_quadratic_oracle(&self) -> Result<QuadraticOracle<T>> {
        if !self.is_smooth() {
            return Err(ProblemError::invalid(
                "h",
                "smooth oracle requires every nonsmooth term to be zero",
            ));
        }
        let q = self.a.gram();
        let c = self.a.tr_matvec(&self.b)?;
        let offset = T::lit(0.5) * dot(&self.b, &self.b);
        QuadraticOracle::new(q, c, offset)
    }
}
