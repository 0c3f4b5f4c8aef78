//! Exact cyclic BCD, BCPG, coordinate gradient descent and gradient descent.
//!
//! Every solver records one [`CycleRecord`] per cycle, starting with the initial
//! point, so `cycles[r]` holds `x^(r)`. The movement stored at record `r` describes
//! the pass `x^(r) -> x^(r+1)`.

use crate::linalg::{self, DenseMatrix, LinalgError, Svd};
use crate::problems::{CompositeQuadraticProblem, NonsmoothTerm, ProblemError, SmoothOracle};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use crate::vecops::{dot, norm, norm_sq};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Inner proximal-gradient loop of the exact block step stops below this movement.
pub const INNER_TOLERANCE: f64 = 1e-12;
pub const INNER_ITERATION_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("starting point violates a box constraint")]
    InfeasibleStart,
    #[error("starting point has length {found}, problem dimension is {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("stepsize P_{block} = {value:e} is below L_{block} = {required:e}")]
    InvalidStepsize { block: usize, value: f64, required: f64 },
    #[error("expected {expected} fixed stepsizes, found {found}")]
    StepsizeCount { expected: usize, found: usize },
    #[error("non-finite value in cycle {cycle} at block {block}")]
    NonFinite { cycle: usize, block: usize },
    #[error("exact step for block {block} in cycle {cycle} did not converge in {iterations} inner iterations")]
    InnerNoConvergence {
        block: usize,
        cycle: usize,
        iterations: usize,
    },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    ExactBcd,
    Bcpg,
    Cgd,
    Gd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::ExactBcd => "exact_bcd",
            Self::Bcpg => "bcpg",
            Self::Cgd => "cgd",
            Self::Gd => "gd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockOrder {
    Cyclic,
    RandomPermutation { seed: u64 },
    SampledWithReplacement { seed: u64 },
}

impl BlockOrder {
    pub fn is_deterministic_sweep(&self) -> bool {
        !matches!(self, Self::SampledWithReplacement { .. })
    }

    pub fn name(&self) -> String {
        match self {
            Self::Cyclic => "cyclic".into(),
            Self::RandomPermutation { seed } => format!("random_permutation({seed})"),
            Self::SampledWithReplacement { seed } => format!("sampled_with_replacement({seed})"),
        }
    }
}

/// Produces the visit order of each cycle.
#[derive(Debug, Clone)]
pub struct OrderSampler {
    order: BlockOrder,
    blocks: usize,
    rng: SplitMix64,
}

impl OrderSampler {
    pub fn new(order: BlockOrder, blocks: usize) -> Self {
        let seed = match order {
            BlockOrder::Cyclic => 0,
            BlockOrder::RandomPermutation { seed } | BlockOrder::SampledWithReplacement { seed } => seed,
        };
        Self {
            order,
            blocks,
            rng: SplitMix64::new(seed),
        }
    }

    /// Cyclic: `0..K`. Permutation: `0..K` shuffled afresh. Sampled: `K` uniform draws.
    pub fn next_cycle(&mut self) -> Vec<usize> {
        match self.order {
            BlockOrder::Cyclic => (0..self.blocks).collect(),
            BlockOrder::RandomPermutation { .. } => {
                let mut v: Vec<usize> = (0..self.blocks).collect();
                self.rng.shuffle(&mut v);
                v
            }
            BlockOrder::SampledWithReplacement { .. } => {
                (0..self.blocks).map(|_| self.rng.below(self.blocks)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepsizePolicy<T> {
    /// `P_k = L`
    GlobalL,
    /// `P_k = L_k`
    BlockLk,
    Fixed(Vec<T>),
}

impl<T: Scalar> StepsizePolicy<T> {
    /// Realized `P_k`; each must satisfy `P_k >= L_k`.
    pub fn realize(&self, lipschitz: T, block_lipschitz: &[T]) -> Result<Vec<T>> {
        let p = match self {
            Self::GlobalL => vec![lipschitz; block_lipschitz.len()],
            Self::BlockLk => block_lipschitz.to_vec(),
            Self::Fixed(v) => {
                if v.len() != block_lipschitz.len() {
                    return Err(SolverError::StepsizeCount {
                        expected: block_lipschitz.len(),
                        found: v.len(),
                    });
                }
                v.clone()
            }
        };
        for (k, (&pk, &lk)) in p.iter().zip(block_lipschitz).enumerate() {
            let slack = T::lit(1e-12) * T::one().max(lk);
            if !(pk.is_finite() && pk > T::zero() && pk >= lk - slack) {
                return Err(SolverError::InvalidStepsize {
                    block: k,
                    value: pk.as_f64(),
                    required: lk.as_f64(),
                });
            }
        }
        Ok(p)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::GlobalL => "global_l",
            Self::BlockLk => "block_lk",
            Self::Fixed(_) => "fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverRun<T> {
    pub algorithm: Algorithm,
    pub order: BlockOrder,
    pub stepsizes: StepsizePolicy<T>,
    pub max_cycles: usize,
    /// Stop once `f - f* <= gap_tolerance` when a reference value is supplied.
    pub gap_tolerance: T,
    pub record_intermediates: bool,
}

impl<T: Scalar> SolverRun<T> {
    pub fn new(algorithm: Algorithm, stepsizes: StepsizePolicy<T>, max_cycles: usize) -> Self {
        Self {
            algorithm,
            order: BlockOrder::Cyclic,
            stepsizes,
            max_cycles,
            gap_tolerance: T::zero(),
            record_intermediates: false,
        }
    }

    pub fn with_order(mut self, order: BlockOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_intermediates(mut self) -> Self {
        self.record_intermediates = true;
        self
    }

    pub fn with_gap_tolerance(mut self, tol: T) -> Self {
        self.gap_tolerance = tol;
        self
    }
}

/// Per-step data of one pass, `O(K N)` per cycle.
///
/// Step `i` visits block `visited[i]` at the point `w_i`, evaluates the block
/// gradient `directions[i]` there and writes `updates[i]` into that block.
#[derive(Debug, Clone, PartialEq)]
pub struct Intermediates<T> {
    pub visited: Vec<usize>,
    pub directions: Vec<Vec<T>>,
    pub updates: Vec<Vec<T>>,
}

impl<T: Scalar> Intermediates<T> {
    /// Reconstructs `w_1 = x^(r), ..., w_{K+1} = x^(r+1)`.
    pub fn points(&self, start: &[T], block_size: usize) -> Vec<Vec<T>> {
        let mut w = start.to_vec();
        let mut out = Vec::with_capacity(self.visited.len() + 1);
        out.push(w.clone());
        for (&k, u) in self.visited.iter().zip(&self.updates) {
            w[k * block_size..(k + 1) * block_size].copy_from_slice(u);
            out.push(w.clone());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord<T> {
    pub x: Vec<T>,
    pub objective: T,
    pub gap: Option<T>,
    /// `||grad g(x^(r))||`, smooth problems only.
    pub grad_norm: Option<T>,
    /// `sqrt(sum_k P_k ||x_k^(r+1) - x_k^(r)||^2)`; absent on the last record.
    pub weighted_movement: Option<T>,
    pub intermediates: Option<Intermediates<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub algorithm: Algorithm,
    pub order: BlockOrder,
    pub block_count: usize,
    pub block_size: usize,
    /// Realized `P_k` (for gradient descent, `L` for every block).
    pub stepsizes: Vec<T>,
    pub f_star: Option<T>,
    pub cycles: Vec<CycleRecord<T>>,
    /// Visit order of each pass; `orders[r]` produced `x^(r+1)`.
    pub orders: Vec<Vec<usize>>,
    pub stopped_early: bool,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn last(&self) -> &CycleRecord<T> {
        self.cycles.last().expect("trajectory holds the initial point")
    }

    pub fn gaps(&self) -> Option<Vec<T>> {
        self.cycles.iter().map(|c| c.gap).collect()
    }

    pub fn objectives(&self) -> Vec<T> {
        self.cycles.iter().map(|c| c.objective).collect()
    }

    /// Recomputes every gap against a new reference value.
    pub fn set_reference(&mut self, f_star: T) {
        self.f_star = Some(f_star);
        for c in &mut self.cycles {
            c.gap = Some(c.objective - f_star);
        }
    }

    /// Largest per-cycle distance between two trajectories of equal length.
    pub fn max_distance(&self, other: &Self) -> Option<T> {
        if self.cycles.len() != other.cycles.len() {
            return None;
        }
        Some(
            self.cycles
                .iter()
                .zip(&other.cycles)
                .map(|(a, b)| crate::vecops::dist(&a.x, &b.x))
                .fold(T::zero(), T::max),
        )
    }
}

struct Recorder<T> {
    traj: Trajectory<T>,
    f_star: Option<T>,
    gap_tolerance: T,
}

impl<T: Scalar> Recorder<T> {
    fn new(run: &SolverRun<T>, block_count: usize, block_size: usize, stepsizes: Vec<T>, f_star: Option<T>) -> Self {
        Self {
            traj: Trajectory {
                algorithm: run.algorithm,
                order: run.order,
                block_count,
                block_size,
                stepsizes,
                f_star,
                cycles: Vec::with_capacity(run.max_cycles + 1),
                orders: Vec::with_capacity(run.max_cycles),
                stopped_early: false,
            },
            f_star,
            gap_tolerance: run.gap_tolerance,
        }
    }

    /// Records `x^(r)`; returns true when the gap tolerance is met.
    fn push(&mut self, x: Vec<T>, objective: T, grad_norm: Option<T>) -> bool {
        let gap = self.f_star.map(|f| objective - f);
        self.traj.cycles.push(CycleRecord {
            x,
            objective,
            gap,
            grad_norm,
            weighted_movement: None,
            intermediates: None,
        });
        matches!(gap, Some(g) if g <= self.gap_tolerance)
    }

    fn close_pass(&mut self, order: Vec<usize>, movement: T, inter: Option<Intermediates<T>>) {
        let last = self.traj.cycles.last_mut().expect("initial point recorded");
        last.weighted_movement = Some(movement);
        last.intermediates = inter;
        self.traj.orders.push(order);
    }

    fn finish(mut self, stopped_early: bool) -> Trajectory<T> {
        self.traj.stopped_early = stopped_early;
        self.traj
    }
}

fn weighted_movement<T: Scalar>(prev: &[T], next: &[T], p: &[T], block_size: usize) -> T {
    p.iter()
        .enumerate()
        .map(|(k, &pk)| {
            let r = k * block_size..(k + 1) * block_size;
            pk * prev[r.clone()]
                .iter()
                .zip(&next[r])
                .map(|(a, b)| (*b - *a) * (*b - *a))
                .sum::<T>()
        })
        .sum::<T>()
        .sqrt()
}

fn check_start<T: Scalar>(p: &CompositeQuadraticProblem<T>, x0: &[T]) -> Result<()> {
    if x0.len() != p.dimension() {
        return Err(SolverError::Dimension {
            expected: p.dimension(),
            found: x0.len(),
        });
    }
    if !p.is_feasible(x0)? {
        return Err(SolverError::InfeasibleStart);
    }
    Ok(())
}

fn smooth_grad_norm<T: Scalar>(p: &CompositeQuadraticProblem<T>, x: &[T]) -> Result<Option<T>> {
    if p.is_smooth() {
        Ok(Some(norm(&p.gradient(x)?)))
    } else {
        Ok(None)
    }
}

fn require_algorithm<T>(run: &SolverRun<T>, want: Algorithm) -> Result<()> {
    if run.algorithm != want {
        return Err(SolverError::Unsupported(format!(
            "run configured for {} passed to the {} solver",
            run.algorithm.name(),
            want.name()
        )));
    }
    Ok(())
}

/// Cyclic block coordinate proximal gradient:
/// `x_k <- prox_{h_k / P_k}(x_k - grad_k g(w_k) / P_k)`.
pub fn run_bcpg<T: Scalar>(
    p: &CompositeQuadraticProblem<T>,
    run: &SolverRun<T>,
    x0: &[T],
    f_star: Option<T>,
) -> Result<Trajectory<T>> {
    require_algorithm(run, Algorithm::Bcpg)?;
    check_start(p, x0)?;
    let c = p.compute_constants()?;
    let steps = run.stepsizes.realize(c.lipschitz, &c.block_lipschitz)?;
    let n = p.block_size();
    let mut rec = Recorder::new(run, p.block_count(), n, steps.clone(), f_star);
    let mut x = x0.to_vec();
    let mut done = rec.push(x.clone(), p.objective(&x)?, smooth_grad_norm(p, &x)?);
    let mut sampler = OrderSampler::new(run.order, p.block_count());
    for cycle in 0..run.max_cycles {
        if done {
            return Ok(rec.finish(true));
        }
        let order = sampler.next_cycle();
        let prev = x.clone();
        let mut inter = run.record_intermediates.then(|| Intermediates {
            visited: Vec::with_capacity(order.len()),
            directions: Vec::with_capacity(order.len()),
            updates: Vec::with_capacity(order.len()),
        });
        let mut residual = p.residual(&x)?;
        for &k in &order {
            let range = p.partition().range(k);
            let blk = p.block(k);
            let grad = blk.tr_matvec(&residual)?;
            let pk = steps[k];
            let v: Vec<T> = x[range.clone()]
                .iter()
                .zip(&grad)
                .map(|(&xi, &gi)| xi - gi / pk)
                .collect();
            let new = p.term(k).prox(&v, T::one() / pk);
            if new.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::NonFinite { cycle, block: k });
            }
            let delta: Vec<T> = new.iter().zip(&x[range.clone()]).map(|(a, b)| *a - *b).collect();
            let change = blk.matvec(&delta)?;
            for (ri, ci) in residual.iter_mut().zip(change) {
                *ri += ci;
            }
            x[range].copy_from_slice(&new);
            if let Some(it) = inter.as_mut() {
                it.visited.push(k);
                it.directions.push(grad);
                it.updates.push(new);
            }
        }
        let mv = weighted_movement(&prev, &x, &steps, n);
        rec.close_pass(order, mv, inter);
        done = rec.push(x.clone(), p.objective(&x)?, smooth_grad_norm(p, &x)?);
    }
    Ok(rec.finish(false))
}

enum ExactKind<T> {
    /// `h_k = 0`: pseudo-inverse solve.
    LeastSquares(Svd<T>),
    /// Scalar block: prox of the scalar least-squares solution with curvature `a^T a`.
    Scalar { column: Vec<T>, curvature: T },
    /// Block with no influence on the smooth part.
    Inert,
    /// Inner proximal-gradient loop.
    Inner { lipschitz: T },
}

fn exact_kinds<T: Scalar>(p: &CompositeQuadraticProblem<T>) -> Result<Vec<ExactKind<T>>> {
    (0..p.block_count())
        .map(|k| {
            let blk = p.block(k);
            let dec = linalg::svd(blk)?;
            let smax = dec.sigma_max();
            let term = p.term(k);
            Ok(if term.is_zero() {
                ExactKind::LeastSquares(dec)
            } else if smax == T::zero() {
                ExactKind::Inert
            } else if p.block_size() == 1 {
                let column = blk.column(0);
                let curvature = norm_sq(&column);
                ExactKind::Scalar { column, curvature }
            } else {
                ExactKind::Inner {
                    lipschitz: smax * smax,
                }
            })
        })
        .collect()
}

/// Solves `min_z 1/2 ||A_k z - r||^2 + h_k(z)`.
fn exact_block_step<T: Scalar>(
    kind: &ExactKind<T>,
    blk: &DenseMatrix<T>,
    term: &NonsmoothTerm<T>,
    r: &[T],
    warm: &[T],
    block: usize,
    cycle: usize,
) -> Result<Vec<T>> {
    match kind {
        ExactKind::LeastSquares(dec) => Ok(linalg::solve_with_svd(dec, r)?),
        ExactKind::Inert => Ok(term.min_norm_minimizer(warm.len())),
        ExactKind::Scalar { column, curvature } => {
            let z = dot(column, r) / *curvature;
            Ok(term.prox(&[z], T::one() / *curvature))
        }
        ExactKind::Inner { lipschitz } => {
            let tol = T::lit(INNER_TOLERANCE);
            let sl = lipschitz.sqrt();
            let mut z = warm.to_vec();
            for _ in 0..INNER_ITERATION_CAP {
                let mut res = blk.matvec(&z)?;
                for (ri, &bi) in res.iter_mut().zip(r) {
                    *ri -= bi;
                }
                let g = blk.tr_matvec(&res)?;
                let v: Vec<T> = z.iter().zip(&g).map(|(&zi, &gi)| zi - gi / *lipschitz).collect();
                let next = term.prox(&v, T::one() / *lipschitz);
                let step = sl * crate::vecops::dist(&next, &z);
                z = next;
                if step <= tol {
                    return Ok(z);
                }
            }
            Err(SolverError::InnerNoConvergence {
                block,
                cycle,
                iterations: INNER_ITERATION_CAP,
            })
        }
    }
}

/// Exact block minimization; ties resolve to the minimum-norm minimizer.
///
/// Each block step forms `b - sum_{j != k} A_j x_j` afresh rather than updating a residual.
pub fn run_bcd_exact<T: Scalar>(
    p: &CompositeQuadraticProblem<T>,
    run: &SolverRun<T>,
    x0: &[T],
    f_star: Option<T>,
) -> Result<Trajectory<T>> {
    require_algorithm(run, Algorithm::ExactBcd)?;
    check_start(p, x0)?;
    let c = p.compute_constants()?;
    // Exact minimization has no stepsize; the movement is weighted by `L_k`.
    let steps = c.block_lipschitz.clone();
    let kinds = exact_kinds(p)?;
    let n = p.block_size();
    let m = p.rows();
    let mut rec = Recorder::new(run, p.block_count(), n, steps.clone(), f_star);
    let mut x = x0.to_vec();
    let mut done = rec.push(x.clone(), p.objective(&x)?, smooth_grad_norm(p, &x)?);
    let mut sampler = OrderSampler::new(run.order, p.block_count());
    for cycle in 0..run.max_cycles {
        if done {
            return Ok(rec.finish(true));
        }
        let order = sampler.next_cycle();
        let prev = x.clone();
        let mut inter = run.record_intermediates.then(|| Intermediates {
            visited: Vec::with_capacity(order.len()),
            directions: Vec::with_capacity(order.len()),
            updates: Vec::with_capacity(order.len()),
        });
        for &k in &order {
            let mut r = p.offset().to_vec();
            for j in (0..p.block_count()).filter(|&j| j != k) {
                let contrib = p.block(j).matvec(&x[p.partition().range(j)])?;
                for (ri, ci) in r.iter_mut().zip(contrib) {
                    *ri -= ci;
                }
            }
            debug_assert_eq!(r.len(), m);
            let range = p.partition().range(k);
            if let Some(it) = inter.as_mut() {
                let mut res = p.block(k).matvec(&x[range.clone()])?;
                for (a, b) in res.iter_mut().zip(&r) {
                    *a -= *b;
                }
                it.directions.push(p.block(k).tr_matvec(&res)?);
            }
            let new = exact_block_step(&kinds[k], p.block(k), p.term(k), &r, &x[range.clone()], k, cycle)?;
            if new.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::NonFinite { cycle, block: k });
            }
            x[range].copy_from_slice(&new);
            if let Some(it) = inter.as_mut() {
                it.visited.push(k);
                it.updates.push(new);
            }
        }
        let mv = weighted_movement(&prev, &x, &steps, n);
        rec.close_pass(order, mv, inter);
        done = rec.push(x.clone(), p.objective(&x)?, smooth_grad_norm(p, &x)?);
    }
    Ok(rec.finish(false))
}

/// Coordinate gradient descent chain `w_{k+1} = w_k - d_k e_k / P_k`, `d_k = grad_k g(w_k)`.
pub fn run_cgd<T: Scalar, O: SmoothOracle<T> + ?Sized>(
    o: &O,
    run: &SolverRun<T>,
    x0: &[T],
    f_star: Option<T>,
) -> Result<Trajectory<T>> {
    require_algorithm(run, Algorithm::Cgd)?;
    let dim = o.dimension();
    if x0.len() != dim {
        return Err(SolverError::Dimension {
            expected: dim,
            found: x0.len(),
        });
    }
    let steps = run.stepsizes.realize(o.lipschitz(), &o.coordinate_lipschitz())?;
    let mut rec = Recorder::new(run, dim, 1, steps.clone(), f_star);
    let mut x = x0.to_vec();
    let mut done = rec.push(x.clone(), o.value(&x), Some(norm(&o.gradient(&x))));
    let mut sampler = OrderSampler::new(run.order, dim);
    for cycle in 0..run.max_cycles {
        if done {
            return Ok(rec.finish(true));
        }
        let order = sampler.next_cycle();
        let prev = x.clone();
        let mut inter = run.record_intermediates.then(|| Intermediates {
            visited: Vec::with_capacity(order.len()),
            directions: Vec::with_capacity(order.len()),
            updates: Vec::with_capacity(order.len()),
        });
        for &k in &order {
            let d = o.coordinate_gradient(k, &x);
            if !d.is_finite() {
                return Err(SolverError::NonFinite { cycle, block: k });
            }
            x[k] -= d / steps[k];
            if let Some(it) = inter.as_mut() {
                it.visited.push(k);
                it.directions.push(vec![d]);
                it.updates.push(vec![x[k]]);
            }
        }
        let mv = weighted_movement(&prev, &x, &steps, 1);
        rec.close_pass(order, mv, inter);
        done = rec.push(x.clone(), o.value(&x), Some(norm(&o.gradient(&x))));
    }
    Ok(rec.finish(false))
}

fn run_gd_inner<T: Scalar>(
    run: &SolverRun<T>,
    x0: &[T],
    f_star: Option<T>,
    lipschitz: T,
    block_count: usize,
    block_size: usize,
    value: impl Fn(&[T]) -> Result<T>,
    gradient: impl Fn(&[T]) -> Result<Vec<T>>,
) -> Result<Trajectory<T>> {
    require_algorithm(run, Algorithm::Gd)?;
    if !(lipschitz > T::zero()) {
        return Err(SolverError::Unsupported("gradient descent needs L > 0".into()));
    }
    let steps = vec![lipschitz; block_count];
    let mut rec = Recorder::new(run, block_count, block_size, steps.clone(), f_star);
    let mut x = x0.to_vec();
    let mut g = gradient(&x)?;
    let mut done = rec.push(x.clone(), value(&x)?, Some(norm(&g)));
    let all: Vec<usize> = (0..block_count).collect();
    for cycle in 0..run.max_cycles {
        if done {
            return Ok(rec.finish(true));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite { cycle, block: 0 });
        }
        let prev = x.clone();
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= *gi / lipschitz;
        }
        let mv = weighted_movement(&prev, &x, &steps, block_size);
        let inter = run.record_intermediates.then(|| Intermediates {
            visited: Vec::new(),
            directions: vec![g.clone()],
            updates: Vec::new(),
        });
        rec.close_pass(all.clone(), mv, inter);
        g = gradient(&x)?;
        done = rec.push(x.clone(), value(&x)?, Some(norm(&g)));
    }
    Ok(rec.finish(false))
}

/// Gradient descent `x <- x - grad g(x) / L` on a smooth oracle.
pub fn run_gd<T: Scalar, O: SmoothOracle<T> + ?Sized>(
    o: &O,
    run: &SolverRun<T>,
    x0: &[T],
    f_star: Option<T>,
) -> Result<Trajectory<T>> {
    if x0.len() != o.dimension() {
        return Err(SolverError::Dimension {
            expected: o.dimension(),
            found: x0.len(),
        });
    }
    run_gd_inner(
        run,
        x0,
        f_star,
        o.lipschitz(),
        o.dimension(),
        1,
        |x| Ok(o.value(x)),
        |x| Ok(o.gradient(x)),
    )
}

/// Gradient descent on a problem with every `h_k = 0`.
pub fn run_gd_problem<T: Scalar>(
    p: &CompositeQuadraticProblem<T>,
    run: &SolverRun<T>,
    x0: &[T],
    f_star: Option<T>,
) -> Result<Trajectory<T>> {
    if !p.is_smooth() {
        return Err(SolverError::Unsupported(
            "gradient descent requires every nonsmooth term to be zero".into(),
        ));
    }
    check_start(p, x0)?;
    let c = p.compute_constants()?;
    run_gd_inner(
        run,
        x0,
        f_star,
        c.lipschitz,
        p.block_count(),
        p.block_size(),
        |x| Ok(p.smooth_value(x)?),
        |x| Ok(p.gradient(x)?),
    )
}

/// Dispatches on `run.algorithm`; CGD goes through the problem's quadratic oracle.
pub fn run_problem<T: Scalar>(
    p: &CompositeQuadraticProblem<T>,
    run: &SolverRun<T>,
    x0: &[T],
    f_star: Option<T>,
) -> Result<Trajectory<T>> {
    match run.algorithm {
        Algorithm::ExactBcd => run_bcd_exact(p, run, x0, f_star),
        Algorithm::Bcpg => run_bcpg(p, run, x0, f_star),
        Algorithm::Gd => run_gd_problem(p, run, x0, f_star),
        Algorithm::Cgd => {
            if p.block_size() != 1 {
                return Err(SolverError::Unsupported(
                    "coordinate gradient descent requires scalar blocks".into(),
                ));
            }
            if !p.is_smooth() {
                return Err(SolverError::Unsupported(
                    "coordinate gradient descent requires every nonsmooth term to be zero".into(),
                ));
            }
            check_start(p, x0)?;
            let o = p.to_quadratic_oracle()?;
            run_cgd(&o, run, x0, f_star)
        }
    }
}

/// How a reference optimum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMethod {
    /// Minimum-norm least-squares solution.
    LeastSquares,
    /// Long BCPG run with `P_k = L_k`.
    Bcpg { cycles: usize },
    /// Supplied by the oracle.
    Known,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOptimum<T> {
    pub x: Vec<T>,
    pub f: T,
    /// Final weighted movement (BCPG) or gradient norm (least squares).
    pub certificate: T,
    pub certified: bool,
    pub method: ReferenceMethod,
}

pub const REFERENCE_MOVEMENT_STOP: f64 = 1e-12;
pub const REFERENCE_CERTIFICATE: f64 = 1e-10;
pub const REFERENCE_CYCLE_CAP: usize = 200_000;

/// High-accuracy optimum used for gaps and `R_0`.
pub fn reference_optimum<T: Scalar>(p: &CompositeQuadraticProblem<T>) -> Result<ReferenceOptimum<T>> {
    if p.is_smooth() {
        let x = linalg::least_squares_min_norm(p.matrix(), p.offset())?;
        let f = p.objective(&x)?;
        let certificate = norm(&p.gradient(&x)?);
        let scale = T::one().max(norm(&p.matrix().tr_matvec(p.offset())?));
        return Ok(ReferenceOptimum {
            x,
            f,
            certified: certificate <= T::lit(1e-8) * scale,
            certificate,
            method: ReferenceMethod::LeastSquares,
        });
    }
    let c = p.compute_constants()?;
    let mut steps = c.block_lipschitz.clone();
    for s in &mut steps {
        // A zero block leaves the prox step with the minimizer of h alone.
        if *s == T::zero() {
            *s = T::one();
        }
    }
    let n = p.block_size();
    let mut x = p.project(&vec![T::zero(); p.dimension()])?;
    let mut residual = p.residual(&x)?;
    let mut movement = T::infinity();
    let mut cycles = 0;
    let stop = T::lit(REFERENCE_MOVEMENT_STOP);
    while cycles < REFERENCE_CYCLE_CAP && movement > stop {
        let prev = x.clone();
        if cycles % 64 == 0 {
            residual = p.residual(&x)?;
        }
        for k in 0..p.block_count() {
            let range = p.partition().range(k);
            let blk = p.block(k);
            let grad = blk.tr_matvec(&residual)?;
            let pk = steps[k];
            let v: Vec<T> = x[range.clone()].iter().zip(&grad).map(|(&a, &g)| a - g / pk).collect();
            let new = p.term(k).prox(&v, T::one() / pk);
            let delta: Vec<T> = new.iter().zip(&x[range.clone()]).map(|(a, b)| *a - *b).collect();
            for (ri, ci) in residual.iter_mut().zip(blk.matvec(&delta)?) {
                *ri += ci;
            }
            x[range].copy_from_slice(&new);
        }
        movement = weighted_movement(&prev, &x, &steps, n);
        cycles += 1;
    }
    let f = p.objective(&x)?;
    Ok(ReferenceOptimum {
        x,
        f,
        certified: movement <= T::lit(REFERENCE_CERTIFICATE),
        certificate: movement,
        method: ReferenceMethod::Bcpg { cycles },
    })
}

/// Reference optimum of a smooth oracle: the known optimum, else a long GD run.
pub fn reference_optimum_oracle<T: Scalar, O: SmoothOracle<T> + ?Sized>(
    o: &O,
    x0: &[T],
) -> Result<ReferenceOptimum<T>> {
    if let Some((x, f)) = o.known_optimum() {
        let certificate = norm(&o.gradient(&x));
        return Ok(ReferenceOptimum {
            x,
            f,
            certificate,
            certified: true,
            method: ReferenceMethod::Known,
        });
    }
    let l = o.lipschitz();
    let mut x = x0.to_vec();
    let mut cycles = 0;
    let mut g = o.gradient(&x);
    while cycles < REFERENCE_CYCLE_CAP && norm(&g) > T::lit(REFERENCE_MOVEMENT_STOP) {
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= *gi / l;
        }
        g = o.gradient(&x);
        cycles += 1;
    }
    let certificate = norm(&g) / l.sqrt();
    Ok(ReferenceOptimum {
        f: o.value(&x),
        x,
        certified: certificate <= T::lit(REFERENCE_CERTIFICATE),
        certificate,
        method: ReferenceMethod::Bcpg { cycles },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::problems::{
        make_table1_full, make_toeplitz_instance, table1_diagonal_problem, BlockPartition,
    };

    fn scalar_problem(a: f64, b: f64, h: NonsmoothTerm<f64>) -> CompositeQuadraticProblem<f64> {
        CompositeQuadraticProblem::new(
            BlockPartition::scalar(1).unwrap(),
            vec![DenseMatrix::new(1, 1, vec![a]).unwrap()],
            vec![b],
            vec![h],
        )
        .unwrap()
    }

    #[test]
    fn order_sampler_shapes() {
        let mut c = OrderSampler::new(BlockOrder::Cyclic, 4);
        assert_eq!(c.next_cycle(), vec![0, 1, 2, 3]);
        let mut r = OrderSampler::new(BlockOrder::RandomPermutation { seed: 5 }, 6);
        let mut a = r.next_cycle();
        a.sort_unstable();
        assert_eq!(a, (0..6).collect::<Vec<_>>());
        let mut s = OrderSampler::new(BlockOrder::SampledWithReplacement { seed: 5 }, 6);
        let v = s.next_cycle();
        assert_eq!(v.len(), 6);
        assert!(v.iter().all(|&k| k < 6));
    }

    #[test]
    fn fixed_stepsizes_below_lk_are_rejected() {
        let p = table1_diagonal_problem(3, 2.0f64).unwrap();
        let run = SolverRun::new(Algorithm::Bcpg, StepsizePolicy::Fixed(vec![2.0, 1.0, 2.0]), 3);
        let err = run_bcpg(&p, &run, &[1.0; 3], None).unwrap_err();
        assert!(matches!(err, SolverError::InvalidStepsize { block: 1, .. }), "{err}");
        let run = SolverRun::new(Algorithm::Bcpg, StepsizePolicy::Fixed(vec![2.0]), 3);
        assert!(matches!(
            run_bcpg(&p, &run, &[1.0; 3], None),
            Err(SolverError::StepsizeCount { .. })
        ));
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let p = scalar_problem(1.0, 0.0, NonsmoothTerm::Box { lo: 0.0, hi: 1.0 });
        let run = SolverRun::new(Algorithm::Bcpg, StepsizePolicy::BlockLk, 3);
        assert_eq!(run_bcpg(&p, &run, &[2.0], None), Err(SolverError::InfeasibleStart));
        let run = SolverRun::new(Algorithm::ExactBcd, StepsizePolicy::BlockLk, 3);
        assert_eq!(run_bcd_exact(&p, &run, &[-1.0], None), Err(SolverError::InfeasibleStart));
    }

    #[test]
    fn diagonal_problem_converges_in_one_cycle() {
        let p = table1_diagonal_problem(5, 3.0f64).unwrap();
        let run = SolverRun::new(Algorithm::Bcpg, StepsizePolicy::GlobalL, 2).with_gap_tolerance(1e-24);
        let t = run_bcpg(&p, &run, &[1.0, -2.0, 0.5, 3.0, 0.0], Some(0.0)).unwrap();
        assert!(t.cycles[1].x.iter().all(|v| v.abs() < 1e-15));
        assert!(t.stopped_early);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn toeplitz_one_pass() {
        let (p, x0) = make_toeplitz_instance::<f64>(10).unwrap();
        let run = SolverRun::new(Algorithm::ExactBcd, StepsizePolicy::BlockLk, 1);
        let t = run_bcd_exact(&p, &run, &x0, None).unwrap();
        let x1 = &t.cycles[1].x;
        for v in &x1[..8] {
            assert!((v + 0.5).abs() < 1e-12);
        }
        assert!((x1[8] + 1.0 / 6.0).abs() < 1e-12);
        assert!((x1[9] - 5.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn exact_scalar_l1_step_is_soft_threshold() {
        let p = scalar_problem(2.0, 3.0, NonsmoothTerm::L1 { weight: 1.0 });
        let run = SolverRun::new(Algorithm::ExactBcd, StepsizePolicy::BlockLk, 1);
        let t = run_bcd_exact(&p, &run, &[0.0], None).unwrap();
        // argmin 1/2 (2x - 3)^2 + |x| = (6 - 1) / 4
        assert!((t.cycles[1].x[0] - 1.25).abs() < 1e-15);
    }

    #[test]
    fn cgd_first_step_on_full_hessian() {
        let o = make_table1_full(4, 4.0f64).unwrap();
        let run = SolverRun::new(Algorithm::Cgd, StepsizePolicy::GlobalL, 1).with_intermediates();
        let t = run_cgd(&o, &run, &[1.0; 4], None).unwrap();
        let it = t.cycles[0].intermediates.as_ref().unwrap();
        assert_eq!(it.directions[0], vec![4.0]);
        assert!(it.updates[0][0].abs() < 1e-15);
    }

    #[test]
    fn gd_one_dimensional_step() {
        let p = scalar_problem(3.0, 0.0, NonsmoothTerm::Zero);
        let run = SolverRun::new(Algorithm::Gd, StepsizePolicy::GlobalL, 1);
        let t = run_gd_problem(&p, &run, &[2.0], None).unwrap();
        assert!(t.cycles[1].x[0].abs() < 1e-15);
    }

    #[test]
    fn reference_examples() {
        let (p, _) = make_toeplitz_instance::<f64>(6).unwrap();
        let r = reference_optimum(&p).unwrap();
        assert!(r.x.iter().all(|v| v.abs() < 1e-14) && r.f.abs() < 1e-28);
        let p = scalar_problem(1.0, 2.0, NonsmoothTerm::L1 { weight: 1.0 });
        let r = reference_optimum(&p).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-12);
        assert!((r.f - 1.5).abs() < 1e-12);
        assert!(r.certified);
    }

    #[test]
    fn wrong_algorithm_is_rejected() {
        let p = table1_diagonal_problem(2, 1.0f64).unwrap();
        let run = SolverRun::new(Algorithm::Gd, StepsizePolicy::GlobalL, 1);
        assert!(matches!(run_bcpg(&p, &run, &[0.0; 2], None), Err(SolverError::Unsupported(_))));
    }
}
