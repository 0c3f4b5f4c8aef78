use super::{
    BlockPartition, CompositeQuadraticProblem, NonsmoothTerm, ProblemError, QuadraticOracle,
    RankCase, Result,
};
use crate::linalg::DenseMatrix;
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

fn check_table1(blocks: usize, lipschitz: f64) -> Result<()> {
    if blocks == 0 {
        return Err(ProblemError::invalid("blocks", "need at least one block"));
    }
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(ProblemError::invalid("lipschitz", "must be positive and finite"));
    }
    Ok(())
}

/// Separable `g(x) = (L/2) ||x||^2`.
pub fn make_table1_diagonal<T: Scalar>(blocks: usize, lipschitz: T) -> Result<QuadraticOracle<T>> {
    check_table1(blocks, lipschitz.as_f64())?;
    let q = DenseMatrix::from_diag(&vec![lipschitz; blocks]);
    QuadraticOracle::new(q, vec![T::zero(); blocks], T::zero())
}

/// Fully coupled `g(x) = (L / 2K) (sum_i x_i)^2`.
pub fn make_table1_full<T: Scalar>(blocks: usize, lipschitz: T) -> Result<QuadraticOracle<T>> {
    check_table1(blocks, lipschitz.as_f64())?;
    let v = lipschitz / T::from_usize_lossy(blocks);
    let q = DenseMatrix::from_fn(blocks, blocks, |_, _| v);
    QuadraticOracle::new(q, vec![T::zero(); blocks], T::zero())
}

/// [`make_table1_diagonal`] as a least-squares problem, `A = sqrt(L) I`.
pub fn table1_diagonal_problem<T: Scalar>(
    blocks: usize,
    lipschitz: T,
) -> Result<CompositeQuadraticProblem<T>> {
    check_table1(blocks, lipschitz.as_f64())?;
    let a = DenseMatrix::from_diag(&vec![lipschitz.sqrt(); blocks]);
    CompositeQuadraticProblem::from_matrix(a, 1, vec![T::zero(); blocks], vec![NonsmoothTerm::Zero; blocks])
}

/// [`make_table1_full`] as a least-squares problem, `A = sqrt(L/K) 1^T`.
pub fn table1_full_problem<T: Scalar>(
    blocks: usize,
    lipschitz: T,
) -> Result<CompositeQuadraticProblem<T>> {
    check_table1(blocks, lipschitz.as_f64())?;
    let v = (lipschitz / T::from_usize_lossy(blocks)).sqrt();
    let a = DenseMatrix::from_fn(1, blocks, |_, _| v);
    CompositeQuadraticProblem::from_matrix(a, 1, vec![T::zero()], vec![NonsmoothTerm::Zero; blocks])
}

/// Tridiagonal all-ones `K x K` matrix.
pub fn toeplitz_matrix<T: Scalar>(blocks: usize) -> DenseMatrix<T> {
    DenseMatrix::from_fn(blocks, blocks, |i, j| {
        if i.abs_diff(j) <= 1 {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// `x0 = (1, 1/8, 3/4, 1, ..., 1)`.
pub fn toeplitz_start<T: Scalar>(blocks: usize) -> Result<Vec<T>> {
    if blocks < 3 {
        return Err(ProblemError::invalid("blocks", "toeplitz instance needs at least 3 blocks"));
    }
    let mut x = vec![T::one(); blocks];
    x[1] = T::lit(0.125);
    x[2] = T::lit(0.75);
    Ok(x)
}

/// Scalar-block instance with `A = sqrt(2) T`, `b = 0`, so the smooth part equals `||T x||^2`.
pub fn make_toeplitz_instance<T: Scalar>(
    blocks: usize,
) -> Result<(CompositeQuadraticProblem<T>, Vec<T>)> {
    let x0 = toeplitz_start(blocks)?;
    let a = toeplitz_matrix::<T>(blocks).scale(T::lit(2.0).sqrt());
    let p = CompositeQuadraticProblem::from_matrix(
        a,
        1,
        vec![T::zero(); blocks],
        vec![NonsmoothTerm::Zero; blocks],
    )?;
    Ok((p, x0))
}

/// Random sparse-regression instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoSpec {
    pub rows: usize,
    pub blocks: usize,
    pub block_size: usize,
    pub term: NonsmoothTerm<f64>,
    pub seed: u64,
}

fn cast_term<T: Scalar>(t: NonsmoothTerm<f64>) -> NonsmoothTerm<T> {
    match t {
        NonsmoothTerm::Zero => NonsmoothTerm::Zero,
        NonsmoothTerm::L1 { weight } => NonsmoothTerm::L1 { weight: T::lit(weight) },
        NonsmoothTerm::GroupL2 { weight } => NonsmoothTerm::GroupL2 { weight: T::lit(weight) },
        NonsmoothTerm::Box { lo, hi } => NonsmoothTerm::Box {
            lo: T::lit(lo),
            hi: T::lit(hi),
        },
    }
}

fn gaussian_matrix<T: Scalar>(rows: usize, cols: usize, scale: f64, rng: &mut SplitMix64) -> DenseMatrix<T> {
    DenseMatrix::from_fn(rows, cols, |_, _| T::lit(scale * rng.gaussian()))
}

/// `A_ij ~ N(0, 1/M)`, every fourth block of the planted signal nonzero,
/// `b = A x_true + 0.1 noise`.
pub fn make_lasso<T: Scalar>(spec: &LassoSpec) -> Result<CompositeQuadraticProblem<T>> {
    if spec.rows == 0 {
        return Err(ProblemError::invalid("rows", "need at least one row"));
    }
    let partition = BlockPartition::new(spec.blocks, spec.block_size)?;
    spec.term.validate("h")?;
    let mut rng = SplitMix64::new(spec.seed);
    let n = partition.dimension();
    let a: DenseMatrix<f64> = gaussian_matrix(spec.rows, n, 1.0 / (spec.rows as f64).sqrt(), &mut rng);
    let mut x_true = vec![0.0; n];
    for k in (0..spec.blocks).step_by(4) {
        for i in partition.range(k) {
            x_true[i] = rng.gaussian();
        }
    }
    let mut b = a.matvec(&x_true)?;
    for v in &mut b {
        *v += 0.1 * rng.gaussian();
    }
    let a = DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| T::lit(a.get(i, j)));
    CompositeQuadraticProblem::from_matrix(
        a,
        spec.block_size,
        b.into_iter().map(T::lit).collect(),
        vec![cast_term(spec.term); spec.blocks],
    )
}

/// Instances whose blocks fall in a prescribed rank case:
/// `FullColumn` uses tall `16 x 2` blocks with `h = 0`,
/// `FullRow` uses fat `2 x 3` blocks and `Neither` uses `6 x 3` blocks of rank 2,
/// both boxed in `[-1, 1]`.
pub fn make_rank_case_instance<T: Scalar>(
    case: RankCase,
    blocks: usize,
    seed: u64,
) -> Result<CompositeQuadraticProblem<T>> {
    let mut rng = SplitMix64::new(seed);
    let (m, n) = match case {
        RankCase::FullColumn => (16, 2),
        RankCase::FullRow => (2, 3),
        RankCase::Neither => (6, 3),
    };
    let partition = BlockPartition::new(blocks, n)?;
    let scale = 1.0 / (m as f64).sqrt();
    let mut mats = Vec::with_capacity(blocks);
    for _ in 0..blocks {
        let blk: DenseMatrix<f64> = match case {
            RankCase::Neither => {
                let g: DenseMatrix<f64> = gaussian_matrix(m, 2, scale, &mut rng);
                let h: DenseMatrix<f64> = gaussian_matrix(2, n, 1.0, &mut rng);
                g.matmul(&h)?
            }
            _ => gaussian_matrix(m, n, scale, &mut rng),
        };
        mats.push(DenseMatrix::from_fn(m, n, |i, j| T::lit(blk.get(i, j))));
    }
    let b_scale = if case == RankCase::FullColumn { 1.0 } else { 3.0 };
    let b = (0..m).map(|_| T::lit(b_scale * rng.gaussian())).collect();
    let term = match case {
        RankCase::FullColumn => NonsmoothTerm::Zero,
        _ => NonsmoothTerm::Box {
            lo: -T::one(),
            hi: T::one(),
        },
    };
    CompositeQuadraticProblem::new(partition, mats, b, vec![term; blocks])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::SmoothOracle;

    #[test]
    fn table1_diagonal_examples() {
        let o = make_table1_diagonal(2, 1.0f64).unwrap();
        assert_eq!(o.value(&[1.0, 1.0]), 1.0);
        assert_eq!(o.gradient(&[1.0, 1.0]), vec![1.0, 1.0]);
        let o = make_table1_diagonal(3, 2.0f64).unwrap();
        assert_eq!(o.coordinate_lipschitz(), vec![2.0; 3]);
        assert!((o.lipschitz() - 2.0).abs() < 1e-12);
        assert_eq!(o.known_optimum().unwrap(), (vec![0.0; 3], 0.0));
    }

    #[test]
    fn table1_full_examples() {
        let o = make_table1_full(4, 4.0f64).unwrap();
        assert_eq!(o.value(&[1.0; 4]), 8.0);
        assert_eq!(o.coordinate_lipschitz(), vec![1.0; 4]);
        assert!((o.lipschitz() - 4.0).abs() < 1e-12);
        assert_eq!(o.gradient(&[1.0, 0.0, 0.0, 0.0]), vec![1.0; 4]);
    }

    #[test]
    fn table1_rejects_bad_parameters() {
        assert!(make_table1_full::<f64>(0, 1.0).is_err());
        assert!(make_table1_diagonal::<f64>(3, 0.0).is_err());
    }

    #[test]
    fn table1_problems_match_oracles() {
        let x = [0.3f64, -1.2, 2.0, 0.5];
        let p = table1_full_problem(4, 3.0).unwrap();
        let o = make_table1_full(4, 3.0).unwrap();
        assert!((p.objective(&x).unwrap() - o.value(&x)).abs() < 1e-14);
        let p = table1_diagonal_problem(4, 3.0).unwrap();
        let o = make_table1_diagonal(4, 3.0).unwrap();
        assert!((p.objective(&x).unwrap() - o.value(&x)).abs() < 1e-14);
    }

    #[test]
    fn toeplitz_shapes() {
        let t = toeplitz_matrix::<f64>(3);
        assert_eq!(t.as_slice(), &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(toeplitz_start::<f64>(5).unwrap(), vec![1.0, 0.125, 0.75, 1.0, 1.0]);
        assert!(make_toeplitz_instance::<f64>(2).is_err());
        let (p, _) = make_toeplitz_instance::<f64>(6).unwrap();
        assert_eq!(p.objective(&[0.0; 6]).unwrap(), 0.0);
        let x = [1.0, 2.0, -1.0, 0.5, 0.0, 3.0];
        let tx = t_times(&x);
        let direct: f64 = tx.iter().map(|v| v * v).sum();
        assert!((p.objective(&x).unwrap() - direct).abs() < 1e-12);
    }

    fn t_times(x: &[f64]) -> Vec<f64> {
        toeplitz_matrix::<f64>(x.len()).matvec(x).unwrap()
    }

    #[test]
    fn toeplitz_block_constants() {
        let (p, _) = make_toeplitz_instance::<f64>(10).unwrap();
        let c = p.compute_constants().unwrap();
        for (k, &lk) in c.block_lipschitz.iter().enumerate() {
            let want = if k == 0 || k == 9 { 4.0 } else { 6.0 };
            assert!((lk - want).abs() < 1e-12);
        }
        let want = 2.0 * (1.0 + 2.0 * (std::f64::consts::PI / 11.0).cos()).powi(2);
        assert!((c.lipschitz - want).abs() < 1e-9 && c.lipschitz <= 18.0);
    }

    #[test]
    fn lasso_is_deterministic_and_full_column_rank() {
        let spec = LassoSpec {
            rows: 30,
            blocks: 20,
            block_size: 1,
            term: NonsmoothTerm::L1 { weight: 0.1 },
            seed: 11,
        };
        let a = make_lasso::<f64>(&spec).unwrap();
        let b = make_lasso::<f64>(&spec).unwrap();
        assert_eq!(a, b);
        let c = a.compute_constants().unwrap();
        assert!(c.strong_convexity > 0.0);
        assert_eq!(c.rank.unwrap().case, RankCase::FullColumn);
    }

    #[test]
    fn rank_cases_are_classified_as_built() {
        for case in [RankCase::FullColumn, RankCase::FullRow, RankCase::Neither] {
            let p = make_rank_case_instance::<f64>(case, 5, 3).unwrap();
            let r = p.compute_constants().unwrap().rank.unwrap();
            assert_eq!(r.case, case);
        }
    }
}
