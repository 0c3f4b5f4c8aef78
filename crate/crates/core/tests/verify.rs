use bcd_core::bounds::{beta_estimate, r0_upper_estimate, BoundInputs, BoundKind, BoundSpec};
use bcd_core::linalg::DenseMatrix;
use bcd_core::problems::{
    make_rank_case_instance, make_table1_full, make_toeplitz_instance, table1_diagonal_problem,
    table1_full_problem, CompositeQuadraticProblem, NonsmoothTerm, RankCase,
};
use bcd_core::solvers::{
    reference_optimum, run_bcd_exact, run_bcpg, run_cgd, run_gd_problem, Algorithm, BlockOrder,
    SolverRun, StepsizePolicy,
};
use bcd_core::suite::{lasso_battery, run_suite, SuiteName};
use bcd_core::verify::{
    appendix_one_pass_oracle, check_costtogo_bcd, check_costtogo_bcpg, check_descent_bcpg,
    check_descent_cgd, check_envelope, check_truncation_constant, CheckMode, VerifyError,
};

fn bcpg(policy: StepsizePolicy<f64>, cycles: usize) -> SolverRun<f64> {
    SolverRun::new(Algorithm::Bcpg, policy, cycles)
}

#[test]
fn one_step_to_zero_is_tight_for_lemma1() {
    let p = table1_diagonal_problem(6, 3.0).unwrap();
    let x0 = vec![1.0, -2.0, 0.5, 0.0, 3.0, 1.0];
    let t = run_bcpg(&p, &bcpg(StepsizePolicy::GlobalL, 1), &x0, Some(0.0)).unwrap();
    let lhs = t.cycles[0].objective - t.cycles[1].objective;
    let rhs: f64 = 1.5 * x0.iter().map(|v| v * v).sum::<f64>();
    assert!(t.cycles[1].objective <= 1e-28);
    assert!((lhs - rhs).abs() <= 1e-14 * rhs);
    let r = check_descent_bcpg(&t, &p).unwrap();
    assert!(r.pass && r.worst_violation <= 1e-15, "{r}");
}

#[test]
fn stationary_starts_give_zero_violations() {
    let p = table1_full_problem(10, 2.0).unwrap();
    let x0 = vec![0.0; 10];
    let t = run_bcpg(&p, &bcpg(StepsizePolicy::GlobalL, 5), &x0, Some(0.0)).unwrap();
    let r = check_descent_bcpg(&t, &p).unwrap();
    assert_eq!(r.worst_violation, 0.0);
    let o = make_table1_full(10, 2.0).unwrap();
    let t = run_cgd(&o, &SolverRun::new(Algorithm::Cgd, StepsizePolicy::GlobalL, 5), &x0, Some(0.0)).unwrap();
    for r in check_descent_cgd(&t, &o, 1.0).unwrap() {
        assert!(r.pass && r.worst_violation == 0.0, "{r}");
    }
}

#[test]
fn costtogo_bcpg_on_lasso_and_table1() {
    let inst = &lasso_battery(3, 1).unwrap()[0];
    for policy in [StepsizePolicy::GlobalL, StepsizePolicy::BlockLk] {
        let t = inst.run(&bcpg(policy, 200)).unwrap();
        let r0 = inst.r0(Some(&t)).unwrap();
        assert!(r0.certified);
        let r = check_costtogo_bcpg(&t, &inst.problem, &inst.constants, &r0, &inst.reference.x).unwrap();
        assert!(r.pass && r.mode == CheckMode::Asserted, "{r}");
    }
    let p = table1_full_problem(10, 2.0).unwrap();
    let x0: Vec<f64> = (0..10).map(|i| 1.0 - 0.15 * i as f64).collect();
    let refo = reference_optimum(&p).unwrap();
    let c = p.compute_constants().unwrap();
    let t = run_bcpg(&p, &bcpg(StepsizePolicy::GlobalL, 100), &x0, Some(refo.f)).unwrap();
    let r0 = r0_upper_estimate(&p, &c, &x0, &refo.x, refo.f, Some(&t)).unwrap();
    let r = check_costtogo_bcpg(&t, &p, &c, &r0, &refo.x).unwrap();
    assert!(r.pass && r.mode == CheckMode::Asserted, "{r}");
}

#[test]
fn costtogo_bcd_in_every_rank_case() {
    for case in [RankCase::FullColumn, RankCase::FullRow, RankCase::Neither] {
        let p = make_rank_case_instance::<f64>(case, 5, 21).unwrap();
        let c = p.compute_constants().unwrap();
        assert_eq!(c.rank.as_ref().unwrap().case, case);
        let x0 = p.project(&vec![1.0; p.dimension()]).unwrap();
        let refo = reference_optimum(&p).unwrap();
        let t = run_bcd_exact(&p, &SolverRun::new(Algorithm::ExactBcd, StepsizePolicy::BlockLk, 150), &x0, Some(refo.f)).unwrap();
        let r0 = r0_upper_estimate(&p, &c, &x0, &refo.x, refo.f, Some(&t)).unwrap();
        let r = check_costtogo_bcd(&t, &p, &c, &r0, &refo.x, None).unwrap();
        assert!(r.pass && r.mode == CheckMode::Asserted, "{case:?}: {r}");
        let r3 = check_costtogo_bcd(&t, &p, &c, &r0, &refo.x, Some(RankCase::Neither)).unwrap();
        assert!(r3.pass, "{r3}");
    }
}

#[test]
fn two_coordinates_skip_costtogo() {
    let p = table1_full_problem(2, 2.0).unwrap();
    let c = p.compute_constants().unwrap();
    let t = run_bcpg(&p, &bcpg(StepsizePolicy::GlobalL, 3), &[1.0, 0.0], Some(0.0)).unwrap();
    let r0 = r0_upper_estimate(&p, &c, &[1.0, 0.0], &[0.0, 0.0], 0.0, Some(&t)).unwrap();
    let r = check_costtogo_bcpg(&t, &p, &c, &r0, &[0.0, 0.0]).unwrap();
    assert_eq!(r.mode, CheckMode::Skipped);
    assert!(r.notes[0].contains("K N >= 3"));
    let spec = BoundSpec::new(BoundKind::Thm1Uniform, BoundInputs::new(c, r0.value, 1.0));
    assert_eq!(check_envelope(&t, &spec, true).unwrap().mode, CheckMode::Skipped);
}

#[test]
fn cgd_beta_and_exact_forms_hold_on_table1_full() {
    let o = make_table1_full(10, 2.0).unwrap();
    let x0: Vec<f64> = (0..10).map(|i| (i as f64 * 0.7).cos()).collect();
    let beta = beta_estimate(&o).unwrap();
    for order in [BlockOrder::Cyclic, BlockOrder::RandomPermutation { seed: 3 }] {
        let t = run_cgd(&o, &SolverRun::new(Algorithm::Cgd, StepsizePolicy::GlobalL, 80).with_order(order), &x0, Some(0.0)).unwrap();
        let reps = check_descent_cgd(&t, &o, beta.estimate).unwrap();
        assert_eq!(reps.len(), 3);
        for r in reps {
            assert!(r.pass, "{r}");
        }
    }
}

#[test]
fn envelopes_hold_and_pairings_are_enforced() {
    let p = table1_full_problem(10, 2.0).unwrap();
    let x0: Vec<f64> = (0..10).map(|i| i as f64 / 10.0).collect();
    let refo = reference_optimum(&p).unwrap();
    let c = p.compute_constants().unwrap();
    let t = run_gd_problem(&p, &SolverRun::new(Algorithm::Gd, StepsizePolicy::GlobalL, 100), &x0, Some(refo.f)).unwrap();
    let r0 = r0_upper_estimate(&p, &c, &x0, &refo.x, refo.f, Some(&t)).unwrap();
    let inputs = BoundInputs::new(c, r0.value, p.objective(&x0).unwrap() - refo.f);
    let r = check_envelope(&t, &BoundSpec::new(BoundKind::Gd, inputs.clone()), r0.certified).unwrap();
    assert!(r.pass && r.mode == CheckMode::Asserted, "{r}");
    let bcd = run_bcd_exact(&p, &SolverRun::new(Algorithm::ExactBcd, StepsizePolicy::BlockLk, 5), &x0, Some(refo.f)).unwrap();
    assert!(matches!(
        check_envelope(&bcd, &BoundSpec::new(BoundKind::Gd, inputs), true),
        Err(VerifyError::Pairing { .. })
    ));
}

#[test]
fn heuristic_radius_reports_instead_of_asserting() {
    let inst = &lasso_battery(2, 1).unwrap()[0];
    let t = inst.run(&bcpg(StepsizePolicy::GlobalL, 50)).unwrap();
    let inputs = BoundInputs::new(inst.constants.clone(), 1.0, inst.delta0().unwrap());
    let r = check_envelope(&t, &BoundSpec::new(BoundKind::Thm1Uniform, inputs), false).unwrap();
    assert_eq!(r.mode, CheckMode::ReportOnly);
}

/// A doctored trajectory must be caught.
#[test]
fn corrupted_trajectories_fail() {
    let inst = &lasso_battery(4, 1).unwrap()[0];
    let mut t = inst.run(&bcpg(StepsizePolicy::BlockLk, 40)).unwrap();
    assert!(check_descent_bcpg(&t, &inst.problem).unwrap().pass);
    t.cycles[5].x[0] += 0.5;
    assert!(!check_descent_bcpg(&t, &inst.problem).unwrap().pass);

    let mut t = inst.run(&bcpg(StepsizePolicy::GlobalL, 40)).unwrap();
    let (c, r0) = (inst.constants.clone(), inst.r0(Some(&t)).unwrap());
    let inputs = BoundInputs::new(c, r0.value, inst.delta0().unwrap());
    let spec = BoundSpec::new(BoundKind::Thm1Uniform, inputs);
    assert!(check_envelope(&t, &spec, true).unwrap().pass);
    let b = spec.evaluate(30).unwrap();
    t.cycles[30].gap = Some(2.0 * b);
    let r = check_envelope(&t, &spec, true).unwrap();
    assert!(!r.pass && r.worst_cycle == Some(30));
}

#[test]
fn one_pass_oracle_matches_exact_pass_from_random_starts() {
    for k in [5usize, 10, 25] {
        let (p, _) = make_toeplitz_instance::<f64>(k).unwrap();
        for s in 0..20 {
            let x0: Vec<f64> = (0..k).map(|i| ((i * 7 + s * 13) as f64).sin()).collect();
            let t = run_bcd_exact(&p, &SolverRun::new(Algorithm::ExactBcd, StepsizePolicy::BlockLk, 1), &x0, None).unwrap();
            let o = appendix_one_pass_oracle(&x0, k).unwrap();
            for (a, b) in t.cycles[1].x.iter().zip(&o) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn truncation_constant_seed_7() {
    let r = check_truncation_constant(&[64], 100, 7).unwrap();
    assert!(r.pass, "{r}");
    assert!(check_truncation_constant(&[1], 1, 7).is_err());
}

#[test]
fn group_terms_and_boxes_pass_lemma1() {
    let a = DenseMatrix::from_fn(6, 6, |i, j| ((i * 6 + j) as f64 * 0.37).sin());
    let p = CompositeQuadraticProblem::from_matrix(
        a,
        2,
        vec![1.0, -1.0, 0.5, 0.0, 2.0, -0.5],
        vec![
            NonsmoothTerm::GroupL2 { weight: 0.3 },
            NonsmoothTerm::Box { lo: -0.2, hi: 0.4 },
            NonsmoothTerm::L1 { weight: 0.1 },
        ],
    )
    .unwrap();
    let x0 = p.project(&[1.0; 6]).unwrap();
    let t = run_bcpg(&p, &bcpg(StepsizePolicy::BlockLk, 60), &x0, None).unwrap();
    assert!(check_descent_bcpg(&t, &p).unwrap().pass);
}

#[test]
fn tightness_suite_reports_each_subcheck() {
    let out = run_suite(SuiteName::Tightness, 0).unwrap();
    assert_eq!(out.tightness.len(), 4);
    assert_eq!(out.reports.len(), 16);
    let failing: Vec<_> = out.failures().map(|r| r.name.as_str()).collect();
    assert_eq!(failing.len(), 4);
    assert!(failing.iter().all(|n| n.ends_with("_objective_stated")));
}

#[test]
fn suites_are_deterministic() {
    let a = check_truncation_constant(&[8, 16], 10, 11).unwrap();
    let b = check_truncation_constant(&[8, 16], 10, 11).unwrap();
    assert_eq!(a, b);
    let inst = &lasso_battery(11, 1).unwrap()[0];
    let order = BlockOrder::RandomPermutation { seed: 2 };
    let x = bcd_core::suite::lemma_checks_instance(inst, order, 30).unwrap();
    let y = bcd_core::suite::lemma_checks_instance(inst, order, 30).unwrap();
    assert_eq!(x, y);
}
