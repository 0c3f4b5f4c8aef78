//! Acceptance criteria, one line per criterion.
//!
//! Exit status is nonzero when any criterion fails, except for the stated-objective
//! sub-check of criterion 1, whose closed form disagrees with the construction it
//! describes. That sub-check still runs and still prints FAIL; every other part of
//! criterion 1 must pass.

use bcd_core::bounds::BoundKind;
use bcd_core::solvers::BlockOrder;
use bcd_core::suite::{
    bcd_envelopes, bcpg_envelopes, bound_identity_checks, composite_battery, equivalence_checks,
    gd_envelope, lasso_battery, lemma_suite, order_set, rank_battery, spectrum_checks,
    tightness_suite, truncation_suite, ENVELOPE_CYCLES, LASSO_ENVELOPE_INSTANCES,
};
use bcd_core::verify::{CheckMode, CheckReport};
use std::process::ExitCode;
use std::time::{Duration, Instant};

const SEED: u64 = 20_240_601;
const TRUNCATION_SEED: u64 = 7;

struct Outcome {
    pass: bool,
    /// Failures outside the documented stated-objective sub-check.
    unexpected: bool,
    detail: String,
}

fn asserted_pass(reports: &[CheckReport]) -> (bool, String) {
    let asserted: Vec<_> = reports.iter().filter(|r| r.mode == CheckMode::Asserted).collect();
    let failed: Vec<_> = asserted.iter().filter(|r| !r.pass).collect();
    let not_asserted = reports.len() - asserted.len();
    let worst = asserted.iter().map(|r| r.worst_violation).fold(0.0, f64::max);
    let mut detail = format!(
        "{} asserted checks, {} failed, worst_violation={worst:.3e}",
        asserted.len(),
        failed.len()
    );
    if not_asserted > 0 {
        detail.push_str(&format!(", {not_asserted} not asserted"));
    }
    for r in failed.iter().take(5) {
        detail.push_str(&format!("\n    {r}"));
    }
    (failed.is_empty() && !asserted.is_empty(), detail)
}

fn from_reports(reports: &[CheckReport]) -> Outcome {
    let (pass, detail) = asserted_pass(reports);
    Outcome {
        pass,
        unexpected: !pass,
        detail,
    }
}

/// Every listed report must be asserted and pass.
fn all_asserted(reports: &[CheckReport]) -> Outcome {
    let mut o = from_reports(reports);
    if reports.iter().any(|r| r.mode != CheckMode::Asserted) {
        o.pass = false;
        o.unexpected = true;
        o.detail.push_str("; expected every check asserted");
    }
    o
}

fn criterion_1() -> Outcome {
    let cases = tightness_suite().expect("tightness cases run");
    let mut pass = true;
    let mut unexpected = false;
    let mut detail = String::new();
    for c in &cases {
        for r in &c.reports {
            if !r.pass {
                pass = false;
                unexpected |= !r.name.ends_with("_objective_stated");
            }
        }
        let status = |suffix: &str| {
            c.reports
                .iter()
                .find(|r| r.name.ends_with(suffix))
                .map(|r| r.status())
                .unwrap_or("MISSING")
        };
        detail.push_str(&format!(
            "\n    K={:<3} x1 {} | g(x1)={:.12} stated={:.12} {} | rowwise={:.12} {} | ratio={:.6} >= {:.6} {}",
            c.k,
            status("_iterate"),
            c.objective,
            c.stated_objective,
            status("_objective_stated"),
            c.exact_objective,
            status("_objective_rowwise"),
            c.ratio,
            c.ratio_bound,
            status("_ratio"),
        ));
    }
    Outcome {
        pass,
        unexpected,
        detail,
    }
}

fn criterion_3(orders: &[BlockOrder]) -> Vec<CheckReport> {
    let mut out = Vec::new();
    for inst in &lasso_battery(SEED, LASSO_ENVELOPE_INSTANCES).expect("lasso battery") {
        for &order in orders {
            out.extend(
                bcpg_envelopes(inst, order, ENVELOPE_CYCLES)
                    .expect("bcpg envelopes")
                    .into_iter()
                    .filter(|r| {
                        r.name.ends_with(BoundKind::Thm1Uniform.name())
                            || r.name.ends_with(BoundKind::Thm1Blockwise.name())
                    }),
            );
        }
    }
    out
}

fn criterion_4(orders: &[BlockOrder]) -> Vec<CheckReport> {
    let mut out = Vec::new();
    for inst in &rank_battery(SEED).expect("rank battery") {
        let want = match inst.name.as_str() {
            "rank_full_column" => BoundKind::Thm2Case1,
            "rank_full_row" => BoundKind::Thm2Case2,
            _ => BoundKind::Thm2Case3,
        };
        for &order in orders {
            out.extend(
                bcd_envelopes(inst, order, ENVELOPE_CYCLES)
                    .expect("bcd envelopes")
                    .into_iter()
                    .filter(|r| r.name.ends_with(want.name())),
            );
        }
    }
    out
}

fn criterion_5(orders: &[BlockOrder]) -> Vec<CheckReport> {
    lemma_suite(SEED, orders).expect("lemma suite")
}

fn criterion_6() -> Vec<CheckReport> {
    composite_battery(SEED)
        .expect("battery")
        .iter()
        .filter(|i| i.problem.is_smooth())
        .map(|i| gd_envelope(i, ENVELOPE_CYCLES).expect("gd envelope"))
        .collect()
}

fn criterion_7() -> Vec<CheckReport> {
    bound_identity_checks()
        .expect("bound identities")
        .into_iter()
        .filter(|r| r.name.contains("beck_over_coro1"))
        .collect()
}

fn main() -> ExitCode {
    let cyclic = [BlockOrder::Cyclic];
    let permuted: Vec<BlockOrder> = order_set(SEED).into_iter().skip(1).collect();
    type Runner<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let criteria: Vec<(usize, &str, Duration, Runner)> = vec![
        (1, "tightness reproduction", Duration::from_secs(1), Box::new(criterion_1)),
        (2, "toeplitz spectrum", Duration::from_secs(1), Box::new(|| all_asserted(&spectrum_checks().expect("spectrum")))),
        (3, "theorem 1 envelopes", Duration::from_secs(30), Box::new(|| all_asserted(&criterion_3(&cyclic)))),
        (4, "theorem 2 envelopes", Duration::from_secs(30), Box::new(|| all_asserted(&criterion_4(&cyclic)))),
        (5, "lemma suites", Duration::from_secs(60), Box::new(|| from_reports(&criterion_5(&cyclic)))),
        (6, "gd baseline", Duration::from_secs(5), Box::new(|| all_asserted(&criterion_6()))),
        (7, "bound-comparison identities", Duration::from_secs(1), Box::new(|| all_asserted(&criterion_7()))),
        (
            8,
            "truncation constant",
            Duration::from_secs(30),
            Box::new(|| all_asserted(&truncation_suite(TRUNCATION_SEED).expect("truncation"))),
        ),
        (
            9,
            "equivalence oracle",
            Duration::from_secs(10),
            Box::new(|| {
                let reps: Vec<_> = equivalence_checks(SEED, BlockOrder::Cyclic)
                    .expect("equivalence")
                    .into_iter()
                    .filter(|r| r.name.contains("random_quadratic_"))
                    .collect();
                let mut o = all_asserted(&reps);
                if reps.len() != 20 {
                    o.pass = false;
                    o.unexpected = true;
                }
                o
            }),
        ),
        (
            10,
            "order robustness",
            Duration::from_secs(90),
            Box::new(|| {
                let mut reps = criterion_3(&permuted);
                reps.extend(criterion_4(&permuted));
                let o5 = from_reports(&criterion_5(&permuted));
                let mut o = all_asserted(&reps);
                o.detail = format!("{} | lemmas: {}", o.detail, o5.detail);
                o.pass &= o5.pass;
                o.unexpected |= o5.unexpected;
                o
            }),
        ),
    ];

    let mut unexpected = 0;
    let mut failed = 0;
    for (id, name, budget, run) in &criteria {
        let start = Instant::now();
        let mut o = run();
        let elapsed = start.elapsed();
        if elapsed > *budget {
            o.pass = false;
            o.unexpected = true;
            o.detail.push_str(&format!("; over the {budget:?} runtime budget"));
        }
        println!(
            "criterion {id:>2} {name}: {} ({:.3}s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            o.detail.trim_start()
        );
        if !o.pass {
            failed += 1;
        }
        if o.unexpected {
            unexpected += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed; {} unexpected failure(s)",
        criteria.len() - failed,
        criteria.len(),
        unexpected
    );
    if failed > unexpected {
        println!(
            "acceptance: criterion 1 fails only on the stated objective 1 + 9/4 (K-3) + 1/8; \
             the iterate gives 1 + 9/4 (K-4) + 49/36 + 1/8 because row K-2 of T x1 is -7/6"
        );
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
