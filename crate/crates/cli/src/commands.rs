use crate::plan::ExperimentPlan;
use anyhow::{Context, Result};
use bcd_core::bounds::{beta_estimate, bound_report, numerator, rate_factor, BoundError, BoundInputs, BoundKind, BoundReport, R0Estimate};
use bcd_core::io::{fmt_float, write_bound_csv, write_bound_notes, write_constants, write_report_csv, write_report_text, write_trajectory_csv};
use bcd_core::problems::{BuiltProblem, ProblemSpec};
use bcd_core::solvers::{Algorithm, StepsizePolicy, Trajectory};
use bcd_core::suite::{run_suite, Instance, SuiteName};
use bcd_core::verify::{envelope_for, CheckMode, CheckReport, TightnessCase};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Bound-to-gap ratio at which a bound counts as tight in the summary.
const WITHIN_FACTOR: f64 = 2.0;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let mut w = create(dir, name)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn build_instance(spec: &ProblemSpec) -> Result<Instance> {
    let BuiltProblem { problem, start, label } = spec.build::<f64>()?;
    Ok(Instance::new(label, problem, start)?)
}

/// `beta` for the smooth scalar-block problems CGD accepts.
fn beta_for(inst: &Instance) -> Result<Option<f64>> {
    if !(inst.problem.is_smooth() && inst.problem.block_size() == 1) {
        return Ok(None);
    }
    let o = inst.problem.to_quadratic_oracle()?;
    Ok(Some(beta_estimate(&o)?.estimate))
}

fn r0_line(r0: &R0Estimate<f64>) -> String {
    format!(
        "R0 = {} ({:?}, {})",
        fmt_float(r0.value),
        r0.method,
        if r0.certified { "certified" } else { "heuristic" }
    )
}

/// Constants and the statement checks that go with them.
fn constants_text(spec: &ProblemSpec, inst: &Instance, r0: &R0Estimate<f64>) -> Result<String> {
    let mut buf = Vec::new();
    write_constants(&mut buf, &inst.constants)?;
    let mut s = String::from_utf8(buf)?;
    writeln!(s, "{}", r0_line(r0))?;
    writeln!(s, "Delta0 = {}", fmt_float(inst.delta0()?))?;
    writeln!(s, "f_star = {} ({:?})", fmt_float(inst.reference.f), inst.reference.method)?;
    if let ProblemSpec::Toeplitz(_) = spec {
        let l = inst.constants.lipschitz;
        writeln!(s, "statement L <= 18: L = {} {}", fmt_float(l), if l <= 18.0 { "holds" } else { "VIOLATED" })?;
    }
    let kn = inst.constants.total_dimension();
    if kn < 3 {
        writeln!(s, "notice: K N = {kn}; the theorem 1 and theorem 2 bounds need K N >= 3 and are left empty")?;
    }
    Ok(s)
}

fn notes_text(report: &BoundReport<f64>) -> Result<String> {
    let mut buf = Vec::new();
    write_bound_notes(&mut buf, report)?;
    Ok(String::from_utf8(buf)?)
}

struct RunOutcome {
    summary: String,
    checks: Vec<CheckReport>,
}

/// First `r >= 1` with `bound(r) <= 2 gap(r)`.
fn first_within(t: &Trajectory<f64>, inputs: &BoundInputs<f64>, kind: BoundKind) -> Option<usize> {
    t.cycles.iter().enumerate().skip(1).find_map(|(r, c)| {
        let gap = c.gap?;
        let b = bcd_core::bounds::evaluate(kind, inputs, r).ok()?;
        (gap > 0.0 && b <= WITHIN_FACTOR * gap).then_some(r)
    })
}

fn execute_run(
    inst: &Instance,
    planned: &crate::plan::PlannedRun,
    kinds: &[BoundKind],
    beta: Option<f64>,
    c_prior: f64,
    out: &Path,
) -> Result<RunOutcome> {
    let t = inst.run(&planned.run).with_context(|| format!("run {}", planned.name))?;
    let mut w = create(out, &format!("trajectory_{}.csv", planned.name))?;
    write_trajectory_csv(&mut w, &t)?;
    w.flush()?;

    let (mut inputs, certified) = inst.bound_inputs(&t)?;
    inputs = inputs.with_c_prior(c_prior);
    if let Some(b) = beta {
        inputs = inputs.with_beta(b);
    }
    let last = t.last();
    let pmin = t.stepsizes.iter().copied().fold(f64::INFINITY, f64::min);
    let pmax = t.stepsizes.iter().copied().fold(0.0, f64::max);
    let mut s = String::new();
    writeln!(s, "run {}", planned.name)?;
    writeln!(s, "  algorithm = {}", t.algorithm.name())?;
    writeln!(s, "  order = {}", t.order.name())?;
    writeln!(s, "  stepsizes = {} (P_min = {}, P_max = {})", planned.run.stepsizes.name(), fmt_float(pmin), fmt_float(pmax))?;
    writeln!(s, "  cycles = {}{}", t.len() - 1, if t.stopped_early { " (stopped early)" } else { "" })?;
    writeln!(s, "  final objective = {}", fmt_float(last.objective))?;
    writeln!(s, "  final gap = {}", last.gap.map(fmt_float).unwrap_or_default())?;
    writeln!(s, "  R0 = {} ({})", fmt_float(inputs.r0_upper), if certified { "certified" } else { "heuristic" })?;
    for &kind in kinds.iter().filter(|k| k.admits(t.algorithm)) {
        match (numerator(kind, &inputs), rate_factor(kind, &inputs)) {
            (Ok(x), Ok(f)) => {
                let within = first_within(&t, &inputs, kind).map(|r| r.to_string()).unwrap_or_else(|| "never".into());
                writeln!(
                    s,
                    "  bound {} numerator = {} constant = {} first cycle within {WITHIN_FACTOR}x of gap = {within}",
                    kind.name(),
                    fmt_float(x),
                    fmt_float(f)
                )?;
            }
            (Err(BoundError::Inapplicable { reason, .. }), _) | (_, Err(BoundError::Inapplicable { reason, .. })) => {
                writeln!(s, "  bound {} inapplicable: {reason}", kind.name())?
            }
            (Err(e), _) | (_, Err(e)) => return Err(e.into()),
        }
    }
    let mut checks = Vec::new();
    for &kind in &planned.envelopes {
        let rep = envelope_for(&t, kind, &inputs, certified)?;
        let name = format!("{}/{}", planned.name, rep.name);
        writeln!(s, "  check {}", rep.clone().renamed(name.clone()))?;
        checks.push(rep.renamed(name));
    }
    Ok(RunOutcome { summary: s, checks })
}

/// Returns whether every asserted envelope check passed.
pub fn cmd_run(plan: &ExperimentPlan, out: &Path) -> Result<bool> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let inst = build_instance(&plan.problem)?;
    let beta = beta_for(&inst)?;
    let mut kinds = plan.bounds.clone();
    for r in &plan.runs {
        for k in &r.envelopes {
            if !kinds.contains(k) {
                kinds.push(*k);
            }
        }
    }

    let outcomes: Vec<Result<RunOutcome>> = plan
        .runs
        .par_iter()
        .map(|r| execute_run(&inst, r, &kinds, beta, plan.c_prior, out))
        .collect();
    let outcomes: Vec<RunOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let r0 = inst.r0(None)?;
    let mut inputs = BoundInputs::new(inst.constants.clone(), r0.value, inst.delta0()?).with_c_prior(plan.c_prior);
    if let Some(b) = beta {
        inputs = inputs.with_beta(b);
    }
    let cgd = plan.runs.iter().find(|r| r.run.algorithm == Algorithm::Cgd);
    if let Some(r) = cgd {
        inputs = inputs.with_stepsizes(r.run.stepsizes.realize(inst.constants.lipschitz, &inst.constants.block_lipschitz)?);
    }
    let report = bound_report(&plan.bounds, &inputs, plan.rmax);
    let mut w = create(out, "bounds.csv")?;
    write_bound_csv(&mut w, &report)?;
    w.flush()?;

    let mut s = String::new();
    writeln!(s, "problem {}", inst.name)?;
    writeln!(s, "seed = {}", plan.seed)?;
    s.push_str(&constants_text(&plan.problem, &inst, &r0)?);
    writeln!(s, "bounds.csv: r = 1..{}", plan.rmax)?;
    if let Some(r) = cgd {
        writeln!(s, "bounds.csv: coordinate-descent bounds use the stepsizes of run {}", r.name)?;
    }
    s.push_str(&notes_text(&report)?);
    let mut checks = Vec::new();
    for o in outcomes {
        s.push_str(&o.summary);
        checks.extend(o.checks);
    }
    let ok = checks.iter().all(|c| c.ok());
    if !checks.is_empty() {
        let mut w = create(out, "checks.txt")?;
        write_report_text(&mut w, &checks)?;
        w.flush()?;
        write_report_csv(create(out, "checks.csv")?, &checks)?;
        writeln!(s, "checks: {} of {} passed", checks.iter().filter(|c| c.ok()).count(), checks.len())?;
    }
    write_text(out, "summary.txt", &s)?;
    print!("{s}");
    Ok(ok)
}

/// Every bound kind for the plan's problem, plus constants on stdout.
pub fn cmd_bounds(spec: &ProblemSpec, rmax: usize, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let inst = build_instance(spec)?;
    let r0 = inst.r0(None)?;
    let c = &inst.constants;
    let p = StepsizePolicy::GlobalL.realize(c.lipschitz, &c.block_lipschitz)?;
    let mut inputs = BoundInputs::new(c.clone(), r0.value, inst.delta0()?).with_stepsizes(p);
    if let Some(b) = beta_for(&inst)? {
        inputs = inputs.with_beta(b);
    }
    let report = bound_report(&BoundKind::ALL, &inputs, rmax);
    let mut w = create(out, "bounds.csv")?;
    write_bound_csv(&mut w, &report)?;
    w.flush()?;
    let mut s = format!("problem {}\n", inst.name);
    s.push_str(&constants_text(spec, &inst, &r0)?);
    writeln!(s, "coordinate-descent bounds use P_k = L")?;
    s.push_str(&notes_text(&report)?);
    write_text(out, "constants.txt", &s)?;
    print!("{s}");
    Ok(())
}

fn tightness_table(cases: &[TightnessCase]) -> String {
    let mut s = String::from("K,objective,stated_objective,rowwise_objective,initial_distance_sq,ratio,ratio_bound,L,L_min,L_max\n");
    for c in cases {
        let row = [
            c.objective,
            c.stated_objective,
            c.exact_objective,
            c.initial_distance_sq,
            c.ratio,
            c.ratio_bound,
            c.lipschitz,
            c.block_lipschitz_min,
            c.block_lipschitz_max,
        ];
        let cells: Vec<String> = row.iter().map(|&v| fmt_float(v)).collect();
        s.push_str(&format!("{},{}\n", c.k, cells.join(",")));
    }
    s
}

/// Returns whether every asserted check passed.
pub fn cmd_verify(suite: SuiteName, seed: u64, out: Option<&PathBuf>) -> Result<bool> {
    let outcome = run_suite(suite, seed)?;
    let ok = outcome.ok();
    let mut text = Vec::new();
    write_report_text(&mut text, &outcome.reports)?;
    let table = (!outcome.tightness.is_empty()).then(|| tightness_table(&outcome.tightness));
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let mut w = create(dir, &format!("verify_{suite}.txt"))?;
        w.write_all(&text)?;
        w.flush()?;
        write_report_csv(create(dir, &format!("verify_{suite}.csv"))?, &outcome.reports)?;
        if let Some(t) = &table {
            write_text(dir, "tightness_ratio.csv", t)?;
        }
    }
    let stdout = std::io::stdout();
    let mut o = stdout.lock();
    if ok {
        for r in outcome.reports.iter().filter(|r| r.mode != CheckMode::Asserted) {
            writeln!(o, "{r}")?;
        }
    } else {
        o.write_all(&text)?;
    }
    if let Some(t) = &table {
        write!(o, "{t}")?;
    }
    writeln!(
        o,
        "suite {suite} seed {seed}: {} checks, {} asserted, {} reported, {} skipped, {} failed",
        outcome.reports.len(),
        outcome.count(CheckMode::Asserted),
        outcome.count(CheckMode::ReportOnly),
        outcome.count(CheckMode::Skipped),
        outcome.failures().count()
    )?;
    Ok(ok)
}
