//! Experiment plans. The schema is documented in `docs/plan-schema.md`.

use anyhow::{bail, Context, Result};
use bcd_core::bounds::BoundKind;
use bcd_core::problems::{load_problem_spec, ProblemSpec};
use bcd_core::rng::derive_seed;
use bcd_core::solvers::{Algorithm, BlockOrder, SolverRun, StepsizePolicy};
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    #[default]
    Cyclic,
    RandomPermutation,
    SampledWithReplacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NamedStepsizes {
    GlobalL,
    #[default]
    BlockLk,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StepsizeSpec {
    Named(NamedStepsizes),
    Fixed(Vec<f64>),
}

impl Default for StepsizeSpec {
    fn default() -> Self {
        Self::Named(NamedStepsizes::default())
    }
}

impl StepsizeSpec {
    fn policy(&self) -> StepsizePolicy<f64> {
        match self {
            Self::Named(NamedStepsizes::GlobalL) => StepsizePolicy::GlobalL,
            Self::Named(NamedStepsizes::BlockLk) => StepsizePolicy::BlockLk,
            Self::Fixed(v) => StepsizePolicy::Fixed(v.clone()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default)]
    pub name: Option<String>,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub order: OrderKind,
    /// Seed of a randomized order; derived from the plan seed and run index when absent.
    #[serde(default)]
    pub order_seed: Option<u64>,
    #[serde(default)]
    pub stepsizes: StepsizeSpec,
    pub max_cycles: usize,
    /// Bounds checked against this run's trajectory.
    #[serde(default)]
    pub envelopes: Vec<BoundKind>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub problem: serde_json::Value,
    pub runs: Vec<RunFile>,
    /// Bound curves written to `bounds.csv`.
    #[serde(default)]
    pub bounds: Vec<BoundKind>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub rmax: Option<usize>,
    #[serde(default)]
    pub c_prior: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub name: String,
    pub run: SolverRun<f64>,
    pub envelopes: Vec<BoundKind>,
}

/// A validated plan.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub problem: ProblemSpec,
    pub runs: Vec<PlannedRun>,
    pub bounds: Vec<BoundKind>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub rmax: usize,
    pub c_prior: f64,
}

fn parse_problem(value: serde_json::Value, base: &Path) -> Result<ProblemSpec> {
    if let serde_json::Value::Object(map) = &value {
        if let Some(file) = map.get("file") {
            if map.len() != 1 {
                bail!("problem: a problem file reference takes no other fields");
            }
            let Some(file) = file.as_str() else {
                bail!("problem.file: expected a string");
            };
            let path = base.join(file);
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("problem.file: cannot read {}", path.display()))?;
            return load_problem_spec(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()));
        }
    }
    ProblemSpec::from_value(value).map_err(|e| anyhow::anyhow!("problem.{e}"))
}

fn order(kind: OrderKind, seed: u64) -> BlockOrder {
    match kind {
        OrderKind::Cyclic => BlockOrder::Cyclic,
        OrderKind::RandomPermutation => BlockOrder::RandomPermutation { seed },
        OrderKind::SampledWithReplacement => BlockOrder::SampledWithReplacement { seed },
    }
}

fn kind_name(k: OrderKind) -> &'static str {
    match k {
        OrderKind::Cyclic => "cyclic",
        OrderKind::RandomPermutation => "permuted",
        OrderKind::SampledWithReplacement => "sampled",
    }
}

fn file_stem(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')) && !s.starts_with('.')
}

impl ExperimentPlan {
    /// Parses and validates a plan. `base` resolves relative problem files;
    /// `seed` overrides the plan seed.
    pub fn parse(text: &str, base: &Path, seed: Option<u64>) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: PlanFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("{path}: {}", e.into_inner())
        })?;
        let problem = parse_problem(file.problem, base)?;
        let seed = seed.or(file.seed).unwrap_or(DEFAULT_SEED);
        if file.runs.is_empty() {
            bail!("runs: at least one run is required");
        }
        let mut runs = Vec::new();
        for (i, r) in file.runs.into_iter().enumerate() {
            if r.max_cycles == 0 {
                bail!("runs[{i}].max_cycles: must be at least 1");
            }
            if r.order == OrderKind::Cyclic && r.order_seed.is_some() {
                bail!("runs[{i}].order_seed: cyclic order takes no seed");
            }
            for (j, kind) in r.envelopes.iter().enumerate() {
                if !kind.admits(r.algorithm) {
                    bail!(
                        "runs[{i}].envelopes[{j}]: bound `{}` does not cover `{}` trajectories",
                        kind.name(),
                        r.algorithm.name()
                    );
                }
            }
            let order = order(r.order, r.order_seed.unwrap_or_else(|| derive_seed(seed, i as u64)));
            let policy = r.stepsizes.policy();
            let name = r
                .name
                .unwrap_or_else(|| format!("{}_{}_{}", r.algorithm.name(), policy.name(), kind_name(r.order)));
            if !file_stem(&name) {
                bail!("runs[{i}].name: `{name}` must use letters, digits, `_`, `-` or `.`");
            }
            let name = format!("{i:02}_{name}");
            runs.push(PlannedRun {
                name,
                run: SolverRun::new(r.algorithm, policy, r.max_cycles).with_order(order),
                envelopes: r.envelopes,
            });
        }
        let mut bounds = Vec::new();
        for (j, kind) in file.bounds.into_iter().enumerate() {
            if bounds.contains(&kind) {
                bail!("bounds[{j}]: duplicate bound `{}`", kind.name());
            }
            bounds.push(kind);
        }
        let rmax = match file.rmax {
            Some(0) => bail!("rmax: must be at least 1"),
            Some(r) => r,
            None => runs.iter().map(|r| r.run.max_cycles).max().unwrap_or(1),
        };
        let c_prior = file.c_prior.unwrap_or(1.0);
        if !(c_prior.is_finite() && c_prior > 0.0) {
            bail!("c_prior: must be positive");
        }
        Ok(Self {
            problem,
            runs,
            bounds,
            out: file.out,
            seed,
            rmax,
            c_prior,
        })
    }

    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read plan {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, seed).with_context(|| format!("invalid plan {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentPlan> {
        ExperimentPlan::parse(text, Path::new("."), None)
    }

    #[test]
    fn minimal_plan() {
        let p = parse(r#"{"problem": {"kind": "toeplitz", "blocks": 10},
                          "runs": [{"algorithm": "exact_bcd", "max_cycles": 5}]}"#)
        .unwrap();
        assert_eq!(p.runs[0].name, "00_exact_bcd_block_lk_cyclic");
        assert_eq!(p.rmax, 5);
        assert_eq!(p.seed, DEFAULT_SEED);
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse(r#"{"problem": {"kind": "toeplitz", "blocks": 10},
                          "runs": [{"algorithm": "exact_bcd", "max_cycles": 5, "colour": 1}]}"#)
        .unwrap_err();
        assert!(e.to_string().starts_with("runs[0]"), "{e}");
        let e = parse(r#"{"problem": {"kind": "toeplitz", "blocks": "ten"}, "runs": []}"#).unwrap_err();
        assert!(e.to_string().starts_with("problem.blocks"), "{e}");
        let e = parse(r#"{"problem": {"kind": "toeplitz", "blocks": 10},
                          "runs": [{"algorithm": "bcpg", "max_cycles": 5, "envelopes": ["thm1_uniform", "gd"]}]}"#)
        .unwrap_err();
        assert!(e.to_string().starts_with("runs[0].envelopes[1]"), "{e}");
    }

    #[test]
    fn randomized_orders_derive_distinct_seeds() {
        let p = parse(r#"{"problem": {"kind": "toeplitz", "blocks": 10}, "seed": 3,
                          "runs": [{"algorithm": "bcpg", "order": "random_permutation", "max_cycles": 5},
                                   {"algorithm": "bcpg", "order": "random_permutation", "max_cycles": 5}]}"#)
        .unwrap();
        assert_ne!(p.runs[0].run.order, p.runs[1].run.order);
    }
}
