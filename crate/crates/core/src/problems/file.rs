//! JSON problem descriptions.
//!
//! ```json
//! {"kind": "lasso", "rows": 30, "blocks": 20, "h": {"kind": "l1", "weight": 0.1}, "seed": 1}
//! {"kind": "toeplitz", "blocks": 10}
//! {"kind": "table1_full", "blocks": 100, "lipschitz": 4.0}
//! {"kind": "rank_case", "case": "full_row", "blocks": 5, "seed": 3}
//! {"kind": "explicit", "rows": 1, "blocks": 2, "entries": [1.0, 2.0], "b": [1.0],
//!  "h": [{"kind": "zero"}, {"kind": "box", "lo": -1, "hi": 1}]}
//! ```
//!
//! `h` is either one term applied to every block or a list with one term per block.

use super::generators::{
    make_lasso, make_rank_case_instance, make_toeplitz_instance, table1_diagonal_problem,
    table1_full_problem, LassoSpec,
};
use super::{CompositeQuadraticProblem, NonsmoothTerm, ProblemError, RankCase, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermSpec {
    Zero,
    L1 { weight: f64 },
    GroupL2 { weight: f64 },
    Box { lo: f64, hi: f64 },
}

impl TermSpec {
    pub fn to_term<T: Scalar>(self) -> NonsmoothTerm<T> {
        match self {
            Self::Zero => NonsmoothTerm::Zero,
            Self::L1 { weight } => NonsmoothTerm::L1 { weight: T::lit(weight) },
            Self::GroupL2 { weight } => NonsmoothTerm::GroupL2 { weight: T::lit(weight) },
            Self::Box { lo, hi } => NonsmoothTerm::Box {
                lo: T::lit(lo),
                hi: T::lit(hi),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TermsSpec {
    One(TermSpec),
    PerBlock(Vec<TermSpec>),
}

impl TermsSpec {
    fn expand<T: Scalar>(&self, blocks: usize) -> Result<Vec<NonsmoothTerm<T>>> {
        match self {
            Self::One(t) => {
                let term = t.to_term::<T>();
                term.validate("h")?;
                Ok(vec![term; blocks])
            }
            Self::PerBlock(list) => {
                if list.len() != blocks {
                    return Err(ProblemError::invalid(
                        "h",
                        format!("expected {blocks} per-block terms, found {}", list.len()),
                    ));
                }
                list.iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let term = t.to_term::<T>();
                        term.validate(&format!("h[{i}]"))?;
                        Ok(term)
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankCaseSpec {
    FullColumn,
    FullRow,
    Neither,
}

impl From<RankCaseSpec> for RankCase {
    fn from(c: RankCaseSpec) -> Self {
        match c {
            RankCaseSpec::FullColumn => RankCase::FullColumn,
            RankCaseSpec::FullRow => RankCase::FullRow,
            RankCaseSpec::Neither => RankCase::Neither,
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoParams {
    pub rows: usize,
    pub blocks: usize,
    #[serde(default = "one")]
    pub block_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<TermsSpec>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToeplitzParams {
    pub blocks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Params {
    pub blocks: usize,
    pub lipschitz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankCaseParams {
    pub case: RankCaseSpec,
    pub blocks: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitParams {
    pub rows: usize,
    pub blocks: usize,
    #[serde(default = "one")]
    pub block_size: usize,
    /// Row-major entries of `A = [A_1, ..., A_K]`.
    pub entries: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<TermsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Lasso(LassoParams),
    Toeplitz(ToeplitzParams),
    Table1Diag(Table1Params),
    Table1Full(Table1Params),
    RankCase(RankCaseParams),
    Explicit(ExplicitParams),
}

const KINDS: &str = "lasso, toeplitz, table1_diag, table1_full, rank_case, explicit";

fn fields<P: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<P> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "problem".to_string() } else { path };
        ProblemError::invalid(path, e.into_inner().to_string())
    })
}

impl ProblemSpec {
    /// Decodes a parsed JSON object; errors carry the path of the offending field.
    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let serde_json::Value::Object(mut map) = value else {
            return Err(ProblemError::invalid("problem", "expected a JSON object"));
        };
        let kind = match map.remove("kind") {
            Some(serde_json::Value::String(k)) => k,
            Some(_) => return Err(ProblemError::invalid("kind", "expected a string")),
            None => return Err(ProblemError::invalid("kind", format!("missing; one of {KINDS}"))),
        };
        let rest = serde_json::Value::Object(map);
        Ok(match kind.as_str() {
            "lasso" => Self::Lasso(fields(rest)?),
            "toeplitz" => Self::Toeplitz(fields(rest)?),
            "table1_diag" => Self::Table1Diag(fields(rest)?),
            "table1_full" => Self::Table1Full(fields(rest)?),
            "rank_case" => Self::RankCase(fields(rest)?),
            "explicit" => Self::Explicit(fields(rest)?),
            other => {
                return Err(ProblemError::invalid(
                    "kind",
                    format!("unknown kind `{other}`; one of {KINDS}"),
                ))
            }
        })
    }
}

/// A constructed problem with its default starting point.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltProblem<T> {
    pub problem: CompositeQuadraticProblem<T>,
    pub start: Vec<T>,
    pub label: String,
}

/// Parses a problem description; errors carry the JSON path of the offending field.
pub fn load_problem_spec(text: &str) -> Result<ProblemSpec> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ProblemError::invalid("problem", e.to_string()))?;
    ProblemSpec::from_value(value)
}

fn feasible_ones<T: Scalar>(p: &CompositeQuadraticProblem<T>) -> Result<Vec<T>> {
    p.project(&vec![T::one(); p.dimension()])
}

impl ProblemSpec {
    pub fn build<T: Scalar>(&self) -> Result<BuiltProblem<T>> {
        match self {
            Self::Lasso(LassoParams {
                rows,
                blocks,
                block_size,
                h,
                seed,
            }) => {
                let term = match h {
                    None => NonsmoothTerm::L1 { weight: 0.1 },
                    Some(TermsSpec::One(t)) => t.to_term::<f64>(),
                    Some(TermsSpec::PerBlock(_)) => {
                        return Err(ProblemError::invalid(
                            "h",
                            "lasso instances take a single term for all blocks",
                        ))
                    }
                };
                let problem = make_lasso::<T>(&LassoSpec {
                    rows: *rows,
                    blocks: *blocks,
                    block_size: *block_size,
                    term,
                    seed: *seed,
                })?;
                let start = feasible_ones(&problem)?;
                Ok(BuiltProblem {
                    problem,
                    start,
                    label: format!("lasso_m{rows}_k{blocks}_n{block_size}_s{seed}"),
                })
            }
            Self::Toeplitz(ToeplitzParams { blocks }) => {
                let (problem, start) = make_toeplitz_instance::<T>(*blocks)?;
                Ok(BuiltProblem {
                    problem,
                    start,
                    label: format!("toeplitz_k{blocks}"),
                })
            }
            Self::Table1Diag(Table1Params { blocks, lipschitz }) => {
                let problem = table1_diagonal_problem::<T>(*blocks, T::lit(*lipschitz))?;
                let start = vec![T::one(); *blocks];
                Ok(BuiltProblem {
                    problem,
                    start,
                    label: format!("table1_diag_k{blocks}"),
                })
            }
            Self::Table1Full(Table1Params { blocks, lipschitz }) => {
                let problem = table1_full_problem::<T>(*blocks, T::lit(*lipschitz))?;
                let start = vec![T::one(); *blocks];
                Ok(BuiltProblem {
                    problem,
                    start,
                    label: format!("table1_full_k{blocks}"),
                })
            }
            Self::RankCase(RankCaseParams { case, blocks, seed }) => {
                let problem = make_rank_case_instance::<T>((*case).into(), *blocks, *seed)?;
                let start = feasible_ones(&problem)?;
                let name = serde_json::to_value(case)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                Ok(BuiltProblem {
                    problem,
                    start,
                    label: format!("rank_{name}_k{blocks}_s{seed}"),
                })
            }
            Self::Explicit(ExplicitParams {
                rows,
                blocks,
                block_size,
                entries,
                b,
                h,
                x0,
            }) => {
                let cols = blocks * block_size;
                if *blocks == 0 {
                    return Err(ProblemError::invalid("blocks", "need at least one block"));
                }
                if *block_size == 0 {
                    return Err(ProblemError::invalid("block_size", "blocks must be nonempty"));
                }
                if entries.len() != rows * cols {
                    return Err(ProblemError::invalid(
                        "entries",
                        format!("expected {} values ({rows} x {cols}), found {}", rows * cols, entries.len()),
                    ));
                }
                if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
                    return Err(ProblemError::invalid(format!("entries[{i}]"), "must be finite"));
                }
                if b.len() != *rows {
                    return Err(ProblemError::invalid(
                        "b",
                        format!("expected {rows} values, found {}", b.len()),
                    ));
                }
                let terms = match h {
                    None => vec![NonsmoothTerm::Zero; *blocks],
                    Some(spec) => spec.expand::<T>(*blocks)?,
                };
                let a = DenseMatrix::new(*rows, cols, entries.iter().map(|&v| T::lit(v)).collect())?;
                let problem = CompositeQuadraticProblem::from_matrix(
                    a,
                    *block_size,
                    b.iter().map(|&v| T::lit(v)).collect(),
                    terms,
                )?;
                let start = match x0 {
                    None => feasible_ones(&problem)?,
                    Some(v) => {
                        if v.len() != cols {
                            return Err(ProblemError::invalid(
                                "x0",
                                format!("expected {cols} values, found {}", v.len()),
                            ));
                        }
                        let x: Vec<T> = v.iter().map(|&e| T::lit(e)).collect();
                        if !problem.is_feasible(&x)? {
                            return Err(ProblemError::invalid("x0", "violates a box constraint"));
                        }
                        x
                    }
                };
                Ok(BuiltProblem {
                    problem,
                    start,
                    label: format!("explicit_m{rows}_k{blocks}_n{block_size}"),
                })
            }
        }
    }
}
