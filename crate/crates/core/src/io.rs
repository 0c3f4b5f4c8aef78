//! Line-oriented reports and CSV writers. Floats are written with 17 significant digits.

use crate::bounds::{BoundError, BoundReport};
use crate::problems::ProblemConstants;
use crate::scalar::Scalar;
use crate::solvers::Trajectory;
use crate::verify::{CheckMode, CheckReport};
use std::io::{self, Write};

/// `{:.16e}`, which round-trips every `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt<T: Scalar>(v: Option<T>) -> String {
    v.map(|v| fmt_float(v.as_f64())).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

/// One line per report.
pub fn write_report_text<W: Write>(w: &mut W, reports: &[CheckReport]) -> io::Result<()> {
    for r in reports {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

/// CSV twin of the text report.
pub fn write_report_csv<W: Write>(w: W, reports: &[CheckReport]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["check", "status", "mode", "cycles_checked", "worst_violation", "tolerance", "worst_cycle", "notes"])
        .map_err(csv_err)?;
    for r in reports {
        let mode = match r.mode {
            CheckMode::Asserted => "asserted",
            CheckMode::ReportOnly => "report_only",
            CheckMode::Skipped => "skipped",
        };
        out.write_record([
            r.name.clone(),
            r.status().to_string(),
            mode.to_string(),
            r.cycles_checked.to_string(),
            fmt_float(r.worst_violation),
            fmt_float(r.tolerance),
            r.worst_cycle.map(|c| c.to_string()).unwrap_or_default(),
            r.notes.join("; "),
        ])
        .map_err(csv_err)?;
    }
    out.flush()
}

/// `cycle, objective, gap, weighted_movement, grad_norm`; movement on row `r` is `r -> r+1`.
pub fn write_trajectory_csv<T: Scalar, W: Write>(w: W, t: &Trajectory<T>) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["cycle", "objective", "gap", "weighted_movement", "grad_norm"])
        .map_err(csv_err)?;
    for (r, c) in t.cycles.iter().enumerate() {
        out.write_record([
            r.to_string(),
            fmt_float(c.objective.as_f64()),
            opt(c.gap),
            opt(c.weighted_movement),
            opt(c.grad_norm),
        ])
        .map_err(csv_err)?;
    }
    out.flush()
}

/// `r` followed by one column per bound kind; inapplicable kinds leave the column empty.
pub fn write_bound_csv<T: Scalar, W: Write>(w: W, report: &BoundReport<T>) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["r".to_string()];
    header.extend(report.columns.iter().map(|c| c.kind.name().to_string()));
    out.write_record(&header).map_err(csv_err)?;
    for r in 1..=report.r_max {
        let mut row = vec![r.to_string()];
        for c in &report.columns {
            row.push(match &c.values {
                Ok(v) => fmt_float(v[r - 1].as_f64()),
                Err(_) => String::new(),
            });
        }
        out.write_record(&row).map_err(csv_err)?;
    }
    out.flush()
}

/// `kind, applicable, numerator, note` for each column of a bound report.
pub fn write_bound_notes<T: Scalar, W: Write>(w: &mut W, report: &BoundReport<T>) -> io::Result<()> {
    for c in &report.columns {
        match (&c.values, c.numerator) {
            (Ok(_), Some(x)) => {
                let note = if c.kind.up_to_constant() {
                    " (up to the unspecified prior constant)"
                } else {
                    ""
                };
                writeln!(w, "{} numerator={}{note}", c.kind.name(), fmt_float(x.as_f64()))?
            }
            (Err(BoundError::Inapplicable { reason, .. }), _) => writeln!(w, "{} inapplicable: {reason}", c.kind.name())?,
            (Err(e), _) => writeln!(w, "{} error: {e}", c.kind.name())?,
            (Ok(_), None) => writeln!(w, "{} numerator unavailable", c.kind.name())?,
        }
    }
    Ok(())
}

/// `name = value` lines for the problem constants.
pub fn write_constants<T: Scalar, W: Write>(w: &mut W, c: &ProblemConstants<T>) -> io::Result<()> {
    writeln!(w, "blocks = {}", c.block_count)?;
    writeln!(w, "block_size = {}", c.block_size)?;
    writeln!(w, "L = {}", fmt_float(c.lipschitz.as_f64()))?;
    writeln!(w, "L_max = {}", fmt_float(c.l_max.as_f64()))?;
    writeln!(w, "L_min = {}", fmt_float(c.l_min.as_f64()))?;
    writeln!(w, "log(2NK) = {}", fmt_float(c.log_2nk().as_f64()))?;
    writeln!(w, "mu = {}", fmt_float(c.strong_convexity.as_f64()))?;
    writeln!(w, "mu_plus = {}", fmt_float(c.positive_curvature.as_f64()))?;
    if let Some(rank) = &c.rank {
        writeln!(w, "rank_case = {:?}", rank.case)?;
        writeln!(w, "sigma_min = {}", fmt_float(rank.sigma_min.as_f64()))?;
        writeln!(w, "gamma_min = {}", fmt_float(rank.gamma_min.as_f64()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 16.875, f64::MAX] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn report_csv_has_header_and_rows() {
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &[CheckReport::skipped("a", "b, c")]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("check,status,mode"));
        assert!(lines[1].starts_with("a,SKIP,skipped,0,"));
        assert!(lines[1].ends_with("\"b, c\""));
    }
}
