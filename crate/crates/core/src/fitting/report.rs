// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use super::lm::FitResult;
use super::problem::FitProblem;
use crate::error::{Error, Result};

/// Human-readable report plus the JSON record it was rendered from.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub text: String,
    pub json: String,
}

pub fn fit_report(result: &FitResult, problem: &FitProblem) -> Result<FitReport> {
    let mut text = String::new();
    let kinds: Vec<String> = problem
        .datasets
        .iter()
        .map(|d| format!("{} ({} points)", d.kind, d.len()))
        .collect();
    // Writing to a String cannot fail.
    let _ = writeln!(text, "datasets: {}", kinds.join(", "));
    let _ = writeln!(text, "status: {:?} after {} iterations", result.status, result.iterations);
    let _ = writeln!(text);
    for p in &result.parameters {
        let label = format!("{} [{}]", p.name, p.scope);
        match p.error {
            None => {
                let _ = writeln!(text, "  {label:<28} {:>14.6} (fixed)", p.value);
            }
            Some(e) => {
                let _ = writeln!(text, "  {label:<28} {:>14.6} ± {}", p.value, format_error(e));
            }
        }
    }
    let _ = writeln!(text);
    let reduced = if result.dof > 0 { result.rss / result.dof as f64 } else { f64::INFINITY };
    let _ = writeln!(
        text,
        "rss = {:.6e} (initial {:.6e}), points = {}, dof = {}, rss/dof = {:.6e}, rms = {:.6e}",
        result.rss,
        result.initial_rss,
        result.points,
        result.dof,
        reduced,
        (result.rss / result.points.max(1) as f64).sqrt()
    );
    if let Some(corr) = &result.correlation {
        let names: Vec<String> = result.free().map(|p| p.name.to_string()).collect();
        let _ = writeln!(text, "\ncorrelation:");
        let _ = writeln!(text, "  {:<14}{}", "", names.iter().map(|n| format!("{n:>14}")).collect::<String>());
        for (name, row) in names.iter().zip(corr) {
            let cells: String = row.iter().map(|r| format!("{r:>14.4}")).collect();
            let _ = writeln!(text, "  {name:<14}{cells}");
        }
    } else if result.singular {
        let _ = writeln!(text, "\ncorrelation: unavailable (singular normal matrix)");
    }
    for w in &result.warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    let json = serde_json::to_string_pretty(result)
        .map_err(|e| Error::InvalidParameter(format!("fit result serialization: {e}")))?;
    Ok(FitReport { text, json })
}

fn format_error(e: f64) -> String {
    if e.is_finite() && (e == 0.0 || (1e-3..1e6).contains(&e)) {
        format!("{e:.6}")
    } else {
        format!("{e:.3e}")
    }
}

pub fn parse_record(json: &str) -> Result<FitResult> {
    serde_json::from_str(json).map_err(|e| Error::InvalidParameter(format!("fit record: {e}")))
}
