// SPDX-License-Identifier: Apache-2.0

//! Simultaneous least-squares fits of absorption, EIT and switching spectra.

mod lm;
mod problem;
mod report;
mod synthetic;

pub use lm::{fit, FitResult, FitStatus, FittedParameter, CORRELATION_WARNING, MAX_ITERATIONS};
pub use problem::{
    build_residuals, Dataset, DatasetKind, FitParameter, FitProblem, ParamName, ResidualFunction, Scope,
    MAX_TRANSMISSION, MIN_POINTS,
};
pub use report::{fit_report, parse_record, FitReport};
pub use synthetic::{add_noise, linspace, synthesize};
