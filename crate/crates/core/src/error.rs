// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Susceptibility denominator collapsed; only reachable with all dephasings at zero.
    #[error("singular susceptibility denominator (|D| = {modulus:e}) at delta_p = {delta_p}")]
    SingularDenominator { delta_p: f64, modulus: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Finite-difference derivative did not settle under step halving.
    #[error("group delay did not converge at delta_p = {delta_p}: successive estimates {first:e} and {second:e}")]
    NonConverged { delta_p: f64, first: f64, second: f64 },

    #[error("pulse bandwidth exceeds the sampled window: {fraction:.3e} of the energy lies in the outer 10% of frequencies")]
    BandwidthExceeded { fraction: f64 },

    #[error("time grid too coarse: {samples_per_period:.2} samples per fastest period, need at least 20")]
    GridTooCoarse { samples_per_period: f64 },

    #[error("density matrix lost physicality at z-step {z_step}, t-step {t_step}: {detail}")]
    TraceViolation {
        z_step: usize,
        t_step: usize,
        detail: String,
    },

    #[error("probe energy grew by {growth:.3e} (relative) in a passive medium")]
    StepUnstable { growth: f64 },

    #[error("value {value} outside the admissible range {range}")]
    OutOfRange { value: f64, range: &'static str },

    #[error("parameter `{0}` is not used by any dataset in its scope")]
    InvalidSharing(String),

    /// Malformed configuration or data file; `line`/`column` are 1-based.
    #[error("{source_name}{}: {message}", location(*line, *column))]
    Input {
        source_name: String,
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },
}

fn location(line: Option<usize>, column: Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(":{l}:{c}"),
        (Some(l), None) => format!(":{l}"),
        _ => String::new(),
    }
}

impl Error {
    /// Errors caused by user-supplied files rather than by the model.
    pub fn is_input(&self) -> bool {
        matches!(self, Self::Input { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
