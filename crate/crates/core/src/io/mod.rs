// SPDX-License-Identifier: Apache-2.0

//! Run configuration and the text formats read and written by the CLI.

mod config;
mod table;

pub use config::{PulseConfig, PulseShape, RunConfig, DEFAULT_PRESET, PRESETS};
pub use table::{
    provenance, SpectrumFile, Table, DETUNING_GAMMA3, DETUNING_MHZ, TRANSMISSION, WEIGHT,
};
