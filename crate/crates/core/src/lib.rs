// SPDX-License-Identifier: Apache-2.0

//! Desk-scale model of slow light and two-photon switching in a cold,
//! optically thick 87Rb cloud.
//!
//! * [`atomic`]: three parallel four-level channels and their susceptibility.
//! * [`propagation`]: transmission spectra, group delay, linear and
//!   Maxwell-Bloch pulse propagation.
//! * [`analysis`]: closed-form switching energetics, pulse-storage capacity
//!   and the Gaussian beam-profile correction.
//! * [`fitting`]: simultaneous Levenberg-Marquardt fits of absorption, EIT
//!   and switching spectra with shared parameters.
//! * [`io`]: run configuration, presets and the delimited text formats.
//!
//! Rates and detunings are in units of Gamma3 throughout.

pub mod analysis;
pub mod atomic;
pub mod error;
pub mod fitting;
pub mod io;
pub mod par;
pub mod propagation;
pub mod units;

pub use error::{Error, Result};
