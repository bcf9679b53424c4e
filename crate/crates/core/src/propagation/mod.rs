// SPDX-License-Identifier: Apache-2.0

//! Probe propagation: spectra and group delay from the susceptibility,
//! linear pulse propagation through the transfer function, and the
//! split-step Maxwell-Bloch solver.

pub mod bloch;
pub mod pulse;
pub mod spectrum;

pub use bloch::{propagate_maxwell_bloch, DensityMatrix, MaxwellBlochOutput, MbGrid, PhysicalityStats};
pub use pulse::{propagate_linear, PulseEnvelope};
pub use spectrum::{
    group_delay, propagation_constants, transmission_at, transmission_spectrum, DetuningGrid,
    GroupDelay, PropagationConstants, Spectrum, SpectrumPoint,
};
