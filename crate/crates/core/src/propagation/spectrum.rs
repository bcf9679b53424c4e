// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::atomic::{
    validate_channels, ChannelParams, DetuningOffsets, MediumParams, SusceptibilityModel,
    SusceptibilityValue,
};
use crate::error::{Error, Result};
use crate::par;
use crate::units::SPEED_OF_LIGHT;

/// Field loss and phase per unit length, 1/m.
///
/// `alpha_loss` is the negated `-omega/(2c) Im chi`, so it is non-negative
/// for a passive medium and the field evolves as
/// `E(L) = E(0) exp(-alpha_loss L + i beta L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConstants {
    pub alpha_loss: f64,
    pub beta: f64,
}

pub fn propagation_constants(chi: &SusceptibilityValue, medium: &MediumParams) -> PropagationConstants {
    constants_from_reduced(chi.chi, medium.length)
}

fn constants_from_reduced(chi: Complex64, length: f64) -> PropagationConstants {
    PropagationConstants {
        alpha_loss: chi.im / (2.0 * length),
        beta: chi.re / (2.0 * length),
    }
}

/// Uniform probe-detuning grid in Gamma3 units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub offsets: DetuningOffsets,
}

impl DetuningGrid {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self {
            min,
            max,
            count,
            offsets: DetuningOffsets::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count < 2 || !(self.max > self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "detuning grid needs count >= 2 and finite min < max (got {} points on [{}, {}])",
                self.count, self.min, self.max
            )));
        }
        Ok(())
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let step = self.step();
        (0..self.count).map(|i| self.min + i as f64 * step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub delta_p: f64,
    pub chi: Complex64,
    pub alpha_loss: f64,
    pub beta: f64,
    pub transmission: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: DetuningGrid,
    pub points: Vec<SpectrumPoint>,
}

impl Spectrum {
    pub fn transmissions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.transmission).collect()
    }

    pub fn min_transmission(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.transmission)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn transmission_spectrum(
    grid: &DetuningGrid,
    channels: &[ChannelParams],
    medium: &MediumParams,
) -> Result<Spectrum> {
    grid.validate()?;
    validate_channels(channels)?;
    medium.validate()?;
    let model = SusceptibilityModel::new(channels, medium);
    let deltas = grid.points();
    let points = par::try_map(&deltas, |&delta_p| {
        let chi = model.chi(grid.offsets.point(delta_p))?;
        let k = constants_from_reduced(chi, medium.length);
        Ok(SpectrumPoint {
            delta_p,
            chi,
            alpha_loss: k.alpha_loss,
            beta: k.beta,
            transmission: (-chi.im).exp(),
        })
    })?;
    Ok(Spectrum {
        grid: *grid,
        points,
    })
}

/// Transmission at a single probe detuning.
pub fn transmission_at(
    delta_p: f64,
    offsets: DetuningOffsets,
    channels: &[ChannelParams],
    medium: &MediumParams,
) -> Result<f64> {
    let chi = SusceptibilityModel::new(channels, medium).chi(offsets.point(delta_p))?;
    Ok((-chi.im).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupDelay {
    /// L * d(beta)/d(omega_p), seconds, relative to free propagation.
    pub delay: f64,
    /// 1 / (1/c + delay / L), m/s.
    pub group_velocity: f64,
    /// d(Re chi_red)/d(delta_p), per Gamma3.
    pub dispersion_slope: f64,
}

const INITIAL_STEP: f64 = 1e-2;
const RELATIVE_AGREEMENT: f64 = 0.01;

/// Group delay at `delta_p` from a Richardson-extrapolated central
/// difference of the phase; fails if two successive step halvings disagree
/// by more than 1%.
pub fn group_delay(
    channels: &[ChannelParams],
    medium: &MediumParams,
    delta_p: f64,
    offsets: DetuningOffsets,
) -> Result<GroupDelay> {
    validate_channels(channels)?;
    medium.validate()?;
    let model = SusceptibilityModel::new(channels, medium);
    let phase = |d: f64| -> Result<f64> { Ok(model.chi(offsets.point(d))?.re) };
    let central = |h: f64| -> Result<f64> { Ok((phase(delta_p + h)? - phase(delta_p - h)?) / (2.0 * h)) };
    let richardson = |h: f64| -> Result<f64> { Ok((4.0 * central(h / 2.0)? - central(h)?) / 3.0) };

    let first = richardson(INITIAL_STEP)?;
    let second = richardson(INITIAL_STEP / 2.0)?;
    let scale = first.abs().max(second.abs());
    if (first - second).abs() > RELATIVE_AGREEMENT * scale && (first - second).abs() > 1e-12 {
        return Err(Error::NonConverged {
            delta_p,
            first,
            second,
        });
    }

    let slope = second;
    let delay = slope / (2.0 * medium.gamma3);
    Ok(GroupDelay {
        delay,
        group_velocity: 1.0 / (1.0 / SPEED_OF_LIGHT + delay / medium.length),
        dispersion_slope: slope,
    })
}
