// SPDX-License-Identifier: Apache-2.0

//! Closed-form switching energetics, pulse-storage capacity, the Gaussian
//! beam-profile correction and forward switching curves.

use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::atomic::{
    channel_sigma24, validate_channels, ChannelParams, DetuningPoint, MediumParams,
    SusceptibilityModel,
};
use crate::error::{Error, Result};
use crate::par;
use crate::units;

/// Pulse duration used to convert switching power to photon number, s.
pub const DEFAULT_SWITCH_DURATION: f64 = 350e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingEstimate {
    /// W/m^2.
    pub power_per_area: f64,
    /// Photons per lambda_s^2 / (2 pi) over `pulse_duration`.
    pub photons_per_mode_area: f64,
    /// s.
    pub pulse_duration: f64,
    /// Validity assumptions that failed; the estimate is still returned.
    pub warnings: Vec<String>,
}

/// Switch intensity for 1/e suppression of the normalized probe
/// transmission in the prototype four-level system:
///
/// `(P/A)_crit = hbar w_s / (OD sigma24) * (|Omega_c|^2 / (2 gamma13) + 4 gamma12)`.
///
/// Assumes OD >> 1 and gamma12 << |Omega_c|; violations are reported as
/// warnings, not errors.
pub fn critical_switching_power(
    medium: &MediumParams,
    avg_rabi_c: f64,
    pulse_duration: f64,
) -> Result<SwitchingEstimate> {
    medium.validate()?;
    if !(medium.optical_depth > 0.0) || !(medium.sigma24 > 0.0) {
        return Err(Error::InvalidParameter(
            "critical switching power needs optical_depth > 0 and sigma24 > 0".into(),
        ));
    }
    let mut warnings = Vec::new();
    if medium.optical_depth <= 1.0 {
        warnings.push(format!(
            "optical depth {} is not >> 1; estimate is unreliable",
            medium.optical_depth
        ));
    }
    if avg_rabi_c <= 4.0 * medium.gamma12 {
        warnings.push(format!(
            "|Omega_c| = {avg_rabi_c} is not >> gamma12 = {}; estimate is unreliable",
            medium.gamma12
        ));
    }
    let rate = (avg_rabi_c * avg_rabi_c / (2.0 * medium.gamma13) + 4.0 * medium.gamma12) * medium.gamma3;
    let photon_flux = rate / (medium.optical_depth * medium.sigma24);
    let power_per_area = photon_flux * units::photon_energy(medium.lambda_switch);
    Ok(SwitchingEstimate {
        power_per_area,
        photons_per_mode_area: photons_per_area(power_per_area, pulse_duration, medium.lambda_switch)?,
        pulse_duration,
        warnings,
    })
}

/// `(P/A) * tau / (hbar w) * lambda^2 / (2 pi)`.
pub fn photons_per_area(power_per_area: f64, duration: f64, wavelength: f64) -> Result<f64> {
    if !(power_per_area >= 0.0) || !(duration >= 0.0) {
        return Err(Error::OutOfRange {
            value: power_per_area.min(duration),
            range: "[0, inf) for power and duration",
        });
    }
    if !(wavelength > 0.0) {
        return Err(Error::OutOfRange {
            value: wavelength,
            range: "(0, inf) for wavelength",
        });
    }
    Ok(power_per_area * duration / units::photon_energy(wavelength) * units::mode_area(wavelength))
}

/// Power per area carrying `photons` per mode area in `duration`.
pub fn power_from_photons(photons: f64, duration: f64, wavelength: f64) -> f64 {
    photons * units::photon_energy(wavelength) / (duration * units::mode_area(wavelength))
}

/// `|Omega| = sqrt(2 sigma gamma (P/A) / (hbar omega))`.
///
/// `sigma` in m^2, `gamma` and `omega` in rad/s; returns rad/s.
pub fn rabi_from_intensity(power_per_area: f64, sigma: f64, gamma: f64, omega: f64) -> f64 {
    (2.0 * sigma * gamma * power_per_area / (units::HBAR * omega)).sqrt()
}

pub fn intensity_from_rabi(rabi: f64, sigma: f64, gamma: f64, omega: f64) -> f64 {
    rabi * rabi * units::HBAR * omega / (2.0 * sigma * gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageCapacity {
    pub n_max: f64,
    /// Set when the radicand is <= 0 and capacity clamps to zero.
    pub bandwidth_limited: bool,
}

/// Maximum number of Gaussian pulses that fit inside the medium at once:
///
/// `N = OD / (2 sqrt2 ln2) * sqrt(1/(2 OD) - 2 gamma12 gamma13 / |Omega_c|^2)`.
pub fn max_stored_pulses(medium: &MediumParams, avg_rabi_c: f64) -> Result<StorageCapacity> {
    medium.validate()?;
    let od = medium.optical_depth;
    if !(od > 0.0) {
        return Err(Error::InvalidParameter("max_stored_pulses needs optical_depth > 0".into()));
    }
    let dephasing = if avg_rabi_c > 0.0 {
        2.0 * medium.gamma12 * medium.gamma13 / (avg_rabi_c * avg_rabi_c)
    } else if medium.gamma12 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let radicand = 1.0 / (2.0 * od) - dephasing;
    if radicand <= 0.0 {
        return Ok(StorageCapacity {
            n_max: 0.0,
            bandwidth_limited: true,
        });
    }
    Ok(StorageCapacity {
        n_max: od / (2.0 * SQRT_2 * LN_2) * radicand.sqrt(),
        bandwidth_limited: false,
    })
}

/// Probe-weighted average transmission over equal-width Gaussian probe and
/// switch beams when the peak transmission is `exp(-s)`: `(1 - e^-s) / s`.
pub fn beam_averaged_transmission(peak_exponent: f64) -> f64 {
    if peak_exponent == 0.0 {
        1.0
    } else {
        -(-peak_exponent).exp_m1() / peak_exponent
    }
}

/// Peak-of-beam exponent `s` whose beam average equals `measured_avg_t`.
pub fn beam_average_exponent(measured_avg_t: f64) -> Result<f64> {
    if !(measured_avg_t > 0.0 && measured_avg_t <= 1.0) {
        return Err(Error::OutOfRange {
            value: measured_avg_t,
            range: "(0, 1]",
        });
    }
    if measured_avg_t == 1.0 {
        return Ok(0.0);
    }
    // (1 - e^-s)/s < 1/s, so the root lies below 1/T.
    let (mut lo, mut hi) = (0.0_f64, 1.0 / measured_avg_t);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beam_averaged_transmission(mid) > measured_avg_t {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * hi.max(1.0) * 1e-3 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Converts a beam-averaged transmission into the transmission at the beam
/// centre.
pub fn gaussian_profile_correct(measured_avg_t: f64) -> Result<f64> {
    Ok((-beam_average_exponent(measured_avg_t)?).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchingPoint {
    /// Switch energy density, photons per lambda_s^2 / (2 pi).
    pub photons: f64,
    /// Probe transmission at the beam centre, normalized to EIT.
    pub peak: f64,
    /// Probe-weighted average over the Gaussian beams, normalized to EIT.
    pub beam_averaged: f64,
}

const BEAM_PANELS: usize = 128;

/// Per-channel switch Rabi frequencies (Gamma3 units) for an energy density.
pub fn switch_rabi_for_photons(
    photons: f64,
    duration: f64,
    channels: &[ChannelParams],
    medium: &MediumParams,
) -> Vec<f64> {
    let intensity = power_from_photons(photons, duration, medium.lambda_switch);
    let omega = units::angular_frequency(medium.lambda_switch);
    let gamma_rad = 0.5 * medium.gamma4 * medium.gamma3;
    channel_sigma24(channels, medium)
        .into_iter()
        .map(|sigma| rabi_from_intensity(intensity, sigma, gamma_rad, omega) / medium.gamma3)
        .collect()
}

/// Normalized on-resonance probe transmission as a function of switch energy
/// density, at the beam centre and averaged over the Gaussian beam profile.
pub fn switching_curve(
    channels: &[ChannelParams],
    medium: &MediumParams,
    photon_grid: &[f64],
    duration: f64,
) -> Result<Vec<SwitchingPoint>> {
    validate_channels(channels)?;
    medium.validate()?;
    if !(duration > 0.0) {
        return Err(Error::InvalidParameter("switch pulse duration must be > 0".into()));
    }
    if let Some(&bad) = photon_grid.iter().find(|&&n| !(n >= 0.0) || !n.is_finite()) {
        return Err(Error::OutOfRange {
            value: bad,
            range: "[0, inf) photons",
        });
    }
    let resonant = DetuningPoint::default();
    let mut eit_channels = channels.to_vec();
    for c in &mut eit_channels {
        c.rabi_s = 0.0;
    }
    let eit_loss = SusceptibilityModel::new(&eit_channels, medium).chi(resonant)?.im;

    let normalized = |photons: f64| -> Result<f64> {
        let rabi_s = switch_rabi_for_photons(photons, duration, channels, medium);
        let mut switched = eit_channels.clone();
        for (c, r) in switched.iter_mut().zip(rabi_s) {
            c.rabi_s = r;
        }
        let loss = SusceptibilityModel::new(&switched, medium).chi(resonant)?.im;
        Ok((-(loss - eit_loss)).exp())
    };

    par::try_map(photon_grid, |&photons| {
        let peak = normalized(photons)?;
        // Probe-weighted beam average is the mean of T(n u) over u in [0, 1]
        // (Simpson's rule).
        let h = 1.0 / BEAM_PANELS as f64;
        let mut sum = normalized(0.0)? + peak;
        for k in 1..BEAM_PANELS {
            let weight = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += weight * normalized(photons * k as f64 * h)?;
        }
        Ok(SwitchingPoint {
            photons,
            peak,
            beam_averaged: sum * h / 3.0,
        })
    })
}

/// First crossing of `level` by linear interpolation, scanning a decreasing
/// curve from the left.
pub fn first_crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    xs.windows(2).zip(ys.windows(2)).find_map(|(x, y)| {
        if y[0] >= level && y[1] < level {
            Some(x[0] + (level - y[0]) * (x[1] - x[0]) / (y[1] - y[0]))
        } else {
            None
        }
    })
}
