// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::atomic::{validate_channels, ChannelParams, DetuningOffsets, MediumParams, SusceptibilityModel};
use crate::error::{Error, Result};
use crate::par;

/// Uniformly sampled complex probe envelope.
///
/// Samples are Rabi frequencies in Gamma3 units for a reference transition of
/// unit dipole weight; a channel with weight `w` sees `sqrt(w)` times that.
/// Envelope components `exp(+i w t)` sit at optical detuning
/// `carrier_detuning - w / Gamma3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope {
    /// Sample spacing, s.
    pub dt: f64,
    /// Time of sample 0, s.
    pub t0: f64,
    pub samples: Vec<Complex64>,
    pub carrier_detuning: f64,
    pub peak_rabi: f64,
}

impl PulseEnvelope {
    /// Gaussian with the given intensity FWHM, centred at `center`.
    pub fn gaussian(
        fwhm: f64,
        center: f64,
        dt: f64,
        count: usize,
        peak_rabi: f64,
        carrier_detuning: f64,
    ) -> Self {
        let samples = (0..count)
            .map(|i| {
                let t = i as f64 * dt - center;
                Complex64::new(peak_rabi * (-2.0 * 2f64.ln() * (t / fwhm).powi(2)).exp(), 0.0)
            })
            .collect();
        Self {
            dt,
            t0: 0.0,
            samples,
            carrier_detuning,
            peak_rabi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.len() < 2 {
            return Err(Error::InvalidParameter("pulse needs at least 2 samples".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("pulse dt = {} must be > 0", self.dt)));
        }
        if !self.energy().is_finite() || !self.carrier_detuning.is_finite() {
            return Err(Error::InvalidParameter("pulse energy must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Sum |E|^2 dt.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.dt
    }

    /// Time of the intensity maximum, refined by a parabola through the three
    /// samples around the largest one.
    pub fn peak_time(&self) -> f64 {
        let intensity: Vec<f64> = self.samples.iter().map(|s| s.norm_sqr()).collect();
        let (k, _) = intensity
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        if k == 0 || k + 1 == intensity.len() {
            return self.time(k);
        }
        let (a, b, c) = (intensity[k - 1], intensity[k], intensity[k + 1]);
        let curvature = a - 2.0 * b + c;
        let offset = if curvature != 0.0 { 0.5 * (a - c) / curvature } else { 0.0 };
        self.time(k) + offset * self.dt
    }

    pub fn peak_intensity(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).fold(0.0, f64::max)
    }
}

/// Angular frequency of FFT bin `k` out of `n`, rad/s.
fn bin_frequency(k: usize, n: usize, dt: f64) -> f64 {
    let signed = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * signed / (n as f64 * dt)
}

/// Fraction of spectral energy in the outer 10% of the frequency window.
fn edge_energy_fraction(spectrum: &[Complex64]) -> f64 {
    let n = spectrum.len();
    let total: f64 = spectrum.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let cutoff = 0.45 * n as f64;
    let edge: f64 = spectrum
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let signed = if *k < n.div_ceil(2) { *k as f64 } else { *k as f64 - n as f64 };
            signed.abs() >= cutoff
        })
        .map(|(_, c)| c.norm_sqr())
        .sum();
    edge / total
}

struct Transform {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    len: usize,
}

impl Transform {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            len,
        }
    }
}

/// Propagates the pulse through the medium by multiplying its spectrum with
/// `exp(i chi_red(delta) / 2)`. The time grid is zero padded to a power of
/// two at least twice as long; the output keeps the input grid.
pub fn propagate_linear(
    pulse: &PulseEnvelope,
    channels: &[ChannelParams],
    medium: &MediumParams,
) -> Result<PulseEnvelope> {
    pulse.validate()?;
    validate_channels(channels)?;
    medium.validate()?;

    let n = pulse.len();
    let transform = Transform::new((2 * n).next_power_of_two());
    let padded_len = transform.len;
    let mut buffer = vec![Complex64::new(0.0, 0.0); padded_len];
    buffer[..n].copy_from_slice(&pulse.samples);
    transform.forward.process(&mut buffer);

    let fraction = edge_energy_fraction(&buffer);
    if fraction > 1e-3 {
        return Err(Error::BandwidthExceeded { fraction });
    }

    let model = SusceptibilityModel::new(channels, medium);
    let offsets = DetuningOffsets::default();
    let transfer = par::try_map_range(padded_len, |k| {
        let delta = pulse.carrier_detuning - bin_frequency(k, padded_len, pulse.dt) / medium.gamma3;
        let chi = model.chi(offsets.point(delta))?;
        Ok((Complex64::i() * chi * 0.5).exp())
    })?;
    for (b, h) in buffer.iter_mut().zip(&transfer) {
        *b *= h;
    }
    transform.inverse.process(&mut buffer);
    let scale = 1.0 / padded_len as f64;

    Ok(PulseEnvelope {
        samples: buffer[..n].iter().map(|c| c * scale).collect(),
        ..pulse.clone()
    })
}
