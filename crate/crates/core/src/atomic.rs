// SPDX-License-Identifier: Apache-2.0

//! Four-level atoms arranged as independent parallel channels.
//!
//! Each channel is a 1-3-2-4 ladder: probe on 1->3, coupling on 2->3,
//! switch on 2->4. In 87Rb the three channels are the m_F = -1, 0, +1
//! sublevels of 5S1/2(F=1). In the weak-probe limit every channel adds a
//! term to the probe susceptibility, and the terms share the same complex
//! detunings.
//!
//! Susceptibilities here are *reduced*: `chi_red = chi * omega_p * L / c`.
//! The probe field then evolves as `E(L) = E(0) * exp(i chi_red / 2)`. The
//! prefactor is fixed by the optical depth: a bare two-level medium gives
//! `chi_red = i * OD` on resonance, i.e. intensity transmission `exp(-OD)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{self, GAMMA3_RB87, GAMMA4_RB87, LAMBDA_D1, LAMBDA_D2};

/// Denominator moduli below this are treated as singular.
const SINGULAR_DENOMINATOR: f64 = 1e-30;

/// Hyperfine-resolved line strengths for the sigma+ configuration, in units
/// of the cycling-transition strength. Probe D1 F=1 -> F'=2.
pub const RB87_WEIGHTS_13: [f64; 3] = [1.0 / 12.0, 1.0 / 4.0, 1.0 / 2.0];
/// Coupling D1 F=2 -> F'=2.
pub const RB87_WEIGHTS_23: [f64; 3] = [1.0 / 4.0, 1.0 / 4.0, 1.0 / 6.0];
/// Switch D2 F=2 -> F'=3.
pub const RB87_WEIGHTS_24: [f64; 3] = [1.0 / 5.0, 2.0 / 5.0, 2.0 / 3.0];

/// One of the parallel channels. Rates are in units of Gamma3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// 1, 2, 3 for m_F = -1, 0, +1.
    pub index: u8,
    /// N^(i) / N_total.
    pub population_fraction: f64,
    /// Relative |mu_13|^2, as a fraction of the cycling-line strength.
    pub dipole_weight_13: f64,
    /// Relative |mu_23|^2.
    pub dipole_weight_23: f64,
    /// Relative |mu_24|^2.
    pub dipole_weight_24: f64,
    pub rabi_c: f64,
    pub rabi_s: f64,
}

impl ChannelParams {
    /// A single prototype channel with unit weights.
    pub fn prototype(rabi_c: f64, rabi_s: f64) -> Self {
        Self {
            index: 1,
            population_fraction: 1.0,
            dipole_weight_13: 1.0,
            dipole_weight_23: 1.0,
            dipole_weight_24: 1.0,
            rabi_c,
            rabi_s,
        }
    }
}

/// The three 87Rb channels with equal populations and the default weights.
pub fn rb87_channels(rabi_c: [f64; 3], rabi_s: [f64; 3]) -> Vec<ChannelParams> {
    (0..3)
        .map(|i| ChannelParams {
            index: i as u8 + 1,
            population_fraction: 1.0 / 3.0,
            dipole_weight_13: RB87_WEIGHTS_13[i],
            dipole_weight_23: RB87_WEIGHTS_23[i],
            dipole_weight_24: RB87_WEIGHTS_24[i],
            rabi_c: rabi_c[i],
            rabi_s: rabi_s[i],
        })
        .collect()
}

pub fn validate_channels(channels: &[ChannelParams]) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::InvalidParameter("no channels".into()));
    }
    let total: f64 = channels.iter().map(|c| c.population_fraction).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "population fractions sum to {total}, expected 1"
        )));
    }
    for c in channels {
        let fields = [
            ("population_fraction", c.population_fraction),
            ("dipole_weight_13", c.dipole_weight_13),
            ("dipole_weight_23", c.dipole_weight_23),
            ("dipole_weight_24", c.dipole_weight_24),
            ("rabi_c", c.rabi_c),
            ("rabi_s", c.rabi_s),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "channel {}: {name} = {v} must be finite and >= 0",
                    c.index
                )));
            }
        }
    }
    Ok(())
}

/// Global medium description. Rates are in Gamma3 units unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    pub gamma12: f64,
    pub gamma13: f64,
    /// Damping of the 1-4 coherence reached by probe + switch.
    pub gamma24: f64,
    /// Absolute Gamma3 in rad/s.
    pub gamma3: f64,
    /// Radiative rate of level 4, Gamma3 units.
    pub gamma4: f64,
    /// Channel-averaged N sigma13 L.
    pub optical_depth: f64,
    /// Sample length, m.
    pub length: f64,
    pub lambda_probe: f64,
    pub lambda_switch: f64,
    /// Channel-averaged 2->4 cross section, m^2.
    pub sigma24: f64,
    /// Fraction of level-3 decay going to level 1 (rest to level 2).
    pub branching_3: f64,
    /// Fraction of level-4 decay going to level 1 (rest to level 2).
    pub branching_4: f64,
}

impl MediumParams {
    /// 87Rb defaults with radiative gamma13 and gamma24, for the given depth,
    /// ground dephasing and length.
    pub fn rb87(optical_depth: f64, gamma12: f64, length: f64) -> Self {
        let gamma4 = GAMMA4_RB87 / GAMMA3_RB87;
        let mean_w24 = RB87_WEIGHTS_24.iter().sum::<f64>() / 3.0;
        Self {
            gamma12,
            gamma13: 0.5,
            gamma24: gamma4 / 2.0,
            gamma3: GAMMA3_RB87,
            gamma4,
            optical_depth,
            length,
            lambda_probe: LAMBDA_D1,
            lambda_switch: LAMBDA_D2,
            sigma24: mean_w24 * units::cycling_cross_section(LAMBDA_D2),
            branching_3: 0.5,
            branching_4: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter(what.to_string()))
            }
        };
        check(self.gamma13 > 0.0, "gamma13 must be > 0")?;
        check(self.gamma24 > 0.0, "gamma24 must be > 0")?;
        check(self.gamma12 >= 0.0, "gamma12 must be >= 0")?;
        check(self.gamma3 > 0.0, "gamma3 must be > 0")?;
        check(self.gamma4 >= 0.0, "gamma4 must be >= 0")?;
        check(self.optical_depth >= 0.0, "optical_depth must be >= 0")?;
        check(self.length > 0.0, "length must be > 0")?;
        check(
            self.lambda_probe > 0.0 && self.lambda_switch > 0.0,
            "wavelengths must be > 0",
        )?;
        check(self.sigma24 >= 0.0, "sigma24 must be >= 0")?;
        check(
            (0.0..=1.0).contains(&self.branching_3) && (0.0..=1.0).contains(&self.branching_4),
            "branching ratios must lie in [0, 1]",
        )?;
        let all = [
            self.gamma12,
            self.gamma13,
            self.gamma24,
            self.gamma3,
            self.gamma4,
            self.optical_depth,
            self.length,
            self.lambda_probe,
            self.lambda_switch,
            self.sigma24,
        ];
        check(all.iter().all(|v| v.is_finite()), "medium values must be finite")
    }
}

/// Real parts of the three detunings, Gamma3 units: probe one-photon,
/// probe-coupling two-photon, and probe-coupling-switch three-photon.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetuningPoint {
    pub delta_p: f64,
    pub delta_c: f64,
    pub delta_s: f64,
}

/// Fixed laser detunings during a probe sweep (coupling and switch
/// frequencies relative to their own resonances).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetuningOffsets {
    pub coupling: f64,
    pub switch: f64,
}

impl DetuningOffsets {
    pub fn point(&self, delta_p: f64) -> DetuningPoint {
        let delta_c = delta_p - self.coupling;
        DetuningPoint {
            delta_p,
            delta_c,
            delta_s: delta_c + self.switch,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityValue {
    /// Reduced susceptibility, summed over channels.
    pub chi: Complex64,
    pub per_channel: Vec<Complex64>,
}

/// `(delta_p + i gamma13, delta_c + i gamma12, delta_s + i gamma24)`.
pub fn complex_detunings(point: DetuningPoint, medium: &MediumParams) -> [Complex64; 3] {
    [
        Complex64::new(point.delta_p, medium.gamma13),
        Complex64::new(point.delta_c, medium.gamma12),
        Complex64::new(point.delta_s, medium.gamma24),
    ]
}

/// Optical depth carried by each channel; sums to `optical_depth`.
pub fn channel_depths(channels: &[ChannelParams], optical_depth: f64) -> Vec<f64> {
    let norm: f64 = channels
        .iter()
        .map(|c| c.population_fraction * c.dipole_weight_13)
        .sum();
    channels
        .iter()
        .map(|c| {
            if norm > 0.0 {
                optical_depth * c.population_fraction * c.dipole_weight_13 / norm
            } else {
                0.0
            }
        })
        .collect()
}

fn channel_term(
    detunings: &[Complex64; 3],
    depth: f64,
    gamma13: f64,
    channel: &ChannelParams,
    delta_p: f64,
) -> Result<Complex64> {
    let [dp, dc, ds] = *detunings;
    let oc2 = channel.rabi_c * channel.rabi_c;
    let os2 = channel.rabi_s * channel.rabi_s;
    let numerator = os2 - 4.0 * ds * dc;
    let denominator = 4.0 * dp * dc * ds - oc2 * ds - os2 * dp;
    let modulus = denominator.norm();
    if modulus < SINGULAR_DENOMINATOR {
        return Err(Error::SingularDenominator { delta_p, modulus });
    }
    Ok(depth * gamma13 * numerator / denominator)
}

pub fn susceptibility(
    point: DetuningPoint,
    channels: &[ChannelParams],
    medium: &MediumParams,
) -> Result<SusceptibilityValue> {
    let detunings = complex_detunings(point, medium);
    let depths = channel_depths(channels, medium.optical_depth);
    let per_channel = channels
        .iter()
        .zip(&depths)
        .map(|(c, &d)| channel_term(&detunings, d, medium.gamma13, c, point.delta_p))
        .collect::<Result<Vec<_>>>()?;
    Ok(SusceptibilityValue {
        chi: per_channel.iter().sum(),
        per_channel,
    })
}

/// Precomputed channel depths for repeated evaluation over a grid.
#[derive(Debug, Clone)]
pub struct SusceptibilityModel<'a> {
    channels: &'a [ChannelParams],
    depths: Vec<f64>,
    medium: &'a MediumParams,
}

impl<'a> SusceptibilityModel<'a> {
    pub fn new(channels: &'a [ChannelParams], medium: &'a MediumParams) -> Self {
        Self {
            channels,
            depths: channel_depths(channels, medium.optical_depth),
            medium,
        }
    }

    pub fn medium(&self) -> &MediumParams {
        self.medium
    }

    pub fn chi(&self, point: DetuningPoint) -> Result<Complex64> {
        let detunings = complex_detunings(point, self.medium);
        let mut chi = Complex64::new(0.0, 0.0);
        for (c, &d) in self.channels.iter().zip(&self.depths) {
            chi += channel_term(&detunings, d, self.medium.gamma13, c, point.delta_p)?;
        }
        Ok(chi)
    }
}

/// sigma13^(i) = omega13 |mu13|^2 / (c eps0 hbar gamma13), m^2.
pub fn cross_section_13(channel: &ChannelParams, medium: &MediumParams) -> f64 {
    // The radiative-limit value at gamma13 = Gamma3/2 is w * 3 lambda^2 / (2 pi).
    channel.dipole_weight_13 * units::cycling_cross_section(medium.lambda_probe) * 0.5
        / medium.gamma13
}

/// Channel-averaged sigma13 = (1/n) sum_i sigma13^(i).
pub fn mean_cross_section_13(channels: &[ChannelParams], medium: &MediumParams) -> f64 {
    channels
        .iter()
        .map(|c| cross_section_13(c, medium))
        .sum::<f64>()
        / channels.len() as f64
}

/// Per-channel sigma24, scaled so the channel mean equals `medium.sigma24`.
pub fn channel_sigma24(channels: &[ChannelParams], medium: &MediumParams) -> Vec<f64> {
    let mean = channels.iter().map(|c| c.dipole_weight_24).sum::<f64>() / channels.len() as f64;
    channels
        .iter()
        .map(|c| {
            if mean > 0.0 {
                medium.sigma24 * c.dipole_weight_24 / mean
            } else {
                0.0
            }
        })
        .collect()
}

/// Arithmetic mean of the per-channel coupling Rabi frequencies.
pub fn mean_rabi_c(channels: &[ChannelParams]) -> f64 {
    channels.iter().map(|c| c.rabi_c).sum::<f64>() / channels.len() as f64
}
