// SPDX-License-Identifier: Apache-2.0

//! TOML run configuration layered over named parameter presets.
//!
//! Every numeric field accepts either a bare number in the field's canonical
//! unit (Gamma3 for rates, metres, seconds, square metres) or a tagged table
//! `{ value = 5.7, unit = "MHz" }`. Unknown keys are rejected.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use crate::analysis::DEFAULT_SWITCH_DURATION;
use crate::atomic::{rb87_channels, validate_channels, ChannelParams, DetuningOffsets, MediumParams};
use crate::error::{Error, Result};
use crate::propagation::{DetuningGrid, PulseEnvelope};
use crate::units::{Dimension, Quantity};

pub const PRESETS: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "vacuum"];
pub const DEFAULT_PRESET: &str = "fig2";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    Gaussian,
}

/// Probe pulse description; times in seconds, rates in Gamma3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseConfig {
    pub shape: PulseShape,
    /// Intensity FWHM.
    pub fwhm: f64,
    pub peak_rabi: f64,
    pub carrier_detuning: f64,
    pub dt: f64,
    /// Total sampled window, starting at t = 0.
    pub window: f64,
    /// Pulse centre within the window.
    pub center: f64,
}

impl PulseConfig {
    pub fn envelope(&self) -> Result<PulseEnvelope> {
        if !(self.dt > 0.0) || !(self.window > self.dt) || !(self.fwhm > 0.0) {
            return Err(Error::InvalidParameter(
                "pulse needs dt > 0, window > dt and fwhm > 0".into(),
            ));
        }
        let count = (self.window / self.dt).round() as usize;
        let pulse = PulseEnvelope::gaussian(self.fwhm, self.center, self.dt, count, self.peak_rabi, self.carrier_detuning);
        pulse.validate()?;
        Ok(pulse)
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub preset: String,
    pub seed: u64,
    pub medium: MediumParams,
    pub channels: Vec<ChannelParams>,
    pub grid: DetuningGrid,
    pub pulse: PulseConfig,
    /// Longitudinal slices for the Maxwell-Bloch solver.
    pub zsteps: usize,
    /// Switch pulse duration used for photon-number normalization, s.
    pub switch_duration: f64,
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let cell = 0.8e-3;
        let fig3_pulse = PulseConfig {
            shape: PulseShape::Gaussian,
            fwhm: 400e-9,
            peak_rabi: 0.01,
            carrier_detuning: 0.0,
            dt: 0.4e-9,
            window: 2.2e-6,
            center: 1.1e-6,
        };
        let grid = DetuningGrid::new(-4.0, 4.0, 401);
        let base = |od: f64, gamma12: f64, rabi_c: [f64; 3], rabi_s: [f64; 3]| Self {
            preset: name.to_string(),
            seed: 0,
            medium: MediumParams::rb87(od, gamma12, cell),
            channels: rb87_channels(rabi_c, rabi_s),
            grid,
            pulse: fig3_pulse,
            zsteps: 64,
            switch_duration: DEFAULT_SWITCH_DURATION,
        };
        Ok(match name {
            "fig2" => base(7.6, 0.2, [1.9, 1.9, 1.5], [0.0; 3]),
            "fig3" => base(6.5, 0.15, [3.2, 3.2, 2.6], [0.0; 3]),
            "fig4" => {
                let mut c = base(8.9, 0.1, [3.6, 3.6, 2.9], [1.1, 1.5, 2.0]);
                c.medium.gamma13 = 0.1;
                c
            }
            "fig5" => base(7.5, 0.15, [2.0, 2.0, 1.7], [0.0; 3]),
            "vacuum" => base(0.0, 0.15, [3.2, 3.2, 2.6], [0.0; 3]),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown preset `{other}` (available: {})",
                    PRESETS.join(", ")
                )))
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        validate_channels(&self.channels)?;
        self.grid.validate()?;
        self.pulse.envelope()?;
        if self.zsteps == 0 || !(self.switch_duration > 0.0) {
            return Err(Error::InvalidParameter("zsteps and switch duration must be positive".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Parses a TOML configuration; `source_name` labels diagnostics.
    pub fn from_toml(text: &str, source_name: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((None, None), |s| {
                let (l, c) = line_col(text, s.start);
                (Some(l), Some(c))
            });
            Error::Input {
                source_name: source_name.to_string(),
                line,
                column,
                message: e.message().trim().to_string(),
            }
        })?;
        raw.resolve(text, source_name)
    }

    pub fn offsets(&self) -> DetuningOffsets {
        self.grid.offsets
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

type Field = Option<Spanned<Quantity>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<Spanned<String>>,
    seed: Option<u64>,
    #[serde(default)]
    medium: RawMedium,
    #[serde(default)]
    channels: Vec<RawChannel>,
    grid: Option<RawGrid>,
    pulse: Option<RawPulse>,
    delay: Option<RawDelay>,
    switch: Option<RawSwitch>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMedium {
    optical_depth: Option<Spanned<f64>>,
    gamma12: Field,
    gamma13: Field,
    gamma24: Field,
    gamma3: Field,
    gamma4: Field,
    length: Field,
    lambda_probe: Field,
    lambda_switch: Field,
    sigma24: Field,
    branching_3: Option<Spanned<f64>>,
    branching_4: Option<Spanned<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    index: Spanned<u8>,
    population_fraction: Option<f64>,
    dipole_weight_13: Option<f64>,
    dipole_weight_23: Option<f64>,
    dipole_weight_24: Option<f64>,
    rabi_c: Field,
    rabi_s: Field,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    min: Field,
    max: Field,
    count: Option<usize>,
    coupling_offset: Field,
    switch_offset: Field,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulse {
    shape: Option<PulseShape>,
    fwhm: Field,
    peak_rabi: Field,
    carrier_detuning: Field,
    dt: Field,
    window: Field,
    center: Field,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelay {
    zsteps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSwitch {
    duration: Field,
}

impl RawMedium {
    /// Span of the field a validation message names, if it came from the file.
    fn span_of(&self, message: &str) -> Option<Range<usize>> {
        let quantity = |f: &Field| f.as_ref().map(|s| s.span());
        let plain = |f: &Option<Spanned<f64>>| f.as_ref().map(|s| s.span());
        [
            ("optical_depth", plain(&self.optical_depth)),
            ("gamma12", quantity(&self.gamma12)),
            ("gamma13", quantity(&self.gamma13)),
            ("gamma24", quantity(&self.gamma24)),
            ("gamma3", quantity(&self.gamma3)),
            ("gamma4", quantity(&self.gamma4)),
            ("length", quantity(&self.length)),
            ("lambda_probe", quantity(&self.lambda_probe)),
            ("lambda_switch", quantity(&self.lambda_switch)),
            ("sigma24", quantity(&self.sigma24)),
            ("branching_3", plain(&self.branching_3)),
            ("branching_4", plain(&self.branching_4)),
        ]
        .into_iter()
        .find(|(name, _)| message.contains(name))
        .and_then(|(_, span)| span)
    }
}

struct Resolver<'a> {
    text: &'a str,
    source_name: &'a str,
    gamma3: f64,
}

impl Resolver<'_> {
    fn error(&self, span: Range<usize>, message: String) -> Error {
        let (line, column) = line_col(self.text, span.start);
        Error::Input {
            source_name: self.source_name.to_string(),
            line: Some(line),
            column: Some(column),
            message,
        }
    }

    fn unanchored(&self, message: String) -> Error {
        Error::Input {
            source_name: self.source_name.to_string(),
            line: None,
            column: None,
            message,
        }
    }

    fn apply(&self, target: &mut f64, field: &Field, dimension: Dimension, name: &str) -> Result<()> {
        if let Some(q) = field {
            let value = q
                .get_ref()
                .resolve(dimension, self.gamma3)
                .map_err(|e| self.error(q.span(), format!("{name}: {e}")))?;
            if !value.is_finite() {
                return Err(self.error(q.span(), format!("{name} must be finite")));
            }
            *target = value;
        }
        Ok(())
    }

    fn plain(&self, target: &mut f64, field: &Option<Spanned<f64>>) {
        if let Some(v) = field {
            *target = *v.get_ref();
        }
    }
}

impl RawConfig {
    fn resolve(self, text: &str, source_name: &str) -> Result<RunConfig> {
        let mut r = Resolver {
            text,
            source_name,
            gamma3: 0.0,
        };
        let mut config = match &self.preset {
            Some(p) => RunConfig::preset(p.get_ref()).map_err(|e| r.error(p.span(), e.to_string()))?,
            None => RunConfig::preset(DEFAULT_PRESET)?,
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }

        let m = &self.medium;
        let medium = &mut config.medium;
        if let Some(q) = &m.gamma3 {
            // Rates resolved against a unit Gamma3 come out in rad/s.
            if matches!(q.get_ref(), Quantity::Tagged { unit: crate::units::Unit::Gamma3, .. }) {
                return Err(r.error(q.span(), "gamma3 cannot be given in units of itself".into()));
            }
            r.gamma3 = 1.0;
            r.apply(&mut medium.gamma3, &m.gamma3, Dimension::Rate, "gamma3")?;
        }
        r.gamma3 = medium.gamma3;
        r.plain(&mut medium.optical_depth, &m.optical_depth);
        r.apply(&mut medium.gamma12, &m.gamma12, Dimension::Rate, "gamma12")?;
        r.apply(&mut medium.gamma13, &m.gamma13, Dimension::Rate, "gamma13")?;
        r.apply(&mut medium.gamma24, &m.gamma24, Dimension::Rate, "gamma24")?;
        r.apply(&mut medium.gamma4, &m.gamma4, Dimension::Rate, "gamma4")?;
        r.apply(&mut medium.length, &m.length, Dimension::Length, "length")?;
        r.apply(&mut medium.lambda_probe, &m.lambda_probe, Dimension::Length, "lambda_probe")?;
        r.apply(&mut medium.lambda_switch, &m.lambda_switch, Dimension::Length, "lambda_switch")?;
        r.apply(&mut medium.sigma24, &m.sigma24, Dimension::Area, "sigma24")?;
        r.plain(&mut medium.branching_3, &m.branching_3);
        r.plain(&mut medium.branching_4, &m.branching_4);
        medium.validate().map_err(|e| {
            let message = e.to_string();
            match m.span_of(&message) {
                Some(span) => r.error(span, message),
                None => r.unanchored(message),
            }
        })?;

        for raw in &self.channels {
            let index = *raw.index.get_ref();
            let Some(channel) = config.channels.iter_mut().find(|c| c.index == index) else {
                return Err(r.error(raw.index.span(), format!("no channel with index {index}")));
            };
            let fields = [
                (&mut channel.population_fraction, raw.population_fraction),
                (&mut channel.dipole_weight_13, raw.dipole_weight_13),
                (&mut channel.dipole_weight_23, raw.dipole_weight_23),
                (&mut channel.dipole_weight_24, raw.dipole_weight_24),
            ];
            for (target, value) in fields {
                if let Some(v) = value {
                    *target = v;
                }
            }
            r.apply(&mut channel.rabi_c, &raw.rabi_c, Dimension::Rate, "rabi_c")?;
            r.apply(&mut channel.rabi_s, &raw.rabi_s, Dimension::Rate, "rabi_s")?;
        }
        let channel_span = self.channels.first().map_or(0..0, |c| c.index.span());
        validate_channels(&config.channels).map_err(|e| r.error(channel_span, e.to_string()))?;

        if let Some(g) = &self.grid {
            let grid = &mut config.grid;
            r.apply(&mut grid.min, &g.min, Dimension::Rate, "grid.min")?;
            r.apply(&mut grid.max, &g.max, Dimension::Rate, "grid.max")?;
            r.apply(&mut grid.offsets.coupling, &g.coupling_offset, Dimension::Rate, "grid.coupling_offset")?;
            r.apply(&mut grid.offsets.switch, &g.switch_offset, Dimension::Rate, "grid.switch_offset")?;
            if let Some(count) = g.count {
                grid.count = count;
            }
            let span = g.min.as_ref().or(g.max.as_ref()).map_or(0..0, |s| s.span());
            grid.validate().map_err(|e| r.error(span, e.to_string()))?;
        }

        if let Some(p) = &self.pulse {
            let pulse = &mut config.pulse;
            if let Some(shape) = p.shape {
                pulse.shape = shape;
            }
            r.apply(&mut pulse.fwhm, &p.fwhm, Dimension::Time, "pulse.fwhm")?;
            r.apply(&mut pulse.peak_rabi, &p.peak_rabi, Dimension::Rate, "pulse.peak_rabi")?;
            r.apply(&mut pulse.carrier_detuning, &p.carrier_detuning, Dimension::Rate, "pulse.carrier_detuning")?;
            r.apply(&mut pulse.dt, &p.dt, Dimension::Time, "pulse.dt")?;
            r.apply(&mut pulse.window, &p.window, Dimension::Time, "pulse.window")?;
            r.apply(&mut pulse.center, &p.center, Dimension::Time, "pulse.center")?;
        }
        if let Some(zsteps) = self.delay.and_then(|d| d.zsteps) {
            config.zsteps = zsteps;
        }
        if let Some(s) = &self.switch {
            r.apply(&mut config.switch_duration, &s.duration, Dimension::Time, "switch.duration")?;
        }
        config.validate()?;
        Ok(config)
    }
}
