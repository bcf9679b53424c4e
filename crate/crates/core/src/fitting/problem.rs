// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::atomic::{
    validate_channels, ChannelParams, DetuningOffsets, MediumParams, SusceptibilityModel,
};
use crate::error::{Error, Result};
use crate::par;

/// Minimum number of samples in a dataset.
pub const MIN_POINTS: usize = 8;
/// Upper transmission limit accepted from data (allows noise overshoot).
pub const MAX_TRANSMISSION: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    /// Coupling and switch off.
    Absorption,
    /// Coupling on, switch off.
    Eit,
    /// Coupling and switch on.
    Switching,
}

impl DatasetKind {
    pub fn uses_coupling(self) -> bool {
        !matches!(self, Self::Absorption)
    }

    pub fn uses_switch(self) -> bool {
        matches!(self, Self::Switching)
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Absorption => "absorption",
            Self::Eit => "eit",
            Self::Switching => "switching",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "absorption" => Ok(Self::Absorption),
            "eit" => Ok(Self::Eit),
            "switching" => Ok(Self::Switching),
            other => Err(Error::InvalidParameter(format!(
                "unknown dataset kind `{other}` (expected absorption, eit or switching)"
            ))),
        }
    }
}

/// Transmission samples against probe detuning (Gamma3 units).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub detuning: Vec<f64>,
    pub transmission: Vec<f64>,
    pub weight: Vec<f64>,
    pub offsets: DetuningOffsets,
}

impl Dataset {
    /// Builds and validates a dataset; weights default to 1.
    pub fn new(
        kind: DatasetKind,
        detuning: Vec<f64>,
        transmission: Vec<f64>,
        weight: Option<Vec<f64>>,
    ) -> Result<Self> {
        let weight = weight.unwrap_or_else(|| vec![1.0; detuning.len()]);
        let data = Self {
            kind,
            detuning,
            transmission,
            weight,
            offsets: DetuningOffsets::default(),
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.detuning.len();
        if n < MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "{} dataset has {n} points, need at least {MIN_POINTS}",
                self.kind
            )));
        }
        if self.transmission.len() != n || self.weight.len() != n {
            return Err(Error::InvalidParameter(format!(
                "{} dataset column lengths differ ({n}, {}, {})",
                self.kind,
                self.transmission.len(),
                self.weight.len()
            )));
        }
        if let Some(d) = self.detuning.iter().find(|d| !d.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite detuning {d}")));
        }
        if let Some(&t) = self
            .transmission
            .iter()
            .find(|&&t| !(0.0..=MAX_TRANSMISSION).contains(&t))
        {
            return Err(Error::OutOfRange {
                value: t,
                range: "[0, 1.05] transmission",
            });
        }
        if let Some(&w) = self.weight.iter().find(|&&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::OutOfRange {
                value: w,
                range: "[0, inf) weight",
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.detuning.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detuning.is_empty()
    }

    /// Points that contribute to the residual.
    pub fn effective_len(&self) -> usize {
        self.weight.iter().filter(|&&w| w > 0.0).count()
    }
}

/// Model quantity a fit parameter controls.
///
/// `RabiC` / `RabiS` scale all channels together, keeping the channel ratios
/// of the base configuration; the value is the channel-1 Rabi frequency.
/// `RabiCn(k)` / `RabiSn(k)` set channel `k` alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ParamName {
    OpticalDepth,
    Gamma12,
    Gamma13,
    Gamma24,
    RabiC,
    RabiS,
    RabiCn(u8),
    RabiSn(u8),
}

impl ParamName {
    /// Whether the parameter changes the model for a dataset of this kind.
    pub fn active_for(self, kind: DatasetKind) -> bool {
        match self {
            Self::OpticalDepth | Self::Gamma13 => true,
            Self::Gamma12 | Self::RabiC | Self::RabiCn(_) => kind.uses_coupling(),
            Self::Gamma24 | Self::RabiS | Self::RabiSn(_) => kind.uses_switch(),
        }
    }

    /// Default (lower, upper) bounds for the logistic reparameterization.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            Self::OpticalDepth => (0.0, 100.0),
            Self::Gamma12 | Self::Gamma13 | Self::Gamma24 => (0.0, 5.0),
            _ => (0.0, 20.0),
        }
    }

    fn is_coupling_rabi(self) -> bool {
        matches!(self, Self::RabiC | Self::RabiCn(_))
    }

    fn is_switch_rabi(self) -> bool {
        matches!(self, Self::RabiS | Self::RabiSn(_))
    }

    /// Current value of this quantity in a model configuration.
    pub fn read(self, channels: &[ChannelParams], medium: &MediumParams) -> f64 {
        let channel = |k: u8| channels.iter().find(|c| c.index == k);
        match self {
            Self::OpticalDepth => medium.optical_depth,
            Self::Gamma12 => medium.gamma12,
            Self::Gamma13 => medium.gamma13,
            Self::Gamma24 => medium.gamma24,
            Self::RabiC => channels.first().map_or(0.0, |c| c.rabi_c),
            Self::RabiS => channels.first().map_or(0.0, |c| c.rabi_s),
            Self::RabiCn(k) => channel(k).map_or(0.0, |c| c.rabi_c),
            Self::RabiSn(k) => channel(k).map_or(0.0, |c| c.rabi_s),
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OpticalDepth => f.write_str("optical_depth"),
            Self::Gamma12 => f.write_str("gamma12"),
            Self::Gamma13 => f.write_str("gamma13"),
            Self::Gamma24 => f.write_str("gamma24"),
            Self::RabiC => f.write_str("rabi_c"),
            Self::RabiS => f.write_str("rabi_s"),
            Self::RabiCn(k) => write!(f, "rabi_c{k}"),
            Self::RabiSn(k) => write!(f, "rabi_s{k}"),
        }
    }
}

impl FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let indexed = |rest: &str| -> Option<u8> { rest.parse().ok().filter(|k| (1..=9).contains(k)) };
        Ok(match s {
            "optical_depth" | "od" => Self::OpticalDepth,
            "gamma12" => Self::Gamma12,
            "gamma13" => Self::Gamma13,
            "gamma24" => Self::Gamma24,
            "rabi_c" => Self::RabiC,
            "rabi_s" => Self::RabiS,
            _ => {
                if let Some(k) = s.strip_prefix("rabi_c").and_then(indexed) {
                    Self::RabiCn(k)
                } else if let Some(k) = s.strip_prefix("rabi_s").and_then(indexed) {
                    Self::RabiSn(k)
                } else {
                    return Err(Error::InvalidParameter(format!("unknown fit parameter `{s}`")));
                }
            }
        })
    }
}

impl From<ParamName> for String {
    fn from(p: ParamName) -> Self {
        p.to_string()
    }
}

impl TryFrom<String> for ParamName {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Which datasets a parameter applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Shared,
    Dataset(usize),
}

impl Scope {
    pub fn covers(self, dataset: usize) -> bool {
        match self {
            Self::Shared => true,
            Self::Dataset(i) => i == dataset,
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Shared => f.write_str("shared"),
            Self::Dataset(i) => write!(f, "dataset {i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitParameter {
    pub name: ParamName,
    pub scope: Scope,
    pub initial: f64,
    pub lower: f64,
    pub upper: f64,
    pub fixed: bool,
}

impl FitParameter {
    /// Free, shared parameter with default bounds.
    pub fn free(name: ParamName, initial: f64) -> Self {
        let (lower, upper) = name.default_bounds();
        Self {
            name,
            scope: Scope::Shared,
            initial,
            lower,
            upper,
            fixed: false,
        }
    }

    pub fn fixed(name: ParamName, value: f64) -> Self {
        Self {
            fixed: true,
            ..Self::free(name, value)
        }
    }

    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_scope(mut self, scope: Scope) -> Self {
        self.scope = scope;
        self
    }
}

/// Datasets plus the parameterization that maps a free-parameter vector onto
/// the susceptibility model. Quantities not named by any parameter keep the
/// values of the base configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub datasets: Vec<Dataset>,
    pub channels: Vec<ChannelParams>,
    pub medium: MediumParams,
    pub parameters: Vec<FitParameter>,
}

impl FitProblem {
    /// Problem in which `free` parameters are fitted (shared across datasets,
    /// starting from the base configuration) and everything else is held.
    pub fn with_free(
        datasets: Vec<Dataset>,
        channels: Vec<ChannelParams>,
        medium: MediumParams,
        free: &[ParamName],
    ) -> Self {
        let parameters = free
            .iter()
            .map(|&name| FitParameter::free(name, name.read(&channels, &medium)))
            .collect();
        Self {
            datasets,
            channels,
            medium,
            parameters,
        }
    }

    /// Indices into `parameters` of the free ones, in order.
    pub fn free_indices(&self) -> Vec<usize> {
        (0..self.parameters.len()).filter(|&i| !self.parameters[i].fixed).collect()
    }

    /// Total residual count (including zero-weight points).
    pub fn residual_len(&self) -> usize {
        self.datasets.iter().map(Dataset::len).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::InvalidParameter("fit problem has no datasets".into()));
        }
        for d in &self.datasets {
            d.validate()?;
        }
        validate_channels(&self.channels)?;
        self.medium.validate()?;

        for (i, p) in self.parameters.iter().enumerate() {
            if !(p.lower >= 0.0) || !(p.upper > p.lower) || !p.upper.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{}: bounds must satisfy 0 <= lower < upper < inf (got [{}, {}])",
                    p.name, p.lower, p.upper
                )));
            }
            let inside = if p.fixed {
                (p.lower..=p.upper).contains(&p.initial)
            } else {
                p.initial > p.lower && p.initial < p.upper
            };
            if !inside {
                return Err(Error::InvalidParameter(format!(
                    "{}: initial value {} is not inside [{}, {}]",
                    p.name, p.initial, p.lower, p.upper
                )));
            }
            if let Scope::Dataset(d) = p.scope {
                if d >= self.datasets.len() {
                    return Err(Error::InvalidSharing(format!(
                        "{} is scoped to dataset {d}, but there are only {}",
                        p.name,
                        self.datasets.len()
                    )));
                }
            }
            if let ParamName::RabiCn(k) | ParamName::RabiSn(k) = p.name {
                if !self.channels.iter().any(|c| c.index == k) {
                    return Err(Error::InvalidSharing(format!("{} names a missing channel", p.name)));
                }
            }
            let referenced = self
                .datasets
                .iter()
                .enumerate()
                .any(|(d, data)| p.scope.covers(d) && p.name.active_for(data.kind));
            if !referenced {
                return Err(Error::InvalidSharing(format!(
                    "{} ({}) affects none of its datasets",
                    p.name, p.scope
                )));
            }
            for q in &self.parameters[..i] {
                let overlapping = (0..self.datasets.len()).any(|d| p.scope.covers(d) && q.scope.covers(d));
                let same = q.name == p.name
                    || (q.name.is_coupling_rabi() && p.name.is_coupling_rabi() && (q.name == ParamName::RabiC || p.name == ParamName::RabiC))
                    || (q.name.is_switch_rabi() && p.name.is_switch_rabi() && (q.name == ParamName::RabiS || p.name == ParamName::RabiS));
                if overlapping && same {
                    return Err(Error::InvalidSharing(format!(
                        "{} ({}) and {} ({}) control the same quantity",
                        q.name, q.scope, p.name, p.scope
                    )));
                }
            }
        }
        Ok(())
    }

    /// Natural-unit parameter values with the free ones replaced by `free`.
    pub fn full_values(&self, free: &[f64]) -> Vec<f64> {
        let mut values: Vec<f64> = self.parameters.iter().map(|p| p.initial).collect();
        for (&i, &v) in self.free_indices().iter().zip(free) {
            values[i] = v;
        }
        values
    }

    /// Model configuration seen by dataset `d` for the given parameter values.
    pub fn configuration(&self, d: usize, values: &[f64]) -> (Vec<ChannelParams>, MediumParams) {
        let mut channels = self.channels.clone();
        let mut medium = self.medium;
        let ratios = |field: fn(&ChannelParams) -> f64, weight: fn(&ChannelParams) -> f64| -> Vec<f64> {
            let first = &self.channels[0];
            if field(first) > 0.0 {
                self.channels.iter().map(|c| field(c) / field(first)).collect()
            } else {
                self.channels.iter().map(|c| (weight(c) / weight(first)).sqrt()).collect()
            }
        };
        for (p, &v) in self.parameters.iter().zip(values) {
            if !p.scope.covers(d) {
                continue;
            }
            match p.name {
                ParamName::OpticalDepth => medium.optical_depth = v,
                ParamName::Gamma12 => medium.gamma12 = v,
                ParamName::Gamma13 => medium.gamma13 = v,
                ParamName::Gamma24 => medium.gamma24 = v,
                ParamName::RabiC => {
                    for (c, r) in channels.iter_mut().zip(ratios(|c| c.rabi_c, |c| c.dipole_weight_23)) {
                        c.rabi_c = v * r;
                    }
                }
                ParamName::RabiS => {
                    for (c, r) in channels.iter_mut().zip(ratios(|c| c.rabi_s, |c| c.dipole_weight_24)) {
                        c.rabi_s = v * r;
                    }
                }
                ParamName::RabiCn(k) => channels.iter_mut().filter(|c| c.index == k).for_each(|c| c.rabi_c = v),
                ParamName::RabiSn(k) => channels.iter_mut().filter(|c| c.index == k).for_each(|c| c.rabi_s = v),
            }
        }
        let kind = self.datasets[d].kind;
        for c in &mut channels {
            if !kind.uses_coupling() {
                c.rabi_c = 0.0;
            }
            if !kind.uses_switch() {
                c.rabi_s = 0.0;
            }
        }
        (channels, medium)
    }

    /// Model transmission for every dataset at the given parameter values.
    pub fn model(&self, values: &[f64]) -> Result<Vec<Vec<f64>>> {
        let indices: Vec<usize> = (0..self.datasets.len()).collect();
        par::try_map(&indices, |&d| {
            let (channels, medium) = self.configuration(d, values);
            let model = SusceptibilityModel::new(&channels, &medium);
            let data = &self.datasets[d];
            data.detuning
                .iter()
                .map(|&delta| Ok((-model.chi(data.offsets.point(delta))?.im).exp()))
                .collect()
        })
    }
}

/// Stacked weighted residuals `sqrt(w) (model - data)` as a function of the
/// free-parameter vector (natural units, in `free_indices` order).
pub struct ResidualFunction<'a> {
    problem: &'a FitProblem,
}

impl ResidualFunction<'_> {
    pub fn problem(&self) -> &FitProblem {
        self.problem
    }

    pub fn len(&self) -> usize {
        self.problem.residual_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_free(&self) -> usize {
        self.problem.free_indices().len()
    }

    pub fn eval(&self, free: &[f64]) -> Result<Vec<f64>> {
        let values = self.problem.full_values(free);
        let model = self.problem.model(&values)?;
        Ok(self
            .problem
            .datasets
            .iter()
            .zip(model)
            .flat_map(|(data, m)| {
                m.into_iter()
                    .zip(&data.transmission)
                    .zip(&data.weight)
                    .map(|((m, t), w)| if *w > 0.0 { w.sqrt() * (m - t) } else { 0.0 })
                    .collect::<Vec<_>>()
            })
            .collect())
    }
}

pub fn build_residuals(problem: &FitProblem) -> Result<ResidualFunction<'_>> {
    problem.validate()?;
    Ok(ResidualFunction { problem })
}
