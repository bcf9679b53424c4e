// SPDX-License-Identifier: Apache-2.0

//! Physical constants and unit conversions.
//!
//! Internally every rate and detuning is a multiple of the 5P1/2 radiative
//! rate Gamma3. Absolute quantities (seconds, metres, watts) only appear at
//! the boundary: analysis outputs, pulse time steps, and file I/O.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const HBAR: f64 = 1.054_571_817e-34;

/// 5P1/2 Einstein A coefficient of 87Rb, rad/s.
pub const GAMMA3_RB87: f64 = 2.0 * PI * 5.7e6;
/// 5P3/2 Einstein A coefficient of 87Rb, rad/s.
pub const GAMMA4_RB87: f64 = 2.0 * PI * 6.07e6;

/// D1 (5S1/2 -> 5P1/2) vacuum wavelength, m.
pub const LAMBDA_D1: f64 = 794.978_851e-9;
/// D2 (5S1/2 -> 5P3/2) vacuum wavelength, m.
pub const LAMBDA_D2: f64 = 780.241_209e-9;

pub fn angular_frequency(wavelength: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / wavelength
}

pub fn photon_energy(wavelength: f64) -> f64 {
    HBAR * angular_frequency(wavelength)
}

/// Resonant cross section of a closed two-level transition, 3 lambda^2 / (2 pi).
pub fn cycling_cross_section(wavelength: f64) -> f64 {
    3.0 * wavelength * wavelength / (2.0 * PI)
}

/// The lambda^2 / (2 pi) mode area used to count photons per area.
pub fn mode_area(wavelength: f64) -> f64 {
    wavelength * wavelength / (2.0 * PI)
}

/// Cyclic MHz to Gamma3 units, given the absolute Gamma3 in rad/s.
pub fn mhz_to_gamma(mhz: f64, gamma3: f64) -> f64 {
    2.0 * PI * mhz * 1e6 / gamma3
}

pub fn gamma_to_mhz(rate: f64, gamma3: f64) -> f64 {
    rate * gamma3 / (2.0 * PI * 1e6)
}

/// Unit tags accepted in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    /// Multiples of Gamma3.
    #[serde(rename = "gamma3")]
    Gamma3,
    /// Cyclic megahertz; converted with a factor 2 pi.
    #[serde(rename = "MHz")]
    MHz,
    #[serde(rename = "rad/s")]
    RadPerSecond,
    #[serde(rename = "m")]
    Metre,
    #[serde(rename = "mm")]
    Millimetre,
    #[serde(rename = "um")]
    Micrometre,
    #[serde(rename = "nm")]
    Nanometre,
    #[serde(rename = "m2")]
    SquareMetre,
    #[serde(rename = "cm2")]
    SquareCentimetre,
    #[serde(rename = "s")]
    Second,
    #[serde(rename = "us")]
    Microsecond,
    #[serde(rename = "ns")]
    Nanosecond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Rate,
    Length,
    Area,
    Time,
}

impl Unit {
    pub fn dimension(self) -> Dimension {
        match self {
            Unit::Gamma3 | Unit::MHz | Unit::RadPerSecond => Dimension::Rate,
            Unit::Metre | Unit::Millimetre | Unit::Micrometre | Unit::Nanometre => {
                Dimension::Length
            }
            Unit::SquareMetre | Unit::SquareCentimetre => Dimension::Area,
            Unit::Second | Unit::Microsecond | Unit::Nanosecond => Dimension::Time,
        }
    }

    /// Converts `value` in this unit to the canonical internal unit of its
    /// dimension: Gamma3 for rates, metres, square metres, seconds.
    pub fn to_canonical(self, value: f64, gamma3: f64) -> f64 {
        match self {
            Unit::Gamma3 => value,
            Unit::MHz => mhz_to_gamma(value, gamma3),
            Unit::RadPerSecond => value / gamma3,
            Unit::Metre | Unit::SquareMetre | Unit::Second => value,
            Unit::Millimetre => value * 1e-3,
            Unit::Micrometre | Unit::Microsecond => value * 1e-6,
            Unit::Nanometre | Unit::Nanosecond => value * 1e-9,
            Unit::SquareCentimetre => value * 1e-4,
        }
    }

    pub fn from_canonical(self, value: f64, gamma3: f64) -> f64 {
        match self {
            Unit::Gamma3 => value,
            Unit::MHz => gamma_to_mhz(value, gamma3),
            Unit::RadPerSecond => value * gamma3,
            Unit::Metre | Unit::SquareMetre | Unit::Second => value,
            Unit::Millimetre => value / 1e-3,
            Unit::Micrometre | Unit::Microsecond => value / 1e-6,
            Unit::Nanometre | Unit::Nanosecond => value / 1e-9,
            Unit::SquareCentimetre => value / 1e-4,
        }
    }
}

/// A configuration value: either a bare number in the canonical unit of its
/// field or an explicitly tagged `{ value, unit }` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Bare(f64),
    Tagged { value: f64, unit: Unit },
}

impl Quantity {
    pub fn resolve(&self, expected: Dimension, gamma3: f64) -> Result<f64> {
        match *self {
            Quantity::Bare(v) => Ok(v),
            Quantity::Tagged { value, unit } => {
                if unit.dimension() != expected {
                    return Err(Error::InvalidParameter(format!(
                        "unit {unit:?} has dimension {:?}, expected {expected:?}",
                        unit.dimension()
                    )));
                }
                Ok(unit.to_canonical(value, gamma3))
            }
        }
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Bare(v)
    }
}
