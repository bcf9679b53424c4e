// SPDX-License-Identifier: Apache-2.0

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::problem::{Dataset, DatasetKind, MAX_TRANSMISSION};
use crate::atomic::{ChannelParams, MediumParams, SusceptibilityModel};
use crate::error::{Error, Result};

/// Noiseless model transmission of the given kind at `detuning`.
pub fn synthesize(
    kind: DatasetKind,
    detuning: &[f64],
    channels: &[ChannelParams],
    medium: &MediumParams,
) -> Result<Dataset> {
    let mut channels = channels.to_vec();
    for c in &mut channels {
        if !kind.uses_coupling() {
            c.rabi_c = 0.0;
        }
        if !kind.uses_switch() {
            c.rabi_s = 0.0;
        }
    }
    let model = SusceptibilityModel::new(&channels, medium);
    let data = Dataset::new(kind, detuning.to_vec(), vec![0.0; detuning.len()], None)?;
    let transmission = detuning
        .iter()
        .map(|&d| Ok((-model.chi(data.offsets.point(d))?.im).exp()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Dataset { transmission, ..data })
}

/// Multiplies every transmission by `1 + relative * n`, `n ~ N(0, 1)`, and
/// clips the result to the accepted data range.
pub fn add_noise(data: &Dataset, relative: f64, seed: u64) -> Result<Dataset> {
    let normal = Normal::new(0.0, relative)
        .map_err(|e| Error::InvalidParameter(format!("noise level {relative}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let transmission = data
        .transmission
        .iter()
        .map(|&t| (t * (1.0 + normal.sample(&mut rng))).clamp(0.0, MAX_TRANSMISSION))
        .collect();
    Ok(Dataset {
        transmission,
        ..data.clone()
    })
}

/// `count` evenly spaced detunings on `[min, max]`.
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    let step = (max - min) / (count.max(2) - 1) as f64;
    (0..count).map(|i| min + i as f64 * step).collect()
}
