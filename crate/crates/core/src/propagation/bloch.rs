// SPDX-License-Identifier: Apache-2.0

//! Split-step Maxwell-Bloch propagation in the co-moving frame.
//!
//! Each z-slice integrates the 4x4 density matrix of every channel through
//! the local probe history with RK4, then advances the probe envelope by the
//! polarization `i * sum_i g_i rho31^(i)`. The z update is a midpoint
//! (predictor-corrector) step. The switch envelope travels at c and is not
//! depleted, so in retarded time it is the same at every slice.
//!
//! Levels are indexed 0..4 for |1>, |2>, |3>, |4>. Time is measured in
//! 1/Gamma3 inside the integrator.

use num_complex::Complex64;

use crate::atomic::{channel_depths, validate_channels, ChannelParams, MediumParams};
use crate::error::{Error, Result};
use crate::par;
use crate::propagation::pulse::PulseEnvelope;

pub type DensityMatrix = [[Complex64; 4]; 4];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const TRACE_TOLERANCE: f64 = 1e-8;
const HERMITICITY_TOLERANCE: f64 = 1e-10;
const POPULATION_SLACK: f64 = 1e-10;
const MIN_SAMPLES_PER_PERIOD: f64 = 20.0;
pub const MIN_ZSTEPS: usize = 16;

pub fn ground_state() -> DensityMatrix {
    let mut rho = [[ZERO; 4]; 4];
    rho[0][0] = Complex64::new(1.0, 0.0);
    rho
}

/// Checks trace, Hermiticity and population bounds.
pub fn check_physical(rho: &DensityMatrix) -> std::result::Result<(), String> {
    let mut trace = 0.0;
    for j in 0..4 {
        let p = rho[j][j];
        if !p.re.is_finite() || !p.im.is_finite() {
            return Err(format!("non-finite population in level {}", j + 1));
        }
        if p.re < -POPULATION_SLACK || p.re > 1.0 + POPULATION_SLACK {
            return Err(format!("population of level {} is {:e}", j + 1, p.re));
        }
        trace += p.re;
        for k in 0..4 {
            let asym = (rho[j][k] - rho[k][j].conj()).norm();
            if asym > HERMITICITY_TOLERANCE {
                return Err(format!("rho[{j}][{k}] not Hermitian (|delta| = {asym:e})"));
            }
        }
    }
    if (trace - 1.0).abs() > TRACE_TOLERANCE {
        return Err(format!("trace = {trace:.12}"));
    }
    Ok(())
}

/// Relaxation of one channel in Gamma3 units.
#[derive(Debug, Clone, Copy)]
struct Relaxation {
    coherence: [[f64; 4]; 4],
    gamma4: f64,
    branching_3: f64,
    branching_4: f64,
}

impl Relaxation {
    fn new(medium: &MediumParams) -> Self {
        let (g12, g13, g24) = (medium.gamma12, medium.gamma13, medium.gamma24);
        let mut coherence = [[0.0; 4]; 4];
        let mut set = |j: usize, k: usize, v: f64| {
            coherence[j][k] = v;
            coherence[k][j] = v;
        };
        set(0, 1, g12);
        set(0, 2, g13);
        set(0, 3, g24);
        set(1, 2, g13 + g12);
        set(1, 3, g24 + g12);
        set(2, 3, g13 + g24);
        Self {
            coherence,
            gamma4: medium.gamma4,
            branching_3: medium.branching_3,
            branching_4: medium.branching_4,
        }
    }
}

/// Fields and detunings seen by one channel at one instant.
#[derive(Debug, Clone, Copy)]
struct Drive {
    probe: Complex64,
    coupling: f64,
    switch: Complex64,
    delta_p: f64,
    delta_c: f64,
    delta_s: f64,
}

fn hamiltonian(d: &Drive) -> DensityMatrix {
    let mut h = [[ZERO; 4]; 4];
    h[1][1] = Complex64::new(-d.delta_c, 0.0);
    h[2][2] = Complex64::new(-d.delta_p, 0.0);
    h[3][3] = Complex64::new(-d.delta_s, 0.0);
    h[2][0] = -0.5 * d.probe;
    h[2][1] = Complex64::new(-0.5 * d.coupling, 0.0);
    h[3][1] = -0.5 * d.switch;
    h[0][2] = h[2][0].conj();
    h[1][2] = h[2][1].conj();
    h[1][3] = h[3][1].conj();
    h
}

fn derivative(rho: &DensityMatrix, h: &DensityMatrix, relax: &Relaxation) -> DensityMatrix {
    let mut out = [[ZERO; 4]; 4];
    let minus_i = Complex64::new(0.0, -1.0);
    for j in 0..4 {
        for k in j..4 {
            let mut c = ZERO;
            for m in 0..4 {
                c += h[j][m] * rho[m][k] - rho[j][m] * h[m][k];
            }
            out[j][k] = minus_i * c - relax.coherence[j][k] * rho[j][k];
        }
    }
    let p3 = rho[2][2].re;
    let p4 = rho[3][3].re;
    out[2][2] -= p3;
    out[0][0] += relax.branching_3 * p3;
    out[1][1] += (1.0 - relax.branching_3) * p3;
    out[3][3] -= relax.gamma4 * p4;
    out[0][0] += relax.branching_4 * relax.gamma4 * p4;
    out[1][1] += (1.0 - relax.branching_4) * relax.gamma4 * p4;
    for j in 0..4 {
        out[j][j].im = 0.0;
        for k in 0..j {
            out[j][k] = out[k][j].conj();
        }
    }
    out
}

fn axpy(rho: &DensityMatrix, k: &DensityMatrix, h: f64) -> DensityMatrix {
    let mut out = *rho;
    for j in 0..4 {
        for m in 0..4 {
            out[j][m] += k[j][m] * h;
        }
    }
    out
}

fn rk4_step(rho: &DensityMatrix, start: &Drive, mid: &Drive, end: &Drive, h: f64, relax: &Relaxation) -> DensityMatrix {
    let (h0, hm, h1) = (hamiltonian(start), hamiltonian(mid), hamiltonian(end));
    let k1 = derivative(rho, &h0, relax);
    let k2 = derivative(&axpy(rho, &k1, h / 2.0), &hm, relax);
    let k3 = derivative(&axpy(rho, &k2, h / 2.0), &hm, relax);
    let k4 = derivative(&axpy(rho, &k3, h), &h1, relax);
    let mut out = *rho;
    for j in 0..4 {
        for m in 0..4 {
            out[j][m] += (k1[j][m] + 2.0 * k2[j][m] + 2.0 * k3[j][m] + k4[j][m]) * (h / 6.0);
        }
    }
    out
}

/// Extremes observed while integrating, for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityStats {
    pub max_trace_error: f64,
    pub min_population: f64,
    pub max_population: f64,
}

impl PhysicalityStats {
    fn new() -> Self {
        Self {
            max_trace_error: 0.0,
            min_population: f64::INFINITY,
            max_population: f64::NEG_INFINITY,
        }
    }

    fn observe(&mut self, rho: &DensityMatrix) {
        let mut trace = 0.0;
        for j in 0..4 {
            let p = rho[j][j].re;
            trace += p;
            self.min_population = self.min_population.min(p);
            self.max_population = self.max_population.max(p);
        }
        self.max_trace_error = self.max_trace_error.max((trace - 1.0).abs());
    }

    fn merge(self, other: Self) -> Self {
        Self {
            max_trace_error: self.max_trace_error.max(other.max_trace_error),
            min_population: self.min_population.min(other.min_population),
            max_population: self.max_population.max(other.max_population),
        }
    }
}

struct ChannelRun {
    coherence_31: Vec<Complex64>,
    final_state: DensityMatrix,
    stats: PhysicalityStats,
}

struct ChannelSetup {
    probe_scale: f64,
    coupling: f64,
    switch: Vec<Complex64>,
    polarization_weight: f64,
}

#[allow(clippy::too_many_arguments)]
fn integrate_channel(
    setup: &ChannelSetup,
    probe: &[Complex64],
    delta_p: f64,
    h: f64,
    relax: &Relaxation,
    z_step: usize,
) -> Result<ChannelRun> {
    let n = probe.len();
    let drive = |p: Complex64, s: Complex64| Drive {
        probe: p * setup.probe_scale,
        coupling: setup.coupling,
        switch: s,
        delta_p,
        delta_c: delta_p,
        delta_s: delta_p,
    };
    let mut rho = ground_state();
    let mut stats = PhysicalityStats::new();
    let mut coherence_31 = Vec::with_capacity(n);
    coherence_31.push(rho[2][0]);
    for i in 0..n - 1 {
        let start = drive(probe[i], setup.switch[i]);
        let end = drive(probe[i + 1], setup.switch[i + 1]);
        let mid = drive(
            0.5 * (probe[i] + probe[i + 1]),
            0.5 * (setup.switch[i] + setup.switch[i + 1]),
        );
        rho = rk4_step(&rho, &start, &mid, &end, h, relax);
        if let Err(detail) = check_physical(&rho) {
            return Err(Error::TraceViolation {
                z_step,
                t_step: i + 1,
                detail,
            });
        }
        stats.observe(&rho);
        coherence_31.push(rho[2][0]);
    }
    Ok(ChannelRun {
        coherence_31,
        final_state: rho,
        stats,
    })
}

/// Solver state retained per z-slice: the density matrix of every channel
/// at the end of the time window.
#[derive(Debug, Clone, PartialEq)]
pub struct MbGrid {
    pub zsteps: usize,
    pub tsteps: usize,
    pub slice_states: Vec<Vec<DensityMatrix>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxwellBlochOutput {
    pub probe: PulseEnvelope,
    pub grid: MbGrid,
    pub stats: PhysicalityStats,
    pub energy_in: f64,
    pub energy_out: f64,
}

fn polarization(
    setups: &[ChannelSetup],
    probe: &[Complex64],
    delta_p: f64,
    h: f64,
    relax: &Relaxation,
    z_step: usize,
) -> Result<(Vec<Complex64>, Vec<DensityMatrix>, PhysicalityStats)> {
    let runs = par::try_map(setups, |s| integrate_channel(s, probe, delta_p, h, relax, z_step))?;
    let mut source = vec![ZERO; probe.len()];
    let mut stats = PhysicalityStats::new();
    let mut states = Vec::with_capacity(runs.len());
    for (run, setup) in runs.iter().zip(setups) {
        for (s, c) in source.iter_mut().zip(&run.coherence_31) {
            *s += Complex64::i() * setup.polarization_weight * c;
        }
        stats = stats.merge(run.stats);
        states.push(run.final_state);
    }
    Ok((source, states, stats))
}

/// Propagates `probe` through the medium with the full density-matrix model.
///
/// `switch` gives the switch time profile; each channel sees
/// `rabi_s * |switch| / max|switch|`. With `None` every channel sees a
/// constant switch of `rabi_s`, matching the continuous-wave linear model.
pub fn propagate_maxwell_bloch(
    probe: &PulseEnvelope,
    switch: Option<&PulseEnvelope>,
    channels: &[ChannelParams],
    medium: &MediumParams,
    zsteps: usize,
) -> Result<MaxwellBlochOutput> {
    probe.validate()?;
    validate_channels(channels)?;
    medium.validate()?;
    if zsteps < MIN_ZSTEPS {
        return Err(Error::InvalidParameter(format!(
            "zsteps = {zsteps}, need at least {MIN_ZSTEPS}"
        )));
    }
    let n = probe.len();
    if let Some(s) = switch {
        if s.len() != n || (s.dt - probe.dt).abs() > 1e-12 * probe.dt {
            return Err(Error::InvalidParameter(
                "switch envelope must share the probe time grid".into(),
            ));
        }
    }

    let fastest = channels
        .iter()
        .flat_map(|c| [c.rabi_c, c.rabi_s])
        .fold(1.0_f64, f64::max)
        .max(probe.peak_rabi.abs());
    let h = probe.dt * medium.gamma3;
    let samples_per_period = 1.0 / (h * fastest);
    if samples_per_period < MIN_SAMPLES_PER_PERIOD {
        return Err(Error::GridTooCoarse { samples_per_period });
    }

    let depths = channel_depths(channels, medium.optical_depth);
    let switch_profile: Vec<Complex64> = match switch {
        Some(s) => {
            let peak = s.samples.iter().map(|c| c.norm()).fold(0.0, f64::max);
            s.samples
                .iter()
                .map(|c| if peak > 0.0 { c / peak } else { ZERO })
                .collect()
        }
        None => vec![Complex64::new(1.0, 0.0); n],
    };
    let setups: Vec<ChannelSetup> = channels
        .iter()
        .zip(&depths)
        .map(|(c, &depth)| {
            let probe_scale = c.dipole_weight_13.sqrt();
            ChannelSetup {
                probe_scale,
                coupling: c.rabi_c,
                switch: switch_profile.iter().map(|s| s * c.rabi_s).collect(),
                // depth * gamma13 / sqrt(w): with rho31 = sqrt(w) E b / 2 this
                // reproduces dE/dz = (i/2) chi_red E in linear response.
                polarization_weight: if probe_scale > 0.0 {
                    depth * medium.gamma13 / probe_scale
                } else {
                    0.0
                },
            }
        })
        .collect();

    let relax = Relaxation::new(medium);
    let dz = 1.0 / zsteps as f64;
    let delta_p = probe.carrier_detuning;
    let mut field = probe.samples.clone();
    let mut slice_states = Vec::with_capacity(zsteps);
    let mut stats = PhysicalityStats::new();

    for z in 0..zsteps {
        let (source, _, s0) = polarization(&setups, &field, delta_p, h, &relax, z)?;
        let midpoint: Vec<Complex64> = field
            .iter()
            .zip(&source)
            .map(|(e, p)| e + p * (dz / 2.0))
            .collect();
        let (source, states, s1) = polarization(&setups, &midpoint, delta_p, h, &relax, z)?;
        for (e, p) in field.iter_mut().zip(&source) {
            *e += p * dz;
        }
        stats = stats.merge(s0).merge(s1);
        slice_states.push(states);
    }

    let out = PulseEnvelope {
        samples: field,
        ..probe.clone()
    };
    let energy_in = probe.energy();
    let energy_out = out.energy();
    if energy_in > 0.0 && energy_out > energy_in * 1.01 {
        return Err(Error::StepUnstable {
            growth: energy_out / energy_in - 1.0,
        });
    }
    Ok(MaxwellBlochOutput {
        probe: out,
        grid: MbGrid {
            zsteps,
            tsteps: n,
            slice_states,
        },
        stats,
        energy_in,
        energy_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::rb87_channels;

    fn short_pulse() -> PulseEnvelope {
        PulseEnvelope::gaussian(60e-9, 150e-9, 0.2e-9, 1500, 0.01, 0.0)
    }

    #[test]
    fn vacuum_is_identity() {
        let m = MediumParams::rb87(0.0, 0.15, 0.8e-3);
        let ch = rb87_channels([3.2, 3.2, 2.6], [0.0; 3]);
        let p = short_pulse();
        let out = propagate_maxwell_bloch(&p, None, &ch, &m, 16).unwrap();
        for (a, b) in p.samples.iter().zip(&out.probe.samples) {
            assert!((a - b).norm() <= 1e-8 * p.peak_rabi);
        }
    }

    #[test]
    fn rejects_too_few_slices() {
        let m = MediumParams::rb87(1.0, 0.15, 0.8e-3);
        let ch = rb87_channels([3.2, 3.2, 2.6], [0.0; 3]);
        assert!(propagate_maxwell_bloch(&short_pulse(), None, &ch, &m, 8).is_err());
    }

    #[test]
    fn rejects_coarse_time_grid() {
        let m = MediumParams::rb87(1.0, 0.15, 0.8e-3);
        let ch = rb87_channels([3.2, 3.2, 2.6], [0.0; 3]);
        let p = PulseEnvelope::gaussian(60e-9, 150e-9, 2e-9, 300, 0.01, 0.0);
        let err = propagate_maxwell_bloch(&p, None, &ch, &m, 16).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
    }

    #[test]
    fn strong_probe_stays_physical() {
        let m = MediumParams::rb87(2.0, 0.15, 0.8e-3);
        let ch = rb87_channels([2.0, 2.0, 1.7], [1.0, 1.0, 1.0]);
        let p = PulseEnvelope::gaussian(60e-9, 150e-9, 0.2e-9, 1500, 1.0, 0.0);
        let out = propagate_maxwell_bloch(&p, None, &ch, &m, 16).unwrap();
        assert!(out.stats.max_trace_error < 1e-8);
        assert!(out.stats.min_population >= -1e-10);
        assert!(out.stats.max_population <= 1.0 + 1e-10);
        assert!(out.energy_out <= out.energy_in);
        for slice in &out.grid.slice_states {
            for rho in slice {
                check_physical(rho).unwrap();
            }
        }
    }

    #[test]
    fn detects_non_physical_matrix() {
        let mut rho = ground_state();
        rho[0][0] = Complex64::new(0.9, 0.0);
        assert!(check_physical(&rho).unwrap_err().contains("trace"));
        let mut rho = ground_state();
        rho[0][1] = Complex64::new(0.1, 0.0);
        assert!(check_physical(&rho).unwrap_err().contains("Hermitian"));
    }

    #[test]
    fn derivative_preserves_trace_and_hermiticity() {
        let m = MediumParams::rb87(2.0, 0.15, 0.8e-3);
        let relax = Relaxation::new(&m);
        let mut rho = [[ZERO; 4]; 4];
        let pops = [0.4, 0.3, 0.2, 0.1];
        for j in 0..4 {
            rho[j][j] = Complex64::new(pops[j], 0.0);
        }
        rho[0][2] = Complex64::new(0.05, 0.02);
        rho[2][0] = rho[0][2].conj();
        rho[1][3] = Complex64::new(-0.03, 0.01);
        rho[3][1] = rho[1][3].conj();
        let d = Drive {
            probe: Complex64::new(0.3, 0.1),
            coupling: 2.0,
            switch: Complex64::new(0.5, 0.0),
            delta_p: 0.2,
            delta_c: 0.1,
            delta_s: -0.3,
        };
        let k = derivative(&rho, &hamiltonian(&d), &relax);
        let tr: f64 = (0..4).map(|j| k[j][j].re).sum();
        assert!(tr.abs() < 1e-15);
        for j in 0..4 {
            for l in 0..4 {
                assert_eq!(k[j][l], k[l][j].conj());
            }
        }
    }
}
