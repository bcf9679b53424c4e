// SPDX-License-Identifier: Apache-2.0

use eitlab_core::atomic::{
    channel_depths, rb87_channels, susceptibility, ChannelParams, DetuningOffsets, DetuningPoint, MediumParams,
};
use eitlab_core::propagation::transmission_at;
use proptest::prelude::*;

fn medium(od: f64, g12: f64, g13: f64, g24: f64) -> MediumParams {
    let mut m = MediumParams::rb87(od, g12, 0.8e-3);
    m.gamma13 = g13;
    m.gamma24 = g24;
    m
}

fn point(dp: f64, dc: f64, ds: f64) -> DetuningPoint {
    DetuningPoint {
        delta_p: dp,
        delta_c: dc,
        delta_s: ds,
    }
}

/// Per-channel resonant loss exponent, reduced by hand from the
/// susceptibility with every complex detuning purely imaginary.
fn resonant_loss(od_i: f64, g12: f64, g13: f64, g24: f64, wc: f64, ws: f64) -> f64 {
    od_i * g13 * (ws * ws + 4.0 * g12 * g24) / (4.0 * g12 * g13 * g24 + wc * wc * g24 + ws * ws * g13)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn channels_add(
        od in 0.1..20.0f64, g12 in 0.01..1.0f64, g13 in 0.05..1.0f64,
        wc in 0.0..5.0f64, ws in 0.0..3.0f64,
        dp in -5.0..5.0f64, dc in -2.0..2.0f64, ds in -2.0..2.0f64,
    ) {
        let m = medium(od, g12, g13, 0.53);
        let ch = rb87_channels([wc, wc, 0.8 * wc], [ws, 1.2 * ws, 1.5 * ws]);
        let p = point(dp, dc, ds);
        let total = susceptibility(p, &ch, &m).unwrap();
        let depths = channel_depths(&ch, od);
        let mut sum = num_complex::Complex64::new(0.0, 0.0);
        for (c, &d) in ch.iter().zip(&depths) {
            let alone = [ChannelParams { population_fraction: 1.0, ..*c }];
            sum += susceptibility(p, &alone, &MediumParams { optical_depth: d, ..m }).unwrap().chi;
        }
        prop_assert!((total.chi - sum).norm() <= 1e-12 * total.chi.norm().max(1e-300));
    }

    #[test]
    fn medium_is_passive(
        od in 0.0..30.0f64, g12 in 0.0..1.0f64, g13 in 0.01..1.0f64, g24 in 0.01..1.0f64,
        wc in 0.0..6.0f64, ws in 0.0..4.0f64,
        dp in -8.0..8.0f64, dc in -3.0..3.0f64, ds in -3.0..3.0f64,
    ) {
        let m = medium(od, g12, g13, g24);
        let ch = rb87_channels([wc; 3], [ws; 3]);
        if let Ok(v) = susceptibility(point(dp, dc, ds), &ch, &m) {
            prop_assert!(v.chi.im >= -1e-12 * v.chi.norm());
        }
    }

    #[test]
    fn reflecting_detunings_conjugates(
        od in 0.1..20.0f64, g12 in 0.01..1.0f64, wc in 0.0..5.0f64, ws in 0.0..3.0f64,
        dp in -5.0..5.0f64, dc in -2.0..2.0f64, ds in -2.0..2.0f64,
    ) {
        let m = medium(od, g12, 0.5, 0.53);
        let ch = rb87_channels([wc; 3], [ws; 3]);
        let a = susceptibility(point(dp, dc, ds), &ch, &m).unwrap().chi;
        let b = susceptibility(point(-dp, -dc, -ds), &ch, &m).unwrap().chi;
        prop_assert!((a + b.conj()).norm() <= 1e-12 * a.norm().max(1e-300));
    }

    #[test]
    fn resonant_loss_matches_closed_form(
        od in 0.1..20.0f64, g12 in 0.01..1.0f64, g13 in 0.05..1.0f64, g24 in 0.05..1.0f64,
        wc in 0.0..5.0f64, ws in 0.0..3.0f64,
    ) {
        let m = medium(od, g12, g13, g24);
        let ch = rb87_channels([wc, wc, 0.8 * wc], [0.6 * ws, 0.8 * ws, ws]);
        let v = susceptibility(DetuningPoint::default(), &ch, &m).unwrap();
        let depths = channel_depths(&ch, od);
        let expected: f64 = ch
            .iter()
            .zip(&depths)
            .map(|(c, &d)| resonant_loss(d, g12, g13, g24, c.rabi_c, c.rabi_s))
            .sum();
        prop_assert!(v.chi.re.abs() <= 1e-10 * expected.max(1e-300));
        prop_assert!((v.chi.im - expected).abs() <= 1e-10 * expected);
    }

    #[test]
    fn two_level_half_width_is_gamma13(od in 0.1..20.0f64, g13 in 0.05..2.0f64) {
        let m = medium(od, 0.1, g13, 0.5);
        let ch = [ChannelParams::prototype(0.0, 0.0)];
        let loss = |d: f64| susceptibility(point(d, d, d), &ch, &m).unwrap().chi.im;
        let (mut lo, mut hi) = (0.0, 50.0 * g13);
        while hi - lo > 1e-13 * g13 {
            let mid = 0.5 * (lo + hi);
            if loss(mid) > 0.5 * od { lo = mid } else { hi = mid }
        }
        prop_assert!((lo - g13).abs() <= 1e-9 * g13);
    }
}

fn resonant_eit(od: f64, g12: f64, wc: f64) -> f64 {
    let m = MediumParams::rb87(od, g12, 0.8e-3);
    transmission_at(0.0, DetuningOffsets::default(), &rb87_channels([wc, wc, 0.8 * wc], [0.0; 3]), &m).unwrap()
}

#[test]
fn eit_rises_with_coupling_and_falls_with_dephasing() {
    let by_coupling: Vec<f64> = (1..=20).map(|k| resonant_eit(7.6, 0.2, 0.25 * k as f64)).collect();
    assert!(by_coupling.windows(2).all(|w| w[1] > w[0]));
    let by_dephasing: Vec<f64> = (0..=20).map(|k| resonant_eit(7.6, 0.025 * k as f64, 1.9)).collect();
    assert!(by_dephasing.windows(2).all(|w| w[1] < w[0]));
    assert!((by_dephasing[0] - 1.0).abs() < 1e-15);
}

#[test]
fn switch_suppresses_transparency() {
    let m = MediumParams::rb87(7.5, 0.15, 0.8e-3);
    let t: Vec<f64> = (0..=16)
        .map(|k| {
            let ws = 0.125 * k as f64;
            transmission_at(0.0, DetuningOffsets::default(), &rb87_channels([2.0, 2.0, 1.7], [ws; 3]), &m).unwrap()
        })
        .collect();
    assert!(t.windows(2).all(|w| w[1] < w[0]));
}
