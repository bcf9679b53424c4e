// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::path::Path;

use eitlab_core::analysis::{critical_switching_power, first_crossing, max_stored_pulses, switching_curve};
use eitlab_core::atomic::{mean_rabi_c, ChannelParams};
use eitlab_core::fitting::{
    add_noise, fit_report, linspace, Dataset, DatasetKind, FitParameter, FitProblem, ParamName,
};
use eitlab_core::io::{provenance, RunConfig, SpectrumFile, Table};
use eitlab_core::propagation::{group_delay, propagate_linear, propagate_maxwell_bloch, transmission_spectrum};
use eitlab_core::units::{gamma_to_mhz, Unit, SPEED_OF_LIGHT};

use crate::{DelayArgs, Failure, FitArgs, SpectrumArgs, SwitchArgs};

fn header(config: &RunConfig) -> String {
    provenance(&config.hash(), &config.preset)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn masked(channels: &[ChannelParams], kind: DatasetKind) -> Vec<ChannelParams> {
    channels
        .iter()
        .map(|c| ChannelParams {
            rabi_c: if kind.uses_coupling() { c.rabi_c } else { 0.0 },
            rabi_s: if kind.uses_switch() { c.rabi_s } else { 0.0 },
            ..*c
        })
        .collect()
}

pub fn spectrum(mut config: RunConfig, args: &SpectrumArgs) -> Result<(), Failure> {
    let kind = if args.absorption {
        DatasetKind::Absorption
    } else if args.switching {
        DatasetKind::Switching
    } else {
        DatasetKind::Eit
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(noise) = args.noise {
        if !(noise >= 0.0) || !noise.is_finite() {
            return Err(Failure::Input(format!("--noise must be a finite value >= 0, got {noise}")));
        }
    }
    let spectrum = transmission_spectrum(&config.grid, &masked(&config.channels, kind), &config.medium)?;
    let mut transmission = spectrum.transmissions();
    if let Some(noise) = args.noise {
        let clean = Dataset::new(kind, config.grid.points(), transmission, None)?;
        transmission = add_noise(&clean, noise, config.seed)?.transmission;
    }
    let gamma3 = config.medium.gamma3;
    let mut comments = vec![header(&config), format!("kind={kind}")];
    if let Some(noise) = args.noise {
        comments.push(format!("noise={noise} seed={}", config.seed));
    }
    let file = SpectrumFile {
        comments,
        unit: Unit::MHz,
        detuning: spectrum.points.iter().map(|p| gamma_to_mhz(p.delta_p, gamma3)).collect(),
        transmission,
        weight: None,
    };
    emit(&file.render(), args.out.as_deref())
}

pub fn delay(config: &RunConfig, args: &DelayArgs) -> Result<(), Failure> {
    let carrier = config.pulse.carrier_detuning;
    let g = group_delay(&config.channels, &config.medium, carrier, config.offsets())?;
    let mut report = String::new();
    let _ = writeln!(report, "# {}", header(config));
    let _ = writeln!(report, "group_delay_ns\t{}", g.delay * 1e9);
    let _ = writeln!(report, "group_velocity_m_per_s\t{}", g.group_velocity);
    let _ = writeln!(report, "group_velocity_over_c\t{}", g.group_velocity / SPEED_OF_LIGHT);

    if args.out.is_some() || args.maxwell_bloch {
        let pulse = config.pulse.envelope()?;
        let linear = propagate_linear(&pulse, &config.channels, &config.medium)?;
        let t0 = pulse.peak_time();
        let _ = writeln!(report, "linear_peak_shift_ns\t{}", (linear.peak_time() - t0) * 1e9);
        let mut columns = vec!["time[ns]", "reference", "linear"];
        let mb = if args.maxwell_bloch {
            let out = propagate_maxwell_bloch(&pulse, None, &config.channels, &config.medium, config.zsteps)?;
            let _ = writeln!(report, "maxwell_bloch_peak_shift_ns\t{}", (out.probe.peak_time() - t0) * 1e9);
            columns.push("maxwell_bloch");
            Some(out.probe)
        } else {
            None
        };
        if let Some(path) = &args.out {
            let scale = pulse.peak_intensity().max(f64::MIN_POSITIVE);
            let mut table = Table::new(&columns).with_comment(header(config)).with_comment(
                "intensities normalized to the reference peak",
            );
            for i in 0..pulse.len() {
                let mut row = vec![
                    pulse.time(i) * 1e9,
                    pulse.samples[i].norm_sqr() / scale,
                    linear.samples[i].norm_sqr() / scale,
                ];
                if let Some(mb) = &mb {
                    row.push(mb.samples[i].norm_sqr() / scale);
                }
                table.push(row);
            }
            emit(&table.render(), Some(path))?;
        }
    }
    emit(&report, None)
}

pub fn switch(config: &RunConfig, args: &SwitchArgs) -> Result<(), Failure> {
    if args.points < 2 || !(args.photons_max > 0.0) || !args.photons_max.is_finite() {
        return Err(Failure::Input("need --points >= 2 and a finite --photons-max > 0".into()));
    }
    let photons = linspace(0.0, args.photons_max, args.points);
    let curve = switching_curve(&config.channels, &config.medium, &photons, config.switch_duration)?;
    let estimate = critical_switching_power(&config.medium, mean_rabi_c(&config.channels), config.switch_duration)?;

    let mut table = Table::new(&["photons", "peak", "beam_averaged"]).with_comment(header(config));
    table.comments.push(format!(
        "closed_form_photons={} closed_form_mW_per_cm2={}",
        estimate.photons_per_mode_area,
        estimate.power_per_area * 0.1
    ));
    let level = (-1.0f64).exp();
    let peak: Vec<f64> = curve.iter().map(|p| p.peak).collect();
    let avg: Vec<f64> = curve.iter().map(|p| p.beam_averaged).collect();
    let show = |x: Option<f64>| x.map_or("none".to_string(), |v| v.to_string());
    table.comments.push(format!(
        "crossing_1/e peak={} beam_averaged={}",
        show(first_crossing(&photons, &peak, level)),
        show(first_crossing(&photons, &avg, level))
    ));
    for w in &estimate.warnings {
        table.comments.push(format!("warning: {w}"));
    }
    for p in &curve {
        table.push(vec![p.photons, p.peak, p.beam_averaged]);
    }
    emit(&table.render(), args.out.as_deref())
}

pub fn capacity(config: &RunConfig) -> Result<(), Failure> {
    let omega = mean_rabi_c(&config.channels);
    let cap = max_stored_pulses(&config.medium, omega)?;
    let mut report = String::new();
    let _ = writeln!(report, "# {}", header(config));
    let _ = writeln!(report, "mean_rabi_c\t{omega}");
    let _ = writeln!(report, "n_max\t{}", cap.n_max);
    let _ = writeln!(report, "bandwidth_limited\t{}", cap.bandwidth_limited);
    emit(&report, None)
}

fn parse_pair<'a>(text: &'a str, what: &str) -> Result<(&'a str, &'a str), Failure> {
    text.split_once('=')
        .filter(|(a, b)| !a.is_empty() && !b.is_empty())
        .ok_or_else(|| Failure::Input(format!("{what} must look like NAME=VALUE, got `{text}`")))
}

fn default_free(kinds: &[DatasetKind], independent: bool, channels: &[ChannelParams]) -> Vec<ParamName> {
    let mut free = vec![ParamName::OpticalDepth];
    let coupling = kinds.iter().any(|k| k.uses_coupling());
    let switching = kinds.iter().any(|k| k.uses_switch());
    if coupling {
        free.push(ParamName::Gamma12);
        if independent {
            free.extend(channels.iter().map(|c| ParamName::RabiCn(c.index)));
        } else {
            free.push(ParamName::RabiC);
        }
    }
    if switching {
        if independent {
            free.extend(channels.iter().map(|c| ParamName::RabiSn(c.index)));
        } else {
            free.push(ParamName::RabiS);
        }
    }
    free
}

/// Maps scale-mode names onto per-channel names when fitting independently.
fn expand(name: ParamName, independent: bool, channels: &[ChannelParams]) -> Vec<ParamName> {
    match (name, independent) {
        (ParamName::RabiC, true) => channels.iter().map(|c| ParamName::RabiCn(c.index)).collect(),
        (ParamName::RabiS, true) => channels.iter().map(|c| ParamName::RabiSn(c.index)).collect(),
        _ => vec![name],
    }
}

pub fn fit(config: &RunConfig, args: &FitArgs) -> Result<(), Failure> {
    let mut datasets = Vec::new();
    for spec in &args.data {
        let (kind, path) = parse_pair(spec, "--data")?;
        let kind: DatasetKind = kind.parse().map_err(|e: eitlab_core::Error| Failure::Input(e.to_string()))?;
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{path}: {e}")))?;
        let file = SpectrumFile::parse(&text, path)?;
        let data = file
            .to_dataset(kind, config.medium.gamma3)
            .map_err(|e| Failure::Input(format!("{path}: {e}")))?;
        datasets.push(data);
    }
    let kinds: Vec<DatasetKind> = datasets.iter().map(|d| d.kind).collect();
    let channels = &config.channels;
    let independent = args.independent_rabi;

    let input = |e: eitlab_core::Error| Failure::Input(e.to_string());
    let mut free: Vec<ParamName> = if args.free.is_empty() {
        default_free(&kinds, independent, channels)
    } else {
        let mut names = Vec::new();
        for raw in &args.free {
            names.extend(expand(raw.trim().parse().map_err(input)?, independent, channels));
        }
        names
    };
    let mut fixed = Vec::new();
    for raw in &args.fix {
        let (name, value) = parse_pair(raw, "--fix")?;
        let name: ParamName = name.parse().map_err(input)?;
        let value: f64 = value
            .parse()
            .map_err(|_| Failure::Input(format!("--fix {raw}: `{value}` is not a number")))?;
        if !args.free.is_empty() && free.contains(&name) {
            return Err(Failure::Input(format!("{name} is both free and fixed")));
        }
        free.retain(|&n| n != name);
        fixed.push(FitParameter::fixed(name, value));
    }

    let mut problem = FitProblem::with_free(datasets, channels.clone(), config.medium, &free);
    problem.parameters.extend(fixed);
    let result = eitlab_core::fitting::fit(&problem).map_err(|e| match e {
        eitlab_core::Error::InvalidSharing(_) | eitlab_core::Error::InvalidParameter(_) => Failure::Input(e.to_string()),
        other => Failure::from(other),
    })?;
    let report = fit_report(&result, &problem)?;
    let text = format!("# {}\n{}", header(config), report.text);
    emit(&text, args.report.as_deref())?;
    if let Some(path) = &args.json {
        let record = format!(
            "{{\n\"provenance\": {},\n\"result\": {}\n}}\n",
            quote(&header(config)),
            report.json
        );
        emit(&record, Some(path))?;
    }
    Ok(())
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}
