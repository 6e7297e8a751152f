//! Built-in scenario presets and the flat key-value configuration format.
//!
//! Config files are line-oriented `key = value` pairs with dotted keys
//! (`model.delta0_over_g0 = 0.44`); `#` starts a comment. Unknown keys are
//! rejected with their line number.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hilbert::AtomLevel;
use crate::model::{default_window, ChirpParams, ModelConfig, PulseParams};

use super::{
    Column, InitialState, Observable, RunKind, Scenario, SweepAxis, REF_GAMMA_CAVITY,
    REF_GAMMA_SPONTANEOUS,
};

/// Linear grid start + k·step, with the endpoint included when step divides
/// the span (to within 1e−9 of a step).
fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop > start) {
        return Err(Error::Validation {
            field: "sweep".into(),
            message: format!("bad linear grid: start {start}, stop {stop}, step {step}"),
        });
    }
    let span = stop - start;
    let ratio = span / step;
    let n = if (ratio - ratio.round()).abs() < 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.floor() as usize
    };
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// Logarithmic grid of `points` values from start to stop inclusive.
fn log_grid(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if !(start > 0.0) || !(stop > start) || points < 2 {
        return Err(Error::Validation {
            field: "sweep".into(),
            message: format!("bad log grid: start {start}, stop {stop}, points {points}"),
        });
    }
    let (l0, l1) = (start.log10(), stop.log10());
    Ok((0..points)
        .map(|k| 10f64.powf(l0 + (l1 - l0) * k as f64 / (points - 1) as f64))
        .collect())
}

fn fig_base(g0: f64, delta: f64, delta0: f64) -> ModelConfig {
    ModelConfig::new(
        PulseParams::symmetric(g0, delta),
        ChirpParams {
            delta0,
            tau0: 2.0,
            sigma_s: 0.2,
        },
    )
}

/// Built-in presets. `fig2`–`fig5` are the library's reference scenarios; see
/// the README for what each sweeps and emits.
pub fn preset(name: &str) -> Result<Scenario> {
    match name {
        // chirp-amplitude sweep of the entangling passage
        "fig2" => Ok(Scenario {
            name: "fig2".into(),
            base: fig_base(30.0, 1.25, 0.0),
            axis: SweepAxis::ChirpOverG0,
            grid: linear_grid(0.0, 1.2, 0.005)?,
            columns: vec![
                Column::closed("fidelity", Observable::Fidelity),
                Column::closed("c3", Observable::C3),
                Column::closed("mean_photon", Observable::MeanPhoton),
            ],
            initial: InitialState::PlusPlus,
        }),
        // robustness of the fidelity around the optimal chirp, with and
        // without the reference decay rates
        "fig3" => {
            let mut base = fig_base(30.0, 1.25, 0.0);
            base.gamma_c = REF_GAMMA_CAVITY;
            base.gamma_s = REF_GAMMA_SPONTANEOUS;
            Ok(Scenario {
                name: "fig3".into(),
                base,
                axis: SweepAxis::ChirpOverG0,
                grid: linear_grid(0.44 * 0.85, 0.44 * 1.15, 0.44 * 0.005)?,
                columns: vec![
                    Column::closed("fidelity", Observable::Fidelity),
                    Column {
                        name: "fidelity_decay".into(),
                        observable: Observable::Fidelity,
                        kind: RunKind::Decay,
                    },
                    Column {
                        name: "mean_photon_decay".into(),
                        observable: Observable::MeanPhoton,
                        kind: RunKind::Decay,
                    },
                    Column {
                        name: "factorization_residual_decay".into(),
                        observable: Observable::FactorizationResidual,
                        kind: RunKind::Decay,
                    },
                ],
                initial: InitialState::PlusPlus,
            })
        }
        // entanglement vs trajectory separation inside the standing wave
        "fig4" => Ok(Scenario {
            name: "fig4".into(),
            base: fig_base(30.0, 1.25, 0.44 * 30.0),
            axis: SweepAxis::SeparationOverLambda,
            grid: linear_grid(0.0, 1.0, 0.005)?,
            columns: vec![
                Column::closed("c3", Observable::C3),
                Column::closed("fidelity", Observable::Fidelity),
            ],
            initial: InitialState::PlusPlus,
        }),
        // decay-rate sweeps at the resonant phase-closure point. The coupling
        // 18.9286/σ closes the adiabatic phase at delay 1.0 (20π over the
        // passage); see the README note on this preset.
        "fig5" => {
            let base = ModelConfig::new(
                PulseParams::symmetric(18.9286, 1.0),
                ChirpParams::off(),
            );
            let mut grid = vec![0.0];
            grid.extend(log_grid(1e-3, 0.1, 25)?);
            Ok(Scenario {
                name: "fig5".into(),
                base,
                axis: SweepAxis::DecayRate,
                grid,
                columns: vec![
                    Column {
                        name: "wootters_cavity_decay".into(),
                        observable: Observable::Wootters,
                        kind: RunKind::CavityDecayOnly,
                    },
                    Column {
                        name: "wootters_spontaneous".into(),
                        observable: Observable::Wootters,
                        kind: RunKind::SpontaneousOnly,
                    },
                    Column {
                        name: "fidelity_cavity_decay".into(),
                        observable: Observable::Fidelity,
                        kind: RunKind::CavityDecayOnly,
                    },
                    Column {
                        name: "fidelity_spontaneous".into(),
                        observable: Observable::Fidelity,
                        kind: RunKind::SpontaneousOnly,
                    },
                ],
                initial: InitialState::PlusPlus,
            })
        }
        other => Err(Error::InvalidArgument(format!(
            "unknown preset `{other}` (expected fig2, fig3, fig4, or fig5)"
        ))),
    }
}

fn observable_column(token: &str) -> Option<Column> {
    use Observable::*;
    use RunKind::*;
    let (observable, kind) = match token {
        "fidelity" => (Fidelity, Closed),
        "c3" => (C3, Closed),
        "wootters" => (Wootters, Closed),
        "mean_photon" => (MeanPhoton, Closed),
        "factorization_residual" => (FactorizationResidual, Closed),
        "fidelity_decay" => (Fidelity, Decay),
        "wootters_decay" => (Wootters, Decay),
        "mean_photon_decay" => (MeanPhoton, Decay),
        "factorization_residual_decay" => (FactorizationResidual, Decay),
        "wootters_cavity_decay" => (Wootters, CavityDecayOnly),
        "fidelity_cavity_decay" => (Fidelity, CavityDecayOnly),
        "mean_photon_cavity_decay" => (MeanPhoton, CavityDecayOnly),
        "wootters_spontaneous" => (Wootters, SpontaneousOnly),
        "fidelity_spontaneous" => (Fidelity, SpontaneousOnly),
        _ => return None,
    };
    Some(Column {
        name: token.into(),
        observable,
        kind,
    })
}

fn parse_initial(token: &str) -> Option<InitialState> {
    if token == "plus_plus" {
        return Some(InitialState::PlusPlus);
    }
    let spec = token.strip_prefix("basis:")?;
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return None;
    }
    let n = parts[0].parse().ok()?;
    let level = |s: &str| match s {
        "g" => Some(AtomLevel::Ground),
        "e" => Some(AtomLevel::Excited),
        _ => None,
    };
    Some(InitialState::Basis {
        n,
        atom1: level(parts[1])?,
        atom2: level(parts[2])?,
    })
}

struct RawEntry {
    line: usize,
    value: String,
}

/// Parse configuration text. `origin` names the source in errors.
pub fn parse_config(text: &str, origin: &str) -> Result<Scenario> {
    const KNOWN: &[&str] = &[
        "preset",
        "name",
        "model.g0",
        "model.g1",
        "model.g2",
        "model.delta",
        "model.tau0",
        "model.sigma_s",
        "model.delta0",
        "model.delta0_over_g0",
        "model.cutoff",
        "model.gamma_c",
        "model.gamma_s",
        "model.window_start",
        "model.window_end",
        "model.tol_pure",
        "model.tol_mixed",
        "sweep.axis",
        "sweep.start",
        "sweep.stop",
        "sweep.step",
        "sweep.points",
        "sweep.scale",
        "sweep.include_zero",
        "observables",
        "init.state",
    ];

    let mut entries: BTreeMap<String, RawEntry> = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                path: origin.into(),
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN.contains(&key.as_str()) {
            return Err(Error::Config {
                path: origin.into(),
                line: line_no,
                message: format!("unknown key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(Error::Config {
                path: origin.into(),
                line: line_no,
                message: format!("key `{key}` has no value"),
            });
        }
        if entries
            .insert(key.clone(), RawEntry { line: line_no, value })
            .is_some()
        {
            return Err(Error::Config {
                path: origin.into(),
                line: line_no,
                message: format!("key `{key}` given twice"),
            });
        }
    }

    let err_at = |entry: &RawEntry, key: &str, what: &str| Error::Config {
        path: origin.into(),
        line: entry.line,
        message: format!("{what} for `{key}`: `{}`", entry.value),
    };
    let take_f64 = |entries: &BTreeMap<String, RawEntry>, key: &str| -> Result<Option<f64>> {
        match entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .map(Some)
                .map_err(|_| err_at(e, key, "not a number")),
        }
    };

    let mut scenario = match entries.get("preset") {
        Some(e) => preset(&e.value).map_err(|_| err_at(e, "preset", "unknown preset"))?,
        None => Scenario {
            name: "custom".into(),
            base: ModelConfig::new(
                PulseParams::symmetric(1.0, 1.0),
                ChirpParams::off(),
            ),
            axis: SweepAxis::ChirpOverG0,
            grid: Vec::new(),
            columns: Vec::new(),
            initial: InitialState::PlusPlus,
        },
    };
    let had_preset = entries.contains_key("preset");

    if let Some(e) = entries.get("name") {
        scenario.name = e.value.clone();
    }

    let mut window_overridden = false;
    if let Some(g0) = take_f64(&entries, "model.g0")? {
        scenario.base.pulses.g1 = g0;
        scenario.base.pulses.g2 = g0;
    }
    if let Some(g1) = take_f64(&entries, "model.g1")? {
        scenario.base.pulses.g1 = g1;
    }
    if let Some(g2) = take_f64(&entries, "model.g2")? {
        scenario.base.pulses.g2 = g2;
    }
    if let Some(delta) = take_f64(&entries, "model.delta")? {
        scenario.base.pulses.delta = delta;
        if !window_overridden {
            scenario.base.window = default_window(delta);
        }
    }
    if let Some(tau0) = take_f64(&entries, "model.tau0")? {
        scenario.base.chirps.tau0 = tau0;
    }
    if let Some(s) = take_f64(&entries, "model.sigma_s")? {
        scenario.base.chirps.sigma_s = s;
    }
    if let Some(d0) = take_f64(&entries, "model.delta0")? {
        scenario.base.chirps.delta0 = d0;
    }
    if let Some(r) = take_f64(&entries, "model.delta0_over_g0")? {
        scenario.base.chirps.delta0 = r * scenario.base.pulses.g1;
    }
    if let Some(e) = entries.get("model.cutoff") {
        scenario.base.cutoff = e
            .value
            .parse::<usize>()
            .map_err(|_| err_at(e, "model.cutoff", "not a nonnegative integer"))?;
    }
    if let Some(g) = take_f64(&entries, "model.gamma_c")? {
        scenario.base.gamma_c = g;
    }
    if let Some(g) = take_f64(&entries, "model.gamma_s")? {
        scenario.base.gamma_s = g;
    }
    if let Some(w) = take_f64(&entries, "model.window_start")? {
        scenario.base.window.0 = w;
        window_overridden = true;
    }
    if let Some(w) = take_f64(&entries, "model.window_end")? {
        scenario.base.window.1 = w;
        window_overridden = true;
    }
    let _ = window_overridden;
    if let Some(t) = take_f64(&entries, "model.tol_pure")? {
        scenario.base.tol.pure = t;
    }
    if let Some(t) = take_f64(&entries, "model.tol_mixed")? {
        scenario.base.tol.mixed = t;
    }

    if let Some(e) = entries.get("sweep.axis") {
        scenario.axis = SweepAxis::parse(&e.value)
            .ok_or_else(|| err_at(e, "sweep.axis", "unknown axis"))?;
    }
    let sweep_given = ["sweep.start", "sweep.stop", "sweep.step", "sweep.points"]
        .iter()
        .any(|k| entries.contains_key(*k));
    if sweep_given {
        let scale = entries
            .get("sweep.scale")
            .map(|e| e.value.as_str())
            .unwrap_or("linear");
        let start = take_f64(&entries, "sweep.start")?;
        let stop = take_f64(&entries, "sweep.stop")?;
        let missing = |k: &str| Error::Config {
            path: origin.into(),
            line: 0,
            message: format!("sweep override requires `{k}`"),
        };
        let start = start.ok_or_else(|| missing("sweep.start"))?;
        let stop = stop.ok_or_else(|| missing("sweep.stop"))?;
        let mut grid = match scale {
            "linear" => {
                let step = take_f64(&entries, "sweep.step")?
                    .ok_or_else(|| missing("sweep.step"))?;
                linear_grid(start, stop, step)?
            }
            "log" => {
                let points = entries
                    .get("sweep.points")
                    .ok_or_else(|| missing("sweep.points"))?;
                let points_n = points
                    .value
                    .parse::<usize>()
                    .map_err(|_| err_at(points, "sweep.points", "not an integer"))?;
                log_grid(start, stop, points_n)?
            }
            other => {
                let e = entries.get("sweep.scale").expect("checked above");
                return Err(Error::Config {
                    path: origin.into(),
                    line: e.line,
                    message: format!("unknown sweep scale `{other}` (linear or log)"),
                });
            }
        };
        if let Some(e) = entries.get("sweep.include_zero") {
            match e.value.as_str() {
                "true" => grid.insert(0, 0.0),
                "false" => {}
                _ => {
                    return Err(err_at(e, "sweep.include_zero", "expected true or false"));
                }
            }
        }
        scenario.grid = grid;
    }

    if let Some(e) = entries.get("observables") {
        let mut columns = Vec::new();
        for token in e.value.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let col = observable_column(token).ok_or_else(|| Error::Config {
                path: origin.into(),
                line: e.line,
                message: format!("unknown observable `{token}`"),
            })?;
            columns.push(col);
        }
        scenario.columns = columns;
    }

    if let Some(e) = entries.get("init.state") {
        scenario.initial = parse_initial(&e.value)
            .ok_or_else(|| err_at(e, "init.state", "expected plus_plus or basis:n,s1,s2"))?;
    }

    if !had_preset && scenario.grid.is_empty() {
        return Err(Error::Config {
            path: origin.into(),
            line: 0,
            message: "a custom scenario needs sweep.start/stop/step (no preset given)".into(),
        });
    }
    scenario.validate()?;
    Ok(scenario)
}

/// Load and validate a scenario from a config file.
pub fn load_config(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig2_preset_matches_reference_parameters() {
        let s = preset("fig2").unwrap();
        assert_eq!(s.base.pulses.g1, 30.0);
        assert_eq!(s.base.pulses.delta, 1.25);
        assert_eq!(s.base.chirps.tau0, 2.0);
        assert_eq!(s.base.chirps.sigma_s, 0.2);
        assert_eq!(s.grid.len(), 241);
        assert_eq!(s.grid[0], 0.0);
        assert!((s.grid[240] - 1.2).abs() < 1e-12);
        s.validate().unwrap();
    }

    #[test]
    fn fig5_preset_sweeps_both_channels() {
        let s = preset("fig5").unwrap();
        assert!((s.base.pulses.g1 - 18.9286).abs() < 1e-12);
        assert_eq!(s.base.chirps.delta0, 0.0);
        assert_eq!(s.grid[0], 0.0);
        assert!((s.grid.last().unwrap() - 0.1).abs() < 1e-12);
        let kinds: Vec<RunKind> = s.columns.iter().map(|c| c.kind).collect();
        assert!(kinds.contains(&RunKind::CavityDecayOnly));
        assert!(kinds.contains(&RunKind::SpontaneousOnly));
        s.validate().unwrap();
    }

    #[test]
    fn unknown_preset_is_rejected() {
        assert!(preset("fig9").is_err());
    }

    #[test]
    fn parses_overrides_on_a_preset() {
        let text = "
            preset = fig2
            model.cutoff = 4      # convergence check
            sweep.axis = delta0_over_g0
            sweep.start = 0.4
            sweep.stop = 0.5
            sweep.step = 0.01
            observables = fidelity
        ";
        let s = parse_config(text, "inline").unwrap();
        assert_eq!(s.base.cutoff, 4);
        assert_eq!(s.grid.len(), 11);
        assert_eq!(s.columns.len(), 1);
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = "preset = fig2\nmodel.bogus = 1\n";
        match parse_config(text, "inline") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_is_rejected_with_line() {
        let text = "preset = fig2\nthis is not a pair\n";
        match parse_config(text, "inline") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn bad_number_is_rejected() {
        let text = "preset = fig2\nmodel.g0 = thirty\n";
        match parse_config(text, "inline") {
            Err(Error::Config { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("model.g0"));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn custom_scenario_without_sweep_is_rejected() {
        let text = "model.g0 = 10\nmodel.delta = 1.0\nobservables = fidelity\n";
        assert!(parse_config(text, "inline").is_err());
    }

    #[test]
    fn custom_full_scenario_parses() {
        let text = "
            name = tiny
            model.g0 = 10
            model.delta = 1.0
            sweep.axis = delta0_over_g0
            sweep.start = 0.0
            sweep.stop = 0.2
            sweep.step = 0.1
            observables = fidelity, mean_photon
            init.state = basis:0,e,g
        ";
        let s = parse_config(text, "inline").unwrap();
        assert_eq!(s.name, "tiny");
        assert_eq!(s.grid, vec![0.0, 0.1, 0.2]);
        assert_eq!(
            s.initial,
            InitialState::Basis {
                n: 0,
                atom1: AtomLevel::Excited,
                atom2: AtomLevel::Ground
            }
        );
    }

    #[test]
    fn linear_grid_handles_inexact_division() {
        let g = linear_grid(0.0, 1.0, 0.3).unwrap();
        assert_eq!(g.len(), 4); // 0, 0.3, 0.6, 0.9
        assert!(g.last().unwrap() <= &1.0);
    }
}
