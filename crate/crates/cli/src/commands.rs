use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use tomonoise::direct::{simulate_heterodyne, simulate_photocount};
use tomonoise::estimators::{estimate_complex, estimate_mean, kernel_variance_with_error};
use tomonoise::noise::{analytic_comparison, empirical_comparison, sweep, write_sweep_csv};
use tomonoise::{sample_homodyne, Dataset, Observable, SweepMode};

use crate::config::{Command, Detector, Mode, RunConfig};
use crate::error::CliError;

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::io(path, e.into()))?;
    writeln!(w).map_err(|e| CliError::io(path, e))?;
    finish(w, path)
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// `<out>.config.json`
pub fn config_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let reader = BufReader::new(file);
    if is_json(path) {
        serde_json::from_reader(reader).map_err(|e| CliError::Core(e.into()))
    } else {
        Ok(Dataset::read_csv(reader)?)
    }
}

fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let state = cfg.state.as_ref().expect("resolved");
    let (eta, n, seed) = (
        cfg.eta.expect("resolved"),
        cfg.n.expect("resolved"),
        cfg.seed.expect("resolved"),
    );
    let out = &cfg.out;
    match cfg.detector.expect("resolved") {
        Detector::Homodyne => {
            let data = sample_homodyne(state, eta, n, seed)?;
            if is_json(out) {
                return write_json(out, &data);
            }
            let mut w = create(out)?;
            data.write_csv(&mut w)?;
            finish(w, out)
        }
        Detector::Photocount => {
            let rec = simulate_photocount(state, eta, n, seed)?;
            let mut w = create(out)?;
            rec.write_csv(&mut w)?;
            finish(w, out)
        }
        Detector::Heterodyne => {
            let rec = simulate_heterodyne(state, eta, n, seed)?;
            let mut w = create(out)?;
            rec.write_csv(&mut w)?;
            finish(w, out)
        }
    }
}

fn estimate(cfg: &RunConfig) -> Result<(), CliError> {
    let data = read_dataset(cfg.data.as_deref().expect("resolved"))?;
    let obs = cfg.observable.as_ref().expect("resolved");
    let estimate = match obs {
        Observable::ComplexAmplitude => serde_json::to_value(estimate_complex(&data)?),
        _ => serde_json::to_value(estimate_mean(&data, obs)?),
    }
    .map_err(|e| CliError::Core(e.into()))?;
    let result = json!({
        "observable": obs,
        "state": data.state_tag,
        "eta": data.eta,
        "seed": data.seed,
        "n": data.n(),
        "estimate": estimate,
        "kernel_variance": kernel_variance_with_error(&data, obs)?,
    });
    write_json(&cfg.out, &result)
}

fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let state = cfg.state.as_ref().expect("resolved");
    let obs = cfg.observable.as_ref().expect("resolved");
    let eta = cfg.eta.expect("resolved");
    let result = match cfg.mode.expect("resolved") {
        Mode::Analytic => analytic_comparison(obs, state, eta)?,
        Mode::Empirical => empirical_comparison(
            obs,
            state,
            eta,
            cfg.n.expect("resolved"),
            cfg.seed.expect("resolved"),
        )?,
    };
    write_json(&cfg.out, &result)
}

fn run_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let mode = match cfg.mode.expect("resolved") {
        Mode::Analytic => SweepMode::Analytic,
        Mode::Empirical => SweepMode::Empirical {
            n: cfg.n.expect("resolved"),
            seed: cfg.seed.expect("resolved"),
        },
    };
    let rows = sweep(
        cfg.observables.as_deref().expect("resolved"),
        cfg.nbar_grid.as_deref().expect("resolved"),
        cfg.eta_list.as_deref().expect("resolved"),
        mode,
    )?;
    let mut w = create(&cfg.out)?;
    write_sweep_csv(&mut w, &rows)?;
    finish(w, &cfg.out)
}

/// Runs a resolved command, then writes the resolved config next to its output.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.command {
        Command::Simulate => simulate(cfg)?,
        Command::Estimate => estimate(cfg)?,
        Command::Compare => compare(cfg)?,
        Command::Sweep => run_sweep(cfg)?,
    }
    write_json(&config_path(&cfg.out), cfg)
}
