//! Run configuration: command-line flags merged with an optional JSON file.
//! File values win conflicts, with a warning on stderr.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tomonoise::{Observable, StateSpec};

use crate::error::CliError;

pub const DEFAULT_ETA: f64 = 1.0;
pub const DEFAULT_N: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_NBAR_GRID: [f64; 6] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Simulate,
    Estimate,
    Compare,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Empirical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Homodyne,
    Photocount,
    Heterodyne,
}

/// Flag values as given on the command line.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Flags {
    /// JSON config file; its values override conflicting flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// State as inline JSON, e.g. '{"type":"coherent","beta":[2,0]}'
    #[arg(long)]
    pub state: Option<String>,
    /// File holding the state JSON
    #[arg(long)]
    pub state_file: Option<PathBuf>,
    /// Detector efficiency in (0, 1]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Number of samples
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Observable name (intensity, real_field, complex_amplitude, phase) or JSON
    #[arg(long)]
    pub observable: Option<String>,
    /// Output file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Homodyne dataset to estimate from (CSV, or JSON with a .json extension)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Comma-separated mean photon numbers
    #[arg(long, value_delimiter = ',')]
    pub nbar_grid: Option<Vec<f64>>,
    /// Comma-separated efficiencies
    #[arg(long, value_delimiter = ',')]
    pub eta_list: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Comma-separated observable names
    #[arg(long, value_delimiter = ',')]
    pub observables: Option<Vec<String>>,
    #[arg(long, value_enum)]
    pub detector: Option<Detector>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Command>,
    state: Option<Value>,
    state_file: Option<PathBuf>,
    eta: Option<f64>,
    n: Option<usize>,
    seed: Option<u64>,
    observable: Option<Value>,
    out: Option<PathBuf>,
    data: Option<PathBuf>,
    nbar_grid: Option<Vec<f64>>,
    eta_list: Option<Vec<f64>>,
    mode: Option<Mode>,
    observables: Option<Vec<Value>>,
    detector: Option<Detector>,
}

/// Fully resolved configuration, written next to every output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observable: Option<Observable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observables: Option<Vec<Observable>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detector: Option<Detector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    pub out: PathBuf,
}

fn parse_observable(v: &Value) -> Result<Observable, CliError> {
    match v {
        Value::String(s) => Ok(s.parse()?),
        other => serde_json::from_value(other.clone())
            .map_err(|e| CliError::Config(format!("observable: {e}"))),
    }
}

fn parse_state_json(text: &str, origin: &str) -> Result<StateSpec, CliError> {
    let state: StateSpec =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    state.validate()?;
    Ok(state)
}

fn read_state_file(path: &Path) -> Result<StateSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_state_json(&text, &path.display().to_string())
}

/// Picks the file value when both are present, warning if they differ.
fn pick<T: PartialEq + std::fmt::Debug>(
    key: &str,
    flag: Option<T>,
    file: Option<T>,
    warn: &mut Vec<String>,
) -> Option<T> {
    match (flag, file) {
        (Some(f), Some(c)) => {
            if f != c {
                warn.push(format!(
                    "--{} {f:?} overridden by config value {c:?}",
                    key.replace('_', "-")
                ));
            }
            Some(c)
        }
        (f, c) => c.or(f),
    }
}

/// Every setting after merging, before per-command defaults.
#[derive(Debug, Default)]
struct Merged {
    state: Option<StateSpec>,
    observable: Option<Observable>,
    observables: Option<Vec<Observable>>,
    eta: Option<f64>,
    n: Option<usize>,
    seed: Option<u64>,
    mode: Option<Mode>,
    detector: Option<Detector>,
    nbar_grid: Option<Vec<f64>>,
    eta_list: Option<Vec<f64>>,
    data: Option<PathBuf>,
    out: Option<PathBuf>,
}

fn state_from(
    inline: Option<StateSpec>,
    file: Option<StateSpec>,
    origin: &str,
) -> Result<Option<StateSpec>, CliError> {
    match (inline, file) {
        (Some(_), Some(_)) => Err(CliError::Config(format!(
            "{origin} gives both a state and a state file"
        ))),
        (a, b) => Ok(a.or(b)),
    }
}

fn merge(flags: Flags, file: FileConfig, warn: &mut Vec<String>) -> Result<Merged, CliError> {
    let flag_state = state_from(
        flags
            .state
            .as_deref()
            .map(|s| parse_state_json(s, "--state"))
            .transpose()?,
        flags
            .state_file
            .as_deref()
            .map(read_state_file)
            .transpose()?,
        "the command line",
    )?;
    let file_state = state_from(
        file.state
            .map(|v| parse_state_json(&v.to_string(), "config state"))
            .transpose()?,
        file.state_file
            .as_deref()
            .map(read_state_file)
            .transpose()?,
        "the config file",
    )?;
    let flag_obs = flags
        .observable
        .map(|s| s.parse::<Observable>())
        .transpose()?;
    let file_obs = file.observable.as_ref().map(parse_observable).transpose()?;
    let flag_list = flags
        .observables
        .map(|v| {
            v.iter()
                .map(|s| s.parse::<Observable>())
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let file_list = file
        .observables
        .map(|v| {
            v.iter()
                .map(parse_observable)
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    Ok(Merged {
        state: pick("state", flag_state, file_state, warn),
        observable: pick("observable", flag_obs, file_obs, warn),
        observables: pick("observables", flag_list, file_list, warn),
        eta: pick("eta", flags.eta, file.eta, warn),
        n: pick("n", flags.n, file.n, warn),
        seed: pick("seed", flags.seed, file.seed, warn),
        mode: pick("mode", flags.mode, file.mode, warn),
        detector: pick("detector", flags.detector, file.detector, warn),
        nbar_grid: pick("nbar_grid", flags.nbar_grid, file.nbar_grid, warn),
        eta_list: pick("eta_list", flags.eta_list, file.eta_list, warn),
        data: pick("data", flags.data, file.data, warn),
        out: pick("out", flags.out, file.out, warn),
    })
}

fn required<T>(value: Option<T>, key: &str, command: Command) -> Result<T, CliError> {
    value.ok_or_else(|| {
        CliError::Config(format!("{command:?} needs --{}", key.replace('_', "-")).to_lowercase())
    })
}

fn check_eta(eta: f64) -> Result<f64, CliError> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(eta)
    } else {
        Err(CliError::Config(format!(
            "eta must lie in (0, 1], got {eta}"
        )))
    }
}

fn check_n(n: usize) -> Result<usize, CliError> {
    if n == 0 {
        Err(CliError::Config("n must be at least 1".into()))
    } else {
        Ok(n)
    }
}

/// Merges flags with the config file and fills the defaults of `command`.
/// Returns the resolved config and any warnings to print.
pub fn resolve(command: Command, flags: Flags) -> Result<(RunConfig, Vec<String>), CliError> {
    let file = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    if let Some(c) = file.command {
        if c != command {
            return Err(CliError::Config(
                format!("config file is for `{c:?}`, not `{command:?}`").to_lowercase(),
            ));
        }
    }
    let mut warnings = Vec::new();
    let m = merge(flags, file, &mut warnings)?;
    let out = required(m.out, "out", command)?;
    let mut cfg = RunConfig {
        command,
        state: None,
        observable: None,
        observables: None,
        eta: None,
        n: None,
        seed: None,
        mode: None,
        detector: None,
        nbar_grid: None,
        eta_list: None,
        data: None,
        out,
    };
    let mut unused = Vec::new();
    macro_rules! unused {
        ($($field:ident),*) => {
            $(if m.$field.is_some() { unused.push(stringify!($field)); })*
        };
    }
    match command {
        Command::Simulate => {
            cfg.state = Some(required(m.state, "state", command)?);
            cfg.eta = Some(check_eta(m.eta.unwrap_or(DEFAULT_ETA))?);
            cfg.n = Some(check_n(m.n.unwrap_or(DEFAULT_N))?);
            cfg.seed = Some(m.seed.unwrap_or(DEFAULT_SEED));
            cfg.detector = Some(m.detector.unwrap_or(Detector::Homodyne));
            unused!(observable, observables, mode, nbar_grid, eta_list, data);
        }
        Command::Estimate => {
            cfg.data = Some(required(m.data, "data", command)?);
            cfg.observable = Some(required(m.observable, "observable", command)?);
            unused!(
                state,
                observables,
                eta,
                n,
                seed,
                mode,
                detector,
                nbar_grid,
                eta_list
            );
        }
        Command::Compare => {
            cfg.state = Some(required(m.state, "state", command)?);
            cfg.observable = Some(required(m.observable, "observable", command)?);
            cfg.eta = Some(check_eta(m.eta.unwrap_or(DEFAULT_ETA))?);
            let mode = m.mode.unwrap_or(Mode::Empirical);
            cfg.mode = Some(mode);
            if mode == Mode::Empirical {
                cfg.n = Some(check_n(m.n.unwrap_or(DEFAULT_N))?);
                cfg.seed = Some(m.seed.unwrap_or(DEFAULT_SEED));
            } else {
                unused!(n, seed);
            }
            unused!(observables, detector, nbar_grid, eta_list, data);
        }
        Command::Sweep => {
            let obs = m
                .observables
                .unwrap_or_else(|| Observable::FIELD_QUANTITIES.to_vec());
            cfg.observables = Some(obs);
            cfg.nbar_grid = Some(m.nbar_grid.unwrap_or_else(|| DEFAULT_NBAR_GRID.to_vec()));
            let etas = m.eta_list.unwrap_or_else(|| vec![DEFAULT_ETA]);
            for &e in &etas {
                check_eta(e)?;
            }
            cfg.eta_list = Some(etas);
            let mode = m.mode.unwrap_or(Mode::Analytic);
            cfg.mode = Some(mode);
            if mode == Mode::Empirical {
                cfg.n = Some(check_n(m.n.unwrap_or(DEFAULT_N))?);
                cfg.seed = Some(m.seed.unwrap_or(DEFAULT_SEED));
            } else {
                unused!(n, seed);
            }
            unused!(state, observable, eta, detector, data);
        }
    }
    for key in unused {
        warnings
            .push(format!("`{}` is not used by {command:?} and was ignored", key).to_lowercase());
    }
    Ok((cfg, warnings))
}
