//! Added noise of the tomographic estimators relative to direct detection:
//! closed forms, Monte-Carlo comparisons and parameter sweeps.
//!
//! Ratios in decibels are `10 log10` of the variance ratio, i.e. `20 log10`
//! of the linear noise ratio.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direct::{
    heterodyne_amplitude_noise, simulate_fixed_phase_homodyne, simulate_heterodyne,
    simulate_photocount, variance_with_error,
};
use crate::error::{check_eta, Error, Result};
use crate::estimators::{kernel_variance_with_error, VarianceEstimate};
use crate::homodyne::sample_homodyne;
use crate::kernels::{phase_kernel, wrap_angle, Observable};
use crate::states::{
    mean_photon, normal_moment, photon_number_variance, quadrature_variance, StateSpec,
};

/// Below this mean photon number the phase formulas are outside their
/// large-amplitude regime.
pub const PHASE_ASYMPTOTIC_NBAR: f64 = 10.0;

/// Large-amplitude variance of the tomographic phase kernel.
pub const PHASE_TOMOGRAPHIC_VARIANCE: f64 = PI * PI / 12.0;

pub const SWEEP_HEADER: [&str; 11] = [
    "observable",
    "eta",
    "nbar",
    "tomo_var",
    "direct_var",
    "added_noise",
    "ratio_linear",
    "ratio_db",
    "source",
    "n",
    "seed",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Source {
    Analytic { asymptotic_not_reached: bool },
    Empirical { n: u64, seed: u64 },
}

impl Source {
    pub fn label(&self) -> &'static str {
        match self {
            Source::Analytic {
                asymptotic_not_reached: false,
            } => "analytic",
            Source::Analytic {
                asymptotic_not_reached: true,
            } => "analytic:asymptotic-not-reached",
            Source::Empirical { .. } => "empirical",
        }
    }
}

/// One-sigma Monte-Carlo errors of an empirical comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBars {
    pub tomographic_variance: f64,
    pub direct_variance: f64,
    pub added_noise: f64,
    pub ratio_linear: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseComparison {
    pub observable: Observable,
    pub state_tag: String,
    pub eta: f64,
    pub nbar: f64,
    pub tomographic_variance: f64,
    pub direct_variance: f64,
    pub added_noise: f64,
    pub ratio_linear: f64,
    pub ratio_db: f64,
    pub source: Source,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<ErrorBars>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SweepMode {
    Analytic,
    Empirical { n: usize, seed: u64 },
}

fn ratio_db(tomo: f64, direct: f64) -> f64 {
    10.0 * (tomo / direct).log10()
}

fn unsupported(obs: &Observable) -> Error {
    Error::Capability(format!("no noise comparison is defined for `{obs}`"))
}

fn coherent_nbar(state: &StateSpec) -> Option<f64> {
    match state {
        StateSpec::Coherent { beta } => Some(beta.norm_sqr()),
        _ => None,
    }
}

fn phase_domain(state: &StateSpec) -> Result<f64> {
    match coherent_nbar(state) {
        Some(nbar) if nbar >= PHASE_ASYMPTOTIC_NBAR => Ok(nbar),
        Some(nbar) => Err(Error::AsymptoticDomain(format!(
            "phase formulas need nbar >= {PHASE_ASYMPTOTIC_NBAR}, got {nbar}; use empirical_comparison"
        ))),
        None => Err(Error::AsymptoticDomain(
            "phase formulas hold for bright coherent states only; use empirical_comparison".into(),
        )),
    }
}

/// Closed-form variance of the tomographic estimator. For the complex
/// amplitude this is the mean of the two noise eigenvalues.
pub fn tomographic_variance_analytic(obs: &Observable, state: &StateSpec, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    state.validate()?;
    let nbar = mean_photon(state)?;
    match obs {
        Observable::Intensity => {
            let n2 = normal_moment(state, 2, 2)?.re + nbar;
            Ok(photon_number_variance(state)?
                + 0.5 * n2
                + nbar * (2.0 / eta - 1.5)
                + 0.5 / (eta * eta))
        }
        Observable::RealField => {
            Ok(quadrature_variance(state, 0.0)? + 0.5 * nbar + (2.0 - eta) / (4.0 * eta))
        }
        Observable::ComplexAmplitude => {
            let a = normal_moment(state, 0, 1)?;
            Ok(0.5 * (1.0 / eta + 2.0 * nbar - a.norm_sqr()))
        }
        Observable::Phase => phase_domain(state).map(|_| PHASE_TOMOGRAPHIC_VARIANCE),
        _ => Err(unsupported(obs)),
    }
}

/// Closed-form variance of the corresponding direct measurement: photon
/// counting, fixed-phase homodyne or heterodyne detection.
pub fn direct_variance_analytic(obs: &Observable, state: &StateSpec, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    state.validate()?;
    match obs {
        Observable::Intensity => crate::direct::intensity_variance_direct(state, eta),
        Observable::RealField => crate::direct::quadrature_variance_direct(state, eta),
        Observable::ComplexAmplitude => {
            let (p, m) = crate::direct::amplitude_noise_direct(state, eta)?;
            Ok(0.5 * (p + m))
        }
        Observable::Phase => phase_domain(state).map(|nbar| 1.0 / (2.0 * eta * nbar)),
        _ => Err(unsupported(obs)),
    }
}

/// Noise added by the tomographic method on top of direct detection.
pub fn added_noise_analytic(obs: &Observable, state: &StateSpec, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    state.validate()?;
    let nbar = mean_photon(state)?;
    match obs {
        Observable::Intensity => {
            let n2 = normal_moment(state, 2, 2)?.re + nbar;
            Ok(0.5 * (n2 + nbar * (2.0 / eta - 1.0) + 1.0 / (eta * eta)))
        }
        Observable::RealField => Ok(0.5 * (nbar + 0.5 / eta)),
        Observable::ComplexAmplitude => Ok(0.5 * nbar),
        Observable::Phase => {
            let nbar = phase_domain(state)?;
            Ok(PHASE_TOMOGRAPHIC_VARIANCE - 1.0 / (2.0 * eta * nbar))
        }
        _ => Err(unsupported(obs)),
    }
}

/// Linear noise ratio `sqrt(tomographic / direct)` for a coherent state.
/// The phase ratio is the large-amplitude form.
pub fn noise_ratio_coherent(obs: &Observable, nbar: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if !(nbar >= 0.0 && nbar.is_finite()) {
        return Err(Error::Domain(format!(
            "nbar must be finite and >= 0, got {nbar}"
        )));
    }
    let s = eta * nbar;
    match obs {
        Observable::Intensity | Observable::Phase if nbar == 0.0 => {
            Err(Error::Domain(format!("`{obs}` noise ratio needs nbar > 0")))
        }
        Observable::Intensity => Ok((2.0 + 0.5 * (s + 1.0 / s)).sqrt()),
        Observable::RealField => Ok((2.0 * (1.0 + s)).sqrt()),
        Observable::ComplexAmplitude => Ok((1.0 + s).sqrt()),
        Observable::Phase => Ok(PI * (s / 6.0).sqrt()),
        _ => Err(unsupported(obs)),
    }
}

/// Closed-form comparison for any supported state. Phase needs a bright
/// coherent state.
pub fn analytic_comparison(
    obs: &Observable,
    state: &StateSpec,
    eta: f64,
) -> Result<NoiseComparison> {
    let tomo = tomographic_variance_analytic(obs, state, eta)?;
    let direct = direct_variance_analytic(obs, state, eta)?;
    if direct.is_nan() || direct <= 0.0 {
        return Err(Error::Range(format!(
            "direct variance of `{obs}` is {direct} for {}; the noise ratio is undefined",
            state.tag()
        )));
    }
    Ok(NoiseComparison {
        observable: obs.clone(),
        state_tag: state.tag(),
        eta,
        nbar: mean_photon(state)?,
        tomographic_variance: tomo,
        direct_variance: direct,
        added_noise: added_noise_analytic(obs, state, eta)?,
        ratio_linear: (tomo / direct).sqrt(),
        ratio_db: ratio_db(tomo, direct),
        source: Source::Analytic {
            asymptotic_not_reached: false,
        },
        errors: None,
    })
}

fn analytic_row(obs: &Observable, nbar: f64, eta: f64) -> Result<NoiseComparison> {
    let ratio_linear = noise_ratio_coherent(obs, nbar, eta)?;
    let state = StateSpec::coherent_real(nbar.sqrt());
    let (tomo, direct, added, asymptotic_not_reached) = match obs {
        Observable::Phase => {
            let direct = 1.0 / (2.0 * eta * nbar);
            (
                PHASE_TOMOGRAPHIC_VARIANCE,
                direct,
                PHASE_TOMOGRAPHIC_VARIANCE - direct,
                nbar < PHASE_ASYMPTOTIC_NBAR,
            )
        }
        _ => (
            tomographic_variance_analytic(obs, &state, eta)?,
            direct_variance_analytic(obs, &state, eta)?,
            added_noise_analytic(obs, &state, eta)?,
            false,
        ),
    };
    Ok(NoiseComparison {
        observable: obs.clone(),
        state_tag: state.tag(),
        eta,
        nbar,
        tomographic_variance: tomo,
        direct_variance: direct,
        added_noise: added,
        ratio_linear,
        ratio_db: ratio_db(tomo, direct),
        source: Source::Analytic {
            asymptotic_not_reached,
        },
        errors: None,
    })
}

/// Variance of phase values about a known centre, wrapped to `(-pi, pi]`.
fn centered_phase_variance(values: &[f64], centre: f64) -> VarianceEstimate {
    variance_with_error(values.iter().map(move |&w| wrap_angle(w - centre)))
}

fn capability(what: &str, state: &StateSpec) -> Error {
    Error::Capability(format!(
        "{what} is simulated for coherent states only, got {}",
        state.tag()
    ))
}

/// Monte-Carlo comparison: `n` homodyne samples for the tomographic side and
/// `n` direct-detection events, both driven by `seed`.
pub fn empirical_comparison(
    obs: &Observable,
    state: &StateSpec,
    eta: f64,
    n: usize,
    seed: u64,
) -> Result<NoiseComparison> {
    check_eta(eta)?;
    state.validate()?;
    let (tomo, direct) = match obs {
        Observable::Intensity
        | Observable::RealField
        | Observable::ComplexAmplitude
        | Observable::Phase => {
            if matches!(obs, Observable::ComplexAmplitude) && coherent_nbar(state).is_none() {
                return Err(capability("heterodyne detection", state));
            }
            if matches!(obs, Observable::Phase) && coherent_nbar(state).is_none() {
                return Err(capability("the direct phase measurement", state));
            }
            let data = sample_homodyne(state, eta, n, seed)?;
            match obs {
                Observable::Intensity => (
                    kernel_variance_with_error(&data, obs)?,
                    simulate_photocount(state, eta, n, seed)?.reduced_photocurrent(),
                ),
                Observable::RealField => {
                    let xs = simulate_fixed_phase_homodyne(state, eta, n, seed)?;
                    (
                        kernel_variance_with_error(&data, obs)?,
                        variance_with_error(xs.iter().copied()),
                    )
                }
                Observable::ComplexAmplitude => (
                    kernel_variance_with_error(&data, obs)?,
                    heterodyne_amplitude_noise(&simulate_heterodyne(state, eta, n, seed)?)?,
                ),
                _ => {
                    let centre = normal_moment(state, 0, 1)?.arg();
                    let w: Vec<f64> = data
                        .samples
                        .par_iter()
                        .map(|q| phase_kernel(q.x, q.phi).value)
                        .collect();
                    let het: Vec<f64> = simulate_heterodyne(state, eta, n, seed)?
                        .alphas
                        .iter()
                        .map(|a| a.arg())
                        .collect();
                    (
                        centered_phase_variance(&w, centre),
                        centered_phase_variance(&het, centre),
                    )
                }
            }
        }
        _ => return Err(unsupported(obs)),
    };
    if direct.variance.is_nan() || direct.variance <= 0.0 {
        return Err(Error::Range(format!(
            "direct variance of `{obs}` is {} for {}; the noise ratio is undefined",
            direct.variance,
            state.tag()
        )));
    }
    let q = tomo.variance / direct.variance;
    let ratio_linear = q.sqrt();
    let rel =
        ((tomo.stderr / tomo.variance).powi(2) + (direct.stderr / direct.variance).powi(2)).sqrt();
    Ok(NoiseComparison {
        observable: obs.clone(),
        state_tag: state.tag(),
        eta,
        nbar: mean_photon(state)?,
        tomographic_variance: tomo.variance,
        direct_variance: direct.variance,
        added_noise: tomo.variance - direct.variance,
        ratio_linear,
        ratio_db: 10.0 * q.log10(),
        source: Source::Empirical { n: n as u64, seed },
        errors: Some(ErrorBars {
            tomographic_variance: tomo.stderr,
            direct_variance: direct.stderr,
            added_noise: tomo.stderr.hypot(direct.stderr),
            ratio_linear: 0.5 * ratio_linear * rel,
        }),
    })
}

/// One row per `(observable, eta, nbar)` for coherent states of real
/// amplitude `sqrt(nbar)`. Rows are ordered by observable as given, then by
/// ascending `eta`, then by ascending `nbar`. Empirical rows all use the same
/// seed, so neighbouring points share random numbers.
pub fn sweep(
    observables: &[Observable],
    nbar_grid: &[f64],
    eta_list: &[f64],
    mode: SweepMode,
) -> Result<Vec<NoiseComparison>> {
    if observables.is_empty() || nbar_grid.is_empty() || eta_list.is_empty() {
        return Err(Error::Argument("sweep grids must be non-empty".into()));
    }
    let sorted = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v
    };
    let (etas, nbars) = (sorted(eta_list), sorted(nbar_grid));
    let mut tasks = Vec::with_capacity(observables.len() * etas.len() * nbars.len());
    for obs in observables {
        for &eta in &etas {
            tasks.extend(nbars.iter().map(|&nbar| (obs, eta, nbar)));
        }
    }
    tasks
        .into_par_iter()
        .map(|(obs, eta, nbar)| match mode {
            SweepMode::Analytic => analytic_row(obs, nbar, eta),
            SweepMode::Empirical { n, seed } => {
                if !(nbar >= 0.0 && nbar.is_finite()) {
                    return Err(Error::Domain(format!(
                        "nbar must be finite and >= 0, got {nbar}"
                    )));
                }
                empirical_comparison(obs, &StateSpec::coherent_real(nbar.sqrt()), eta, n, seed)
            }
        })
        .collect()
}

/// Writes sweep rows as CSV; `n` and `seed` are empty for analytic rows.
pub fn write_sweep_csv<W: Write>(w: W, rows: &[NoiseComparison]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for r in rows {
        let (n, seed) = match r.source {
            Source::Empirical { n, seed } => (n.to_string(), seed.to_string()),
            Source::Analytic { .. } => (String::new(), String::new()),
        };
        out.write_record([
            r.observable.name().to_string(),
            r.eta.to_string(),
            r.nbar.to_string(),
            r.tomographic_variance.to_string(),
            r.direct_variance.to_string(),
            r.added_noise.to_string(),
            r.ratio_linear.to_string(),
            r.ratio_db.to_string(),
            r.source.label().to_string(),
            n,
            seed,
        ])?;
    }
    out.flush()?;
    Ok(())
}
