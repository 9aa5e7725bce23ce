//! Direct measurements that tomography is compared against: photon counting,
//! fixed-phase homodyne detection and heterodyne detection, simulated and in
//! closed form.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};

use crate::error::{check_eta, Error, Result};
use crate::estimators::{RunningStats, VarianceEstimate};
use crate::homodyne::sample_fixed_phase;
use crate::io::{field, read_records, write_records, Metadata};
use crate::rng::{generate, Stream};
use crate::states::{
    mean_photon, normal_moment, photon_distribution, photon_number_variance, quadrature_variance,
    StateSpec,
};

/// Photocounts registered by a detector of efficiency `eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotocountRecord {
    pub counts: Vec<u64>,
    pub eta: f64,
    pub state_tag: String,
    pub seed: u64,
}

/// Complex outcomes of heterodyne detection.
#[derive(Clone, Debug, PartialEq)]
pub struct HeterodyneRecord {
    pub alphas: Vec<Complex64>,
    pub eta: f64,
    pub state_tag: String,
    pub seed: u64,
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::Argument("sample count must be >= 1".into()))
    } else {
        Ok(())
    }
}

impl PhotocountRecord {
    pub fn n(&self) -> usize {
        self.counts.len()
    }

    /// Reduced photocurrent `m / eta`, which tracks the photon number.
    pub fn reduced_photocurrent(&self) -> VarianceEstimate {
        variance_with_error(self.counts.iter().map(|&m| m as f64 / self.eta))
    }

    pub fn mean_reduced_photocurrent(&self) -> RunningStats {
        self.counts.iter().map(|&m| m as f64 / self.eta).collect()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let meta = Metadata {
            state_tag: self.state_tag.clone(),
            eta: self.eta,
            seed: self.seed,
            n: self.n(),
        };
        write_records(
            w,
            &meta,
            &["m"],
            self.counts.iter().map(|m| [m.to_string()]),
        )
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (meta, rows) = read_records(r, &["m"])?;
        let counts = rows
            .iter()
            .map(|rec| field(rec, 0))
            .collect::<Result<_>>()?;
        check_eta(meta.eta)?;
        Ok(Self {
            counts,
            eta: meta.eta,
            state_tag: meta.state_tag,
            seed: meta.seed,
        })
    }
}

impl HeterodyneRecord {
    pub fn n(&self) -> usize {
        self.alphas.len()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        let meta = Metadata {
            state_tag: self.state_tag.clone(),
            eta: self.eta,
            seed: self.seed,
            n: self.n(),
        };
        write_records(
            w,
            &meta,
            &["re", "im"],
            self.alphas
                .iter()
                .map(|a| [a.re.to_string(), a.im.to_string()]),
        )
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (meta, rows) = read_records(r, &["re", "im"])?;
        let alphas = rows
            .iter()
            .map(|rec| Ok(Complex64::new(field(rec, 0)?, field(rec, 1)?)))
            .collect::<Result<Vec<_>>>()?;
        if alphas
            .iter()
            .any(|a| !(a.re.is_finite() && a.im.is_finite()))
        {
            return Err(Error::Validation(
                "heterodyne record has non-finite entries".into(),
            ));
        }
        check_eta(meta.eta)?;
        Ok(Self {
            alphas,
            eta: meta.eta,
            state_tag: meta.state_tag,
            seed: meta.seed,
        })
    }
}

/// Variance of a sample (population form) with the standard error of that
/// variance, from the spread of the squared deviations.
pub(crate) fn variance_with_error(values: impl Iterator<Item = f64> + Clone) -> VarianceEstimate {
    let mean = values.clone().collect::<RunningStats>().mean();
    let dev: RunningStats = values.map(|v| (v - mean).powi(2)).collect();
    VarianceEstimate {
        variance: dev.mean(),
        stderr: dev.stderr(),
        n: dev.count(),
    }
}

/// Photon counting: draw the photon number, then keep each photon with probability `eta`.
pub fn simulate_photocount(
    state: &StateSpec,
    eta: f64,
    n: usize,
    seed: u64,
) -> Result<PhotocountRecord> {
    check_eta(eta)?;
    check_count(n)?;
    state.validate()?;
    enum Source {
        Poisson(Option<Poisson<f64>>),
        Table(Vec<f64>),
    }
    let source = match state {
        StateSpec::Coherent { beta } => {
            let nbar = beta.norm_sqr();
            Source::Poisson(if nbar > 0.0 {
                Some(Poisson::new(nbar).map_err(|e| Error::Domain(e.to_string()))?)
            } else {
                None
            })
        }
        _ => {
            let probs = photon_distribution(state, state.natural_dim())?.probs;
            let mut acc = 0.0;
            Source::Table(
                probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect(),
            )
        }
    };
    let counts = generate(n, seed, Stream::Photocount, |rng| {
        let photons: u64 = match &source {
            Source::Poisson(None) => 0,
            Source::Poisson(Some(p)) => p.sample(rng) as u64,
            Source::Table(cdf) => {
                let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
                cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) as u64
            }
        };
        if eta == 1.0 || photons == 0 {
            return Ok(photons);
        }
        let thin = Binomial::new(photons, eta).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(thin.sample(rng))
    })?;
    Ok(PhotocountRecord {
        counts,
        eta,
        state_tag: state.tag(),
        seed,
    })
}

/// Photodetection pmf `p_eta(m) = sum_n rho_nn C(n, m) eta^m (1 - eta)^{n - m}`.
pub fn photocount_distribution(state: &StateSpec, eta: f64, dim: usize) -> Result<Vec<f64>> {
    check_eta(eta)?;
    let rho = photon_distribution(state, dim)?.probs;
    let mut out = vec![0.0; dim];
    for (n, p) in rho.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let mut c = 1.0;
        for (m, slot) in out.iter_mut().enumerate().take(n + 1) {
            if m > 0 {
                c *= (n - m + 1) as f64 / m as f64;
            }
            *slot += p * c * eta.powi(m as i32) * (1.0 - eta).powi((n - m) as i32);
        }
    }
    Ok(out)
}

/// `<Delta n^2> + nbar (1/eta - 1)`: variance of the reduced photocurrent.
pub fn intensity_variance_direct(state: &StateSpec, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(photon_number_variance(state)? + mean_photon(state)? * (1.0 / eta - 1.0))
}

/// `<Delta x^2> + (1 - eta)/(4 eta)` for homodyne detection at zero LO phase.
pub fn quadrature_variance_direct(state: &StateSpec, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(quadrature_variance(state, 0.0)? + (1.0 - eta) / (4.0 * eta))
}

/// Homodyne detection at zero LO phase.
pub fn simulate_fixed_phase_homodyne(
    state: &StateSpec,
    eta: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    sample_fixed_phase(state, 0.0, eta, n, seed)
}

/// Heterodyne outcomes `alpha = beta + noise` with per-quadrature variance `1/(2 eta)`.
/// Only coherent states are simulated.
pub fn simulate_heterodyne(
    state: &StateSpec,
    eta: f64,
    n: usize,
    seed: u64,
) -> Result<HeterodyneRecord> {
    check_eta(eta)?;
    check_count(n)?;
    let beta = match state {
        StateSpec::Coherent { beta } => *beta,
        _ => {
            return Err(Error::UnsupportedState(
                "heterodyne simulation supports coherent states only; \
                 use amplitude_noise_direct for the analytic noise of other states"
                    .into(),
            ))
        }
    };
    state.validate()?;
    let sigma = (1.0 / (2.0 * eta)).sqrt();
    let alphas = generate(n, seed, Stream::Heterodyne, |rng| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Ok(beta + Complex64::new(re, im) * sigma)
    })?;
    Ok(HeterodyneRecord {
        alphas,
        eta,
        state_tag: state.tag(),
        seed,
    })
}

/// Heterodyne amplitude noises `1/2 [nbar + 1/eta - |<a>|^2 +/- |<a^2> - <a>^2|]`.
pub fn amplitude_noise_direct(state: &StateSpec, eta: f64) -> Result<(f64, f64)> {
    check_eta(eta)?;
    let nbar = mean_photon(state)?;
    let a = normal_moment(state, 0, 1)?;
    let a2 = normal_moment(state, 0, 2)?;
    let base = nbar + 1.0 / eta - a.norm_sqr();
    let split = (a2 - a * a).norm();
    Ok((0.5 * (base + split), 0.5 * (base - split)))
}

/// Sample variance of `arg(alpha)` on `(-pi, pi]`.
pub fn heterodyne_phase_variance(record: &HeterodyneRecord) -> Result<f64> {
    Ok(heterodyne_phase_variance_with_error(record)?.variance)
}

pub fn heterodyne_phase_variance_with_error(record: &HeterodyneRecord) -> Result<VarianceEstimate> {
    if record.alphas.is_empty() {
        return Err(Error::Argument("heterodyne record is empty".into()));
    }
    Ok(variance_with_error(record.alphas.iter().map(|a| a.arg())))
}

/// Mean of the two heterodyne amplitude noises, estimated from a record,
/// with its standard error.
pub fn heterodyne_amplitude_noise(record: &HeterodyneRecord) -> Result<VarianceEstimate> {
    if record.alphas.is_empty() {
        return Err(Error::Argument("heterodyne record is empty".into()));
    }
    let mean = record
        .alphas
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, a| acc + a)
        / record.n() as f64;
    let dev: RunningStats = record
        .alphas
        .iter()
        .map(|a| 0.5 * (a - mean).norm_sqr())
        .collect();
    Ok(VarianceEstimate {
        variance: dev.mean(),
        stderr: dev.stderr(),
        n: dev.count(),
    })
}
