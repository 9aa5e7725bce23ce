//! Estimates from homodyne data: kernel sample means with standard errors,
//! the two noise eigenvalues of the complex amplitude, and the distribution
//! of the phase kernel.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::homodyne::Dataset;
use crate::kernels::{kernel_observable, phase_kernel, Observable};
use crate::rng::CHUNK;

/// Streaming mean and variance (Welford), mergeable across disjoint ranges.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        let count = self.count + other.count;
        if count == 0 {
            return Self::default();
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * nb / count as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / count as f64,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Mean square deviation (divides by `n`).
    pub fn population_variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    /// Unbiased variance (divides by `n - 1`); zero below two samples.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Sample standard deviation over `sqrt(n)`.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.sample_variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Streaming mean and 2x2 covariance of a complex variable.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ComplexStats {
    count: u64,
    mean: Complex64,
    m_rr: f64,
    m_ii: f64,
    m_ri: f64,
}

impl ComplexStats {
    pub fn push(&mut self, z: Complex64) {
        self.count += 1;
        let d = z - self.mean;
        self.mean += d / self.count as f64;
        let d2 = z - self.mean;
        self.m_rr += d.re * d2.re;
        self.m_ii += d.im * d2.im;
        self.m_ri += d.re * d2.im;
    }

    pub fn merge(&self, other: &Self) -> Self {
        let count = self.count + other.count;
        if count == 0 {
            return Self::default();
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let d = other.mean - self.mean;
        let w = na * nb / count as f64;
        Self {
            count,
            mean: self.mean + d * (nb / count as f64),
            m_rr: self.m_rr + other.m_rr + d.re * d.re * w,
            m_ii: self.m_ii + other.m_ii + d.im * d.im * w,
            m_ri: self.m_ri + other.m_ri + d.re * d.im * w,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Complex64 {
        self.mean
    }

    /// Eigenvalues `(larger, smaller)` of the covariance of `(Re w, Im w)`:
    /// `1/2 [ mean|w|^2 - |mean w|^2 +/- |mean w^2 - (mean w)^2| ]`.
    pub fn noise_eigenvalues(&self) -> (f64, f64) {
        if self.count == 0 {
            return (0.0, 0.0);
        }
        let n = self.count as f64;
        let (vr, vi, c) = (self.m_rr / n, self.m_ii / n, self.m_ri / n);
        let trace = vr + vi;
        let split = Complex64::new(vr - vi, 2.0 * c).norm();
        (0.5 * (trace + split), (0.5 * (trace - split)).max(0.0))
    }
}

/// Real estimate: sample mean, its standard error and the sample count.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl From<RunningStats> for Estimate {
    fn from(s: RunningStats) -> Self {
        Estimate {
            value: s.mean(),
            stderr: s.stderr(),
            n: s.count(),
        }
    }
}

/// Complex estimate with the two noise eigenvalues, `noise_plus >= noise_minus`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub value: Complex64,
    pub noise_plus: f64,
    pub noise_minus: f64,
    pub n: u64,
}

/// Variance estimate with the Monte-Carlo standard error of the variance itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub variance: f64,
    pub stderr: f64,
    pub n: u64,
}

fn nonempty(data: &Dataset) -> Result<()> {
    if data.samples.is_empty() {
        Err(Error::Argument("dataset is empty".into()))
    } else {
        Ok(())
    }
}

fn require_real(obs: &Observable) -> Result<()> {
    obs.validate()?;
    if obs.is_real_valued() {
        Ok(())
    } else {
        Err(Error::Type(format!(
            "kernel of `{obs}` is complex-valued; use estimate_complex"
        )))
    }
}

/// Folds values in fixed chunks in parallel, then merges chunk results in
/// order, so the result does not depend on the thread count.
fn chunked<T, A, F, M>(items: &[T], fold: F, merge: M) -> Result<A>
where
    T: Sync,
    A: Send + Default,
    F: Fn(&[T]) -> Result<A> + Sync,
    M: Fn(&A, &A) -> A,
{
    let parts: Vec<A> = items.par_chunks(CHUNK).map(&fold).collect::<Result<_>>()?;
    Ok(parts.iter().fold(A::default(), |acc, p| merge(&acc, p)))
}

fn real_kernel_stats(data: &Dataset, obs: &Observable) -> Result<RunningStats> {
    let eta = data.eta;
    chunked(
        &data.samples,
        |chunk| {
            let mut s = RunningStats::new();
            for q in chunk {
                s.push(kernel_observable(obs, eta, q.x, q.phi)?.re);
            }
            Ok(s)
        },
        RunningStats::merge,
    )
}

/// Sample mean of a real kernel with its standard error.
pub fn estimate_mean(data: &Dataset, obs: &Observable) -> Result<Estimate> {
    nonempty(data)?;
    require_real(obs)?;
    Ok(real_kernel_stats(data, obs)?.into())
}

/// Sample mean of the complex-amplitude kernel `2x e^{i phi}` and its two noises.
pub fn estimate_complex(data: &Dataset) -> Result<ComplexEstimate> {
    nonempty(data)?;
    let stats = complex_kernel_stats(data)?;
    let (noise_plus, noise_minus) = stats.noise_eigenvalues();
    Ok(ComplexEstimate {
        value: stats.mean(),
        noise_plus,
        noise_minus,
        n: stats.count(),
    })
}

fn complex_kernel_stats(data: &Dataset) -> Result<ComplexStats> {
    chunked(
        &data.samples,
        |chunk| {
            let mut s = ComplexStats::default();
            for q in chunk {
                s.push(Complex64::from_polar(2.0 * q.x, q.phi));
            }
            Ok(s)
        },
        ComplexStats::merge,
    )
}

/// Mean squared kernel minus squared mean kernel.
pub fn empirical_kernel_variance(data: &Dataset, obs: &Observable) -> Result<f64> {
    nonempty(data)?;
    require_real(obs)?;
    Ok(real_kernel_stats(data, obs)?.population_variance())
}

/// Kernel variance with its own standard error, from a second pass over the
/// squared deviations. For the complex amplitude the variance reported is
/// the mean of the two noise eigenvalues, `(noise_plus + noise_minus) / 2`.
pub fn kernel_variance_with_error(data: &Dataset, obs: &Observable) -> Result<VarianceEstimate> {
    nonempty(data)?;
    let eta = data.eta;
    let dev: RunningStats = match obs {
        Observable::ComplexAmplitude => {
            let mean = complex_kernel_stats(data)?.mean();
            chunked(
                &data.samples,
                |chunk| {
                    Ok(chunk
                        .iter()
                        .map(|q| 0.5 * (Complex64::from_polar(2.0 * q.x, q.phi) - mean).norm_sqr())
                        .collect())
                },
                RunningStats::merge,
            )?
        }
        _ => {
            require_real(obs)?;
            let mean = real_kernel_stats(data, obs)?.mean();
            chunked(
                &data.samples,
                |chunk| {
                    let mut s = RunningStats::new();
                    for q in chunk {
                        s.push((kernel_observable(obs, eta, q.x, q.phi)?.re - mean).powi(2));
                    }
                    Ok(s)
                },
                RunningStats::merge,
            )?
        }
    };
    Ok(VarianceEstimate {
        variance: dev.mean(),
        stderr: dev.stderr(),
        n: dev.count(),
    })
}

/// Normalized histogram of the phase kernel `arg(x e^{i phi})` over `(-pi, pi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseHistogram {
    /// `bins + 1` edges from `-pi` to `pi`.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Counts divided by `n * width`; integrates to one.
    pub density: Vec<f64>,
    pub n: u64,
}

impl PhaseHistogram {
    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Binomial standard error of each bin's density.
    pub fn density_stderr(&self) -> Vec<f64> {
        let n = self.n as f64;
        let w = self.width();
        self.counts
            .iter()
            .map(|&c| {
                let p = c as f64 / n;
                (p * (1.0 - p) / n).sqrt() / w
            })
            .collect()
    }
}

pub const MIN_PHASE_BINS: usize = 8;

pub fn phase_kernel_distribution(data: &Dataset, bins: usize) -> Result<PhaseHistogram> {
    nonempty(data)?;
    if bins < MIN_PHASE_BINS {
        return Err(Error::Argument(format!(
            "phase histogram needs at least {MIN_PHASE_BINS} bins, got {bins}"
        )));
    }
    let width = 2.0 * PI / bins as f64;
    let counts = chunked(
        &data.samples,
        |chunk| {
            let mut c = vec![0u64; bins];
            for q in chunk {
                let w = phase_kernel(q.x, q.phi).value;
                let b = (((w + PI) / width).ceil() as usize).clamp(1, bins) - 1;
                c[b] += 1;
            }
            Ok(c)
        },
        |a: &Vec<u64>, b: &Vec<u64>| {
            if a.is_empty() {
                return b.clone();
            }
            a.iter().zip(b).map(|(x, y)| x + y).collect()
        },
    )?;
    let n = data.n() as u64;
    let edges = (0..=bins).map(|i| -PI + width * i as f64).collect();
    let density = counts
        .iter()
        .map(|&c| c as f64 / (n as f64 * width))
        .collect();
    Ok(PhaseHistogram {
        edges,
        counts,
        density,
        n,
    })
}

/// Where the efficiency enters the error-function argument of the
/// coherent-state phase-kernel density `(1 + erf(k |beta| cos w)) / (2 pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErfScaling {
    /// `k = sqrt(2 eta)`: the smeared quadrature Gaussian of variance `1/(4 eta)`.
    SmearedQuadrature,
    /// `k = sqrt(2 / eta)`.
    InverseEfficiency,
}

impl ErfScaling {
    pub fn factor(self, eta: f64) -> f64 {
        match self {
            ErfScaling::SmearedQuadrature => (2.0 * eta).sqrt(),
            ErfScaling::InverseEfficiency => (2.0 / eta).sqrt(),
        }
    }
}

/// Scaling selected by Monte-Carlo discrimination against simulated data.
pub const PHASE_DENSITY_SCALING: ErfScaling = ErfScaling::SmearedQuadrature;

pub fn phase_kernel_density_with(scaling: ErfScaling, beta_abs: f64, eta: f64, w: f64) -> f64 {
    (1.0 + erf(scaling.factor(eta) * beta_abs * w.cos())) / (2.0 * PI)
}

/// Density of the phase kernel for a zero-mean-phase coherent state `| |beta| >`.
pub fn coherent_phase_kernel_density(beta_abs: f64, eta: f64, w: f64) -> f64 {
    phase_kernel_density_with(PHASE_DENSITY_SCALING, beta_abs, eta, w)
}

/// Mass of `density` over `[a, b]` by composite Simpson.
pub fn bin_mass(density: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let steps = 32;
    let h = (b - a) / steps as f64;
    let mut s = density(a) + density(b);
    for i in 1..steps {
        let wgt = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += wgt * density(a + h * i as f64);
    }
    s * h / 3.0
}

/// Variance of the coherent-state phase kernel from its analytic density.
pub fn coherent_phase_kernel_variance(beta_abs: f64, eta: f64) -> f64 {
    let steps = 20_000;
    let h = 2.0 * PI / steps as f64;
    let (mut m1, mut m2) = (0.0, 0.0);
    for i in 0..steps {
        let w = -PI + h * (i as f64 + 0.5);
        let p = coherent_phase_kernel_density(beta_abs, eta, w) * h;
        m1 += w * p;
        m2 += w * w * p;
    }
    m2 - m1 * m1
}
