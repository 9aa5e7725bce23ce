//! Synthetic homodyne tomography records: phase-scanned quadrature samples
//! at a given quantum efficiency.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_eta, Error, Result};
use crate::io::{field, read_records, write_records, Metadata};
use crate::rng::{generate, Stream};
use crate::sampling::{GridCdf, GRID_NODES};
use crate::states::{
    grid_half_width, wavefunctions, DensityMatrix, StateSpec, VACUUM_QUADRATURE_VARIANCE,
};

/// One homodyne event: quadrature outcome `x` at LO phase `phi` in `[0, pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub x: f64,
    pub phi: f64,
}

/// A homodyne data record with the parameters that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr", into = "DatasetRepr")]
pub struct Dataset {
    pub samples: Vec<QuadratureSample>,
    pub eta: f64,
    pub state_tag: String,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct DatasetRepr {
    state: String,
    eta: f64,
    seed: u64,
    n: usize,
    samples: Vec<QuadratureSample>,
}

impl TryFrom<DatasetRepr> for Dataset {
    type Error = Error;
    fn try_from(r: DatasetRepr) -> Result<Self> {
        if r.n != r.samples.len() {
            return Err(Error::Validation(format!(
                "dataset declares n={} but holds {} samples",
                r.n,
                r.samples.len()
            )));
        }
        Dataset::new(r.samples, r.eta, r.state, r.seed)
    }
}

impl From<Dataset> for DatasetRepr {
    fn from(d: Dataset) -> Self {
        DatasetRepr {
            n: d.samples.len(),
            state: d.state_tag,
            eta: d.eta,
            seed: d.seed,
            samples: d.samples,
        }
    }
}

pub const CSV_HEADER: [&str; 2] = ["x", "phi"];

impl Dataset {
    pub fn new(
        samples: Vec<QuadratureSample>,
        eta: f64,
        state_tag: String,
        seed: u64,
    ) -> Result<Self> {
        check_eta(eta)?;
        if samples.is_empty() {
            return Err(Error::Validation(
                "dataset must hold at least one sample".into(),
            ));
        }
        if let Some(s) = samples
            .iter()
            .find(|s| !(0.0..PI).contains(&s.phi) || !s.x.is_finite())
        {
            return Err(Error::Validation(format!(
                "invalid sample {s:?}: phi must lie in [0, pi)"
            )));
        }
        Ok(Self {
            samples,
            eta,
            state_tag,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn metadata(&self) -> Metadata {
        Metadata {
            state_tag: self.state_tag.clone(),
            eta: self.eta,
            seed: self.seed,
            n: self.n(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        write_records(
            w,
            &self.metadata(),
            &CSV_HEADER,
            self.samples
                .iter()
                .map(|s| [s.x.to_string(), s.phi.to_string()]),
        )
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (meta, rows) = read_records(r, &CSV_HEADER)?;
        let samples = rows
            .iter()
            .map(|rec| {
                Ok(QuadratureSample {
                    x: field(rec, 0)?,
                    phi: field(rec, 1)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(samples, meta.eta, meta.state_tag, meta.seed)
    }
}

/// Draws ideal (unit-efficiency) quadrature outcomes for a fixed state.
#[derive(Clone, Debug)]
pub(crate) enum QuadratureSampler {
    /// Coherent state: Gaussian of variance 1/4 about `Re(beta e^{-i phi})`.
    Gaussian { beta: Complex64 },
    /// Phase-invariant number-basis state: one tabulated density.
    Table(GridCdf),
    /// States with coherences: rejection from the envelope
    /// `S * sum_n w_n psi_n^2`, `w_n = sqrt(rho_nn)`, `S = sum_n w_n`,
    /// which bounds `p(x; phi)` by Cauchy-Schwarz for any positive `rho`.
    Envelope(Box<EnvelopeSampler>),
}

#[derive(Clone, Debug)]
pub(crate) struct EnvelopeSampler {
    dm: DensityMatrix,
    weights: Vec<f64>,
    level_cdf: Vec<f64>,
    levels: Vec<Option<GridCdf>>,
}

impl EnvelopeSampler {
    fn new(dm: DensityMatrix) -> Result<Self> {
        let dim = dm.dim();
        let half = grid_half_width(dim);
        let weights: Vec<f64> = dm.diagonal().iter().map(|p| p.max(0.0).sqrt()).collect();
        let total: f64 = weights.iter().sum();
        let mut level_cdf = Vec::with_capacity(dim);
        let mut acc = 0.0;
        for w in &weights {
            acc += w / total;
            level_cdf.push(acc);
        }
        let levels = weights
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                if w == 0.0 {
                    return Ok(None);
                }
                let table = GridCdf::new(
                    |x| {
                        let psi = wavefunctions(k + 1, x)[k];
                        psi * psi
                    },
                    half,
                    GRID_NODES,
                )?;
                Ok(Some(table))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            dm,
            weights,
            level_cdf,
            levels,
        })
    }

    fn sample(&self, phi: f64, rng: &mut ChaCha8Rng) -> f64 {
        let dim = self.dm.dim();
        let total: f64 = self.weights.iter().sum();
        let phases: Vec<Complex64> = (0..dim)
            .map(|k| Complex64::from_polar(1.0, k as f64 * phi))
            .collect();
        loop {
            let u: f64 = rng.random();
            let level = self.level_cdf.partition_point(|&c| c <= u).min(dim - 1);
            let Some(table) = &self.levels[level] else {
                continue;
            };
            let x = table.sample(rng.random());
            let psi = wavefunctions(dim, x);
            let envelope: f64 = total
                * self
                    .weights
                    .iter()
                    .zip(&psi)
                    .map(|(w, p)| w * p * p)
                    .sum::<f64>();
            let c: Vec<Complex64> = psi.iter().zip(&phases).map(|(p, e)| e * p).collect();
            let mut target = Complex64::new(0.0, 0.0);
            for n in 0..dim {
                let row: Complex64 = c
                    .iter()
                    .enumerate()
                    .map(|(m, cm)| self.dm.get(n, m) * cm)
                    .sum();
                target += c[n].conj() * row;
            }
            let accept: f64 = rng.random();
            if accept * envelope < target.re {
                return x;
            }
        }
    }
}

impl QuadratureSampler {
    pub(crate) fn new(state: &StateSpec) -> Result<Self> {
        state.validate()?;
        Ok(match state {
            StateSpec::Coherent { beta } => QuadratureSampler::Gaussian { beta: *beta },
            _ if state.is_phase_invariant() => {
                let dm = state.to_density_matrix()?;
                let probs = dm.diagonal();
                let dim = dm.dim();
                let table = GridCdf::new(
                    |x| {
                        let psi = wavefunctions(dim, x);
                        probs.iter().zip(&psi).map(|(p, v)| p * v * v).sum()
                    },
                    grid_half_width(dim),
                    GRID_NODES,
                )?;
                QuadratureSampler::Table(table)
            }
            _ => QuadratureSampler::Envelope(Box::new(EnvelopeSampler::new(
                state.to_density_matrix()?,
            )?)),
        })
    }

    pub(crate) fn sample_ideal(&self, phi: f64, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            QuadratureSampler::Gaussian { beta } => {
                let mean = (beta * Complex64::from_polar(1.0, -phi)).re;
                let z: f64 = rng.sample(StandardNormal);
                mean + VACUUM_QUADRATURE_VARIANCE.sqrt() * z
            }
            QuadratureSampler::Table(t) => t.sample(rng.random()),
            QuadratureSampler::Envelope(e) => e.sample(phi, rng),
        }
    }

    /// Ideal outcome plus the detector's Gaussian smearing.
    pub(crate) fn sample(&self, phi: f64, eta: f64, rng: &mut ChaCha8Rng) -> f64 {
        let x = self.sample_ideal(phi, rng);
        if eta < 1.0 {
            let z: f64 = rng.sample(StandardNormal);
            x + ((1.0 - eta) / (4.0 * eta)).sqrt() * z
        } else {
            x
        }
    }
}

fn uniform_phase(rng: &mut ChaCha8Rng) -> f64 {
    let phi = rng.random::<f64>() * PI;
    if phi < PI {
        phi
    } else {
        PI - f64::EPSILON
    }
}

/// Simulates `n` homodyne events with LO phase uniform on `[0, pi)`.
pub fn sample_homodyne(state: &StateSpec, eta: f64, n: usize, seed: u64) -> Result<Dataset> {
    check_eta(eta)?;
    if n == 0 {
        return Err(Error::Argument("sample count must be >= 1".into()));
    }
    let sampler = QuadratureSampler::new(state)?;
    let samples = generate(n, seed, Stream::Homodyne, |rng| {
        let phi = uniform_phase(rng);
        let x = sampler.sample(phi, eta, rng);
        Ok(QuadratureSample { x, phi })
    })?;
    Dataset::new(samples, eta, state.tag(), seed)
}

/// Quadrature outcomes at a fixed LO phase (direct homodyne detection).
pub fn sample_fixed_phase(
    state: &StateSpec,
    phi: f64,
    eta: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_eta(eta)?;
    if n == 0 {
        return Err(Error::Argument("sample count must be >= 1".into()));
    }
    let sampler = QuadratureSampler::new(state)?;
    generate(n, seed, Stream::FixedPhase, |rng| {
        Ok(sampler.sample(phi, eta, rng))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::quadrature_pdf;

    fn mean_var(v: impl Iterator<Item = f64>) -> (f64, f64) {
        let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
        for x in v {
            n += 1.0;
            s += x;
            s2 += x * x;
        }
        let m = s / n;
        (m, s2 / n - m * m)
    }

    #[test]
    fn vacuum_variance() {
        let d = sample_homodyne(&StateSpec::coherent_real(0.0), 1.0, 1_000_000, 1).unwrap();
        let (_, v) = mean_var(d.samples.iter().map(|s| s.x));
        assert!((v - 0.25).abs() < 0.001, "v={v}");
    }

    #[test]
    fn inefficiency_broadens_fixed_phase_bin() {
        let d = sample_homodyne(&StateSpec::coherent_real(2.0), 0.5, 1_000_000, 2).unwrap();
        let (m, v) = mean_var(d.samples.iter().filter(|s| s.phi < 0.02).map(|s| s.x));
        assert!((m - 2.0).abs() < 0.02);
        assert!((v - 0.5).abs() < 0.01, "v={v}");
    }

    #[test]
    fn fock_one_histogram_matches_density() {
        let d = sample_homodyne(&StateSpec::fock(1), 1.0, 1_000_000, 3).unwrap();
        let (lo, width, bins) = (-2.5, 0.05, 100);
        let mut counts = vec![0usize; bins];
        for s in &d.samples {
            let b = ((s.x - lo) / width).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[b as usize] += 1;
            }
        }
        let mut sup = 0.0_f64;
        for (i, c) in counts.iter().enumerate() {
            let x = lo + (i as f64 + 0.5) * width;
            let exact = 4.0 * x * x * (2.0 / PI).sqrt() * (-2.0 * x * x).exp();
            let emp = *c as f64 / (d.n() as f64 * width);
            sup = sup.max((emp - exact).abs());
        }
        assert!(sup < 0.01, "sup={sup}");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let s = StateSpec::fock(2);
        let a = sample_homodyne(&s, 0.8, 100_000, 9).unwrap();
        let b = sample_homodyne(&s, 0.8, 100_000, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_homodyne(&s, 0.8, 100_000, 10).unwrap();
        assert_ne!(a.samples, c.samples);
        assert!(a.samples.iter().all(|q| (0.0..PI).contains(&q.phi)));
    }

    #[test]
    fn phase_is_uniform_ks() {
        // 1% critical value of the one-sample KS statistic, large-n form
        let n = 100_000;
        let crit = 1.628 / (n as f64).sqrt();
        let mut total = 0.0;
        let seeds = 5;
        for seed in 0..seeds {
            let d = sample_homodyne(&StateSpec::fock(0), 1.0, n, seed).unwrap();
            let mut phis: Vec<f64> = d.samples.iter().map(|s| s.phi / PI).collect();
            phis.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let ks = phis
                .iter()
                .enumerate()
                .map(|(i, u)| ((i + 1) as f64 / n as f64 - u).max(u - i as f64 / n as f64))
                .fold(0.0, f64::max);
            total += ks;
        }
        assert!(total / (seeds as f64) < crit);
    }

    #[test]
    fn real_field_mean_law() {
        let beta = Complex64::new(0.9, -0.4);
        let d = sample_homodyne(&StateSpec::coherent(beta), 0.7, 400_000, 5).unwrap();
        let (m, v) = mean_var(d.samples.iter().map(|s| 2.0 * s.x * s.phi.cos()));
        let se = (v / d.n() as f64).sqrt();
        assert!((m - beta.re).abs() < 4.0 * se);
    }

    #[test]
    fn coherence_rejection_sampler_matches_density() {
        let amps = [Complex64::new(0.8, 0.0), Complex64::new(0.0, 0.6)];
        let state = StateSpec::Mixed(DensityMatrix::from_pure(&amps).unwrap());
        let phi = 0.4;
        let xs = sample_fixed_phase(&state, phi, 1.0, 400_000, 11).unwrap();
        let (lo, width, bins) = (-2.0, 0.1, 40);
        let mut counts = vec![0usize; bins];
        for x in &xs {
            let b = ((x - lo) / width).floor();
            if b >= 0.0 && (b as usize) < bins {
                counts[b as usize] += 1;
            }
        }
        for (i, c) in counts.iter().enumerate() {
            // bin mass by Simpson on the exact density
            let a = lo + i as f64 * width;
            let f = |x: f64| quadrature_pdf(&state, phi, 1.0, x).unwrap();
            let mass = width / 6.0 * (f(a) + 4.0 * f(a + width / 2.0) + f(a + width));
            let expect = mass * xs.len() as f64;
            let sd = expect.max(1.0).sqrt();
            assert!(
                (*c as f64 - expect).abs() < 5.0 * sd,
                "bin {i}: {c} vs {expect}"
            );
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let d =
            sample_homodyne(&StateSpec::coherent(Complex64::new(1.0, 0.5)), 0.9, 50, 4).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "# state={\"type\":\"coherent\",\"beta\":[1.0,0.5]} eta=0.9 seed=4 n=50\nx,phi\n"
        ));
        assert_eq!(Dataset::read_csv(&buf[..]).unwrap(), d);
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<Dataset>(&json).unwrap(), d);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            sample_homodyne(&StateSpec::fock(0), 0.0, 10, 0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            sample_homodyne(&StateSpec::fock(0), 1.0, 0, 0),
            Err(Error::Argument(_))
        ));
        let bad = "# state=x eta=1 seed=0 n=2\nx,phi\n0.1,0.2\n";
        assert!(Dataset::read_csv(bad.as_bytes()).is_err());
        let bad_phi = "# state=x eta=1 seed=0 n=1\nx,phi\n0.1,3.5\n";
        assert!(matches!(
            Dataset::read_csv(bad_phi.as_bytes()),
            Err(Error::Validation(_))
        ));
    }
}
