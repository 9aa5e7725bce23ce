//! Single-mode states and their exact statistics.
//!
//! Quadratures follow `x = (a + a†)/2`, so the vacuum quadrature variance is 1/4.
//! A detector of quantum efficiency `eta` is modelled as Gaussian smearing of
//! the ideal quadrature density with variance `(1 - eta) / (4 eta)`; every
//! density and sampler in the crate uses that one rule.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_eta, Error, Result};

/// Vacuum variance of `x = (a + a†)/2`.
pub const VACUUM_QUADRATURE_VARIANCE: f64 = 0.25;

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const DIAGONAL_FLOOR: f64 = -1e-12;
const EIGENVALUE_FLOOR: f64 = -1e-10;

/// Row-major density matrix in the number basis, truncated at `dim` photons.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    rho: Vec<Complex64>,
}

impl DensityMatrix {
    /// Builds and validates a density matrix (Hermitian, unit trace,
    /// nonnegative real diagonal).
    pub fn new(dim: usize, rho: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation(
                "density matrix dimension must be >= 1".into(),
            ));
        }
        if rho.len() != dim * dim {
            return Err(Error::Validation(format!(
                "density matrix of dim {dim} needs {} entries, got {}",
                dim * dim,
                rho.len()
            )));
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation(
                "density matrix has non-finite entries".into(),
            ));
        }
        let dm = Self { dim, rho };
        dm.validate()?;
        Ok(dm)
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let dim = probs.len();
        let mut rho = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (k, p) in probs.iter().enumerate() {
            rho[k * dim + k] = Complex64::new(*p, 0.0);
        }
        Self::new(dim, rho)
    }

    /// `|psi><psi|` for a normalized amplitude vector.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let dim = amplitudes.len();
        let mut rho = Vec::with_capacity(dim * dim);
        for a in amplitudes {
            for b in amplitudes {
                rho.push(a * b.conj());
            }
        }
        Self::new(dim, rho)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.rho[n * self.dim + m]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.rho
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.get(k, k).re).collect()
    }

    /// True when every coherence vanishes, i.e. the quadrature density does not depend on phase.
    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|n| (0..self.dim).all(|m| n == m || self.get(n, m).norm() == 0.0))
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim;
        let mut herm = 0.0_f64;
        for n in 0..d {
            for m in 0..d {
                herm = herm.max((self.get(n, m) - self.get(m, n).conj()).norm());
            }
        }
        if herm > HERMITICITY_TOL {
            return Err(Error::Validation(format!(
                "density matrix is not Hermitian (max deviation {herm:e})"
            )));
        }
        let trace: f64 = (0..d).map(|k| self.get(k, k).re).sum();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::Validation(format!(
                "density matrix trace is {trace}, expected 1"
            )));
        }
        for k in 0..d {
            let z = self.get(k, k);
            if z.im.abs() > HERMITICITY_TOL || z.re < DIAGONAL_FLOOR {
                return Err(Error::Validation(format!(
                    "diagonal entry rho[{k},{k}] = {z} is not a nonnegative real"
                )));
            }
        }
        Ok(())
    }

    /// Strict positive-semidefiniteness check (eigenvalue floor -1e-10).
    pub fn validate_positive(&self) -> Result<()> {
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.rho);
        let eig = m.symmetric_eigenvalues();
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < EIGENVALUE_FLOOR {
            return Err(Error::Validation(format!(
                "density matrix is not positive semidefinite (smallest eigenvalue {min:e})"
            )));
        }
        Ok(())
    }
}

/// A single-mode state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub enum StateSpec {
    Coherent { beta: Complex64 },
    Fock { n: usize },
    Mixed(DensityMatrix),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum StateRepr {
    Coherent { beta: [f64; 2] },
    Fock { n: usize },
    Mixed { dim: usize, rho: Vec<[f64; 2]> },
}

impl TryFrom<StateRepr> for StateSpec {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        let s = match r {
            StateRepr::Coherent { beta } => StateSpec::coherent(Complex64::new(beta[0], beta[1])),
            StateRepr::Fock { n } => StateSpec::Fock { n },
            StateRepr::Mixed { dim, rho } => {
                let rho = rho
                    .into_iter()
                    .map(|[re, im]| Complex64::new(re, im))
                    .collect();
                StateSpec::Mixed(DensityMatrix::new(dim, rho)?)
            }
        };
        s.validate()?;
        Ok(s)
    }
}

impl From<StateSpec> for StateRepr {
    fn from(s: StateSpec) -> Self {
        match s {
            StateSpec::Coherent { beta } => StateRepr::Coherent {
                beta: [beta.re, beta.im],
            },
            StateSpec::Fock { n } => StateRepr::Fock { n },
            StateSpec::Mixed(dm) => StateRepr::Mixed {
                dim: dm.dim,
                rho: dm.rho.iter().map(|z| [z.re, z.im]).collect(),
            },
        }
    }
}

/// Photon-number probabilities up to a truncation, with the mass left beyond it.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonDistribution {
    pub probs: Vec<f64>,
    pub tail_mass: f64,
}

impl StateSpec {
    pub fn coherent(beta: Complex64) -> Self {
        StateSpec::Coherent { beta }
    }

    pub fn coherent_real(beta: f64) -> Self {
        StateSpec::Coherent {
            beta: Complex64::new(beta, 0.0),
        }
    }

    pub fn fock(n: usize) -> Self {
        StateSpec::Fock { n }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StateSpec::Coherent { beta } if !(beta.re.is_finite() && beta.im.is_finite()) => Err(
                Error::Validation(format!("coherent amplitude {beta} is not finite")),
            ),
            StateSpec::Mixed(dm) => dm.validate(),
            _ => Ok(()),
        }
    }

    /// Compact JSON form, used as the state tag in data files.
    pub fn tag(&self) -> String {
        serde_json::to_string(self).expect("state serialization is infallible")
    }

    /// Number-basis truncation holding the state to better than 1e-10.
    pub fn natural_dim(&self) -> usize {
        match self {
            StateSpec::Coherent { beta } => {
                let b = beta.norm();
                20usize.max((b * b + 8.0 * b + 10.0).ceil() as usize)
            }
            StateSpec::Fock { n } => n + 1,
            StateSpec::Mixed(dm) => dm.dim,
        }
    }

    /// Phase-invariant states have a quadrature density independent of the LO phase.
    pub fn is_phase_invariant(&self) -> bool {
        match self {
            StateSpec::Coherent { beta } => beta.norm() == 0.0,
            StateSpec::Fock { .. } => true,
            StateSpec::Mixed(dm) => dm.is_diagonal(),
        }
    }

    /// Density matrix on the natural truncation.
    pub fn to_density_matrix(&self) -> Result<DensityMatrix> {
        match self {
            StateSpec::Mixed(dm) => Ok(dm.clone()),
            StateSpec::Fock { n } => {
                let mut p = vec![0.0; n + 1];
                p[*n] = 1.0;
                DensityMatrix::from_diagonal(&p)
            }
            StateSpec::Coherent { beta } => {
                let dim = self.natural_dim();
                let amps = coherent_amplitudes(*beta, dim);
                let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                let amps: Vec<_> = amps.iter().map(|a| a / norm.sqrt()).collect();
                DensityMatrix::from_pure(&amps)
            }
        }
    }
}

fn coherent_amplitudes(beta: Complex64, dim: usize) -> Vec<Complex64> {
    let nbar = beta.norm_sqr();
    let mut out = Vec::with_capacity(dim);
    let mut amp = Complex64::new((-nbar / 2.0).exp(), 0.0);
    for k in 0..dim {
        if k > 0 {
            amp *= beta / (k as f64).sqrt();
        }
        out.push(amp);
    }
    out
}

/// Photon-number distribution `rho_00 .. rho_{dim-1,dim-1}`.
pub fn photon_distribution(state: &StateSpec, dim: usize) -> Result<PhotonDistribution> {
    if dim == 0 {
        return Err(Error::Argument("photon distribution needs dim >= 1".into()));
    }
    state.validate()?;
    let probs: Vec<f64> = match state {
        StateSpec::Coherent { beta } => {
            let nbar = beta.norm_sqr();
            (0..dim)
                .map(|k| {
                    if nbar == 0.0 {
                        if k == 0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        let kf = k as f64;
                        (-nbar + kf * nbar.ln() - ln_gamma(kf + 1.0)).exp()
                    }
                })
                .collect()
        }
        StateSpec::Fock { n } => (0..dim).map(|k| if k == *n { 1.0 } else { 0.0 }).collect(),
        StateSpec::Mixed(dm) => (0..dim)
            .map(|k| {
                if k < dm.dim {
                    dm.get(k, k).re.max(0.0)
                } else {
                    0.0
                }
            })
            .collect(),
    };
    let tail_mass = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    Ok(PhotonDistribution { probs, tail_mass })
}

/// Falling factorial `k (k-1) ... (k-j+1)` as a float.
fn falling(k: usize, j: usize) -> f64 {
    (0..j).map(|i| (k - i) as f64).product()
}

/// Normally ordered moment `<a†^n a^m>`.
///
/// For number-basis states the trace only touches matrix elements inside the
/// support of `rho`, which are exact, so no truncation error arises.
pub fn normal_moment(state: &StateSpec, n: usize, m: usize) -> Result<Complex64> {
    state.validate()?;
    Ok(match state {
        StateSpec::Coherent { beta } => beta.conj().powu(n as u32) * beta.powu(m as u32),
        StateSpec::Fock { n: k } => {
            if n == m && n <= *k {
                Complex64::new(falling(*k, n), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }
        StateSpec::Mixed(dm) => {
            // Tr[rho A] = sum_k rho[k, j] <j|a†^n a^m|k>, j = k - m + n.
            let d = dm.dim;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in m..d {
                let j = k - m + n;
                if j >= d {
                    continue;
                }
                let elem = (falling(k, m) * falling(j, n)).sqrt();
                acc += dm.get(k, j) * elem;
            }
            acc
        }
    })
}

/// Mean photon number.
pub fn mean_photon(state: &StateSpec) -> Result<f64> {
    Ok(normal_moment(state, 1, 1)?.re)
}

/// Photon-number variance `<n^2> - <n>^2`.
pub fn photon_number_variance(state: &StateSpec) -> Result<f64> {
    let nbar = mean_photon(state)?;
    let n2 = normal_moment(state, 2, 2)?.re + nbar;
    Ok(n2 - nbar * nbar)
}

/// Intrinsic variance of the quadrature at LO phase `phi`.
pub fn quadrature_variance(state: &StateSpec, phi: f64) -> Result<f64> {
    let a = normal_moment(state, 0, 1)?;
    let a2 = normal_moment(state, 0, 2)?;
    let nbar = mean_photon(state)?;
    let rot = Complex64::from_polar(1.0, -phi);
    let mean = (a * rot).re;
    // <x_phi^2> = 1/4 <a^2 e^{-2i phi} + h.c. + 2 a†a + 1>
    let second = 0.25 * (2.0 * (a2 * rot * rot).re + 2.0 * nbar + 1.0);
    Ok(second - mean * mean)
}

/// Normalized Hermite functions `psi_0 .. psi_{count-1}` of the variance-1/4
/// oscillator at `x`, via the stable three-term recurrence on the functions
/// themselves.
pub fn wavefunctions(count: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let xi = std::f64::consts::SQRT_2 * x;
    let psi0 = (2.0 / PI).powf(0.25) * (-x * x).exp();
    out.push(psi0);
    if count == 1 {
        return out;
    }
    out.push(std::f64::consts::SQRT_2 * xi * psi0);
    for k in 1..count - 1 {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * xi * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
        out.push(next);
    }
    out
}

/// Half-width of the quadrature grid used for number-basis states.
pub fn grid_half_width(dim: usize) -> f64 {
    3.0 + 2.0 * (dim as f64).sqrt()
}

/// Quadrature density prepared for a fixed state, LO phase and efficiency.
#[derive(Clone, Debug)]
pub struct QuadratureDensity {
    kind: DensityKind,
    smear_var: f64,
    support: f64,
}

#[derive(Clone, Debug)]
enum DensityKind {
    Gaussian {
        mean: f64,
        var: f64,
    },
    Number {
        dm: DensityMatrix,
        phases: Vec<Complex64>,
    },
}

impl QuadratureDensity {
    pub fn new(state: &StateSpec, phi: f64, eta: f64) -> Result<Self> {
        check_eta(eta)?;
        state.validate()?;
        let smear_var = (1.0 - eta) / (4.0 * eta);
        Ok(match state {
            StateSpec::Coherent { beta } => {
                let mean = (beta * Complex64::from_polar(1.0, -phi)).re;
                Self {
                    kind: DensityKind::Gaussian {
                        mean,
                        var: VACUUM_QUADRATURE_VARIANCE / eta,
                    },
                    smear_var: 0.0,
                    support: f64::INFINITY,
                }
            }
            _ => {
                let dm = state.to_density_matrix()?;
                let phases = (0..dm.dim)
                    .map(|k| Complex64::from_polar(1.0, k as f64 * phi))
                    .collect();
                Self {
                    support: grid_half_width(dm.dim) + 2.0,
                    kind: DensityKind::Number { dm, phases },
                    smear_var,
                }
            }
        })
    }

    /// Density of the ideal (unit-efficiency) quadrature.
    fn ideal(&self, x: f64) -> f64 {
        match &self.kind {
            DensityKind::Gaussian { mean, var } => {
                let d = x - mean;
                (-d * d / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
            }
            DensityKind::Number { dm, phases } => {
                let d = dm.dim;
                let psi = wavefunctions(d, x);
                // p = c† rho c with c_m = e^{i m phi} psi_m
                let c: Vec<Complex64> = psi.iter().zip(phases).map(|(p, e)| e * p).collect();
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..d {
                    if c[n].norm() == 0.0 {
                        continue;
                    }
                    let row: Complex64 =
                        c.iter().enumerate().map(|(m, cm)| dm.get(n, m) * cm).sum();
                    acc += c[n].conj() * row;
                }
                acc.re.max(0.0)
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.smear_var == 0.0 {
            return self.ideal(x);
        }
        // Trapezoid over the smearing Gaussian; the integrand is smooth and
        // decays at both ends, so the rule converges spectrally.
        let sigma = self.smear_var.sqrt();
        let lo = (x - 12.0 * sigma).max(-self.support);
        let hi = (x + 12.0 * sigma).min(self.support);
        if hi <= lo {
            return 0.0;
        }
        let dim = match &self.kind {
            DensityKind::Number { dm, .. } => dm.dim,
            DensityKind::Gaussian { .. } => 1,
        };
        let step = sigma.min(1.0 / (dim as f64).sqrt()) / 16.0;
        let steps = ((hi - lo) / step).ceil().max(2.0) as usize;
        let h = (hi - lo) / steps as f64;
        let norm = 1.0 / (2.0 * PI * self.smear_var).sqrt();
        let mut sum = 0.0;
        for i in 0..=steps {
            let y = lo + h * i as f64;
            let d = x - y;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            sum += w * self.ideal(y) * (-d * d / (2.0 * self.smear_var)).exp();
        }
        sum * h * norm
    }
}

/// Probability density of the homodyne outcome `x` at LO phase `phi` and efficiency `eta`.
pub fn quadrature_pdf(state: &StateSpec, phi: f64, eta: f64, x: f64) -> Result<f64> {
    Ok(QuadratureDensity::new(state, phi, eta)?.eval(x))
}
