//! Tomographic kernels: state-independent functions of a homodyne event
//! `(x, phi)` whose average over the data equals the expectation of an
//! operator.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ddouble::Dd;
use crate::error::{check_eta, Error, Result};

/// Highest Hermite order evaluated in double precision.
pub const MAX_ORDER: usize = 40;
/// Highest `n + m` accepted by the square-kernel expansion (its terms reach order `2(n+m)`).
pub const MAX_SQUARE_ORDER: usize = MAX_ORDER / 2;

fn check_order(order: usize, max: usize) -> Result<()> {
    if order > max {
        Err(Error::Order { order, max })
    } else {
        Ok(())
    }
}

/// Physicists' Hermite polynomials `H_0(y) .. H_s(y)`.
fn hermite_upto(s: usize, y: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(s + 1);
    h.push(1.0);
    if s >= 1 {
        h.push(2.0 * y);
    }
    for k in 1..s {
        let next = 2.0 * y * h[k] - 2.0 * k as f64 * h[k - 1];
        h.push(next);
    }
    h
}

/// Physicists' Hermite polynomial `H_s(y)` by the three-term recurrence.
pub fn hermite(s: usize, y: f64) -> Result<f64> {
    check_order(s, MAX_ORDER)?;
    Ok(hermite_upto(s, y)[s])
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

/// Kernel of the normally ordered monomial `a†^n a^m`:
/// `e^{i(m-n)phi} H_{n+m}(sqrt(2 eta) x) / ((2 eta)^{(n+m)/2} C(n+m, n))`.
pub fn kernel_monomial(n: usize, m: usize, eta: f64, x: f64, phi: f64) -> Result<Complex64> {
    check_order(n + m, MAX_ORDER)?;
    check_eta(eta)?;
    Ok(monomial_unchecked(n, m, eta, x, phi))
}

fn monomial_unchecked(n: usize, m: usize, eta: f64, x: f64, phi: f64) -> Complex64 {
    let s = n + m;
    let h = hermite_upto(s, (2.0 * eta).sqrt() * x)[s];
    let radial = h / ((2.0 * eta).powf(s as f64 / 2.0) * binomial(s, n));
    Complex64::from_polar(radial, (m as f64 - n as f64) * phi)
}

/// Phase kernel value `arg(x e^{i phi})` in `(-pi, pi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseKernel {
    pub value: f64,
    /// `x == 0`: the argument is undefined and `phi` is returned instead.
    pub degenerate: bool,
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

pub fn phase_kernel(x: f64, phi: f64) -> PhaseKernel {
    if x > 0.0 {
        PhaseKernel {
            value: wrap_angle(phi),
            degenerate: false,
        }
    } else if x < 0.0 {
        PhaseKernel {
            value: wrap_angle(phi + PI),
            degenerate: false,
        }
    } else {
        PhaseKernel {
            value: wrap_angle(phi),
            degenerate: true,
        }
    }
}

/// Normal-ordered coefficients `f_nm` of `sum f_nm a†^n a^m`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<(usize, usize), Complex64>,
}

impl Polynomial {
    pub fn new(terms: impl IntoIterator<Item = ((usize, usize), Complex64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for ((n, m), c) in terms {
            check_order(n + m, MAX_ORDER)?;
            *map.entry((n, m)).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        Ok(Self { terms: map })
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(usize, usize), &Complex64)> {
        self.terms.iter()
    }

    pub fn max_order(&self) -> usize {
        self.terms.keys().map(|(n, m)| n + m).max().unwrap_or(0)
    }

    /// `f_nm = conj(f_mn)`: the operator, and hence its kernel, is real.
    pub fn is_hermitian(&self) -> bool {
        let zero = Complex64::new(0.0, 0.0);
        self.terms.iter().all(|(&(n, m), c)| {
            let partner = self.terms.get(&(m, n)).copied().unwrap_or(zero);
            (c - partner.conj()).norm() <= 1e-12 * (1.0 + c.norm())
        })
    }
}

/// Quantity measured by averaging a kernel over homodyne data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservableRepr", into = "ObservableRepr")]
pub enum Observable {
    Intensity,
    RealField,
    ComplexAmplitude,
    Phase,
    Monomial { n: usize, m: usize },
    Polynomial(Polynomial),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "observable", rename_all = "snake_case", deny_unknown_fields)]
enum ObservableRepr {
    Intensity,
    RealField,
    ComplexAmplitude,
    Phase,
    Monomial { n: usize, m: usize },
    Polynomial { terms: Vec<TermRepr> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRepr {
    n: usize,
    m: usize,
    c: [f64; 2],
}

impl TryFrom<ObservableRepr> for Observable {
    type Error = Error;

    fn try_from(r: ObservableRepr) -> Result<Self> {
        Ok(match r {
            ObservableRepr::Intensity => Observable::Intensity,
            ObservableRepr::RealField => Observable::RealField,
            ObservableRepr::ComplexAmplitude => Observable::ComplexAmplitude,
            ObservableRepr::Phase => Observable::Phase,
            ObservableRepr::Monomial { n, m } => {
                check_order(n + m, MAX_ORDER)?;
                Observable::Monomial { n, m }
            }
            ObservableRepr::Polynomial { terms } => Observable::Polynomial(Polynomial::new(
                terms
                    .into_iter()
                    .map(|t| ((t.n, t.m), Complex64::new(t.c[0], t.c[1]))),
            )?),
        })
    }
}

impl From<Observable> for ObservableRepr {
    fn from(o: Observable) -> Self {
        match o {
            Observable::Intensity => ObservableRepr::Intensity,
            Observable::RealField => ObservableRepr::RealField,
            Observable::ComplexAmplitude => ObservableRepr::ComplexAmplitude,
            Observable::Phase => ObservableRepr::Phase,
            Observable::Monomial { n, m } => ObservableRepr::Monomial { n, m },
            Observable::Polynomial(p) => ObservableRepr::Polynomial {
                terms: p
                    .terms
                    .iter()
                    .map(|(&(n, m), c)| TermRepr {
                        n,
                        m,
                        c: [c.re, c.im],
                    })
                    .collect(),
            },
        }
    }
}

impl Observable {
    /// The four field quantities compared against direct detection.
    pub const FIELD_QUANTITIES: [Observable; 4] = [
        Observable::Intensity,
        Observable::RealField,
        Observable::ComplexAmplitude,
        Observable::Phase,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Observable::Intensity => "intensity",
            Observable::RealField => "real_field",
            Observable::ComplexAmplitude => "complex_amplitude",
            Observable::Phase => "phase",
            Observable::Monomial { .. } => "monomial",
            Observable::Polynomial(_) => "polynomial",
        }
    }

    pub fn is_real_valued(&self) -> bool {
        match self {
            Observable::Intensity | Observable::RealField | Observable::Phase => true,
            Observable::ComplexAmplitude => false,
            Observable::Monomial { n, m } => n == m,
            Observable::Polynomial(p) => p.is_hermitian(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Observable::Monomial { n, m } => check_order(n + m, MAX_ORDER),
            Observable::Polynomial(p) => check_order(p.max_order(), MAX_ORDER),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Monomial { n, m } => write!(f, "monomial({n},{m})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    /// Accepts the bare names of the four field quantities or a JSON object.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.starts_with('{') {
            return Ok(serde_json::from_str(t)?);
        }
        Ok(match t {
            "intensity" => Observable::Intensity,
            "real_field" => Observable::RealField,
            "complex_amplitude" => Observable::ComplexAmplitude,
            "phase" => Observable::Phase,
            other => return Err(Error::Parse(format!("unknown observable `{other}`"))),
        })
    }
}

/// Kernel of an observable at one homodyne event. Real observables return a
/// zero imaginary part; the phase kernel at `x == 0` returns `phi`.
pub fn kernel_observable(obs: &Observable, eta: f64, x: f64, phi: f64) -> Result<Complex64> {
    check_eta(eta)?;
    Ok(match obs {
        Observable::Intensity => Complex64::new(2.0 * x * x - 1.0 / (2.0 * eta), 0.0),
        Observable::RealField => Complex64::new(2.0 * x * phi.cos(), 0.0),
        Observable::ComplexAmplitude => Complex64::from_polar(2.0 * x, phi),
        Observable::Phase => Complex64::new(phase_kernel(x, phi).value, 0.0),
        Observable::Monomial { n, m } => kernel_monomial(*n, *m, eta, x, phi)?,
        Observable::Polynomial(p) => kernel_polynomial(p, eta, x, phi)?,
    })
}

/// Kernel of a normal-ordered polynomial, by linearity over monomials.
pub fn kernel_polynomial(poly: &Polynomial, eta: f64, x: f64, phi: f64) -> Result<Complex64> {
    check_eta(eta)?;
    check_order(poly.max_order(), MAX_ORDER)?;
    let h = hermite_upto(poly.max_order(), (2.0 * eta).sqrt() * x);
    Ok(poly
        .terms
        .iter()
        .map(|(&(n, m), c)| {
            let s = n + m;
            let radial = h[s] / ((2.0 * eta).powf(s as f64 / 2.0) * binomial(s, n));
            c * Complex64::from_polar(radial, (m as f64 - n as f64) * phi)
        })
        .sum())
}

/// Square of the monomial kernel expanded over diagonal kernels `R[a†^k a^k]`:
///
/// `e^{2i phi (m-n)} n!^2 m!^2 / eta^{n+m} * sum_k (2k)! eta^k / (k!^4 (n+m-k)!) R[a†^k a^k]`.
///
/// The terms of the sum cancel by up to ~11 orders of magnitude at `n + m = 10`,
/// so the expansion is carried out in double-double arithmetic.
pub fn square_kernel_monomial(n: usize, m: usize, eta: f64, x: f64, phi: f64) -> Result<Complex64> {
    check_order(n + m, MAX_SQUARE_ORDER)?;
    check_eta(eta)?;
    let s = n + m;
    let two_eta = Dd::from_f64(2.0) * Dd::from_f64(eta);
    let y = two_eta.sqrt() * Dd::from_f64(x);
    let two_y = Dd::from_f64(2.0) * y;
    let mut h = Vec::with_capacity(2 * s + 1);
    h.push(Dd::ONE);
    h.push(two_y);
    for k in 1..2 * s {
        let next = two_y * h[k] - Dd::from_f64(2.0 * k as f64) * h[k - 1];
        h.push(next);
    }
    let eta_dd = Dd::from_f64(eta);
    let mut sum = Dd::ZERO;
    for k in 0..=s {
        let kf = Dd::factorial(k);
        // R[a†^k a^k] = H_2k / ((2 eta)^k C(2k, k)) with C(2k, k) = (2k)! / k!^2
        let f2k = Dd::factorial(2 * k);
        let diag = h[2 * k] * kf * kf / (two_eta.powi(k as u32) * f2k);
        let coeff = f2k * eta_dd.powi(k as u32) / (kf.powi(4) * Dd::factorial(s - k));
        sum = sum + coeff * diag;
    }
    let nm = Dd::factorial(n) * Dd::factorial(m);
    let value = nm * nm * sum / eta_dd.powi(s as u32);
    Ok(Complex64::from_polar(
        value.to_f64(),
        2.0 * phi * (m as f64 - n as f64),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite(0, 3.7).unwrap(), 1.0);
        assert_eq!(hermite(2, 1.0).unwrap(), 2.0);
        // explicit coefficients 16y^4 - 48y^2 + 12 at y = 0.5
        let y: f64 = 0.5;
        let explicit = 16.0 * y.powi(4) - 48.0 * y * y + 12.0;
        assert_eq!(explicit, 1.0);
        assert!((hermite(4, y).unwrap() - explicit).abs() < 1e-14);
        assert!(matches!(
            hermite(41, 0.0),
            Err(Error::Order { order: 41, max: 40 })
        ));
    }

    #[test]
    fn monomial_examples() {
        let (eta, x, phi) = (0.7, 0.9, 1.1);
        assert_eq!(
            kernel_monomial(0, 0, eta, x, phi).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let k = kernel_monomial(0, 1, eta, x, phi).unwrap();
        assert!((k - Complex64::from_polar(2.0 * x, phi)).norm() < 1e-14);
        let k = kernel_monomial(1, 1, eta, x, phi).unwrap();
        assert!((k.re - (2.0 * x * x - 1.0 / (2.0 * eta))).abs() < 1e-14);
        assert!(k.im.abs() < 1e-15);
        assert!(kernel_monomial(30, 11, eta, x, phi).is_err());
        assert!(matches!(
            kernel_monomial(1, 1, 0.0, x, phi),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn observable_examples() {
        let k =
            |o: &Observable, eta: f64, x: f64, phi: f64| kernel_observable(o, eta, x, phi).unwrap();
        assert_eq!(k(&Observable::Intensity, 1.0, 1.0, 0.4).re, 1.5);
        assert!((k(&Observable::Phase, 1.0, -1.0, 0.3).re - (0.3 - PI)).abs() < 1e-15);
        assert!(k(&Observable::RealField, 1.0, 0.7, PI / 2.0).re.abs() < 1e-15);
        let amp = k(&Observable::ComplexAmplitude, 0.5, 0.4, 0.2);
        assert!((amp - Complex64::from_polar(0.8, 0.2)).norm() < 1e-15);
        let mono = k(&Observable::Monomial { n: 1, m: 1 }, 0.6, 0.3, 0.0);
        assert!((mono.re - k(&Observable::Intensity, 0.6, 0.3, 0.0).re).abs() < 1e-14);
    }

    #[test]
    fn phase_kernel_branches() {
        assert_eq!(phase_kernel(-2.0, 0.0).value, PI);
        assert_eq!(phase_kernel(1.0, 0.5).value, 0.5);
        let d = phase_kernel(0.0, 0.8);
        assert!(d.degenerate);
        assert_eq!(d.value, 0.8);
        for i in 0..100 {
            let phi = i as f64 * PI / 100.0;
            for x in [-1.0, 1.0] {
                let w = phase_kernel(x, phi).value;
                assert!(w > -PI && w <= PI);
                assert!(
                    (Complex64::from_polar(1.0, w) - Complex64::from_polar(x, phi)).norm() < 1e-12
                );
            }
        }
    }

    #[test]
    fn polynomial_examples() {
        let c = |re: f64| Complex64::new(re, 0.0);
        let number = Polynomial::new([((1, 1), c(1.0))]).unwrap();
        let field = Polynomial::new([((0, 1), c(0.5)), ((1, 0), c(0.5))]).unwrap();
        let fourth = Polynomial::new([((2, 2), c(1.0))]).unwrap();
        for &(eta, x, phi) in &[(1.0, 0.3, 0.2), (0.6, -1.2, 2.5)] {
            let a = kernel_polynomial(&number, eta, x, phi).unwrap();
            let b = kernel_observable(&Observable::Intensity, eta, x, phi).unwrap();
            assert!((a - b).norm() < 1e-14);
            let f = kernel_polynomial(&field, eta, x, phi).unwrap();
            assert!((f.re - 2.0 * x * phi.cos()).abs() < 1e-14 && f.im.abs() < 1e-14);
        }
        // H_4(0) / (2^2 C(4,2)) = 12 / 24
        assert!((kernel_polynomial(&fourth, 1.0, 0.0, 0.0).unwrap().re - 0.5).abs() < 1e-15);
        assert!(field.is_hermitian());
        assert!(!Polynomial::new([((0, 1), c(1.0))]).unwrap().is_hermitian());
        assert!(Polynomial::new([((20, 21), c(1.0))]).is_err());
    }

    #[test]
    fn square_kernel_examples() {
        assert!((square_kernel_monomial(0, 0, 0.8, 1.3, 0.1).unwrap() - 1.0).norm() < 1e-14);
        assert!((square_kernel_monomial(1, 1, 1.0, 1.0, 0.0).unwrap().re - 2.25).abs() < 1e-13);
        let mut worst = 0.0_f64;
        for i in 0..1000 {
            let x = -5.0 + 10.0 * i as f64 / 999.0;
            let direct = kernel_monomial(0, 2, 1.0, x, 0.4).unwrap().powi(2);
            let expanded = square_kernel_monomial(0, 2, 1.0, x, 0.4).unwrap();
            worst = worst.max((expanded - direct).norm() / direct.norm());
        }
        assert!(worst < 1e-9, "worst={worst}");
        assert!(square_kernel_monomial(10, 11, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn observable_json_schema() {
        let o: Observable = serde_json::from_str(r#"{"observable":"real_field"}"#).unwrap();
        assert_eq!(o, Observable::RealField);
        let o: Observable =
            serde_json::from_str(r#"{"observable":"monomial","n":2,"m":1}"#).unwrap();
        assert_eq!(o, Observable::Monomial { n: 2, m: 1 });
        let o: Observable = serde_json::from_str(
            r#"{"observable":"polynomial","terms":[{"n":0,"m":1,"c":[0.5,0]},{"n":1,"m":0,"c":[0.5,0]}]}"#,
        )
        .unwrap();
        assert!(o.is_real_valued());
        let back: Observable = serde_json::from_str(&serde_json::to_string(&o).unwrap()).unwrap();
        assert_eq!(back, o);
        assert_eq!("phase".parse::<Observable>().unwrap(), Observable::Phase);
        assert!("bogus".parse::<Observable>().is_err());
        assert!(
            serde_json::from_str::<Observable>(r#"{"observable":"monomial","n":40,"m":1}"#)
                .is_err()
        );
    }

    proptest! {
        #[test]
        fn monomial_conjugation_symmetry(n in 0usize..12, m in 0usize..12,
                                         eta in 0.2f64..=1.0, x in -4.0f64..4.0, phi in 0.0f64..PI) {
            let a = kernel_monomial(n, m, eta, x, phi).unwrap();
            let b = kernel_monomial(m, n, eta, x, phi).unwrap();
            prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
        }

        #[test]
        fn wrap_angle_lands_in_half_open_interval(a in -50.0f64..50.0) {
            let w = wrap_angle(a);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!((Complex64::from_polar(1.0, w) - Complex64::from_polar(1.0, a)).norm() < 1e-9);
        }
    }
}
