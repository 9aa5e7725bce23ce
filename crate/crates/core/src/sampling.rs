//! Inverse-CDF sampling from a density tabulated on a uniform grid.

use crate::error::{Error, Result};

/// Minimum probability mass the grid must capture.
pub const GRID_MASS_TOL: f64 = 1e-6;
pub const GRID_NODES: usize = 4096;

/// Piecewise-linear density on `[-half, half]` with its exact cumulative.
#[derive(Clone, Debug)]
pub struct GridCdf {
    lo: f64,
    h: f64,
    pdf: Vec<f64>,
    cdf: Vec<f64>,
}

impl GridCdf {
    /// Tabulates `density` on `nodes` points. Fails if the trapezoid mass
    /// falls short of `1 - GRID_MASS_TOL`; the density is renormalized otherwise.
    pub fn new(density: impl Fn(f64) -> f64, half: f64, nodes: usize) -> Result<Self> {
        let lo = -half;
        let h = 2.0 * half / (nodes - 1) as f64;
        let pdf: Vec<f64> = (0..nodes)
            .map(|i| density(lo + h * i as f64).max(0.0))
            .collect();
        let mut cdf = Vec::with_capacity(nodes);
        cdf.push(0.0);
        for i in 1..nodes {
            cdf.push(cdf[i - 1] + 0.5 * h * (pdf[i - 1] + pdf[i]));
        }
        let mass = cdf[nodes - 1];
        if mass.is_nan() || mass < 1.0 - GRID_MASS_TOL {
            return Err(Error::Range(format!(
                "quadrature grid [-{half:.3}, {half:.3}] holds only {mass:.9} of the density; \
                 a wider grid extent is required"
            )));
        }
        let pdf = pdf.into_iter().map(|p| p / mass).collect();
        let cdf = cdf.into_iter().map(|c| c / mass).collect();
        Ok(Self { lo, h, pdf, cdf })
    }

    /// Maps a uniform variate in `[0, 1)` to a grid sample.
    pub fn sample(&self, u: f64) -> f64 {
        let i = self
            .cdf
            .partition_point(|&c| c <= u)
            .clamp(1, self.cdf.len() - 1)
            - 1;
        let (p0, p1) = (self.pdf[i], self.pdf[i + 1]);
        let r = u - self.cdf[i];
        // CDF within the cell: p0 t + (p1 - p0) t^2 / (2h)
        let a = (p1 - p0) / (2.0 * self.h);
        let disc = (p0 * p0 + 4.0 * a * r).max(0.0);
        let denom = p0 + disc.sqrt();
        let t = if denom > 0.0 {
            2.0 * r / denom
        } else {
            0.5 * self.h
        };
        self.lo + self.h * i as f64 + t.clamp(0.0, self.h)
    }

    pub fn density(&self, x: f64) -> f64 {
        let s = (x - self.lo) / self.h;
        if s < 0.0 || s > (self.pdf.len() - 1) as f64 {
            return 0.0;
        }
        let i = (s.floor() as usize).min(self.pdf.len() - 2);
        let t = s - i as f64;
        self.pdf[i] * (1.0 - t) + self.pdf[i + 1] * t
    }
}
