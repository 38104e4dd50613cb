//! Tabulated exact reduced Green function with cubic Hermite interpolation
//! of `ln Ψ` in `ln r`.

use rayon::prelude::*;

use super::oracle::{radial_green, radial_green_derivative};
use crate::error::{invalid, Result};
use crate::fracmath::FracOrder;

#[derive(Debug, Clone)]
pub struct OracleTable {
    d: usize,
    alpha: f64,
    log_r: Vec<f64>,
    log_psi: Vec<f64>,
    // d ln Ψ / d ln r
    slope: Vec<f64>,
}

impl OracleTable {
    pub fn new(d: usize, alpha: FracOrder, r_min: f64, r_max: f64, points: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min) || points < 2 {
            return Err(invalid("oracle table needs 0 < r_min < r_max and at least two points"));
        }
        let (lo, hi) = (r_min.ln(), r_max.ln());
        let log_r: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
        let a = alpha.value();
        let rows: Vec<(f64, f64)> = log_r
            .par_iter()
            .map(|&u| {
                let r = u.exp();
                let v = radial_green(d, a, r)?;
                let dv = radial_green_derivative(d, alpha, r)?;
                Ok((v.ln(), r * dv / v))
            })
            .collect::<Result<_>>()?;
        let (log_psi, slope) = rows.into_iter().unzip();
        Ok(Self { d, alpha: a, log_r, log_psi, slope })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn r_min(&self) -> f64 {
        self.log_r[0].exp()
    }

    pub fn r_max(&self) -> f64 {
        self.log_r[self.log_r.len() - 1].exp()
    }

    fn locate(&self, u: f64) -> (usize, f64, f64) {
        let h = self.log_r[1] - self.log_r[0];
        let i = (((u - self.log_r[0]) / h).floor() as usize).min(self.log_r.len() - 2);
        (i, (u - self.log_r[i]) / h, h)
    }

    // (ln Ψ, d ln Ψ / d ln r)
    fn interpolate(&self, r: f64) -> (f64, f64) {
        let (i, s, h) = self.locate(r.ln());
        let (y0, y1) = (self.log_psi[i], self.log_psi[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let y = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1;
        let dy = ((6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * m1) / h;
        (y, dy)
    }

    /// `Ψ_{d,α}(r)`; zero beyond the table and the direct oracle below it.
    pub fn value(&self, r: f64) -> f64 {
        if r > self.r_max() {
            0.0
        } else if r < self.r_min() {
            radial_green(self.d, self.alpha, r).unwrap_or(f64::NAN)
        } else {
            self.interpolate(r).0.exp()
        }
    }

    /// `dΨ_{d,α}/dr`.
    pub fn derivative(&self, r: f64) -> f64 {
        if r > self.r_max() {
            0.0
        } else if r < self.r_min() {
            FracOrder::with_limit(self.alpha)
                .and_then(|a| radial_green_derivative(self.d, a, r))
                .unwrap_or(f64::NAN)
        } else {
            let (y, dy) = self.interpolate(r);
            y.exp() * dy / r
        }
    }
}
