//! Coefficients of the large-argument expansion of `Ψ_{d,α}`, recovered by
//! least squares against the oracle.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::oracle::radial_green;
use crate::error::{invalid, Error, Result};
use crate::fracmath::FracOrder;

/// Truncation levels above this are not supported.
pub const MAX_TERMS: usize = 5;

/// Coefficients of the large-`r` expansion
/// `Ψ_{j,α}(r) ≈ exp(-a0 ρ) r^{-γ_j} Σ_k a_{j,k} ρ^{-k}` with `ρ = r^{2/(2-α)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenCoeffs {
    pub d: usize,
    pub alpha: f64,
    pub a0: f64,
    /// One-dimensional coefficients `a_{1,k}` (drive the `d = 3` series).
    pub a1: Vec<f64>,
    /// Two-dimensional coefficients `a_{2,k}`.
    pub a2: Vec<f64>,
    /// Max relative deviation of the `N`-term series from the oracle on
    /// `r ∈ [5, 30]`, for the `j = d` (or `j = 1` when `d = 3`) family.
    pub residual: f64,
}

/// Sampling window and model size used by [`fit_green_coeffs_with`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub r_min: f64,
    pub r_max: f64,
    pub samples: usize,
    /// Number of series terms in the full model before truncation.
    pub model_terms: usize,
    /// Largest admissible relative misfit of the full model.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            r_min: 5.0,
            r_max: 60.0,
            samples: 96,
            model_terms: 8,
            tolerance: 1e-6,
        }
    }
}

/// Power `γ_j` of the algebraic prefactor `r^{-γ_j}` for family `j ∈ {1, 2}`.
pub fn prefactor_power(j: usize, alpha: f64) -> f64 {
    match j {
        1 => (1.0 - alpha) / (2.0 - alpha),
        _ => (2.0 - 2.0 * alpha) / (2.0 - alpha),
    }
}

pub fn fit_green_coeffs(d: usize, alpha: FracOrder, n: usize) -> Result<GreenCoeffs> {
    fit_green_coeffs_with(d, alpha.value(), n, FitOptions::default())
}

/// Fits `a0` and the coefficient families against [`radial_green`]; `alpha`
/// may be `1` for the classical limit.
pub fn fit_green_coeffs_with(d: usize, alpha: f64, n: usize, opts: FitOptions) -> Result<GreenCoeffs> {
    if d != 2 && d != 3 {
        return Err(invalid(format!("coefficients are fitted for d = 2 or 3, got {d}")));
    }
    if n == 0 || n > MAX_TERMS {
        return Err(invalid(format!("truncation level must lie in 1..={MAX_TERMS}, got {n}")));
    }
    FracOrder::with_limit(alpha)?;
    let q = 2.0 / (2.0 - alpha);
    let radii: Vec<f64> = (0..opts.samples)
        .map(|i| {
            // uniform in ρ
            let t = i as f64 / (opts.samples - 1) as f64;
            let rho = opts.r_min.powf(q) + t * (opts.r_max.powf(q) - opts.r_min.powf(q));
            rho.powf(1.0 / q)
        })
        .collect();
    let sample = |j: usize| -> Result<Vec<f64>> { radii.par_iter().map(|&r| radial_green(j, alpha, r)).collect() };
    let mut psi1 = sample(1)?;
    let mut psi2 = sample(2)?;
    // Drop the far tail where the oracle underflows (classical limit).
    let keep = psi1.iter().zip(&psi2).take_while(|(a, b)| a.min(**b) > 1e-280).count();
    if keep < 2 * opts.model_terms {
        return Err(invalid("fit window leaves too few representable oracle samples"));
    }
    let mut radii = radii;
    radii.truncate(keep);
    psi1.truncate(keep);
    psi2.truncate(keep);
    let rho: Vec<f64> = radii.iter().map(|r| r.powf(q)).collect();

    let a0 = fit_exponent(&radii, &rho, &psi2, prefactor_power(2, alpha), opts.model_terms)?;
    let full1 = fit_family(&radii, &rho, &psi1, prefactor_power(1, alpha), a0, opts.model_terms)?;
    let full2 = fit_family(&radii, &rho, &psi2, prefactor_power(2, alpha), a0, opts.model_terms)?;
    for (j, full, psi) in [(1, &full1, &psi1), (2, &full2, &psi2)] {
        let misfit = radii
            .iter()
            .zip(psi)
            .map(|(&r, &p)| ((family_series(j, alpha, a0, full, r) - p) / p).abs())
            .fold(0.0, f64::max);
        if misfit > opts.tolerance {
            return Err(Error::FitResidual {
                residual: misfit,
                tolerance: opts.tolerance,
            });
        }
    }
    let mut coeffs = GreenCoeffs {
        d,
        alpha,
        a0,
        a1: full1[..n].to_vec(),
        a2: full2[..n].to_vec(),
        residual: 0.0,
    };
    coeffs.residual = truncation_residual(&coeffs)?;
    Ok(coeffs)
}

/// `exp(-a0 ρ) r^{-γ_j} Σ_k c_k ρ^{-k}`.
pub fn family_series(j: usize, alpha: f64, a0: f64, c: &[f64], r: f64) -> f64 {
    let q = 2.0 / (2.0 - alpha);
    let rho = r.powf(q);
    let mut sum = 0.0;
    let mut pw = 1.0;
    for &ck in c {
        sum += ck * pw;
        pw /= rho;
    }
    (-a0 * rho).exp() * r.powf(-prefactor_power(j, alpha)) * sum
}

fn truncation_residual(c: &GreenCoeffs) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..=50 {
        let r = 5.0 + 25.0 * i as f64 / 50.0;
        let exact = radial_green(c.d, c.alpha, r)?;
        let approx = super::series::series_value(c, c.a1.len(), r);
        worst = worst.max(((approx - exact) / exact).abs());
    }
    Ok(worst)
}

/// Log-linear regression `ln(Ψ r^γ) = c - a0 ρ + Σ_{k≥1} c_k ρ^{-k}`.
fn fit_exponent(r: &[f64], rho: &[f64], psi: &[f64], gamma: f64, terms: usize) -> Result<f64> {
    let m = r.len();
    let cols = terms + 1;
    let mut a = DMatrix::zeros(m, cols);
    let mut b = DVector::zeros(m);
    for i in 0..m {
        a[(i, 0)] = 1.0;
        a[(i, 1)] = -rho[i];
        for k in 1..terms {
            a[(i, k + 1)] = rho[i].powi(-(k as i32));
        }
        b[i] = psi[i].ln() + gamma * r[i].ln();
    }
    let x = scaled_lstsq(a, b)?;
    Ok(x[1])
}

/// Relative least squares for `Ψ r^γ exp(a0 ρ) = Σ_k c_k ρ^{-k}`.
fn fit_family(r: &[f64], rho: &[f64], psi: &[f64], gamma: f64, a0: f64, terms: usize) -> Result<Vec<f64>> {
    let m = r.len();
    let mut a = DMatrix::zeros(m, terms);
    let mut b = DVector::zeros(m);
    for i in 0..m {
        let target = psi[i] * r[i].powf(gamma) * (a0 * rho[i]).exp();
        for k in 0..terms {
            a[(i, k)] = rho[i].powi(-(k as i32)) / target;
        }
        b[i] = 1.0;
    }
    Ok(scaled_lstsq(a, b)?.iter().copied().collect())
}

/// Least squares with column equilibration, solved through the SVD.
fn scaled_lstsq(mut a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    let scales: Vec<f64> = (0..a.ncols()).map(|j| a.column(j).norm().max(1e-300)).collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = nalgebra::SVD::try_new(a, true, true, 1e-15, 10_000)
        .ok_or_else(|| Error::Quadrature("least-squares SVD did not converge".into()))?;
    let mut x = svd
        .solve(&b, 1e-15)
        .map_err(|e| Error::Quadrature(format!("least-squares solve failed: {e}")))?;
    for (j, s) in scales.iter().enumerate() {
        x[j] /= s;
    }
    Ok(x)
}

impl GreenCoeffs {
    pub fn n_terms(&self) -> usize {
        self.a1.len().min(self.a2.len())
    }

    /// Plain-text table: one `key value...` line per field.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(" ");
        writeln!(s, "d {}", self.d).unwrap();
        writeln!(s, "alpha {:.17e}", self.alpha).unwrap();
        writeln!(s, "N {}", self.n_terms()).unwrap();
        writeln!(s, "a0 {:.17e}", self.a0).unwrap();
        writeln!(s, "a1 {}", join(&self.a1)).unwrap();
        writeln!(s, "a2 {}", join(&self.a2)).unwrap();
        writeln!(s, "residual {:.17e}", self.residual).unwrap();
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut d = None;
        let mut alpha = None;
        let mut n = None;
        let mut a0 = None;
        let mut a1 = None;
        let mut a2 = None;
        let mut residual = 0.0;
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")));
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let rest: Vec<&str> = parts.collect();
            let one = || rest.first().copied().ok_or_else(|| Error::Parse(format!("missing value for {key}")));
            match key {
                "d" => d = Some(one()?.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?),
                "alpha" => alpha = Some(num(one()?)?),
                "N" => n = Some(one()?.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?),
                "a0" => a0 = Some(num(one()?)?),
                "a1" => a1 = Some(rest.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?),
                "a2" => a2 = Some(rest.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?),
                "residual" => residual = num(one()?)?,
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("coefficient table lacks {k}"));
        let c = GreenCoeffs {
            d: d.ok_or_else(|| missing("d"))?,
            alpha: alpha.ok_or_else(|| missing("alpha"))?,
            a0: a0.ok_or_else(|| missing("a0"))?,
            a1: a1.ok_or_else(|| missing("a1"))?,
            a2: a2.ok_or_else(|| missing("a2"))?,
            residual,
        };
        if let Some(n) = n {
            if c.a1.len() != n || c.a2.len() != n {
                return Err(Error::Parse(format!("N = {n} disagrees with coefficient counts")));
            }
        }
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
