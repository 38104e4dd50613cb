//! Scalar special functions used by the Green-function routines.

use super::quadrature::{integrate_adaptive, Tolerance};
use crate::error::Result;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `1/Γ(x)`, returning zero at the poles `x = 0, -1, -2, ...`.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / libm::tgamma(x)
    }
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

pub fn bessel_j1(x: f64) -> f64 {
    libm::j1(x)
}

/// Modified Bessel function `K_nu(r)` for real `nu` and `r > 0`, from
/// `K_nu(r) = ∫_0^∞ exp(-r cosh t) cosh(nu t) dt`.
pub fn bessel_k(nu: f64, r: f64) -> Result<f64> {
    // Beyond t_max the integrand is below exp(-r - 45) relative to its peak.
    let t_max = ((r + 45.0 + nu.abs() * 40.0) / r).acosh().max(1.0);
    let scaled = integrate_adaptive(
        |t| (-r * (t.cosh() - 1.0)).exp() * (nu * t).cosh(),
        0.0,
        t_max,
        Tolerance::relative(1e-14),
    )?;
    Ok(scaled * (-r).exp())
}
