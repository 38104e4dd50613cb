//! One-parameter Mittag-Leffler function on the non-positive real axis.

use std::f64::consts::PI;

use super::quadrature::{integrate_adaptive_breaks, Tolerance};
use super::special::{gamma, rgamma};
use crate::error::{invalid, Error, Result};

const TAYLOR_RADIUS: f64 = 1.0;
const ASYMPTOTIC_RADIUS: f64 = 40.0;

/// `E_alpha(z)` for `alpha ∈ (0, 1]` and `z ≤ 0`.
pub fn mittag_leffler(alpha: f64, z: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("Mittag-Leffler order must lie in (0, 1], got {alpha}")));
    }
    if !(z <= 0.0) {
        return Err(invalid(format!("Mittag-Leffler argument must be non-positive, got {z}")));
    }
    if alpha == 1.0 {
        return Ok(z.exp());
    }
    let x = -z;
    if x <= TAYLOR_RADIUS {
        Ok(taylor(alpha, z))
    } else if x >= ASYMPTOTIC_RADIUS {
        Ok(asymptotic(alpha, z))
    } else {
        integral(alpha, x)
    }
}

fn taylor(alpha: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut zk = 1.0;
    for k in 0..200 {
        let term = zk / gamma(alpha * k as f64 + 1.0);
        sum += term;
        if k > 2 && term.abs() < 1e-18 {
            break;
        }
        zk *= z;
    }
    sum
}

fn asymptotic(alpha: f64, z: f64) -> f64 {
    let mut sum = 0.0;
    let mut zk = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        zk /= z;
        let term = -zk * rgamma(1.0 - alpha * k as f64);
        if term.abs() > last && term != 0.0 {
            break;
        }
        sum += term;
        if term != 0.0 {
            last = term.abs();
            if last < 1e-18 * sum.abs() {
                break;
            }
        }
    }
    sum
}

// E_a(-x) = sin(a pi)/(a pi) * x * ∫_0^∞ exp(-w^{1/a}) / (w^2 + 2 w x cos(a pi) + x^2) dw
fn integral(alpha: f64, x: f64) -> Result<f64> {
    let c = (alpha * PI).cos();
    let upper = 45f64.powf(alpha);
    let mut breaks = vec![0.0];
    let peak = -x * c;
    if peak > 0.0 && peak < upper {
        breaks.push(peak);
    }
    breaks.push(upper);
    let mut f = |w: f64| (-w.powf(1.0 / alpha)).exp() / (w * w + 2.0 * w * x * c + x * x);
    let v = integrate_adaptive_breaks(&mut f, &breaks, Tolerance::relative(1e-14))
        .map_err(|e| Error::Quadrature(format!("Mittag-Leffler integral at alpha={alpha}, x={x}: {e}")))?;
    Ok((alpha * PI).sin() / (alpha * PI) * x * v)
}
