//! Reduced Green functions evaluated without series truncation.
//!
//! The fundamental solution of the fractional problem is a subordinated heat
//! kernel, `Ψ_d(r) = ∫_0^∞ M_α(s) (4πs)^{-d/2} exp(-r²/(4s)) ds`, with `M_α`
//! the M-Wright density. `M_α` is written as an integral over `φ ∈ (0, π)`
//! whose integrand is positive, so both integrals are free of cancellation
//! and retain full relative accuracy far into the tail.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::fracmath::quadrature::{integrate_adaptive_breaks, Tolerance};
use crate::fracmath::FracOrder;

const OUTER_TOL: f64 = 1e-11;
const INNER_TOL: f64 = 1e-13;
// Integrand is cut where it falls below exp(-LOG_CUT) of its peak.
const LOG_CUT: f64 = 48.0;

/// `Ψ_{d,α}(r)` for `d ∈ {2, 3}`.
pub fn reduced_green_oracle(d: usize, alpha: FracOrder, r: f64) -> Result<f64> {
    if d != 2 && d != 3 {
        return Err(invalid(format!("reduced Green oracle supports d = 2 or 3, got {d}")));
    }
    radial_green(d, alpha.value(), r)
}

/// `Ψ_{1,α}(r)`, the one-dimensional reduced Green function.
pub fn line_green_oracle(alpha: FracOrder, r: f64) -> Result<f64> {
    radial_green(1, alpha.value(), r)
}

/// Radial derivative `dΨ_{d,α}/dr` for `d ∈ {1, 2, 3}`.
pub fn radial_green_derivative(d: usize, alpha: FracOrder, r: f64) -> Result<f64> {
    check(d, r)?;
    let a = alpha.value();
    let norm = (4.0 * PI).powf(-(d as f64) / 2.0);
    if a == 1.0 {
        return Ok(-0.5 * r * norm * (-r * r / 4.0).exp());
    }
    Ok(-0.5 * r * norm * subordinated_moment(a, -(d as f64) / 2.0 - 1.0, r)?)
}

/// `Ψ_{d,α}(r)` for `d ∈ {1, 2, 3}` and `α ∈ (0, 1]`.
pub fn radial_green(d: usize, alpha: f64, r: f64) -> Result<f64> {
    check(d, r)?;
    let norm = (4.0 * PI).powf(-(d as f64) / 2.0);
    if alpha == 1.0 {
        return Ok(norm * (-r * r / 4.0).exp());
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("fractional order must lie in (0, 1], got {alpha}")));
    }
    Ok(norm * subordinated_moment(alpha, -(d as f64) / 2.0, r)?)
}

fn check(d: usize, r: f64) -> Result<()> {
    if !(1..=3).contains(&d) {
        return Err(invalid(format!("dimension must be 1, 2 or 3, got {d}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {r}")));
    }
    Ok(())
}

/// Angular weight of the M-Wright representation,
/// `K(φ) = (sin αφ / sin φ)^{1/(1-α)} · sin((1-α)φ) / sin αφ`.
fn angular_weight(alpha: f64, phi: f64) -> f64 {
    let p = 1.0 / (1.0 - alpha);
    ((alpha * phi).sin() / phi.sin()).powf(p) * ((1.0 - alpha) * phi).sin() / (alpha * phi).sin()
}

/// `∫_0^∞ M_α(s) s^q exp(-r²/(4s)) ds`.
fn subordinated_moment(alpha: f64, q: f64, r: f64) -> Result<f64> {
    let p = 1.0 / (1.0 - alpha);
    let mut failure: Option<Error> = None;
    let mut outer = |phi: f64| {
        let k = angular_weight(alpha, phi);
        if !k.is_finite() || k > 1e250 {
            return 0.0;
        }
        match inner_integral(k, p, q, r) {
            Ok(v) => k * v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let v = integrate_adaptive_breaks(&mut outer, &[0.0, 0.5 * PI, PI], Tolerance::relative(OUTER_TOL))
        .map_err(|e| Error::Quadrature(format!("reduced Green oracle at r={r}, alpha={alpha}: {e}")))?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(v / (PI * (1.0 - alpha)))
}

/// `∫_0^∞ s^{p-1+q} exp(-K s^p - r²/(4s)) ds`, integrated in `v = ln s`
/// around the peak of the log-integrand, which is concave in `v`.
fn inner_integral(k: f64, p: f64, q: f64, r: f64) -> Result<f64> {
    let c = 0.25 * r * r;
    let e = p + q;
    let log_f = |v: f64| e * v - k * (p * v).exp() - c * (-v).exp();
    let dlog_f = |v: f64| e - p * k * (p * v).exp() + c * (-v).exp();

    let (mut lo, mut hi) = (-2.0, 2.0);
    while dlog_f(lo) <= 0.0 {
        lo -= 4.0;
        if lo < -800.0 {
            return Err(Error::Quadrature("inner peak search diverged below".into()));
        }
    }
    while dlog_f(hi) >= 0.0 {
        hi += 4.0;
        if hi > 800.0 {
            return Err(Error::Quadrature("inner peak search diverged above".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dlog_f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * (1.0 + lo.abs()) {
            break;
        }
    }
    let v0 = 0.5 * (lo + hi);
    let peak = log_f(v0);
    let curvature = p * p * k * (p * v0).exp() + c * (-v0).exp();
    let step = (1.0 / curvature.max(1e-300)).sqrt().min(4.0);
    let mut left = v0;
    while peak - log_f(left) < LOG_CUT {
        left -= step;
    }
    let mut right = v0;
    while peak - log_f(right) < LOG_CUT {
        right += step;
    }
    let mut f = |v: f64| (log_f(v) - peak).exp();
    let val = integrate_adaptive_breaks(&mut f, &[left, v0, right], Tolerance::relative(INNER_TOL))?;
    Ok(val * peak.exp())
}

/// Leading exponential rate `a_0 = (1 - α/2)(α/2)^{α/(2-α)}` of the tail
/// `exp(-a_0 r^{2/(2-α)})`, from the large-argument asymptotics of `M_{α/2}`.
pub fn tail_exponent(alpha: f64) -> f64 {
    let nu = 0.5 * alpha;
    (1.0 - nu) * nu.powf(nu / (1.0 - nu))
}
