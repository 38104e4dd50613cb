//! Truncated asymptotic series `Ψ_{d,α,N}` and the gradient kernels `S_{d,N}`.

use std::f64::consts::PI;

use super::coeffs::{family_series, GreenCoeffs};

/// `Ψ_{d,α,N}(r)` for the dimension stored in `coeffs`.
pub fn reduced_green_series(coeffs: &GreenCoeffs, n: usize, r: f64) -> f64 {
    series_value(coeffs, n, r)
}

pub(crate) fn series_value(c: &GreenCoeffs, n: usize, r: f64) -> f64 {
    match c.d {
        2 => family_series(2, c.alpha, c.a0, &c.a2[..n], r),
        _ => three_dim_series(c, n, r),
    }
}

/// `Ψ_{1,α,N}(r)`.
pub fn line_green_series(c: &GreenCoeffs, n: usize, r: f64) -> f64 {
    family_series(1, c.alpha, c.a0, &c.a1[..n], r)
}

// -(2πr)^{-1} d/dr of the line series, differentiated term by term.
fn three_dim_series(c: &GreenCoeffs, n: usize, r: f64) -> f64 {
    let a = c.alpha;
    let q = 2.0 / (2.0 - a);
    let e = (-c.a0 * r.powf(q)).exp();
    let sum: f64 = c.a1[..n]
        .iter()
        .enumerate()
        .map(|(k, &ak)| {
            let beta = (1.0 - a + 2.0 * k as f64) / (2.0 - a);
            ak * (c.a0 * q * r.powf(q - 2.0 - beta) + beta * r.powf(-2.0 - beta))
        })
        .sum();
    e * sum / (2.0 * PI)
}

/// `S_{d,N}(y)` with `∇Ψ_{d,α,N}(x) = x S_{d,N}(|x|²)`.
pub fn s_kernel(d: usize, c: &GreenCoeffs, n: usize, y: f64) -> f64 {
    let a = c.alpha;
    let two_a = 2.0 - a;
    let e = (-c.a0 * y.powf(1.0 / two_a)).exp();
    if d == 2 {
        let sum: f64 = c.a2[..n]
            .iter()
            .enumerate()
            .map(|(k, &ak)| {
                let k = k as f64;
                ak * (-c.a0 / two_a * y.powf((a - 1.0) / two_a) + (a - 1.0 - k) / two_a / y)
                    * y.powf((a - 1.0 - k) / two_a)
            })
            .sum();
        2.0 * e * sum
    } else {
        let sum: f64 = c.a1[..n]
            .iter()
            .enumerate()
            .map(|(k, &ak)| {
                let k = k as f64;
                let t1 = (2.0 * c.a0 / two_a).powi(2) * y.powf((5.0 * a - 5.0 - 2.0 * k) / (2.0 * two_a));
                let t2 = 8.0 * c.a0 * (k + 1.0 - a) / (two_a * two_a) * y.powf((5.0 * a - 7.0 - 2.0 * k) / (2.0 * two_a));
                let t3 = (2.0 * k + 1.0 - a) * (2.0 * k + 5.0 - 3.0 * a) / (two_a * two_a)
                    * y.powf((5.0 * a - 9.0 - 2.0 * k) / (2.0 * two_a));
                ak * (t1 + t2 + t3)
            })
            .sum();
        -e * sum / (2.0 * PI)
    }
}
