//! Uniform time grids and the discrete Caputo / Riemann–Liouville operators.

use super::special::gamma;
use crate::error::{invalid, Error, Result};

/// Uniform partition of `[0, t_final]` into `n_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(invalid(format!("final time must be positive, got {t_final}")));
        }
        if n_steps == 0 {
            return Err(invalid("time grid needs at least one step"));
        }
        Ok(Self { t_final, n_steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of time levels, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_final
        } else {
            i as f64 * self.tau()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights for integrating over `[0, t_final]` on the nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let tau = self.tau();
        let mut w = vec![tau; self.len()];
        w[0] = 0.5 * tau;
        w[self.n_steps] = 0.5 * tau;
        w
    }
}

/// Fractional order `alpha`. Regular constructors enforce `0 < alpha < 1`;
/// [`FracOrder::with_limit`] also admits the classical value `alpha = 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(invalid(format!("fractional order must lie in (0, 1), got {alpha}")))
        }
    }

    pub fn with_limit(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Self(alpha))
        } else {
            Err(invalid(format!("fractional order must lie in (0, 1], got {alpha}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// L1 convolution weights `b_j = (j+1)^{1-α} - j^{1-α}`, `j = 0..n`.
pub fn l1_weights(alpha: FracOrder, n: usize) -> Vec<f64> {
    let e = 1.0 - alpha.value();
    (0..n)
        .map(|j| {
            if j == 0 {
                1.0
            } else {
                let j = j as f64;
                (j + 1.0).powf(e) - j.powf(e)
            }
        })
        .collect()
}

/// Leading L1 coefficient `τ^{-α}/Γ(2-α)`.
pub fn l1_scale(alpha: FracOrder, grid: &TimeGrid) -> f64 {
    grid.tau().powf(-alpha.value()) / gamma(2.0 - alpha.value())
}

/// L1 approximation of the Caputo derivative at `t_1, ..., t_n`.
pub fn caputo_l1_apply(alpha: FracOrder, grid: &TimeGrid, samples: &[f64]) -> Result<Vec<f64>> {
    check_len(grid, samples)?;
    let n = grid.n_steps();
    let b = l1_weights(alpha, n);
    let c0 = l1_scale(alpha, grid);
    let diffs: Vec<f64> = samples.windows(2).map(|w| w[1] - w[0]).collect();
    Ok((1..=n)
        .map(|m| c0 * (0..m).map(|j| b[j] * diffs[m - 1 - j]).sum::<f64>())
        .collect())
}

/// Product-trapezoid quadrature of the Riemann–Liouville integral of order
/// `alpha` at `t_index`: the kernel is integrated exactly against the
/// piecewise-linear interpolant of `samples`.
pub fn rl_integral(alpha: FracOrder, grid: &TimeGrid, samples: &[f64], t_index: usize) -> Result<f64> {
    check_len(grid, samples)?;
    if t_index > grid.n_steps() {
        return Err(invalid(format!(
            "time index {t_index} exceeds the grid's {} steps",
            grid.n_steps()
        )));
    }
    if t_index == 0 {
        return Ok(0.0);
    }
    let a = alpha.value();
    let n = t_index as f64;
    let p = a + 1.0;
    let mut sum = ((n - 1.0).powf(p) - (n - a - 1.0) * n.powf(a)) * samples[0];
    for j in 1..t_index {
        let m = n - j as f64;
        sum += ((m + 1.0).powf(p) - 2.0 * m.powf(p) + (m - 1.0).powf(p)) * samples[j];
    }
    sum += samples[t_index];
    Ok(grid.tau().powf(a) / gamma(a + 2.0) * sum)
}

fn check_len(grid: &TimeGrid, samples: &[f64]) -> Result<()> {
    if samples.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "expected {} samples, got {}",
            grid.len(),
            samples.len()
        )));
    }
    Ok(())
}
