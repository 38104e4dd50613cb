//! Space-time fundamental solutions: the truncated-series approximation
//! `Ψ_{(x0,t0),N}` and an exact counterpart backed by [`OracleTable`].

use std::sync::Arc;

use nalgebra::SVector;

use super::coeffs::GreenCoeffs;
use super::oracle_table::OracleTable;
use super::series::{s_kernel, series_value};
use crate::error::{invalid, Result};

/// A scalar field on space-time with a spatial gradient.
pub trait SpaceTimeFunction<const D: usize>: Send + Sync {
    fn value(&self, x: &SVector<f64, D>, t: f64) -> f64;
    fn gradient(&self, x: &SVector<f64, D>, t: f64) -> SVector<f64, D>;
}

impl<const D: usize, F: SpaceTimeFunction<D> + ?Sized> SpaceTimeFunction<D> for Arc<F> {
    fn value(&self, x: &SVector<f64, D>, t: f64) -> f64 {
        (**self).value(x, t)
    }

    fn gradient(&self, x: &SVector<f64, D>, t: f64) -> SVector<f64, D> {
        (**self).gradient(x, t)
    }
}

impl<const D: usize, F: SpaceTimeFunction<D> + ?Sized> SpaceTimeFunction<D> for &F {
    fn value(&self, x: &SVector<f64, D>, t: f64) -> f64 {
        (**self).value(x, t)
    }

    fn gradient(&self, x: &SVector<f64, D>, t: f64) -> SVector<f64, D> {
        (**self).gradient(x, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePoint<const D: usize> {
    pub x0: SVector<f64, D>,
    pub t0: f64,
}

impl<const D: usize> SourcePoint<D> {
    pub fn new(x0: SVector<f64, D>) -> Self {
        Self { x0, t0: 0.0 }
    }

    pub fn with_offset(x0: SVector<f64, D>, t0: f64) -> Self {
        Self { x0, t0 }
    }
}

/// `Ψ_{(x0,t0),N}(x, t) = Ψ_{d,α,N}((x-x0)/√(γ0 (t-t0)^α)) (γ0 (t-t0)^α)^{-d/2}`.
#[derive(Debug, Clone)]
pub struct ApproxFundamental<const D: usize> {
    coeffs: Arc<GreenCoeffs>,
    n: usize,
    source: SourcePoint<D>,
    gamma0: f64,
}

impl<const D: usize> ApproxFundamental<D> {
    pub fn new(coeffs: Arc<GreenCoeffs>, n: usize, source: SourcePoint<D>, gamma0: f64) -> Result<Self> {
        if coeffs.d != D {
            return Err(invalid(format!("coefficients are for d = {}, field is {D}-dimensional", coeffs.d)));
        }
        if n == 0 || n > coeffs.n_terms() {
            return Err(invalid(format!(
                "truncation level {n} outside 1..={}",
                coeffs.n_terms()
            )));
        }
        if !(gamma0 > 0.0) {
            return Err(invalid(format!("background conductivity must be positive, got {gamma0}")));
        }
        Ok(Self { coeffs, n, source, gamma0 })
    }

    pub fn source(&self) -> &SourcePoint<D> {
        &self.source
    }

    pub fn coeffs(&self) -> &GreenCoeffs {
        &self.coeffs
    }

    fn scale(&self, t: f64) -> Result<f64> {
        if !(t > self.source.t0) {
            return Err(invalid(format!("time {t} is not after the source time {}", self.source.t0)));
        }
        Ok(self.gamma0 * (t - self.source.t0).powf(self.coeffs.alpha))
    }

    pub fn try_value(&self, x: &SVector<f64, D>, t: f64) -> Result<f64> {
        let s = self.scale(t)?;
        let r = (x - self.source.x0).norm() / s.sqrt();
        Ok(series_value(&self.coeffs, self.n, r) * s.powf(-(D as f64) / 2.0))
    }

    pub fn try_gradient(&self, x: &SVector<f64, D>, t: f64) -> Result<SVector<f64, D>> {
        let s = self.scale(t)?;
        let dx = x - self.source.x0;
        let y = dx.norm_squared() / s;
        Ok(dx * (s.powf(-(D as f64 + 2.0) / 2.0) * s_kernel(D, &self.coeffs, self.n, y)))
    }
}

/// Values before the source time are taken as the zero initial state.
impl<const D: usize> SpaceTimeFunction<D> for ApproxFundamental<D> {
    fn value(&self, x: &SVector<f64, D>, t: f64) -> f64 {
        self.try_value(x, t).unwrap_or(0.0)
    }

    fn gradient(&self, x: &SVector<f64, D>, t: f64) -> SVector<f64, D> {
        self.try_gradient(x, t).unwrap_or_else(|_| SVector::zeros())
    }
}

/// Fundamental solution built from the tabulated exact reduced Green function.
#[derive(Debug, Clone)]
pub struct ExactFundamental<const D: usize> {
    table: Arc<OracleTable>,
    source: SourcePoint<D>,
    gamma0: f64,
}

impl<const D: usize> ExactFundamental<D> {
    pub fn new(table: Arc<OracleTable>, source: SourcePoint<D>, gamma0: f64) -> Result<Self> {
        if table.dimension() != D {
            return Err(invalid(format!(
                "oracle table is for d = {}, field is {D}-dimensional",
                table.dimension()
            )));
        }
        Ok(Self { table, source, gamma0 })
    }
}

impl<const D: usize> SpaceTimeFunction<D> for ExactFundamental<D> {
    fn value(&self, x: &SVector<f64, D>, t: f64) -> f64 {
        if t <= self.source.t0 {
            return 0.0;
        }
        let s = self.gamma0 * (t - self.source.t0).powf(self.table.alpha());
        let r = (x - self.source.x0).norm() / s.sqrt();
        self.table.value(r) * s.powf(-(D as f64) / 2.0)
    }

    fn gradient(&self, x: &SVector<f64, D>, t: f64) -> SVector<f64, D> {
        if t <= self.source.t0 {
            return SVector::zeros();
        }
        let s = self.gamma0 * (t - self.source.t0).powf(self.table.alpha());
        let dx = x - self.source.x0;
        let dist = dx.norm();
        if dist == 0.0 {
            return SVector::zeros();
        }
        let r = dist / s.sqrt();
        dx * (self.table.derivative(r) / dist * s.powf(-(D as f64 + 1.0) / 2.0))
    }
}

/// `Φ(x, t) = F(x, T - t)`.
#[derive(Debug, Clone)]
pub struct TimeReversed<F> {
    pub inner: F,
    pub t_final: f64,
}

impl<F> TimeReversed<F> {
    pub fn new(inner: F, t_final: f64) -> Self {
        Self { inner, t_final }
    }
}

impl<const D: usize, F: SpaceTimeFunction<D>> SpaceTimeFunction<D> for TimeReversed<F> {
    fn value(&self, x: &SVector<f64, D>, t: f64) -> f64 {
        self.inner.value(x, self.t_final - t)
    }

    fn gradient(&self, x: &SVector<f64, D>, t: f64) -> SVector<f64, D> {
        self.inner.gradient(x, self.t_final - t)
    }
}

/// `Ψ(x, t + shift)`: a fundamental solution started before the clock.
#[derive(Debug, Clone)]
pub struct TimeShifted<F> {
    pub inner: F,
    pub shift: f64,
}

impl<const D: usize, F: SpaceTimeFunction<D>> SpaceTimeFunction<D> for TimeShifted<F> {
    fn value(&self, x: &SVector<f64, D>, t: f64) -> f64 {
        self.inner.value(x, t + self.shift)
    }

    fn gradient(&self, x: &SVector<f64, D>, t: f64) -> SVector<f64, D> {
        self.inner.gradient(x, t + self.shift)
    }
}

/// Affine field `a·x`, constant in time.
#[derive(Debug, Clone, Copy)]
pub struct Linear<const D: usize>(pub SVector<f64, D>);

impl<const D: usize> SpaceTimeFunction<D> for Linear<D> {
    fn value(&self, x: &SVector<f64, D>, _t: f64) -> f64 {
        self.0.dot(x)
    }

    fn gradient(&self, _x: &SVector<f64, D>, _t: f64) -> SVector<f64, D> {
        self.0
    }
}
