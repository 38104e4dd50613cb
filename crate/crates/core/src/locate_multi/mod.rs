//! Locating several inclusions: the fundamental-solution data matrix, its
//! truncated SVD and the indicator `W_{n,k}` scanned over the domain.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::forward::{
    add_noise, boundary_restrict, solve_background, solve_subdiffusion, BoundaryTrace, InclusionSet, Mesh, Point,
    ProblemData, Shape,
};
use crate::fracmath::quadrature::graded_symmetric_rule;
use crate::fracmath::{FracOrder, TimeGrid};
use crate::greenfn::{s_kernel, ApproxFundamental, GreenCoeffs, SourcePoint, SpaceTimeFunction, TimeReversed};
use crate::measure::{measurement_boundary, polarization_disk};

/// Source points on an arc of the circle `|x| = R`, one at the middle of each
/// of `n` equal cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSet {
    pub radius: f64,
    pub center_angle: f64,
    pub aperture: f64,
    pub points: Vec<Point>,
}

impl SourceSet {
    pub fn arc(n: usize, radius: f64, center_angle: f64, aperture: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("source set needs at least one point"));
        }
        if !(radius > 1.0) {
            return Err(invalid(format!("sources must lie outside the unit disk, got R = {radius}")));
        }
        if !(aperture > 0.0 && aperture <= TAU) {
            return Err(invalid(format!("aperture must lie in (0, 2π], got {aperture}")));
        }
        let cell = aperture / n as f64;
        let points = (0..n)
            .map(|j| {
                let th = center_angle - 0.5 * aperture + (j as f64 + 0.5) * cell;
                Point::new(radius * th.cos(), radius * th.sin())
            })
            .collect();
        Ok(Self { radius, center_angle, aperture, points })
    }

    pub fn full(n: usize, radius: f64) -> Result<Self> {
        Self::arc(n, radius, 0.0, TAU)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arc length of one cell.
    pub fn cell_length(&self) -> f64 {
        self.radius * self.aperture / self.len() as f64
    }
}

/// Measurement matrix `B[j″, j′] = I_Φ(U_{j′})` for `Φ` sourced at `x_{j″}`.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    pub b: DMatrix<f64>,
    /// Nonincreasing singular values.
    pub singular_values: Vec<f64>,
    /// Left singular vectors in the order of `singular_values`.
    pub left: DMatrix<f64>,
}

impl DataMatrix {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if !b.is_square() {
            return Err(invalid("data matrix must be square"));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(invalid("data matrix has non-finite entries"));
        }
        let n = b.nrows();
        let svd = b.clone().svd(true, false);
        let u = svd.u.expect("left vectors requested");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let singular_values = order.iter().map(|&i| svd.singular_values[i]).collect();
        let left = DMatrix::from_fn(n, n, |r, c| u[(r, order[c])]);
        Ok(Self { b, singular_values, left })
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    /// `Q_{n,k} = I − V_k V_kᵀ`.
    pub fn projector(&self, k: usize) -> DMatrix<f64> {
        let n = self.dim();
        let v = self.left.columns(0, k.min(n));
        DMatrix::identity(n, n) - &v * v.transpose()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim()).map(|c| format!("{:.17e}", self.b[(r, c)])).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_singular_values_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "index,value")?;
        for (i, s) in self.singular_values.iter().enumerate() {
            writeln!(out, "{},{:.17e}", i + 1, s)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Everything needed to simulate one column of the data matrix.
#[derive(Debug, Clone)]
pub struct MultiSetup {
    pub mesh: Arc<Mesh>,
    pub inclusions: InclusionSet,
    pub alpha: FracOrder,
    pub coeffs: Arc<GreenCoeffs>,
    pub n_terms: usize,
    pub grid: TimeGrid,
    /// Start offset of the background fundamental solution.
    pub t_init: f64,
}

impl MultiSetup {
    pub fn gamma0(&self) -> f64 {
        self.inclusions.gamma0
    }

    fn background(&self, x: Point) -> Result<ApproxFundamental<2>> {
        ApproxFundamental::new(
            Arc::clone(&self.coeffs),
            self.n_terms,
            SourcePoint::with_offset(x, -self.t_init),
            self.gamma0(),
        )
    }

    fn test_function(&self, x: Point) -> Result<TimeReversed<ApproxFundamental<2>>> {
        Ok(TimeReversed::new(
            ApproxFundamental::new(Arc::clone(&self.coeffs), self.n_terms, SourcePoint::new(x), self.gamma0())?,
            self.grid.t_final(),
        ))
    }
}

/// Boundary traces of `u` and `U` for one source, both started from
/// `Ψ_{(x,0),N}(·, t_init)` with the flux of the marching fundamental solution.
#[derive(Debug, Clone)]
pub struct SourceTraces {
    pub u: BoundaryTrace,
    pub background: BoundaryTrace,
}

pub fn simulate_source(setup: &MultiSetup, x: Point) -> Result<SourceTraces> {
    let psi = setup.background(x)?;
    let gamma0 = setup.gamma0();
    let initial = |p: &Point| psi.value(p, 0.0);
    let flux = |p: &Point, n: &Point, t: f64| gamma0 * psi.gradient(p, t).dot(n);
    let data = ProblemData { source: None, initial: &initial, flux: &flux };
    let u = solve_subdiffusion(&setup.mesh, setup.alpha, &setup.inclusions, &data, &setup.grid)?;
    let bg = solve_background(&setup.mesh, setup.alpha, gamma0, &data, &setup.grid)?;
    Ok(SourceTraces { u: boundary_restrict(&u), background: boundary_restrict(&bg) })
}

pub fn simulate_sources(setup: &MultiSetup, sources: &SourceSet) -> Result<Vec<SourceTraces>> {
    sources.points.par_iter().map(|&x| simulate_source(setup, x)).collect()
}

fn noise_seed(seed: u64, j: usize) -> u64 {
    seed ^ (j as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Data matrix from simulated traces; `u` is perturbed by noise of level
/// `sigma` (one stream per source) before subtracting `U`.
pub fn data_matrix_from_traces(
    setup: &MultiSetup,
    sources: &SourceSet,
    traces: &[SourceTraces],
    sigma: f64,
    seed: u64,
) -> Result<DataMatrix> {
    let n = sources.len();
    if traces.len() != n {
        return Err(invalid(format!("{} traces for {n} sources", traces.len())));
    }
    let diffs = traces
        .iter()
        .enumerate()
        .map(|(j, tr)| add_noise(&tr.u, sigma, noise_seed(seed, j))?.trace.difference(&tr.background))
        .collect::<Result<Vec<_>>>()?;
    let phis = sources.points.iter().map(|&x| setup.test_function(x)).collect::<Result<Vec<_>>>()?;
    let entries: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (row, col) = (idx % n, idx / n);
            Ok(measurement_boundary(&diffs[col], &phis[row], setup.gamma0())?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    DataMatrix::new(DMatrix::from_vec(n, n, entries))
}

pub fn build_data_matrix(setup: &MultiSetup, sources: &SourceSet, sigma: f64, seed: u64) -> Result<DataMatrix> {
    let traces = simulate_sources(setup, sources)?;
    data_matrix_from_traces(setup, sources, &traces, sigma, seed)
}

/// Leading-order data matrix of disk inclusions,
/// `B = −Σ_ℓ ε² (γ0 − γ_ℓ) m_ℓ G_n(z_ℓ)` with `M^{(ℓ)} = m_ℓ I`.
pub fn leading_order_matrix(inclusions: &InclusionSet, sources: &SourceSet, model: &KernelModel) -> Result<DataMatrix> {
    let n = sources.len();
    let mut b = DMatrix::zeros(n, n);
    for inc in &inclusions.items {
        if inc.shape != Shape::Disk {
            return Err(invalid("the leading-order model needs disk inclusions"));
        }
        let m = polarization_disk::<2>(inclusions.gamma0, inc.gamma, inc.shape.area())?.0[(0, 0)];
        let scale = -inc.size * inc.size * (inclusions.gamma0 - inc.gamma) * m;
        b += g_matrix(&inc.center, sources, model)?.transpose() * scale;
    }
    DataMatrix::new(b)
}

/// Time quadrature and model for the probing kernels `C_{j′,j″}(z)`.
#[derive(Debug, Clone)]
pub struct KernelModel {
    pub coeffs: Arc<GreenCoeffs>,
    pub n_terms: usize,
    pub gamma0: f64,
    pub nodes: Vec<(f64, f64)>,
}

impl KernelModel {
    /// Composite Gauss rule refined geometrically toward both ends of
    /// `[0, T]` (six levels, ratio two, sixteen points per panel).
    pub fn new(coeffs: Arc<GreenCoeffs>, n_terms: usize, gamma0: f64, grid: &TimeGrid) -> Self {
        Self {
            coeffs,
            n_terms,
            gamma0,
            nodes: graded_symmetric_rule(grid.t_final(), 6, 2.0, 16),
        }
    }

    fn t_final(&self) -> f64 {
        self.nodes.iter().map(|&(_, w)| w).sum()
    }

    /// `S_{d,N}(r²/s) s^{-(d+2)/2}` with `s = γ0 t^α`.
    fn weighted_kernel(&self, r2: f64, t: f64) -> f64 {
        let s = self.gamma0 * t.powf(self.coeffs.alpha);
        s_kernel(2, &self.coeffs, self.n_terms, r2 / s) * s.powi(-2)
    }

    /// Kernel rows `S[j, q]` at the forward (`reversed = false`) or reversed
    /// quadrature times.
    fn kernel_rows(&self, z: &Point, sources: &SourceSet, reversed: bool) -> DMatrix<f64> {
        let t_final = self.t_final();
        DMatrix::from_fn(sources.len(), self.nodes.len(), |j, q| {
            let t = if reversed { t_final - self.nodes[q].0 } else { self.nodes[q].0 };
            self.weighted_kernel((z - sources.points[j]).norm_squared(), t)
        })
    }

    /// The full matrix `C(z)`.
    pub fn kernel_matrix(&self, z: &Point, sources: &SourceSet) -> Result<DMatrix<f64>> {
        let s1 = self.kernel_rows(z, sources, false);
        let mut s2 = self.kernel_rows(z, sources, true);
        for (q, &(_, w)) in self.nodes.iter().enumerate() {
            s2.column_mut(q).scale_mut(w);
        }
        let c = s1 * s2.transpose();
        if c.iter().any(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite probing kernel at z = ({}, {})", z.x, z.y)));
        }
        Ok(c)
    }
}

/// `C_{j′,j″}(z)` for a single pair of sources.
pub fn kernel_c(z: &Point, j1: usize, j2: usize, sources: &SourceSet, model: &KernelModel) -> Result<f64> {
    let t_final = model.t_final();
    let (r1, r2) = ((z - sources.points[j1]).norm_squared(), (z - sources.points[j2]).norm_squared());
    let v: f64 = model
        .nodes
        .iter()
        .map(|&(t, w)| w * model.weighted_kernel(r1, t) * model.weighted_kernel(r2, t_final - t))
        .sum();
    if !v.is_finite() {
        return Err(invalid(format!("non-finite probing kernel at z = ({}, {})", z.x, z.y)));
    }
    Ok(v)
}

/// `G_n(z) = [(z − x_{j′})·(z − x_{j″}) C_{j′,j″}(z)]`.
pub fn g_matrix(z: &Point, sources: &SourceSet, model: &KernelModel) -> Result<DMatrix<f64>> {
    let c = model.kernel_matrix(z, sources)?;
    let d: Vec<Point> = sources.points.iter().map(|x| z - x).collect();
    Ok(DMatrix::from_fn(sources.len(), sources.len(), |i, j| d[i].dot(&d[j]) * c[(i, j)]))
}

/// Largest `k` with `s_k / s_1 ≥ tau`, at least one.
pub fn select_truncation(singular_values: &[f64], tau: f64) -> Result<usize> {
    let s1 = singular_values.first().copied().unwrap_or(0.0);
    if !(s1 > 0.0) {
        return Err(invalid("all singular values vanish"));
    }
    Ok(singular_values.iter().take_while(|&&s| s / s1 >= tau).count().max(1))
}

/// `k` at the largest drop `s_k / s_{k+1}` among the singular values with
/// `s_k / s_1 ≥ floor`; trailing values below the floor are clipped to it.
pub fn select_truncation_by_gap(singular_values: &[f64], floor: f64) -> Result<usize> {
    let s1 = singular_values.first().copied().unwrap_or(0.0);
    if !(s1 > 0.0) {
        return Err(invalid("all singular values vanish"));
    }
    if !(floor > 0.0 && floor < 1.0) {
        return Err(invalid(format!("gap floor must lie in (0, 1), got {floor}")));
    }
    let ratio = |i: usize| singular_values.get(i).map_or(floor, |s| (s / s1).max(floor));
    let mut best = (1, f64::NEG_INFINITY);
    for k in 1..singular_values.len() {
        if ratio(k - 1) <= floor {
            break;
        }
        let gap = ratio(k - 1).ln() - ratio(k).ln();
        if gap > best.1 {
            best = (k, gap);
        }
    }
    Ok(best.0)
}

/// How the truncation level is chosen from the spectrum of `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Fixed(usize),
    Ratio(f64),
    Gap(f64),
}

impl Truncation {
    pub fn select(&self, singular_values: &[f64]) -> Result<usize> {
        match *self {
            Truncation::Fixed(k) if k >= 1 && k <= singular_values.len() => Ok(k),
            Truncation::Fixed(k) => Err(invalid(format!("fixed truncation {k} outside 1..={}", singular_values.len()))),
            Truncation::Ratio(tau) => select_truncation(singular_values, tau),
            Truncation::Gap(floor) => select_truncation_by_gap(singular_values, floor),
        }
    }
}

/// Value returned when `G_n(z)` lies (numerically) inside `span(V_k)`.
pub const INDICATOR_SENTINEL: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorValue {
    pub value: f64,
    /// Set when the denominator dropped below `1e-14` times the numerator.
    pub flagged: bool,
}

/// `W_{n,k}(z) = ‖G‖_F / ‖Q_{n,k} G‖_F`.
pub fn indicator_with_projector(q: &DMatrix<f64>, g: &DMatrix<f64>) -> IndicatorValue {
    let num = g.norm();
    let den = (q * g).norm();
    if num == 0.0 {
        return IndicatorValue { value: 1.0, flagged: true };
    }
    if den < 1e-14 * num {
        return IndicatorValue { value: INDICATOR_SENTINEL, flagged: true };
    }
    IndicatorValue { value: num / den, flagged: false }
}

pub fn indicator(data: &DataMatrix, k: usize, g: &DMatrix<f64>) -> Result<IndicatorValue> {
    if k > data.dim() {
        return Err(invalid(format!("truncation {k} exceeds the matrix size {}", data.dim())));
    }
    if g.shape() != data.b.shape() {
        return Err(invalid("probe matrix and data matrix differ in size"));
    }
    Ok(indicator_with_projector(&data.projector(k), g))
}

/// Square sampling grid; points outside the disk of radius `mask_radius`
/// are skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRegion {
    pub half_width: f64,
    pub resolution: usize,
    pub mask_radius: f64,
}

impl Default for ScanRegion {
    fn default() -> Self {
        Self { half_width: 1.0, resolution: 101, mask_radius: 0.95 }
    }
}

impl ScanRegion {
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + 2.0 * self.half_width * i as f64 / (self.resolution - 1) as f64
    }

    pub fn point(&self, ix: usize, iy: usize) -> Point {
        Point::new(self.coordinate(ix), self.coordinate(iy))
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.resolution - 1) as f64
    }
}

/// `W_{n,k}` sampled on a [`ScanRegion`]; masked nodes hold `None`.
#[derive(Debug, Clone)]
pub struct IndicatorGrid {
    pub region: ScanRegion,
    pub k: usize,
    /// Row-major in `y`: entry `iy * resolution + ix`.
    pub values: Vec<Option<IndicatorValue>>,
}

impl IndicatorGrid {
    pub fn get(&self, ix: usize, iy: usize) -> Option<f64> {
        self.values[iy * self.region.resolution + ix].map(|v| v.value)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "x,y,W,flagged")?;
        let n = self.region.resolution;
        for iy in 0..n {
            for ix in 0..n {
                if let Some(v) = self.values[iy * n + ix] {
                    let p = self.region.point(ix, iy);
                    writeln!(out, "{:.6},{:.6},{:.10e},{}", p.x, p.y, v.value, u8::from(v.flagged))?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

pub fn scan_indicator(
    data: &DataMatrix,
    sources: &SourceSet,
    model: &KernelModel,
    region: ScanRegion,
    k: usize,
) -> Result<IndicatorGrid> {
    if region.resolution < 2 || !(region.mask_radius < 1.0) || !(region.half_width > 0.0) {
        return Err(invalid("scan region must have at least two nodes per axis and stay inside the domain"));
    }
    if sources.len() != data.dim() {
        return Err(invalid("source count differs from the data matrix size"));
    }
    if k > data.dim() {
        return Err(invalid(format!("truncation {k} exceeds the matrix size {}", data.dim())));
    }
    let q = data.projector(k);
    let n = region.resolution;
    let values = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let p = region.point(idx % n, idx / n);
            if p.norm() > region.mask_radius {
                return Ok(None);
            }
            Ok(Some(indicator_with_projector(&q, &g_matrix(&p, sources, model)?)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndicatorGrid { region, k, values })
}

/// The `m` largest strict local maxima (8-neighbourhood) that are pairwise
/// at least `min_separation` apart, in decreasing order of `W`.
pub fn peak_extract(grid: &IndicatorGrid, m: usize, min_separation: f64) -> Result<Vec<Point>> {
    let n = grid.region.resolution;
    let mut maxima = Vec::new();
    for iy in 0..n {
        for ix in 0..n {
            let Some(v) = grid.get(ix, iy) else { continue };
            let mut higher_or_equal = true;
            let mut strictly_above_one = false;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    if jx < 0 || jy < 0 || jx >= n as i64 || jy >= n as i64 {
                        continue;
                    }
                    if let Some(w) = grid.get(jx as usize, jy as usize) {
                        if w > v {
                            higher_or_equal = false;
                        } else if w < v {
                            strictly_above_one = true;
                        }
                    }
                }
            }
            if higher_or_equal && strictly_above_one {
                maxima.push((v, grid.region.point(ix, iy)));
            }
        }
    }
    maxima.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut peaks: Vec<Point> = Vec::with_capacity(m);
    for (_, p) in &maxima {
        if peaks.len() == m {
            break;
        }
        if peaks.iter().all(|q| (q - p).norm() >= min_separation) {
            peaks.push(*p);
        }
    }
    if peaks.len() < m {
        return Err(Error::NotEnoughPeaks { requested: m, found: peaks.len() });
    }
    Ok(peaks)
}
