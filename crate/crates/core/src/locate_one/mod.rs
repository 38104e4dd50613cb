//! Locating one inclusion from harmonic-background measurements: bisection
//! for the zeros of `I_Φ` along exterior probe segments, then intersection of
//! the normal lines through the roots.

use std::sync::Arc;

use nalgebra::{Matrix2, SVector, Vector2, Vector3};

use crate::error::{invalid, Error, Result};
use crate::forward::{
    add_noise, boundary_restrict, solve_background, solve_subdiffusion, BoundaryTrace, InclusionSet, Mesh, Point,
    ProblemData,
};
use crate::fracmath::{FracOrder, TimeGrid};
use crate::greenfn::{ApproxFundamental, GreenCoeffs, SourcePoint, SpaceTimeFunction, TimeReversed};
use crate::measure::{leading_term, measurement_boundary, polarization_disk, LeadingTermInput};

/// A straight probe segment `Σ̃_j` outside the domain, parallel to `a_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSegment<const D: usize> {
    pub index: usize,
    pub start: SVector<f64, D>,
    pub end: SVector<f64, D>,
}

impl<const D: usize> ProbeSegment<D> {
    pub fn new(index: usize, start: SVector<f64, D>, end: SVector<f64, D>) -> Result<Self> {
        if (end - start).norm() == 0.0 {
            return Err(invalid("probe segment has zero length"));
        }
        Ok(Self { index, start, end })
    }

    pub fn point(&self, s: f64) -> SVector<f64, D> {
        self.start + (self.end - self.start) * s
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    /// Unit direction `a_j`.
    pub fn direction(&self) -> SVector<f64, D> {
        (self.end - self.start).normalize()
    }
}

impl ProbeSegment<2> {
    /// Segment `center ± half_length·a` with unit `a`.
    pub fn centered(index: usize, center: Point, direction: Point, half_length: f64) -> Result<Self> {
        let a = direction.normalize();
        Self::new(index, center - a * half_length, center + a * half_length)
    }

    /// The pair used in the unit-disk experiments: `y = 2` parallel to
    /// `(1, 0)` and `x = 2` parallel to `(0, 1)`, each spanning the projection
    /// of the disk.
    pub fn default_pair() -> [Self; 2] {
        [
            Self::centered(0, Point::new(0.0, 2.0), Point::new(1.0, 0.0), 1.0).expect("valid segment"),
            Self::centered(1, Point::new(2.0, 0.0), Point::new(0.0, 1.0), 1.0).expect("valid segment"),
        ]
    }
}

/// Rectangle of a plane `Σ_j` spanned by `a_j` and `a_3` (three dimensions).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbePlane {
    pub index: usize,
    pub center: Vector3<f64>,
    /// Unit `a_j`.
    pub first: Vector3<f64>,
    /// Unit `a_3`, orthogonal to `first`.
    pub second: Vector3<f64>,
    pub half_widths: (f64, f64),
}

impl ProbePlane {
    pub fn new(index: usize, center: Vector3<f64>, first: Vector3<f64>, second: Vector3<f64>, half_widths: (f64, f64)) -> Result<Self> {
        let (first, second) = (first.normalize(), second.normalize());
        if first.dot(&second).abs() > 1e-12 {
            return Err(invalid("plane directions must be orthogonal"));
        }
        if !(half_widths.0 > 0.0 && half_widths.1 > 0.0) {
            return Err(invalid("plane half-widths must be positive"));
        }
        Ok(Self { index, center, first, second, half_widths })
    }

    pub fn point(&self, s: f64, t: f64) -> Vector3<f64> {
        self.center + self.first * s + self.second * t
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.first.cross(&self.second).normalize()
    }

    fn line(&self, s: f64) -> ProbeSegment<3> {
        ProbeSegment {
            index: self.index,
            start: self.point(s, -self.half_widths.1),
            end: self.point(s, self.half_widths.1),
        }
    }
}

/// Result of the one-inclusion algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction1<const D: usize> {
    pub p: SVector<f64, D>,
    pub p1: SVector<f64, D>,
    pub p2: SVector<f64, D>,
    /// Half the distance between the two axes; zero in two dimensions.
    pub rho0: f64,
}

/// Bisection for a sign change of `probe` along `segment`, down to a bracket
/// no longer than `tol`; returns the bracket midpoint.
pub fn root_on_segment<const D: usize, F>(segment: &ProbeSegment<D>, mut probe: F, tol: f64) -> Result<SVector<f64, D>>
where
    F: FnMut(&SVector<f64, D>) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(invalid("bisection tolerance must be positive"));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let f_start = probe(&segment.start)?;
    let f_end = probe(&segment.end)?;
    if f_start == 0.0 {
        return Ok(segment.start);
    }
    if f_end == 0.0 {
        return Ok(segment.end);
    }
    if f_start.signum() == f_end.signum() {
        return Err(Error::NoSignChange { segment: segment.index, start: f_start, end: f_end });
    }
    let len = segment.length();
    while (hi - lo) * len > tol {
        let mid = 0.5 * (lo + hi);
        let f = probe(&segment.point(mid))?;
        if f == 0.0 {
            return Ok(segment.point(mid));
        }
        if f.signum() == f_start.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(segment.point(0.5 * (lo + hi)))
}

/// Intersection of the lines through `p1`, `p2` orthogonal to `a1`, `a2`.
pub fn intersect_2d(p1: Point, a1: Point, p2: Point, a2: Point) -> Result<Reconstruction1<2>> {
    let m = Matrix2::new(a1.x, a1.y, a2.x, a2.y);
    if m.determinant().abs() <= 1e-12 * a1.norm() * a2.norm() {
        return Err(Error::ParallelAxes);
    }
    let rhs = Vector2::new(a1.dot(&p1), a2.dot(&p2));
    let p = m.lu().solve(&rhs).ok_or(Error::ParallelAxes)?;
    Ok(Reconstruction1 { p, p1, p2, rho0: 0.0 })
}

/// Midpoint of the common perpendicular of the axes `p_j + s n_j`; `ρ0` is half
/// its length.
pub fn intersect_3d(p1: Vector3<f64>, n1: Vector3<f64>, p2: Vector3<f64>, n2: Vector3<f64>) -> Result<Reconstruction1<3>> {
    let (n1, n2) = (n1.normalize(), n2.normalize());
    let b = n1.dot(&n2);
    let denom = 1.0 - b * b;
    if denom <= 1e-12 {
        return Err(Error::ParallelAxes);
    }
    let w = p1 - p2;
    let (d, e) = (n1.dot(&w), n2.dot(&w));
    let s = (b * e - d) / denom;
    let t = (e - b * d) / denom;
    let (q1, q2) = (p1 + n1 * s, p2 + n2 * t);
    Ok(Reconstruction1 {
        p: (q1 + q2) / 2.0,
        p1,
        p2,
        rho0: 0.5 * (q1 - q2).norm(),
    })
}

/// Test function `Φ(x, t) = Ψ_{(P,0),N}(x, T − t)`.
pub fn probe_test_function<const D: usize>(
    coeffs: &Arc<GreenCoeffs>,
    n: usize,
    p: SVector<f64, D>,
    gamma0: f64,
    t_final: f64,
) -> Result<TimeReversed<ApproxFundamental<D>>> {
    Ok(TimeReversed::new(
        ApproxFundamental::new(Arc::clone(coeffs), n, SourcePoint::new(p), gamma0)?,
        t_final,
    ))
}

/// `I_Φ` on the trace of `u − U_j` with `Φ = Ψ_{(P,0),N}(·, T − ·)`.
pub fn probe_value(p: &Point, diff: &BoundaryTrace, coeffs: &Arc<GreenCoeffs>, n: usize, gamma0: f64) -> Result<f64> {
    if p.norm() <= 1.0 {
        return Err(invalid(format!("probe point ({}, {}) lies in the closed domain", p.x, p.y)));
    }
    let phi = probe_test_function(coeffs, n, *p, gamma0, diff.grid.t_final())?;
    Ok(measurement_boundary(diff, &phi, gamma0)?.value)
}

/// Leading-order measurement `Ĩ_Φ` of one disk inclusion for the background
/// `U = a·x`.
#[derive(Debug, Clone)]
pub struct SyntheticInclusion<const D: usize> {
    pub center: SVector<f64, D>,
    pub size: f64,
    pub gamma: f64,
    pub gamma0: f64,
}

impl<const D: usize> SyntheticInclusion<D> {
    pub fn measurement(&self, a: &SVector<f64, D>, phi: &dyn SpaceTimeFunction<D>, grid: &TimeGrid) -> Result<f64> {
        let vol = match D {
            2 => std::f64::consts::PI,
            3 => 4.0 * std::f64::consts::PI / 3.0,
            _ => return Err(invalid("only two and three dimensions are supported")),
        };
        let times = grid.nodes();
        let input = LeadingTermInput {
            size: self.size,
            gamma: self.gamma,
            tensor: polarization_disk::<D>(self.gamma0, self.gamma, vol)?,
            grad_u: vec![*a; times.len()],
            grad_phi: times.iter().map(|&t| phi.gradient(&self.center, t)).collect(),
        };
        leading_term(self.gamma0, &[input], grid)
    }
}

/// Two-dimensional pipeline: one root per segment (in parallel), then the
/// line intersection. `probe(j, P)` returns `I_Φ(U_j)` for the source `P`.
pub fn locate_one_inclusion<F>(segments: [ProbeSegment<2>; 2], probe: F, tol: f64) -> Result<Reconstruction1<2>>
where
    F: Fn(usize, &Point) -> Result<f64> + Sync,
{
    let (r1, r2) = rayon::join(
        || root_on_segment(&segments[0], |p| probe(0, p), tol),
        || root_on_segment(&segments[1], |p| probe(1, p), tol),
    );
    let (p1, p2) = (r1?, r2?);
    intersect_2d(p1, segments[0].direction(), p2, segments[1].direction())
}

/// Root of the pair `(I_Φ(U_j), I_Φ(U_3))` on a plane by nested bisection:
/// the inner search follows the zero set of the second component along
/// `a_3`, the outer one bisects the first component along `a_j`.
pub fn root_on_plane<F>(plane: &ProbePlane, probe: F, tol: f64) -> Result<Vector3<f64>>
where
    F: Fn(usize, &Vector3<f64>) -> Result<f64>,
{
    let inner = |s: f64| root_on_segment(&plane.line(s), |p| probe(1, p), tol);
    let outer = ProbeSegment {
        index: plane.index,
        start: Vector3::new(-plane.half_widths.0, 0.0, 0.0),
        end: Vector3::new(plane.half_widths.0, 0.0, 0.0),
    };
    let root = root_on_segment(&outer, |q| probe(0, &inner(q.x)?), tol)?;
    inner(root.x)
}

/// Three-dimensional pipeline. `probe(j, k, P)` returns `I_Φ` for plane `j`
/// with the background `a_j·x` (`k = 0`) or `a_3·x` (`k = 1`).
pub fn locate_one_inclusion_3d<F>(planes: [ProbePlane; 2], probe: F, tol: f64) -> Result<Reconstruction1<3>>
where
    F: Fn(usize, usize, &Vector3<f64>) -> Result<f64> + Sync,
{
    let (r1, r2) = rayon::join(
        || root_on_plane(&planes[0], |k, p| probe(0, k, p), tol),
        || root_on_plane(&planes[1], |k, p| probe(1, k, p), tol),
    );
    intersect_3d(r1?, planes[0].normal(), r2?, planes[1].normal())
}

/// Boundary traces of `u` and `U` for the harmonic background `U = a·x`.
#[derive(Debug, Clone)]
pub struct HarmonicTraces {
    pub direction: Point,
    pub gamma0: f64,
    pub u: BoundaryTrace,
    pub background: BoundaryTrace,
}

/// Forward solves with `u0 = a·x`, `g = γ0 a·n` and `f = 0`, with and without
/// the inclusions.
pub fn simulate_harmonic(
    mesh: &Arc<Mesh>,
    inclusions: &InclusionSet,
    alpha: FracOrder,
    grid: &TimeGrid,
    direction: Point,
) -> Result<HarmonicTraces> {
    let gamma0 = inclusions.gamma0;
    let initial = |p: &Point| direction.dot(p);
    let flux = |_: &Point, n: &Point, _: f64| gamma0 * direction.dot(n);
    let data = ProblemData { source: None, initial: &initial, flux: &flux };
    let u = solve_subdiffusion(mesh, alpha, inclusions, &data, grid)?;
    let bg = solve_background(mesh, alpha, gamma0, &data, grid)?;
    Ok(HarmonicTraces { direction, gamma0, u: boundary_restrict(&u), background: boundary_restrict(&bg) })
}

/// Noise options for [`locate_one_from_traces`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// `u − U` for both traces, with `u` perturbed when `noise` is given
/// (trace `j` uses seed `2·seed + j`).
pub fn trace_differences(traces: &[HarmonicTraces; 2], noise: Option<NoiseSpec>) -> Result<[BoundaryTrace; 2]> {
    let diff = |j: usize| {
        let tr = &traces[j];
        let u = match noise {
            Some(NoiseSpec { sigma, seed }) => add_noise(&tr.u, sigma, seed.wrapping_mul(2).wrapping_add(j as u64))?.trace,
            None => tr.u.clone(),
        };
        u.difference(&tr.background)
    };
    Ok([diff(0)?, diff(1)?])
}

/// Two-dimensional reconstruction from simulated traces, one per segment
/// (segment `j` uses the background `a_j·x` with `a_j` its direction).
pub fn locate_one_from_traces(
    traces: &[HarmonicTraces; 2],
    segments: [ProbeSegment<2>; 2],
    coeffs: &Arc<GreenCoeffs>,
    n_terms: usize,
    noise: Option<NoiseSpec>,
    tol: f64,
) -> Result<Reconstruction1<2>> {
    for (tr, seg) in traces.iter().zip(&segments) {
        if (tr.direction.normalize() - seg.direction()).norm() > 1e-12 {
            return Err(invalid(format!("background of segment {} is not parallel to it", seg.index)));
        }
    }
    let gamma0 = traces[0].gamma0;
    let diffs = trace_differences(traces, noise)?;
    locate_one_inclusion(segments, |j, p| probe_value(p, &diffs[j], coeffs, n_terms, gamma0), tol)
}
