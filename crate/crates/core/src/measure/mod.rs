//! Weighted boundary measurements, their interior representation and the
//! leading-order asymptotic model.

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::forward::fem::{basis_gradients, SpaceTimeField};
use crate::forward::{BoundaryTrace, InclusionSet, Point, Region, Shape};
use crate::fracmath::TimeGrid;
use crate::greenfn::SpaceTimeFunction;

/// A scalar measurement with a free-form description of its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub value: f64,
    pub background: String,
    pub test_function: String,
    pub seed: Option<u64>,
}

impl Measurement {
    pub fn new(value: f64) -> Self {
        Self { value, background: String::new(), test_function: String::new(), seed: None }
    }

    pub fn labeled(mut self, background: impl Into<String>, test_function: impl Into<String>) -> Self {
        self.background = background.into();
        self.test_function = test_function.into();
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }
}

/// Polarization tensor of one inclusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationTensor<const D: usize>(pub SMatrix<f64, D, D>);

/// `M = −d γ0 |B| / (γ_ℓ + (d−1) γ0) · I`.
pub fn polarization_disk<const D: usize>(gamma0: f64, gamma_l: f64, vol_b: f64) -> Result<PolarizationTensor<D>> {
    if !(gamma0 > 0.0 && gamma_l > 0.0 && vol_b > 0.0) {
        return Err(invalid("conductivities and |B| must be positive"));
    }
    if gamma_l == gamma0 {
        return Err(invalid("inclusion conductivity equals the background"));
    }
    let d = D as f64;
    let s = -d * gamma0 * vol_b / (gamma_l + (d - 1.0) * gamma0);
    Ok(PolarizationTensor(SMatrix::identity() * s))
}

/// `I_Φ = ∫_0^T ∫_∂Ω γ0 (u − U) ∂_n Φ`, trapezoid in time and along each edge.
pub fn measurement_boundary(diff: &BoundaryTrace, phi: &dyn SpaceTimeFunction<2>, gamma0: f64) -> Result<Measurement> {
    if diff.values.len() != diff.grid.len() {
        return Err(Error::GridMismatch(format!(
            "trace has {} levels, grid has {}",
            diff.values.len(),
            diff.grid.len()
        )));
    }
    let wt = diff.grid.trapezoid_weights();
    let value: f64 = (0..diff.grid.len())
        .into_par_iter()
        .map(|n| {
            if wt[n] == 0.0 {
                return 0.0;
            }
            let t = diff.grid.node(n);
            let level = &diff.values[n];
            let s: f64 = diff
                .edges
                .iter()
                .map(|e| {
                    let fa = level[e.a] * phi.gradient(&diff.points[e.a], t).dot(&e.normal);
                    let fb = level[e.b] * phi.gradient(&diff.points[e.b], t).dot(&e.normal);
                    0.5 * e.length * (fa + fb)
                })
                .sum();
            wt[n] * s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let value = gamma0 * value;
    if !value.is_finite() {
        return Err(invalid("measurement is not finite"));
    }
    Ok(Measurement::new(value))
}

/// `Σ_ℓ (γ0 − γ_ℓ) ∫_0^T ∫_{A_ℓ} ∇u·∇Φ` over the inclusion-tagged triangles.
pub fn measurement_interior(u: &SpaceTimeField, phi: &dyn SpaceTimeFunction<2>, inclusions: &InclusionSet) -> Result<Measurement> {
    let mesh = &u.mesh;
    let tagged: Vec<(usize, usize)> = mesh
        .regions
        .iter()
        .enumerate()
        .filter_map(|(t, r)| match r {
            Region::Inclusion(l) if *l < inclusions.len() => Some((t, *l)),
            _ => None,
        })
        .collect();
    for l in 0..inclusions.len() {
        if !tagged.iter().any(|&(_, k)| k == l) {
            return Err(invalid(format!("mesh has no triangles tagged for inclusion {l}")));
        }
    }
    let wt = u.grid.trapezoid_weights();
    let value: f64 = (0..u.grid.len())
        .into_par_iter()
        .map(|n| {
            if wt[n] == 0.0 {
                return 0.0;
            }
            let t = u.grid.node(n);
            let s: f64 = tagged
                .iter()
                .map(|&(tri, l)| {
                    let idx = mesh.triangles[tri];
                    let g = basis_gradients(mesh, tri);
                    let level = &u.values[n.max(1)];
                    let grad_u: Point = (0..3).map(|i| g[i] * level[idx[i]]).sum();
                    let p = idx.map(|i| mesh.vertices[i]);
                    // edge midpoints: exact for quadratic ∇Φ
                    let grad_phi: Point = [(p[0] + p[1]) / 2.0, (p[1] + p[2]) / 2.0, (p[2] + p[0]) / 2.0]
                        .iter()
                        .map(|m| phi.gradient(m, t))
                        .sum::<Point>()
                        / 3.0;
                    (inclusions.gamma0 - inclusions.items[l].gamma) * mesh.triangle_area(tri) * grad_u.dot(&grad_phi)
                })
                .sum();
            wt[n] * s
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(Measurement::new(value))
}

/// One inclusion's data for [`leading_term`]: size, conductivity, tensor and
/// the gradients of `U` and `Φ` at its center on every time level.
#[derive(Debug, Clone)]
pub struct LeadingTermInput<const D: usize> {
    pub size: f64,
    pub gamma: f64,
    pub tensor: PolarizationTensor<D>,
    pub grad_u: Vec<SVector<f64, D>>,
    pub grad_phi: Vec<SVector<f64, D>>,
}

/// `−Σ_ℓ ε^d (γ0 − γ_ℓ) ∫_0^T ∇U(z_ℓ,t)·M^{(ℓ)} ∇Φ(z_ℓ,t) dt` by the trapezoid rule.
pub fn leading_term<const D: usize>(gamma0: f64, inputs: &[LeadingTermInput<D>], grid: &TimeGrid) -> Result<f64> {
    let wt = grid.trapezoid_weights();
    let mut total = 0.0;
    for (l, inc) in inputs.iter().enumerate() {
        if inc.grad_u.len() != grid.len() || inc.grad_phi.len() != grid.len() {
            return Err(Error::GridMismatch(format!("gradient series of inclusion {l} do not match the grid")));
        }
        let integral: f64 = (0..grid.len())
            .map(|n| wt[n] * inc.grad_u[n].dot(&(inc.tensor.0 * inc.grad_phi[n])))
            .sum();
        total -= inc.size.powi(D as i32) * (gamma0 - inc.gamma) * integral;
    }
    Ok(total)
}

/// [`leading_term`] for disk inclusions with `U` and `Φ` given as handles.
pub fn leading_term_disks(
    inclusions: &InclusionSet,
    background: &dyn SpaceTimeFunction<2>,
    phi: &dyn SpaceTimeFunction<2>,
    grid: &TimeGrid,
) -> Result<f64> {
    let inputs = inclusions
        .items
        .iter()
        .map(|inc| {
            if inc.shape != Shape::Disk {
                return Err(invalid("the closed-form polarization tensor needs disk inclusions"));
            }
            let times = grid.nodes();
            Ok(LeadingTermInput {
                size: inc.size,
                gamma: inc.gamma,
                tensor: polarization_disk::<2>(inclusions.gamma0, inc.gamma, inc.shape.area())?,
                grad_u: times.iter().map(|&t| background.gradient(&inc.center, t)).collect(),
                grad_phi: times.iter().map(|&t| phi.gradient(&inc.center, t)).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    leading_term(inclusions.gamma0, &inputs, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{boundary_restrict, build_mesh, solve_background, ProblemData};
    use crate::greenfn::Linear;
    use crate::FracOrder;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn disk_tensor_closed_form() {
        let m = polarization_disk::<2>(1.0, 3.0, PI).unwrap();
        assert!((m.0[(0, 0)] + PI / 2.0).abs() < 1e-15);
        assert_eq!(m.0[(0, 1)], 0.0);
        assert_eq!(m.0, m.0.transpose());
        let m = polarization_disk::<2>(1.0, 50.0, PI).unwrap();
        assert!((m.0[(1, 1)] + 2.0 * PI / 51.0).abs() < 1e-15);
        assert!((m.0[(1, 1)] + 0.1231997).abs() < 1e-7);
        let m3 = polarization_disk::<3>(1.0, 50.0, 4.0 * PI / 3.0).unwrap();
        assert!((m3.0[(2, 2)] + 4.0 * PI / 52.0).abs() < 1e-15);
        assert!(polarization_disk::<2>(1.0, 1.0, PI).is_err());
    }

    #[test]
    fn leading_term_scaling_and_orthogonality() {
        let grid = TimeGrid::new(1.0, 4).unwrap();
        let tensor = polarization_disk::<2>(1.0, 50.0, PI).unwrap();
        let input = |size: f64, gu: SVector<f64, 2>, gp: SVector<f64, 2>| LeadingTermInput {
            size,
            gamma: 50.0,
            tensor,
            grad_u: vec![gu; 5],
            grad_phi: vec![gp; 5],
        };
        let (e1, e2) = (SVector::<f64, 2>::new(1.0, 0.0), SVector::<f64, 2>::new(0.0, 1.0));
        assert_eq!(leading_term(1.0, &[input(0.1, e1, e2)], &grid).unwrap(), 0.0);
        let a = leading_term(1.0, &[input(0.1, e1, e1 + e2)], &grid).unwrap();
        let b = leading_term(1.0, &[input(0.05, e1, e1 + e2)], &grid).unwrap();
        let c = leading_term(1.0, &[input(0.1, -e1, e1 + e2)], &grid).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        assert_eq!(a, -c);
    }

    #[test]
    fn identical_fields_measure_zero_and_scale_linearly() {
        let mesh = Arc::new(build_mesh(&InclusionSet::empty(1.0), 0.2, 0.2).unwrap());
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let data = ProblemData { source: None, initial: &|p: &Point| p.x, flux: &|_, n: &Point, _| n.x };
        let u = boundary_restrict(&solve_background(&mesh, FracOrder::new(0.5).unwrap(), 1.0, &data, &grid).unwrap());
        let phi = Linear(Point::new(0.3, 1.0));
        assert_eq!(measurement_boundary(&u.difference(&u).unwrap(), &phi, 1.0).unwrap().value, 0.0);
        let a = measurement_boundary(&u, &phi, 1.0).unwrap().value;
        let b = measurement_boundary(&u.scaled(2.0), &phi, 1.0).unwrap().value;
        assert!((b - 2.0 * a).abs() < 1e-14 * a.abs());
    }
}
