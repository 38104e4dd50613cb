use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use subdiff_core::forward::fem::{assemble, element_conductivity};
use subdiff_core::forward::{build_mesh, solve_background, InclusionSet, Mesh, Point, ProblemData};
use subdiff_core::fracmath::special::gamma;
use subdiff_core::{FracOrder, TimeGrid};

fn mass_norm(mesh: &Mesh, v: &[f64]) -> f64 {
    let ops = assemble(mesh, &vec![1.0; mesh.n_triangles()]);
    let mv = ops.mass.apply(v);
    v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>().sqrt()
}

fn manufactured_error(h: f64, steps: usize) -> f64 {
    let alpha = 0.5;
    let mesh = Arc::new(build_mesh(&InclusionSet::empty(1.0), h, h).unwrap());
    let grid = TimeGrid::new(1.0, steps).unwrap();
    let dt2 = 2.0 / gamma(3.0 - alpha);
    let f = move |p: &Point, t: f64| dt2 * t.powf(2.0 - alpha) * p.norm_squared() - 4.0 * (1.0 + t * t);
    let data = ProblemData {
        source: Some(&f),
        initial: &|p: &Point| p.norm_squared(),
        flux: &|_, _, t: f64| 2.0 * (1.0 + t * t),
    };
    let u = solve_background(&mesh, FracOrder::new(alpha).unwrap(), 1.0, &data, &grid).unwrap();
    let exact: Vec<f64> = mesh.vertices.iter().map(|p| 2.0 * p.norm_squared()).collect();
    let err: Vec<f64> = u.values[steps].iter().zip(&exact).map(|(a, b)| a - b).collect();
    mass_norm(&mesh, &err) / mass_norm(&mesh, &exact)
}

#[test]
fn manufactured_solution_converges() {
    let errs: Vec<f64> = [(0.2, 16), (0.1, 64), (0.05, 256)]
        .iter()
        .map(|&(h, n)| manufactured_error(h, n))
        .collect();
    println!("manufactured errors {errs:?}");
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
}

/// Classical backward Euler for `u_t = Δu` with the same P1 operators.
fn backward_euler(mesh: &Mesh, u0: &[f64], grid: &TimeGrid) -> Vec<f64> {
    let ops = assemble(mesh, &element_conductivity(mesh, &InclusionSet::empty(1.0)));
    let n = mesh.n_vertices();
    let tau = grid.tau();
    let trip: Vec<_> = ops
        .mass
        .triplets()
        .map(|(i, j, m)| Triplet::new(i, j, m / tau + ops.stiffness.get(i, j)))
        .collect();
    let llt = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
        .unwrap()
        .sp_cholesky(Side::Lower)
        .unwrap();
    let mut u = u0.to_vec();
    for _ in 0..grid.n_steps() {
        let mu = ops.mass.apply(&u);
        let mut rhs = Mat::from_fn(n, 1, |i, _| mu[i] / tau);
        llt.solve_in_place(rhs.as_mut());
        u = (0..n).map(|i| rhs[(i, 0)]).collect();
    }
    u
}

#[test]
fn near_unit_order_matches_heat_equation() {
    let mesh = Arc::new(build_mesh(&InclusionSet::empty(1.0), 0.08, 0.08).unwrap());
    let grid = TimeGrid::new(0.1, 64).unwrap();
    let init = |p: &Point| (-8.0 * (p - Point::new(0.3, -0.2)).norm_squared()).exp();
    let data = ProblemData { source: None, initial: &init, flux: &|_, _, _| 0.0 };
    let frac = solve_background(&mesh, FracOrder::new(0.999).unwrap(), 1.0, &data, &grid).unwrap();
    let u0: Vec<f64> = mesh.vertices.iter().map(init).collect();
    let heat = backward_euler(&mesh, &u0, &grid);
    let diff: Vec<f64> = frac.values[grid.n_steps()].iter().zip(&heat).map(|(a, b)| a - b).collect();
    let rel = mass_norm(&mesh, &diff) / mass_norm(&mesh, &heat);
    println!("alpha=0.999 vs backward Euler: {rel:.3e}");
    assert!(rel < 1e-2);
}
