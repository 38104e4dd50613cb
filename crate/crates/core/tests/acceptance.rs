//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them).

use std::f64::consts::{PI, TAU};
use std::sync::{Arc, OnceLock};

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{Rotation2, Rotation3, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subdiff_core::forward::fem::{assemble, element_conductivity};
use subdiff_core::forward::*;
use subdiff_core::fracmath::special::gamma;
use subdiff_core::fracmath::{caputo_l1_apply, rl_integral};
use subdiff_core::greenfn::*;
use subdiff_core::locate_multi::*;
use subdiff_core::locate_one::*;
use subdiff_core::measure::*;
use subdiff_core::{FracOrder, TimeGrid};

const ALPHA: f64 = 0.5;

fn alpha() -> FracOrder {
    FracOrder::new(ALPHA).unwrap()
}

fn grid() -> TimeGrid {
    TimeGrid::new(1.0, 128).unwrap()
}

fn coeffs(d: usize) -> Arc<GreenCoeffs> {
    static C2: OnceLock<Arc<GreenCoeffs>> = OnceLock::new();
    static C3: OnceLock<Arc<GreenCoeffs>> = OnceLock::new();
    let cell = if d == 2 { &C2 } else { &C3 };
    cell.get_or_init(|| Arc::new(fit_green_coeffs(d, alpha(), 5).unwrap())).clone()
}

fn oracle_table() -> Arc<OracleTable> {
    static T: OnceLock<Arc<OracleTable>> = OnceLock::new();
    T.get_or_init(|| Arc::new(OracleTable::new(2, alpha(), 0.05, 80.0, 600).unwrap()))
        .clone()
}

fn report(id: usize, name: &str, pass: bool, detail: &str) {
    println!("criterion {id:2} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

/// `(center, ε)` of the four one-inclusion configurations.
fn one_inclusion_configs() -> [(Point, f64); 4] {
    [
        (Point::new(0.2, 0.3), 0.05),
        (Point::new(0.2, 0.3), 0.1),
        (Point::new(0.6, 0.6), 0.05),
        (Point::new(0.6, 0.5), 0.1),
    ]
}

fn single_disk(center: Point, eps: f64) -> (InclusionSet, Arc<Mesh>) {
    let inc = InclusionSet::new(vec![Inclusion::disk(center, eps, 50.0)], 1.0, 0.0).unwrap();
    let mesh = Arc::new(build_mesh(&inc, 0.1, eps / 6.0).unwrap());
    (inc, mesh)
}

fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

// five-point central difference with one Richardson step
fn derivative(f: impl Fn(f64) -> f64, r: f64) -> f64 {
    let d = |h: f64| (f(r - 2.0 * h) - 8.0 * f(r - h) + 8.0 * f(r + h) - f(r + 2.0 * h)) / (12.0 * h);
    let h = 2e-3 * r;
    (16.0 * d(h / 2.0) - d(h)) / 15.0
}

#[test]
fn criterion_01_fractional_primitives() {
    let a = alpha();
    let g = TimeGrid::new(1.0, 1 << 10).unwrap();
    let t: Vec<f64> = g.nodes();
    let d = caputo_l1_apply(a, &g, &t).unwrap();
    let err_power = (d[g.n_steps() - 1] - 1.0 / gamma(1.5)).abs();

    let w: Vec<f64> = t.iter().map(|&s| 1.0 + s * s + (2.0 * s).sin()).collect();
    let mut dw = vec![0.0];
    dw.extend(caputo_l1_apply(a, &g, &w).unwrap());
    let back = w[0] + rl_integral(a, &g, &dw, g.n_steps()).unwrap();
    let err_round = (back - w[g.n_steps()]).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g64 = TimeGrid::new(1.0, 64).unwrap();
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let al = FracOrder::new(rng.random_range(0.05..0.95)).unwrap();
        let v: Vec<f64> = (0..=64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
        let dv = caputo_l1_apply(al, &g64, &v).unwrap();
        let dsq = caputo_l1_apply(al, &g64, &sq).unwrap();
        for n in 1..=64 {
            worst = worst.min(v[n] * dv[n - 1] - 0.5 * dsq[n - 1]);
        }
    }
    report(
        1,
        "fractional primitives",
        err_power <= 1e-3 && err_round <= 1e-2 && worst >= -1e-6,
        &format!("|L1 t - 1/Γ(1.5)| = {err_power:.2e}, round trip {err_round:.2e}, min Alikhanov gap {worst:.2e}"),
    );
}

#[test]
fn criterion_02_green_series() {
    let a = alpha();
    let c2 = coeffs(2);
    let rel = |r: f64| {
        let o = reduced_green_oracle(2, a, r).unwrap();
        ((reduced_green_series(&c2, 3, r) - o) / o).abs()
    };
    let err10 = rel(10.0);
    let rs: Vec<f64> = (0..12).map(|i| 8.0 * (30.0f64 / 8.0).powf(i as f64 / 11.0)).collect();
    let errs: Vec<f64> = rs.iter().map(|&r| rel(r)).collect();
    let slope = log_slope(&rs, &errs);
    let expected = -2.0 * 3.0 / (2.0 - ALPHA);
    let slope_ok = ((slope - expected) / expected).abs() <= 0.15;

    let c3 = coeffs(3);
    let mut worst3: f64 = 0.0;
    for &r in &[5.0, 8.0, 12.0, 20.0] {
        let fd = -derivative(|s| line_green_series(&c3, 3, s), r) / (2.0 * PI * r);
        let v = reduced_green_series(&c3, 3, r);
        worst3 = worst3.max(((v - fd) / v).abs());
    }
    report(
        2,
        "green oracle vs series",
        err10 <= 1e-3 && slope_ok && worst3 <= 1e-10,
        &format!("rel err at r=10: {err10:.2e}, slope {slope:.3} (expected {expected:.3}), 3D relation {worst3:.1e}"),
    );
}

#[test]
fn criterion_03_gradient_kernels() {
    let r = 8.0;
    let mut worst: f64 = 0.0;
    for d in [2, 3] {
        let c = coeffs(d);
        for n in 1..=5 {
            let fd = derivative(|s| reduced_green_series(&c, n, s), r);
            let k = r * s_kernel(d, &c, n, r * r);
            worst = worst.max(((k - fd) / fd).abs());
        }
    }
    let c2 = coeffs(2);
    let all_negative = (0..=120).all(|i| {
        let y = 10f64.powf(-2.0 + 6.0 * i as f64 / 120.0);
        s_kernel(2, &c2, 1, y) < 0.0
    });
    report(
        3,
        "gradient kernels",
        worst <= 1e-5 && all_negative,
        &format!("max rel FD mismatch at r=8: {worst:.2e}, S_2,1 < 0 on [1e-2, 1e4]: {all_negative}"),
    );
}

fn mass_norm(mesh: &Mesh, v: &[f64]) -> f64 {
    let ops = assemble(mesh, &vec![1.0; mesh.n_triangles()]);
    let mv = ops.mass.apply(v);
    v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>().sqrt()
}

fn manufactured_error(h: f64, steps: usize) -> f64 {
    let mesh = Arc::new(build_mesh(&InclusionSet::empty(1.0), h, h).unwrap());
    let g = TimeGrid::new(1.0, steps).unwrap();
    let dt2 = 2.0 / gamma(3.0 - ALPHA);
    let f = move |p: &Point, t: f64| dt2 * t.powf(2.0 - ALPHA) * p.norm_squared() - 4.0 * (1.0 + t * t);
    let data = ProblemData {
        source: Some(&f),
        initial: &|p: &Point| p.norm_squared(),
        flux: &|_, _, t: f64| 2.0 * (1.0 + t * t),
    };
    let u = solve_background(&mesh, alpha(), 1.0, &data, &g).unwrap();
    let exact: Vec<f64> = mesh.vertices.iter().map(|p| 2.0 * p.norm_squared()).collect();
    let err: Vec<f64> = u.values[steps].iter().zip(&exact).map(|(a, b)| a - b).collect();
    mass_norm(&mesh, &err) / mass_norm(&mesh, &exact)
}

fn heat_backward_euler(mesh: &Mesh, u0: &[f64], g: &TimeGrid) -> Vec<f64> {
    let ops = assemble(mesh, &element_conductivity(mesh, &InclusionSet::empty(1.0)));
    let n = mesh.n_vertices();
    let tau = g.tau();
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
    for _ in 0..g.n_steps() {
        let mu = ops.mass.apply(&u);
        let mut rhs = Mat::from_fn(n, 1, |i, _| mu[i] / tau);
        llt.solve_in_place(rhs.as_mut());
        u = (0..n).map(|i| rhs[(i, 0)]).collect();
    }
    u
}

#[test]
fn criterion_04_forward_solver() {
    let errs: Vec<f64> = [(0.2, 16), (0.1, 64), (0.05, 256)]
        .iter()
        .map(|&(h, n)| manufactured_error(h, n))
        .collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);

    let mesh = Arc::new(build_mesh(&InclusionSet::empty(1.0), 0.08, 0.08).unwrap());
    let g = TimeGrid::new(0.1, 64).unwrap();
    let init = |p: &Point| (-8.0 * (p - Point::new(0.3, -0.2)).norm_squared()).exp();
    let data = ProblemData { source: None, initial: &init, flux: &|_, _, _| 0.0 };
    let frac = solve_background(&mesh, FracOrder::new(0.999).unwrap(), 1.0, &data, &g).unwrap();
    let u0: Vec<f64> = mesh.vertices.iter().map(init).collect();
    let heat = heat_backward_euler(&mesh, &u0, &g);
    let diff: Vec<f64> = frac.values[g.n_steps()].iter().zip(&heat).map(|(a, b)| a - b).collect();
    let rel = mass_norm(&mesh, &diff) / mass_norm(&mesh, &heat);
    report(
        4,
        "forward solver",
        decreasing && rel <= 1e-2,
        &format!("manufactured L2 errors {errs:.4?}, alpha=0.999 vs heat {rel:.2e}"),
    );
}

fn exact_test_function(source: Point) -> TimeReversed<ExactFundamental<2>> {
    TimeReversed::new(ExactFundamental::new(oracle_table(), SourcePoint::new(source), 1.0).unwrap(), 1.0)
}

#[test]
fn criterion_05_measurement_equivalence() {
    let mut worst: f64 = 0.0;
    for (z, eps) in one_inclusion_configs() {
        let (inc, mesh) = single_disk(z, eps);
        for (a, src) in [(Point::new(1.0, 0.0), Point::new(-0.5, 2.0)), (Point::new(0.0, 1.0), Point::new(2.0, -0.5))] {
            let data = ProblemData { source: None, initial: &|p: &Point| a.dot(p), flux: &|_, n: &Point, _| a.dot(n) };
            let u = solve_subdiffusion(&mesh, alpha(), &inc, &data, &grid()).unwrap();
            let bg = solve_background(&mesh, alpha(), 1.0, &data, &grid()).unwrap();
            let diff = boundary_restrict(&u).difference(&boundary_restrict(&bg)).unwrap();
            let phi = exact_test_function(src);
            let b = measurement_boundary(&diff, &phi, 1.0).unwrap().value;
            let i = measurement_interior(&u, &phi, &inc).unwrap().value;
            worst = worst.max(((b - i) / i).abs());
        }
    }
    report(5, "measurement equivalence", worst <= 1e-2, &format!("max relative boundary/interior gap {worst:.2e}"));
}

#[test]
fn criterion_06_asymptotic_expansion() {
    let z = Point::new(0.2, 0.3);
    let a = Point::new(1.0, 0.0);
    let phi = exact_test_function(Point::new(-0.5, 2.0));
    let mut scaled_rem = Vec::new();
    let mut scaled_i = Vec::new();
    for eps in [0.1f64, 0.05, 0.025] {
        let (inc, mesh) = single_disk(z, eps);
        let data = ProblemData { source: None, initial: &|p: &Point| a.dot(p), flux: &|_, n: &Point, _| a.dot(n) };
        let u = solve_subdiffusion(&mesh, alpha(), &inc, &data, &grid()).unwrap();
        let bg = solve_background(&mesh, alpha(), 1.0, &data, &grid()).unwrap();
        let diff = boundary_restrict(&u).difference(&boundary_restrict(&bg)).unwrap();
        let i = measurement_boundary(&diff, &phi, 1.0).unwrap().value;
        let lead = leading_term_disks(&inc, &Linear(a), &phi, &grid()).unwrap();
        scaled_rem.push((i - lead).abs() / (eps.powi(3) * eps.ln().abs().sqrt()));
        scaled_i.push(i / (eps * eps));
    }
    let spread = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean_i = scaled_i.iter().sum::<f64>() / 3.0;
    let dev_i = scaled_i.iter().map(|v| ((v - mean_i) / mean_i).abs()).fold(0.0, f64::max);
    report(
        6,
        "asymptotic expansion",
        spread(&scaled_rem) < 3.0 && dev_i <= 0.25,
        &format!(
            "remainder/(ε³|log ε|^½) = {scaled_rem:.5?} (spread {:.2}), I/ε² = {scaled_i:.5?} (max dev {dev_i:.2e})",
            spread(&scaled_rem)
        ),
    );
}

#[test]
fn criterion_07_one_inclusion_synthetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = grid();
    let mut worst2: f64 = 0.0;
    let c2 = coeffs(2);
    for _ in 0..20 {
        let (r, th): (f64, f64) = (rng.random_range(0.0..0.7), rng.random_range(0.0..TAU));
        let z = Vector2::new(r * th.cos(), r * th.sin());
        let rot = Rotation2::new(rng.random_range(0.0..TAU));
        let offset = rng.random_range(1.5..3.0);
        let segs = [
            ProbeSegment::centered(0, rot * Vector2::new(0.0, offset), rot * Vector2::x(), 1.0).unwrap(),
            ProbeSegment::centered(1, rot * Vector2::new(offset, 0.0), rot * Vector2::y(), 1.0).unwrap(),
        ];
        let inc = SyntheticInclusion { center: z, size: 0.05, gamma: 50.0, gamma0: 1.0 };
        let dirs = [segs[0].direction(), segs[1].direction()];
        let rec = locate_one_inclusion(
            segs,
            |j, p| inc.measurement(&dirs[j], &probe_test_function(&c2, 1, *p, 1.0, 1.0)?, &g),
            1e-10,
        )
        .unwrap();
        worst2 = worst2.max((rec.p - z).norm());
    }
    let c3 = coeffs(3);
    let mut worst3: f64 = 0.0;
    for _ in 0..20 {
        let z = Vector3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let rot = Rotation3::new(axis.normalize() * rng.random_range(0.0..1.5));
        let (e1, e2, e3) = (rot * Vector3::x(), rot * Vector3::y(), rot * Vector3::z());
        let planes = [
            ProbePlane::new(0, e2 * 2.0, e1, e3, (1.0, 1.0)).unwrap(),
            ProbePlane::new(1, e1 * 2.0, e2, e3, (1.0, 1.0)).unwrap(),
        ];
        let inc = SyntheticInclusion { center: z, size: 0.05, gamma: 50.0, gamma0: 1.0 };
        let rec = locate_one_inclusion_3d(
            planes,
            |j, k, p| {
                let a = if k == 0 { planes[j].first } else { planes[j].second };
                inc.measurement(&a, &probe_test_function(&c3, 1, *p, 1.0, 1.0)?, &g)
            },
            1e-10,
        )
        .unwrap();
        worst3 = worst3.max((rec.p - z).norm());
    }
    report(
        7,
        "one-inclusion exact recovery",
        worst2 <= 1e-6 && worst3 <= 1e-6,
        &format!("max |P - z| over 20 configs: 2D {worst2:.2e}, 3D {worst3:.2e}"),
    );
}

#[test]
fn criterion_08_one_inclusion_fem() {
    let segs = ProbeSegment::default_pair();
    let c2 = coeffs(2);
    let mut lines = Vec::new();
    let mut pass = true;
    for (z, eps) in one_inclusion_configs() {
        let (inc, mesh) = single_disk(z, eps);
        let traces = [
            simulate_harmonic(&mesh, &inc, alpha(), &grid(), segs[0].direction()).unwrap(),
            simulate_harmonic(&mesh, &inc, alpha(), &grid(), segs[1].direction()).unwrap(),
        ];
        let clean = locate_one_from_traces(&traces, segs, &c2, 3, None, 1e-6).unwrap();
        let e0 = (clean.p - z).norm();
        let mut noisy: Vec<f64> = (0..10)
            .map(|seed| {
                locate_one_from_traces(&traces, segs, &c2, 3, Some(NoiseSpec { sigma: 0.01, seed }), 1e-6)
                    .map_or(f64::INFINITY, |r| (r.p - z).norm())
            })
            .collect();
        noisy.sort_by(f64::total_cmp);
        let median = 0.5 * (noisy[4] + noisy[5]);
        pass &= e0 <= eps && median <= 2.0 * eps;
        lines.push(format!("z=({}, {}) ε={eps}: noiseless {:.3}ε, noisy median {:.3}ε", z.x, z.y, e0 / eps, median / eps));
    }
    report(8, "one-inclusion FEM recovery", pass, &lines.join("; "));
}

struct MultiCase {
    centers: Vec<Point>,
    setup: MultiSetup,
}

fn multi_case(three: bool) -> MultiCase {
    let centers = if three {
        vec![Point::new(-0.2, 0.0), Point::new(0.2, 0.3), Point::new(0.5, -0.1)]
    } else {
        vec![Point::new(0.3, 0.2), Point::new(-0.4, 0.0)]
    };
    let inc = InclusionSet::new(centers.iter().map(|&c| Inclusion::disk(c, 0.05, 3.0)).collect(), 1.0, 0.0).unwrap();
    let mesh = Arc::new(build_mesh(&inc, 0.1, 0.05 / 4.0).unwrap());
    let setup = MultiSetup {
        mesh,
        inclusions: inc,
        alpha: alpha(),
        coeffs: coeffs(2),
        n_terms: 3,
        grid: grid(),
        t_init: 1.0 / 128.0,
    };
    MultiCase { centers, setup }
}

fn apertures() -> [SourceSet; 3] {
    [
        SourceSet::full(10, 2.0).unwrap(),
        SourceSet::arc(15, 2.0, PI / 2.0, PI / 2.0).unwrap(),
        SourceSet::arc(20, 2.0, PI / 2.0, PI / 4.0).unwrap(),
    ]
}

fn two_disk_full_data() -> &'static (MultiCase, DataMatrix) {
    static D: OnceLock<(MultiCase, DataMatrix)> = OnceLock::new();
    D.get_or_init(|| {
        let case = multi_case(false);
        let data = build_data_matrix(&case.setup, &apertures()[0], 0.0, 0).unwrap();
        (case, data)
    })
}

fn peak_errors(case: &MultiCase, sources: &SourceSet, data: &DataMatrix) -> (usize, f64) {
    let k = Truncation::Gap(1e-12).select(&data.singular_values).unwrap();
    let model = KernelModel::new(Arc::clone(&case.setup.coeffs), case.setup.n_terms, 1.0, &case.setup.grid);
    let scan = scan_indicator(data, sources, &model, ScanRegion::default(), k).unwrap();
    match peak_extract(&scan, case.centers.len(), 0.1) {
        Ok(peaks) => {
            let worst = case
                .centers
                .iter()
                .map(|c| peaks.iter().map(|p| (p - c).norm()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            (k, worst)
        }
        Err(_) => (k, f64::INFINITY),
    }
}

#[test]
fn criterion_09_multi_inclusion_recovery() {
    let mut pass = true;
    let mut lines = Vec::new();
    let (two, two_full) = two_disk_full_data();
    let s = &two_full.singular_values;
    let decay = s[6] / s[0];
    let k_ratio = select_truncation(s, 5e-4).unwrap();
    pass &= decay <= 1e-2 && (4..=5).contains(&k_ratio);
    lines.push(format!("two disks s7/s1 = {decay:.2e}, ratio-rule k = {k_ratio}"));
    let three = multi_case(true);
    for (label, case) in [("two", two), ("three", &three)] {
        for (i, sources) in apertures().iter().enumerate() {
            let data = if i == 0 && label == "two" {
                two_full.clone()
            } else {
                build_data_matrix(&case.setup, sources, 0.0, 0).unwrap()
            };
            let (k, err) = peak_errors(case, sources, &data);
            let limit = if i == 0 { 0.05 } else { 0.08 };
            pass &= err <= limit;
            lines.push(format!("{label} disks aperture {} (n={}, k={k}): max peak error {err:.3}", i + 1, sources.len()));
        }
    }
    report(9, "multi-inclusion recovery", pass, &lines.join("; "));
}

#[test]
fn criterion_10_indicator_invariants() {
    let (case, data) = two_disk_full_data();
    let sources = &apertures()[0];
    let model = KernelModel::new(Arc::clone(&case.setup.coeffs), case.setup.n_terms, 1.0, &case.setup.grid);
    let mut min_w = f64::INFINITY;
    let mut monotone = true;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..200 {
        let (r, th): (f64, f64) = (rng.random_range(0.0f64..0.9).sqrt(), rng.random_range(0.0..TAU));
        let g = g_matrix(&Point::new(r * th.cos(), r * th.sin()), sources, &model).unwrap();
        let mut prev = 1.0;
        for k in 0..=data.dim() {
            let w = indicator(data, k, &g).unwrap().value;
            min_w = min_w.min(w);
            monotone &= w >= prev * (1.0 - 1e-12);
            prev = w;
        }
    }
    let mut proj_err: f64 = 0.0;
    for k in 0..=data.dim() {
        let q = data.projector(k);
        proj_err = proj_err.max((&q * &q - &q).amax()).max((&q - q.transpose()).amax());
    }
    report(
        10,
        "indicator invariants",
        min_w >= 1.0 - 1e-12 && monotone && proj_err <= 1e-12,
        &format!("min W = {min_w:.6}, monotone in k: {monotone}, projector defect {proj_err:.1e}"),
    );
}
