//! Subcommand drivers. Each writes its CSV outputs plus `manifest.toml`
//! into the output directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use subdiff_core::forward::{
    add_noise, boundary_restrict, build_mesh, solve_background, solve_subdiffusion, InclusionSet, Mesh, Point,
    ProblemData, SpaceTimeField,
};
use subdiff_core::greenfn::{fit_green_coeffs, ExactFundamental, GreenCoeffs, OracleTable, SourcePoint, TimeReversed};
use subdiff_core::locate_multi::{
    data_matrix_from_traces, peak_extract, scan_indicator, simulate_sources, KernelModel, MultiSetup, ScanRegion,
    SourceTraces, Truncation,
};
use subdiff_core::locate_one::{
    locate_one_from_traces, probe_value, simulate_harmonic, trace_differences, HarmonicTraces, NoiseSpec,
    Reconstruction1,
};
use subdiff_core::measure::{measurement_boundary, measurement_interior};

use crate::config::{Algorithm, InclusionConfig, RunConfig};
use crate::failure::{Failure, Stage};

/// Destination directory of one run.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(dir).stage("creating the output directory")?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn csv(&self, name: &str) -> Result<csv::Writer<std::fs::File>, Failure> {
        csv::Writer::from_path(self.path(name)).stage(name)
    }

    /// The manifest is itself a valid config: rerunning with
    /// `--config manifest.toml` repeats the run exactly.
    pub fn write_manifest(&self, command: &str, cfg: &RunConfig) -> Result<(), Failure> {
        let text = format!(
            "# subdiff {} manifest\n# command = {command}\n# seed = {}\n{}",
            env!("CARGO_PKG_VERSION"),
            cfg.noise.seed,
            cfg.to_toml()
        );
        std::fs::write(self.path("manifest.toml"), text).stage("writing the manifest")
    }
}

fn f(v: f64) -> String {
    format!("{v:.12e}")
}

fn mesh_for(cfg: &RunConfig, inclusions: &InclusionSet) -> Result<Arc<Mesh>, Failure> {
    Ok(Arc::new(build_mesh(inclusions, cfg.mesh.h_far, cfg.h_near()).stage("meshing")?))
}

fn coeffs_for(cfg: &RunConfig) -> Result<Arc<GreenCoeffs>, Failure> {
    Ok(Arc::new(fit_green_coeffs(2, cfg.alpha(), cfg.model.n_terms.max(3)).stage("fitting the series coefficients")?))
}

fn noise_spec(sigma: f64, seed: u64) -> Option<NoiseSpec> {
    (sigma > 0.0).then_some(NoiseSpec { sigma, seed })
}

fn nearest_error(p: &Point, centers: &[Point]) -> f64 {
    centers.iter().map(|c| (p - c).norm()).fold(f64::NAN, f64::min)
}

fn centers(inclusions: &InclusionSet) -> Vec<Point> {
    inclusions.items.iter().map(|i| i.center).collect()
}

const AXES: [(&str, [f64; 2]); 2] = [("x1", [1.0, 0.0]), ("x2", [0.0, 1.0])];

fn harmonic_problem(field_dir: Point, gamma0: f64) -> (impl Fn(&Point) -> f64 + Sync, impl Fn(&Point, &Point, f64) -> f64 + Sync) {
    (move |p: &Point| field_dir.dot(p), move |_: &Point, n: &Point, _: f64| gamma0 * field_dir.dot(n))
}

fn write_snapshots(out: &Output, name: &str, fields: &[(&str, &SpaceTimeField)]) -> Result<(), Failure> {
    let Some((_, first)) = fields.first() else { return Ok(()) };
    let levels = {
        let n = first.grid.n_steps();
        let mut l = vec![0, n / 2, n];
        l.dedup();
        l
    };
    let mut w = out.csv(name)?;
    let mut header = vec!["node".to_string(), "x".into(), "y".into()];
    for (label, _) in fields {
        header.extend(levels.iter().map(|&n| format!("{label}_t{n}")));
    }
    w.write_record(&header).stage(name)?;
    for (i, p) in first.mesh.vertices.iter().enumerate() {
        let mut row = vec![i.to_string(), f(p.x), f(p.y)];
        for (_, field) in fields {
            row.extend(levels.iter().map(|&n| f(field.values[n][i])));
        }
        w.write_record(&row).stage(name)?;
    }
    w.flush().stage(name)
}

/// Forward solves for the harmonic backgrounds `U = x1` and `U = x2`.
pub fn cmd_forward(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    let inclusions = cfg.inclusion_set()?;
    let mesh = mesh_for(cfg, &inclusions)?;
    mesh.save(&out.path("mesh.txt")).stage("writing the mesh")?;
    let grid = cfg.grid();
    let gamma0 = cfg.model.gamma0;
    for (j, (label, a)) in AXES.iter().enumerate() {
        let (initial, flux) = harmonic_problem(Point::new(a[0], a[1]), gamma0);
        let data = ProblemData { source: None, initial: &initial, flux: &flux };
        let bg = solve_background(&mesh, cfg.alpha(), gamma0, &data, &grid).stage("background solve")?;
        let bg_trace = boundary_restrict(&bg);
        bg_trace.write_csv(&out.path(&format!("trace_U_{label}.csv"))).stage("writing traces")?;
        if inclusions.is_empty() {
            write_snapshots(out, &format!("snapshot_{label}.csv"), &[("U", &bg)])?;
            continue;
        }
        let u = solve_subdiffusion(&mesh, cfg.alpha(), &inclusions, &data, &grid).stage("forward solve")?;
        let trace = boundary_restrict(&u);
        trace.write_csv(&out.path(&format!("trace_u_{label}.csv"))).stage("writing traces")?;
        trace
            .difference(&bg_trace)
            .stage("trace difference")?
            .write_csv(&out.path(&format!("trace_diff_{label}.csv")))
            .stage("writing traces")?;
        if cfg.noise.sigma > 0.0 {
            let seed = cfg.noise.seed.wrapping_mul(2).wrapping_add(j as u64);
            let noisy = add_noise(&trace, cfg.noise.sigma, seed).stage("adding noise")?;
            noisy.trace.write_csv(&out.path(&format!("trace_u_noisy_{label}.csv"))).stage("writing traces")?;
        }
        write_snapshots(out, &format!("snapshot_{label}.csv"), &[("u", &u), ("U", &bg)])?;
    }
    out.write_manifest("forward", cfg)
}

fn one_traces(cfg: &RunConfig, inclusions: &InclusionSet) -> Result<[HarmonicTraces; 2], Failure> {
    let mesh = mesh_for(cfg, inclusions)?;
    let segs = cfg.segments()?;
    let grid = cfg.grid();
    let run = |j: usize| simulate_harmonic(&mesh, inclusions, cfg.alpha(), &grid, segs[j].direction()).stage("forward solve");
    let (a, b) = rayon::join(|| run(0), || run(1));
    Ok([a?, b?])
}

fn write_reconstruction(out: &Output, rec: &Reconstruction1<2>, truth: &[Point]) -> Result<(), Failure> {
    let mut w = out.csv("result.csv")?;
    w.write_record(["px", "py", "p1x", "p1y", "p2x", "p2y", "true_x", "true_y", "error"]).stage("result.csv")?;
    let nearest = truth
        .iter()
        .min_by(|a, b| (rec.p - **a).norm().total_cmp(&(rec.p - **b).norm()))
        .copied()
        .unwrap_or(Point::new(f64::NAN, f64::NAN));
    w.write_record([
        f(rec.p.x),
        f(rec.p.y),
        f(rec.p1.x),
        f(rec.p1.y),
        f(rec.p2.x),
        f(rec.p2.y),
        f(nearest.x),
        f(nearest.y),
        f(nearest_error(&rec.p, truth)),
    ])
    .stage("result.csv")?;
    w.flush().stage("result.csv")
}

/// One-inclusion reconstruction from two probe segments.
pub fn cmd_locate_one(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    require(cfg, Algorithm::One, "locate-one")?;
    let inclusions = cfg.inclusion_set()?;
    let traces = one_traces(cfg, &inclusions)?;
    let coeffs = coeffs_for(cfg)?;
    let one = cfg.one.clone().unwrap_or_default();
    let segs = cfg.segments()?;
    let noise = noise_spec(cfg.noise.sigma, cfg.noise.seed);

    let diffs = trace_differences(&traces, noise).stage("trace difference")?;
    let samples = one.profile_samples.max(2);
    let rows: Vec<(usize, f64, Point, f64)> = (0..2 * samples)
        .into_par_iter()
        .map(|i| {
            let (j, k) = (i / samples, i % samples);
            let s = k as f64 / (samples - 1) as f64;
            let p = segs[j].point(s);
            Ok((j, s, p, probe_value(&p, &diffs[j], &coeffs, cfg.model.n_terms, cfg.model.gamma0).stage("probe")?))
        })
        .collect::<Result<_, Failure>>()?;
    let mut w = out.csv("profile.csv")?;
    w.write_record(["segment", "s", "x", "y", "I"]).stage("profile.csv")?;
    for (j, s, p, v) in rows {
        w.write_record([j.to_string(), f(s), f(p.x), f(p.y), f(v)]).stage("profile.csv")?;
    }
    w.flush().stage("profile.csv")?;

    out.write_manifest("locate-one", cfg)?;
    let rec = locate_one_from_traces(&traces, segs, &coeffs, cfg.model.n_terms, noise, one.tol).stage("root finding")?;
    write_reconstruction(out, &rec, &centers(&inclusions))
}

fn multi_setup(cfg: &RunConfig, inclusions: InclusionSet, coeffs: Arc<GreenCoeffs>) -> Result<MultiSetup, Failure> {
    let multi = cfg.multi.clone().unwrap_or_default();
    Ok(MultiSetup {
        mesh: mesh_for(cfg, &inclusions)?,
        inclusions,
        alpha: cfg.alpha(),
        coeffs,
        n_terms: cfg.model.n_terms,
        grid: cfg.grid(),
        t_init: multi.t_init_fraction * cfg.model.t_final,
    })
}

struct MultiOutcome {
    k: usize,
    peaks: Vec<Point>,
    errors: Vec<f64>,
}

fn multi_reconstruct(
    cfg: &RunConfig,
    setup: &MultiSetup,
    traces: &[SourceTraces],
    sigma: f64,
    seed: u64,
    out: Option<&Output>,
) -> Result<MultiOutcome, Failure> {
    let multi = cfg.multi.clone().unwrap_or_default();
    let sources = cfg.sources()?;
    let data = data_matrix_from_traces(setup, &sources, traces, sigma, seed).stage("data matrix")?;
    let k = Truncation::from(multi.truncation).select(&data.singular_values).stage("truncation")?;
    let model = KernelModel::new(Arc::clone(&setup.coeffs), setup.n_terms, setup.gamma0(), &setup.grid);
    let region = ScanRegion {
        half_width: multi.scan.half_width,
        resolution: multi.scan.resolution,
        mask_radius: multi.scan.mask_radius,
    };
    let scan = scan_indicator(&data, &sources, &model, region, k).stage("indicator scan")?;
    if let Some(out) = out {
        data.write_csv(&out.path("data_matrix.csv")).stage("writing the data matrix")?;
        data.write_singular_values_csv(&out.path("singular_values.csv")).stage("writing singular values")?;
        scan.write_csv(&out.path("indicator.csv")).stage("writing the indicator grid")?;
    }
    let truth = centers(&setup.inclusions);
    let peaks = peak_extract(&scan, truth.len().max(1), multi.peak_separation).stage("peak extraction")?;
    let errors = truth.iter().map(|c| nearest_error(c, &peaks)).collect();
    Ok(MultiOutcome { k, peaks, errors })
}

/// Multi-inclusion imaging with the truncated-SVD indicator.
pub fn cmd_locate_multi(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    require(cfg, Algorithm::Multi, "locate-multi")?;
    let inclusions = cfg.inclusion_set()?;
    let setup = multi_setup(cfg, inclusions, coeffs_for(cfg)?)?;
    let sources = cfg.sources()?;
    let traces = simulate_sources(&setup, &sources).stage("source solves")?;
    out.write_manifest("locate-multi", cfg)?;
    let res = multi_reconstruct(cfg, &setup, &traces, cfg.noise.sigma, cfg.noise.seed, Some(out))?;
    let truth = centers(&setup.inclusions);
    let mut w = out.csv("peaks.csv")?;
    w.write_record(["k", "x", "y", "nearest_true_x", "nearest_true_y", "error"]).stage("peaks.csv")?;
    for p in &res.peaks {
        let near = truth
            .iter()
            .min_by(|a, b| (p - **a).norm().total_cmp(&(p - **b).norm()))
            .copied()
            .unwrap_or(Point::new(f64::NAN, f64::NAN));
        w.write_record([res.k.to_string(), f(p.x), f(p.y), f(near.x), f(near.y), f(nearest_error(p, &truth))])
            .stage("peaks.csv")?;
    }
    w.flush().stage("peaks.csv")
}

/// Boundary and interior evaluations of the measurement for exact test functions.
pub fn cmd_oracle_check(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    let inclusions = cfg.inclusion_set()?;
    if inclusions.is_empty() {
        return Err(Failure::config("oracle-check needs at least one inclusion"));
    }
    let oc = &cfg.oracle_check;
    let table = Arc::new(
        OracleTable::new(2, cfg.alpha(), oc.r_min, oc.r_max, oc.table_points).stage("tabulating the exact profile")?,
    );
    let mesh = mesh_for(cfg, &inclusions)?;
    let grid = cfg.grid();
    let gamma0 = cfg.model.gamma0;
    let mut w = out.csv("oracle_check.csv")?;
    w.write_record(["background", "source_x", "source_y", "boundary", "interior", "rel_diff"]).stage("oracle_check.csv")?;
    for (label, a) in AXES {
        let (initial, flux) = harmonic_problem(Point::new(a[0], a[1]), gamma0);
        let data = ProblemData { source: None, initial: &initial, flux: &flux };
        let u = solve_subdiffusion(&mesh, cfg.alpha(), &inclusions, &data, &grid).stage("forward solve")?;
        let bg = solve_background(&mesh, cfg.alpha(), gamma0, &data, &grid).stage("background solve")?;
        let diff = boundary_restrict(&u).difference(&boundary_restrict(&bg)).stage("trace difference")?;
        for src in &oc.test_sources {
            let x = Point::new(src[0], src[1]);
            let phi = TimeReversed::new(
                ExactFundamental::new(Arc::clone(&table), SourcePoint::new(x), gamma0).stage("test function")?,
                grid.t_final(),
            );
            let b = measurement_boundary(&diff, &phi, gamma0).stage("boundary measurement")?.value;
            let i = measurement_interior(&u, &phi, &inclusions).stage("interior measurement")?.value;
            w.write_record([label.to_string(), f(x.x), f(x.y), f(b), f(i), f(((b - i) / i).abs())])
                .stage("oracle_check.csv")?;
        }
    }
    w.flush().stage("oracle_check.csv")?;
    out.write_manifest("oracle-check", cfg)
}

fn with_geometry(items: &[InclusionConfig], size: Option<f64>, aspect: Option<f64>) -> Vec<InclusionConfig> {
    items
        .iter()
        .map(|inc| InclusionConfig {
            center: inc.center,
            size: size.unwrap_or(inc.size),
            gamma: inc.gamma,
            aspect: match aspect {
                Some(a) if a == 1.0 => None,
                Some(a) => Some(a),
                None => inc.aspect,
            },
        })
        .collect()
}

/// Repeats the selected algorithm over lists of sizes, aspect ratios and
/// noise levels. Reconstruction failures are recorded, not fatal.
pub fn cmd_sweep(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    let Some(sweep) = cfg.sweep.clone() else {
        return Err(Failure::config("sweep needs a [sweep] section"));
    };
    let sizes: Vec<Option<f64>> = if sweep.sizes.is_empty() { vec![None] } else { sweep.sizes.iter().map(|&s| Some(s)).collect() };
    let aspects: Vec<Option<f64>> =
        if sweep.aspects.is_empty() { vec![None] } else { sweep.aspects.iter().map(|&a| Some(a)).collect() };
    let coeffs = coeffs_for(cfg)?;
    out.write_manifest("sweep", cfg)?;
    let mut w = out.csv("sweep.csv")?;
    w.write_record(["size", "aspect", "sigma", "seed", "k", "px", "py", "error", "status"]).stage("sweep.csv")?;
    for size in &sizes {
        for aspect in &aspects {
            let mut run = cfg.clone();
            run.inclusions = with_geometry(&cfg.inclusions, *size, *aspect);
            if size.is_some() {
                run.mesh.h_near = None;
            }
            let run = run.resolved();
            run.validate()?;
            let inclusions = run.inclusion_set()?;
            let size_v = run.inclusions.iter().map(|i| i.size).fold(f64::NAN, f64::min);
            let aspect_v = run.inclusions.first().and_then(|i| i.aspect).unwrap_or(1.0);
            let cases: Vec<(f64, u64)> = sweep
                .sigmas
                .iter()
                .flat_map(|&s| {
                    let reps = if s > 0.0 { sweep.repeats } else { 1 };
                    (0..reps).map(move |r| (s, r))
                })
                .map(|(s, r)| (s, cfg.noise.seed.wrapping_add(r)))
                .collect();
            let mut rows = Vec::new();
            match cfg.algorithm {
                Algorithm::One => {
                    let traces = one_traces(&run, &inclusions)?;
                    let segs = run.segments()?;
                    let tol = run.one.clone().unwrap_or_default().tol;
                    let truth = centers(&inclusions);
                    for &(sigma, seed) in &cases {
                        let res = locate_one_from_traces(&traces, segs, &coeffs, run.model.n_terms, noise_spec(sigma, seed), tol)
                            .stage("root finding");
                        rows.push(match res {
                            Ok(rec) => (sigma, seed, 0, rec.p, nearest_error(&rec.p, &truth), "ok".to_string()),
                            Err(e) => failed_row(sigma, seed, e)?,
                        });
                    }
                }
                Algorithm::Multi => {
                    let setup = multi_setup(&run, inclusions, Arc::clone(&coeffs))?;
                    let traces = simulate_sources(&setup, &run.sources()?).stage("source solves")?;
                    for &(sigma, seed) in &cases {
                        rows.push(match multi_reconstruct(&run, &setup, &traces, sigma, seed, None) {
                            Ok(res) => {
                                let worst = res.errors.iter().cloned().fold(0.0, f64::max);
                                let p = res.peaks.first().copied().unwrap_or(Point::new(f64::NAN, f64::NAN));
                                (sigma, seed, res.k, p, worst, "ok".to_string())
                            }
                            Err(e) => failed_row(sigma, seed, e)?,
                        });
                    }
                }
            }
            for (sigma, seed, k, p, err, status) in rows {
                w.write_record([f(size_v), f(aspect_v), f(sigma), seed.to_string(), k.to_string(), f(p.x), f(p.y), f(err), status])
                    .stage("sweep.csv")?;
            }
            w.flush().stage("sweep.csv")?;
        }
    }
    Ok(())
}

type SweepRow = (f64, u64, usize, Point, f64, String);

fn failed_row(sigma: f64, seed: u64, e: Failure) -> Result<SweepRow, Failure> {
    if e.kind != crate::failure::Kind::Reconstruction {
        return Err(e);
    }
    Ok((sigma, seed, 0, Point::new(f64::NAN, f64::NAN), f64::NAN, format!("failed: {}", e.message)))
}

fn require(cfg: &RunConfig, algorithm: Algorithm, command: &str) -> Result<(), Failure> {
    if cfg.algorithm == algorithm {
        Ok(())
    } else {
        Err(Failure::config(format!("{command} needs algorithm = \"{}\"", match algorithm {
            Algorithm::One => "one",
            Algorithm::Multi => "multi",
        })))
    }
}
