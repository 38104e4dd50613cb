use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use subdiff_bench::{alpha, coeffs, disk_mesh, two_disk_data};
use subdiff_core::forward::{solve_subdiffusion, Point, ProblemData};
use subdiff_core::fracmath::caputo_l1_apply;
use subdiff_core::greenfn::{reduced_green_oracle, reduced_green_series, s_kernel};
use subdiff_core::locate_multi::{g_matrix, scan_indicator, ScanRegion};
use subdiff_core::TimeGrid;

fn green(c: &mut Criterion) {
    let a = alpha();
    let co = coeffs();
    c.bench_function("green oracle r=10", |b| b.iter(|| reduced_green_oracle(2, a, black_box(10.0)).unwrap()));
    c.bench_function("green series N=3 r=10", |b| b.iter(|| reduced_green_series(&co, 3, black_box(10.0))));
    c.bench_function("s kernel N=3", |b| b.iter(|| s_kernel(2, &co, 3, black_box(64.0))));
}

fn caputo(c: &mut Criterion) {
    let mut group = c.benchmark_group("caputo l1");
    for n in [128usize, 1024] {
        let g = TimeGrid::new(1.0, n).unwrap();
        let w: Vec<f64> = g.nodes().iter().map(|t| t.sin()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &w, |b, w| b.iter(|| caputo_l1_apply(alpha(), &g, w).unwrap()));
    }
    group.finish();
}

fn forward(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward solve");
    group.sample_size(10);
    let (inc, mesh) = disk_mesh(0.1, 0.1);
    let grid = TimeGrid::new(1.0, 32).unwrap();
    let initial = |p: &Point| p.x;
    let flux = |_: &Point, n: &Point, _: f64| n.x;
    let data = ProblemData { source: None, initial: &initial, flux: &flux };
    group.bench_function(format!("{} nodes, 32 steps", mesh.n_vertices()), |b| {
        b.iter(|| solve_subdiffusion(&mesh, alpha(), &inc, &data, &grid).unwrap())
    });
    group.finish();
}

fn indicator(c: &mut Criterion) {
    let grid = TimeGrid::new(1.0, 128).unwrap();
    let (sources, model, data) = two_disk_data(&grid);
    c.bench_function("g matrix", |b| b.iter(|| g_matrix(black_box(&Point::new(0.1, 0.2)), &sources, &model).unwrap()));
    let mut group = c.benchmark_group("indicator scan");
    group.sample_size(10);
    let region = ScanRegion { resolution: 41, ..ScanRegion::default() };
    group.bench_function("41x41", |b| b.iter(|| scan_indicator(&data, &sources, &model, region, 4).unwrap()));
    group.finish();
}

criterion_group!(benches, green, caputo, forward, indicator);
criterion_main!(benches);
