//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use subdiff_core::forward::{build_mesh, Inclusion, InclusionSet, Mesh, Point};
use subdiff_core::greenfn::{fit_green_coeffs, GreenCoeffs};
use subdiff_core::locate_multi::{leading_order_matrix, DataMatrix, KernelModel, SourceSet};
use subdiff_core::{FracOrder, TimeGrid};

pub fn alpha() -> FracOrder {
    FracOrder::new(0.5).unwrap()
}

pub fn coeffs() -> Arc<GreenCoeffs> {
    Arc::new(fit_green_coeffs(2, alpha(), 3).unwrap())
}

/// One disk of radius `eps` at `(0.2, 0.3)` and its graded mesh.
pub fn disk_mesh(eps: f64, h_far: f64) -> (InclusionSet, Arc<Mesh>) {
    let inc = InclusionSet::new(vec![Inclusion::disk(Point::new(0.2, 0.3), eps, 50.0)], 1.0, 0.0).unwrap();
    let mesh = Arc::new(build_mesh(&inc, h_far, eps / 4.0).unwrap());
    (inc, mesh)
}

/// Leading-order data matrix for two disks and ten sources on the full circle.
pub fn two_disk_data(grid: &TimeGrid) -> (SourceSet, KernelModel, DataMatrix) {
    let inc = InclusionSet::new(
        vec![
            Inclusion::disk(Point::new(0.3, 0.2), 0.05, 3.0),
            Inclusion::disk(Point::new(-0.4, 0.0), 0.05, 3.0),
        ],
        1.0,
        0.0,
    )
    .unwrap();
    let sources = SourceSet::full(10, 2.0).unwrap();
    let model = KernelModel::new(coeffs(), 3, 1.0, grid);
    let data = leading_order_matrix(&inc, &sources, &model).unwrap();
    (sources, model, data)
}
