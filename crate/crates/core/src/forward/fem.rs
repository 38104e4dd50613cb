//! P1 assembly and the L1 time-stepping scheme.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use super::geometry::{InclusionSet, Point};
use super::mesh::{Mesh, Region};
use crate::error::{invalid, Error, Result};
use crate::fracmath::caputo::{l1_scale, l1_weights};
use crate::fracmath::{FracOrder, TimeGrid};

/// Compressed sparse row matrix with summed duplicates.
#[derive(Debug, Clone)]
pub struct Csr {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        (self.row_ptr[i]..self.row_ptr[i + 1])
            .find(|&k| self.cols[k] == j)
            .map_or(0.0, |k| self.vals[k])
    }

    /// `a·self + b·other` for matrices with identical sparsity.
    fn combine(&self, a: f64, other: &Csr, b: f64) -> Vec<Triplet<usize, usize, f64>> {
        let mut out = Vec::with_capacity(self.vals.len());
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                out.push(Triplet::new(i, j, a * self.vals[k] + b * other.get(i, j)));
            }
        }
        out
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k])))
    }
}

/// P1 basis gradients on triangle `t` (constant per element).
pub fn basis_gradients(mesh: &Mesh, t: usize) -> [Point; 3] {
    let [a, b, c] = mesh.triangles[t];
    let (p, q, r) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
    let two_area = (q - p).x * (r - p).y - (q - p).y * (r - p).x;
    [
        Point::new(q.y - r.y, r.x - q.x) / two_area,
        Point::new(r.y - p.y, p.x - r.x) / two_area,
        Point::new(p.y - q.y, q.x - p.x) / two_area,
    ]
}

/// Mass and stiffness matrices for a piecewise-constant conductivity.
#[derive(Debug, Clone)]
pub struct FemOperators {
    pub mass: Csr,
    pub stiffness: Csr,
}

/// Conductivity on each triangle: inclusion tags map to `inclusions.items`,
/// everything else (including tags without a matching inclusion) to `γ0`.
pub fn element_conductivity(mesh: &Mesh, inclusions: &InclusionSet) -> Vec<f64> {
    mesh.regions
        .iter()
        .map(|r| match r {
            Region::Inclusion(i) if *i < inclusions.items.len() => inclusions.items[*i].gamma,
            _ => inclusions.gamma0,
        })
        .collect()
}

pub fn assemble(mesh: &Mesh, gamma: &[f64]) -> FemOperators {
    let n = mesh.n_vertices();
    let mut m = Vec::with_capacity(9 * mesh.n_triangles());
    let mut k = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let idx = mesh.triangles[t];
        let area = mesh.triangle_area(t);
        let g = basis_gradients(mesh, t);
        for i in 0..3 {
            for j in 0..3 {
                let mass = if i == j { area / 6.0 } else { area / 12.0 };
                m.push((idx[i], idx[j], mass));
                k.push((idx[i], idx[j], gamma[t] * area * g[i].dot(&g[j])));
            }
        }
    }
    FemOperators {
        mass: Csr::from_triplets(n, m),
        stiffness: Csr::from_triplets(n, k),
    }
}

/// Data of the initial-boundary value problem.
pub struct ProblemData<'a> {
    /// Interior source `f(x, t)`; `None` means `f = 0`.
    pub source: Option<&'a (dyn Fn(&Point, f64) -> f64 + Sync)>,
    pub initial: &'a (dyn Fn(&Point) -> f64 + Sync),
    /// Neumann flux `g(x, n, t) = γ0 ∂_n u` at boundary point `x` with
    /// outward unit normal `n`.
    pub flux: &'a (dyn Fn(&Point, &Point, f64) -> f64 + Sync),
}

/// Nodal values of a fully discrete solution on every time level.
#[derive(Debug, Clone)]
pub struct SpaceTimeField {
    pub mesh: Arc<Mesh>,
    pub grid: TimeGrid,
    /// `values[n][i]`: node `i` at time level `n`.
    pub values: Vec<Vec<f64>>,
}

impl SpaceTimeField {
    /// Constant gradient of level `n` on triangle `t`.
    pub fn gradient(&self, n: usize, t: usize) -> Point {
        let g = basis_gradients(&self.mesh, t);
        let idx = self.mesh.triangles[t];
        (0..3).map(|i| g[i] * self.values[n][idx[i]]).sum()
    }
}

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

fn load_vector(mesh: &Mesh, data: &ProblemData<'_>, t: f64) -> Vec<f64> {
    let mut rhs = vec![0.0; mesh.n_vertices()];
    if let Some(f) = data.source {
        for (tri, idx) in mesh.triangles.iter().enumerate() {
            let area = mesh.triangle_area(tri);
            let p: [Point; 3] = idx.map(|i| mesh.vertices[i]);
            // edge-midpoint rule, exact for quadratics
            let fm = [f(&((p[1] + p[2]) / 2.0), t), f(&((p[2] + p[0]) / 2.0), t), f(&((p[0] + p[1]) / 2.0), t)];
            for i in 0..3 {
                let others: f64 = (0..3).filter(|&j| j != i).map(|j| fm[j]).sum();
                rhs[idx[i]] += area / 6.0 * others;
            }
        }
    }
    for e in mesh.boundary_edges() {
        let (ia, ib) = (mesh.boundary[e.a], mesh.boundary[e.b]);
        let (pa, pb) = (mesh.vertices[ia], mesh.vertices[ib]);
        for (s, w) in GAUSS3 {
            let g = (data.flux)(&(pa + (pb - pa) * s), &e.normal, t) * w * e.length;
            rhs[ia] += (1.0 - s) * g;
            rhs[ib] += s * g;
        }
    }
    rhs
}

/// Fully discrete solution of `∂_t^α u − ∇·(γ∇u) = f` with Neumann flux,
/// by P1 elements and the L1 scheme; `α = 1` gives backward Euler.
pub fn solve_subdiffusion(
    mesh: &Arc<Mesh>,
    alpha: FracOrder,
    inclusions: &InclusionSet,
    data: &ProblemData<'_>,
    grid: &TimeGrid,
) -> Result<SpaceTimeField> {
    let gamma = element_conductivity(mesh, inclusions);
    if gamma.iter().any(|&g| !(g > 0.0)) {
        return Err(invalid("conductivity must be positive on every element"));
    }
    let ops = assemble(mesh, &gamma);
    let n = mesh.n_vertices();
    let c0 = l1_scale(alpha, grid);
    let b = l1_weights(alpha, grid.n_steps());

    let system = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &ops.mass.combine(c0, &ops.stiffness, 1.0))
        .map_err(|e| Error::Solver(format!("sparse assembly failed: {e:?}")))?;
    let llt = system
        .sp_cholesky(Side::Lower)
        .map_err(|e| Error::Solver(format!("Cholesky factorization failed: {e:?}")))?;

    let mut values = Vec::with_capacity(grid.len());
    values.push(mesh.vertices.iter().map(|p| (data.initial)(p)).collect::<Vec<f64>>());
    let mut diffs: Vec<Vec<f64>> = Vec::with_capacity(grid.n_steps());
    let mut history = vec![0.0; n];
    let mut mh = vec![0.0; n];
    for step in 1..=grid.n_steps() {
        // history = u^{n-1} - Σ_{j=1}^{n-1} b_j (u^{n-j} - u^{n-j-1})
        history.copy_from_slice(&values[step - 1]);
        for j in 1..step {
            let d = &diffs[step - 1 - j];
            let w = b[j];
            for (h, dv) in history.iter_mut().zip(d) {
                *h -= w * dv;
            }
        }
        ops.mass.matvec(&history, &mut mh);
        let load = load_vector(mesh, data, grid.node(step));
        let mut rhs = Mat::from_fn(n, 1, |i, _| load[i] + c0 * mh[i]);
        llt.solve_in_place(rhs.as_mut());
        let next: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(format!("non-finite solution at step {step}")));
        }
        diffs.push(next.iter().zip(&values[step - 1]).map(|(a, b)| a - b).collect());
        values.push(next);
    }
    Ok(SpaceTimeField {
        mesh: Arc::clone(mesh),
        grid: *grid,
        values,
    })
}

/// Background problem: the same scheme with `γ ≡ γ0`.
pub fn solve_background(
    mesh: &Arc<Mesh>,
    alpha: FracOrder,
    gamma0: f64,
    data: &ProblemData<'_>,
    grid: &TimeGrid,
) -> Result<SpaceTimeField> {
    solve_subdiffusion(mesh, alpha, &InclusionSet::empty(gamma0), data, grid)
}
