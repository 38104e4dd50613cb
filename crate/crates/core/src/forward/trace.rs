//! Boundary traces of space-time fields and the measurement noise model.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::fem::SpaceTimeField;
use super::geometry::Point;
use super::mesh::BoundaryEdge;
use crate::error::{invalid, Error, Result};
use crate::fracmath::TimeGrid;

/// Nodal values of a field on the boundary polygon, per time level.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub grid: TimeGrid,
    /// Boundary nodes in counter-clockwise order.
    pub points: Vec<Point>,
    /// Edges between consecutive entries of `points` (cyclic).
    pub edges: Vec<BoundaryEdge>,
    /// `values[n][i]`: boundary node `i` at time level `n`.
    pub values: Vec<Vec<f64>>,
}

pub fn boundary_restrict(field: &SpaceTimeField) -> BoundaryTrace {
    let mesh = &field.mesh;
    BoundaryTrace {
        grid: field.grid,
        points: mesh.boundary.iter().map(|&i| mesh.vertices[i]).collect(),
        edges: mesh.boundary_edges(),
        values: field
            .values
            .iter()
            .map(|level| mesh.boundary.iter().map(|&i| level[i]).collect())
            .collect(),
    }
}

impl BoundaryTrace {
    pub fn n_nodes(&self) -> usize {
        self.points.len()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        if self.points != other.points {
            return Err(Error::GridMismatch("traces live on different boundary polygons".into()));
        }
        Ok(())
    }

    /// Pointwise `self − other`.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(Self { values, ..self.clone() })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let values = self.values.iter().map(|l| l.iter().map(|v| v * factor).collect()).collect();
        Self { values, ..self.clone() }
    }

    /// Lumped arc-length weight of every boundary node.
    pub fn node_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n_nodes()];
        for e in &self.edges {
            w[e.a] += 0.5 * e.length;
            w[e.b] += 0.5 * e.length;
        }
        w
    }

    /// `‖v‖_{L¹(∂Ω×[0,T])}` by the trapezoid rule in arc length and time.
    pub fn l1_norm(&self) -> f64 {
        let ws = self.node_weights();
        let wt = self.grid.trapezoid_weights();
        self.values
            .iter()
            .zip(&wt)
            .map(|(level, w)| w * level.iter().zip(&ws).map(|(v, s)| v.abs() * s).sum::<f64>())
            .sum()
    }

    /// CSV with one row per boundary node: id, angle, then one column per level.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "node,angle")?;
        for n in 0..self.grid.len() {
            write!(out, ",t{n}")?;
        }
        writeln!(out)?;
        for (i, p) in self.points.iter().enumerate() {
            write!(out, "{i},{:.17e}", p.y.atan2(p.x))?;
            for level in &self.values {
                write!(out, ",{:.17e}", level[i])?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Noise realisation added to a trace.
#[derive(Debug, Clone)]
pub struct NoisyTrace {
    pub trace: BoundaryTrace,
    /// Drawn relative level `|δ|`, `δ ~ N(0, σ²)`.
    pub level: f64,
}

/// `ũ = u + ζ` with i.i.d. Gaussian nodal noise `ζ` rescaled so that
/// `‖ζ‖_{L¹}/‖u‖_{L¹} = |δ|` with `δ ~ N(0, σ²)`.
pub fn add_noise(trace: &BoundaryTrace, sigma: f64, seed: u64) -> Result<NoisyTrace> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(invalid(format!("noise level must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(NoisyTrace { trace: trace.clone(), level: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta: f64 = StandardNormal.sample(&mut rng);
    let level = (sigma * delta).abs();
    let zeta = BoundaryTrace {
        values: trace
            .values
            .iter()
            .map(|l| l.iter().map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect(),
        ..trace.clone()
    };
    let (norm_u, norm_z) = (trace.l1_norm(), zeta.l1_norm());
    let factor = if norm_z > 0.0 { level * norm_u / norm_z } else { 0.0 };
    let values = trace
        .values
        .iter()
        .zip(&zeta.values)
        .map(|(u, z)| u.iter().zip(z).map(|(a, b)| a + factor * b).collect())
        .collect();
    Ok(NoisyTrace {
        trace: BoundaryTrace { values, ..trace.clone() },
        level,
    })
}
