//! Graded triangulations of the unit disk resolving inclusion interfaces.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::geometry::{InclusionSet, Point};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Background,
    Inclusion(usize),
}

/// Conforming P1 triangulation of the (polygonal) unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    /// Boundary vertices in counter-clockwise order; edges join consecutive
    /// entries cyclically.
    pub boundary: Vec<usize>,
}

/// One edge of the boundary polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// Positions in [`Mesh::boundary`] of the two endpoints.
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub normal: Point,
}

#[derive(Debug, Clone, Copy)]
pub struct MeshOptions {
    pub h_far: f64,
    pub h_near: f64,
    /// Spacing of the outer boundary polygon; defaults to `h_far`.
    pub h_boundary: Option<f64>,
    /// Growth rate of the element size away from the inclusions.
    pub grading: f64,
    /// Minimum-angle refinement target in degrees (`None` disables it).
    pub min_angle: Option<f64>,
}

impl MeshOptions {
    pub fn new(h_far: f64, h_near: f64) -> Self {
        Self {
            h_far,
            h_near,
            h_boundary: None,
            grading: 0.25,
            min_angle: Some(25.0),
        }
    }
}

pub fn build_mesh(inclusions: &InclusionSet, h_far: f64, h_near: f64) -> Result<Mesh> {
    build_mesh_with(inclusions, &MeshOptions::new(h_far, h_near))
}

pub fn build_mesh_with(inclusions: &InclusionSet, opts: &MeshOptions) -> Result<Mesh> {
    let MeshOptions { h_far, h_near, grading, .. } = *opts;
    if !(h_near > 0.0 && h_far >= h_near) {
        return Err(invalid(format!("need 0 < h_near <= h_far, got h_near={h_near}, h_far={h_far}")));
    }
    for (i, inc) in inclusions.items.iter().enumerate() {
        if h_near > inc.size / 4.0 * (1.0 + 1e-12) {
            return Err(invalid(format!(
                "h_near={h_near} does not resolve inclusion {i} of size {} (need h_near <= size/4)",
                inc.size
            )));
        }
    }
    let sizing = |p: &Point| -> f64 {
        let mut h = h_far;
        for inc in &inclusions.items {
            let d = ((p - inc.center).norm() - inc.outer_radius() - 2.0 * inc.size).max(0.0);
            h = h.min(h_near + grading * d);
        }
        h
    };

    let h_b = opts.h_boundary.unwrap_or(h_far);
    let n_b = ((2.0 * PI / h_b).ceil() as usize).max(16);
    let outer: Vec<Point> = (0..n_b)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / n_b as f64;
            Point::new(th.cos(), th.sin())
        })
        .collect();
    let polygons: Vec<Vec<Point>> = inclusions.items.iter().map(|inc| inc.boundary_polygon(h_near)).collect();

    let mut interior = Vec::new();
    quadtree_points(Point::zeros(), 1.0, &sizing, &mut |p| {
        let h = sizing(&p);
        if p.norm() > 1.0 - 0.6 * h {
            return;
        }
        for (inc, poly) in inclusions.items.iter().zip(&polygons) {
            if (p - inc.center).norm() < inc.outer_radius() + h && distance_to_polygon(&p, poly) < 0.5 * h {
                return;
            }
        }
        interior.push(p);
    });

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let insert = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>, p: &Point| {
        cdt.insert(Point2::new(p.x, p.y))
            .map_err(|e| Error::Mesh(format!("vertex insertion failed at ({}, {}): {e:?}", p.x, p.y)))
    };
    let mut boundary_handles = Vec::with_capacity(n_b);
    for p in &outer {
        boundary_handles.push(insert(&mut cdt, p)?);
    }
    for k in 0..n_b {
        cdt.add_constraint(boundary_handles[k], boundary_handles[(k + 1) % n_b]);
    }
    for poly in &polygons {
        let hs = poly.iter().map(|p| insert(&mut cdt, p)).collect::<Result<Vec<_>>>()?;
        for k in 0..hs.len() {
            if cdt.can_add_constraint(hs[k], hs[(k + 1) % hs.len()]) {
                cdt.add_constraint(hs[k], hs[(k + 1) % hs.len()]);
            } else {
                return Err(Error::Mesh("inclusion boundary edges intersect".into()));
            }
        }
    }
    for p in &interior {
        insert(&mut cdt, p)?;
    }
    if let Some(angle) = opts.min_angle {
        let extra = cdt.num_vertices();
        let result = cdt.refine(
            RefinementParameters::<f64>::new()
                .with_angle_limit(AngleLimit::from_deg(angle))
                .keep_constraint_edges()
                .exclude_outer_faces(true)
                .with_min_required_area(0.05 * h_near * h_near)
                .with_max_additional_vertices(extra),
        );
        if !result.refinement_complete {
            return Err(Error::Mesh("angle refinement did not complete".into()));
        }
    }

    let vertices: Vec<Point> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            Point::new(p.x, p.y)
        })
        .collect();
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    let mut regions = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let idx = face.vertices().map(|v| v.fix().index());
        let c = (vertices[idx[0]] + vertices[idx[1]] + vertices[idx[2]]) / 3.0;
        if c.norm() >= 1.0 {
            continue;
        }
        let region = polygons
            .iter()
            .position(|poly| point_in_polygon(&c, poly))
            .map_or(Region::Background, Region::Inclusion);
        triangles.push(idx);
        regions.push(region);
    }
    let boundary = boundary_handles.iter().map(|h| h.index()).collect();
    let mesh = Mesh { vertices, triangles, regions, boundary };
    mesh.check()?;
    Ok(mesh)
}

fn quadtree_points(center: Point, half: f64, sizing: &dyn Fn(&Point) -> f64, emit: &mut dyn FnMut(Point)) {
    // skip cells entirely outside the disk
    if center.norm() - half * std::f64::consts::SQRT_2 > 1.0 {
        return;
    }
    if 2.0 * half > sizing(&center) {
        let q = 0.5 * half;
        for (dx, dy) in [(-q, -q), (q, -q), (-q, q), (q, q)] {
            quadtree_points(center + Point::new(dx, dy), q, sizing, emit);
        }
    } else {
        emit(center);
    }
}

fn section_count<'a>(lines: &mut impl Iterator<Item = &'a str>, name: &str) -> Result<usize> {
    let line = lines.next().ok_or_else(|| Error::Parse(format!("missing {name} header")))?;
    let mut it = line.split_whitespace();
    if it.next() != Some(name) {
        return Err(Error::Parse(format!("expected {name} header, got {line:?}")));
    }
    it.next()
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad count in {line:?}")))
}

fn distance_to_polygon(p: &Point, poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let ab = b - a;
            let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            (p - (a + ab * t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

fn point_in_polygon(p: &Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((q - p).x * (r - p).y - (q - p).y * (r - p).x)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        (self.vertices[a] + self.vertices[b] + self.vertices[c]) / 3.0
    }

    pub fn longest_edge(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let v = &self.vertices;
        (v[a] - v[b]).norm().max((v[b] - v[c]).norm()).max((v[c] - v[a]).norm())
    }

    /// Area of all triangles tagged with inclusion `idx`.
    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.n_triangles())
            .filter(|&t| self.regions[t] == region)
            .map(|t| self.triangle_area(t))
            .sum()
    }

    pub fn boundary_edges(&self) -> Vec<BoundaryEdge> {
        let n = self.boundary.len();
        (0..n)
            .map(|a| {
                let b = (a + 1) % n;
                let d = self.vertices[self.boundary[b]] - self.vertices[self.boundary[a]];
                let length = d.norm();
                BoundaryEdge {
                    a,
                    b,
                    length,
                    normal: Point::new(d.y, -d.x) / length,
                }
            })
            .collect()
    }

    fn check(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::Mesh("empty triangulation".into()));
        }
        for t in 0..self.n_triangles() {
            if self.triangle_area(t) <= 0.0 {
                return Err(Error::Mesh(format!("triangle {t} is degenerate or clockwise")));
            }
        }
        if self.boundary.len() != self.boundary.iter().collect::<std::collections::HashSet<_>>().len() {
            return Err(Error::Mesh("boundary vertices repeat".into()));
        }
        Ok(())
    }

    /// Plain-text export: vertex list, triangle list with tags, boundary loop.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "vertices {}", self.vertices.len()).unwrap();
        for v in &self.vertices {
            writeln!(s, "{:.17e} {:.17e}", v.x, v.y).unwrap();
        }
        writeln!(s, "triangles {}", self.triangles.len()).unwrap();
        for (t, r) in self.triangles.iter().zip(&self.regions) {
            let tag = match r {
                Region::Background => -1,
                Region::Inclusion(i) => *i as i64,
            };
            writeln!(s, "{} {} {} {}", t[0], t[1], t[2], tag).unwrap();
        }
        writeln!(s, "boundary {}", self.boundary.len()).unwrap();
        for b in &self.boundary {
            writeln!(s, "{b}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let perr = Error::Parse;
        let nv = section_count(&mut lines, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let l = lines.next().ok_or_else(|| perr("truncated vertex list".into()))?;
            let xs: Vec<f64> = l.split_whitespace().map(|x| x.parse().map_err(|_| perr(format!("bad vertex {l:?}")))).collect::<Result<_>>()?;
            if xs.len() != 2 {
                return Err(perr(format!("bad vertex {l:?}")));
            }
            vertices.push(Point::new(xs[0], xs[1]));
        }
        let nt = section_count(&mut lines, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        let mut regions = Vec::with_capacity(nt);
        for _ in 0..nt {
            let l = lines.next().ok_or_else(|| perr("truncated triangle list".into()))?;
            let xs: Vec<i64> = l.split_whitespace().map(|x| x.parse().map_err(|_| perr(format!("bad triangle {l:?}")))).collect::<Result<_>>()?;
            if xs.len() != 4 || xs[..3].iter().any(|&i| i < 0 || i as usize >= nv) {
                return Err(perr(format!("bad triangle {l:?}")));
            }
            triangles.push([xs[0] as usize, xs[1] as usize, xs[2] as usize]);
            regions.push(if xs[3] < 0 { Region::Background } else { Region::Inclusion(xs[3] as usize) });
        }
        let nb = section_count(&mut lines, "boundary")?;
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let l = lines.next().ok_or_else(|| perr("truncated boundary list".into()))?;
            let i: usize = l.parse().map_err(|_| perr(format!("bad boundary index {l:?}")))?;
            if i >= nv {
                return Err(perr(format!("boundary index {i} out of range")));
            }
            boundary.push(i);
        }
        let mesh = Mesh { vertices, triangles, regions, boundary };
        mesh.check()?;
        Ok(mesh)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
