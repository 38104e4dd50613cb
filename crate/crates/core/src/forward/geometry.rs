//! Inclusion descriptions on the unit disk.

use std::f64::consts::PI;

use nalgebra::Vector2;

use crate::error::{invalid, Result};

pub type Point = Vector2<f64>;

/// Reference shape `B` of an inclusion `A = εB + z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk,
    /// Ellipse with semi-axes `√ϱ` (horizontal) and `1/√ϱ` (vertical); same
    /// area as the unit disk.
    Ellipse { aspect: f64 },
}

impl Shape {
    /// Horizontal and vertical semi-axes of `B`.
    pub fn semi_axes(&self) -> (f64, f64) {
        match *self {
            Shape::Disk => (1.0, 1.0),
            Shape::Ellipse { aspect } => (aspect.sqrt(), 1.0 / aspect.sqrt()),
        }
    }

    /// `|B|`.
    pub fn area(&self) -> f64 {
        PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inclusion {
    pub center: Point,
    pub size: f64,
    pub shape: Shape,
    pub gamma: f64,
}

impl Inclusion {
    pub fn disk(center: Point, size: f64, gamma: f64) -> Self {
        Self { center, size, shape: Shape::Disk, gamma }
    }

    pub fn ellipse(center: Point, size: f64, aspect: f64, gamma: f64) -> Self {
        Self { center, size, shape: Shape::Ellipse { aspect }, gamma }
    }

    /// Largest distance from the center to the boundary.
    pub fn outer_radius(&self) -> f64 {
        let (a, b) = self.shape.semi_axes();
        self.size * a.max(b)
    }

    pub fn area(&self) -> f64 {
        self.size * self.size * self.shape.area()
    }

    pub fn contains(&self, p: &Point) -> bool {
        let (a, b) = self.shape.semi_axes();
        let d = p - self.center;
        (d.x / (a * self.size)).powi(2) + (d.y / (b * self.size)).powi(2) < 1.0
    }

    /// Counter-clockwise boundary polygon with sides no longer than `h`,
    /// equidistributed in arc length and scaled so that its area equals the
    /// area of the inclusion.
    pub fn boundary_polygon(&self, h: f64) -> Vec<Point> {
        let (a, b) = self.shape.semi_axes();
        let (a, b) = (a * self.size, b * self.size);
        // dense arc-length table of the ellipse
        let dense = 4096;
        let mut arc = Vec::with_capacity(dense + 1);
        arc.push(0.0);
        let pt = |th: f64| Point::new(a * th.cos(), b * th.sin());
        for i in 1..=dense {
            let t0 = 2.0 * PI * (i - 1) as f64 / dense as f64;
            let t1 = 2.0 * PI * i as f64 / dense as f64;
            arc.push(arc[i - 1] + (pt(t1) - pt(t0)).norm());
        }
        let perimeter = arc[dense];
        let n = ((perimeter / h).ceil() as usize).max(8);
        let mut poly = Vec::with_capacity(n);
        let mut j = 0;
        for k in 0..n {
            let s = perimeter * k as f64 / n as f64;
            while arc[j + 1] < s {
                j += 1;
            }
            let w = (s - arc[j]) / (arc[j + 1] - arc[j]);
            let th = 2.0 * PI * (j as f64 + w) / dense as f64;
            poly.push(pt(th));
        }
        let scale = (self.area() / polygon_area(&poly)).sqrt();
        poly.into_iter().map(|p| self.center + p * scale).collect()
    }
}

pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
}

/// Inclusions `A_ℓ` together with the background conductivity `γ0`.
#[derive(Debug, Clone, PartialEq)]
pub struct InclusionSet {
    pub items: Vec<Inclusion>,
    pub gamma0: f64,
}

impl InclusionSet {
    /// Validates positivity, contrast, and a separation of at least `c`
    /// between inclusions and from the unit circle.
    pub fn new(items: Vec<Inclusion>, gamma0: f64, c: f64) -> Result<Self> {
        if !(gamma0 > 0.0) {
            return Err(invalid(format!("background conductivity must be positive, got {gamma0}")));
        }
        for (i, inc) in items.iter().enumerate() {
            if !(inc.size > 0.0 && inc.gamma > 0.0) {
                return Err(invalid(format!("inclusion {i}: size and conductivity must be positive")));
            }
            if inc.gamma == gamma0 {
                return Err(invalid(format!("inclusion {i}: conductivity equals the background")));
            }
            if let Shape::Ellipse { aspect } = inc.shape {
                if !(aspect > 0.0) {
                    return Err(invalid(format!("inclusion {i}: aspect ratio must be positive")));
                }
            }
            let gap = 1.0 - inc.center.norm() - inc.outer_radius();
            if gap <= c {
                return Err(invalid(format!("inclusion {i} lies within {c} of the boundary")));
            }
            for (j, other) in items.iter().enumerate().take(i) {
                let gap = (inc.center - other.center).norm() - inc.outer_radius() - other.outer_radius();
                if gap <= c {
                    return Err(invalid(format!("inclusions {j} and {i} are closer than {c}")));
                }
            }
        }
        Ok(Self { items, gamma0 })
    }

    pub fn empty(gamma0: f64) -> Self {
        Self { items: Vec::new(), gamma0 }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Index of the inclusion containing `p`, if any.
    pub fn locate(&self, p: &Point) -> Option<usize> {
        self.items.iter().position(|inc| inc.contains(p))
    }

    /// Conductivity at a point.
    pub fn gamma_at(&self, p: &Point) -> f64 {
        self.locate(p).map_or(self.gamma0, |i| self.items[i].gamma)
    }
}
