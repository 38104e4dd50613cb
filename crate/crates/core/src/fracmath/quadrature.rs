//! Gauss–Legendre rules and a globally adaptive panel integrator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Shared 20-point rule used by the adaptive integrator.
pub fn gauss_legendre_20() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(20))
}

/// Stopping criteria for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Tolerance {
    pub const fn relative(rel: f64) -> Self {
        Self {
            abs: 0.0,
            rel,
            max_panels: 4000,
        }
    }

    pub const fn absolute(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            max_panels: 4000,
        }
    }

    pub const fn with_max_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn estimate_panel<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let rule = gauss_legendre_20();
    let m = 0.5 * (a + b);
    let coarse = rule.integrate(&mut *f, a, b);
    let fine = rule.integrate(&mut *f, a, m) + rule.integrate(&mut *f, m, b);
    Panel {
        a,
        b,
        value: fine,
        error: (fine - coarse).abs(),
    }
}

/// Globally adaptive Gauss–Legendre quadrature of `f` over `[a, b]`.
///
/// The panel with the largest local error estimate is bisected until the
/// summed estimate falls below `max(tol.abs, tol.rel * |I|)`.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    integrate_adaptive_breaks(&mut f, &[a, b], tol)
}

/// Like [`integrate_adaptive`] but starting from the panels delimited by
/// `breaks` (sorted, at least two entries).
pub fn integrate_adaptive_breaks<F: FnMut(f64) -> f64>(f: &mut F, breaks: &[f64], tol: Tolerance) -> Result<f64> {
    if breaks.len() < 2 {
        return Err(Error::InvalidArgument("need at least two break points".into()));
    }
    let mut heap = BinaryHeap::with_capacity(2 * breaks.len());
    let mut total = 0.0;
    let mut err = 0.0;
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let p = estimate_panel(f, w[0], w[1]);
        total += p.value;
        err += p.error;
        heap.push(p);
    }
    loop {
        if !total.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{}, {}]", breaks[0], breaks[breaks.len() - 1])));
        }
        let target = tol.abs.max(tol.rel * total.abs());
        if err <= target {
            return Ok(total);
        }
        if heap.len() >= tol.max_panels {
            return Err(Error::Quadrature(format!(
                "panel budget {} exhausted: estimate {:.6e}, error {:.3e}, target {:.3e}",
                tol.max_panels, total, err, target
            )));
        }
        let worst = heap.pop().expect("heap is never empty here");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // Panel cannot be split further in floating point; accept it.
            err -= worst.error;
            heap.push(Panel { error: 0.0, ..worst });
            continue;
        }
        let left = estimate_panel(f, worst.a, m);
        let right = estimate_panel(f, m, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

/// Composite Gauss–Legendre nodes on `[0, t_final]`, geometrically refined
/// toward both endpoints. The node set is symmetric under `t -> t_final - t`.
pub fn graded_symmetric_rule(t_final: f64, levels: usize, ratio: f64, points_per_panel: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(points_per_panel);
    let half = 0.5 * t_final;
    let mut breaks = vec![0.0];
    for k in (0..levels).rev() {
        breaks.push(half / ratio.powi(k as i32));
    }
    let mut out = Vec::with_capacity(2 * levels * points_per_panel);
    for w in breaks.windows(2) {
        out.extend(rule.mapped(w[0], w[1]));
    }
    let mirrored: Vec<(f64, f64)> = out.iter().rev().map(|&(t, w)| (t_final - t, w)).collect();
    out.extend(mirrored);
    out
}
