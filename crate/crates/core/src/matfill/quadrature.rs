//! Quadrature for the double surface integral: symmetric triangle rules on
//! the observation triangle, Gauss–Legendre points on the three edges of
//! the source triangle.

use std::f64::consts::PI;

use super::mesh::{norm, sub, Point3, TriangleMesh};
use crate::error::{Error, Result};

/// Outer rule sizes with a symmetric triangle rule available.
pub const SUPPORTED_OUTER: [usize; 5] = [1, 3, 4, 6, 7];
pub const MAX_EDGE_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    /// Points of the symmetric rule on the observation triangle (`m`).
    pub outer_points: usize,
    /// Gauss–Legendre points on each source-triangle edge (`n`).
    pub inner_points_per_edge: usize,
}

impl QuadratureSpec {
    pub fn new(outer_points: usize, inner_points_per_edge: usize) -> Result<Self> {
        let spec = QuadratureSpec { outer_points, inner_points_per_edge };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_OUTER.contains(&self.outer_points) {
            return Err(Error::InvalidInput(format!(
                "outer rule must have one of {SUPPORTED_OUTER:?} points, got {}",
                self.outer_points
            )));
        }
        if !(1..=MAX_EDGE_POINTS).contains(&self.inner_points_per_edge) {
            return Err(Error::InvalidInput(format!(
                "inner points per edge must lie in 1..={MAX_EDGE_POINTS}, got {}",
                self.inner_points_per_edge
            )));
        }
        Ok(())
    }

    /// Kernel evaluations per triangle pair, `3·m·n`.
    pub fn points_per_pair(&self) -> usize {
        3 * self.outer_points * self.inner_points_per_edge
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { outer_points: 4, inner_points_per_edge: 3 }
    }
}

/// Barycentric points and weights normalized to sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Symmetric (Strang–Fix / Dunavant) rules of degree 1, 2, 3, 4, 5 for
/// 1, 3, 4, 6, 7 points.
pub fn triangle_rule(points: usize) -> Result<TriangleRule> {
    let mut rule = TriangleRule { points: Vec::new(), weights: Vec::new() };
    let centroid = |w: f64, rule: &mut TriangleRule| {
        rule.points.push([1.0 / 3.0; 3]);
        rule.weights.push(w);
    };
    let orbit = |a: f64, b: f64, w: f64, rule: &mut TriangleRule| {
        for p in [[a, b, b], [b, a, b], [b, b, a]] {
            rule.points.push(p);
            rule.weights.push(w);
        }
    };
    match points {
        1 => centroid(1.0, &mut rule),
        3 => orbit(2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0, &mut rule),
        4 => {
            centroid(-27.0 / 48.0, &mut rule);
            orbit(0.6, 0.2, 25.0 / 48.0, &mut rule);
        }
        6 => {
            orbit(0.108103018168070, 0.445948490915965, 0.223381589678011, &mut rule);
            orbit(0.816847572980459, 0.091576213509771, 0.109951743655322, &mut rule);
        }
        7 => {
            centroid(0.225, &mut rule);
            orbit(0.059715871789770, 0.470142064105115, 0.132394152788506, &mut rule);
            orbit(0.797426985353087, 0.101286507323456, 0.125939180544827, &mut rule);
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "no symmetric triangle rule with {points} points; supported {SUPPORTED_OUTER:?}"
            )))
        }
    }
    Ok(rule)
}

/// Gauss–Legendre nodes and weights mapped to `[0, 1]` (weights sum to 1).
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=MAX_EDGE_POINTS).contains(&n) {
        return Err(Error::InvalidInput(format!("Gauss–Legendre order must lie in 1..={MAX_EDGE_POINTS}, got {n}")));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] → [0, 1], ascending
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Ok((nodes, weights))
}

/// A weighted quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPoint {
    pub x: Point3,
    pub w: f64,
}

/// Quadrature points for every triangle of a mesh, laid out with a fixed
/// stride per triangle.
#[derive(Debug, Clone)]
pub struct QuadraturePoints {
    pub spec: QuadratureSpec,
    /// `m` points per triangle; weights sum to the triangle area.
    pub outer: Vec<WeightedPoint>,
    /// `3n` edge points per triangle; weights sum to the triangle area.
    pub inner: Vec<WeightedPoint>,
}

impl QuadraturePoints {
    pub fn new(mesh: &TriangleMesh, spec: QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        let rule = triangle_rule(spec.outer_points)?;
        let (nodes, gl_weights) = gauss_legendre(spec.inner_points_per_edge)?;
        let mut outer = Vec::with_capacity(mesh.len() * spec.outer_points);
        let mut inner = Vec::with_capacity(mesh.len() * 3 * spec.inner_points_per_edge);
        for t in 0..mesh.len() {
            let c = mesh.corners(t);
            let area = mesh.area(t);
            for (b, w) in rule.points.iter().zip(&rule.weights) {
                let x = std::array::from_fn(|d| b[0] * c[0][d] + b[1] * c[1][d] + b[2] * c[2][d]);
                outer.push(WeightedPoint { x, w: w * area });
            }
            // Each edge contributes a third of the area, spread by the
            // Gauss–Legendre weights along it.
            for e in 0..3 {
                let (a, b) = (c[e], c[(e + 1) % 3]);
                for (s, w) in nodes.iter().zip(&gl_weights) {
                    let x = std::array::from_fn(|d| a[d] + s * (b[d] - a[d]));
                    inner.push(WeightedPoint { x, w: w * area / 3.0 });
                }
            }
        }
        Ok(QuadraturePoints { spec, outer, inner })
    }

    pub fn outer_of(&self, t: usize) -> &[WeightedPoint] {
        let m = self.spec.outer_points;
        &self.outer[t * m..(t + 1) * m]
    }

    pub fn inner_of(&self, t: usize) -> &[WeightedPoint] {
        let n = 3 * self.spec.inner_points_per_edge;
        &self.inner[t * n..(t + 1) * n]
    }
}

pub(crate) fn distance(a: Point3, b: Point3) -> f64 {
    norm(sub(a, b))
}
