//! Discrete differential geometry of closed planar polylines.
//!
//! Conventions: the unit normal is `ν = -J ∂ₛγ` with `J` the +90° rotation,
//! so on a counterclockwise convex curve `ν` points outward, and curvature is
//! `κ = -⟨∂ₛ²γ, ν⟩`, positive on such a curve.

use std::f64::consts::PI;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::spline::PeriodicSpline;

pub type Point = Vector2<f64>;

pub const MIN_VERTICES: usize = 16;

/// `ν = -J t` for a unit tangent `t`.
#[inline]
pub fn normal_of(tangent: Point) -> Point {
    Point::new(tangent.y, -tangent.x)
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Closed polyline at a time stamp; vertex indices are taken mod N.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedCurve {
    vertices: Vec<Point>,
    pub time: f64,
}

impl ClosedCurve {
    pub fn new(vertices: Vec<Point>, time: f64) -> Result<Self> {
        let curve = Self { vertices, time };
        curve.validate()?;
        Ok(curve)
    }

    pub fn from_xy(xy: &[(f64, f64)], time: f64) -> Result<Self> {
        Self::new(xy.iter().map(|&(x, y)| Point::new(x, y)).collect(), time)
    }

    pub(crate) fn new_unchecked(vertices: Vec<Point>, time: f64) -> Self {
        Self { vertices, time }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if n < MIN_VERTICES {
            return Err(Error::TooFewVertices(n));
        }
        for i in 0..n {
            let e = self.vertices[(i + 1) % n] - self.vertices[i];
            if !(e.norm() > 0.0) {
                return Err(Error::DegenerateEdge(i));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i % self.vertices.len()]
    }

    pub fn into_vertices(self) -> Vec<Point> {
        self.vertices
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| (self.vertices[(i + 1) % n] - self.vertices[i]).norm())
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Shoelace signed area; positive for counterclockwise curves.
    pub fn signed_area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        self.vertices.iter().sum::<Point>() / self.len() as f64
    }

    /// Edge-length ratio max/min.
    pub fn edge_ratio(&self) -> f64 {
        let h = self.edge_lengths();
        let max = h.iter().cloned().fold(0.0, f64::max);
        let min = h.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Same point set traversed backwards, keeping vertex 0 first.
    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v[1..].reverse();
        Self::new_unchecked(v, self.time)
    }

    /// `scale·(γ - center)`, same time stamp.
    pub fn scaled_about(&self, center: Point, scale: f64) -> Self {
        Self::new_unchecked(
            self.vertices.iter().map(|p| (p - center) * scale).collect(),
            self.time,
        )
    }

    pub fn translated(&self, offset: Point) -> Self {
        Self::new_unchecked(
            self.vertices.iter().map(|p| p + offset).collect(),
            self.time,
        )
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }
}

pub(crate) fn shoelace(v: &[Point]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| cross(v[i], v[(i + 1) % n])).sum::<f64>()
}

/// Derived geometry of a [`ClosedCurve`].
#[derive(Clone, Debug)]
pub struct GeoCache {
    /// `edge_lengths[i] = |X(i+1) - X(i)|`.
    pub edge_lengths: Vec<f64>,
    /// Dual (vertex) lengths `(h[i-1] + h[i]) / 2`, the arclength quadrature weights.
    pub vertex_weights: Vec<f64>,
    pub tangents: Vec<Point>,
    pub normals: Vec<Point>,
    pub curvature: Vec<f64>,
    pub length: f64,
    pub area: f64,
    pub kappa_bar: f64,
    pub turning_number: i32,
    pub diameter: f64,
    pub diameter_pair: (usize, usize),
}

impl GeoCache {
    pub fn max_abs_curvature(&self) -> f64 {
        self.curvature.iter().fold(0.0, |m, k| m.max(k.abs()))
    }

    pub fn min_edge(&self) -> f64 {
        self.edge_lengths
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean_edge(&self) -> f64 {
        self.length / self.edge_lengths.len() as f64
    }

    /// `∫ f ds` by the vertex trapezoid rule.
    pub fn integrate(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        values
            .into_iter()
            .zip(&self.vertex_weights)
            .map(|(f, w)| f * w)
            .sum()
    }

    /// Three-point arclength second derivative of a per-vertex field.
    pub fn arclength_laplacian(&self, values: &[f64]) -> Vec<f64> {
        let n = values.len();
        (0..n)
            .map(|i| {
                let hp = self.edge_lengths[(i + n - 1) % n];
                let hn = self.edge_lengths[i];
                let fwd = (values[(i + 1) % n] - values[i]) / hn;
                let bwd = (values[i] - values[(i + n - 1) % n]) / hp;
                2.0 * (fwd - bwd) / (hp + hn)
            })
            .collect()
    }

    /// Centered arclength first derivative of a per-vertex field.
    pub fn arclength_derivative(&self, values: &[f64]) -> Vec<f64> {
        let n = values.len();
        (0..n)
            .map(|i| {
                let hp = self.edge_lengths[(i + n - 1) % n];
                let hn = self.edge_lengths[i];
                (values[(i + 1) % n] - values[(i + n - 1) % n]) / (hp + hn)
            })
            .collect()
    }
}

/// All local quantities; the diameter is left unset (NaN) because the
/// exhaustive scan is too costly to repeat on every time step.
pub(crate) fn local_cache(curve: &ClosedCurve) -> Result<GeoCache> {
    curve.validate()?;
    let v = curve.vertices();
    let n = v.len();
    let edge_lengths = curve.edge_lengths();
    let units: Vec<Point> = (0..n)
        .map(|i| (v[(i + 1) % n] - v[i]) / edge_lengths[i])
        .collect();

    let mut vertex_weights = Vec::with_capacity(n);
    let mut tangents = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    let mut curvature = Vec::with_capacity(n);
    let mut turning = 0.0;
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let (hp, hn) = (edge_lengths[prev], edge_lengths[i]);
        let (up, un) = (units[prev], units[i]);
        let sum = up + un;
        let t = if sum.norm() > 1e-300 {
            sum.normalize()
        } else {
            un
        };
        let nu = normal_of(t);
        // ∂ₛ²γ ≈ 2 (un - up) / (hp + hn), κ = -⟨∂ₛ²γ, ν⟩.
        let lap = (un - up) * (2.0 / (hp + hn));
        vertex_weights.push(0.5 * (hp + hn));
        tangents.push(t);
        normals.push(nu);
        curvature.push(-lap.dot(&nu));
        turning += cross(up, un).atan2(up.dot(&un));
    }
    let length: f64 = edge_lengths.iter().sum();
    let integral_kappa: f64 = curvature
        .iter()
        .zip(&vertex_weights)
        .map(|(k, w)| k * w)
        .sum();
    Ok(GeoCache {
        edge_lengths,
        vertex_weights,
        tangents,
        normals,
        curvature,
        length,
        area: shoelace(v),
        kappa_bar: integral_kappa / length,
        turning_number: (turning / (2.0 * PI)).round() as i32,
        diameter: f64::NAN,
        diameter_pair: (0, 0),
    })
}

pub fn build_cache(curve: &ClosedCurve) -> Result<GeoCache> {
    let mut cache = local_cache(curve)?;
    let (d, pair) = diameter(curve.vertices());
    cache.diameter = d;
    cache.diameter_pair = pair;
    Ok(cache)
}

/// Extrinsic diameter by exhaustive pair scan.
pub fn diameter(points: &[Point]) -> (f64, (usize, usize)) {
    let mut best = 0.0;
    let mut pair = (0, 0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d2 = (points[i] - points[j]).norm_squared();
            if d2 > best {
                best = d2;
                pair = (i, j);
            }
        }
    }
    (best.sqrt(), pair)
}

/// Redistribute `n` vertices at equal arclength along the periodic cubic
/// spline through the current vertices. Vertex 0 stays fixed.
pub fn resample_uniform(curve: &ClosedCurve, n: usize) -> Result<ClosedCurve> {
    if n < MIN_VERTICES {
        return Err(Error::TooFewVertices(n));
    }
    curve.validate()?;
    let spline = PeriodicSpline::through(curve.vertices());
    let total = spline.total_length();
    let vertices = (0..n)
        .map(|j| spline.at_arclength(total * j as f64 / n as f64))
        .collect();
    ClosedCurve::new(vertices, curve.time)
}

/// Right-hand side of the nonlocal multiplier identity for curves,
///
/// `H̄ = (∫⟨∂ₜX, X - x⟩ ds + L) / (2 V)`,
///
/// with `∂ₜX = speed·ν` and `x` the vertex centroid. It reproduces `κ̄` when
/// `speed = -(κ - κ̄)` is the volume preserving velocity.
pub fn average_curvature_nonlocal(curve: &ClosedCurve, normal_speed: &[f64]) -> Result<f64> {
    let cache = local_cache(curve)?;
    assert_eq!(normal_speed.len(), curve.len(), "one speed per vertex");
    let length = cache.length;
    if cache.area.abs() < 1e-12 * length * length {
        return Err(Error::ZeroVolume {
            area: cache.area,
            length,
        });
    }
    let x = curve.centroid();
    let moment = cache.integrate(
        curve
            .vertices()
            .iter()
            .zip(&cache.normals)
            .zip(normal_speed)
            .map(|((p, nu), s)| s * nu.dot(&(p - x))),
    );
    Ok((moment + length) / (2.0 * cache.area))
}

/// Normal speed `-(κ - multiplier)` at each vertex.
pub fn flow_speed(cache: &GeoCache, multiplier: f64) -> Vec<f64> {
    cache.curvature.iter().map(|k| -(k - multiplier)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TouchPair {
    pub p: usize,
    pub q: usize,
    pub separation: f64,
    /// `⟨ν(p), ν(q)⟩`.
    pub alignment: f64,
    /// `⟨ν(p), X(q) - X(p)⟩`.
    pub side_p: f64,
    /// `⟨ν(q), X(p) - X(q)⟩`.
    pub side_q: f64,
}

impl TouchPair {
    /// Facing sheets with opposite normals, each lying behind the other.
    pub fn is_opposing(&self) -> bool {
        self.alignment < -0.9 && self.side_p < 0.0 && self.side_q < 0.0
    }
}

#[derive(Clone, Debug, Default)]
pub struct TouchReport {
    pub pairs: Vec<TouchPair>,
}

impl TouchReport {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn opposing(&self) -> impl Iterator<Item = &TouchPair> {
        self.pairs.iter().filter(|p| p.is_opposing())
    }

    /// Closest opposing pair, if any.
    pub fn closest_opposing(&self) -> Option<&TouchPair> {
        self.opposing()
            .min_by(|a, b| a.separation.partial_cmp(&b.separation).unwrap())
    }
}

/// Non-neighbor vertex pairs closer than `eps`. Pairs whose cyclic index
/// separation is below N/8 are never reported.
pub fn detect_touch(curve: &ClosedCurve, eps: f64) -> Result<TouchReport> {
    assert!(eps > 0.0, "eps must be positive");
    let cache = local_cache(curve)?;
    let v = curve.vertices();
    let n = v.len();
    let min_sep = n.div_ceil(8);
    let mut pairs = Vec::new();
    for p in 0..n {
        for q in p + 1..n {
            let gap = (q - p).min(n - (q - p));
            if gap < min_sep {
                continue;
            }
            let d = v[q] - v[p];
            let separation = d.norm();
            if separation >= eps {
                continue;
            }
            pairs.push(TouchPair {
                p,
                q,
                separation,
                alignment: cache.normals[p].dot(&cache.normals[q]),
                side_p: cache.normals[p].dot(&d),
                side_q: -cache.normals[q].dot(&d),
            });
        }
    }
    Ok(TouchReport { pairs })
}
