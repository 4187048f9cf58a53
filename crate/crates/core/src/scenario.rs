//! Initial curves.

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{local_cache, resample_uniform, ClosedCurve, Point};
use crate::io;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    Circle {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Convex curve of diameter 1 and length `2 + eps` whose diameter grows at first.
    Capsule {
        eps: f64,
    },
    Dumbbell {
        neck_width: f64,
    },
    /// Lemniscate-like curve; `delta` unbalances the lobes.
    FigureEight {
        delta: f64,
    },
    File {
        path: PathBuf,
    },
}

/// Random low-frequency normal offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    /// Largest coefficient, relative to `L/2π`.
    pub amplitude: f64,
    /// Frequencies `2..=modes` are used.
    pub modes: usize,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadParameters(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{name} = {v} must be positive")))
    }
}

pub fn make_scenario(scenario: &Scenario, n: usize) -> Result<ClosedCurve> {
    if n < crate::geometry::MIN_VERTICES {
        return Err(Error::TooFewVertices(n));
    }
    match scenario {
        Scenario::Circle { radius } => {
            positive("radius", *radius)?;
            Ok(circle(n, *radius))
        }
        Scenario::Ellipse { a, b } => {
            positive("a", *a)?;
            positive("b", *b)?;
            ellipse(n, *a, *b)
        }
        Scenario::Capsule { eps } => capsule(n, *eps),
        Scenario::Dumbbell { neck_width } => {
            positive("neck_width", *neck_width)?;
            if *neck_width >= 2.0 {
                return Err(bad("neck_width must be below 2"));
            }
            dumbbell(n, *neck_width)
        }
        Scenario::FigureEight { delta } => {
            if !(delta.abs() < 1.0) {
                return Err(bad("|delta| must be below 1"));
            }
            figure_eight(n, *delta)
        }
        Scenario::File { path } => {
            let curve = io::read_snapshot(path)?;
            if curve.len() == n {
                Ok(curve)
            } else {
                resample_uniform(&curve, n)
            }
        }
    }
}

pub fn circle(n: usize, radius: f64) -> ClosedCurve {
    let v = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            Point::new(radius * t.cos(), radius * t.sin())
        })
        .collect();
    ClosedCurve::new_unchecked(v, 0.0)
}

/// Dense parametric sampling followed by arclength resampling; vertex 0 is the first sample.
fn parametric(n: usize, f: impl Fn(f64) -> Point) -> Result<ClosedCurve> {
    let dense = (16 * n).max(4096);
    let v = (0..dense)
        .map(|k| f(2.0 * PI * k as f64 / dense as f64))
        .collect();
    resample_uniform(&ClosedCurve::new(v, 0.0)?, n)
}

/// Vertex 0 at `(a, 0)`.
pub fn ellipse(n: usize, a: f64, b: f64) -> Result<ClosedCurve> {
    parametric(n, |t| Point::new(a * t.cos(), b * t.sin()))
}

/// Two lobes joined by a neck of width `w` at `x = 0`.
pub fn dumbbell(n: usize, w: f64) -> Result<ClosedCurve> {
    parametric(n, |t| {
        let c = t.cos();
        Point::new(2.0 * c, t.sin() * (0.5 * w + (1.0 - 0.5 * w) * c * c))
    })
}

pub fn figure_eight(n: usize, delta: f64) -> Result<ClosedCurve> {
    parametric(n, |t| {
        Point::new(t.cos(), 0.5 * (2.0 * t).sin() * (1.0 + delta * t.cos()))
    })
}

/// Arcs of the radius-½ circle centered at `(0, ½)` around both tips, joined
/// to vertical sides by small arcs of radius `α/3`, where `α` is the tip arc
/// half-angle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapsuleShape {
    pub alpha: f64,
    pub transition_radius: f64,
    pub length: f64,
}

impl CapsuleShape {
    fn with_alpha(alpha: f64) -> Self {
        let rt = alpha / 3.0;
        Self {
            alpha,
            transition_radius: rt,
            length: 2.0 * alpha
                + 4.0 * rt * (PI / 2.0 - alpha)
                + 2.0 * (1.0 - 2.0 * rt) * alpha.cos(),
        }
    }

    pub fn for_length(length: f64) -> Result<Self> {
        if !(length > 2.0 && length < PI) {
            return Err(bad(format!("capsule length {length} must lie in (2, pi)")));
        }
        let (mut lo, mut hi) = (0.0, PI / 2.0);
        if Self::with_alpha(hi).length < length {
            return Err(bad(format!("capsule length {length} is not reachable")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if Self::with_alpha(mid).length < length {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self::with_alpha(0.5 * (lo + hi)))
    }

    /// Point at arclength `s` from the bottom tip `(0, 0)`, counterclockwise.
    pub fn point_at(&self, s: f64) -> Point {
        let (a, rt) = (self.alpha, self.transition_radius);
        let s = s.rem_euclid(self.length);
        // Right half, bottom tip to top tip; the left half mirrors it.
        let half = 0.5 * self.length;
        let (s_half, mirror) = if s <= half {
            (s, false)
        } else {
            (self.length - s, true)
        };
        let big = Point::new(0.0, 0.5);
        let rc = 0.5 - rt;
        let tip = 0.5 * a;
        let trans = rt * (PI / 2.0 - a);
        let side = (1.0 - 2.0 * rt) * a.cos();
        let p = if s_half <= tip {
            let th = -PI / 2.0 + s_half / 0.5;
            big + Point::new(0.5 * th.cos(), 0.5 * th.sin())
        } else if s_half <= tip + trans {
            let c = big + Point::new(rc * a.sin(), -rc * a.cos());
            let th = -PI / 2.0 + a + (s_half - tip) / rt;
            c + Point::new(rt * th.cos(), rt * th.sin())
        } else if s_half <= tip + trans + side {
            let x = rc * a.sin() + rt;
            Point::new(x, 0.5 - rc * a.cos() + (s_half - tip - trans))
        } else if s_half <= tip + 2.0 * trans + side {
            let c = big + Point::new(rc * a.sin(), rc * a.cos());
            let th = (s_half - tip - trans - side) / rt;
            c + Point::new(rt * th.cos(), rt * th.sin())
        } else {
            let th = PI / 2.0 - (half - s_half) / 0.5;
            big + Point::new(0.5 * th.cos(), 0.5 * th.sin())
        };
        if mirror {
            Point::new(-p.x, p.y)
        } else {
            p
        }
    }
}

/// Capsule of length `2 + eps` sampled at equal arclength; vertex 0 is the
/// bottom tip and, for even `n`, vertex `n/2` the top tip.
pub fn capsule(n: usize, eps: f64) -> Result<ClosedCurve> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(bad(format!("capsule eps = {eps} must lie in (0, 1)")));
    }
    let shape = CapsuleShape::for_length(2.0 + eps)?;
    let v = (0..n)
        .map(|k| shape.point_at(shape.length * k as f64 / n as f64))
        .collect();
    ClosedCurve::new(v, 0.0)
}

/// Moves every vertex along its normal by `Σ_k (a_k cos kφ + b_k sin kφ)`,
/// `φ` the normalized arclength angle, with `|a_k|, |b_k| ≤ amplitude·L/(2π k²)`.
pub fn perturb(curve: &ClosedCurve, p: &Perturbation, seed: u64) -> Result<ClosedCurve> {
    let cache = local_cache(curve)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = p.amplitude * cache.length / (2.0 * PI);
    let coeffs: Vec<(usize, f64, f64)> = (2..=p.modes.max(2))
        .map(|k| {
            let w = scale / (k * k) as f64;
            (
                k,
                w * rng.random_range(-1.0..1.0),
                w * rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let mut s = 0.0;
    let v = curve
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let phi = 2.0 * PI * s / cache.length;
            s += cache.edge_lengths[i];
            let offset: f64 = coeffs
                .iter()
                .map(|&(k, a, b)| a * (k as f64 * phi).cos() + b * (k as f64 * phi).sin())
                .sum();
            x + cache.normals[i] * offset
        })
        .collect();
    ClosedCurve::new(v, curve.time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_cache;

    #[test]
    fn capsule_geometry() {
        let shape = CapsuleShape::for_length(2.1).unwrap();
        assert!((shape.length - 2.1).abs() < 1e-12);
        assert!((shape.point_at(0.0) - Point::zeros()).norm() < 1e-14);
        assert!((shape.point_at(1.05) - Point::new(0.0, 1.0)).norm() < 1e-12);
        // Continuity at every junction.
        for k in 1..20_000 {
            let s = 2.1 * k as f64 / 20_000.0;
            let d = (shape.point_at(s) - shape.point_at(s - 1e-7)).norm();
            assert!((d - 1e-7).abs() < 1e-9, "jump at s = {s}");
        }
    }

    #[test]
    fn capsule_preset() {
        let c = capsule(512, 0.1).unwrap();
        let cache = build_cache(&c).unwrap();
        assert!((cache.diameter - 1.0).abs() < 1e-3);
        assert!((cache.length - 2.1).abs() < 1e-2);
        assert!((cache.curvature[0] - 2.0).abs() < 0.02);
        assert!((cache.curvature[256] - 2.0).abs() < 0.02);
        assert!(cache.curvature.iter().all(|&k| k >= 0.0));
        assert!(c.edge_ratio() < 1.01);
    }

    #[test]
    fn capsule_rejects_bad_eps() {
        assert!(matches!(capsule(256, 1.5), Err(Error::BadParameters(_))));
        assert!(matches!(capsule(256, 0.0), Err(Error::BadParameters(_))));
        assert!(CapsuleShape::for_length(PI).is_err());
    }

    #[test]
    fn dumbbell_neck_is_detected() {
        let c = dumbbell(512, 0.01).unwrap();
        let report = crate::geometry::detect_touch(&c, 0.05).unwrap();
        let pair = report.closest_opposing().expect("neck pair");
        assert!(pair.alignment < -0.99);
        assert!(pair.side_p < 0.0 && pair.side_q < 0.0);
        assert!(pair.separation < 0.012);
    }

    #[test]
    fn perturbation_is_seeded() {
        let base = circle(128, 1.0);
        let p = Perturbation {
            amplitude: 0.02,
            modes: 4,
        };
        let a = perturb(&base, &p, 7).unwrap();
        let b = perturb(&base, &p, 7).unwrap();
        let c = perturb(&base, &p, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
