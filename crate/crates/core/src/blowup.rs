//! Parabolic rescaling `(γ, t) ↦ (λ(γ - p), λ²(t - T))` of stored flows.

use crate::error::{Error, Result};
use crate::flow::{FlowHistory, Snapshot, StepRecord};
use crate::geometry::{local_cache, ClosedCurve, GeoCache, Point};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescalingFrame {
    pub center: Point,
    pub time: f64,
    pub lambda: f64,
}

impl RescalingFrame {
    pub fn new(center: Point, time: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::BadParameters(format!(
                "scale {lambda} must be positive"
            )));
        }
        Ok(Self {
            center,
            time,
            lambda,
        })
    }

    pub fn identity() -> Self {
        Self {
            center: Point::zeros(),
            time: 0.0,
            lambda: 1.0,
        }
    }

    pub fn map_time(&self, t: f64) -> f64 {
        self.lambda * self.lambda * (t - self.time)
    }

    pub fn map_curve(&self, curve: &ClosedCurve) -> ClosedCurve {
        curve
            .scaled_about(self.center, self.lambda)
            .with_time(self.map_time(curve.time))
    }

    /// Frame applying `self` and then `then`.
    pub fn compose(&self, then: &RescalingFrame) -> RescalingFrame {
        let l = self.lambda;
        RescalingFrame {
            center: self.center + then.center / l,
            time: self.time + then.time / (l * l),
            lambda: l * then.lambda,
        }
    }
}

fn check_window(history: &FlowHistory, frame: &RescalingFrame) -> Result<()> {
    if history.initial().time() > frame.time {
        return Err(Error::EmptyWindow(frame.time));
    }
    Ok(())
}

/// Rescales every snapshot and step record; caches are recomputed on the new curves.
pub fn rescale(history: &FlowHistory, frame: &RescalingFrame) -> Result<FlowHistory> {
    check_window(history, frame)?;
    let l = frame.lambda;
    let snapshots = history
        .snapshots
        .iter()
        .map(|s| Snapshot::new(frame.map_curve(&s.curve), s.step, s.generation))
        .collect::<Result<Vec<_>>>()?;
    let steps = history
        .steps
        .iter()
        .map(|r| StepRecord {
            t: frame.map_time(r.t),
            dt: l * l * r.dt,
            multiplier: r.multiplier / l,
            kappa_bar: r.kappa_bar / l,
            hbar: r.hbar / l,
            length: r.length * l,
            area: r.area * l * l,
            resampled: r.resampled,
        })
        .collect();
    let mut config = history.config.clone();
    config.dt *= l * l;
    config.t_end *= l * l;
    Ok(FlowHistory {
        config,
        snapshots,
        steps,
        singular_time: history.singular_time.map(|t| frame.map_time(t)),
    })
}

/// Largest relative deviation of `rescaled` from the analytically scaled `original`
/// in curvature, length and area.
pub fn scaled_cache_discrepancy(original: &GeoCache, rescaled: &GeoCache, lambda: f64) -> f64 {
    let rel = |a: f64, b: f64, scale: f64| (a - b).abs() / scale.max(f64::MIN_POSITIVE);
    let kmax = original.max_abs_curvature() / lambda;
    let mut worst = rel(
        rescaled.length,
        original.length * lambda,
        original.length * lambda,
    );
    worst = worst.max(rel(
        rescaled.area,
        original.area * lambda * lambda,
        (original.area * lambda * lambda).abs(),
    ));
    for (a, b) in rescaled.curvature.iter().zip(&original.curvature) {
        worst = worst.max(rel(*a, b / lambda, kmax));
    }
    worst
}

/// `|∫ κ̄² dτ (rescaled) - ∫ κ̄² dt (source)|` over the window from the first
/// snapshot to `min(T, t_last)`.
pub fn psi_invariance_check(history: &FlowHistory, frame: &RescalingFrame) -> Result<f64> {
    check_window(history, frame)?;
    let rescaled = rescale(history, frame)?;
    let a = history.initial().time();
    let b = frame.time.min(history.last().time());
    let source = history.i2_between(a, b);
    let mapped = rescaled.i2_between(frame.map_time(a), frame.map_time(b));
    Ok((source - mapped).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SingularityType {
    TypeI(f64),
    TypeII,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HamiltonPoint {
    pub i: usize,
    pub snapshot: usize,
    pub vertex: usize,
    pub x: Point,
    pub t: f64,
    /// `|κ(xᵢ, tᵢ)|`.
    pub lambda: f64,
    /// `κ²(xᵢ, tᵢ)(T - 1/i - tᵢ)`, maximal over the stored grid.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct TypeReport {
    pub singular_time: f64,
    /// `sup max|κ|² (T - t)` over the last half of the snapshots before `T`.
    pub sup_constant: f64,
    /// Running supremum, one entry per snapshot of the last half.
    pub running_sup: Vec<(f64, f64)>,
    pub classification: SingularityType,
    pub hamilton: Vec<HamiltonPoint>,
}

/// Type I when the running supremum changes by less than 10% over the last quarter.
pub fn classify_type(history: &FlowHistory, t_sing: f64) -> Result<TypeReport> {
    if history.singular_time.is_none() {
        return Err(Error::NoSingularity);
    }
    let before: Vec<usize> = (0..history.snapshots.len())
        .filter(|&k| history.snapshots[k].time() < t_sing)
        .collect();
    if before.is_empty() {
        return Err(Error::EmptyWindow(t_sing));
    }
    let half = &before[before.len() / 2..];
    let mut running_sup = Vec::with_capacity(half.len());
    let mut sup: f64 = 0.0;
    for &k in half {
        let s = &history.snapshots[k];
        let kmax = s.cache.max_abs_curvature();
        sup = sup.max(kmax * kmax * (t_sing - s.time()));
        running_sup.push((s.time(), sup));
    }
    let quarter_start = running_sup[running_sup.len() / 2].1;
    let classification = if sup.is_finite() && (sup - quarter_start) < 0.1 * sup {
        SingularityType::TypeI(sup)
    } else {
        SingularityType::TypeII
    };
    Ok(TypeReport {
        singular_time: t_sing,
        sup_constant: sup,
        running_sup,
        classification,
        hamilton: hamilton_sequence(history, t_sing),
    })
}

/// `argmax κ²(x,t)(T - 1/i - t)` over stored snapshots with `t ≤ T - 1/i`, `i = 1..=10`.
pub fn hamilton_sequence(history: &FlowHistory, t_sing: f64) -> Vec<HamiltonPoint> {
    let mut out = Vec::new();
    for i in 1..=10usize {
        let limit = t_sing - 1.0 / i as f64;
        let mut best: Option<HamiltonPoint> = None;
        for (k, s) in history.snapshots.iter().enumerate() {
            let t = s.time();
            if t > limit {
                continue;
            }
            for (j, kappa) in s.cache.curvature.iter().enumerate() {
                let value = kappa * kappa * (limit - t);
                if best.is_none_or(|b| value > b.value) {
                    best = Some(HamiltonPoint {
                        i,
                        snapshot: k,
                        vertex: j,
                        x: s.curve.vertex(j),
                        t,
                        lambda: kappa.abs(),
                        value,
                    });
                }
            }
        }
        out.extend(best);
    }
    out
}

/// `max |κ + ⟨y, ν⟩/(2τ)|`, zero on the self-similarly shrinking circle of radius `√(-2τ)`.
pub fn shrinker_residual(curve: &ClosedCurve, tau: f64) -> Result<f64> {
    if !(tau < 0.0) {
        return Err(Error::NonNegativeTau(tau));
    }
    let cache = local_cache(curve)?;
    Ok(curve
        .vertices()
        .iter()
        .zip(&cache.normals)
        .zip(&cache.curvature)
        .map(|((y, nu), k)| (k + y.dot(nu) / (2.0 * tau)).abs())
        .fold(0.0, f64::max))
}

/// Interior snapshots with `τ < 0` where `|dκ̄/dτ| > 4/|τ|³ + tol`.
pub fn hbar_decay_check(rescaled: &FlowHistory, tol: f64) -> Result<Vec<usize>> {
    let window: Vec<usize> = (0..rescaled.snapshots.len())
        .filter(|&k| rescaled.snapshots[k].time() < 0.0)
        .collect();
    if window.is_empty() {
        return Err(Error::EmptyWindow(0.0));
    }
    let worst = window
        .iter()
        .map(|&k| {
            let s = &rescaled.snapshots[k];
            s.cache.max_abs_curvature().powi(2) * s.time().abs()
        })
        .fold(0.0, f64::max);
    if worst > 1.0 {
        return Err(Error::NormalizationFailed(worst));
    }
    let mut violations = Vec::new();
    for w in window.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let ta = rescaled.snapshots[a].time();
        let tb = rescaled.snapshots[b].time();
        let tc = rescaled.snapshots[c].time();
        let slope = (rescaled.hbar_at(tc) - rescaled.hbar_at(ta)) / (tc - ta);
        if slope.abs() > 4.0 / tb.abs().powi(3) + tol {
            violations.push(b);
        }
    }
    Ok(violations)
}
