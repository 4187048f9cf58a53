//! Semi-implicit time stepping of `∂ₜγ = -(κ - λ)ν`.
//!
//! With `∂ₛ²γ = -κν` the flow is a heat equation for the position with a
//! nonlocal forcing, `∂ₜX = ∂ₛ²X + λν`. Each step solves
//!
//! `(I - dt Δₛ) X⁺ = X + dt λ ν`
//!
//! with the arclength Laplacian frozen at the current curve. The solution is
//! affine in `λ`, `X⁺ = P + λQ`, so the enclosed area after the step is a
//! quadratic function of `λ` and the constrained multiplier is found by a
//! scalar secant iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, FlowError, Result};
use crate::geometry::{self, cross, local_cache, resample_uniform, ClosedCurve, GeoCache, Point};
use crate::linalg::CyclicTridiagonal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    /// Volume preserving flow, `λ` is the average curvature.
    Vpmcf,
    /// Curve shortening control, `λ ≡ 0`.
    Mcf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplier {
    /// `λ = κ̄` of the current curve.
    Analytic,
    /// `λ` chosen so that the area after the step equals the initial area.
    Constrained,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub mode: FlowMode,
    #[serde(default = "default_multiplier")]
    pub multiplier: Multiplier,
    pub dt: f64,
    pub t_end: f64,
    /// Vertex count used when resampling.
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    /// Resample after this many accepted steps; 0 disables resampling.
    #[serde(default)]
    pub resample_every: usize,
    #[serde(default = "default_cfl_guard")]
    pub cfl_guard: f64,
    /// Store a snapshot every this many accepted steps (the final state is always stored).
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
}

fn default_multiplier() -> Multiplier {
    Multiplier::Constrained
}

fn default_cfl_guard() -> f64 {
    0.1
}

fn default_snapshot_every() -> usize {
    100
}

impl FlowConfig {
    pub fn new(mode: FlowMode, dt: f64, t_end: f64, n: usize) -> Self {
        Self {
            mode,
            multiplier: default_multiplier(),
            dt,
            t_end,
            n,
            resample_every: 0,
            cfl_guard: default_cfl_guard(),
            snapshot_every: default_snapshot_every(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadParameters(m.to_string()));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("t_end must be positive");
        }
        if !(self.cfl_guard > 0.0 && self.cfl_guard <= 1.0) {
            return bad("cfl_guard must lie in (0, 1]");
        }
        if self.n < geometry::MIN_VERTICES {
            return Err(Error::TooFewVertices(self.n));
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be at least 1");
        }
        Ok(())
    }
}

/// Stored state of the flow.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub curve: ClosedCurve,
    pub cache: GeoCache,
    /// Number of accepted steps before this state.
    pub step: usize,
    /// Incremented by every resample; equal generations share material vertices.
    pub generation: usize,
}

impl Snapshot {
    pub fn new(curve: ClosedCurve, step: usize, generation: usize) -> Result<Self> {
        let cache = geometry::build_cache(&curve)?;
        Ok(Self {
            curve,
            cache,
            step,
            generation,
        })
    }

    pub fn time(&self) -> f64 {
        self.curve.time
    }
}

/// Scalars after every accepted step; record 0 is the initial state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    /// Step size that produced this state (0 for the initial record).
    pub dt: f64,
    /// `λ` used by the step.
    pub multiplier: f64,
    /// Average curvature of the resulting curve.
    pub kappa_bar: f64,
    /// Nonlocal term of the flow at this state: `κ̄`, or 0 in curve shortening mode.
    pub hbar: f64,
    pub length: f64,
    pub area: f64,
    /// Whether the state was resampled after the step.
    pub resampled: bool,
}

#[derive(Clone, Debug)]
pub struct FlowHistory {
    pub config: FlowConfig,
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepRecord>,
    /// Estimated singular time when the run stopped at a singularity.
    pub singular_time: Option<f64>,
}

impl FlowHistory {
    pub fn initial(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("history is never empty")
    }

    pub fn initial_area(&self) -> f64 {
        self.steps
            .first()
            .map_or(self.initial().cache.area, |r| r.area)
    }

    /// `∫₀^{tₖ} h̄² dt` at every step record, trapezoid rule.
    pub fn cumulative_i2(&self) -> Vec<f64> {
        let mut acc = Vec::with_capacity(self.steps.len());
        let mut sum = 0.0;
        for (k, r) in self.steps.iter().enumerate() {
            if k > 0 {
                let p = &self.steps[k - 1];
                sum += 0.5 * (r.t - p.t) * (r.hbar * r.hbar + p.hbar * p.hbar);
            }
            acc.push(sum);
        }
        acc
    }

    /// `∫₀ᵗ h̄²`, linear between records and constant outside their range.
    pub fn i2_at(&self, t: f64) -> f64 {
        interpolate_records(&self.steps, &self.cumulative_i2(), t)
    }

    /// `∫ₐᵇ h̄²`.
    pub fn i2_between(&self, a: f64, b: f64) -> f64 {
        let cum = self.cumulative_i2();
        interpolate_records(&self.steps, &cum, b) - interpolate_records(&self.steps, &cum, a)
    }

    /// `h̄` at time `t`, linear between records.
    pub fn hbar_at(&self, t: f64) -> f64 {
        let h: Vec<f64> = self.steps.iter().map(|r| r.hbar).collect();
        interpolate_records(&self.steps, &h, t)
    }

    /// Index of the snapshot closest in time to `t`.
    pub fn nearest_snapshot(&self, t: f64) -> usize {
        let mut best = 0;
        for (k, s) in self.snapshots.iter().enumerate() {
            if (s.time() - t).abs() < (self.snapshots[best].time() - t).abs() {
                best = k;
            }
        }
        best
    }
}

fn interpolate_records(steps: &[StepRecord], values: &[f64], t: f64) -> f64 {
    if steps.is_empty() {
        return 0.0;
    }
    let k = steps.partition_point(|r| r.t <= t);
    if k == 0 {
        return values[0];
    }
    if k == steps.len() {
        return values[k - 1];
    }
    let (a, b) = (&steps[k - 1], &steps[k]);
    let w = (t - a.t) / (b.t - a.t);
    values[k - 1] * (1.0 - w) + values[k] * w
}

fn nominal_multiplier(config: &FlowConfig, cache: &GeoCache) -> f64 {
    match config.mode {
        FlowMode::Mcf => 0.0,
        FlowMode::Vpmcf => cache.kappa_bar,
    }
}

/// One step that conserves the current area in constrained mode.
pub fn step(curve: &ClosedCurve, config: &FlowConfig) -> Result<(ClosedCurve, f64)> {
    let target = curve.signed_area();
    step_with_target(curve, config, config.dt, target)
}

/// One step of size `dt`; in constrained mode the area after the step is `target_area`.
pub fn step_with_target(
    curve: &ClosedCurve,
    config: &FlowConfig,
    dt: f64,
    target_area: f64,
) -> Result<(ClosedCurve, f64)> {
    let cache = local_cache(curve)?;
    step_cached(curve, &cache, config, dt, target_area)
}

fn step_cached(
    curve: &ClosedCurve,
    cache: &GeoCache,
    config: &FlowConfig,
    dt: f64,
    target_area: f64,
) -> Result<(ClosedCurve, f64)> {
    let n = curve.len();
    let min_edge = cache.min_edge();
    if config.cfl_guard * dt > min_edge * min_edge {
        return Err(Error::StepRejected(format!(
            "dt = {dt:e} violates the step guard for minimal edge {min_edge:e}"
        )));
    }

    let h = &cache.edge_lengths;
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 0..n {
        let hp = h[(i + n - 1) % n];
        let hn = h[i];
        let scale = 2.0 * dt / (hp + hn);
        lower[i] = -scale / hp;
        upper[i] = -scale / hn;
        diag[i] = 1.0 + scale / hp + scale / hn;
    }
    let system = CyclicTridiagonal::new(&lower, &diag, &upper);
    let v = curve.vertices();
    let solve_points = |rhs: &mut dyn Iterator<Item = Point>| -> Vec<Point> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = rhs.map(|p| (p.x, p.y)).unzip();
        let x = system.solve(&xs);
        let y = system.solve(&ys);
        x.into_iter()
            .zip(y)
            .map(|(x, y)| Point::new(x, y))
            .collect()
    };
    let p = solve_points(&mut v.iter().copied());
    let q = solve_points(&mut cache.normals.iter().map(|nu| nu * dt));

    let multiplier = match (config.mode, config.multiplier) {
        (FlowMode::Mcf, _) => 0.0,
        (FlowMode::Vpmcf, Multiplier::Analytic) => cache.kappa_bar,
        (FlowMode::Vpmcf, Multiplier::Constrained) => {
            solve_area_multiplier(&p, &q, target_area, cache.kappa_bar)?
        }
    };
    let next: Vec<Point> = p.iter().zip(&q).map(|(a, b)| a + b * multiplier).collect();

    let mean = next
        .iter()
        .enumerate()
        .map(|(i, a)| (next[(i + 1) % n] - a).norm())
        .fold((f64::INFINITY, 0.0), |(lo, sum), e| (lo.min(e), sum + e));
    let (shortest, mean_edge) = (mean.0, mean.1 / n as f64);
    if !(shortest >= 1e-3 * mean_edge) {
        return Err(Error::StepRejected(format!(
            "edge collapsed to {shortest:e} (mean {mean_edge:e})"
        )));
    }
    Ok((
        ClosedCurve::new_unchecked(next, curve.time + dt),
        multiplier,
    ))
}

/// Area of `P + λQ` as `a0 + a1 λ + a2 λ²`.
fn area_polynomial(p: &[Point], q: &[Point]) -> [f64; 3] {
    let n = p.len();
    let mut a = [0.0; 3];
    for i in 0..n {
        let j = (i + 1) % n;
        a[0] += cross(p[i], p[j]);
        a[1] += cross(p[i], q[j]) + cross(q[i], p[j]);
        a[2] += cross(q[i], q[j]);
    }
    a.map(|c| 0.5 * c)
}

fn solve_area_multiplier(p: &[Point], q: &[Point], target: f64, guess: f64) -> Result<f64> {
    let a = area_polynomial(p, q);
    let residual = |l: f64| a[0] + l * (a[1] + l * a[2]) - target;
    secant(
        residual,
        guess,
        guess + 1e-3 * (1.0 + guess.abs()),
        1e-12 * target.abs(),
    )
    .ok_or_else(|| Error::StepRejected("area multiplier did not converge".into()))
}

/// Secant iteration for `f(x) = 0`, up to 50 iterations, stopping when `|f| ≤ tol`.
pub(crate) fn secant<F: Fn(f64) -> f64>(f: F, x0: f64, x1: f64, tol: f64) -> Option<f64> {
    let (mut xa, mut xb) = (x0, x1);
    let (mut fa, mut fb) = (f(xa), f(xb));
    for _ in 0..50 {
        if fb.abs() <= tol {
            return Some(xb);
        }
        if fa.abs() <= tol {
            return Some(xa);
        }
        let denom = fb - fa;
        if denom == 0.0 || !denom.is_finite() {
            return None;
        }
        let xn = xb - fb * (xb - xa) / denom;
        xa = xb;
        fa = fb;
        xb = xn;
        fb = f(xb);
    }
    (fb.abs() <= tol).then_some(xb)
}

/// Uniform normal offset restoring the signed area after a resample.
fn restore_area(curve: ClosedCurve, target: f64) -> Result<ClosedCurve> {
    let cache = local_cache(&curve)?;
    let shifted = |d: f64| -> Vec<Point> {
        curve
            .vertices()
            .iter()
            .zip(&cache.normals)
            .map(|(p, nu)| p + nu * d)
            .collect()
    };
    let f = |d: f64| geometry::shoelace(&shifted(d)) - target;
    let first = -(cache.area - target) / cache.length;
    let d = secant(f, 0.0, first, 1e-13 * target.abs())
        .ok_or_else(|| Error::StepRejected("area restoration did not converge".into()))?;
    Ok(ClosedCurve::new_unchecked(shifted(d), curve.time))
}

const SINGULAR_EDGE_FRACTION: f64 = 1e-6;
const MIN_DT: f64 = 1e-14;
const GROWTH_AFTER: usize = 50;

/// Integrate from `initial` to `config.t_end`.
///
/// Rejected steps are retried with half the step size; after a run of
/// accepted steps the size is doubled again, never beyond `config.dt`.
pub fn run(initial: &ClosedCurve, config: &FlowConfig) -> Result<FlowHistory, FlowError> {
    config.validate()?;
    let mut curve = initial.clone();
    let mut cache = local_cache(&curve)?;
    let t0 = curve.time;
    let t_end = t0 + config.t_end;
    let v0 = cache.area;
    let singular_edge = SINGULAR_EDGE_FRACTION * cache.mean_edge();
    let record = |cache: &GeoCache, t: f64, dt: f64, multiplier: f64, resampled: bool| StepRecord {
        t,
        dt,
        multiplier,
        kappa_bar: cache.kappa_bar,
        hbar: nominal_multiplier(config, cache),
        length: cache.length,
        area: cache.area,
        resampled,
    };

    let mut history = FlowHistory {
        config: config.clone(),
        snapshots: vec![Snapshot::new(curve.clone(), 0, 0)?],
        steps: vec![record(
            &cache,
            t0,
            0.0,
            nominal_multiplier(config, &cache),
            false,
        )],
        singular_time: None,
    };
    let mut dt = config.dt;
    let mut accepted = 0usize;
    let mut streak = 0usize;
    let mut generation = 0usize;

    while curve.time < t_end {
        let remaining = t_end - curve.time;
        let (this_dt, last) = if dt >= remaining * (1.0 - 1e-12) {
            (remaining, true)
        } else {
            (dt, false)
        };
        let (mut next, multiplier) = match step_cached(&curve, &cache, config, this_dt, v0) {
            Ok(out) => out,
            Err(Error::StepRejected(_)) => {
                dt *= 0.5;
                streak = 0;
                if dt < MIN_DT {
                    return Err(Error::NoProgress { t: curve.time, dt }.into());
                }
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        if last {
            next.time = t_end;
        }
        accepted += 1;
        streak += 1;
        if streak >= GROWTH_AFTER && dt < config.dt {
            dt = (2.0 * dt).min(config.dt);
            streak = 0;
        }

        let mut resampled = false;
        if config.resample_every > 0 && accepted.is_multiple_of(config.resample_every) && !last {
            next = resample_uniform(&next, config.n)?;
            if config.mode == FlowMode::Vpmcf && config.multiplier == Multiplier::Constrained {
                next = restore_area(next, v0)?;
            }
            generation += 1;
            resampled = true;
        }
        curve = next;
        cache = local_cache(&curve)?;
        history
            .steps
            .push(record(&cache, curve.time, this_dt, multiplier, resampled));

        if cache.min_edge() < singular_edge {
            history
                .snapshots
                .push(Snapshot::new(curve.clone(), accepted, generation)?);
            let t_estimate = match config.mode {
                FlowMode::Mcf => {
                    let m = cache.turning_number.max(1) as f64;
                    curve.time + cache.area.abs() / (2.0 * std::f64::consts::PI * m)
                }
                FlowMode::Vpmcf => curve.time,
            };
            history.singular_time = Some(t_estimate);
            return Err(FlowError::SingularityReached {
                history: Box::new(history),
                t_estimate,
            });
        }
        if accepted.is_multiple_of(config.snapshot_every) || last {
            history
                .snapshots
                .push(Snapshot::new(curve.clone(), accepted, generation)?);
        }
    }
    Ok(history)
}

/// Largest deviation of the discrete curvature evolution from
/// `∂ₜκ = ∂ₛ²κ + (κ - λ)κ²` at snapshot `index`.
///
/// The time derivative is a centered difference along vertex trajectories;
/// the tangential part of the vertex velocity is removed with `⟨v, T⟩ ∂ₛκ`.
pub fn curvature_evolution_residual(history: &FlowHistory, index: usize) -> Result<f64> {
    let last = history.snapshots.len().saturating_sub(1);
    if index < 1 || index + 1 > last {
        return Err(Error::IndexOutOfRange {
            index,
            lo: 1,
            hi: last.saturating_sub(1),
        });
    }
    let (prev, mid, next) = (
        &history.snapshots[index - 1],
        &history.snapshots[index],
        &history.snapshots[index + 1],
    );
    if prev.generation != mid.generation || mid.generation != next.generation {
        return Err(Error::ResampledWindow(index));
    }
    let span = next.time() - prev.time();
    let c = &mid.cache;
    let lambda = history.hbar_at(mid.time());
    let d2k = c.arclength_laplacian(&c.curvature);
    let dk = c.arclength_derivative(&c.curvature);
    let mut worst: f64 = 0.0;
    for i in 0..mid.curve.len() {
        let dkdt = (next.cache.curvature[i] - prev.cache.curvature[i]) / span;
        let velocity = (next.curve.vertex(i) - prev.curve.vertex(i)) / span;
        let normal_rate = dkdt - velocity.dot(&c.tangents[i]) * dk[i];
        let k = c.curvature[i];
        let rhs = d2k[i] + (k - lambda) * k * k;
        worst = worst.max((normal_rate - rhs).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(n: usize, r: f64) -> ClosedCurve {
        let v = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                Point::new(r * t.cos(), r * t.sin())
            })
            .collect();
        ClosedCurve::new(v, 0.0).unwrap()
    }

    #[test]
    fn secant_on_quadratic() {
        let x = secant(|x| x * x - 2.0, 1.0, 2.0, 1e-14).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn circle_is_stationary_in_both_multiplier_modes() {
        let c = circle(128, 1.0);
        for m in [Multiplier::Analytic, Multiplier::Constrained] {
            let mut cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-3, 1.0, 128);
            cfg.multiplier = m;
            let (next, lambda) = step(&c, &cfg).unwrap();
            let moved = c
                .vertices()
                .iter()
                .zip(next.vertices())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(moved < 1e-12, "{m:?}: {moved}");
            assert!((lambda - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn constrained_step_hits_target_area() {
        let v = (0..200)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 200.0;
                Point::new(2.0 * t.cos(), t.sin())
            })
            .collect();
        let c = ClosedCurve::new(v, 0.0).unwrap();
        let cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-4, 1.0, 200);
        let (next, _) = step(&c, &cfg).unwrap();
        let rel = (next.signed_area() - c.signed_area()).abs() / c.signed_area();
        assert!(rel < 1e-12, "{rel}");
        assert!(next.length() < c.length());
    }

    #[test]
    fn step_guard_rejects_large_steps() {
        let c = circle(64, 1.0);
        let mut cfg = FlowConfig::new(FlowMode::Mcf, 1.0, 1.0, 64);
        cfg.cfl_guard = 1.0;
        assert!(matches!(step(&c, &cfg), Err(Error::StepRejected(_))));
    }

    #[test]
    fn run_lands_on_t_end_and_records_every_step() {
        let c = circle(64, 1.0);
        let mut cfg = FlowConfig::new(FlowMode::Vpmcf, 3e-3, 0.1, 64);
        cfg.snapshot_every = 7;
        let h = run(&c, &cfg).unwrap();
        assert_eq!(h.last().time(), 0.1);
        assert_eq!(h.steps.last().unwrap().t, 0.1);
        assert_eq!(h.steps.len(), 35);
        for w in h.snapshots.windows(2) {
            assert!(w[1].time() > w[0].time());
        }
    }

    #[test]
    fn residual_index_bounds() {
        let c = circle(64, 1.0);
        let cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-3, 0.01, 64);
        let mut cfg = cfg;
        cfg.snapshot_every = 1;
        let h = run(&c, &cfg).unwrap();
        assert!(matches!(
            curvature_evolution_residual(&h, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        let last = h.snapshots.len() - 1;
        assert!(curvature_evolution_residual(&h, last).is_err());
        assert!(curvature_evolution_residual(&h, 1).unwrap() < 1e-8);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let ok = r#"{"mode":"vpmcf","dt":1e-4,"t_end":1,"N":64}"#;
        let cfg: FlowConfig = serde_json::from_str(ok).unwrap();
        assert_eq!(cfg.multiplier, Multiplier::Constrained);
        let bad = r#"{"mode":"vpmcf","dt":1e-4,"t_end":1,"N":64,"dtt":1}"#;
        assert!(serde_json::from_str::<FlowConfig>(bad).is_err());
    }
}
