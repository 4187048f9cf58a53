//! Scalar functionals of a flow history and the inequality certificates
//! checked against them.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::flow::FlowHistory;
use crate::geometry::{ClosedCurve, GeoCache, Point};

/// One row per snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub length: f64,
    pub area: f64,
    /// Nonlocal term of the flow (0 in curve shortening mode).
    pub kappa_bar: f64,
    /// `∫₀ᵗ κ̄²`.
    pub i2: f64,
    /// `exp(-i2 / 2)`.
    pub psi: f64,
    pub diam: f64,
    /// `2 κ̄ V / L` with the geometric average curvature.
    pub iso_ratio: f64,
    pub max_abs_kappa: f64,
    pub ddiam_dt: f64,
}

#[derive(Clone, Debug)]
pub struct DiagnosticsSeries {
    pub rows: Vec<SeriesRow>,
    pub vertex_count: usize,
    pub dt: f64,
}

/// `2 κ̄ V / L`, equal to 1 on round circles and invariant under scaling.
pub fn iso_ratio(cache: &GeoCache) -> f64 {
    2.0 * cache.kappa_bar * cache.area / cache.length
}

pub fn series(history: &FlowHistory) -> DiagnosticsSeries {
    let mut rows: Vec<SeriesRow> = history
        .snapshots
        .iter()
        .map(|s| {
            let c = &s.cache;
            let t = s.time();
            let i2 = history.i2_at(t);
            SeriesRow {
                t,
                length: c.length,
                area: c.area,
                kappa_bar: history.hbar_at(t),
                i2,
                psi: (-0.5 * i2).exp(),
                diam: c.diameter,
                iso_ratio: iso_ratio(c),
                max_abs_kappa: c.max_abs_curvature(),
                ddiam_dt: 0.0,
            }
        })
        .collect();
    let slopes = centered_slopes(
        &rows.iter().map(|r| r.t).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.diam).collect::<Vec<_>>(),
    );
    for (r, s) in rows.iter_mut().zip(slopes) {
        r.ddiam_dt = s;
    }
    DiagnosticsSeries {
        rows,
        vertex_count: history.initial().curve.len(),
        dt: history.config.dt,
    }
}

/// Three-point derivative on a nonuniform grid, one-sided at the ends.
fn centered_slopes(t: &[f64], f: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (f[b] - f[a]) / (t[b] - t[a])
        })
        .collect()
}

/// Outcome of an inequality check.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub name: String,
    pub pass: bool,
    /// Smallest `bound - value` over all checked instances; negative on failure.
    pub worst_margin: f64,
    pub details: Vec<String>,
}

impl Certificate {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass: true,
            worst_margin: f64::INFINITY,
            details: Vec::new(),
        }
    }

    /// Records `value ≤ bound`.
    pub fn check(&mut self, value: f64, bound: f64) -> bool {
        let margin = bound - value;
        let ok = margin >= 0.0;
        self.pass &= ok;
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
        }
        ok
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.details.push(line.into());
    }

    pub fn cert_line(&self) -> String {
        format!(
            "CERT {} {} {:e}",
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.worst_margin
        )
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for line in &self.details {
            writeln!(f, "  {line}")?;
        }
        write!(f, "{}", self.cert_line())
    }
}

/// Rows whose diameter slope exceeds `2(|κ̄| - 2/diam) + 10(dt + L/N)`.
pub fn diameter_derivative_check(series: &DiagnosticsSeries) -> Vec<usize> {
    let n = series.vertex_count as f64;
    series
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            let tol = 10.0 * (series.dt + r.length / n);
            r.ddiam_dt > 2.0 * (r.kappa_bar.abs() - 2.0 / r.diam) + tol
        })
        .map(|(i, _)| i)
        .collect()
}

/// Certificates for the time-integrated squared multiplier.
#[derive(Clone, Debug)]
pub struct L2BoundReport {
    /// `I2(t) ≤ L₀²/(2V₀²) (R(t)² + t)` with `R` the running maximum of the diameter.
    pub envelope: Certificate,
    /// Closed-form growth bounds: the diameter bound and `I2(t) ≤ C(1+t²)e^{c√t}`.
    pub growth: Certificate,
    pub c: f64,
    pub big_c: f64,
}

impl L2BoundReport {
    pub fn pass(&self) -> bool {
        self.envelope.pass && self.growth.pass
    }
}

pub fn l2_multiplier_bound_check(series: &DiagnosticsSeries, v0: f64) -> Result<L2BoundReport> {
    let first = series.rows.first().expect("series is never empty");
    let l0 = first.length;
    if v0.abs() < 1e-12 * l0 * l0 {
        return Err(Error::ZeroVolume {
            area: v0,
            length: l0,
        });
    }
    let t0 = first.t;
    let d0 = first.diam;
    let k = l0 * l0 / (2.0 * v0 * v0);
    let c1 = l0 / (2.0 * v0.abs());
    let c2 = l0.sqrt() / (2.0 * v0.abs());
    let c = 4.0 * c2 * l0.sqrt();
    let big_c = k * (2.0 * d0.max(2.0 * c1).powi(2) + 1.0);

    let mut envelope = Certificate::new("l2_multiplier_envelope");
    let mut growth = Certificate::new("l2_multiplier_growth");
    let mut running_max: f64 = 0.0;
    for r in &series.rows {
        let t = r.t - t0;
        running_max = running_max.max(r.diam);
        let i2 = r.i2 - first.i2;
        envelope.check(i2, k * (running_max * running_max + t) * (1.0 + 1e-6));
        let diam_bound = (d0 + 2.0 * c1 * t) * (2.0 * c2 * l0.sqrt() * t.sqrt()).exp();
        growth.check(r.diam, diam_bound * (1.0 + 1e-6));
        growth.check(i2, big_c * (1.0 + t * t) * (c * t.sqrt()).exp());
    }
    envelope.note(format!(
        "I2 <= {k:.6} (R(t)^2 + t) over {} rows",
        series.rows.len()
    ));
    growth.note(format!(
        "diam(t) <= ({d0:.6} + {:.6} t) exp({:.6} sqrt t)",
        2.0 * c1,
        2.0 * c2 * l0.sqrt()
    ));
    growth.note(format!("I2 <= {big_c:.6} (1 + t^2) exp({c:.6} sqrt t)"));
    Ok(L2BoundReport {
        envelope,
        growth,
        c,
        big_c,
    })
}

/// `(4πs)^{-1/2} exp(-|x - x₀|²/(4s))`, `s = t₀ - t`.
pub fn heat_kernel(x: Point, x0: Point, s: f64) -> f64 {
    (4.0 * PI * s).powf(-0.5) * (-(x - x0).norm_squared() / (4.0 * s)).exp()
}

/// `(1 - (|x - x₀|² + 2(t - t₀))/ρ²)³₊`.
pub fn cutoff(x: Point, x0: Point, t_minus_t0: f64, rho: f64) -> f64 {
    let u = 1.0 - ((x - x0).norm_squared() + 2.0 * t_minus_t0) / (rho * rho);
    if u > 0.0 {
        u * u * u
    } else {
        0.0
    }
}

fn weighted_integral(curve: &ClosedCurve, cache: &GeoCache, f: impl Fn(Point) -> f64) -> f64 {
    cache.integrate(curve.vertices().iter().map(|&p| f(p)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityQuery {
    pub center: Point,
    pub t0: f64,
    pub rho: Option<f64>,
    /// Increasing evaluation times, all before `t0`.
    pub times: Vec<f64>,
}

impl DensityQuery {
    /// Evaluation times `t₀ - 4δ, t₀ - 2δ, t₀ - δ`.
    pub fn geometric(center: Point, t0: f64, delta: f64) -> Self {
        Self {
            center,
            t0,
            rho: None,
            times: vec![t0 - 4.0 * delta, t0 - 2.0 * delta, t0 - delta],
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityValues {
    /// Times of the snapshots actually used.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Polynomial extrapolation of the last three values to `t = t₀`.
    pub limit: f64,
}

fn resolve_snapshots(history: &FlowHistory, query: &DensityQuery) -> Result<Vec<usize>> {
    let first = history.initial().time();
    let last = history.last().time();
    if query.times.is_empty() {
        return Err(Error::QueryOutOfRange("no evaluation times".into()));
    }
    let mut picked = Vec::with_capacity(query.times.len());
    for &t in &query.times {
        if !(t < query.t0) {
            return Err(Error::QueryOutOfRange(format!(
                "evaluation time {t} is not before t0 = {}",
                query.t0
            )));
        }
        let slack = 1e-9 * (1.0 + last.abs());
        if t < first - slack || t > last + slack {
            return Err(Error::QueryOutOfRange(format!(
                "evaluation time {t} outside the history [{first}, {last}]"
            )));
        }
        let k = history
            .snapshots
            .iter()
            .enumerate()
            .filter(|(_, s)| s.time() < query.t0)
            .min_by(|a, b| (a.1.time() - t).abs().total_cmp(&(b.1.time() - t).abs()))
            .map(|(k, _)| k)
            .ok_or_else(|| Error::QueryOutOfRange("no snapshot before t0".into()))?;
        picked.push(k);
    }
    Ok(picked)
}

/// Value at `s = 0` of the polynomial through `(sᵢ, fᵢ)`, Neville's scheme.
/// Repeated abscissae are dropped.
pub fn extrapolate_to_zero(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for &(s, f) in points {
        if !pts
            .iter()
            .any(|&(q, _)| (q - s).abs() <= 1e-14 * s.abs().max(1e-300))
        {
            pts.push((s, f));
        }
    }
    let n = pts.len();
    if n == 0 {
        return f64::NAN;
    }
    let mut p: Vec<f64> = pts.iter().map(|&(_, f)| f).collect();
    for m in 1..n {
        for i in 0..n - m {
            let (si, sj) = (pts[i].0, pts[i + m].0);
            p[i] = (sj * p[i] - si * p[i + 1]) / (sj - si);
        }
    }
    p[0]
}

fn density_values(
    history: &FlowHistory,
    query: &DensityQuery,
    snaps: &[usize],
    values: Vec<f64>,
) -> DensityValues {
    let times: Vec<f64> = snaps.iter().map(|&k| history.snapshots[k].time()).collect();
    let tail = times.len().saturating_sub(3);
    let pts: Vec<(f64, f64)> = times[tail..]
        .iter()
        .zip(&values[tail..])
        .map(|(&t, &f)| (query.t0 - t, f))
        .collect();
    DensityValues {
        limit: extrapolate_to_zero(&pts),
        times,
        values,
    }
}

/// `∫ Φ_{(x₀,t₀)} ds` on the snapshots nearest to the query times.
pub fn gaussian_density(history: &FlowHistory, query: &DensityQuery) -> Result<DensityValues> {
    let snaps = resolve_snapshots(history, query)?;
    let values = snaps
        .iter()
        .map(|&k| {
            let s = &history.snapshots[k];
            let tau = query.t0 - s.time();
            weighted_integral(&s.curve, &s.cache, |x| heat_kernel(x, query.center, tau))
        })
        .collect();
    Ok(density_values(history, query, &snaps, values))
}

/// `C₀ = ∫_{M₀} Φ_{(x₀,t₀)} dμ₀`.
pub fn initial_gaussian_mass(history: &FlowHistory, x0: Point, t0: f64) -> f64 {
    let s = history.initial();
    weighted_integral(&s.curve, &s.cache, |x| heat_kernel(x, x0, t0 - s.time()))
}

#[derive(Clone, Debug)]
pub struct LocalDensity {
    pub density: DensityValues,
    pub c0: f64,
    pub psi: Vec<f64>,
    /// Almost monotonicity over every ordered pair of evaluation times.
    pub pairs: Certificate,
}

/// Localized density `∫ φΦ ds` and the almost monotonicity check
/// `ψ(t₃)F(t₃) ≤ ψ(t₂)F(t₂) + 6C₀ √((t₃-t₂)/ρ²) √(∫κ̄²) + 10⁻⁶C₀` for all `t₂ < t₃`.
pub fn local_density(history: &FlowHistory, query: &DensityQuery) -> Result<LocalDensity> {
    let rho = query
        .rho
        .ok_or_else(|| Error::QueryOutOfRange("local density needs a radius".into()))?;
    if !(rho > 0.0) {
        return Err(Error::QueryOutOfRange(format!(
            "radius {rho} must be positive"
        )));
    }
    let snaps = resolve_snapshots(history, query)?;
    let values: Vec<f64> = snaps
        .iter()
        .map(|&k| {
            let s = &history.snapshots[k];
            let (t, x0) = (s.time(), query.center);
            weighted_integral(&s.curve, &s.cache, |x| {
                cutoff(x, x0, t - query.t0, rho) * heat_kernel(x, x0, query.t0 - t)
            })
        })
        .collect();
    let density = density_values(history, query, &snaps, values);
    let c0 = initial_gaussian_mass(history, query.center, query.t0);
    let psi: Vec<f64> = density
        .times
        .iter()
        .map(|&t| (-0.5 * history.i2_between(history.initial().time(), t)).exp())
        .collect();

    let tol = 1e-6 * c0;
    let mut pairs = Certificate::new("almost_monotonicity");
    let n = density.times.len();
    for a in 0..n {
        for b in a + 1..n {
            let (t2, t3) = (density.times[a], density.times[b]);
            if t3 <= t2 {
                continue;
            }
            let slack =
                6.0 * c0 * ((t3 - t2) / (rho * rho)).sqrt() * history.i2_between(t2, t3).sqrt();
            pairs.check(
                psi[b] * density.values[b],
                psi[a] * density.values[a] + slack + tol,
            );
        }
    }
    pairs.note(format!("C0 = {c0:.6e}, rho = {rho}, {n} evaluation times"));
    Ok(LocalDensity {
        density,
        c0,
        psi,
        pairs,
    })
}

/// `θ(1, β) = ½ (4πβ)^{1/2} (1 - 2β)³`.
pub fn clearing_out_theta(beta: f64) -> f64 {
    0.5 * (4.0 * PI * beta).sqrt() * (1.0 - 2.0 * beta).powi(3)
}

/// `min{1/(144 C₀² L e^L + 2), 1/3}`.
pub fn clearing_out_beta0(c0: f64, l: f64) -> f64 {
    (1.0 / (144.0 * c0 * c0 * l * l.exp() + 2.0)).min(1.0 / 3.0)
}

/// Length of the polyline inside the closed disk `B_r(center)`.
pub fn length_in_ball(curve: &ClosedCurve, center: Point, r: f64) -> f64 {
    let v = curve.vertices();
    let n = v.len();
    let mut total = 0.0;
    for i in 0..n {
        let p = v[i] - center;
        let d = v[(i + 1) % n] - v[i];
        let a = d.norm_squared();
        let b = 2.0 * p.dot(&d);
        let c = p.norm_squared() - r * r;
        let disc = b * b - 4.0 * a * c;
        if disc <= 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        let lo = ((-b - sq) / (2.0 * a)).max(0.0);
        let hi = ((-b + sq) / (2.0 * a)).min(1.0);
        if hi > lo {
            total += (hi - lo) * a.sqrt();
        }
    }
    total
}

pub const CLEARING_OUT_SLACK: f64 = 0.95;

/// Lower bound `ℋ¹(M_{t₀-βρ²} ∩ B_ρ(x₀))/ρ ≥ θ e^{-L/2}` at four radii up to `ρ₀`.
pub fn clearing_out_certificate(
    history: &FlowHistory,
    x0: Point,
    t0: f64,
    rho0: f64,
    beta: f64,
) -> Result<Certificate> {
    let start = history.initial().time();
    let l = history.i2_between((t0 - rho0 * rho0).max(start), t0);
    let c0 = initial_gaussian_mass(history, x0, t0);
    let beta0 = clearing_out_beta0(c0, l);
    if !(beta < beta0) {
        return Err(Error::BetaTooLarge { beta, beta0 });
    }

    let delta = (t0 - start).min(rho0 * rho0) / 64.0;
    let density = gaussian_density(history, &DensityQuery::geometric(x0, t0, delta))?;
    if !(density.limit >= 0.99) {
        return Err(Error::PointNotReached {
            x: [x0.x, x0.y],
            t: t0,
            density: density.limit,
        });
    }

    let theta = clearing_out_theta(beta);
    let bound = CLEARING_OUT_SLACK * theta * (-0.5 * l).exp();
    let mut cert = Certificate::new("clearing_out");
    cert.note(format!(
        "L = {l:.6e}, C0 = {c0:.6}, beta0 = {beta0:.6}, theta = {theta:.6}, density = {:.6}",
        density.limit
    ));
    for rho in [rho0 / 8.0, rho0 / 4.0, rho0 / 2.0, rho0 * (1.0 - 1e-3)] {
        let t = t0 - beta * rho * rho;
        if t < start - 1e-12 {
            return Err(Error::QueryOutOfRange(format!(
                "time {t} for radius {rho} precedes the history"
            )));
        }
        let s = &history.snapshots[history.nearest_snapshot(t)];
        let ratio = length_in_ball(&s.curve, x0, rho) / rho;
        cert.check(-ratio, -bound);
        cert.note(format!(
            "rho = {rho:.6}: length ratio {ratio:.6} >= {bound:.6}"
        ));
    }
    Ok(cert)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniformDiameterReport {
    /// Largest `∫ₜ^{t+h} κ̄²` over the run.
    pub max_window_integral: f64,
    pub condition_holds: bool,
    /// Largest diameter up to the burn-in time `h/3`.
    pub burn_in_max: f64,
    /// Largest diameter after the burn-in.
    pub later_max: f64,
    /// `later_max ≤ burn_in_max + 10 L/N`; only meaningful when the condition holds.
    pub bounded: bool,
}

impl UniformDiameterReport {
    pub fn holds(&self) -> bool {
        self.condition_holds && self.bounded
    }
}

/// Windowed condition `∫ₜ^{t+h} κ̄² < C` and, when it holds, boundedness of
/// the diameter after the burn-in.
pub fn uniform_diameter_condition(
    series: &DiagnosticsSeries,
    h: f64,
    c: f64,
) -> UniformDiameterReport {
    assert!(h > 0.0, "window length must be positive");
    let rows = &series.rows;
    let t_last = rows.last().map_or(0.0, |r| r.t);
    let i2_at = |t: f64| -> f64 {
        let k = rows.partition_point(|r| r.t <= t);
        if k == 0 {
            return rows[0].i2;
        }
        if k == rows.len() {
            return rows[k - 1].i2;
        }
        let (a, b) = (&rows[k - 1], &rows[k]);
        a.i2 + (b.i2 - a.i2) * (t - a.t) / (b.t - a.t)
    };
    let max_window_integral = rows
        .iter()
        .map(|r| i2_at((r.t + h).min(t_last)) - r.i2)
        .fold(0.0, f64::max);
    let t_burn = rows.first().map_or(0.0, |r| r.t) + h / 3.0;
    let burn_in_max = rows
        .iter()
        .filter(|r| r.t <= t_burn)
        .map(|r| r.diam)
        .fold(0.0, f64::max);
    let later_max = rows
        .iter()
        .filter(|r| r.t > t_burn)
        .map(|r| r.diam)
        .fold(0.0, f64::max);
    let length = rows.first().map_or(0.0, |r| r.length);
    let condition_holds = max_window_integral < c;
    UniformDiameterReport {
        max_window_integral,
        condition_holds,
        burn_in_max,
        later_max,
        bounded: later_max <= burn_in_max + 10.0 * length / series.vertex_count as f64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioLimit {
    ToOne,
    ToZero,
}

#[derive(Clone, Debug)]
pub struct AsymptoticReport {
    pub limit: RatioLimit,
    pub tail_min: f64,
    pub tail_max: f64,
    /// `∫κ̄²` over the tail window.
    pub tail_i2: f64,
    /// Window bound when the ratio stays below `1 - eps`, otherwise `None`.
    pub less_than_bound: Option<f64>,
    /// Window bound when the ratio stays above `1 + eps`, otherwise `None`.
    pub more_than_bound: Option<f64>,
}

/// Classifies the last quarter of the `𝓘` column.
pub fn asymptotic_ratio_scan(
    series: &DiagnosticsSeries,
    eps: f64,
    v0: f64,
) -> Result<AsymptoticReport> {
    let rows = &series.rows;
    let start = rows.len() - rows.len().div_ceil(4);
    let tail = &rows[start..];
    let tail_min = tail
        .iter()
        .map(|r| r.iso_ratio)
        .fold(f64::INFINITY, f64::min);
    let tail_max = tail
        .iter()
        .map(|r| r.iso_ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let limit = if tail_min > 1.0 - eps && tail_max < 1.0 + eps {
        RatioLimit::ToOne
    } else if tail_min > -eps && tail_max < eps {
        RatioLimit::ToZero
    } else {
        return Err(Error::Inconclusive(format!(
            "tail ratio spans [{tail_min:.6}, {tail_max:.6}]"
        )));
    };

    let (first, last) = (&tail[0], &tail[tail.len() - 1]);
    let tail_i2 = last.i2 - first.i2;
    let dl2 = first.length * first.length - last.length * last.length;
    let r = tail.iter().map(|r| r.diam).fold(0.0, f64::max);
    let r0 = rows[0].diam;
    let scale = 1.0 / (8.0 * v0 * v0);
    let less_than_bound = (tail_max < 1.0 - eps).then(|| {
        let alpha = tail_max;
        (alpha * alpha / ((1.0 - alpha) * (1.0 - alpha))).max(1.0) * r0 * r0 * scale * dl2
    });
    let more_than_bound = (tail_min - 1.0 > eps).then(|| {
        let beta = tail_min - 1.0;
        r * r * (1.0 + 1.0 / beta).powi(2) * scale * dl2
    });
    Ok(AsymptoticReport {
        limit,
        tail_min,
        tail_max,
        tail_i2,
        less_than_bound,
        more_than_bound,
    })
}
