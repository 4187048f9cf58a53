//! Certificate batteries run on fixed preset configurations.

use std::cell::OnceCell;
use std::f64::consts::{E, PI};

use vpmcf_core::blowup::{
    classify_type, hbar_decay_check, psi_invariance_check, rescale, shrinker_residual,
    RescalingFrame, SingularityType,
};
use vpmcf_core::diagnostics::{
    clearing_out_certificate, clearing_out_theta, diameter_derivative_check, gaussian_density,
    l2_multiplier_bound_check, local_density, series, Certificate, DensityQuery,
};
use vpmcf_core::flow::{run, step};
use vpmcf_core::scenario::{capsule, circle, dumbbell, ellipse, perturb, Perturbation};
use vpmcf_core::trilobite::{
    assemble_balanced, closed_form_integrals, hbar_derivative_at_zero, quadrature_integrals,
    ProfileSegment,
};
use vpmcf_core::{
    build_cache, ClosedCurve, Error, FlowConfig, FlowError, FlowHistory, FlowMode, Point,
};

pub const SUITES: [&str; 8] = [
    "conservation",
    "diameter",
    "monotonicity",
    "density",
    "blowup",
    "trilobite",
    "example1",
    "all",
];

type Res<T> = Result<T, Error>;

/// Preset runs, computed on first use and shared between suites.
#[derive(Default)]
pub struct Presets {
    circle: OnceCell<FlowHistory>,
    ellipse: OnceCell<FlowHistory>,
    capsule: OnceCell<FlowHistory>,
    dumbbell: OnceCell<FlowHistory>,
    circle_long: OnceCell<FlowHistory>,
    shrinking: OnceCell<(FlowHistory, f64)>,
    perturbed: OnceCell<(FlowHistory, f64)>,
}

fn cached<'a, T>(cell: &'a OnceCell<T>, name: &str, f: impl FnOnce() -> Res<T>) -> Res<&'a T> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    eprintln!("running preset {name}");
    let v = f()?;
    Ok(cell.get_or_init(|| v))
}

fn completed(curve: Res<ClosedCurve>, cfg: FlowConfig) -> Res<FlowHistory> {
    match run(&curve?, &cfg) {
        Ok(h) => Ok(h),
        Err(FlowError::Numerical(e)) => Err(e),
        Err(FlowError::SingularityReached { t_estimate, .. }) => Err(Error::StepRejected(format!(
            "unexpected singularity at {t_estimate}"
        ))),
    }
}

/// Curve shortening to the singularity; the finer guard is needed for the last stage.
fn singular(curve: Res<ClosedCurve>) -> Res<(FlowHistory, f64)> {
    let mut cfg = FlowConfig::new(FlowMode::Mcf, 1e-5, 1.0, 256);
    cfg.cfl_guard = 0.025;
    match run(&curve?, &cfg) {
        Err(FlowError::SingularityReached {
            history,
            t_estimate,
        }) => Ok((*history, t_estimate)),
        Err(FlowError::Numerical(e)) => Err(e),
        Ok(_) => Err(Error::NoSingularity),
    }
}

impl Presets {
    fn circle(&self) -> Res<&FlowHistory> {
        cached(&self.circle, "circle", || {
            completed(
                Ok(circle(512, 1.0)),
                FlowConfig::new(FlowMode::Vpmcf, 1e-5, 1.0, 512),
            )
        })
    }

    fn ellipse(&self) -> Res<&FlowHistory> {
        cached(&self.ellipse, "ellipse", || {
            completed(
                ellipse(512, 2.0, 1.0),
                FlowConfig::new(FlowMode::Vpmcf, 1e-5, 1.0, 512),
            )
        })
    }

    fn capsule(&self) -> Res<&FlowHistory> {
        cached(&self.capsule, "capsule", || {
            let mut cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-4, 5.0, 512);
            cfg.resample_every = 20;
            completed(capsule(512, 0.1), cfg)
        })
    }

    fn dumbbell(&self) -> Res<&FlowHistory> {
        cached(&self.dumbbell, "dumbbell", || {
            let mut cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-5, 0.5, 512);
            cfg.resample_every = 20;
            completed(dumbbell(512, 0.5), cfg)
        })
    }

    fn circle_long(&self) -> Res<&FlowHistory> {
        cached(&self.circle_long, "circle to t = 10", || {
            completed(
                Ok(circle(256, 1.0)),
                FlowConfig::new(FlowMode::Vpmcf, 1e-3, 10.0, 256),
            )
        })
    }

    fn shrinking(&self) -> Res<&(FlowHistory, f64)> {
        cached(&self.shrinking, "shrinking circle", || {
            singular(Ok(circle(256, 1.0)))
        })
    }

    fn perturbed(&self) -> Res<&(FlowHistory, f64)> {
        cached(&self.perturbed, "perturbed shrinking circle", || {
            let p = Perturbation {
                amplitude: 0.05,
                modes: 4,
            };
            singular(perturb(&circle(256, 1.0), &p, 0))
        })
    }

    fn all(&self) -> Res<[(&'static str, &FlowHistory); 4]> {
        Ok([
            ("circle", self.circle()?),
            ("ellipse", self.ellipse()?),
            ("capsule", self.capsule()?),
            ("dumbbell", self.dumbbell()?),
        ])
    }
}

fn single(name: &str, value: f64, bound: f64, note: String) -> Certificate {
    let mut c = Certificate::new(name);
    c.check(value, bound);
    c.note(note);
    c
}

fn max_area_drift(h: &FlowHistory) -> f64 {
    let v0 = h.initial_area();
    h.snapshots
        .iter()
        .map(|s| ((s.cache.area - v0) / v0).abs())
        .fold(0.0, f64::max)
}

fn conservation(p: &Presets) -> Res<Vec<Certificate>> {
    let mut out = Vec::new();
    for (name, h) in [("ellipse", p.ellipse()?), ("circle", p.circle()?)] {
        let drift = max_area_drift(h);
        out.push(single(
            &format!("area_drift_{name}"),
            drift,
            1e-10,
            format!(
                "max |V - V0|/|V0| = {drift:.3e} over {} snapshots",
                h.snapshots.len()
            ),
        ));
        let l0 = h.steps[0].length;
        let mut c = Certificate::new(format!("length_monotone_{name}"));
        for w in h.steps.windows(2) {
            c.check(w[1].length - w[0].length, 1e-10 * l0);
        }
        let m0 = h.initial().cache.turning_number;
        for s in &h.snapshots {
            c.check((s.cache.turning_number - m0).abs() as f64, 0.0);
        }
        c.note(format!("{} steps, turning number {m0}", h.steps.len()));
        out.push(c);
    }
    let h = p.circle()?;
    let first = h.initial().curve.vertices();
    let moved = h
        .snapshots
        .iter()
        .flat_map(|s| {
            s.curve
                .vertices()
                .iter()
                .zip(first)
                .map(|(a, b)| (a - b).norm())
        })
        .fold(0.0, f64::max);
    out.push(single(
        "circle_stationary",
        moved,
        1e-8,
        format!("max vertex displacement {moved:.3e} over t in [0, 1]"),
    ));

    let (h, t_sing) = p.shrinking()?;
    let mut worst: f64 = 0.0;
    for s in h.snapshots.iter().filter(|s| s.time() <= 0.45) {
        let c = s.curve.centroid();
        let r = s
            .curve
            .vertices()
            .iter()
            .map(|v| (v - c).norm())
            .sum::<f64>()
            / s.curve.len() as f64;
        worst = worst.max((r - (1.0 - 2.0 * s.time()).sqrt()).abs());
    }
    let mut c = Certificate::new("shrinking_circle");
    c.check(worst, 1e-4);
    c.check((t_sing - 0.5).abs(), 0.01);
    c.note(format!(
        "radius error {worst:.3e} up to t = 0.45, T = {t_sing:.6}"
    ));
    out.push(c);
    Ok(out)
}

fn diameter(p: &Presets) -> Res<Vec<Certificate>> {
    let mut out = Vec::new();
    for (name, h) in p.all()? {
        let s = series(h);
        let v = diameter_derivative_check(&s);
        let mut c = single(
            &format!("diameter_{name}"),
            v.len() as f64,
            0.0,
            format!("{} violations over {} rows", v.len(), s.rows.len()),
        );
        if let Some(&k) = v.first() {
            c.note(format!("first violation at t = {}", s.rows[k].t));
        }
        out.push(c);
    }
    Ok(out)
}

fn monotonicity(p: &Presets) -> Res<Vec<Certificate>> {
    let mut out = Vec::new();
    for (name, h) in p.all()? {
        let s = series(h);
        let mut c = Certificate::new(format!("psi_monotone_{name}"));
        for w in s.rows.windows(2) {
            c.check(w[1].psi, w[0].psi);
            c.check(w[0].i2, w[1].i2);
        }
        c.note(format!("psi(t_end) = {:.6}", s.rows.last().unwrap().psi));
        out.push(c);
        let report = l2_multiplier_bound_check(&s, h.initial_area())?;
        for mut c in [report.envelope, report.growth] {
            c.name = format!("{}_{name}", c.name);
            out.push(c);
        }
    }

    // I2 = 10 against L²/(2V²)(R² + t) = 28 on the unit circle at t = 10.
    let s = series(p.circle_long()?);
    let (first, last) = (&s.rows[0], s.rows.last().unwrap());
    let bound = first.length.powi(2) / (2.0 * first.area.powi(2)) * (last.diam.powi(2) + last.t);
    let mut c = Certificate::new("l2_circle_closed_form");
    c.check((last.i2 - 10.0).abs(), 1e-3);
    c.check((bound - 28.0).abs(), 28.0 * 1e-3);
    c.check(last.i2, bound);
    c.note(format!("I2 = {:.6}, bound {bound:.6}", last.i2));
    out.push(c);

    let shrinking = &p.shrinking()?.0;
    let all = p
        .all()?
        .into_iter()
        .chain([("shrinking_circle", shrinking)]);
    for (name, h) in all {
        let t0 = h.last().time();
        let q = DensityQuery {
            center: h.last().curve.vertex(0),
            t0,
            rho: Some(1.0),
            times: (1..10).map(|k| t0 * k as f64 / 10.0).collect(),
        };
        let mut c = local_density(h, &q)?.pairs;
        c.name = format!("{}_{name}", c.name);
        out.push(c);
    }
    Ok(out)
}

fn density(p: &Presets) -> Res<Vec<Certificate>> {
    let mut out = Vec::new();
    let (h, t_sing) = p.shrinking()?;
    let target = (2.0 * PI / E).sqrt();
    let d = gaussian_density(h, &DensityQuery::geometric(Point::zeros(), *t_sing, 0.01))?;
    out.push(single(
        "shrinker_density",
        (d.limit - target).abs(),
        1e-3,
        format!("density {:.6} vs sqrt(2 pi / e) = {target:.6}", d.limit),
    ));

    let mut c = Certificate::new("reached_point_density");
    for (name, h) in p.all()? {
        let last = h.last();
        for vertex in [0, last.curve.len() / 3] {
            let q = DensityQuery::geometric(last.curve.vertex(vertex), last.time(), 0.01);
            let limit = gaussian_density(h, &q)?.limit;
            c.check(-limit, -0.99);
            c.note(format!("{name} vertex {vertex}: {limit:.6}"));
        }
    }
    out.push(c);

    let theta = clearing_out_theta(0.1);
    out.push(single(
        "clearing_out_theta",
        (theta - 0.2870).abs(),
        1e-4,
        format!("theta(1, 0.1) = {theta:.6}"),
    ));
    out.push(clearing_out_certificate(
        p.circle()?,
        Point::new(1.0, 0.0),
        1.0,
        0.3,
        0.04,
    )?);
    Ok(out)
}

fn blowup(p: &Presets) -> Res<Vec<Certificate>> {
    let mut out = Vec::new();
    let mut c = Certificate::new("psi_invariance");
    let shrinking = &p.shrinking()?.0;
    let all = p
        .all()?
        .into_iter()
        .chain([("shrinking circle", shrinking)]);
    for (name, h) in all {
        let frame = RescalingFrame::new(h.initial().curve.centroid(), 0.5 * h.last().time(), 3.0)?;
        let disc = psi_invariance_check(h, &frame)?;
        let bound = 1e-6 * (1.0 + h.i2_at(frame.time));
        c.check(disc, bound);
        c.note(format!("{name}: discrepancy {disc:.3e} <= {bound:.3e}"));
    }
    out.push(c);

    let (h, t_sing) = p.shrinking()?;
    let report = classify_type(h, *t_sing)?;
    let constant = match report.classification {
        SingularityType::TypeI(c) => c,
        SingularityType::TypeII => f64::INFINITY,
    };
    out.push(single(
        "type_one_constant",
        (constant - 0.5).abs(),
        0.025,
        format!("{:?}, T = {t_sing:.6}", report.classification),
    ));

    let (h, t_sing) = p.perturbed()?;
    let center = h.last().curve.centroid();
    let mut c = Certificate::new("shrinker_residual");
    let mut previous = f64::INFINITY;
    for k in 1..=10 {
        let s = &h.snapshots[h.nearest_snapshot(t_sing * (1.0 - 0.5f64.powi(k)))];
        let t_est = s.time() + s.cache.area / (2.0 * PI);
        let frame = RescalingFrame::new(center, t_est, 1.0 / (2.0 * (t_est - s.time())).sqrt())?;
        let rescaled = frame.map_curve(&s.curve);
        let r = shrinker_residual(&rescaled, rescaled.time)?;
        c.check(r, previous);
        c.note(format!("t = {:.6}: residual {r:.3e}", s.time()));
        previous = r;
    }
    c.check(previous, 1e-2);
    out.push(c);

    let frame = RescalingFrame::new(Point::zeros(), 0.9, 2.0)?;
    let violations = hbar_decay_check(&rescale(p.circle()?, &frame)?, 1e-6)?;
    out.push(single(
        "hbar_decay_circle",
        violations.len() as f64,
        0.0,
        format!(
            "{} violations on the rescaled stationary circle",
            violations.len()
        ),
    ));
    Ok(out)
}

fn trilobite() -> Res<Vec<Certificate>> {
    let mut out = Vec::new();
    let mut c = Certificate::new("closed_forms");
    let pieces = [
        ProfileSegment::arc(Point::zeros(), 1.0, 0.0, PI / 2.0)?,
        ProfileSegment::line(Point::new(1.0, -1.0), Point::new(1.0, -20.0))?,
    ];
    for seg in pieces {
        let q = quadrature_integrals(&seg)?;
        let f = closed_form_integrals(&seg)?;
        c.check((q.int_h - f.int_h).abs(), 1e-10);
        c.check((q.int_hk - f.int_hk).abs(), 1e-10);
    }
    let fillet = ProfileSegment::arc(Point::new(2.0, -1.0), 1.0, PI / 2.0, PI)?;
    let q = quadrature_integrals(&fillet)?;
    let (lo, hi) = closed_form_integrals(&fillet)?
        .int_hk_bounds
        .unwrap_or((f64::NAN, f64::NAN));
    c.check(lo, q.int_hk);
    c.check(q.int_hk, hi);
    c.note(format!(
        "fillet intHK {:.6} in [{lo:.6}, {hi:.6}]",
        q.int_hk
    ));
    out.push(c);

    let t = assemble_balanced(1.0, 7, 0.005)?;
    let derivative = hbar_derivative_at_zero(&t.surface)?;
    let mut c = Certificate::new("balanced_trilobite");
    c.check(t.totals.int_h.abs(), 1e-10 * t.totals.area);
    c.check(-t.totals.int_hk, 0.0);
    c.check(derivative, 0.0);
    c.note(format!(
        "l = {:.6}, intH = {:.3e}, intHK = {:.6}, dHbar/dt = {derivative:.6}",
        t.l, t.totals.int_h, t.totals.int_hk
    ));
    out.push(c);

    let a = assemble_balanced(1.0, 7, 1e-4)?.totals.int_hk;
    let b = assemble_balanced(1.0, 7, 5e-5)?.totals.int_hk;
    out.push(single(
        "cap_doubling",
        (b / a - 2.0).abs(),
        0.02,
        format!("intHK ratio {:.6} for r = 1e-4 -> 5e-5", b / a),
    ));
    Ok(out)
}

fn example1(p: &Presets) -> Res<Vec<Certificate>> {
    let mut out = Vec::new();
    let start = capsule(512, 0.1)?;
    let c0 = build_cache(&start)?;
    let probe = FlowConfig::new(FlowMode::Vpmcf, 1e-8, 1.0, 512);
    let (next, _) = step(&start, &probe)?;
    let slope = (build_cache(&next)?.diameter - c0.diameter) / probe.dt;
    let target = -4.0 * (1.0 - PI / 2.1);
    out.push(single(
        "capsule_diameter_slope",
        (slope - target).abs(),
        0.1 * target.abs(),
        format!("slope {slope:.6} vs -4(1 - pi/2.1) = {target:.6}"),
    ));

    let top = start.len() / 2;
    let tiny = FlowConfig::new(FlowMode::Vpmcf, 1e-9, 1.0, 512);
    let mut curve = start;
    let mut prev = (c0.curvature[0], c0.curvature[top]);
    let mut c = Certificate::new("capsule_tips_flatten");
    for _ in 0..100 {
        curve = step(&curve, &tiny)?.0;
        let cache = build_cache(&curve)?;
        let now = (cache.curvature[0], cache.curvature[top]);
        c.check(now.0, prev.0);
        c.check(now.1, prev.1);
        prev = now;
    }
    c.note(format!(
        "tip curvatures after 100 steps of 1e-9: {:.9}, {:.9}",
        prev.0, prev.1
    ));
    out.push(c);

    let last = *series(p.capsule()?).rows.last().unwrap();
    out.push(single(
        "capsule_rounds_out",
        (last.iso_ratio - 1.0).abs(),
        0.05,
        format!("iso ratio {:.6} at t = {}", last.iso_ratio, last.t),
    ));
    Ok(out)
}

/// Runs one named suite; `all` runs every suite in order.
pub fn run_suite(name: &str, presets: &Presets) -> Res<Vec<(String, Vec<Certificate>)>> {
    let one = |n: &str| -> Res<Vec<Certificate>> {
        match n {
            "conservation" => conservation(presets),
            "diameter" => diameter(presets),
            "monotonicity" => monotonicity(presets),
            "density" => density(presets),
            "blowup" => blowup(presets),
            "trilobite" => trilobite(),
            "example1" => example1(presets),
            _ => unreachable!("suite names are checked by the caller"),
        }
    };
    if name == "all" {
        SUITES[..SUITES.len() - 1]
            .iter()
            .map(|n| Ok((n.to_string(), one(n)?)))
            .collect()
    } else {
        Ok(vec![(name.to_string(), one(name)?)])
    }
}

pub fn format_report(results: &[(String, Vec<Certificate>)]) -> (String, bool) {
    let mut text = String::new();
    let mut pass = true;
    for (suite, certs) in results {
        text.push_str(&format!("# suite {suite}\n"));
        for c in certs {
            pass &= c.pass;
            text.push_str(&format!("{c}\n"));
        }
    }
    text.push_str(if pass {
        "RESULT PASS\n"
    } else {
        "RESULT FAIL\n"
    });
    (text, pass)
}
