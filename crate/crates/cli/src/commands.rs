//! Analysis commands on stored run directories, and the trilobite report.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use vpmcf_core::blowup::{
    classify_type, hbar_decay_check, psi_invariance_check, rescale, shrinker_residual,
    RescalingFrame,
};
use vpmcf_core::diagnostics::{gaussian_density, local_density, Certificate, DensityQuery};
use vpmcf_core::io::{load_history, read_snapshot, write_snapshots};
use vpmcf_core::trilobite::{assemble_balanced, assemble_trilobite, hbar_derivative_at_zero};
use vpmcf_core::{Error, FlowConfig, FlowHistory, FlowMode, Point};

use crate::config::RunSummary;
use crate::Failure;

/// Loads a run directory; the flow settings and singular time come from `run.json` when present.
pub fn load_run(dir: &Path) -> Result<FlowHistory, Failure> {
    let summary = RunSummary::read(dir)?;
    let config = match &summary {
        Some(s) => s.flow.clone(),
        None => {
            let n = read_snapshot(&dir.join("snap_0.csv"))?.len();
            FlowConfig::new(FlowMode::Vpmcf, 1e-5, 1.0, n)
        }
    };
    let mut history = load_history(dir, config)?;
    history.singular_time = summary.and_then(|s| s.singular_time);
    Ok(history)
}

pub enum BlowupFrame {
    Explicit {
        center: Point,
        time: f64,
        lambda: f64,
    },
    /// About the last centroid at the recorded singular time, normalized so
    /// that the snapshot nearest `T - 2⁻¹⁰(T - t₀)` sits at `τ = -1/2`.
    Auto,
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::from(Error::Io(e))
}

/// Writes the rescaled snapshots and `blowup_report.txt` into `out`.
/// Returns whether the ψ invariance certificate passed.
pub fn blowup(history_dir: &Path, frame: BlowupFrame, out: &Path) -> Result<bool, Failure> {
    let h = load_run(history_dir)?;
    let frame = match frame {
        BlowupFrame::Explicit {
            center,
            time,
            lambda,
        } => RescalingFrame::new(center, time, lambda)?,
        BlowupFrame::Auto => {
            let t_sing = h.singular_time.ok_or(Error::NoSingularity)?;
            let t0 = h.initial().time();
            let reference = &h.snapshots[h.nearest_snapshot(t_sing - (t_sing - t0) / 1024.0)];
            let lambda = 1.0 / (2.0 * (t_sing - reference.time())).sqrt();
            RescalingFrame::new(h.last().curve.centroid(), t_sing, lambda)?
        }
    };
    let rescaled = rescale(&h, &frame)?;
    fs::create_dir_all(out).map_err(io_err)?;
    write_snapshots(out, &rescaled)?;

    let mut report = String::new();
    let _ = writeln!(
        report,
        "frame: center = ({}, {}), T = {}, lambda = {}",
        frame.center.x, frame.center.y, frame.time, frame.lambda
    );
    let _ = writeln!(report, "snapshots: {}", rescaled.snapshots.len());

    let disc = psi_invariance_check(&h, &frame)?;
    let mut psi = Certificate::new("psi_invariance");
    let bound = 1e-6 * (1.0 + h.i2_at(frame.time));
    psi.check(disc, bound);
    psi.note(format!("discrepancy {disc:.3e} <= {bound:.3e}"));
    let _ = writeln!(report, "\n[psi invariance]\n{psi}");

    let _ = writeln!(report, "\n[shrinker residual]\ntau,residual");
    for s in rescaled.snapshots.iter().filter(|s| s.time() < 0.0) {
        let r = shrinker_residual(&s.curve, s.time())?;
        let _ = writeln!(report, "{},{r:e}", s.time());
    }

    let _ = writeln!(report, "\n[multiplier decay]");
    match hbar_decay_check(&rescaled, 1e-6) {
        Ok(v) if v.is_empty() => {
            let _ = writeln!(report, "no violations");
        }
        Ok(v) => {
            let _ = writeln!(report, "violations at snapshots {v:?}");
        }
        Err(e) => {
            let _ = writeln!(report, "not checked: {e}");
        }
    }

    if let Some(t_sing) = h.singular_time {
        let t = classify_type(&h, t_sing)?;
        let _ = writeln!(
            report,
            "\n[classification]\nT = {t_sing}\nclassification: {:?}\nsup max|kappa|^2 (T - t) = {}",
            t.classification, t.sup_constant
        );
        let _ = writeln!(report, "\n[hamilton sequence]\ni,t,x,y,lambda,value");
        for p in &t.hamilton {
            let _ = writeln!(
                report,
                "{},{},{},{},{},{}",
                p.i, p.t, p.x.x, p.x.y, p.lambda, p.value
            );
        }
        // Each snapshot blown up about its own extinction estimate t + A/2π.
        let _ = writeln!(report, "\n[per-snapshot shrinker residual]\nt,residual");
        let center = h.last().curve.centroid();
        for s in h
            .snapshots
            .iter()
            .filter(|s| s.time() < t_sing && s.cache.area > 0.0)
        {
            let t_est = s.time() + s.cache.area / (2.0 * PI);
            let f = RescalingFrame::new(center, t_est, 1.0 / (2.0 * (t_est - s.time())).sqrt())?;
            let c = f.map_curve(&s.curve);
            let _ = writeln!(report, "{},{:e}", s.time(), shrinker_residual(&c, c.time)?);
        }
    } else {
        let _ = writeln!(report, "\n[classification]\nno singularity recorded");
    }
    fs::write(out.join("blowup_report.txt"), report).map_err(io_err)?;
    println!("{}", psi.cert_line());
    Ok(psi.pass)
}

/// Prints the Gaussian density at `(point, time)` evaluated at `time - 2ᵏδ`,
/// `k = 5, ..., 0`; with a radius, also the localized density and its almost
/// monotonicity certificate. `δ` defaults to 1/64 of the time since the start.
pub fn density(
    history_dir: &Path,
    point: Point,
    time: f64,
    rho: Option<f64>,
    delta: Option<f64>,
) -> Result<bool, Failure> {
    let h = load_run(history_dir)?;
    let start = h.initial().time();
    let delta = delta.unwrap_or((time - start) / 64.0);
    if !(delta > 0.0) {
        return Err(Failure::Usage(format!("delta = {delta} must be positive")));
    }
    let times: Vec<f64> = (0..=5)
        .rev()
        .map(|k| time - delta * f64::from(1 << k))
        .filter(|&t| t >= start)
        .collect();
    let query = DensityQuery {
        center: point,
        t0: time,
        rho: None,
        times,
    };
    let d = gaussian_density(&h, &query)?;
    println!("t,density");
    for (t, v) in d.times.iter().zip(&d.values) {
        println!("{t},{v}");
    }
    println!("limit,{}", d.limit);
    let Some(rho) = rho else {
        return Ok(true);
    };
    let local = local_density(
        &h,
        &DensityQuery {
            rho: Some(rho),
            ..query
        },
    )?;
    println!("t,local_density,psi");
    for ((t, v), p) in local
        .density
        .times
        .iter()
        .zip(&local.density.values)
        .zip(&local.psi)
    {
        println!("{t},{v},{p}");
    }
    println!("{}", local.pairs);
    Ok(local.pairs.pass)
}

/// Writes `trilobite_report.csv`; passes when the surface is balanced with
/// positive `∫HK` and a negative derivative of the average mean curvature.
pub fn trilobite(
    rho: f64,
    n: usize,
    r: f64,
    tabulated: bool,
    out: &Path,
) -> Result<(bool, PathBuf), Failure> {
    let t = if tabulated {
        assemble_trilobite(rho, n, r)?
    } else {
        assemble_balanced(rho, n, r)?
    };
    fs::create_dir_all(out).map_err(io_err)?;
    let path = out.join("trilobite_report.csv");
    fs::write(&path, t.report_csv()?).map_err(io_err)?;

    let mut c = Certificate::new("trilobite");
    c.check(t.totals.int_h.abs(), 1e-10 * t.totals.area);
    c.check(-t.totals.int_hk, 0.0);
    match hbar_derivative_at_zero(&t.surface) {
        Ok(d) => {
            c.check(d, 0.0);
            c.note(format!("dHbar/dt at 0 = {d}"));
        }
        Err(e) => c.note(format!("dHbar/dt at 0 not defined: {e}")),
    }
    c.note(format!(
        "l = {}, intH = {:e}, intHK = {}, area = {}",
        t.l, t.totals.int_h, t.totals.int_hk, t.totals.area
    ));
    println!("{c}");
    Ok((c.pass, path))
}
