use vpmcf_core::flow::{curvature_evolution_residual, run, step};
use vpmcf_core::scenario::{circle, ellipse};
use vpmcf_core::{
    build_cache, ClosedCurve, Error, FlowConfig, FlowError, FlowMode, Multiplier, Point,
};

fn max_displacement(a: &ClosedCurve, b: &ClosedCurve) -> f64 {
    a.vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
}

#[test]
fn circle_is_stationary_for_any_step() {
    let c = circle(256, 1.0);
    for dt in [1e-6, 1e-4, 1e-2] {
        for m in [Multiplier::Analytic, Multiplier::Constrained] {
            let mut cfg = FlowConfig::new(FlowMode::Vpmcf, dt, 1.0, 256);
            cfg.multiplier = m;
            cfg.cfl_guard = 1e-3;
            let (next, _) = step(&c, &cfg).unwrap();
            assert!(max_displacement(&c, &next) <= 1e-8, "dt {dt} {m:?}");
        }
    }
}

#[test]
fn curve_shortening_circle_follows_the_ode() {
    let mut cfg = FlowConfig::new(FlowMode::Mcf, 1e-5, 0.4, 256);
    cfg.snapshot_every = 1000;
    let h = run(&circle(256, 1.0), &cfg).unwrap();
    for s in &h.snapshots {
        let c = s.curve.centroid();
        let mean_r = s
            .curve
            .vertices()
            .iter()
            .map(|p| (p - c).norm())
            .sum::<f64>()
            / 256.0;
        assert!(
            (mean_r - (1.0 - 2.0 * s.time()).sqrt()).abs() <= 1e-4,
            "t = {}",
            s.time()
        );
    }
    assert!(h.steps.iter().all(|r| r.multiplier == 0.0 && r.hbar == 0.0));
}

#[test]
fn ellipse_conserves_area_and_shortens() {
    let start = ellipse(256, 2.0, 1.0).unwrap();
    let cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-4, 0.2, 256);
    let h = run(&start, &cfg).unwrap();
    let v0 = h.initial_area();
    for r in &h.steps {
        assert!(((r.area - v0) / v0).abs() <= 1e-10);
    }
    for w in h.steps.windows(2) {
        assert!(w[1].length < w[0].length);
    }
}

#[test]
fn analytic_multiplier_drifts_slowly() {
    let start = ellipse(256, 2.0, 1.0).unwrap();
    let mut cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-4, 0.1, 256);
    cfg.multiplier = Multiplier::Analytic;
    let h = run(&start, &cfg).unwrap();
    let v0 = h.initial_area();
    let drift = ((h.last().cache.area - v0) / v0).abs();
    assert!(drift > 0.0 && drift < 1e-3, "{drift}");
}

#[test]
fn constrained_multiplier_converges_to_average_curvature() {
    // Under parabolic refinement (dt ∝ h²) the spatial defect of the discrete
    // multiplier scales like dt as well, so |λ - κ̄|/dt settles.
    let levels = [(128usize, 1.6e-4), (256, 4e-5), (512, 1e-5), (1024, 2.5e-6)];
    let ratios: Vec<f64> = levels
        .iter()
        .map(|&(n, dt)| {
            let c = ellipse(n, 2.0, 1.0).unwrap();
            let kbar = build_cache(&c).unwrap().kappa_bar;
            let (_, lambda) = step(&c, &FlowConfig::new(FlowMode::Vpmcf, dt, 1.0, n)).unwrap();
            (lambda - kbar).abs() / dt
        })
        .collect();
    let coarse = ratios[0];
    for r in &ratios[1..] {
        assert!(*r <= 1.05 * coarse, "{ratios:?}");
    }
}

#[test]
fn curvature_residual_is_small_and_first_order_in_time() {
    let residual = |dt: f64| {
        let c = ellipse(512, 2.0, 1.0).unwrap();
        let mut cfg = FlowConfig::new(FlowMode::Vpmcf, dt, 3.0 * dt, 512);
        cfg.snapshot_every = 1;
        let h = run(&c, &cfg).unwrap();
        let kmax = h.snapshots[1].cache.max_abs_curvature();
        (curvature_evolution_residual(&h, 1).unwrap(), kmax)
    };
    let (r1, kmax) = residual(1e-5);
    let (r2, _) = residual(5e-6);
    assert!(r1 <= 0.05 * kmax.powi(3), "{r1} vs {}", kmax.powi(3));
    assert!(r1 / r2 >= 1.7, "ratio {}", r1 / r2);
}

#[test]
fn residual_on_stationary_circle_vanishes() {
    let mut cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-4, 5e-4, 128);
    cfg.snapshot_every = 1;
    let h = run(&circle(128, 1.0), &cfg).unwrap();
    for k in 1..h.snapshots.len() - 1 {
        assert!(curvature_evolution_residual(&h, k).unwrap() <= 1e-8);
    }
}

#[test]
fn resampling_breaks_material_windows() {
    let mut cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-4, 1e-3, 128);
    cfg.snapshot_every = 1;
    cfg.resample_every = 3;
    let h = run(&ellipse(128, 1.5, 1.0).unwrap(), &cfg).unwrap();
    let v0 = h.initial_area();
    assert!(h.steps.iter().filter(|r| r.resampled).count() >= 2);
    assert!(h.steps.iter().all(|r| ((r.area - v0) / v0).abs() <= 1e-10));
    assert!(matches!(
        curvature_evolution_residual(&h, 3),
        Err(Error::ResampledWindow(3))
    ));
    assert!(curvature_evolution_residual(&h, 1).is_ok());
}

#[test]
fn shrinking_circle_reports_its_extinction_time() {
    let mut cfg = FlowConfig::new(FlowMode::Mcf, 1e-4, 1.0, 64);
    cfg.cfl_guard = 0.01;
    match run(&circle(64, 0.5), &cfg) {
        Err(FlowError::SingularityReached {
            history,
            t_estimate,
        }) => {
            assert!((t_estimate - 0.125).abs() < 0.01, "{t_estimate}");
            assert_eq!(history.singular_time, Some(t_estimate));
        }
        other => panic!("unexpected outcome {:?}", other.map(|h| h.last().time())),
    }
}

#[test]
fn step_size_underflow_is_reported() {
    // The default guard cannot follow the last stage of the collapse.
    let cfg = FlowConfig::new(FlowMode::Mcf, 1e-4, 1.0, 64);
    match run(&circle(64, 0.5), &cfg) {
        Err(FlowError::Numerical(Error::NoProgress { t, dt })) => {
            assert!(dt < 1e-14);
            assert!((t - 0.125).abs() < 0.01);
        }
        Err(FlowError::SingularityReached { .. }) => {}
        other => panic!("unexpected outcome {:?}", other.map(|h| h.last().time())),
    }
}

#[test]
fn invalid_configs_and_curves_are_rejected() {
    let c = circle(64, 1.0);
    let bad = FlowConfig::new(FlowMode::Vpmcf, -1.0, 1.0, 64);
    assert!(matches!(
        run(&c, &bad),
        Err(FlowError::Numerical(Error::BadParameters(_)))
    ));
    let few = FlowConfig::new(FlowMode::Vpmcf, 1e-3, 1.0, 8);
    assert!(matches!(
        run(&c, &few),
        Err(FlowError::Numerical(Error::TooFewVertices(8)))
    ));
    let mut v = c.vertices().to_vec();
    v[5] = v[4];
    assert!(matches!(
        ClosedCurve::new(v, 0.0),
        Err(Error::DegenerateEdge(4))
    ));
    let flat: Vec<Point> = (0..32)
        .map(|k| Point::new(k as f64, 0.0))
        .chain((0..32).rev().map(|k| Point::new(k as f64 + 0.5, 0.0)))
        .collect();
    let flat = ClosedCurve::new(flat, 0.0).unwrap();
    let cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-3, 1.0, 64);
    assert!(run(&flat, &cfg).is_err());
}

#[test]
fn runs_are_deterministic() {
    let c = ellipse(128, 1.5, 1.0).unwrap();
    let cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-4, 0.01, 128);
    let a = run(&c, &cfg).unwrap();
    let b = run(&c, &cfg).unwrap();
    assert_eq!(a.steps, b.steps);
    assert_eq!(a.last().curve, b.last().curve);
}
