use std::f64::consts::PI;

use proptest::prelude::*;

use vpmcf_core::blowup::{rescale, RescalingFrame};
use vpmcf_core::diagnostics::{iso_ratio, series};
use vpmcf_core::flow::run;
use vpmcf_core::geometry::diameter;
use vpmcf_core::scenario::{circle, ellipse, perturb, Perturbation};
use vpmcf_core::trilobite::{assemble_balanced, build_surface, hbar_derivative_at_zero};
use vpmcf_core::{build_cache, ClosedCurve, FlowConfig, FlowMode, Point};

/// Star-shaped polygon `r(φ) = 1 + Σ aₖ cos(kφ + bₖ)` with small coefficients.
fn star(n: usize, coeffs: &[(f64, f64)]) -> ClosedCurve {
    let v = (0..n)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / n as f64;
            let r = 1.0
                + coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, (a, b))| a * ((k + 2) as f64 * phi + b).cos())
                    .sum::<f64>();
            Point::new(r * phi.cos(), r * phi.sin())
        })
        .collect();
    ClosedCurve::new(v, 0.0).unwrap()
}

fn star_strategy() -> impl Strategy<Value = ClosedCurve> {
    (
        32usize..200,
        prop::collection::vec((-0.08f64..0.08, 0.0f64..6.3), 0..4),
    )
        .prop_map(|(n, c)| star(n, &c))
}

fn point() -> impl Strategy<Value = Point> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(x, y)| Point::new(x, y))
}

fn brute_diameter(points: &[Point]) -> f64 {
    let mut best: f64 = 0.0;
    for p in points {
        for q in points {
            best = best.max((p - q).norm());
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iso_ratio_is_scale_invariant(curve in star_strategy(), scale in 0.01f64..100.0) {
        let a = iso_ratio(&build_cache(&curve).unwrap());
        let b = iso_ratio(&build_cache(&curve.scaled_about(Point::zeros(), scale)).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn area_equals_edge_normal_moment(curve in star_strategy(), shift in point()) {
        // ½ Σ |e| ⟨midpoint, outward edge normal⟩.
        let curve = curve.translated(shift);
        let v = curve.vertices();
        let n = v.len();
        let moment: f64 = (0..n)
            .map(|i| {
                let (p, q) = (v[i], v[(i + 1) % n]);
                let e = q - p;
                let outward = Point::new(e.y, -e.x);
                0.5 * (p + q).dot(&outward)
            })
            .sum::<f64>()
            * 0.5;
        let area = build_cache(&curve).unwrap().area;
        prop_assert!((area - moment).abs() <= 1e-12 * (1.0 + area.abs()));
    }

    #[test]
    fn diameter_matches_brute_force(points in prop::collection::vec(point(), 2..80)) {
        let (d, (i, j)) = diameter(&points);
        prop_assert!((d - brute_diameter(&points)).abs() <= 1e-15 * (1.0 + d));
        prop_assert!(((points[i] - points[j]).norm() - d).abs() <= 1e-15 * (1.0 + d));
    }

    #[test]
    fn frames_compose(
        p in point(),
        t in -1.0f64..1.0,
        l1 in 0.1f64..10.0,
        l2 in 0.1f64..10.0,
        curve in star_strategy(),
    ) {
        let first = RescalingFrame::new(p, t, l1).unwrap();
        let second = RescalingFrame::new(Point::zeros(), 0.0, l2).unwrap();
        let combined = RescalingFrame::new(p, t, l1 * l2).unwrap();
        let twice = second.map_curve(&first.map_curve(&curve));
        let once = combined.map_curve(&curve);
        let composed = first.compose(&second).map_curve(&curve);
        for ((a, b), c) in twice.vertices().iter().zip(once.vertices()).zip(composed.vertices()) {
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
            prop_assert!((a - c).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn rescaled_cache_scales_analytically(
        curve in star_strategy(),
        p in point(),
        lambda in 0.05f64..20.0,
    ) {
        let original = build_cache(&curve).unwrap();
        let scaled = build_cache(&RescalingFrame::new(p, 0.0, lambda).unwrap().map_curve(&curve))
            .unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        prop_assert!(rel(scaled.length, lambda * original.length) <= 1e-10);
        prop_assert!(rel(scaled.area, lambda * lambda * original.area) <= 1e-10);
        prop_assert!(rel(scaled.kappa_bar, original.kappa_bar / lambda) <= 1e-10);
        let kmax = original.max_abs_curvature() / lambda;
        for (a, b) in scaled.curvature.iter().zip(&original.curvature) {
            prop_assert!((a - b / lambda).abs() <= 1e-10 * kmax);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn constrained_runs_conserve_area_and_shorten(
        amplitude in 0.0f64..0.2,
        modes in 2usize..6,
        seed in any::<u64>(),
        analytic in any::<bool>(),
    ) {
        let base = circle(128, 1.0);
        let p = Perturbation { amplitude, modes };
        let start = perturb(&base, &p, seed).unwrap();
        let mut cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-4, 0.05, 128);
        cfg.snapshot_every = 25;
        if analytic {
            cfg.multiplier = vpmcf_core::Multiplier::Analytic;
        }
        let h = run(&start, &cfg).unwrap();
        let l0 = h.steps[0].length;
        for w in h.steps.windows(2) {
            prop_assert!(w[1].length <= w[0].length + 1e-10 * l0);
        }
        let m0 = h.initial().cache.turning_number;
        prop_assert_eq!(m0, 1);
        for s in &h.snapshots {
            prop_assert_eq!(s.cache.turning_number, m0);
        }
        if !analytic {
            let v0 = h.initial_area();
            for s in &h.snapshots {
                prop_assert!(((s.cache.area - v0) / v0).abs() <= 1e-10);
            }
        }
        let rows = series(&h).rows;
        prop_assert_eq!(rows[0].psi, 1.0);
        for w in rows.windows(2) {
            prop_assert!(w[1].psi <= w[0].psi && w[1].psi > 0.0);
            prop_assert!(w[1].i2 >= w[0].i2);
        }
    }

    #[test]
    fn rescaling_a_run_scales_every_record(lambda in 0.2f64..5.0, t in 0.0f64..0.02) {
        let start = ellipse(64, 1.5, 1.0).unwrap();
        let mut cfg = FlowConfig::new(FlowMode::Vpmcf, 1e-4, 0.02, 64);
        cfg.snapshot_every = 20;
        let h = run(&start, &cfg).unwrap();
        let frame = RescalingFrame::new(Point::new(0.1, -0.2), t, lambda).unwrap();
        let r = rescale(&h, &frame).unwrap();
        for (a, b) in h.steps.iter().zip(&r.steps) {
            prop_assert!((b.t - lambda * lambda * (a.t - t)).abs() <= 1e-12);
            prop_assert!((b.hbar * lambda - a.hbar).abs() <= 1e-12 * a.hbar.abs());
        }
        for (a, b) in h.snapshots.iter().zip(&r.snapshots) {
            prop_assert!((b.cache.kappa_bar * lambda - a.cache.kappa_bar).abs() <= 1e-10 * a.cache.kappa_bar);
        }
    }

    #[test]
    fn total_mean_curvature_is_affine_in_cylinder_length(
        n in 4usize..12,
        rho in 0.5f64..2.0,
        r_frac in 0.001f64..0.09,
    ) {
        let r = r_frac * rho;
        let total = |l: f64| build_surface(rho, n, r, l).unwrap().totals().unwrap().int_h;
        // Rim arc 6πl, cone 3πl, n cylinder walls -2πl each.
        let slope = 2.0 * PI * (4.5 - n as f64);
        let (a, b, c) = (5.0 * rho, 10.0 * rho, 20.0 * rho);
        let (fa, fb, fc) = (total(a), total(b), total(c));
        let fit = (fc - fa) / (c - a);
        prop_assert!((fit - slope).abs() <= 1e-6 * slope.abs());
        let mid = fa + fit * (b - a);
        prop_assert!((mid - fb).abs() <= 1e-6 * fb.abs().max(fit.abs() * b));
    }

    #[test]
    fn hbar_derivative_ignores_vertical_translation(shift in -50.0f64..50.0, r in 0.002f64..0.05) {
        let t = assemble_balanced(1.0, 7, r).unwrap();
        let d0 = hbar_derivative_at_zero(&t.surface).unwrap();
        let d1 = hbar_derivative_at_zero(&t.surface.translated(Point::new(0.0, shift))).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-9 * d0.abs());
    }
}
