use std::f64::consts::{PI, TAU};

use approx::assert_relative_eq;
use cyclic_pursuit::diagnostics::{
    angle_chart_comparison, conv_distance, convex_trap_check, fit_oracle, loop_metrics,
    sup_dist_to_image, theta_max_series, AnglePair, ConvergenceOptions, TrapRegion, Verdict,
};
use cyclic_pursuit::engine::{run, IntegratorConfig, PursuitLoop};
use cyclic_pursuit::spaces::{
    oracle_geodesics, Dumbbell, Euclidean, FlatQuotient, OracleSelector, SphereLike,
};
use cyclic_pursuit::{Manifold, ManifoldPoint};

fn circle_points(e: &Euclidean<f64>, n: usize, r: f64) -> Vec<ManifoldPoint<f64>> {
    (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            e.point(&[r * a.cos(), r * a.sin()]).unwrap()
        })
        .collect()
}

#[test]
fn regular_polygon_exterior_angles() {
    let e = Euclidean::new(2).unwrap();
    for n in 3..9 {
        let lp = PursuitLoop::through(&e, &circle_points(&e, n, 1.0)).unwrap();
        let m = loop_metrics(&e, &lp).unwrap();
        for a in &m.angles {
            assert_relative_eq!(*a, TAU / n as f64, epsilon = 1e-12);
        }
        assert_eq!(m.length, m.segment_lengths.iter().sum::<f64>());
    }
}

#[test]
fn sampled_geodesic_has_no_corners() {
    let s = SphereLike::sphere(1.0).unwrap();
    let pts: Vec<_> = (0..5)
        .map(|k| {
            let a = TAU * k as f64 / 5.0;
            s.point(&[a.cos(), a.sin(), 0.0]).unwrap()
        })
        .collect();
    let m = loop_metrics(&s, &PursuitLoop::through(&s, &pts).unwrap()).unwrap();
    assert!(m.theta_max < 1e-8, "{}", m.theta_max);
}

#[test]
fn rotated_oracle_is_matched() {
    let t = FlatQuotient::<f64>::unit_torus(2).unwrap();
    let oracle = oracle_geodesics(&t, &OracleSelector::TorusClass(vec![1, 0]))
        .unwrap()
        .with_curve(cyclic_pursuit::spaces::OracleCurve::FlatLine {
            origin: [0.0, 0.2].into_iter().collect(),
            velocity: [1.0, 0.0].into_iter().collect(),
        });
    let pts: Vec<_> = (0..6)
        .map(|k| oracle.eval(&t, 0.3 + k as f64 / 6.0).unwrap())
        .collect();
    let lp = PursuitLoop::through(&t, &pts).unwrap();
    let r = conv_distance(&t, &lp, &oracle, &ConvergenceOptions::default()).unwrap();
    assert!(r.conv_dist < 1e-6, "{}", r.conv_dist);
    assert!((r.best_c - 0.3).abs() < 1e-6, "{}", r.best_c);
    assert_eq!(r.verdict, Verdict::Converged);
}

#[test]
fn point_loop_distance_is_farthest_curve_point() {
    let s = SphereLike::sphere(1.0).unwrap();
    let oracle = oracle_geodesics(
        &s,
        &OracleSelector::GreatCircle {
            normal: [0.0, 0.0, 1.0],
        },
    )
    .unwrap();
    let p = s.point(&[1.0, 0.5, 0.4]).unwrap();
    let lp = PursuitLoop::through(&s, std::slice::from_ref(&p)).unwrap();
    let r = conv_distance(&s, &lp, &oracle, &ConvergenceOptions::default()).unwrap();
    let brute = (0..100_000)
        .map(|k| {
            s.dist(&p, &oracle.eval(&s, k as f64 / 100_000.0).unwrap())
                .unwrap()
        })
        .fold(0.0, f64::max);
    assert!(
        (r.conv_dist - brute).abs() < 1e-8,
        "{} vs {brute}",
        r.conv_dist
    );
}

#[test]
fn inscribed_square_sagitta() {
    let e = Euclidean::new(2).unwrap();
    let circle = oracle_geodesics(
        &e,
        &OracleSelector::Circle {
            center: vec![0.0, 0.0],
            radius: 1.0,
            e1: vec![1.0, 0.0],
            e2: vec![0.0, 1.0],
        },
    )
    .unwrap();
    let lp = PursuitLoop::through(&e, &circle_points(&e, 4, 1.0)).unwrap();
    let d = sup_dist_to_image(&e, &lp, &circle, 512).unwrap();
    assert_relative_eq!(d, 1.0 - 0.5 * 2f64.sqrt(), epsilon = 1e-12);
    let dense = (0..1024)
        .map(|k| {
            let p = lp.eval(&e, k as f64 / 1024.0).unwrap();
            (0..4096)
                .map(|j| {
                    e.dist(&p, &circle.eval(&e, j as f64 / 4096.0).unwrap())
                        .unwrap()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    assert!((d - dense).abs() < 1e-5);
}

#[test]
fn conv_distance_ignores_the_basepoint_label() {
    let t = FlatQuotient::<f64>::unit_torus(2).unwrap();
    let pts: Vec<_> = (0..7)
        .map(|k| {
            let s = k as f64 / 7.0;
            t.point(&[s + 0.01 * (3.0 * s).sin(), 0.4 + 0.03 * (TAU * s).cos()])
                .unwrap()
        })
        .collect();
    let selector = OracleSelector::TorusClass(vec![1, 0]);
    let lp = PursuitLoop::through(&t, &pts).unwrap();
    let oracle = fit_oracle(&t, &lp, &selector).unwrap();
    let opts = ConvergenceOptions::default();
    let base = conv_distance(&t, &lp, &oracle, &opts).unwrap();
    assert!(base.conv_dist >= base.sup_dist_to_image);
    for shift in 1..7 {
        let mut rotated = pts.clone();
        rotated.rotate_left(shift);
        let lp2 = PursuitLoop::through(&t, &rotated).unwrap();
        let r = conv_distance(&t, &lp2, &oracle, &opts).unwrap();
        assert!(
            (r.conv_dist - base.conv_dist).abs() < 1e-9,
            "{} {}",
            r.conv_dist,
            base.conv_dist
        );
        let expected_c = (base.best_c + lp.vertex_params()[shift]).fract();
        let dc = (r.best_c - expected_c).abs();
        assert!(dc.min(1.0 - dc) < 1e-4, "{} vs {expected_c}", r.best_c);
    }
}

#[test]
fn fitted_great_circle_follows_the_loop() {
    let s = SphereLike::sphere(2.0).unwrap();
    let tilt: f64 = 0.3;
    let pts: Vec<_> = (0..8)
        .rev()
        .map(|k| {
            let a = TAU * k as f64 / 8.0;
            s.point(&[a.cos(), a.sin() * tilt.cos(), a.sin() * tilt.sin()])
                .unwrap()
        })
        .collect();
    let lp = PursuitLoop::through(&s, &pts).unwrap();
    let oracle = fit_oracle(
        &s,
        &lp,
        &OracleSelector::GreatCircle {
            normal: [0.0, 0.0, 1.0],
        },
    )
    .unwrap();
    let r = conv_distance(&s, &lp, &oracle, &ConvergenceOptions::default()).unwrap();
    assert!(r.sup_dist_to_image < 1e-12);
    // An octagon's chord loop sits below the circle by the sagitta.
    let sagitta = 2.0 * (1.0 - (PI / 8.0).cos());
    assert!(r.conv_dist < 1.1 * sagitta + 1e-9, "{}", r.conv_dist);
}

#[test]
fn small_euclidean_ball_traps_the_bugs() {
    let e = Euclidean::new(2).unwrap();
    let pts: Vec<_> = [[0.1, 0.0], [0.0, 0.2], [-0.1, -0.1], [0.05, -0.2]]
        .iter()
        .map(|c| e.point(c).unwrap())
        .collect();
    let rec = run(
        &e,
        pts,
        &IntegratorConfig {
            t_max: 5.0,
            ..Default::default()
        },
    )
    .unwrap();
    let region = TrapRegion::Ball {
        center: e.point(&[0.0, 0.0]).unwrap(),
        radius: 0.25,
    };
    let rep = convex_trap_check(&e, &rec, &region).unwrap();
    assert_eq!(rep.entered_at, Some(0.0));
    assert!(rep.trapped());
}

#[test]
fn polygon_angle_stays_constant_until_capture() {
    let e = Euclidean::new(2).unwrap();
    let rec = run(
        &e,
        circle_points(&e, 6, 1.0),
        &IntegratorConfig {
            t_max: 10.0,
            ..Default::default()
        },
    )
    .unwrap();
    let series = theta_max_series(&rec);
    assert_eq!(series.len(), rec.samples.len());
    for ((t, th), s) in series.iter().zip(&rec.samples) {
        if !s.state.is_collapsed() {
            assert!((th - TAU / 6.0).abs() < 1e-9, "t = {t}: {th}");
        }
    }
    assert!((rec.collapse_time.unwrap() - 2.0).abs() < 1e-3);
}

fn pairs_at<M: Manifold<f64>>(space: &M, q: &ManifoldPoint<f64>, r: f64) -> Vec<AnglePair<f64>> {
    let frame = space.orthonormal_frame(q);
    [(0.0, 1.0), (0.3, 2.0), (1.0, 2.8)]
        .iter()
        .map(|&(a, b): &(f64, f64)| {
            let dir = |t: f64| -> Vec<f64> {
                (0..frame[0].len())
                    .map(|i| r * (t.cos() * frame[0][i] + t.sin() * frame[1][i]))
                    .collect()
            };
            AnglePair {
                u: space.tangent(q, &dir(a)).unwrap(),
                v: space.tangent(q, &dir(b)).unwrap(),
            }
        })
        .collect()
}

#[test]
fn chart_angles_are_exact_in_the_plane() {
    let e = Euclidean::new(2).unwrap();
    let p = e.point(&[0.0, 0.0]).unwrap();
    let q = e.point(&[0.02, 0.01]).unwrap();
    let d = angle_chart_comparison(&e, &p, 0.1, &pairs_at(&e, &q, 0.04)).unwrap();
    assert!(d < 1e-14);
}

#[test]
fn identical_geodesics_give_zero_angles() {
    let s = SphereLike::sphere(1.0).unwrap();
    let p = s.point(&[0.0, 0.0, 1.0]).unwrap();
    let q = s.point(&[0.03, 0.0, 1.0]).unwrap();
    let u = pairs_at(&s, &q, 0.02)[0].u.clone();
    let d = angle_chart_comparison(&s, &p, 0.1, &[AnglePair { u: u.clone(), v: u }]).unwrap();
    assert!(d < 1e-7, "{d}");
}

fn shrink_ratio<M: Manifold<f64>>(
    space: &M,
    p: &ManifoldPoint<f64>,
    q_of: impl Fn(f64) -> ManifoldPoint<f64>,
) -> f64 {
    let at = |r: f64| {
        let q = q_of(r);
        angle_chart_comparison(space, p, r, &pairs_at(space, &q, 0.4 * r)).unwrap()
    };
    at(0.1) / at(0.01)
}

#[test]
fn chart_angle_error_shrinks_with_the_radius() {
    let s = SphereLike::sphere(1.0).unwrap();
    let p = s.point(&[0.0, 0.0, 1.0]).unwrap();
    let ratio = shrink_ratio(&s, &p, |r| {
        let a: f64 = 0.5 * r;
        s.point(&[a.sin(), 0.0, a.cos()]).unwrap()
    });
    assert!(ratio >= 5.0, "{ratio}");

    let db = Dumbbell::<f64>::dumbbell();
    let p = db.point(&[0.3, 1.0]).unwrap();
    let ratio = shrink_ratio(&db, &p, |r| db.point(&[0.3 + 0.5 * r, 1.0]).unwrap());
    assert!(ratio >= 5.0, "{ratio}");
}
