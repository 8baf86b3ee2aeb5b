//! Independent checks against brute-force and pointwise computations.

use dsq_core::affine::build_conjugator;
use dsq_core::crossing::analyze;
use dsq_core::diffgeo::curvature;
use dsq_core::dsq::dsq_map_eval;
use dsq_core::search::{phi_eval, phi_jacobian};
use dsq_core::{builtin_curve, AnchorPair, Composition, Curve, CurveLoc, Tolerances, Vec2};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_loc(curve: &Curve, rng: &mut impl Rng) -> CurveLoc {
    let i = rng.random_range(0..curve.components().len());
    let (lo, hi) = curve.components()[i].working();
    CurveLoc::new(i, rng.random_range(lo..hi))
}

const CATALOG: [&str; 6] = ["line", "circle", "ellipse", "parabola_arc", "stadium", "flat_lobe"];

fn rel_close(fd: f64, exact: f64, tol: f64) -> bool {
    (fd - exact).abs() <= tol * (1.0 + exact.abs())
}

#[test]
fn curve_derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    for name in CATALOG {
        let c = builtin_curve(name, &[]).unwrap();
        for _ in 0..40 {
            let loc = random_loc(&c, &mut rng);
            let (lo, hi) = c.components()[loc.component].working();
            if loc.t - h < lo || loc.t + h > hi {
                continue;
            }
            let at = |t| CurveLoc::new(loc.component, t);
            let fd1 = 0.5 / h * (c.eval(at(loc.t + h)).unwrap() - c.eval(at(loc.t - h)).unwrap());
            let fd2 = 0.5 / h * (c.derivative(at(loc.t + h), 1).unwrap() - c.derivative(at(loc.t - h), 1).unwrap());
            let d1 = c.derivative(loc, 1).unwrap();
            let d2 = c.derivative(loc, 2).unwrap();
            assert!(
                rel_close(fd1.x, d1.x, 1e-6) && rel_close(fd1.y, d1.y, 1e-6),
                "{name} {loc:?}"
            );
            assert!(
                rel_close(fd2.x, d2.x, 1e-6) && rel_close(fd2.y, d2.y, 1e-6),
                "{name} {loc:?}"
            );
        }
    }
}

#[test]
fn circle_curvature_is_reciprocal_radius() {
    for r in [0.5, 1.0, 2.0] {
        let c = builtin_curve("circle", &[r]).unwrap();
        for k in 0..20 {
            let t = 0.3 * k as f64;
            let kappa = curvature(&c, CurveLoc::new(0, t)).unwrap();
            assert!((kappa - 1.0 / r).abs() < 1e-9, "r = {r}, t = {t}: {kappa}");
        }
    }
}

/// Affine map fitted by least squares to `H(D_p(x)) = D_p̃(x)` at six points.
fn pointwise_fit(p: &AnchorPair, pt: &AnchorPair) -> ([[f64; 2]; 2], Vec2) {
    let xs = [
        (0.3, -1.1),
        (1.7, 0.4),
        (-2.2, 2.5),
        (0.9, 3.1),
        (-1.4, -0.6),
        (2.8, -2.9),
    ];
    let rows: Vec<(Vec2, Vec2)> = xs
        .iter()
        .map(|&(a, b)| {
            let x = Vec2::new(a, b);
            (dsq_map_eval(p, x), dsq_map_eval(pt, x))
        })
        .collect();
    let a = DMatrix::from_fn(6, 3, |i, j| match j {
        0 => rows[i].0.x,
        1 => rows[i].0.y,
        _ => 1.0,
    });
    let svd = a.svd(true, true);
    let mut linear = [[0.0; 2]; 2];
    let mut offset = [0.0; 2];
    for (k, row) in linear.iter_mut().enumerate() {
        let b = DVector::from_fn(6, |i, _| if k == 0 { rows[i].1.x } else { rows[i].1.y });
        let sol = svd.solve(&b, 1e-14).unwrap();
        *row = [sol[0], sol[1]];
        offset[k] = sol[2];
    }
    (linear, Vec2::new(offset[0], offset[1]))
}

#[test]
fn conjugator_matches_pointwise_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let base = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let ang: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let dir = Vec2::new(ang.cos(), ang.sin());
        let mut s = || -> f64 { rng.random_range(-3.0..3.0) };
        let (a, b, c, d) = (s(), s(), s(), s());
        if (a - b).abs() < 0.1 || (c - d).abs() < 0.1 {
            continue;
        }
        let p = AnchorPair::new(base + a * dir, base + b * dir);
        let pt = AnchorPair::new(base + c * dir, base + d * dir);
        let h = build_conjugator(&p, &pt).unwrap();
        let (linear, offset) = pointwise_fit(&p, &pt);
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (linear[i][j] - h.linear[i][j]).abs() < 1e-8,
                    "{linear:?} vs {:?}",
                    h.linear
                );
            }
        }
        assert!((offset - h.offset).norm() < 1e-8, "{offset:?} vs {:?}", h.offset);
    }
}

#[test]
fn phi_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = 1e-6;
    for name in ["circle", "ellipse", "parabola_arc", "flat_lobe"] {
        let c = builtin_curve(name, &[]).unwrap();
        for _ in 0..50 {
            let t1 = random_loc(&c, &mut rng);
            let t2 = random_loc(&c, &mut rng);
            let ok = |l: CurveLoc| {
                let (lo, hi) = c.components()[l.component].working();
                l.t - h >= lo && l.t + h <= hi
            };
            if !ok(t1) || !ok(t2) {
                continue;
            }
            let (s1, s2) = (rng.random_range(-0.5..0.5), rng.random_range(0.5..1.5));
            let j = phi_jacobian(&c, t1, t2, s1, s2).unwrap();
            let shift = |l: CurveLoc, d: f64| CurveLoc::new(l.component, l.t + d);
            let cols: [([f64; 4], [f64; 4]); 4] = [
                (
                    phi_eval(&c, shift(t1, h), t2, s1, s2).unwrap(),
                    phi_eval(&c, shift(t1, -h), t2, s1, s2).unwrap(),
                ),
                (
                    phi_eval(&c, t1, shift(t2, h), s1, s2).unwrap(),
                    phi_eval(&c, t1, shift(t2, -h), s1, s2).unwrap(),
                ),
                (
                    phi_eval(&c, t1, t2, s1 + h, s2).unwrap(),
                    phi_eval(&c, t1, t2, s1 - h, s2).unwrap(),
                ),
                (
                    phi_eval(&c, t1, t2, s1, s2 + h).unwrap(),
                    phi_eval(&c, t1, t2, s1, s2 - h).unwrap(),
                ),
            ];
            for (col, (plus, minus)) in cols.iter().enumerate() {
                for row in 0..4 {
                    let fd = (plus[row] - minus[row]) / (2.0 * h);
                    assert!(rel_close(fd, j[row][col], 1e-6), "{name} ({row}, {col})");
                }
            }
        }
    }
}

/// Every brute-force near-coincidence of sampled parameters is explained by a
/// reported double point, a coincidence family, or a singular point nearby.
fn check_against_brute_force(curve: &Curve, pair: AnchorPair, tol: &Tolerances) {
    let report = analyze(&Composition::new(curve, pair), tol);
    let comp = Composition::new(curve, pair);
    let n = 1000;
    let samples: Vec<Vec<(f64, Vec2, f64)>> = curve
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (lo, hi) = c.working();
            (0..=n)
                .map(|k| {
                    let t = lo + (hi - lo) * k as f64 / n as f64;
                    let loc = CurveLoc::new(i, t);
                    (t, comp.eval(loc).unwrap(), comp.derivative(loc).unwrap().norm())
                })
                .collect()
        })
        .collect();
    let spacing: Vec<f64> = curve
        .components()
        .iter()
        .map(|c| {
            let (lo, hi) = c.working();
            (hi - lo) / n as f64
        })
        .collect();
    let near = |a: usize, ta: f64, b: usize, tb: f64| -> bool {
        // sampled near-coincidences run along a crossing for about h / sin(angle)
        let hit = |q1: CurveLoc, q2: CurveLoc, sine: f64| {
            let widen = 1.0 / sine.max(0.02);
            let (ra, rb) = (2.0 * spacing[a] * widen, 2.0 * spacing[b] * widen);
            (q1.component == a && q2.component == b && (q1.t - ta).abs() <= ra && (q2.t - tb).abs() <= rb)
                || (q1.component == b && q2.component == a && (q1.t - tb).abs() <= rb && (q2.t - ta).abs() <= ra)
        };
        report
            .double_points
            .iter()
            .any(|d| hit(d.q1, d.q2, d.span_det.abs() / (d.dq1.norm() * d.dq2.norm())))
            || report.families.iter().any(|f| {
                let inside = |x: usize, tx: f64, y: usize, ty: f64| {
                    f.component_a == x
                        && f.component_b == y
                        && tx >= f.t1_range[0] - 2.0 * spacing[x]
                        && tx <= f.t1_range[1] + 2.0 * spacing[x]
                        && ty >= f.t2_range[0] - 2.0 * spacing[y]
                        && ty <= f.t2_range[1] + 2.0 * spacing[y]
                };
                inside(a, ta, b, tb) || inside(b, tb, a, ta)
            })
            || report.singular_points.iter().any(|s| {
                let r = 0.05 * curve.components()[s.loc.component].domain.len();
                (s.loc.component == a && (s.loc.t - ta).abs() < r) || (s.loc.component == b && (s.loc.t - tb).abs() < r)
            })
    };
    for a in 0..samples.len() {
        for b in a..samples.len() {
            let radius = tol.cluster_radius_rel
                * curve.components()[a]
                    .domain
                    .len()
                    .max(curve.components()[b].domain.len());
            for &(ta, fa, da) in &samples[a] {
                for &(tb, fb, db) in &samples[b] {
                    if a == b && tb - ta <= 2.0 * radius + 2.0 * spacing[a] {
                        continue;
                    }
                    if (fa - fb).norm() >= 0.5 * (da * spacing[a] + db * spacing[b]) {
                        continue;
                    }
                    // seams and joints of closed chains coincide by construction
                    let joint = curve.junctions().iter().any(|j| {
                        let gap = |ea: f64, eb: f64| (ta - ea).abs() + (tb - eb).abs();
                        let reach = 2.0 * radius + 3.0 * spacing[a].max(spacing[b]);
                        (j.a == a && j.b == b && gap(j.a_end, j.b_end) <= reach)
                            || (j.a == b && j.b == a && gap(j.b_end, j.a_end) <= reach)
                    });
                    if joint {
                        continue;
                    }
                    assert!(
                        near(a, ta, b, tb),
                        "unexplained near-coincidence ({a}, {ta}) ~ ({b}, {tb}) for {pair:?}: {report:#?}"
                    );
                }
            }
        }
    }
}

#[test]
fn double_points_agree_with_brute_force() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let fixed = [
        ("parabola_arc", Vec2::new(0.0, 3.0), Vec2::new(1.0, -2.0)),
        ("ellipse", Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)),
        ("circle", Vec2::new(0.2, 0.1), Vec2::new(0.5, -0.3)),
    ];
    for (name, p1, p2) in fixed {
        let c = builtin_curve(name, &[]).unwrap();
        check_against_brute_force(&c, AnchorPair::new(p1, p2), &tol);
    }
    for name in ["parabola_arc", "ellipse", "flat_lobe"] {
        let c = builtin_curve(name, &[]).unwrap();
        for _ in 0..3 {
            let mut v = || Vec2::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            check_against_brute_force(&c, AnchorPair::new(v(), v()), &tol);
        }
    }
}

#[test]
fn parabola_crossing_is_where_brute_force_says() {
    // F(t) = F(u) with t != u reduces to two polynomial equations; a dense
    // scan of |F(t) - F(u)| locates the crossing independently.
    let c = builtin_curve("parabola_arc", &[]).unwrap();
    let pair = AnchorPair::new(Vec2::new(0.0, 3.0), Vec2::new(1.0, -2.0));
    let comp = Composition::new(&c, pair);
    let r = analyze(&comp, &Tolerances::default());
    assert_eq!(r.double_points.len(), 1);
    let d = r.double_points[0];
    let f = |t: f64| comp.eval(CurveLoc::new(0, t)).unwrap();
    let mut best = (f64::INFINITY, 0.0, 0.0);
    let n = 4000;
    for i in 0..=n {
        let t = -3.9 + 7.8 * i as f64 / n as f64;
        for j in i + 40..=n {
            let u = -3.9 + 7.8 * j as f64 / n as f64;
            let g = (f(t) - f(u)).norm();
            if g < best.0 {
                best = (g, t, u);
            }
        }
    }
    assert!(
        (best.1 - d.q1.t).abs() < 5e-3 && (best.2 - d.q2.t).abs() < 5e-3,
        "{best:?} vs {d:?}"
    );
    assert!(d.residual < 1e-9);
}
