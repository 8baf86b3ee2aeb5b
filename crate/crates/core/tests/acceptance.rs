//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::time::{Duration, Instant};

use dsq_core::affine::{build_conjugator, verify_conjugation};
use dsq_core::crossing::FailureReason;
use dsq_core::density::{density_scan, example2_case, remark_line_case, LINE_SINGULAR_TOL};
use dsq_core::diffgeo::curvature;
use dsq_core::dsq::dsq_map_eval;
use dsq_core::search::{
    find_generic_anchors, find_nondegenerate_pair, phi_eval, phi_jacobian, varphi_dets, ParamArc, SearchError,
    SearchStage,
};
use dsq_core::{builtin_curve, AnchorPair, Composition, Curve, CurveLoc, Tolerances, Vec2};
use nalgebra::{DMatrix, DVector, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("runtime {:.2}s exceeds {limit_s}s", elapsed.as_secs_f64())
    })
}

fn random_loc(curve: &Curve, rng: &mut impl Rng) -> CurveLoc {
    let i = rng.random_range(0..curve.components().len());
    let (lo, hi) = curve.components()[i].working();
    CurveLoc::new(i, rng.random_range(lo..hi))
}

fn line_characterization() -> Outcome {
    let start = Instant::now();
    let r = remark_line_case(20, &Tolerances::default()).map_err(|e| e.to_string())?;
    within(start.elapsed(), 10.0)?;
    ensure(r.samples.len() == 400, || format!("{} nodes", r.samples.len()))?;
    let mut diagonal = 0;
    for s in &r.samples {
        let (a, b) = (s.pair.p1.x, s.pair.p2.x);
        let passes = s.observed == dsq_core::density::Verdict::Pass;
        ensure(passes == (a != b), || {
            format!("node ({a}, {b}) verdict {:?}", s.observed)
        })?;
        if a == b {
            diagonal += 1;
            ensure(
                s.singular_points
                    .iter()
                    .any(|q| (q.loc.t - a).abs() < LINE_SINGULAR_TOL),
                || format!("diagonal node {a}: singular points {:?}", s.singular_points),
            )?;
        }
    }
    ensure(diagonal == 20, || format!("{diagonal} diagonal nodes"))?;
    Ok(format!("400/400 nodes agree, {:.2}s", start.elapsed().as_secs_f64()))
}

fn example2_reproduction() -> Outcome {
    let start = Instant::now();
    let r = example2_case(100, 2023, &Tolerances::default()).map_err(|e| e.to_string())?;
    within(start.elapsed(), 30.0)?;
    ensure(r.samples.len() == 100, || format!("{} samples", r.samples.len()))?;
    for s in &r.samples {
        ensure(s.observed == dsq_core::density::Verdict::Fail, || {
            format!("{:?} passes", s.pair)
        })?;
        ensure(s.evidence_ok, || format!("{:?}: {:?}", s.pair, s.evidence))?;
        ensure(s.reasons.contains(&FailureReason::NonIsolatedFamily), || {
            format!("{:?}: reasons {:?}", s.pair, s.reasons)
        })?;
        ensure(s.reasons.contains(&FailureReason::TangentialDoublePoints), || {
            format!("{:?}: reasons {:?}", s.pair, s.reasons)
        })?;
    }
    Ok(format!(
        "100/100 pairs fail with a tangential family, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
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
        let sol = svd.solve(&b, 1e-14).expect("least squares");
        *row = [sol[0], sol[1]];
        offset[k] = sol[2];
    }
    (linear, Vec2::new(offset[0], offset[1]))
}

fn conjugation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut worst, mut worst_fit) = (0.0f64, 0.0f64);
    let mut done = 0;
    while done < 100 {
        let base = Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let ang: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let dir = Vec2::new(ang.cos(), ang.sin());
        let mut s = || -> f64 { rng.random_range(-3.0..3.0) };
        let (a, b, c, d) = (s(), s(), s(), s());
        if (a - b).abs() < 0.1 || (c - d).abs() < 0.1 {
            continue;
        }
        done += 1;
        let p = AnchorPair::new(base + a * dir, base + b * dir);
        let pt = AnchorPair::new(base + c * dir, base + d * dir);
        let h = build_conjugator(&p, &pt).map_err(|e| e.to_string())?;
        worst = worst.max(verify_conjugation(&h, &p, &pt, 1000, 10.0));
        let (linear, offset) = pointwise_fit(&p, &pt);
        for (row, hrow) in linear.iter().zip(&h.linear) {
            for (a, b) in row.iter().zip(hrow) {
                worst_fit = worst_fit.max((a - b).abs());
            }
        }
        worst_fit = worst_fit
            .max((offset.x - h.offset.x).abs())
            .max((offset.y - h.offset.y).abs());
    }
    within(start.elapsed(), 10.0)?;
    ensure(worst < 1e-8, || format!("conjugation residual {worst:e}"))?;
    ensure(worst_fit < 1e-8, || format!("pointwise fit differs by {worst_fit:e}"))?;
    Ok(format!("max residual {worst:.1e}, max fit gap {worst_fit:.1e}"))
}

fn constructive_search() -> Outcome {
    let start = Instant::now();
    let circle = builtin_curve("circle", &[]).map_err(|e| e.to_string())?;
    let tol = Tolerances::default();
    let (o1, o2) = (ParamArc::new(0, 0.1, 0.6), ParamArc::new(0, 2.0, 2.5));
    let mut worst_norm = 0.0f64;
    let mut worst_phi = 0.0f64;
    for seed in 1..=20u64 {
        let r = find_generic_anchors(&circle, &o1, &o2, seed, 64, &tol).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(r.certificate.passes, || {
            format!("seed {seed}: certificate {:?}", r.certificate.reasons)
        })?;
        for p in [r.p_tilde.p1, r.p_tilde.p2] {
            worst_norm = worst_norm.max((p.norm() - 1.0).abs());
        }
        let inv = r.inverted;
        let v = phi_eval(&circle, inv.t1, inv.t2, inv.s1, inv.s2).map_err(|e| e.to_string())?;
        let target = [r.p_prime.p1.x, r.p_prime.p1.y, r.p_prime.p2.x, r.p_prime.p2.y];
        let gap = v.iter().zip(target).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        worst_phi = worst_phi.max(gap);
    }
    within(start.elapsed(), 60.0)?;
    ensure(worst_norm < 1e-10, || format!("anchor off circle by {worst_norm:e}"))?;
    ensure(worst_phi < 1e-9, || format!("round-trip residual {worst_phi:e}"))?;
    Ok(format!(
        "20/20 seeds certified, |p|-1 {worst_norm:.1e}, round trip {worst_phi:.1e}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

/// Two disjoint random sub-arcs of component 0.
fn random_boxes(curve: &Curve, rng: &mut impl Rng) -> (ParamArc, ParamArc) {
    let (lo, hi) = curve.components()[0].domain.shrunk();
    let len = hi - lo;
    let w = len * rng.random_range(0.05..0.2);
    let a = rng.random_range(lo..hi - 2.0 * w - 0.05 * len);
    let b = rng.random_range(a + w + 0.05 * len..hi - w);
    (ParamArc::new(0, a, a + w), ParamArc::new(0, b, b + w))
}

fn nondegeneracy_split() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for name in ["circle", "ellipse", "parabola_arc"] {
        let c = builtin_curve(name, &[]).map_err(|e| e.to_string())?;
        for k in 0..10 {
            let (u1, u2) = random_boxes(&c, &mut rng);
            find_nondegenerate_pair(&c, &u1, &u2, 4096, k).map_err(|e| format!("{name} {u1:?} {u2:?}: {e}"))?;
        }
    }
    let line = builtin_curve("line", &[]).map_err(|e| e.to_string())?;
    for k in 0..10 {
        let (u1, u2) = random_boxes(&line, &mut rng);
        match find_nondegenerate_pair(&line, &u1, &u2, 4096, k) {
            Err(SearchError::Failed(f)) if f.stage == SearchStage::NondegeneracyPhi1 => {}
            other => return Err(format!("line {u1:?} {u2:?}: {other:?}")),
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "30 curved box pairs found, 10 line pairs fail at stage 1, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn block_determinant() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let names = [
        "line",
        "circle",
        "ellipse",
        "parabola_arc",
        "example2_segments",
        "stadium",
        "flat_lobe",
    ];
    let mut worst = 0.0f64;
    for k in 0..100 {
        let c = builtin_curve(names[k % names.len()], &[]).map_err(|e| e.to_string())?;
        let (t1, t2) = (random_loc(&c, &mut rng), random_loc(&c, &mut rng));
        let j = phi_jacobian(&c, t1, t2, 0.0, 1.0).map_err(|e| e.to_string())?;
        let det = Matrix4::from_fn(|r, col| j[r][col]).determinant().abs();
        let (f1, f2) = varphi_dets(&c, t1, t2).map_err(|e| e.to_string())?;
        let want = (f1 * f2).abs();
        let rel = if want > 0.0 { (det - want).abs() / want } else { det };
        worst = worst.max(rel);
    }
    ensure(worst < 1e-8, || format!("relative error {worst:e}"))?;
    Ok(format!("100 states, max relative error {worst:.1e}"))
}

fn density_proxy() -> Outcome {
    let start = Instant::now();
    let tol = Tolerances::default();
    let circle = builtin_curve("circle", &[]).map_err(|e| e.to_string())?;
    let q = std::f64::consts::FRAC_PI_2;
    let g = density_scan(
        &circle,
        &ParamArc::new(0, 0.0, q),
        &ParamArc::new(0, 2.0 * q, 3.0 * q),
        25,
        &tol,
    )
    .map_err(|e| e.to_string())?;
    let e2 = builtin_curve("example2_segments", &[]).map_err(|e| e.to_string())?;
    let mid = ParamArc::new(1, 1.0, 2.0);
    let z = density_scan(&e2, &mid, &mid, 25, &tol).map_err(|e| e.to_string())?;
    within(start.elapsed(), 120.0)?;
    ensure(g.pass_fraction >= 0.95, || {
        format!("circle pass fraction {}", g.pass_fraction)
    })?;
    ensure(z.pass_fraction == 0.0, || {
        format!("middle segment pass fraction {}", z.pass_fraction)
    })?;
    Ok(format!(
        "circle {:.4}, middle segment {}, {:.2}s",
        g.pass_fraction,
        z.pass_fraction,
        start.elapsed().as_secs_f64()
    ))
}

fn rel_gap(fd: f64, exact: f64) -> f64 {
    (fd - exact).abs() / (1.0 + exact.abs())
}

fn derivative_hygiene() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let names = ["line", "circle", "ellipse", "parabola_arc", "stadium", "flat_lobe"];
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut probes = 0;
    while probes < 200 {
        let c = builtin_curve(names[probes % names.len()], &[]).map_err(|e| e.to_string())?;
        let inside = |l: CurveLoc| {
            let (lo, hi) = c.components()[l.component].working();
            l.t - h >= lo && l.t + h <= hi
        };
        let (t1, t2) = (random_loc(&c, &mut rng), random_loc(&c, &mut rng));
        if !inside(t1) || !inside(t2) {
            continue;
        }
        probes += 1;
        let shift = |l: CurveLoc, d: f64| CurveLoc::new(l.component, l.t + d);
        let e = |r: dsq_core::Result<Vec2>| r.map_err(|e| e.to_string());
        let fd1 = 0.5 / h * (e(c.eval(shift(t1, h)))? - e(c.eval(shift(t1, -h)))?);
        let d1 = e(c.derivative(t1, 1))?;
        let fd2 = 0.5 / h * (e(c.derivative(shift(t1, h), 1))? - e(c.derivative(shift(t1, -h), 1))?);
        let d2 = e(c.derivative(t1, 2))?;
        let pair = AnchorPair::new(
            Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            Vec2::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
        );
        let comp = Composition::new(&c, pair);
        let fdf = 0.5 / h * (e(comp.eval(shift(t1, h)))? - e(comp.eval(shift(t1, -h)))?);
        let df = e(comp.derivative(t1))?;
        for (a, b) in [(fd1, d1), (fd2, d2), (fdf, df)] {
            worst = worst.max(rel_gap(a.x, b.x)).max(rel_gap(a.y, b.y));
        }
        let (s1, s2) = (rng.random_range(-0.5..0.5), rng.random_range(0.5..1.5));
        let j = phi_jacobian(&c, t1, t2, s1, s2).map_err(|e| e.to_string())?;
        let ph = |a: CurveLoc, b: CurveLoc, x: f64, y: f64| phi_eval(&c, a, b, x, y).map_err(|e| e.to_string());
        let cols = [
            (ph(shift(t1, h), t2, s1, s2)?, ph(shift(t1, -h), t2, s1, s2)?),
            (ph(t1, shift(t2, h), s1, s2)?, ph(t1, shift(t2, -h), s1, s2)?),
            (ph(t1, t2, s1 + h, s2)?, ph(t1, t2, s1 - h, s2)?),
            (ph(t1, t2, s1, s2 + h)?, ph(t1, t2, s1, s2 - h)?),
        ];
        for (col, (plus, minus)) in cols.iter().enumerate() {
            for row in 0..4 {
                worst = worst.max(rel_gap((plus[row] - minus[row]) / (2.0 * h), j[row][col]));
            }
        }
    }
    ensure(worst < 1e-6, || format!("finite-difference gap {worst:e}"))?;
    let mut worst_k = 0.0f64;
    for r in [0.5, 1.0, 2.0] {
        let c = builtin_curve("circle", &[r]).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let loc = random_loc(&c, &mut rng);
            let k = curvature(&c, loc).map_err(|e| e.to_string())?;
            worst_k = worst_k.max((k - 1.0 / r).abs());
        }
    }
    ensure(worst_k < 1e-9, || format!("curvature error {worst_k:e}"))?;
    Ok(format!(
        "200 probes, max FD gap {worst:.1e}, curvature error {worst_k:.1e}"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("line anchor grid characterization", line_characterization),
        ("shifted-segment coincidence family", example2_reproduction),
        ("collinear conjugation", conjugation),
        ("circle constructive search", constructive_search),
        ("nondegenerate pair split", nondegeneracy_split),
        ("block determinant identity", block_determinant),
        ("density proxy", density_proxy),
        ("numerical hygiene", derivative_hygiene),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{secs:.2}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
