//! Grid experiments over curve-anchored pairs and the reproducible case
//! studies built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crossing::{analyze, FailureReason};
use crate::curve::{builtin_curve, Curve, CurveLoc};
use crate::dsq::{find_singular_points, AnchorPair, Composition, SingularPoint};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::search::ParamArc;
use crate::tol::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureCell {
    pub i: usize,
    pub j: usize,
    pub reasons: Vec<FailureReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub arc1: ParamArc,
    pub arc2: ParamArc,
    pub n: usize,
    /// `verdicts[i][j]` is the verdict for anchors `(γ(t1[i]), γ(t2[j]))`.
    pub verdicts: Vec<Vec<bool>>,
    pub t1: Vec<f64>,
    pub t2: Vec<f64>,
    pub pass_fraction: f64,
    pub failure_cells: Vec<FailureCell>,
}

impl DensityGrid {
    /// One row per `i`, `1` for pass and `0` for fail.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.verdicts {
            let cells: Vec<&str> = row.iter().map(|&v| if v { "1" } else { "0" }).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Nodes at cell centers, so the open arc endpoints are never sampled.
pub fn grid_nodes(arc: &ParamArc, n: usize) -> Vec<f64> {
    let h = (arc.hi - arc.lo) / n as f64;
    (0..n).map(|i| arc.lo + (i as f64 + 0.5) * h).collect()
}

/// Verdicts of [`analyze`] on the `n × n` cell-centered grid of anchor pairs
/// `(γ(t1), γ(t2))` with `t1` on `arc1` and `t2` on `arc2`.
pub fn density_scan(
    curve: &Curve,
    arc1: &ParamArc,
    arc2: &ParamArc,
    n: usize,
    tol: &Tolerances,
) -> Result<DensityGrid> {
    if n < 2 {
        return Err(Error::Precondition("density grid needs n >= 2".into()));
    }
    arc1.check(curve)?;
    arc2.check(curve)?;
    let t1 = grid_nodes(arc1, n);
    let t2 = grid_nodes(arc2, n);
    let p1: Vec<Vec2> = t1
        .iter()
        .map(|&t| curve.eval(CurveLoc::new(arc1.component, t)))
        .collect::<Result<_>>()?;
    let p2: Vec<Vec2> = t2
        .iter()
        .map(|&t| curve.eval(CurveLoc::new(arc2.component, t)))
        .collect::<Result<_>>()?;
    let cells: Vec<(bool, Vec<FailureReason>)> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let pair = AnchorPair::new(p1[k / n], p2[k % n]);
            let r = analyze(&Composition::new(curve, pair), tol);
            (r.passes, r.reasons)
        })
        .collect();
    let mut verdicts = vec![vec![false; n]; n];
    let mut failure_cells = Vec::new();
    let mut passed = 0;
    for (k, (pass, reasons)) in cells.into_iter().enumerate() {
        let (i, j) = (k / n, k % n);
        verdicts[i][j] = pass;
        if pass {
            passed += 1;
        } else {
            failure_cells.push(FailureCell { i, j, reasons });
        }
    }
    Ok(DensityGrid {
        arc1: *arc1,
        arc2: *arc2,
        n,
        verdicts,
        t1,
        t2,
        pass_fraction: passed as f64 / (n * n) as f64,
        failure_cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    RemarkLine,
    Example2,
    Stadium,
}

impl CaseId {
    pub fn name(self) -> &'static str {
        match self {
            CaseId::RemarkLine => "remark_line",
            CaseId::Example2 => "example2",
            CaseId::Stadium => "stadium",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl From<bool> for Verdict {
    fn from(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSample {
    pub pair: AnchorPair,
    pub expected: Verdict,
    pub observed: Verdict,
    pub reasons: Vec<FailureReason>,
    pub singular_points: Vec<SingularPoint>,
    /// Case-specific evidence; `true` when it confirms the expected mechanism.
    pub evidence_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyResult {
    pub case: CaseId,
    pub curve: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub samples: Vec<CaseSample>,
    /// Samples whose observed verdict or evidence disagrees with expectation.
    pub mismatches: usize,
    pub agrees: bool,
}

impl CaseStudyResult {
    fn finish(case: CaseId, curve: &str, seed: Option<u64>, samples: Vec<CaseSample>) -> Self {
        let mismatches = samples
            .iter()
            .filter(|s| s.expected != s.observed || !s.evidence_ok)
            .count();
        CaseStudyResult {
            case,
            curve: curve.to_string(),
            seed,
            samples,
            mismatches,
            agrees: mismatches == 0,
        }
    }
}

/// Singular points are accepted as matching `t` when within this distance.
pub const LINE_SINGULAR_TOL: f64 = 1e-8;

/// On the line `(t, 0)`, anchors `(a, 0)`, `(b, 0)` pass exactly when
/// `a ≠ b`; when `a = b` the composition is singular at `t = a`. Checked on
/// the cell-centered `n × n` grid over the line's domain, diagonal included.
pub fn remark_line_case(n: usize, tol: &Tolerances) -> Result<CaseStudyResult> {
    if n < 2 {
        return Err(Error::Precondition("grid needs n >= 2".into()));
    }
    let line = builtin_curve("line", &[])?;
    let arc = {
        let c = &line.components()[0];
        ParamArc::new(0, c.domain.lo, c.domain.hi)
    };
    let nodes = grid_nodes(&arc, n);
    let samples: Vec<CaseSample> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (nodes[k / n], nodes[k % n]);
            let pair = AnchorPair::new(Vec2::new(a, 0.0), Vec2::new(b, 0.0));
            let r = analyze(&Composition::new(&line, pair), tol);
            let expected = Verdict::from(a != b);
            let evidence_ok = a != b
                || r.singular_points
                    .iter()
                    .any(|s| (s.loc.t - a).abs() < LINE_SINGULAR_TOL);
            CaseSample {
                pair,
                expected,
                observed: r.passes.into(),
                reasons: r.reasons,
                singular_points: r.singular_points,
                evidence_ok,
                evidence: None,
            }
        })
        .collect();
    Ok(CaseStudyResult::finish(CaseId::RemarkLine, "line", None, samples))
}

/// Coincidence and parallel-differential residuals of the shifted branches
/// `t0` and `t0 + 2` of `example2_segments`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftEvidence {
    pub max_image_gap: f64,
    pub max_abs_det: f64,
}

pub const EXAMPLE2_EVIDENCE_TOL: f64 = 1e-12;

pub fn example2_shift_evidence(curve: &Curve, pair: AnchorPair, t0s: &[f64]) -> Result<ShiftEvidence> {
    let comp = Composition::new(curve, pair);
    let mut ev = ShiftEvidence {
        max_image_gap: 0.0,
        max_abs_det: 0.0,
    };
    for &t0 in t0s {
        let (a, b) = (CurveLoc::new(0, t0), CurveLoc::new(2, t0 + 2.0));
        let gap = (comp.eval(a)? - comp.eval(b)?).norm();
        let det = comp.derivative(a)?.cross(comp.derivative(b)?).abs();
        ev.max_image_gap = ev.max_image_gap.max(gap);
        ev.max_abs_det = ev.max_abs_det.max(det);
    }
    Ok(ev)
}

/// Random anchor pairs on the image of the middle segment: the outer
/// segments coincide under `D_p` with parallel differentials, so every pair
/// fails with a non-isolated coincidence family.
pub fn example2_case(samples: usize, seed: u64, tol: &Tolerances) -> Result<CaseStudyResult> {
    if samples == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    let curve = builtin_curve("example2_segments", &[])?;
    let (mlo, mhi) = curve.components()[1].working();
    // t0 and t0 + 2 must both lie in the working intervals of the outer pieces
    let (alo, ahi) = curve.components()[0].working();
    let (blo, bhi) = curve.components()[2].working();
    let (lo0, hi0) = (alo.max(blo - 2.0), ahi.min(bhi - 2.0));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        let t1 = rng.random_range(mlo..mhi);
        let t2 = rng.random_range(mlo..mhi);
        let t0s: Vec<f64> = (0..10).map(|_| rng.random_range(lo0..hi0)).collect();
        draws.push((t1, t2, t0s));
    }
    let out: Vec<CaseSample> = draws
        .into_par_iter()
        .map(|(t1, t2, t0s)| -> Result<CaseSample> {
            let pair = AnchorPair::new(curve.eval(CurveLoc::new(1, t1))?, curve.eval(CurveLoc::new(1, t2))?);
            let ev = example2_shift_evidence(&curve, pair, &t0s)?;
            let r = analyze(&Composition::new(&curve, pair), tol);
            let family = r
                .families
                .iter()
                .any(|f| f.component_a == 0 && f.component_b == 2 && f.tangential);
            let evidence_ok =
                ev.max_image_gap <= EXAMPLE2_EVIDENCE_TOL && ev.max_abs_det <= EXAMPLE2_EVIDENCE_TOL && family;
            Ok(CaseSample {
                pair,
                expected: Verdict::Fail,
                observed: r.passes.into(),
                reasons: r.reasons,
                singular_points: r.singular_points,
                evidence_ok,
                evidence: Some(format!(
                    "max image gap {:e}, max |det| {:e}, tangential I1xI3 family: {family}",
                    ev.max_image_gap, ev.max_abs_det
                )),
            })
        })
        .collect::<Result<_>>()?;
    Ok(CaseStudyResult::finish(
        CaseId::Example2,
        "example2_segments",
        Some(seed),
        out,
    ))
}

/// Curve used by [`stadium_case`]: a closed curve with a flat piece whose
/// supporting line is met at a right angle elsewhere on the curve.
pub const FLAT_CASE_CURVE: &str = "flat_lobe";

/// `|<γ(q) - p_i, γ'(q)>| / (|γ(q) - p_i| |γ'(q)|)` must be below this for a
/// singular point to count as a perpendicular foot of both anchors.
const PERPENDICULAR_TOL: f64 = 1e-6;

/// Random anchor pairs on the flat piece of [`FLAT_CASE_CURVE`]: the curve
/// crosses the flat's line perpendicularly at some `q'`, where both anchor
/// vectors are normal to the tangent, so `q'` is singular and the pair fails.
pub fn stadium_case(samples: usize, seed: u64, tol: &Tolerances) -> Result<CaseStudyResult> {
    if samples == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    let curve = builtin_curve(FLAT_CASE_CURVE, &[])?;
    let (lo, hi) = curve.components()[0].working();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(f64, f64)> = (0..samples)
        .map(|_| (rng.random_range(lo..hi), rng.random_range(lo..hi)))
        .collect();
    let out: Vec<CaseSample> = draws
        .into_par_iter()
        .map(|(t1, t2)| -> Result<CaseSample> {
            let pair = AnchorPair::new(curve.eval(CurveLoc::new(0, t1))?, curve.eval(CurveLoc::new(0, t2))?);
            let comp = Composition::new(&curve, pair);
            let singular = find_singular_points(&comp, tol);
            let mut foot = None;
            for s in &singular {
                let g = curve.eval(s.loc)?;
                let d = curve.derivative(s.loc, 1)?;
                let cosine = |p: Vec2| {
                    let v = g - p;
                    if v.norm() == 0.0 {
                        0.0
                    } else {
                        v.dot(d).abs() / (v.norm() * d.norm())
                    }
                };
                if s.loc.component != 0 && cosine(pair.p1) < PERPENDICULAR_TOL && cosine(pair.p2) < PERPENDICULAR_TOL {
                    foot = Some(*s);
                    break;
                }
            }
            let r = analyze(&comp, tol);
            Ok(CaseSample {
                pair,
                expected: Verdict::Fail,
                observed: r.passes.into(),
                reasons: r.reasons,
                singular_points: singular,
                evidence_ok: foot.is_some(),
                evidence: foot.map(|s| {
                    format!(
                        "perpendicular singular point at component {}, t = {}",
                        s.loc.component, s.loc.t
                    )
                }),
            })
        })
        .collect::<Result<_>>()?;
    Ok(CaseStudyResult::finish(
        CaseId::Stadium,
        FLAT_CASE_CURVE,
        Some(seed),
        out,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn nodes_avoid_endpoints() {
        let arc = ParamArc::new(0, 0.0, 1.0);
        let nodes = grid_nodes(&arc, 4);
        assert_eq!(nodes, vec![0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn line_grid_fails_on_the_diagonal_only() {
        let line = builtin_curve("line", &[]).unwrap();
        let arc = ParamArc::new(0, 0.0, 1.0);
        let g = density_scan(&line, &arc, &arc, 5, &Tolerances::default()).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(g.verdicts[i][j], i != j, "cell ({i}, {j})");
            }
        }
        assert!((g.pass_fraction - 0.8).abs() < 1e-15);
        assert_eq!(g.to_csv().lines().next().unwrap(), "0,1,1,1,1");
    }

    #[test]
    fn example2_worked_pair() {
        let curve = builtin_curve("example2_segments", &[]).unwrap();
        let pair = AnchorPair::new(Vec2::new(0.3, 0.0), Vec2::new(0.7, 0.0));
        let comp = Composition::new(&curve, pair);
        let a = comp.eval(CurveLoc::new(0, 0.5)).unwrap();
        assert!((a - Vec2::new(1.04, 1.04)).norm() < 1e-15);
        let d = comp.derivative(CurveLoc::new(0, 0.5)).unwrap();
        assert!((d - Vec2::new(0.4, -0.4)).norm() < 1e-15);
        let ev = example2_shift_evidence(&curve, pair, &[0.5]).unwrap();
        assert_eq!(ev.max_abs_det, 0.0);
    }

    #[test]
    fn small_case_studies_agree() {
        let tol = Tolerances::default();
        assert!(remark_line_case(3, &tol).unwrap().agrees);
        assert!(example2_case(2, 5, &tol).unwrap().agrees);
        let st = stadium_case(3, 5, &tol).unwrap();
        assert!(st.agrees, "{:?}", st.samples);
        for s in &st.samples {
            assert!(s
                .singular_points
                .iter()
                .any(|p| p.loc.component == 3 && (p.loc.t - FRAC_PI_2).abs() < 1e-8));
        }
    }
}
