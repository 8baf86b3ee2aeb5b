//! Distance-squared functions and mappings, and singular points of their
//! composition with a curve.
//!
//! For `F = D_p ∘ γ` with `p = (p1, p2)`,
//! `F'(t) = 2 (<γ - p1, γ'>, <γ - p2, γ'>)`, so `t` is singular exactly when
//! both dot products vanish.

use serde::{Deserialize, Serialize};

use crate::curve::{Curve, CurveComponent, CurveLoc};
use crate::error::Result;
use crate::geom::Vec2;
use crate::tol::Tolerances;

pub type Anchor = Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorPair {
    pub p1: Anchor,
    pub p2: Anchor,
}

impl AnchorPair {
    pub const fn new(p1: Anchor, p2: Anchor) -> Self {
        AnchorPair { p1, p2 }
    }

    /// Both anchors coincide (the pair lies on the diagonal).
    pub fn is_degenerate(&self) -> bool {
        self.p1 == self.p2
    }

    pub fn swapped(&self) -> Self {
        AnchorPair::new(self.p2, self.p1)
    }
}

pub fn dsq_eval(anchor: Anchor, x: Vec2) -> f64 {
    (x - anchor).norm_sq()
}

pub fn dsq_map_eval(pair: &AnchorPair, x: Vec2) -> Vec2 {
    Vec2::new(dsq_eval(pair.p1, x), dsq_eval(pair.p2, x))
}

/// Numerical rank of the Jacobian of `D_p` at `x` (rows `2(x - p1)`,
/// `2(x - p2)`): the number of singular values above `tol`.
pub fn dsq_map_rank(pair: &AnchorPair, x: Vec2, tol: f64) -> u8 {
    let r1 = 2.0 * (x - pair.p1);
    let r2 = 2.0 * (x - pair.p2);
    let (s_max, s_min) = singular_values(r1, r2);
    (s_max > tol) as u8 + (s_min > tol) as u8
}

/// Singular values of the 2x2 matrix with rows `r1`, `r2`, largest first.
pub(crate) fn singular_values(r1: Vec2, r2: Vec2) -> (f64, f64) {
    let fro2 = r1.norm_sq() + r2.norm_sq();
    let det = r1.cross(r2).abs();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let s_max = ((fro2 + disc) / 2.0).sqrt();
    let s_min = if s_max > 0.0 { det / s_max } else { 0.0 };
    (s_max, s_min)
}

/// The curve composed with a distance-squared mapping.
#[derive(Debug, Clone, Copy)]
pub struct Composition<'a> {
    pub curve: &'a Curve,
    pub pair: AnchorPair,
}

impl<'a> Composition<'a> {
    pub fn new(curve: &'a Curve, pair: AnchorPair) -> Self {
        Composition { curve, pair }
    }

    pub fn eval(&self, loc: CurveLoc) -> Result<Vec2> {
        Ok(dsq_map_eval(&self.pair, self.curve.eval(loc)?))
    }

    pub fn derivative(&self, loc: CurveLoc) -> Result<Vec2> {
        let c = self.curve.check_loc(loc)?;
        Ok(self.d1_on(c, loc.t))
    }

    #[inline]
    pub(crate) fn eval_on(&self, c: &CurveComponent, t: f64) -> Vec2 {
        dsq_map_eval(&self.pair, c.point(t))
    }

    #[inline]
    pub(crate) fn criteria_on(&self, c: &CurveComponent, t: f64) -> (f64, f64) {
        let g = c.point(t);
        let v = c.d1(t);
        ((g - self.pair.p1).dot(v), (g - self.pair.p2).dot(v))
    }

    #[inline]
    pub(crate) fn d1_on(&self, c: &CurveComponent, t: f64) -> Vec2 {
        let (g1, g2) = self.criteria_on(c, t);
        Vec2::new(2.0 * g1, 2.0 * g2)
    }

    #[inline]
    pub(crate) fn d2_on(&self, c: &CurveComponent, t: f64) -> Vec2 {
        let g = c.point(t);
        let v = c.d1(t);
        let a = c.d2(t);
        let vv = v.dot(v);
        Vec2::new(
            2.0 * (vv + (g - self.pair.p1).dot(a)),
            2.0 * (vv + (g - self.pair.p2).dot(a)),
        )
    }
}

/// `F'(loc) = 2 (<γ - p1, γ'>, <γ - p2, γ'>)`.
pub fn composition_derivative(comp: &Composition<'_>, loc: CurveLoc) -> Result<Vec2> {
    comp.derivative(loc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub loc: CurveLoc,
    /// `(<γ - p1, γ'>, <γ - p2, γ'>)` at `loc`.
    pub residuals: (f64, f64),
    pub refined: bool,
}

/// All parameters where both criteria vanish, per component, sorted by
/// component then parameter.
pub fn find_singular_points(comp: &Composition<'_>, tol: &Tolerances) -> Vec<SingularPoint> {
    let mut out = Vec::new();
    for (ci, c) in comp.curve.components().iter().enumerate() {
        let mut roots = singular_on_component(comp, c, tol);
        let (lo, hi) = c.working();
        if c.is_closed() && roots.len() > 1 {
            // both seam copies of the same point
            let first = roots[0];
            let last = *roots.last().unwrap();
            if (c.point(first) - c.point(last)).norm() <= 1e-9 * (1.0 + c.point(first).norm())
                && (first - lo) + (hi - last) < tol.cluster_radius_rel * (hi - lo)
            {
                roots.pop();
            }
        }
        out.extend(roots.into_iter().map(|t| {
            let residuals = comp.criteria_on(c, t);
            SingularPoint {
                loc: CurveLoc::new(ci, t),
                residuals,
                refined: residuals.0.abs() < tol.singular_accept && residuals.1.abs() < tol.singular_accept,
            }
        }));
    }
    out
}

fn singular_on_component(comp: &Composition<'_>, c: &CurveComponent, tol: &Tolerances) -> Vec<f64> {
    let (lo, hi) = c.working();
    let n = tol.root_grid.max(4);
    let ts: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let vals: Vec<(f64, f64)> = ts.iter().map(|&t| comp.criteria_on(c, t)).collect();
    let near_zero = tol.singular_refine.sqrt();
    let mut roots = Vec::new();
    for which in 0..2 {
        let g = |t: f64| {
            let v = comp.criteria_on(c, t);
            if which == 0 {
                v.0
            } else {
                v.1
            }
        };
        let other = |t: f64| {
            let v = comp.criteria_on(c, t);
            if which == 0 {
                v.1
            } else {
                v.0
            }
        };
        let gv: Vec<f64> = vals.iter().map(|v| if which == 0 { v.0 } else { v.1 }).collect();
        let mut accept = |t: f64| {
            if g(t).abs() < tol.singular_refine && other(t).abs() < tol.singular_accept {
                roots.push(t);
            }
        };
        for k in 0..=n {
            if gv[k] == 0.0 {
                accept(ts[k]);
                continue;
            }
            if k < n && gv[k + 1] != 0.0 && (gv[k] < 0.0) != (gv[k + 1] < 0.0) {
                let t = refine_bracket(&g, ts[k], ts[k + 1], gv[k], tol.singular_refine);
                accept(t);
            }
            if k > 0
                && k < n
                && gv[k].abs() < near_zero
                && gv[k].abs() <= gv[k - 1].abs()
                && gv[k].abs() <= gv[k + 1].abs()
            {
                let t = minimize_abs(&g, ts[k - 1], ts[k + 1]);
                accept(t);
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    let merge = tol.singular_merge_rel * (hi - lo);
    let mut merged: Vec<f64> = Vec::with_capacity(roots.len());
    for t in roots {
        match merged.last() {
            Some(&prev) if t - prev <= merge => {}
            _ => merged.push(t),
        }
    }
    merged
}

/// Bisection on a sign-change bracket until `|g| < tol` or the bracket
/// collapses to a few ulps.
fn refine_bracket(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut ga: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let gm = g(m);
        if gm.abs() < tol * 1e-3 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    let m = 0.5 * (a + b);
    if g(a).abs() < g(m).abs() {
        a
    } else {
        m
    }
}

/// Golden-section minimization of `|g|` on `[a, b]`, used for even-order
/// zeros that produce no sign change.
fn minimize_abs(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (g(c).abs(), g(d).abs());
    for _ in 0..120 {
        if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = g(c).abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = g(d).abs();
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}
