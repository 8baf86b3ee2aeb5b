//! Piecewise parametric plane curves with exact derivatives.
//!
//! A curve is a list of components, each an expression pair `(x(t), y(t))`
//! on a parameter interval. The source manifold is the disjoint union of the
//! component intervals; a point of it is addressed by [`CurveLoc`].
//!
//! Open intervals are worked on through a margin-shrunk closed sub-interval.
//! A component whose endpoints coincide in position and tangent is treated as
//! a closed loop and is worked on over its full interval instead.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geom::Vec2;

pub const DEFAULT_MARGIN: f64 = 1e-4;

/// Below this speed a sample counts as an immersion violation.
pub const IMMERSION_THRESHOLD: f64 = 1e-9;

const IMMERSION_SAMPLES: usize = 1024;
const ENDPOINT_MATCH: f64 = 1e-8;

/// Names accepted by [`builtin_curve`].
pub const CATALOG: &[&str] = &[
    "line",
    "circle",
    "ellipse",
    "parabola_arc",
    "example2_segments",
    "stadium",
    "flat_lobe",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closed_margin: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, closed_margin: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::CurveDocument(format!(
                "interval needs lo < hi, got [{lo}, {hi}]"
            )));
        }
        if !(closed_margin >= 0.0 && closed_margin < (hi - lo) / 2.0) {
            return Err(Error::CurveDocument(format!(
                "margin {closed_margin} must lie in [0, {})",
                (hi - lo) / 2.0
            )));
        }
        Ok(Interval { lo, hi, closed_margin })
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn shrunk(&self) -> (f64, f64) {
        (self.lo + self.closed_margin, self.hi - self.closed_margin)
    }
}

/// A point of the source manifold: a component index and a parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveLoc {
    pub component: usize,
    pub t: f64,
}

impl CurveLoc {
    pub const fn new(component: usize, t: f64) -> Self {
        CurveLoc { component, t }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub x: String,
    pub y: String,
    pub domain: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

/// The curve-spec document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub components: Vec<ComponentSpec>,
    #[serde(default)]
    pub injective: bool,
}

#[derive(Debug, Clone)]
pub struct CurveComponent {
    pub domain: Interval,
    pub x: Expr,
    pub y: Expr,
    dx: Expr,
    dy: Expr,
    ddx: Expr,
    ddy: Expr,
    closed: bool,
}

impl CurveComponent {
    fn new(x: Expr, y: Expr, domain: Interval) -> Self {
        let dx = x.derivative();
        let dy = y.derivative();
        let ddx = dx.derivative();
        let ddy = dy.derivative();
        let mut c = CurveComponent {
            domain,
            x,
            y,
            dx,
            dy,
            ddx,
            ddy,
            closed: false,
        };
        let (lo, hi) = (domain.lo, domain.hi);
        let scale = 1.0 + c.point(lo).norm();
        let vscale = 1.0 + c.d1(lo).norm();
        c.closed = (c.point(lo) - c.point(hi)).norm() <= ENDPOINT_MATCH * scale
            && (c.d1(lo) - c.d1(hi)).norm() <= ENDPOINT_MATCH * vscale;
        c
    }

    #[inline]
    pub fn point(&self, t: f64) -> Vec2 {
        Vec2::new(self.x.eval(t), self.y.eval(t))
    }

    #[inline]
    pub fn d1(&self, t: f64) -> Vec2 {
        Vec2::new(self.dx.eval(t), self.dy.eval(t))
    }

    #[inline]
    pub fn d2(&self, t: f64) -> Vec2 {
        Vec2::new(self.ddx.eval(t), self.ddy.eval(t))
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Parameter range used for numerical work: the full interval for closed
    /// loops, the margin-shrunk interval otherwise.
    pub fn working(&self) -> (f64, f64) {
        if self.closed {
            (self.domain.lo, self.domain.hi)
        } else {
            self.domain.shrunk()
        }
    }
}

/// Two component endpoints with the same image (a closed seam or a joint
/// between pieces). Parameter pairs close to a junction are not counted as
/// distinct points of the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Junction {
    pub a: usize,
    pub a_end: f64,
    pub b: usize,
    pub b_end: f64,
}

#[derive(Debug, Clone)]
pub struct Curve {
    components: Vec<CurveComponent>,
    injective: bool,
    junctions: Vec<Junction>,
    spec: CurveSpec,
}

impl Curve {
    pub fn from_spec(spec: CurveSpec) -> Result<Curve> {
        if spec.components.is_empty() {
            return Err(Error::CurveDocument("curve has no components".into()));
        }
        let mut components = Vec::with_capacity(spec.components.len());
        for cs in &spec.components {
            let x = Expr::parse(&cs.x)?;
            let y = Expr::parse(&cs.y)?;
            let domain = Interval::new(cs.domain[0], cs.domain[1], cs.margin.unwrap_or(DEFAULT_MARGIN))?;
            components.push(CurveComponent::new(x, y, domain));
        }
        for (ci, c) in components.iter().enumerate() {
            let (lo, hi) = c.working();
            for k in 0..=IMMERSION_SAMPLES {
                let t = lo + (hi - lo) * k as f64 / IMMERSION_SAMPLES as f64;
                let speed = c.d1(t).norm();
                if !(speed > IMMERSION_THRESHOLD) {
                    return Err(Error::Immersion {
                        component: ci,
                        t,
                        speed,
                    });
                }
            }
        }
        let junctions = find_junctions(&components);
        Ok(Curve {
            injective: spec.injective,
            components,
            junctions,
            spec,
        })
    }

    pub fn components(&self) -> &[CurveComponent] {
        &self.components
    }

    pub fn component(&self, i: usize) -> Result<&CurveComponent> {
        self.components.get(i).ok_or(Error::NoSuchComponent {
            component: i,
            count: self.components.len(),
        })
    }

    pub fn injective(&self) -> bool {
        self.injective
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    /// SHA-256 of the canonical JSON form of the curve spec.
    pub fn digest(&self) -> String {
        let canon = serde_json::to_vec(&self.spec).expect("curve spec serializes");
        hex::encode(Sha256::digest(&canon))
    }

    pub fn working(&self, component: usize) -> Result<(f64, f64)> {
        Ok(self.component(component)?.working())
    }

    pub fn check_loc(&self, loc: CurveLoc) -> Result<&CurveComponent> {
        let c = self.component(loc.component)?;
        let (lo, hi) = c.working();
        let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        if !(loc.t >= lo - slack && loc.t <= hi + slack) {
            return Err(Error::OutOfDomain {
                component: loc.component,
                t: loc.t,
                lo,
                hi,
            });
        }
        Ok(c)
    }

    pub fn eval(&self, loc: CurveLoc) -> Result<Vec2> {
        Ok(self.check_loc(loc)?.point(loc.t))
    }

    pub fn derivative(&self, loc: CurveLoc, order: u8) -> Result<Vec2> {
        let c = self.check_loc(loc)?;
        match order {
            1 => Ok(c.d1(loc.t)),
            2 => Ok(c.d2(loc.t)),
            o => Err(Error::UnsupportedOrder(o)),
        }
    }

    /// Sampled injectivity spot check: returns the first pair of sample
    /// locations (further apart than `min_sep` in parameter) whose images are
    /// closer than `tol`.
    pub fn injectivity_violation(&self, samples: usize, min_sep: f64, tol: f64) -> Option<(CurveLoc, CurveLoc)> {
        let pts: Vec<(CurveLoc, Vec2)> = self
            .components
            .iter()
            .enumerate()
            .flat_map(|(ci, c)| {
                let (lo, hi) = c.domain.shrunk();
                (0..=samples).map(move |k| {
                    let t = lo + (hi - lo) * k as f64 / samples as f64;
                    (CurveLoc::new(ci, t), c.point(t))
                })
            })
            .collect();
        for (i, (la, pa)) in pts.iter().enumerate() {
            for (lb, pb) in &pts[i + 1..] {
                if la.component == lb.component && (la.t - lb.t).abs() <= min_sep {
                    continue;
                }
                if (*pa - *pb).norm() < tol {
                    return Some((*la, *lb));
                }
            }
        }
        None
    }
}

fn find_junctions(components: &[CurveComponent]) -> Vec<Junction> {
    let ends: Vec<(usize, f64, Vec2)> = components
        .iter()
        .enumerate()
        .flat_map(|(i, c)| {
            [
                (i, c.domain.lo, c.point(c.domain.lo)),
                (i, c.domain.hi, c.point(c.domain.hi)),
            ]
        })
        .collect();
    let mut out = Vec::new();
    for (k, &(a, ta, pa)) in ends.iter().enumerate() {
        for &(b, tb, pb) in &ends[k + 1..] {
            if (pa - pb).norm() <= ENDPOINT_MATCH * (1.0 + pa.norm()) {
                out.push(Junction {
                    a,
                    a_end: ta,
                    b,
                    b_end: tb,
                });
            }
        }
    }
    out
}

/// Parses a curve-spec JSON document.
pub fn load_curve(document: &str) -> Result<Curve> {
    let spec: CurveSpec = serde_json::from_str(document).map_err(|e| Error::CurveDocument(e.to_string()))?;
    Curve::from_spec(spec)
}

fn num(v: f64) -> String {
    if v.is_sign_negative() {
        format!("({v})")
    } else {
        format!("{v}")
    }
}

fn comp(x: String, y: String, lo: f64, hi: f64) -> ComponentSpec {
    ComponentSpec {
        x,
        y,
        domain: [lo, hi],
        margin: None,
    }
}

fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParams {
        name: name.to_string(),
        reason: reason.into(),
    }
}

fn params_or<const N: usize>(name: &str, params: &[f64], default: [f64; N]) -> Result<[f64; N]> {
    if params.is_empty() {
        return Ok(default);
    }
    if params.len() != N {
        return Err(invalid(
            name,
            format!("expected 0 or {N} parameters, got {}", params.len()),
        ));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(invalid(name, "parameters must be finite"));
    }
    let mut out = [0.0; N];
    out.copy_from_slice(params);
    Ok(out)
}

/// Builds a catalog curve.
///
/// | name | params | curve |
/// |---|---|---|
/// | `line` | `[lo, hi]` (default `[0, 1]`) | `(t, 0)` |
/// | `circle` | `[r]` (default `[1]`) | `(r cos t, r sin t)`, `t ∈ [0, 2π]` |
/// | `ellipse` | `[a, b]` (default `[2, 1]`) | `(a cos t, b sin t)` |
/// | `parabola_arc` | `[lo, hi]` (default `[-4, 4]`) | `(t, t²)` |
/// | `example2_segments` | none | `(t,-1)` on (0,1), `(t-1,0)` on (1,2), `(t-2,1)` on (2,3) |
/// | `stadium` | `[half_length]` (default `[1]`) | flats `y = ±1` joined by unit semicircles |
/// | `flat_lobe` | none | flat `y = 0` whose line the closing lobe crosses at a right angle |
pub fn builtin_curve(name: &str, params: &[f64]) -> Result<Curve> {
    let components = match name {
        "line" => {
            let [lo, hi] = params_or(name, params, [0.0, 1.0])?;
            if lo >= hi {
                return Err(invalid(name, "need lo < hi"));
            }
            vec![comp("t".into(), "0".into(), lo, hi)]
        }
        "circle" => {
            let [r] = params_or(name, params, [1.0])?;
            if r <= 0.0 {
                return Err(invalid(name, "radius must be positive"));
            }
            let (x, y) = if r == 1.0 {
                ("cos(t)".to_string(), "sin(t)".to_string())
            } else {
                (format!("{r}*cos(t)"), format!("{r}*sin(t)"))
            };
            vec![comp(x, y, 0.0, TAU)]
        }
        "ellipse" => {
            let [a, b] = params_or(name, params, [2.0, 1.0])?;
            if a <= 0.0 || b <= 0.0 {
                return Err(invalid(name, "semi-axes must be positive"));
            }
            vec![comp(format!("{a}*cos(t)"), format!("{b}*sin(t)"), 0.0, TAU)]
        }
        "parabola_arc" => {
            let [lo, hi] = params_or(name, params, [-4.0, 4.0])?;
            if lo >= hi {
                return Err(invalid(name, "need lo < hi"));
            }
            vec![comp("t".into(), "t^2".into(), lo, hi)]
        }
        "example2_segments" => {
            params_or::<0>(name, params, [])?;
            vec![
                comp("t".into(), "-1".into(), 0.0, 1.0),
                comp("t - 1".into(), "0".into(), 1.0, 2.0),
                comp("t - 2".into(), "1".into(), 2.0, 3.0),
            ]
        }
        "stadium" => {
            let [l] = params_or(name, params, [1.0])?;
            if l <= 0.0 {
                return Err(invalid(name, "half length must be positive"));
            }
            vec![
                comp(format!("t - {}", num(l)), "-1".into(), 0.0, 2.0 * l),
                comp(format!("{} + cos(t)", num(l)), "sin(t)".into(), -FRAC_PI_2, FRAC_PI_2),
                comp(format!("{} - t", num(l)), "1".into(), 0.0, 2.0 * l),
                comp(
                    format!("-{} + cos(t)", num(l)),
                    "sin(t)".into(),
                    FRAC_PI_2,
                    3.0 * FRAC_PI_2,
                ),
            ]
        }
        "flat_lobe" => {
            params_or::<0>(name, params, [])?;
            vec![
                comp("t".into(), "0".into(), 0.0, 2.0),
                comp("2 + sin(t)".into(), "1 - cos(t)".into(), 0.0, PI),
                comp("2 - t".into(), "2".into(), 0.0, 2.0),
                comp("-sin(t)".into(), "1 + cos(t) - sin(t)".into(), 0.0, PI),
            ]
        }
        other => return Err(Error::UnknownCurve(other.to_string())),
    };
    Curve::from_spec(CurveSpec {
        name: Some(name.to_string()),
        components,
        injective: true,
    })
}
