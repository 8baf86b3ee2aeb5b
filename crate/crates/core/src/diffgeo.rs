//! Curvature and the no-flat-subarc condition.

use serde::{Deserialize, Serialize};

use crate::curve::{Curve, CurveLoc, IMMERSION_THRESHOLD};
use crate::error::{Error, Result};

/// Curvature of the addressed component at `loc`,
/// `det[[y', -x'], [y'', -x'']] / (x'^2 + y'^2)^(3/2)`.
pub fn curvature(curve: &Curve, loc: CurveLoc) -> Result<f64> {
    let c = curve.check_loc(loc)?;
    let d1 = c.d1(loc.t);
    let speed = d1.norm();
    if !(speed > IMMERSION_THRESHOLD) {
        return Err(Error::Immersion {
            component: loc.component,
            t: loc.t,
            speed,
        });
    }
    let d2 = c.d2(loc.t);
    let det = d1.y * (-d2.x) - (-d1.x) * d2.y;
    Ok(det / (speed * speed * speed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarOptions {
    pub window: f64,
    pub kappa_min: f64,
    pub samples_per_window: usize,
}

impl StarOptions {
    /// Window of 1% of the shortest component, `κ_min = 1e-6`, 64 samples.
    pub fn for_curve(curve: &Curve) -> Self {
        let shortest = curve
            .components()
            .iter()
            .map(|c| c.domain.len())
            .fold(f64::INFINITY, f64::min);
        StarOptions {
            window: 1e-2 * shortest,
            kappa_min: 1e-6,
            samples_per_window: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub component: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarWitness {
    pub window: Window,
    pub loc: CurveLoc,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarVerdict {
    pub satisfied: bool,
    pub window: f64,
    pub threshold: f64,
    pub samples_per_window: usize,
    pub windows_probed: usize,
    pub witnesses: Vec<StarWitness>,
    pub failing: Vec<Window>,
}

/// Finite-resolution probe of the no-flat-subarc condition: every window of
/// length `window` (stride half a window) must contain a sample with
/// `|κ| > kappa_min`. A failing verdict on an analytic piece whose curvature
/// vanishes on a window is exact; a passing verdict is evidence only.
pub fn satisfies_star(curve: &Curve, opts: StarOptions) -> Result<StarVerdict> {
    satisfies_star_on(curve, &whole_arcs(curve), opts)
}

pub(crate) fn whole_arcs(curve: &Curve) -> Vec<Window> {
    curve
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (lo, hi) = c.working();
            Window { component: i, lo, hi }
        })
        .collect()
}

/// [`satisfies_star`] restricted to the given parameter arcs.
pub fn satisfies_star_on(curve: &Curve, arcs: &[Window], opts: StarOptions) -> Result<StarVerdict> {
    if !(opts.kappa_min > 0.0) {
        return Err(Error::Precondition("kappa_min must be positive".into()));
    }
    if opts.samples_per_window < 2 {
        return Err(Error::Precondition("need at least 2 samples per window".into()));
    }
    let mut verdict = StarVerdict {
        satisfied: true,
        window: opts.window,
        threshold: opts.kappa_min,
        samples_per_window: opts.samples_per_window,
        windows_probed: 0,
        witnesses: Vec::new(),
        failing: Vec::new(),
    };
    for arc in arcs {
        curve.check_loc(CurveLoc::new(arc.component, arc.lo))?;
        curve.check_loc(CurveLoc::new(arc.component, arc.hi))?;
        let len = arc.hi - arc.lo;
        if !(opts.window > 0.0 && opts.window < len) {
            return Err(Error::Precondition(format!(
                "window {} must be positive and shorter than arc length {len}",
                opts.window
            )));
        }
        let stride = opts.window / 2.0;
        let n_windows = ((len - opts.window) / stride).ceil() as usize + 1;
        for w in 0..n_windows {
            let lo = (arc.lo + w as f64 * stride).min(arc.hi - opts.window);
            let hi = lo + opts.window;
            let window = Window {
                component: arc.component,
                lo,
                hi,
            };
            verdict.windows_probed += 1;
            let n = opts.samples_per_window;
            let mut witness = None;
            for k in 0..n {
                let t = lo + (hi - lo) * k as f64 / (n - 1) as f64;
                let loc = CurveLoc::new(arc.component, t);
                let kappa = curvature(curve, loc)?;
                if kappa.abs() > opts.kappa_min {
                    witness = Some(StarWitness {
                        window: window.clone(),
                        loc,
                        kappa,
                    });
                    break;
                }
            }
            match witness {
                Some(wit) => verdict.witnesses.push(wit),
                None => {
                    verdict.satisfied = false;
                    verdict.failing.push(window);
                }
            }
        }
    }
    Ok(verdict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::builtin_curve;

    #[test]
    fn catalog_curvatures() {
        let circle = builtin_curve("circle", &[]).unwrap();
        for t in [0.0, 0.4, 2.0, 5.5] {
            assert!((curvature(&circle, CurveLoc::new(0, t)).unwrap() - 1.0).abs() < 1e-12);
        }
        let line = builtin_curve("line", &[]).unwrap();
        assert_eq!(curvature(&line, CurveLoc::new(0, 0.5)).unwrap(), 0.0);
        let par = builtin_curve("parabola_arc", &[]).unwrap();
        assert_eq!(curvature(&par, CurveLoc::new(0, 0.0)).unwrap(), 2.0);
        // 2 / (1 + 4t^2)^(3/2) by hand
        let k1 = curvature(&par, CurveLoc::new(0, 1.0)).unwrap();
        assert!((k1 - 2.0 / 5f64.powf(1.5)).abs() < 1e-14);
    }

    #[test]
    fn star_verdicts() {
        let circle = builtin_curve("circle", &[]).unwrap();
        let v = satisfies_star(
            &circle,
            StarOptions {
                window: 0.1,
                kappa_min: 0.5,
                samples_per_window: 64,
            },
        )
        .unwrap();
        assert!(v.satisfied);
        assert_eq!(v.witnesses.len(), v.windows_probed);

        let line = builtin_curve("line", &[]).unwrap();
        let v = satisfies_star(&line, StarOptions::for_curve(&line)).unwrap();
        assert!(!v.satisfied);
        assert!(!v.failing.is_empty());

        let ex2 = builtin_curve("example2_segments", &[]).unwrap();
        let v = satisfies_star(&ex2, StarOptions::for_curve(&ex2)).unwrap();
        assert!(!v.satisfied);
        assert!(v.witnesses.is_empty());

        let lobe = builtin_curve("flat_lobe", &[]).unwrap();
        let v = satisfies_star(&lobe, StarOptions::for_curve(&lobe)).unwrap();
        assert!(!v.satisfied);
        assert!(v.failing.iter().all(|w| w.component == 0 || w.component == 2));
    }

    #[test]
    fn star_preconditions() {
        let circle = builtin_curve("circle", &[]).unwrap();
        let bad = StarOptions {
            window: 10.0,
            kappa_min: 0.5,
            samples_per_window: 8,
        };
        assert!(satisfies_star(&circle, bad).is_err());
        let bad = StarOptions {
            window: 0.1,
            kappa_min: 0.0,
            samples_per_window: 8,
        };
        assert!(satisfies_star(&circle, bad).is_err());
    }
}
