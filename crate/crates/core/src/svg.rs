//! Static SVG renders of reports: the source curve with anchors and
//! singular points, and for composition results the image curve with its
//! double points.

use std::fmt::Write as _;
use std::path::Path;

use crate::crossing::CompositionReport;
use crate::curve::{Curve, CurveLoc};
use crate::density::DensityGrid;
use crate::dsq::{AnchorPair, Composition};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::report::{ReportResult, RunReport};

const PANEL: f64 = 420.0;
const PAD: f64 = 24.0;
const SAMPLES: usize = 600;

struct Frame {
    lo: Vec2,
    scale: f64,
    x0: f64,
}

impl Frame {
    fn fit(points: &[Vec2], x0: f64) -> Self {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points.iter().filter(|p| p.is_finite()) {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.is_finite() {
            lo = Vec2::new(-1.0, -1.0);
            hi = Vec2::new(1.0, 1.0);
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
        let scale = (PANEL - 2.0 * PAD) / span;
        let centre = 0.5 * (lo + hi);
        let lo = centre - (0.5 * span) * Vec2::new(1.0, 1.0);
        Frame { lo, scale, x0 }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        (
            self.x0 + PAD + (p.x - self.lo.x) * self.scale,
            PANEL - PAD - (p.y - self.lo.y) * self.scale,
        )
    }
}

fn sample_components(f: impl Fn(usize, f64) -> Vec2, curve: &Curve) -> Vec<Vec<Vec2>> {
    curve
        .components()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (lo, hi) = c.working();
            (0..=SAMPLES)
                .map(|k| f(i, lo + (hi - lo) * k as f64 / SAMPLES as f64))
                .collect()
        })
        .collect()
}

struct Canvas {
    body: String,
    width: f64,
}

impl Canvas {
    fn polyline(&mut self, frame: &Frame, pts: &[Vec2], stroke: &str) {
        let coords: Vec<String> = pts
            .iter()
            .filter(|p| p.is_finite())
            .map(|&p| {
                let (x, y) = frame.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{stroke}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
    }

    fn dot(&mut self, frame: &Frame, p: Vec2, fill: &str, label: Option<&str>) {
        let (x, y) = frame.map(p);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{fill}"/>"#);
        if let Some(l) = label {
            let _ = writeln!(
                self.body,
                r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{fill}">{l}</text>"#,
                x + 6.0,
                y - 6.0
            );
        }
    }

    fn cross(&mut self, frame: &Frame, p: Vec2, stroke: &str) {
        let (x, y) = frame.map(p);
        let _ = writeln!(
            self.body,
            r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{stroke}" stroke-width="2" class="singular"/>"#,
            x - 5.0,
            y - 5.0,
            x + 5.0,
            y + 5.0,
            x - 5.0,
            y + 5.0,
            x + 5.0,
            y - 5.0
        );
    }

    fn title(&mut self, x0: f64, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="16" font-size="13" font-family="sans-serif">{text}</text>"#,
            x0 + PAD
        );
    }

    fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = PANEL
        )
    }
}

fn curve_panel(canvas: &mut Canvas, curve: &Curve, anchors: Option<AnchorPair>, marks: &[CurveLoc], extra: &[Vec2]) {
    let comps = sample_components(|i, t| curve.components()[i].point(t), curve);
    let mut all: Vec<Vec2> = comps.iter().flatten().copied().collect();
    all.extend(anchors.iter().flat_map(|a| [a.p1, a.p2]));
    all.extend_from_slice(extra);
    let frame = Frame::fit(&all, 0.0);
    canvas.title(0.0, "source curve");
    for pts in &comps {
        canvas.polyline(&frame, pts, "black");
    }
    if let Some(a) = anchors {
        canvas.dot(&frame, a.p1, "crimson", Some("p1"));
        canvas.dot(&frame, a.p2, "crimson", Some("p2"));
    }
    for &loc in marks {
        canvas.cross(&frame, curve.components()[loc.component].point(loc.t), "royalblue");
    }
}

fn image_panel(canvas: &mut Canvas, curve: &Curve, report: &CompositionReport) {
    let comp = Composition::new(curve, report.pair);
    let comps = sample_components(
        |i, t| comp.eval(CurveLoc::new(i, t)).unwrap_or(Vec2::new(f64::NAN, f64::NAN)),
        curve,
    );
    let all: Vec<Vec2> = comps.iter().flatten().copied().collect();
    let frame = Frame::fit(&all, PANEL);
    canvas.title(PANEL, "image under the distance-squared map");
    for pts in &comps {
        canvas.polyline(&frame, pts, "dimgray");
    }
    for dp in &report.double_points {
        canvas.dot(&frame, dp.image, "seagreen", None);
    }
    for s in &report.singular_points {
        if let Ok(p) = comp.eval(s.loc) {
            canvas.cross(&frame, p, "royalblue");
        }
    }
}

fn grid_panel(canvas: &mut Canvas, grid: &DensityGrid) {
    canvas.title(PANEL, &format!("verdicts (pass fraction {:.3})", grid.pass_fraction));
    let cell = (PANEL - 2.0 * PAD) / grid.n as f64;
    for (i, row) in grid.verdicts.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let _ = writeln!(
                canvas.body,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{}"/>"#,
                PANEL + PAD + j as f64 * cell,
                PANEL - PAD - (i + 1) as f64 * cell,
                if v { "#9ad29a" } else { "#e07a7a" }
            );
        }
    }
}

/// SVG text for a curve-bearing report.
pub fn render_svg_string(report: &RunReport) -> Result<String> {
    let curve = report
        .rebuild_curve()?
        .ok_or_else(|| Error::Precondition("report carries no curve to render".into()))?;
    let mut canvas = Canvas {
        body: String::new(),
        width: PANEL,
    };
    match &report.result {
        ReportResult::Composition(r) => {
            canvas.width = 2.0 * PANEL;
            let marks: Vec<CurveLoc> = r.singular_points.iter().map(|s| s.loc).collect();
            curve_panel(&mut canvas, &curve, Some(r.pair), &marks, &[]);
            image_panel(&mut canvas, &curve, r);
        }
        ReportResult::Search(s) => {
            canvas.width = 2.0 * PANEL;
            curve_panel(&mut canvas, &curve, Some(s.p_tilde), &[], &[s.p_prime.p1, s.p_prime.p2]);
            image_panel(&mut canvas, &curve, &s.certificate);
        }
        ReportResult::Density { grid, .. } => {
            canvas.width = 2.0 * PANEL;
            curve_panel(&mut canvas, &curve, None, &[], &[]);
            grid_panel(&mut canvas, grid);
        }
        ReportResult::CaseStudy(c) => {
            let first = c.samples.first();
            let marks: Vec<CurveLoc> = first
                .map(|s| s.singular_points.iter().map(|p| p.loc).collect())
                .unwrap_or_default();
            curve_panel(&mut canvas, &curve, first.map(|s| s.pair), &marks, &[]);
        }
        ReportResult::Star(v) => {
            let marks: Vec<CurveLoc> = v
                .failing
                .iter()
                .map(|w| CurveLoc::new(w.component, 0.5 * (w.lo + w.hi)))
                .collect();
            curve_panel(&mut canvas, &curve, None, &marks, &[]);
        }
        ReportResult::SearchFailure(_) | ReportResult::AffineCheck(_) => {
            curve_panel(&mut canvas, &curve, None, &[], &[]);
        }
    }
    Ok(canvas.finish())
}

pub fn render_svg(report: &RunReport, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg_string(report)?)?;
    Ok(())
}
