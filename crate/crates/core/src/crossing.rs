//! Normal-crossings analysis of `F = D_p ∘ γ`.
//!
//! Double points are located by subdividing the space of parameter pairs.
//! A box is discarded when `|F(c1) - F(c2)|` at its center exceeds what the
//! derivative bound allows over the box; derivative bounds come from sampled
//! maxima of `|F'|` (inflated by a safety factor and a second-derivative term),
//! so the discard test is heuristic rather than interval-certified.
//!
//! Surviving leaf boxes are grouped into connected clusters and refined by
//! Newton's method on `F(q1) - F(q2) = 0`. A cluster whose converged
//! solutions spread along a continuum is reported as a non-isolated
//! coincidence family; a cluster that still survives at the maximal depth
//! without any converged solution is reported as unresolved.

use std::collections::{HashSet, VecDeque};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveComponent, CurveLoc};
use crate::dsq::{find_singular_points, AnchorPair, Composition, SingularPoint};
use crate::geom::Vec2;
use crate::tol::Tolerances;

const MAX_BOXES_PER_LEVEL: usize = 1 << 18;
const NEWTON_ITERS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Transverse,
    Tangential,
    /// One of the two differentials vanishes; the point is a singular point
    /// of the composition rather than a crossing.
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublePoint {
    pub q1: CurveLoc,
    pub q2: CurveLoc,
    pub image: Vec2,
    /// `|F(q1) - F(q2)|` after refinement.
    pub residual: f64,
    pub dq1: Vec2,
    pub dq2: Vec2,
    /// `det [dF(q1) | dF(q2)]`.
    pub span_det: f64,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceFamily {
    pub component_a: usize,
    pub component_b: usize,
    pub t1_range: [f64; 2],
    pub t2_range: [f64; 2],
    /// Distinct converged coincidences found along the family.
    pub solutions: usize,
    /// A few representative coincident pairs.
    pub samples: Vec<(CurveLoc, CurveLoc)>,
    /// Largest `|span_det| / (|dF1| |dF2|)` over the converged samples.
    pub max_span_ratio: f64,
    pub tangential: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedCell {
    pub component_a: usize,
    pub component_b: usize,
    pub t1_range: [f64; 2],
    pub t2_range: [f64; 2],
    pub boxes: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossingScan {
    pub double_points: Vec<DoublePoint>,
    pub families: Vec<CoincidenceFamily>,
    pub unresolved: Vec<UnresolvedCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    SingularPoints,
    TangentialDoublePoints,
    NonIsolatedFamily,
    MultiplicityAboveTwo,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub pair: AnchorPair,
    pub degenerate_pair: bool,
    pub is_immersion: bool,
    pub singular_points: Vec<SingularPoint>,
    pub double_points: Vec<DoublePoint>,
    pub families: Vec<CoincidenceFamily>,
    pub unresolved: Vec<UnresolvedCell>,
    pub max_multiplicity: usize,
    pub has_normal_crossings: bool,
    pub passes: bool,
    pub reasons: Vec<FailureReason>,
    pub tolerances: Tolerances,
}

/// Range-maximum table of sampled `|F'|` along one component.
struct DerivTable {
    lo: f64,
    h: f64,
    levels: Vec<Vec<f64>>,
    slack: f64,
}

impl DerivTable {
    fn new(comp: &Composition<'_>, c: &CurveComponent, n: usize) -> Self {
        let (lo, hi) = c.working();
        let h = (hi - lo) / n as f64;
        let mut d2max = 0.0f64;
        let base: Vec<f64> = (0..=n)
            .map(|k| {
                let t = lo + h * k as f64;
                d2max = d2max.max(comp.d2_on(c, t).norm());
                comp.d1_on(c, t).norm()
            })
            .collect();
        let mut levels = vec![base];
        let mut span = 1;
        while 2 * span <= levels[0].len() {
            let prev = levels.last().unwrap();
            let next: Vec<f64> = (0..prev.len() - span).map(|i| prev[i].max(prev[i + span])).collect();
            levels.push(next);
            span *= 2;
        }
        DerivTable {
            lo,
            h,
            levels,
            slack: 0.5 * h * d2max,
        }
    }

    fn range_max(&self, u: f64, v: f64) -> f64 {
        let n = self.levels[0].len() - 1;
        let i = (((u - self.lo) / self.h).floor().max(0.0) as usize).min(n);
        let j = (((v - self.lo) / self.h).ceil().max(0.0) as usize).min(n);
        let (i, j) = (i.min(j), i.max(j));
        let len = j - i + 1;
        let k = usize::BITS as usize - 1 - len.leading_zeros() as usize;
        let row = &self.levels[k];
        row[i].max(row[j + 1 - (1 << k)])
    }
}

struct Scanner<'a, 'c> {
    comp: &'a Composition<'c>,
    tol: &'a Tolerances,
    tables: Vec<DerivTable>,
    leaf_depth: u32,
}

#[derive(Clone, Copy)]
struct PairGeom<'a> {
    a: usize,
    b: usize,
    ca: &'a CurveComponent,
    cb: &'a CurveComponent,
    wa: (f64, f64),
    wb: (f64, f64),
    /// Minimum separation counted as two points: component radius for a == b,
    /// larger of the two radii for junction exclusions.
    radius: f64,
    junctions: &'a [(f64, f64)],
}

impl PairGeom<'_> {
    fn box_bounds(&self, level: u32, i: u64, j: u64) -> ([f64; 2], [f64; 2]) {
        let scale = (1u64 << level) as f64;
        let la = (self.wa.1 - self.wa.0) / scale;
        let lb = (self.wb.1 - self.wb.0) / scale;
        (
            [self.wa.0 + la * i as f64, self.wa.0 + la * (i + 1) as f64],
            [self.wb.0 + lb * j as f64, self.wb.0 + lb * (j + 1) as f64],
        )
    }

    fn box_excluded(&self, r1: [f64; 2], r2: [f64; 2]) -> bool {
        if self.a == self.b && r2[1] - r1[0] <= self.radius {
            return true;
        }
        self.junctions.iter().any(|&(ea, eb)| {
            let m1 = (r1[0] - ea).abs().max((r1[1] - ea).abs());
            let m2 = (r2[0] - eb).abs().max((r2[1] - eb).abs());
            m1 + m2 < self.radius
        })
    }

    fn point_valid(&self, t1: f64, t2: f64) -> bool {
        if self.a == self.b && t2 - t1 <= self.radius {
            return false;
        }
        !self
            .junctions
            .iter()
            .any(|&(ea, eb)| (t1 - ea).abs() + (t2 - eb).abs() < self.radius)
    }
}

impl<'a, 'c> Scanner<'a, 'c> {
    fn new(comp: &'a Composition<'c>, tol: &'a Tolerances) -> Self {
        let tables = comp
            .curve
            .components()
            .iter()
            .map(|c| DerivTable::new(comp, c, tol.root_grid.max(16)))
            .collect();
        // leaf boxes no wider than a quarter of the cluster radius
        let leaf_depth = (4.0 / tol.cluster_radius_rel).log2().ceil().max(1.0) as u32;
        Scanner {
            comp,
            tol,
            tables,
            leaf_depth,
        }
    }

    fn lipschitz(&self, comp_idx: usize, r: [f64; 2]) -> f64 {
        let t = &self.tables[comp_idx];
        self.tol.lipschitz_safety * t.range_max(r[0], r[1]) + t.slack
    }

    fn discard(&self, g: &PairGeom<'_>, r1: [f64; 2], r2: [f64; 2]) -> bool {
        if g.box_excluded(r1, r2) {
            return true;
        }
        let c1 = 0.5 * (r1[0] + r1[1]);
        let c2 = 0.5 * (r2[0] + r2[1]);
        let gap = (self.comp.eval_on(g.ca, c1) - self.comp.eval_on(g.cb, c2)).norm();
        let bound = self.lipschitz(g.a, r1) * 0.5 * (r1[1] - r1[0]) + self.lipschitz(g.b, r2) * 0.5 * (r2[1] - r2[0]);
        gap > bound
    }

    fn scan(&self) -> CrossingScan {
        let comps = self.comp.curve.components();
        let mut out = CrossingScan::default();
        for a in 0..comps.len() {
            for b in a..comps.len() {
                let junctions: Vec<(f64, f64)> = self
                    .comp
                    .curve
                    .junctions()
                    .iter()
                    .filter_map(|j| {
                        if j.a == a && j.b == b {
                            Some((j.a_end, j.b_end))
                        } else if j.a == b && j.b == a {
                            Some((j.b_end, j.a_end))
                        } else {
                            None
                        }
                    })
                    .collect();
                let ra = self.tol.cluster_radius_rel * comps[a].domain.len();
                let rb = self.tol.cluster_radius_rel * comps[b].domain.len();
                let geom = PairGeom {
                    a,
                    b,
                    ca: &comps[a],
                    cb: &comps[b],
                    wa: comps[a].working(),
                    wb: comps[b].working(),
                    radius: if a == b { ra } else { ra.max(rb) },
                    junctions: &junctions,
                };
                self.scan_pair(&geom, &mut out);
            }
        }
        let radius = |c: usize| self.tol.cluster_radius_rel * comps[c].domain.len();
        let mut merged: Vec<DoublePoint> = Vec::new();
        for dp in out.double_points {
            let dup = merged.iter().any(|m| {
                m.q1.component == dp.q1.component
                    && m.q2.component == dp.q2.component
                    && (m.q1.t - dp.q1.t).abs() < radius(dp.q1.component)
                    && (m.q2.t - dp.q2.t).abs() < radius(dp.q2.component)
            });
            if !dup {
                merged.push(dp);
            }
        }
        merged.sort_by(|x, y| {
            (x.q1.component, x.q2.component)
                .cmp(&(y.q1.component, y.q2.component))
                .then(x.q1.t.total_cmp(&y.q1.t))
                .then(x.q2.t.total_cmp(&y.q2.t))
        });
        out.double_points = merged;
        out
    }

    fn scan_pair(&self, g: &PairGeom<'_>, out: &mut CrossingScan) {
        let mut boxes: Vec<(u64, u64)> = vec![(0, 0)];
        for level in 0..=self.leaf_depth {
            boxes.retain(|&(i, j)| {
                let (r1, r2) = g.box_bounds(level, i, j);
                !self.discard(g, r1, r2)
            });
            if boxes.is_empty() {
                return;
            }
            if boxes.len() > MAX_BOXES_PER_LEVEL {
                out.unresolved.push(self.unresolved_cell(g, level, &boxes, "saturated"));
                return;
            }
            if level < self.leaf_depth {
                boxes = children(&boxes);
            }
        }
        for cluster in clusters(boxes) {
            self.resolve_cluster(g, cluster, out);
        }
    }

    fn unresolved_cell(&self, g: &PairGeom<'_>, level: u32, boxes: &[(u64, u64)], reason: &str) -> UnresolvedCell {
        let mut t1 = [f64::INFINITY, f64::NEG_INFINITY];
        let mut t2 = [f64::INFINITY, f64::NEG_INFINITY];
        for &(i, j) in boxes {
            let (r1, r2) = g.box_bounds(level, i, j);
            t1 = [t1[0].min(r1[0]), t1[1].max(r1[1])];
            t2 = [t2[0].min(r2[0]), t2[1].max(r2[1])];
        }
        UnresolvedCell {
            component_a: g.a,
            component_b: g.b,
            t1_range: t1,
            t2_range: t2,
            boxes: boxes.len(),
            reason: reason.to_string(),
        }
    }

    fn newton_from(&self, g: &PairGeom<'_>, level: u32, seeds: &[(u64, u64)]) -> Vec<(f64, f64)> {
        let mut sols = Vec::new();
        for &(i, j) in seeds {
            let (r1, r2) = g.box_bounds(level, i, j);
            let start = (0.5 * (r1[0] + r1[1]), 0.5 * (r2[0] + r2[1]));
            if let Some((mut t1, mut t2)) = self.newton(g, start) {
                if g.a == g.b && t2 < t1 {
                    std::mem::swap(&mut t1, &mut t2);
                }
                if g.point_valid(t1, t2) {
                    sols.push((t1, t2));
                }
            }
        }
        sols
    }

    fn newton(&self, g: &PairGeom<'_>, start: (f64, f64)) -> Option<(f64, f64)> {
        let (mut t1, mut t2) = start;
        let clamp1 = |t: f64| t.clamp(g.wa.0, g.wa.1);
        let clamp2 = |t: f64| t.clamp(g.wb.0, g.wb.1);
        let resid = |t1: f64, t2: f64| self.comp.eval_on(g.ca, t1) - self.comp.eval_on(g.cb, t2);
        let mut r = resid(t1, t2);
        for _ in 0..NEWTON_ITERS {
            let target = self.tol.image * (1.0 + self.comp.eval_on(g.ca, t1).norm());
            if r.norm() <= target {
                return Some((t1, t2));
            }
            let u = self.comp.d1_on(g.ca, t1);
            let v = self.comp.d1_on(g.cb, t2);
            let jac = Matrix2::new(u.x, -v.x, u.y, -v.y);
            let svd = jac.svd(true, true);
            let eps = 1e-12 * svd.singular_values.max();
            let pinv = svd.pseudo_inverse(eps.max(f64::MIN_POSITIVE)).ok()?;
            let step = pinv * nalgebra::Vector2::new(r.x, r.y);
            let mut alpha = 1.0;
            let mut improved = false;
            while alpha > 1e-6 {
                let n1 = clamp1(t1 - alpha * step.x);
                let n2 = clamp2(t2 - alpha * step.y);
                let nr = resid(n1, n2);
                if nr.norm() < r.norm() {
                    t1 = n1;
                    t2 = n2;
                    r = nr;
                    improved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !improved {
                break;
            }
        }
        let target = self.tol.image * (1.0 + self.comp.eval_on(g.ca, t1).norm());
        (r.norm() <= target).then_some((t1, t2))
    }

    fn resolve_cluster(&self, g: &PairGeom<'_>, cluster: Vec<(u64, u64)>, out: &mut CrossingScan) {
        let level = self.leaf_depth;
        let scale = (1u64 << level) as f64;
        let wa = (g.wa.1 - g.wa.0) / scale;
        let wb = (g.wb.1 - g.wb.0) / scale;
        let seeds = spread_pick(&cluster, self.tol.seeds_per_cluster);
        let sols = dedupe(self.newton_from(g, level, &seeds), 2.0 * wa, 2.0 * wb);

        let spread = sols
            .iter()
            .flat_map(|x| {
                sols.iter()
                    .map(move |y| ((x.0 - y.0).abs() / wa).max((x.1 - y.1).abs() / wb))
            })
            .fold(0.0, f64::max);
        if sols.len() >= 3 && spread > 8.0 {
            out.families.push(self.family(g, &sols));
            return;
        }
        if !sols.is_empty() {
            for (t1, t2) in sols {
                out.double_points.push(self.double_point(g, t1, t2));
            }
            return;
        }

        // nothing converged: keep subdividing until the cluster dissolves
        let mut boxes = cluster;
        let mut lvl = level;
        for _ in 0..self.tol.extra_depth {
            boxes = children(&boxes);
            lvl += 1;
            boxes.retain(|&(i, j)| {
                let (r1, r2) = g.box_bounds(lvl, i, j);
                !self.discard(g, r1, r2)
            });
            if boxes.is_empty() {
                return;
            }
            if boxes.len() > MAX_BOXES_PER_LEVEL {
                out.unresolved.push(self.unresolved_cell(g, lvl, &boxes, "saturated"));
                return;
            }
        }
        let seeds = spread_pick(&boxes, self.tol.seeds_per_cluster);
        let sols = dedupe(self.newton_from(g, lvl, &seeds), 2.0 * wa, 2.0 * wb);
        if sols.is_empty() {
            out.unresolved
                .push(self.unresolved_cell(g, lvl, &boxes, "no convergence"));
        } else {
            for (t1, t2) in sols {
                out.double_points.push(self.double_point(g, t1, t2));
            }
        }
    }

    fn double_point(&self, g: &PairGeom<'_>, t1: f64, t2: f64) -> DoublePoint {
        let f1 = self.comp.eval_on(g.ca, t1);
        let f2 = self.comp.eval_on(g.cb, t2);
        let dq1 = self.comp.d1_on(g.ca, t1);
        let dq2 = self.comp.d1_on(g.cb, t2);
        let dp = DoublePoint {
            q1: CurveLoc::new(g.a, t1),
            q2: CurveLoc::new(g.b, t2),
            image: 0.5 * (f1 + f2),
            residual: (f1 - f2).norm(),
            dq1,
            dq2,
            span_det: dq1.cross(dq2),
            classification: Classification::Transverse,
        };
        classify_double_point(dp, self.tol)
    }

    fn family(&self, g: &PairGeom<'_>, sols: &[(f64, f64)]) -> CoincidenceFamily {
        let mut sorted = sols.to_vec();
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut max_ratio = 0.0f64;
        for &(t1, t2) in &sorted {
            let d1 = self.comp.d1_on(g.ca, t1);
            let d2 = self.comp.d1_on(g.cb, t2);
            let denom = d1.norm() * d2.norm();
            if denom > 0.0 {
                max_ratio = max_ratio.max(d1.cross(d2).abs() / denom);
            }
        }
        let pick = [0, sorted.len() / 2, sorted.len() - 1];
        let samples = pick
            .iter()
            .map(|&k| (CurveLoc::new(g.a, sorted[k].0), CurveLoc::new(g.b, sorted[k].1)))
            .collect();
        let t1 = sorted.iter().map(|s| s.0);
        let t2 = sorted.iter().map(|s| s.1);
        CoincidenceFamily {
            component_a: g.a,
            component_b: g.b,
            t1_range: [
                t1.clone().fold(f64::INFINITY, f64::min),
                t1.fold(f64::NEG_INFINITY, f64::max),
            ],
            t2_range: [
                t2.clone().fold(f64::INFINITY, f64::min),
                t2.fold(f64::NEG_INFINITY, f64::max),
            ],
            solutions: sorted.len(),
            samples,
            max_span_ratio: max_ratio,
            tangential: max_ratio <= self.tol.transverse.sqrt(),
        }
    }
}

fn children(boxes: &[(u64, u64)]) -> Vec<(u64, u64)> {
    boxes
        .iter()
        .flat_map(|&(i, j)| {
            [
                (2 * i, 2 * j),
                (2 * i + 1, 2 * j),
                (2 * i, 2 * j + 1),
                (2 * i + 1, 2 * j + 1),
            ]
        })
        .collect()
}

/// 8-connected components, each sorted, in order of their smallest box.
fn clusters(mut boxes: Vec<(u64, u64)>) -> Vec<Vec<(u64, u64)>> {
    boxes.sort_unstable();
    let members: HashSet<(u64, u64)> = boxes.iter().copied().collect();
    let mut seen: HashSet<(u64, u64)> = HashSet::with_capacity(boxes.len());
    let mut out = Vec::new();
    for &start in &boxes {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some((i, j)) = queue.pop_front() {
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 {
                        continue;
                    }
                    let n = (ni as u64, nj as u64);
                    if members.contains(&n) && seen.insert(n) {
                        comp.push(n);
                        queue.push_back(n);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn spread_pick<T: Copy>(items: &[T], cap: usize) -> Vec<T> {
    if items.len() <= cap {
        return items.to_vec();
    }
    (0..cap)
        .map(|k| items[k * (items.len() - 1) / (cap - 1).max(1)])
        .collect()
}

fn dedupe(sols: Vec<(f64, f64)>, r1: f64, r2: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for s in sols {
        if !out.iter().any(|o| (o.0 - s.0).abs() <= r1 && (o.1 - s.1).abs() <= r2) {
            out.push(s);
        }
    }
    out
}

/// Parameter pairs `q1 ≠ q2` with `F(q1) = F(q2)`, plus non-isolated
/// coincidence families and unresolved regions.
pub fn find_double_points(comp: &Composition<'_>, tol: &Tolerances) -> CrossingScan {
    Scanner::new(comp, tol).scan()
}

/// Transverse iff `|span_det| > tol.transverse * |dF(q1)| * |dF(q2)|`; a
/// vanishing differential defers to the immersion verdict.
pub fn classify_double_point(mut dp: DoublePoint, tol: &Tolerances) -> DoublePoint {
    let (n1, n2) = (dp.dq1.norm(), dp.dq2.norm());
    let tiny = 4.0 * tol.singular_accept;
    dp.classification = if n1 <= tiny || n2 <= tiny {
        Classification::Singular
    } else if dp.span_det.abs() > tol.transverse * n1 * n2 {
        Classification::Transverse
    } else {
        Classification::Tangential
    };
    dp
}

/// Number of distinct source points over the most crowded image point
/// (1 when there are no double points).
fn max_multiplicity(comp: &Composition<'_>, dps: &[DoublePoint], tol: &Tolerances) -> usize {
    if dps.is_empty() {
        return 1;
    }
    let n = dps.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = 1.0 + dps[i].image.norm();
            if (dps[i].image - dps[j].image).norm() <= tol.multiplicity_image_rel * scale {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let comps = comp.curve.components();
    let mut best = 2;
    for root in 0..n {
        let mut locs: Vec<CurveLoc> = Vec::new();
        for (i, dp) in dps.iter().enumerate() {
            if find(&mut parent, i) != root {
                continue;
            }
            for q in [dp.q1, dp.q2] {
                let r = tol.cluster_radius_rel * comps[q.component].domain.len();
                if !locs.iter().any(|l| l.component == q.component && (l.t - q.t).abs() < r) {
                    locs.push(q);
                }
            }
        }
        best = best.max(locs.len());
    }
    best
}

/// Decides whether `D_p ∘ γ` is an immersion with normal crossings.
pub fn analyze(comp: &Composition<'_>, tol: &Tolerances) -> CompositionReport {
    let singular_points = find_singular_points(comp, tol);
    let scan = find_double_points(comp, tol);
    let max_multiplicity = max_multiplicity(comp, &scan.double_points, tol);
    let is_immersion = singular_points.is_empty();

    let mut reasons = Vec::new();
    if !is_immersion {
        reasons.push(FailureReason::SingularPoints);
    }
    if scan
        .double_points
        .iter()
        .any(|d| d.classification == Classification::Tangential)
        || scan.families.iter().any(|f| f.tangential)
    {
        reasons.push(FailureReason::TangentialDoublePoints);
    }
    if !scan.families.is_empty() {
        reasons.push(FailureReason::NonIsolatedFamily);
    }
    if max_multiplicity > 2 {
        reasons.push(FailureReason::MultiplicityAboveTwo);
    }
    if !scan.unresolved.is_empty() {
        reasons.push(FailureReason::Unresolved);
    }
    let has_normal_crossings = !reasons.iter().any(|r| {
        matches!(
            r,
            FailureReason::TangentialDoublePoints
                | FailureReason::NonIsolatedFamily
                | FailureReason::MultiplicityAboveTwo
                | FailureReason::Unresolved
        )
    });
    CompositionReport {
        pair: comp.pair,
        degenerate_pair: comp.pair.is_degenerate(),
        is_immersion,
        singular_points,
        double_points: scan.double_points,
        families: scan.families,
        unresolved: scan.unresolved,
        max_multiplicity,
        has_normal_crossings,
        passes: reasons.is_empty(),
        reasons,
        tolerances: *tol,
    }
}
