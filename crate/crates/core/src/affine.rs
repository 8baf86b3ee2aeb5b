//! Affine maps of the plane conjugating two distance-squared mappings whose
//! anchors lie on one line.
//!
//! For `p = (p1, p2)` and `p̃ = (p1 + λ1 v, p1 + λ2 v)` with `v = p2 - p1`,
//! `H = H4 ∘ H3 ∘ H2 ∘ H1` satisfies `H ∘ D_p = D_p̃` where
//!
//! * `H1(X1, X2) = (X1, X1 - X2)`,
//! * `H2(X1, X2) = (X1, X2 - c1)` with `c1 = |p1|^2 - |p2|^2`,
//! * `H3(X1, X2) = (X1 - λ1 X2, X1 - λ2 X2)`, leaving constant terms
//!   `d1 = d2 = |p1|^2`,
//! * `H4(X1, X2) = (X1 - d1', X2 - d2')` with `di' = |p1|^2 - |p̃i|^2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsq::{dsq_map_eval, AnchorPair};
use crate::error::{Error, Result};
use crate::geom::Vec2;

const COLLINEAR_REL: f64 = 1e-9;
const MIN_LAMBDA_GAP: f64 = 1e-12;
const VERIFY_SEED: u64 = 0x5eed_0001;

/// The line `base + s * dir`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParam {
    pub base: Vec2,
    pub dir: Vec2,
}

impl LineParam {
    pub fn through(pair: &AnchorPair) -> Result<Self> {
        let dir = pair.p2 - pair.p1;
        if !(dir.norm() > 0.0) {
            return Err(Error::DegeneratePair("p1 = p2 spans no line".into()));
        }
        Ok(LineParam { base: pair.p1, dir })
    }

    pub fn at(&self, s: f64) -> Vec2 {
        self.base + s * self.dir
    }

    /// Coordinate of the orthogonal projection of `x` onto the line.
    pub fn coordinate(&self, x: Vec2) -> f64 {
        (x - self.base).dot(self.dir) / self.dir.norm_sq()
    }

    pub fn distance(&self, x: Vec2) -> f64 {
        (x - self.base).cross(self.dir).abs() / self.dir.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugatorFactors {
    pub c1: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub d1: f64,
    pub d2: f64,
    pub d1p: f64,
    pub d2p: f64,
}

/// `X ↦ linear · X + offset`, `linear` row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap2 {
    pub linear: [[f64; 2]; 2],
    pub offset: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<ConjugatorFactors>,
}

impl AffineMap2 {
    pub const IDENTITY: AffineMap2 = AffineMap2 {
        linear: [[1.0, 0.0], [0.0, 1.0]],
        offset: Vec2::ZERO,
        factors: None,
    };

    pub fn new(linear: [[f64; 2]; 2], offset: Vec2) -> Self {
        AffineMap2 {
            linear,
            offset,
            factors: None,
        }
    }

    pub fn det(&self) -> f64 {
        let m = self.linear;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, x: Vec2) -> Vec2 {
        let m = self.linear;
        Vec2::new(
            m[0][0] * x.x + m[0][1] * x.y + self.offset.x,
            m[1][0] * x.x + m[1][1] * x.y + self.offset.y,
        )
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap2) -> AffineMap2 {
        let (a, b) = (self.linear, inner.linear);
        let mut linear = [[0.0; 2]; 2];
        for (i, row) in linear.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        let shifted = self.apply(inner.offset);
        AffineMap2::new(linear, shifted)
    }

    pub fn inverse(&self) -> Result<AffineMap2> {
        let det = self.det();
        if !(det.abs() > 0.0) || !det.is_finite() {
            return Err(Error::Precondition("affine map is not invertible".into()));
        }
        let m = self.linear;
        let linear = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
        let inv = AffineMap2::new(linear, Vec2::ZERO);
        let back = inv.apply(self.offset);
        Ok(AffineMap2::new(linear, -1.0 * back))
    }
}

/// `λi` with `p̃i = p1 + λi (p2 - p1)`.
pub fn lambda_coefficients(p: &AnchorPair, pt: &AnchorPair) -> Result<(f64, f64)> {
    let line = LineParam::through(p)?;
    if pt.is_degenerate() {
        return Err(Error::DegeneratePair("target anchors coincide".into()));
    }
    let tolerance = COLLINEAR_REL * (1.0 + line.dir.norm());
    for q in [pt.p1, pt.p2] {
        let distance = line.distance(q);
        if !(distance <= tolerance) {
            return Err(Error::NotCollinear { distance, tolerance });
        }
    }
    let l1 = line.coordinate(pt.p1);
    let l2 = line.coordinate(pt.p2);
    if !((l1 - l2).abs() >= MIN_LAMBDA_GAP) {
        return Err(Error::DegeneratePair(format!(
            "line coordinates {l1} and {l2} of the target anchors are too close"
        )));
    }
    Ok((l1, l2))
}

/// Affine `H` with `H ∘ D_p = D_p̃` for collinear non-degenerate pairs.
pub fn build_conjugator(p: &AnchorPair, pt: &AnchorPair) -> Result<AffineMap2> {
    let (l1, l2) = lambda_coefficients(p, pt)?;
    let n1 = p.p1.norm_sq();
    let c1 = n1 - p.p2.norm_sq();
    let (d1, d2) = (n1, n1);
    let d1p = d1 - pt.p1.norm_sq();
    let d2p = d2 - pt.p2.norm_sq();
    // H3 · H1 applied after the translations of H2 and before those of H4
    let linear = [[1.0 - l1, l1], [1.0 - l2, l2]];
    let offset = Vec2::new(l1 * c1 - d1p, l2 * c1 - d2p);
    Ok(AffineMap2 {
        linear,
        offset,
        factors: Some(ConjugatorFactors {
            c1,
            lambda1: l1,
            lambda2: l2,
            d1,
            d2,
            d1p,
            d2p,
        }),
    })
}

/// Largest `|H(D_p(x)) - D_p̃(x)|` over `n_samples` uniform points of
/// `[-half_width, half_width]^2` (fixed sample stream).
pub fn verify_conjugation(h: &AffineMap2, p: &AnchorPair, pt: &AnchorPair, n_samples: usize, half_width: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    (0..n_samples)
        .map(|_| {
            let x = Vec2::new(
                rng.random_range(-half_width..=half_width),
                rng.random_range(-half_width..=half_width),
            );
            (h.apply(dsq_map_eval(p, x)) - dsq_map_eval(pt, x)).norm()
        })
        .fold(0.0, f64::max)
}
