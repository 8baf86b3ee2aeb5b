use serde::{Deserialize, Serialize};

/// Every numerical threshold used by the composition analysis. A copy is
/// embedded in each report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Grid intervals per component for root seeding and derivative tables.
    pub root_grid: usize,
    /// `|g| <` this after refining a root of a dot-product criterion.
    pub singular_refine: f64,
    /// The companion criterion must be below this at a refined root.
    pub singular_accept: f64,
    /// Roots closer than this fraction of the component length are merged.
    pub singular_merge_rel: f64,
    /// Minimum parameter separation of two points of the source, as a
    /// fraction of the component length.
    pub cluster_radius_rel: f64,
    /// Relative residual at which a double point is considered converged.
    pub image: f64,
    /// `|det| > transverse * |dF1| * |dF2|` makes a double point transverse.
    pub transverse: f64,
    /// Factor applied to sampled derivative maxima when discarding boxes.
    pub lipschitz_safety: f64,
    /// Levels of subdivision beyond the leaf level for clusters in which no
    /// double point converged.
    pub extra_depth: u32,
    /// Cap on Newton seeds per surviving cluster.
    pub seeds_per_cluster: usize,
    /// Relative image distance for grouping double points into one image point.
    pub multiplicity_image_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            root_grid: 2048,
            singular_refine: 1e-10,
            singular_accept: 1e-8,
            singular_merge_rel: 1e-7,
            cluster_radius_rel: 1e-3,
            image: 1e-10,
            transverse: 1e-6,
            lipschitz_safety: 1.25,
            extra_depth: 16,
            seeds_per_cluster: 48,
            multiplicity_image_rel: 1e-7,
        }
    }
}

impl Tolerances {
    /// Scales the acceptance thresholds (not grids or depths) by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Tolerances {
            singular_refine: self.singular_refine * factor,
            singular_accept: self.singular_accept * factor,
            image: self.image * factor,
            transverse: self.transverse * factor,
            multiplicity_image_rel: self.multiplicity_image_rel * factor,
            ..*self
        }
    }
}
