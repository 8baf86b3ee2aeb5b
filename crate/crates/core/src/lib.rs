//! Distance-squared mappings composed with plane curves.
//!
//! For an anchor pair `p = (p1, p2)` the map `D_p(x) = (|x - p1|^2, |x - p2|^2)`
//! is composed with a parametrized plane curve `γ`. The crate decides whether
//! `D_p ∘ γ` is an immersion with normal crossings, builds the affine maps
//! relating compositions with collinear anchors, and searches for
//! curve-anchored pairs whose composition passes.

// Negated float comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod cli;
pub mod crossing;
pub mod curve;
pub mod density;
pub mod diffgeo;
pub mod dsq;
pub mod error;
pub mod expr;
pub mod geom;
pub mod report;
pub mod search;
pub mod svg;
pub mod tol;

pub use crossing::{analyze, CompositionReport};
pub use curve::{builtin_curve, load_curve, Curve, CurveLoc};
pub use dsq::{AnchorPair, Composition};
pub use error::{Error, Result};
pub use geom::Vec2;
pub use tol::Tolerances;
