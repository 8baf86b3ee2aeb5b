//! The single JSON document written by every command.

use serde::{Deserialize, Serialize};

use crate::affine::AffineMap2;
use crate::crossing::CompositionReport;
use crate::curve::{Curve, CurveSpec};
use crate::density::{CaseStudyResult, DensityGrid};
use crate::diffgeo::StarVerdict;
use crate::dsq::AnchorPair;
use crate::error::Result;
use crate::search::{SearchFailure, SearchResult};
use crate::tol::Tolerances;

pub const SCHEMA: &str = "dsq-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineCheck {
    pub p: AnchorPair,
    pub p_tilde: AnchorPair,
    pub conjugator: AffineMap2,
    pub samples: usize,
    pub half_width: f64,
    pub residual: f64,
    pub threshold: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum ReportResult {
    Composition(CompositionReport),
    Search(Box<SearchResult>),
    SearchFailure(SearchFailure),
    Density { grid: DensityGrid, min_pass_fraction: f64 },
    CaseStudy(CaseStudyResult),
    Star(StarVerdict),
    AffineCheck(AffineCheck),
}

impl ReportResult {
    /// The analytical verdict that decides the exit status.
    pub fn passes(&self) -> bool {
        match self {
            ReportResult::Composition(r) => r.passes,
            ReportResult::Search(r) => r.certificate.passes,
            ReportResult::SearchFailure(_) => false,
            ReportResult::Density {
                grid,
                min_pass_fraction,
            } => grid.pass_fraction >= *min_pass_fraction,
            ReportResult::CaseStudy(c) => c.agrees,
            ReportResult::Star(v) => v.satisfied,
            ReportResult::AffineCheck(a) => a.passes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub tool_version: String,
    pub command: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSpec>,
    pub tolerances: Tolerances,
    pub result: ReportResult,
    /// Omitted unless requested, keeping reports byte-reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl RunReport {
    pub fn new(command: Vec<String>, curve: Option<&Curve>, tolerances: Tolerances, result: ReportResult) -> Self {
        RunReport {
            schema: SCHEMA.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            curve_digest: curve.map(Curve::digest),
            curve: curve.map(|c| c.spec().clone()),
            tolerances,
            result,
            wall_time_ms: None,
        }
    }

    pub fn passes(&self) -> bool {
        self.result.passes()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Rebuilds the curve the report was computed on.
    pub fn rebuild_curve(&self) -> Result<Option<Curve>> {
        self.curve.clone().map(Curve::from_spec).transpose()
    }
}
