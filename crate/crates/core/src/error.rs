use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse expression {input:?} at offset {offset}: {message}")]
    Expr {
        input: String,
        offset: usize,
        message: String,
    },

    #[error("malformed curve document: {0}")]
    CurveDocument(String),

    #[error("curve is not immersed: |gamma'| = {speed:e} at component {component}, t = {t}")]
    Immersion { component: usize, t: f64, speed: f64 },

    #[error("parameter t = {t} is outside component {component} domain [{lo}, {hi}]")]
    OutOfDomain { component: usize, t: f64, lo: f64, hi: f64 },

    #[error("no component {component} (curve has {count})")]
    NoSuchComponent { component: usize, count: usize },

    #[error("unknown builtin curve {0:?}")]
    UnknownCurve(String),

    #[error("invalid parameters for {name}: {reason}")]
    InvalidParams { name: String, reason: String },

    #[error("unsupported derivative order {0} (expected 1 or 2)")]
    UnsupportedOrder(u8),

    #[error("degenerate anchor pair: {0}")]
    DegeneratePair(String),

    #[error("anchors are not collinear: distance {distance:e} exceeds {tolerance:e}")]
    NotCollinear { distance: f64, tolerance: f64 },

    #[error("{0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
