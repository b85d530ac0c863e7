use thiserror::Error;

/// Errors produced by the geometry, coverage, and construction layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty geometry")]
    EmptyGeometry,

    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),

    #[error("degenerate point set: points {0} and {1} coincide")]
    DegeneratePointSet(usize, usize),

    #[error("ring {ring}: {reason} (vertex {vertex})")]
    InvalidRing {
        ring: usize,
        vertex: usize,
        reason: String,
    },

    #[error("ring {ring} self-intersects: edges {edge_a} and {edge_b} cross")]
    SelfIntersection {
        ring: usize,
        edge_a: usize,
        edge_b: usize,
    },

    #[error("ring {ring} (hole {hole}) is not strictly inside the boundary (vertex {vertex})")]
    HoleOutside {
        ring: usize,
        hole: usize,
        vertex: usize,
    },

    #[error("holes {0} and {1} intersect or are nested")]
    HolesOverlap(usize, usize),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("brute-force oracle refuses {0} points (limit 8)")]
    TooManyPoints(usize),

    #[error("coincident triple has no Fermat point")]
    CoincidentTriple,

    #[error("segment prong cover needs n > {min_n_exclusive:.4} (delta_n = {delta:.6} must be < s - delta_n); try n = {hint}")]
    ProngTooCoarse {
        delta: f64,
        min_n_exclusive: f64,
        hint: usize,
    },

    #[error("interval could not be narrowed to tolerance {tol} (best width {width})")]
    ToleranceNotReached { tol: f64, width: f64 },

    #[error("could not construct a certified initial cover: {0}")]
    InitialCover(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Io(String),

    #[error("cancelled")]
    Cancelled,
}

pub type Result<T> = std::result::Result<T, Error>;
