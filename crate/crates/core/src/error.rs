use nalgebra::Vector2;
use thiserror::Error;

/// Errors produced by field construction, contour assembly, evolution and
/// the certification routines.
#[derive(Debug, Error)]
pub enum SnakeError {
    #[error("invalid field spec: {0}")]
    InvalidSpec(String),

    #[error("PGM parse error at byte {offset}: {message}")]
    PgmParse { offset: usize, message: String },

    #[error("point ({}, {}) is outside the field domain", point.x, point.y)]
    OutOfDomain { point: Vector2<f64> },

    #[error("degenerate polar frame: gradient magnitude {magnitude:e} below floor")]
    DegenerateFrame { magnitude: f64 },

    #[error("no valid sample in region: {total} points, all degenerate or out of domain")]
    NoValidSample { total: usize },

    #[error("size error: {0}")]
    Size(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix not positive definite: {0}")]
    Definiteness(String),

    #[error("contour point {index} left the field domain at iteration {iteration}")]
    DomainExit { iteration: usize, index: usize },

    #[error("evolution diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("degenerate contour: {0}")]
    DegenerateContour(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("evolution failed at iteration {iteration}: {source}")]
    Evolution {
        iteration: usize,
        #[source]
        source: Box<SnakeError>,
    },
}

pub type Result<T> = std::result::Result<T, SnakeError>;
