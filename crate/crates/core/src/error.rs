use thiserror::Error;

use crate::SolveStats;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid ring: {0}")]
    InvalidRing(String),

    #[error("point ({x}, {y}) lies outside the outer domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("direction is not a unit vector (|v| = {0})")]
    NotUnit(f64),

    #[error("grid does not resolve the ring: {0}")]
    Unresolved(String),

    #[error("interpolation at ({x}, {y}) touches an undefined node")]
    Undefined { x: f64, y: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver did not converge after {} iterations (update {:.3e})", .stats.iterations, .stats.final_update)]
    NoConvergence { stats: SolveStats },

    #[error("stencil of node ({i}, {j}) reaches an exterior node")]
    StencilConflict { i: usize, j: usize },

    #[error("level {0} is not attained in the field")]
    LevelNotAttained(f64),

    #[error("contour at level {0} is not simple")]
    NonSimpleContour(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
