use std::io;

/// Errors produced anywhere in the pipeline.
///
/// The CLI maps [`TntError::Spec`] to exit code 2 and everything else to 3.
#[derive(thiserror::Error, Debug)]
pub enum TntError {
    /// Invalid configuration, shapes or contract violations by the caller.
    #[error("specification error: {0}")]
    Spec(String),
    /// A world-frame query fell outside the map extent.
    #[error("bounds error: point ({x:.4}, {y:.4}) is outside the map extent")]
    Bounds { x: f64, y: f64 },
    /// Malformed binary or text file.
    #[error("format error: {0}")]
    Format(String),
    /// Non-finite values where finite ones are required.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// A* could not reach the goal.
    #[error("no path from {start:?} to {goal:?}")]
    NoPath {
        start: (usize, usize),
        goal: (usize, usize),
    },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl TntError {
    pub fn spec(msg: impl Into<String>) -> Self {
        TntError::Spec(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        TntError::Format(msg.into())
    }

    /// True for errors that stem from caller input rather than runtime failure.
    pub fn is_spec(&self) -> bool {
        matches!(self, TntError::Spec(_))
    }
}

pub type Result<T> = std::result::Result<T, TntError>;
