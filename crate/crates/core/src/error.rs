use alloc::string::String;
use alloc::vec::Vec;


use crate::vec2::Point;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The vertex loop is not a valid simple counterclockwise polygon.
    #[error("invalid polygon: {0}")]
    Geometry(String),

    #[error("point ({}, {}) lies outside the closed domain", .0.x, .0.y)]
    ExteriorPoint(Point),

    #[error("parameter {0} outside [0, 1]")]
    ParameterRange(f64),

    #[error("no convergence after {iterations} iterations (residual {residual:e}, best iterate ({}, {}))", best.x, best.y)]
    Convergence { iterations: usize, residual: f64, best: Point },

    #[error("transport substep {substep_length:e} too large for projection band {band:e}")]
    StepTooLarge { substep_length: f64, band: f64 },

    #[error("lattice would need {required} nodes, limit is {limit}")]
    Capacity { required: usize, limit: usize },

    #[error("target slice {target} is not the successor of slice {slice}")]
    SliceOrder { slice: usize, target: usize },

    #[error("field does not match lattice: {0}")]
    LatticeMismatch(String),

    #[error("Picard iteration is not contracting, recent gap ratios {ratios:?}")]
    ContractionFailure { ratios: Vec<f64> },

    #[error("generator evaluation failed: {0}")]
    Eval(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Wraps an error raised while processing a specific lattice node.
    #[error("at node (slice {}, index {}): {source}", node.0, node.1)]
    AtNode {
        node: (usize, usize),
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, node: crate::lattice::NodeId) -> Error {
        match self {
            e @ Error::AtNode { .. } => e,
            e => Error::AtNode { node: (node.slice, node.index), source: alloc::boxed::Box::new(e) },
        }
    }

    /// The innermost error, skipping node context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtNode { source, .. } => source.root(),
            e => e,
        }
    }
}
