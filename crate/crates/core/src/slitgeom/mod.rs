//! Geometry of the slit `P = {x_n ≤ g(x'), x_{n+1} = 0}` and its edge `Γ`.

mod distance;
mod frame;
mod graph;
mod identities;
mod jet;

pub use distance::{signed_distance, SignedDistance};
pub use frame::{angle, conjugate_u0, frame, model_u0, GeometryFrame};
pub use graph::{BoundaryGraph, BoundaryGraphSpec, GraphEval, GraphSpec, GraphTerm};
pub use identities::{check_distance_identities, IdentityReport};
pub use jet::{distance_jet, DistanceJet, JetSummary};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("invalid boundary graph: {0}")]
    InvalidGraph(String),
    #[error("closest-point iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("closest point at radius {radius} leaves the graph domain of radius {extent}")]
    OutOfDomain { radius: f64, extent: f64 },
    #[error("jet order {order} exceeds available regularity {k}")]
    InsufficientRegularity { order: u32, k: u32 },
    #[error("expected a point of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}
