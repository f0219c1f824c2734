//! Finite-difference solvers on the half-cube `[−1,1]ⁿ × [0,1]`, `n ∈ {1, 2}`:
//! the slit Laplace problem with a `U₀/r`-weighted source, the normalized
//! positive solution `U`, and the thin obstacle problem with free-boundary
//! extraction.
//!
//! Fields live on the upper half; evenness in `x_{n+1}` is built into the
//! stencil on the plane.

mod field;
mod grid;
mod laplace;
mod multigrid;
mod operator;
mod signorini;

pub use field::{read_binary, DiscreteField, FieldMeta, StoredField};
pub use grid::{Grid, GridMode, Lattice, NodeClass, NodeWeights};
pub use laplace::{laplace_slit, normalized_u, DataFn, SolveStats, SolverConfig, SolverMethod, SourceFn, SweepOrdering};
pub use operator::{energy, stencil_laplacian};
pub use signorini::{
    complementarity, extract_free_boundary, signorini_solve, Complementarity, FreeBoundary, GraphFit,
    SignoriniConfig,
};

use crate::slitgeom::GeomError;

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid node classification: {0}")]
    InvalidClassification(String),
    #[error("dimension n = {0} is not supported (n must be 1 or 2)")]
    UnsupportedDimension(usize),
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("solution is not positive (value {0:.3e})")]
    NonPositive(f64),
    #[error("the contact set is empty")]
    EmptyContact,
    #[error("the contact set covers the whole plane")]
    FullContact,
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
