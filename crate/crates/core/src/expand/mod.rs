//! Expansion fits of quotients `u/U₀` and `u/U` at points of `Γ`, decay-rate
//! regression, the improvement-of-flatness diagnostic, gradient expansions
//! and free-boundary checks for thin obstacle solutions.

mod checks;
mod fit;
mod flatness;
mod sampling;

pub use checks::{
    bootstrap_check, gradient_expansion_check, optimal_growth_check, BootstrapPoint, BootstrapReport, GradientReport,
    GrowthClass, GrowthReport,
};
pub use fit::{fit_expansion, harnack_gain, loglog_fit, Denominator, ExpansionFit, FitOptions, HarnackGainReport, QuotientKind, Regression};
pub use flatness::{flatness_iteration, FlatnessReport};
pub use sampling::TangentFrame;

use crate::mollify::MollifyError;
use crate::pdesolve::SolveError;
use crate::slitgeom::GeomError;
use crate::xrpoly::PolyError;

#[derive(Debug, thiserror::Error)]
pub enum ExpandError {
    #[error("least-squares system is ill-conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("denominator {value:.3e} below 1e-14 at {at:?}")]
    QuotientBlowup { at: Vec<f64>, value: f64 },
    #[error("scale window too small: {0}")]
    WindowTooSmall(String),
    #[error("all {0} sample points have a degenerate denominator")]
    DegenerateDenominator(usize),
    #[error("point is not on the free boundary: {0}")]
    NotOnFreeBoundary(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Mollify(#[from] MollifyError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}
