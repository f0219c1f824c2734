//! Dyadic mollification of the signed distance and the glued regularizations
//! `d̄`, `r̄`, `Ū₀`, with measured bounds and the barrier `V = Ū₀ − Ū₀^{1+2α}`.
//!
//! At scale `λ` the distance is convolved with `ρ_λ(x) = λ^{−n}ρ(x/λ)`,
//! `r_λ = √(d_λ² + x_{n+1}²)` and `(U₀)_λ = √((d_λ + r_λ)/2)`. Consecutive
//! levels are blended by `φ = h(r_λ/λ)`, where `h` drops from 1 to 0 on
//! `[2.25, 2.75]`.

mod field;
mod kernel;
mod report;

pub use field::{dyadic_scale, glued_fields, h_profile, mollified_distance, Glued, GluedFields, MollifiedDistance, MollifiedField};
pub use kernel::{kernel_constant, kernel_derivatives, kernel_nodes, KernelNode, KERNEL_RADIUS};
pub use report::{
    barrier_check, regularization_report, remark_barrier_check, BarrierReport, BoundId, BoundSample, BoundVerdict,
    RegularizationReport, SPREAD_LIMIT, ZERO_FLOOR,
};

use crate::slitgeom::GeomError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MollifyError {
    #[error("quadrature error estimate {estimate:e} exceeds {tolerance:e} at scale {lambda}")]
    QuadratureFailure { lambda: f64, estimate: f64, tolerance: f64 },
    #[error("r = {r} lies outside the glued window [{lo}, {hi})")]
    ScaleOutOfRange { r: f64, lo: f64, hi: f64 },
    #[error("invalid scale window k_min = {k_min}, k_max = {k_max}")]
    InvalidScales { k_min: u32, k_max: u32 },
    #[error("invalid mollification scale {0}")]
    InvalidLambda(f64),
    #[error("mollification supports n ≤ 2, got n = {0}")]
    UnsupportedDimension(usize),
    #[error("at least 3 dyadic scales are needed, got {0}")]
    TooFewScales(usize),
    #[error("barrier exponent {0} must lie in (0, 1/2)")]
    InvalidExponent(f64),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}
