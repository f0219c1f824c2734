//! Numerical and symbolic laboratory for higher-order boundary Harnack
//! estimates in slit domains `B₁ ∖ P ⊂ ℝ^{n+1}`.
//!
//! * [`slitgeom`]: signed distance, the model solution `U₀`, distance jets.
//! * [`xrpoly`]: polynomials in `(x, r)` and the Laplacian coefficient systems.
//! * [`mollify`]: dyadically mollified and glued `d̄`, `r̄`, `Ū₀`; barriers.
//! * [`pdesolve`]: finite-difference Laplace and Signorini solvers on the half-cube.
//! * [`expand`]: expansion fits, Hölder exponents and regularity diagnostics.
//! * [`experiment`]: named, reproducible experiments producing reports.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod expand;
pub mod experiment;
pub mod mollify;
pub mod pdesolve;
pub mod poly;
pub mod quadrature;
pub mod slitgeom;
pub mod xrpoly;
