//! Formal derivatives of `U₀P₀`: `∂ᵢ(U₀P₀) = (U₀/r)·P₀^i` and the radial
//! derivative `∇r·∇(U₀P₀) = (U₀/r)·P₀^r`, with `d` and `ν` replaced by their
//! tangent polynomials.

use serde::{Deserialize, Serialize};

use super::{PolyError, XRPolynomial};
use crate::slitgeom::DistanceJet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormalDerivatives {
    /// `P₀^i`, `i = 1..n`.
    pub p_i: Vec<XRPolynomial>,
    /// `P₀^r`.
    pub p_r: XRPolynomial,
    /// Truncation degree.
    pub degree: u32,
    /// Largest coefficient discarded by the truncation.
    pub remainder: f64,
}

/// Formal derivatives truncated to `deg P₀`.
pub fn formal_derivatives(p0: &XRPolynomial, jet: &DistanceJet) -> Result<FormalDerivatives, PolyError> {
    formal_derivatives_to(p0, jet, p0.degree())
}

pub(crate) fn formal_derivatives_to(
    p0: &XRPolynomial,
    jet: &DistanceJet,
    k: u32,
) -> Result<FormalDerivatives, PolyError> {
    if jet.order < k {
        return Err(PolyError::InsufficientJet { have: jet.order, need: k });
    }
    let n = p0.n();
    if jet.n != n {
        return Err(PolyError::Invalid("jet and polynomial dimensions differ".into()));
    }
    let full = p0.degree() + jet.order + 2;
    let d = XRPolynomial::from_x_poly(&jet.taylor_d);
    let nu: Vec<XRPolynomial> = jet.taylor_nu.iter().map(XRPolynomial::from_x_poly).collect();
    let r = XRPolynomial::r(n);
    let dr = p0.dr();
    let half = p0.scale(0.5);
    let mut remainder: f64 = 0.0;
    let mut keep = |q: XRPolynomial| {
        let t = q.truncate(k);
        remainder = remainder.max((&q - &t).norm());
        t
    };
    let mut p_i = Vec::with_capacity(n);
    let mut grad_dot = XRPolynomial::zero(n);
    for i in 0..n {
        let dnu = d.mul_trunc(&nu[i], full);
        let term = &(&half.mul_trunc(&nu[i], full) + &r.mul_trunc(&p0.dx(i), full)) + &dr.mul_trunc(&dnu, full);
        p_i.push(keep(term));
        grad_dot = &grad_dot + &p0.dx(i).mul_trunc(&dnu, full);
    }
    let p_r = keep(&(&half + &grad_dot) + &r.mul_trunc(&dr, full));
    Ok(FormalDerivatives { p_i, p_r, degree: k, remainder })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_examples() {
        let jet = DistanceJet::flat(2, 2);
        let f = formal_derivatives(&XRPolynomial::constant(2, 1.0), &jet).unwrap();
        assert!(f.p_i[0].is_zero());
        assert_eq!(f.p_i[1], XRPolynomial::constant(2, 0.5));
        assert_eq!(f.p_r, XRPolynomial::constant(2, 0.5));
        let f = formal_derivatives(&XRPolynomial::r(2), &jet).unwrap();
        assert_eq!(f.p_r, XRPolynomial::r(2).scale(1.5));
        let f = formal_derivatives(&XRPolynomial::x(2, 1), &jet).unwrap();
        assert_eq!(f.p_i[1], &XRPolynomial::x(2, 1).scale(0.5) + &XRPolynomial::r(2));
        assert_eq!(f.p_r, XRPolynomial::x(2, 1).scale(1.5));
    }

    #[test]
    fn jet_too_short() {
        let jet = DistanceJet::flat(1, 0);
        assert!(formal_derivatives(&XRPolynomial::r(1), &jet).is_err());
    }
}
