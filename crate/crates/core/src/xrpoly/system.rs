//! Approximating-polynomial systems `A(P) = R` on curved slits.
//!
//! For `U ≈ U₀P₀` (with `ΔU = 0`) the product rule gives
//! `Δ(x^μ r^m U) = (U₀/r)·B_{μm}` with
//!
//! ```text
//! B_{μm} = P₀·[ r^{m+1}Δx^μ + m x^μ r^{m−1}(m − κd) + 2m r^{m−1} d ν·∇x^μ ]
//!        + 2 r^m ∇x^μ·F + 2m x^μ r^{m−1} G,
//! F_i = ½P₀νᵢ + r∂ᵢP₀ + (D_rP₀) dνᵢ,   G = ½P₀ + ∇ₓP₀·(dν) + r D_rP₀,
//! ```
//!
//! where `d`, `ν`, `κ` are replaced by their tangent polynomials. When the
//! model `U₀` itself is used (`P₀ = 1`), `ΔU₀ = −κU₀/(2r)` adds `−(κ/2)x^μ r^m`.
//! The correction tensor is `c^{μm} = B_{μm} − B^{flat}_{μm}` truncated to
//! degree `k`; every entry has `|σ|+l ≥ |μ|+m`.

use std::collections::BTreeMap;

use super::laplacian::flat_image_of_monomial;
use super::formal::formal_derivatives_to;
use super::{laplacian_flat, PolyError, XRPolynomial};
use crate::poly::{exponents_of_degree, exponents_up_to, total_degree};
use crate::slitgeom::DistanceJet;

/// Which expansion of the positive solution the system is built on.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseExpansion {
    /// A harmonic `U = U₀·P₀ + …`; `P₀` is normalized to unit constant term.
    Harmonic(XRPolynomial),
    /// The model `U₀` itself (not harmonic on curved slits).
    ModelU0,
}

/// Linear map `a ↦ A` on `(x, r)`-polynomials of degree `≤ k+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianSystem {
    n: usize,
    k: u32,
    corrections: BTreeMap<(Vec<u32>, u32), XRPolynomial>,
}

impl LaplacianSystem {
    /// The straight-slit system (all corrections zero).
    pub fn flat(n: usize, k: u32) -> Self {
        Self { n, k, corrections: BTreeMap::new() }
    }

    /// Builds a system from an explicit correction tensor, checking the
    /// structural zero pattern.
    pub fn with_corrections(
        n: usize,
        k: u32,
        corrections: BTreeMap<(Vec<u32>, u32), XRPolynomial>,
    ) -> Result<Self, PolyError> {
        let s = Self { n, k, corrections };
        s.check_pattern()?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// `c^{μm}` as a polynomial in `(σ, l)`; zero when absent.
    pub fn correction(&self, mu: &[u32], m: u32) -> XRPolynomial {
        self.corrections.get(&(mu.to_vec(), m)).cloned().unwrap_or_else(|| XRPolynomial::zero(self.n))
    }

    /// The entry `c^{μm}_{σl}`.
    pub fn entry(&self, mu: &[u32], m: u32, sigma: &[u32], l: u32) -> f64 {
        self.corrections.get(&(mu.to_vec(), m)).map(|c| c.coeff(sigma, l)).unwrap_or(0.0)
    }

    pub fn corrections(&self) -> impl Iterator<Item = (&(Vec<u32>, u32), &XRPolynomial)> {
        self.corrections.iter()
    }

    /// Largest `|c^{μm}_{σl}|`.
    pub fn max_correction(&self) -> f64 {
        self.corrections.values().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_flat(&self) -> bool {
        self.corrections.values().all(|c| c.is_zero())
    }

    /// Verifies `c^{μm}_{σl} = 0` unless `|μ|+m−1 < |σ|+l ≤ k`.
    pub fn check_pattern(&self) -> Result<(), PolyError> {
        for ((mu, m), c) in &self.corrections {
            let src = total_degree(mu) + m;
            for (sigma, l, a) in c.terms() {
                let tgt = total_degree(sigma) + l;
                if a != 0.0 && (tgt < src || tgt > self.k) {
                    return Err(PolyError::SingularSystem(format!(
                        "entry c^{{{mu:?},{m}}}_{{{sigma:?},{l}}} = {a} breaks the triangular pattern"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `A(P)` truncated to degree `k`.
    pub fn apply(&self, p: &XRPolynomial) -> XRPolynomial {
        let mut out = laplacian_flat(p).truncate(self.k);
        for (mu, m, a) in p.terms() {
            if let Some(c) = self.corrections.get(&(mu.to_vec(), m)) {
                out = &out + &c.scale(a);
            }
        }
        out
    }

    /// The rescaled system `c̄^{μm}_{σl} = λ^{|σ|+l+1−|μ|−m} c^{μm}_{σl}`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        let corrections = self
            .corrections
            .iter()
            .map(|((mu, m), c)| {
                let src = (total_degree(mu) + m) as i32;
                let mut out = XRPolynomial::zero(self.n);
                for (sigma, l, a) in c.terms() {
                    let tgt = (total_degree(sigma) + l) as i32;
                    out.add_term(sigma, l, a * lambda.powi(tgt + 1 - src));
                }
                ((mu.clone(), *m), out)
            })
            .collect();
        Self { n: self.n, k: self.k, corrections }
    }
}

/// Assembles the correction tensor from the distance jet and the base expansion.
pub fn structure_coefficients(
    jet: &DistanceJet,
    base: &BaseExpansion,
    k: u32,
) -> Result<LaplacianSystem, PolyError> {
    let n = jet.n;
    let need = match base {
        BaseExpansion::Harmonic(_) => k,
        BaseExpansion::ModelU0 => k + 1,
    };
    if jet.order < need {
        return Err(PolyError::InsufficientJet { have: jet.order, need });
    }
    let p0 = match base {
        BaseExpansion::Harmonic(p) => {
            let c0 = p.coeff(&vec![0; n], 0);
            if c0 == 0.0 {
                return Err(PolyError::Invalid("base expansion has zero constant term".into()));
            }
            p.scale(1.0 / c0).truncate(k + 1)
        }
        BaseExpansion::ModelU0 => XRPolynomial::constant(n, 1.0),
    };
    let lift = |q: &crate::poly::MultiPoly| XRPolynomial::from_x_poly(q);
    let d = lift(&jet.taylor_d);
    let nu: Vec<XRPolynomial> = jet.taylor_nu.iter().map(lift).collect();
    let kappa = lift(&jet.taylor_kappa);
    let deg = k;
    let formal = formal_derivatives_to(&p0, jet, k)?;
    let kd = kappa.mul_trunc(&d, deg);
    let mut corrections = BTreeMap::new();
    for mu_m in exponents_up_to(n + 1, k + 1) {
        let (mu, m) = (&mu_m[..n], mu_m[n]);
        let mono = XRPolynomial::term(mu, 0, 1.0);
        let mut bracket = XRPolynomial::zero(n);
        let mut lap = XRPolynomial::zero(n);
        for i in 0..n {
            lap = &lap + &mono.dx(i).dx(i);
        }
        bracket = &bracket + &lap.mul_trunc(&XRPolynomial::term(&vec![0; n], m + 1, 1.0), deg);
        if m >= 1 {
            let base_term = XRPolynomial::term(mu, m - 1, m as f64);
            let mk = &XRPolynomial::constant(n, m as f64) - &kd;
            bracket = &bracket + &base_term.mul_trunc(&mk, deg);
            let mut nu_grad = XRPolynomial::zero(n);
            for i in 0..n {
                nu_grad = &nu_grad + &nu[i].mul_trunc(&mono.dx(i), deg);
            }
            let coef = XRPolynomial::term(&vec![0; n], m - 1, 2.0 * m as f64).mul_trunc(&d, deg);
            bracket = &bracket + &coef.mul_trunc(&nu_grad, deg);
        }
        let mut b = p0.mul_trunc(&bracket, deg);
        let rm = XRPolynomial::term(&vec![0; n], m, 2.0);
        for i in 0..n {
            b = &b + &rm.mul_trunc(&mono.dx(i), deg).mul_trunc(&formal.p_i[i], deg);
        }
        if m >= 1 {
            b = &b + &XRPolynomial::term(mu, m - 1, 2.0 * m as f64).mul_trunc(&formal.p_r, deg);
        }
        if matches!(base, BaseExpansion::ModelU0) {
            b = &b - &XRPolynomial::term(mu, m, 0.5).mul_trunc(&kappa, deg);
        }
        let mut flat = XRPolynomial::zero(n);
        flat_image_of_monomial(mu, m, 1.0, &mut flat);
        let c = (&b.truncate(k) - &flat.truncate(k)).prune(1e-14 * (1.0 + b.norm()));
        let src = total_degree(mu) + m;
        let mut kept = XRPolynomial::zero(n);
        for (sigma, l, a) in c.terms() {
            if total_degree(sigma) + l < src {
                return Err(PolyError::SingularSystem(format!(
                    "jet produced a sub-diagonal entry {a} at ({sigma:?},{l}) for ({mu:?},{m})"
                )));
            }
            kept.add_term(sigma, l, a);
        }
        if !kept.is_zero() {
            corrections.insert((mu.to_vec(), m), kept);
        }
    }
    LaplacianSystem::with_corrections(n, k, corrections)
}

/// The unique `P` of degree `≤ k+1` with `A(P) = R` and pure-`x` part `seed`.
/// Unknowns are eliminated in increasing `(|σ|+l, l, σ)` order.
pub fn solve_approximating(
    system: &LaplacianSystem,
    rhs: &XRPolynomial,
    seed: &XRPolynomial,
) -> Result<XRPolynomial, PolyError> {
    let n = system.n;
    let k = system.k;
    if rhs.n() != n || seed.n() != n {
        return Err(PolyError::Invalid("dimension mismatch".into()));
    }
    if !rhs.is_zero() && rhs.degree() > k {
        return Err(PolyError::Invalid(format!("right-hand side degree {} exceeds k = {k}", rhs.degree())));
    }
    if seed.terms().any(|(_, m, _)| m != 0) {
        return Err(PolyError::Invalid("seed must only contain pure-x terms".into()));
    }
    if !seed.is_zero() && seed.degree() > k + 1 {
        return Err(PolyError::Invalid("seed degree exceeds k + 1".into()));
    }
    if !rhs.norm().is_finite() {
        return Err(PolyError::Invalid("non-finite right-hand side".into()));
    }
    system.check_pattern()?;
    let mut p = seed.clone();
    for total in 1..=k + 1 {
        let mut corr = XRPolynomial::zero(n);
        for (mu, m, a) in p.terms() {
            if total_degree(mu) + m < total {
                if let Some(c) = system.corrections.get(&(mu.to_vec(), m)) {
                    corr = &corr + &c.scale(a);
                }
            }
        }
        for m in 1..=total {
            for sigma in exponents_of_degree(n, total - m) {
                let l = m - 1;
                let sn = sigma[n - 1];
                let mut known = corr.coeff(&sigma, l);
                let mut up = sigma.clone();
                up[n - 1] += 1;
                known += (sn + 1) as f64 * p.coeff(&up, l);
                if m >= 2 {
                    for i in 0..n {
                        let mut s2 = sigma.clone();
                        s2[i] += 2;
                        known += ((sigma[i] + 1) * (sigma[i] + 2)) as f64 * p.coeff(&s2, m - 2);
                    }
                }
                let diag = (m * (m + 1 + 2 * sn)) as f64;
                let a = (rhs.coeff(&sigma, l) - known) / diag;
                p.add_term(&sigma, m, a);
            }
        }
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slitgeom::{distance_jet, BoundaryGraph};

    #[test]
    fn flat_constant_rhs_gives_half_r() {
        let sys = LaplacianSystem::flat(2, 0);
        let p = solve_approximating(&sys, &XRPolynomial::constant(2, 3.0), &XRPolynomial::zero(2)).unwrap();
        assert_eq!(p, XRPolynomial::r(2).scale(1.5));
    }

    #[test]
    fn linear_rhs_round_trip() {
        let sys = LaplacianSystem::flat(2, 1);
        let rhs = XRPolynomial::x(2, 1);
        let p = solve_approximating(&sys, &rhs, &XRPolynomial::zero(2)).unwrap();
        assert!((&laplacian_flat(&p) - &rhs).prune(1e-15).is_zero());
        assert!(p.coeff(&[0, 0], 2) != 0.0 || p.coeff(&[0, 1], 1) != 0.0);
    }

    #[test]
    fn flat_jet_gives_zero_corrections() {
        let jet = DistanceJet::flat(2, 3);
        for base in [BaseExpansion::ModelU0, BaseExpansion::Harmonic(XRPolynomial::constant(2, 1.0))] {
            let sys = structure_coefficients(&jet, &base, 2).unwrap();
            assert!(sys.is_flat());
        }
    }

    #[test]
    fn parabola_curvature_entry() {
        let eps = 0.1;
        let jet = distance_jet(&BoundaryGraph::paraboloid(2, eps).unwrap(), 2).unwrap();
        let base = BaseExpansion::Harmonic(XRPolynomial::constant(2, 1.0));
        let sys = structure_coefficients(&jet, &base, 1).unwrap();
        assert_eq!(sys.entry(&[0, 0], 1, &[0, 0], 0), 0.0);
        assert!((sys.entry(&[0, 0], 1, &[0, 1], 0) + eps).abs() < 1e-14);
        let sys = structure_coefficients(&jet, &BaseExpansion::ModelU0, 1).unwrap();
        assert!((sys.entry(&[0, 0], 1, &[0, 0], 1) + eps / 2.0).abs() < 1e-14);
        assert!((sys.entry(&[0, 0], 0, &[0, 0], 0) + eps / 2.0).abs() < 1e-14);
    }

    #[test]
    fn insufficient_jet() {
        let jet = DistanceJet::flat(2, 1);
        assert!(matches!(
            structure_coefficients(&jet, &BaseExpansion::ModelU0, 1),
            Err(PolyError::InsufficientJet { .. })
        ));
    }

    #[test]
    fn pattern_violation_is_rejected() {
        let mut c = BTreeMap::new();
        c.insert((vec![1], 0), XRPolynomial::constant(1, 1.0));
        assert!(LaplacianSystem::with_corrections(1, 1, c).is_err());
    }
}
