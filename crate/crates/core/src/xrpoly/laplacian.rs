//! The flat Laplacian action `Δ(U₀P) = (U₀/r)·A(P)` and harmonic slit polynomials.

use super::{solve_approximating, LaplacianSystem, XRPolynomial};
use crate::poly::exponents_up_to;

/// Coefficients `A` with `Δ(U₀P) = (U₀/r)·A` for the straight slit:
/// `A_{σl} = (l+1)(l+2+2σₙ)a_{σ,l+1} + (σₙ+1)a_{σ+n̄,l} + Σᵢ(σᵢ+1)(σᵢ+2)a_{σ+2ī,l−1}`.
pub fn laplacian_flat(p: &XRPolynomial) -> XRPolynomial {
    let n = p.n();
    let mut out = XRPolynomial::zero(n);
    for (mu, m, a) in p.terms() {
        flat_image_of_monomial(mu, m, a, &mut out);
    }
    out
}

/// Adds the flat image of `a x^μ r^m` to `out`.
pub(crate) fn flat_image_of_monomial(mu: &[u32], m: u32, a: f64, out: &mut XRPolynomial) {
    let n = mu.len();
    let mu_n = mu[n - 1];
    if m >= 1 {
        out.add_term(mu, m - 1, a * (m * (m + 1 + 2 * mu_n)) as f64);
    }
    if mu_n >= 1 {
        let mut s = mu.to_vec();
        s[n - 1] -= 1;
        out.add_term(&s, m, a * mu_n as f64);
    }
    for i in 0..n {
        if mu[i] >= 2 {
            let mut s = mu.to_vec();
            s[i] -= 2;
            out.add_term(&s, m + 1, a * (mu[i] * (mu[i] - 1)) as f64);
        }
    }
}

/// Harmonic slit polynomials: for every pure-`x` monomial `x^μ` with
/// `|μ| ≤ degree` (in [`exponents_up_to`] order) the unique `P` with
/// `laplacian_flat(P) = 0` whose pure-`x` part is `x^μ`.
pub fn harmonic_basis(n: usize, degree: u32) -> Vec<XRPolynomial> {
    assert!(degree <= 6, "harmonic bases are limited to degree 6");
    let system = LaplacianSystem::flat(n, degree.saturating_sub(1));
    exponents_up_to(n, degree)
        .into_iter()
        .map(|mu| {
            let seed = XRPolynomial::term(&mu, 0, 1.0);
            solve_approximating(&system, &XRPolynomial::zero(n), &seed).expect("flat system is triangular")
        })
        .collect()
}

/// For `n = 1`: `r^m V_m(x/r)` with `V_m` the Chebyshev polynomials of the third
/// kind, so that `U₀·P = r^{m+1/2} cos((2m+1)θ/2)`.
pub fn chebyshev_closed_form(m: u32) -> XRPolynomial {
    let x = XRPolynomial::x(1, 0);
    let r = XRPolynomial::r(1);
    let mut prev = XRPolynomial::constant(1, 1.0);
    if m == 0 {
        return prev;
    }
    let mut cur = &x.scale(2.0) - &r;
    for _ in 1..m {
        let next = &x.scale(2.0).mul_trunc(&cur, u32::MAX) - &r.mul_trunc(&r, 2).mul_trunc(&prev, u32::MAX);
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_examples() {
        let r = XRPolynomial::r(1);
        assert_eq!(laplacian_flat(&r), XRPolynomial::constant(1, 2.0));
        let x = XRPolynomial::x(1, 0);
        assert!(laplacian_flat(&(&x.scale(2.0) - &r)).is_zero());
        let mut p = XRPolynomial::zero(1);
        p.add_term(&[2], 0, 4.0);
        p.add_term(&[1], 1, -2.0);
        p.add_term(&[0], 2, -1.0);
        assert!(laplacian_flat(&p).is_zero());
    }

    #[test]
    fn basis_examples() {
        let b = harmonic_basis(1, 2);
        assert_eq!(b[0], XRPolynomial::constant(1, 1.0));
        let expected1 = &XRPolynomial::x(1, 0) - &XRPolynomial::r(1).scale(0.5);
        assert!(b[1].max_abs_diff(&expected1) < 1e-15);
        let mut p = XRPolynomial::zero(1);
        p.add_term(&[2], 0, 1.0);
        p.add_term(&[1], 1, -0.5);
        p.add_term(&[0], 2, -0.25);
        assert!(b[2].max_abs_diff(&p) < 1e-15);
    }

    #[test]
    fn closed_form_matches_trigonometric_definition() {
        for m in 0..5u32 {
            let p = chebyshev_closed_form(m);
            for &th in &[0.3f64, 1.1, 2.0, 2.9, -1.7] {
                let rad = 0.7;
                let lhs = p.eval(&[rad * th.cos()], rad);
                let rhs = rad.powi(m as i32) * ((2 * m + 1) as f64 * th / 2.0).cos() / (th / 2.0).cos();
                assert!((lhs - rhs).abs() < 1e-12, "m={m} th={th}");
            }
        }
    }

    #[test]
    fn three_dimensional_basis_is_harmonic() {
        for p in harmonic_basis(2, 4) {
            assert!(laplacian_flat(&p).prune(1e-13).is_zero());
        }
    }
}
