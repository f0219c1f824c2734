//! Polynomials `P(x, r) = Σ a_{μm} x^μ r^m` and the linear algebra of their
//! Laplacians against `U₀` or `U`.

mod formal;
mod laplacian;
mod system;

use std::collections::BTreeMap;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::poly::MultiPoly;

pub use formal::{formal_derivatives, FormalDerivatives};
pub use laplacian::{chebyshev_closed_form, harmonic_basis, laplacian_flat};
pub use system::{solve_approximating, structure_coefficients, BaseExpansion, LaplacianSystem};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolyError {
    #[error("jet order {have} is too small, need at least {need}")]
    InsufficientJet { have: u32, need: u32 },
    #[error("singular approximating system: {0}")]
    SingularSystem(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Sparse `(x, r)`-polynomial in `n` space variables. Internally a
/// [`MultiPoly`] in `n + 1` variables whose last variable is `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct XRPolynomial {
    n: usize,
    poly: MultiPoly,
}

#[derive(Serialize, Deserialize)]
struct XRTermJson {
    mu: Vec<u32>,
    m: u32,
    a: f64,
}

#[derive(Serialize, Deserialize)]
struct XRJson {
    n: usize,
    terms: Vec<XRTermJson>,
}

impl Serialize for XRPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        XRJson {
            n: self.n,
            terms: self.terms().map(|(mu, m, a)| XRTermJson { mu: mu.to_vec(), m, a }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for XRPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = XRJson::deserialize(d)?;
        let mut p = XRPolynomial::zero(j.n);
        for t in j.terms {
            if t.mu.len() != j.n {
                return Err(serde::de::Error::custom("multi-index length differs from n"));
            }
            p.add_term(&t.mu, t.m, t.a);
        }
        Ok(p)
    }
}

impl XRPolynomial {
    pub fn zero(n: usize) -> Self {
        Self { n, poly: MultiPoly::zero(n + 1) }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { n, poly: MultiPoly::constant(n + 1, c) }
    }

    /// The single term `a x^μ r^m`.
    pub fn term(mu: &[u32], m: u32, a: f64) -> Self {
        let mut p = Self::zero(mu.len());
        p.add_term(mu, m, a);
        p
    }

    /// `x_i` as an `(x, r)`-polynomial.
    pub fn x(n: usize, i: usize) -> Self {
        Self { n, poly: MultiPoly::var(n + 1, i) }
    }

    /// `r` as an `(x, r)`-polynomial.
    pub fn r(n: usize) -> Self {
        Self { n, poly: MultiPoly::var(n + 1, n) }
    }

    /// Wraps a polynomial in `n + 1` variables whose last variable is `r`.
    pub fn from_multipoly(n: usize, poly: MultiPoly) -> Self {
        assert_eq!(poly.nvars(), n + 1);
        Self { n, poly }
    }

    /// Lifts a polynomial in `x` alone.
    pub fn from_x_poly(p: &MultiPoly) -> Self {
        let n = p.nvars();
        Self { n, poly: p.embed(n + 1, &(0..n).collect::<Vec<_>>()) }
    }

    pub fn as_multipoly(&self) -> &MultiPoly {
        &self.poly
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_term(&mut self, mu: &[u32], m: u32, a: f64) {
        assert_eq!(mu.len(), self.n);
        let mut e = mu.to_vec();
        e.push(m);
        self.poly.add_term(e, a);
    }

    pub fn coeff(&self, mu: &[u32], m: u32) -> f64 {
        let mut e = mu.to_vec();
        e.push(m);
        self.poly.coeff(&e)
    }

    /// Iterates `(μ, m, a_{μm})`.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], u32, f64)> {
        let n = self.n;
        self.poly.terms().map(move |(e, c)| (&e[..n], e[n], c))
    }

    pub fn len(&self) -> usize {
        self.poly.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poly.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// `max(|μ| + m)` over the support; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.poly.degree().unwrap_or(0)
    }

    /// `‖P‖ = max |a_{μm}|`.
    pub fn norm(&self) -> f64 {
        self.poly.norm()
    }

    pub fn eval(&self, x: &[f64], r: f64) -> f64 {
        let mut p = x.to_vec();
        p.push(r);
        self.poly.eval(&p)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, poly: self.poly.scale(s) }
    }

    pub fn truncate(&self, deg: u32) -> Self {
        Self { n: self.n, poly: self.poly.truncate(deg) }
    }

    pub fn prune(&self, eps: f64) -> Self {
        Self { n: self.n, poly: self.poly.prune(eps) }
    }

    pub fn mul_trunc(&self, other: &Self, deg: u32) -> Self {
        Self { n: self.n, poly: self.poly.mul_trunc(&other.poly, deg) }
    }

    /// `∂/∂x_i` holding `r` fixed.
    pub fn dx(&self, i: usize) -> Self {
        Self { n: self.n, poly: self.poly.derivative(i) }
    }

    /// Formal `r`-derivative `D_r`.
    pub fn dr(&self) -> Self {
        Self { n: self.n, poly: self.poly.derivative(self.n) }
    }

    /// Terms with `m = 0`.
    pub fn pure_x_part(&self) -> Self {
        let mut p = Self::zero(self.n);
        for (mu, m, a) in self.terms() {
            if m == 0 {
                p.add_term(mu, 0, a);
            }
        }
        p
    }

    /// Coefficient map keyed by `(μ, m)`.
    pub fn to_map(&self) -> BTreeMap<(Vec<u32>, u32), f64> {
        self.terms().map(|(mu, m, a)| ((mu.to_vec(), m), a)).collect()
    }

    /// Coefficients listed for all monomials of degree `≤ deg`, with zeros.
    pub fn dense(&self, deg: u32) -> Vec<((Vec<u32>, u32), f64)> {
        crate::poly::exponents_up_to(self.n + 1, deg)
            .into_iter()
            .map(|e| {
                let c = self.poly.coeff(&e);
                let m = e[self.n];
                ((e[..self.n].to_vec(), m), c)
            })
            .collect()
    }

    /// Maximum coefficient difference to another polynomial.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

impl Add for &XRPolynomial {
    type Output = XRPolynomial;
    fn add(self, rhs: &XRPolynomial) -> XRPolynomial {
        assert_eq!(self.n, rhs.n);
        XRPolynomial { n: self.n, poly: &self.poly + &rhs.poly }
    }
}

impl Sub for &XRPolynomial {
    type Output = XRPolynomial;
    fn sub(self, rhs: &XRPolynomial) -> XRPolynomial {
        assert_eq!(self.n, rhs.n);
        XRPolynomial { n: self.n, poly: &self.poly - &rhs.poly }
    }
}
