//! Sparse multivariate polynomials and truncated power series over `f64`.
//!
//! Exponent vectors are stored as `Vec<u32>` keys of a `BTreeMap`, which keeps
//! iteration order (and therefore every derived computation) deterministic.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponent vector of a monomial.
pub type Exponent = Vec<u32>;

/// Total degree of an exponent vector.
pub fn total_degree(e: &[u32]) -> u32 {
    e.iter().sum()
}

/// All exponent vectors in `nvars` variables with total degree exactly `deg`,
/// in lexicographically descending order of the leading variable.
pub fn exponents_of_degree(nvars: usize, deg: u32) -> Vec<Exponent> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; nvars];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Exponent>) {
        let nv = cur.len();
        if i + 1 == nv {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e;
            rec(i + 1, left - e, cur, out);
        }
    }
    if nvars == 0 {
        if deg == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(0, deg, &mut cur, &mut out);
    out
}

/// All exponent vectors with total degree at most `deg`, ordered by degree.
pub fn exponents_up_to(nvars: usize, deg: u32) -> Vec<Exponent> {
    (0..=deg).flat_map(|d| exponents_of_degree(nvars, d)).collect()
}

/// A polynomial `Σ c_e x^e` in a fixed number of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Exponent, f64>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, 1.0)
    }

    pub fn monomial(exp: Exponent, c: f64) -> Self {
        let mut p = Self::zero(exp.len());
        p.add_term(exp, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponent, f64)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length mismatch");
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c x^e`, dropping the entry if it cancels to exactly zero.
    pub fn add_term(&mut self, exp: Exponent, c: f64) {
        debug_assert_eq!(exp.len(), self.nvars);
        if c == 0.0 {
            return;
        }
        let entry = self.terms.entry(exp);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn coeff(&self, exp: &[u32]) -> f64 {
        self.terms.get(exp).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, f64)> {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    /// Maximum total degree of the support; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| total_degree(e)).max()
    }

    /// Minimum total degree of the support.
    pub fn low_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| total_degree(e)).min()
    }

    /// Maximum absolute coefficient.
    pub fn norm(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), c * s);
        }
        p
    }

    /// Drops all terms of total degree greater than `deg`.
    pub fn truncate(&self, deg: u32) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| total_degree(e) <= deg)
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    /// Homogeneous part of total degree `deg`.
    pub fn homogeneous_part(&self, deg: u32) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| total_degree(e) == deg)
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    /// Removes coefficients with `|c| <= eps`.
    pub fn prune(&self, eps: f64) -> Self {
        Self {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > eps)
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    /// Product truncated to total degree `max_deg`.
    pub fn mul_trunc(&self, other: &Self, max_deg: u32) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut p = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            let da = total_degree(ea);
            if da > max_deg {
                continue;
            }
            for (eb, cb) in &other.terms {
                if da + total_degree(eb) > max_deg {
                    continue;
                }
                let e: Exponent = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                p.add_term(e, ca * cb);
            }
        }
        p
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut p = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = e.clone();
                f[i] -= 1;
                p.add_term(f, c * e[i] as f64);
            }
        }
        p
    }

    /// Sum of second derivatives over the variables `vars`.
    pub fn laplacian_in(&self, vars: &[usize]) -> Self {
        let mut p = Self::zero(self.nvars);
        for &i in vars {
            p = &p + &self.derivative(i).derivative(i);
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Substitutes the series `subs[j]` for variable `j`, truncating the result
    /// at total degree `max_deg`. All substituted series must share a variable count.
    pub fn compose(&self, subs: &[MultiPoly], max_deg: u32) -> MultiPoly {
        assert_eq!(subs.len(), self.nvars);
        let target = subs.first().map(|s| s.nvars).unwrap_or(0);
        let mut powers: Vec<Vec<MultiPoly>> = subs
            .iter()
            .map(|s| vec![MultiPoly::constant(target, 1.0), s.truncate(max_deg)])
            .collect();
        let mut out = MultiPoly::zero(target);
        for (e, c) in &self.terms {
            let mut term = MultiPoly::constant(target, *c);
            for (j, &k) in e.iter().enumerate() {
                while powers[j].len() <= k as usize {
                    let next = powers[j].last().unwrap().mul_trunc(&powers[j][1], max_deg);
                    powers[j].push(next);
                }
                term = term.mul_trunc(&powers[j][k as usize], max_deg);
            }
            out = &out + &term;
        }
        out
    }

    /// Truncated series of `(1 + y)^p` where `self = y` has no constant term.
    pub fn one_plus_pow(&self, p: f64, max_deg: u32) -> MultiPoly {
        debug_assert!(self.coeff(&vec![0; self.nvars]) == 0.0);
        let mut out = MultiPoly::constant(self.nvars, 1.0);
        let mut pow = MultiPoly::constant(self.nvars, 1.0);
        let mut binom = 1.0;
        for k in 1..=max_deg {
            pow = pow.mul_trunc(self, max_deg);
            if pow.is_zero() {
                break;
            }
            binom *= (p - (k as f64 - 1.0)) / k as f64;
            out = &out + &pow.scale(binom);
        }
        out
    }

    /// Embeds into a ring with more variables, mapping old variable `i` to `map[i]`.
    pub fn embed(&self, nvars: usize, map: &[usize]) -> MultiPoly {
        let mut p = MultiPoly::zero(nvars);
        for (e, c) in &self.terms {
            let mut f = vec![0; nvars];
            for (i, &k) in e.iter().enumerate() {
                f[map[i]] += k;
            }
            p.add_term(f, *c);
        }
        p
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(e.clone(), *c);
        }
        p
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars);
        let mut p = self.clone();
        for (e, c) in &rhs.terms {
            p.add_term(e.clone(), -*c);
        }
        p
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.mul_trunc(rhs, u32::MAX)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_enumeration_counts() {
        assert_eq!(exponents_of_degree(3, 2).len(), 6);
        assert_eq!(exponents_up_to(2, 3).len(), 10);
        assert_eq!(exponents_of_degree(1, 4), vec![vec![4]]);
    }

    #[test]
    fn cancellation_removes_terms() {
        let x = MultiPoly::var(2, 0);
        let z = &x - &x;
        assert!(z.is_zero());
        assert_eq!(z.degree(), None);
    }

    #[test]
    fn product_and_derivative() {
        let x = MultiPoly::var(2, 0);
        let y = MultiPoly::var(2, 1);
        let p = &(&x + &y) * &(&x - &y);
        assert_eq!(p.coeff(&[2, 0]), 1.0);
        assert_eq!(p.coeff(&[0, 2]), -1.0);
        assert_eq!(p.coeff(&[1, 1]), 0.0);
        assert!(p.laplacian_in(&[0, 1]).is_zero());
        assert_eq!(p.derivative(0).coeff(&[1, 0]), 2.0);
    }

    #[test]
    fn sqrt_series_squares_back() {
        let x = MultiPoly::var(1, 0);
        let y = x.scale(0.3);
        let s = y.one_plus_pow(0.5, 6);
        let sq = s.mul_trunc(&s, 6);
        let expected = &MultiPoly::constant(1, 1.0) + &y;
        assert!((&sq - &expected).prune(1e-15).is_zero());
    }

    #[test]
    fn composition_matches_evaluation() {
        let g = MultiPoly::from_terms(1, [(vec![2], 0.5), (vec![3], 1.0)]);
        let s = &MultiPoly::var(2, 0) + &MultiPoly::var(2, 1).scale(0.1);
        let c = g.compose(std::slice::from_ref(&s), 10);
        let pt = [0.3, -0.7];
        assert!((c.eval(&pt) - g.eval(&[s.eval(&pt)])).abs() < 1e-14);
    }
}
