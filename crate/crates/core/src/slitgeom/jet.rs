//! Taylor data of the signed distance at `0 ∈ Γ`.
//!
//! For polynomial `g` the jet is computed symbolically by iterating the
//! closest-point equations in truncated power series:
//! `s = x' + d·∇g(s)/√(1+|∇g(s)|²)`, `d = (x_n − g(s))·√(1+|∇g(s)|²)`.
//! Each sweep fixes one more degree. Other graphs fall back to least-squares
//! fits of sampled distances with Richardson extrapolation in the stencil size.

use serde::{Deserialize, Serialize};

use super::{signed_distance, BoundaryGraph, GeomError};
use crate::poly::{exponents_up_to, total_degree, MultiPoly};

/// Tangent polynomials of `d`, `ν = ∇d` and `κ = −Δd` at the origin.
///
/// A jet of order `p` carries `d` to degree `p+1`, `ν` to degree `p` and
/// `κ` to degree `p−1`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceJet {
    pub n: usize,
    pub order: u32,
    pub taylor_d: MultiPoly,
    pub taylor_nu: Vec<MultiPoly>,
    pub taylor_kappa: MultiPoly,
    /// Maximum fit residual of the numerical path (0 for the symbolic path).
    pub fit_residual: f64,
}

/// Serializable summary of a jet, listing coefficients of `d`, `ν`, `κ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JetSummary {
    pub order: u32,
    pub d: Vec<(Vec<u32>, f64)>,
    pub kappa: Vec<(Vec<u32>, f64)>,
    pub fit_residual: f64,
}

impl DistanceJet {
    /// Jet of the straight slit.
    pub fn flat(n: usize, order: u32) -> Self {
        Self::from_d(MultiPoly::var(n, n - 1), order, 0.0)
    }

    fn from_d(d: MultiPoly, order: u32, fit_residual: f64) -> Self {
        let n = d.nvars();
        let d = d.truncate(order + 1);
        let taylor_nu: Vec<MultiPoly> = (0..n).map(|i| d.derivative(i).truncate(order)).collect();
        let lap = d.laplacian_in(&(0..n).collect::<Vec<_>>());
        let taylor_kappa = if order == 0 { MultiPoly::zero(n) } else { lap.scale(-1.0).truncate(order - 1) };
        Self { n, order, taylor_d: d, taylor_nu, taylor_kappa, fit_residual }
    }

    /// The jet of the rescaled graph `g_λ(x') = g(λx')/λ`, i.e. `d_λ(x) = d(λx)/λ`.
    pub fn rescaled(&self, lambda: f64) -> Self {
        let mut d = MultiPoly::zero(self.n);
        for (e, c) in self.taylor_d.terms() {
            let deg = total_degree(e) as i32;
            d.add_term(e.clone(), c * lambda.powi(deg - 1));
        }
        Self::from_d(d, self.order, self.fit_residual)
    }

    pub fn kappa_at_origin(&self) -> f64 {
        self.taylor_kappa.coeff(&vec![0; self.n])
    }

    pub fn summary(&self) -> JetSummary {
        JetSummary {
            order: self.order,
            d: self.taylor_d.terms().map(|(e, c)| (e.clone(), c)).collect(),
            kappa: self.taylor_kappa.terms().map(|(e, c)| (e.clone(), c)).collect(),
            fit_residual: self.fit_residual,
        }
    }
}

/// Taylor jet of the signed distance at `0 ∈ Γ`.
pub fn distance_jet(graph: &BoundaryGraph, order: u32) -> Result<DistanceJet, GeomError> {
    if order > graph.k() {
        return Err(GeomError::InsufficientRegularity { order, k: graph.k() });
    }
    if order > 4 {
        return Err(GeomError::InsufficientRegularity { order, k: 4 });
    }
    let n = graph.n();
    if let Some(a) = graph.affine_coefficients() {
        let q = (1.0 + a.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let mut d = MultiPoly::var(n, n - 1).scale(1.0 / q);
        for (i, ai) in a.iter().enumerate() {
            d = &d - &MultiPoly::var(n, i).scale(ai / q);
        }
        return Ok(DistanceJet::from_d(d, order, 0.0));
    }
    if !graph.is_normalized() {
        return Err(GeomError::InvalidGraph("distance jets need a normalized graph (grad g(0) = 0)".into()));
    }
    if n == 1 || graph.is_flat() {
        return Ok(DistanceJet::flat(n, order));
    }
    match graph.polynomial_g() {
        Some(g) => Ok(symbolic_jet(&g, n, order)),
        None => numeric_jet(graph, order),
    }
}

fn symbolic_jet(g: &MultiPoly, n: usize, order: u32) -> DistanceJet {
    let m = n - 1;
    let deg = order + 1;
    let grad_g: Vec<MultiPoly> = (0..m).map(|i| g.derivative(i)).collect();
    let xs: Vec<MultiPoly> = (0..m).map(|i| MultiPoly::var(n, i)).collect();
    let xn = MultiPoly::var(n, m);
    let mut s = xs.clone();
    let mut d = xn.clone();
    for _ in 0..=deg + 1 {
        let gs: Vec<MultiPoly> = grad_g.iter().map(|gi| gi.compose(&s, deg)).collect();
        let mut q1 = MultiPoly::zero(n);
        for gi in &gs {
            q1 = &q1 + &gi.mul_trunc(gi, deg);
        }
        let inv_sqrt = q1.one_plus_pow(-0.5, deg);
        let sqrt = q1.one_plus_pow(0.5, deg);
        let g_at_s = g.compose(&s, deg);
        let d_new = (&xn - &g_at_s).mul_trunc(&sqrt, deg);
        let s_new: Vec<MultiPoly> = (0..m)
            .map(|j| &xs[j] + &d.mul_trunc(&gs[j], deg).mul_trunc(&inv_sqrt, deg))
            .collect();
        s = s_new;
        d = d_new;
    }
    DistanceJet::from_d(d, order, 0.0)
}

const NUMERIC_STENCIL: f64 = 1e-2;

fn numeric_jet(graph: &BoundaryGraph, order: u32) -> Result<DistanceJet, GeomError> {
    let n = graph.n();
    let deg = order + 1;
    let (c1, res1) = fit_distance(graph, NUMERIC_STENCIL, deg)?;
    let (c2, res2) = fit_distance(graph, NUMERIC_STENCIL / 2.0, deg)?;
    let monos = exponents_up_to(n, deg);
    let mut d = MultiPoly::zero(n);
    for (i, e) in monos.iter().enumerate() {
        let c = (4.0 * c2[i] - c1[i]) / 3.0;
        d.add_term(e.clone(), c);
    }
    let mut fixed = MultiPoly::var(n, n - 1);
    for (e, c) in d.terms() {
        if total_degree(e) >= 2 {
            fixed.add_term(e.clone(), c);
        }
    }
    Ok(DistanceJet::from_d(fixed, order, res1.max(res2)))
}

/// Least-squares fit of `d` on a tensor stencil of half-width `s`, returning
/// unscaled monomial coefficients and the maximum residual.
fn fit_distance(graph: &BoundaryGraph, s: f64, deg: u32) -> Result<(Vec<f64>, f64), GeomError> {
    let n = graph.n();
    let monos = exponents_up_to(n, deg);
    let per = (2 * (deg as usize + 2) + 1).min(if n <= 2 { 13 } else { 7 });
    let total = per.pow(n as u32);
    let mut rows = Vec::with_capacity(total);
    let mut rhs = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            y.push(-1.0 + 2.0 * (rem % per) as f64 / (per - 1) as f64);
            rem /= per;
        }
        let x: Vec<f64> = y.iter().map(|v| v * s).collect();
        let sd = signed_distance(graph, &x)?;
        rows.push(monos.iter().map(|e| MultiPoly::monomial(e.clone(), 1.0).eval(&y)).collect::<Vec<_>>());
        rhs.push(sd.d);
    }
    let a = nalgebra::DMatrix::from_fn(rows.len(), monos.len(), |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_vec(rhs.clone());
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-13).map_err(|_| GeomError::NonConvergence { iterations: 0 })?;
    let resid = (&a * &coef - &b).amax();
    let unscaled = monos.iter().enumerate().map(|(j, e)| coef[j] / s.powi(total_degree(e) as i32)).collect();
    Ok((unscaled, resid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slitgeom::{GraphSpec, BoundaryGraphSpec};

    #[test]
    fn flat_jet() {
        let j = distance_jet(&BoundaryGraph::flat(3), 3).unwrap();
        assert_eq!(j.taylor_d, MultiPoly::var(3, 2));
        assert_eq!(j.taylor_nu[2], MultiPoly::constant(3, 1.0));
        assert!(j.taylor_nu[0].is_zero() && j.taylor_kappa.is_zero());
    }

    #[test]
    fn affine_jet_has_no_curvature() {
        let g = BoundaryGraph::polynomial(2, vec![], 4, 0.5).unwrap();
        assert!(distance_jet(&g, 2).unwrap().taylor_kappa.is_zero());
        let tilted = BoundaryGraph::tilted(0.2).unwrap();
        let j = distance_jet(&tilted, 2).unwrap();
        assert!(j.taylor_kappa.is_zero());
        assert!((j.taylor_nu[0].coeff(&[0, 0]) + 0.2 / 1.04f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn parabola_jet() {
        let eps = 0.3;
        let g = BoundaryGraph::paraboloid(2, eps).unwrap();
        let j = distance_jet(&g, 2).unwrap();
        assert!((j.taylor_d.coeff(&[0, 1]) - 1.0).abs() < 1e-15);
        assert!((j.taylor_d.coeff(&[2, 0]) + eps / 2.0).abs() < 1e-15);
        assert!((j.kappa_at_origin() - eps).abs() < 1e-14);
        // the circle of curvature has radius 1/ε: Δd = -ε/(1-εd) along the axis
        assert!((j.taylor_kappa.coeff(&[0, 1]) - eps * eps).abs() < 1e-13);
    }

    #[test]
    fn symbolic_jet_matches_pointwise_distance() {
        let g = BoundaryGraph::paraboloid(2, 0.5).unwrap();
        let j = distance_jet(&g, 4).unwrap();
        for &x in &[[0.01, 0.02], [-0.02, 0.015], [0.03, -0.01]] {
            let exact = signed_distance(&g, &x).unwrap().d;
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert!((j.taylor_d.eval(&x) - exact).abs() < 20.0 * r.powi(6), "{x:?}");
        }
    }

    #[test]
    fn numeric_path_agrees_with_symbolic() {
        let eps = 0.2;
        let values: Vec<f64> = (0..81).map(|i| -2.0 + 4.0 * i as f64 / 80.0).map(|x| eps / 2.0 * x * x).collect();
        let spec = BoundaryGraphSpec {
            n: 2,
            g: GraphSpec::Samples { lo: -2.0, hi: 2.0, shape: vec![81], values, order: 4 },
            k: 3,
            alpha: 0.5,
            norm_bound: 1.0,
            extent: 2.0,
        };
        let sampled = BoundaryGraph::from_spec(spec).unwrap();
        let j = distance_jet(&sampled, 1).unwrap();
        assert!((j.kappa_at_origin() - eps).abs() < 1e-5, "{}", j.kappa_at_origin());
        assert_eq!(j.taylor_d.coeff(&[0, 1]), 1.0);
    }

    #[test]
    fn order_is_bounded_by_regularity() {
        let g = BoundaryGraph::abs_power(2, 0.1, 0.25).unwrap();
        assert!(matches!(distance_jet(&g, 1), Err(GeomError::InsufficientRegularity { .. })));
    }
}
