use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fit::{least_squares, prepare, Denominator, FitOptions, Point};
use super::sampling::TangentFrame;
use super::ExpandError;
use crate::mollify::MollifiedField;
use crate::pdesolve::DiscreteField;
use crate::poly::{exponents_up_to, total_degree};
use crate::xrpoly::{solve_approximating, LaplacianSystem, XRPolynomial};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub k: u32,
    pub alpha: f64,
    pub scales: Vec<f64>,
    /// Approximating polynomial `P_λ` at each scale.
    pub polys: Vec<XRPolynomial>,
    /// `‖P_{ρλ} − P_λ‖` on the samples of `B_λ`.
    pub diffs: Vec<f64>,
    /// `diffs · λ^{−(k+1+α)}`.
    pub normalized: Vec<f64>,
    /// `‖A(P_λ) − R‖` for every step.
    pub constraint_defects: Vec<f64>,
    /// For `k = 0`, `aₙ + 2aₙ₊₁ − q` at every step.
    pub k0_defects: Vec<f64>,
    /// `max normalized / first normalized`.
    pub growth: f64,
    pub bounded: bool,
}

/// Improvement of flatness as a diagnostic: at each scale `λ = ρᵐλ₀` the
/// quotient is fit within the affine space `{P : A(P) = R}` by correcting
/// the previous polynomial with solutions of `A(B) = 0`. With `rbar` the
/// radial variable is the glued `r̄`.
#[allow(clippy::too_many_arguments)]
pub fn flatness_iteration(
    u: &DiscreteField,
    w: Denominator,
    tf: &TangentFrame,
    alpha: f64,
    system: &LaplacianSystem,
    rhs: &XRPolynomial,
    opts: &FitOptions,
    rbar: Option<&MollifiedField>,
) -> Result<FlatnessReport, ExpandError> {
    let n = tf.n();
    let k = system.k();
    if opts.scales < 5 {
        return Err(ExpandError::WindowTooSmall(format!("{} scales give fewer than 4 steps", opts.scales)));
    }
    let shells = prepare(u, w, tf, opts, rbar)?;
    let zero = XRPolynomial::zero(n);
    let particular = solve_approximating(system, rhs, &zero)?;
    let seeds = exponents_up_to(n, k + 1);
    let basis: Vec<XRPolynomial> = seeds
        .iter()
        .map(|mu| solve_approximating(system, &zero, &XRPolynomial::term(mu, 0, 1.0)))
        .collect::<Result<_, _>>()?;
    let mut p = particular;
    let mut polys = Vec::new();
    let mut diffs = Vec::new();
    let mut normalized = Vec::new();
    let mut constraint_defects = Vec::new();
    let mut k0_defects = Vec::new();
    let q0 = rhs.coeff(&vec![0; n], 0);
    let mut prev_ball: &[Point] = &[];
    for (m, &lam) in shells.scales.iter().enumerate() {
        let ball = &shells.balls[m];
        let a = DMatrix::from_fn(ball.len(), basis.len(), |i, j| {
            basis[j].eval(&ball[i].sample.y, ball[i].rv) / lam.powi(total_degree(&seeds[j]) as i32)
        });
        let b = DVector::from_iterator(ball.len(), ball.iter().map(|pt| pt.q - p.eval(&pt.sample.y, pt.rv)));
        let (c, _) = least_squares(a, b)?;
        let mut corr = XRPolynomial::zero(n);
        for ((bj, mu), cj) in basis.iter().zip(&seeds).zip(c.iter()) {
            corr = &corr + &bj.scale(cj / lam.powi(total_degree(mu) as i32));
        }
        if m > 0 {
            let outer = shells.scales[m - 1];
            let d = prev_ball.iter().map(|pt| corr.eval(&pt.sample.y, pt.rv).abs()).fold(0.0, f64::max);
            diffs.push(d);
            normalized.push(d * outer.powf(-(k as f64 + 1.0 + alpha)));
        }
        p = &p + &corr;
        constraint_defects.push((&system.apply(&p) - &rhs.truncate(k)).norm());
        if k == 0 {
            let mut en = vec![0; n];
            en[n - 1] = 1;
            k0_defects.push(p.coeff(&en, 0) + 2.0 * p.coeff(&vec![0; n], 1) - q0);
        }
        polys.push(p.clone());
        prev_ball = ball;
    }
    let first = normalized.first().copied().unwrap_or(0.0);
    let max = normalized.iter().copied().fold(0.0, f64::max);
    let growth = if first > 0.0 { max / first } else if max == 0.0 { 1.0 } else { f64::INFINITY };
    Ok(FlatnessReport {
        k,
        alpha,
        scales: shells.scales,
        polys,
        diffs,
        normalized,
        constraint_defects,
        k0_defects,
        growth,
        bounded: growth <= 4.0,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::pdesolve::{Grid, GridMode};
    use crate::slitgeom::{model_u0, BoundaryGraph};

    fn field(npts: usize, f: impl Fn(&[f64]) -> f64) -> DiscreteField {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), npts, GridMode::Laplace).unwrap());
        DiscreteField::from_fn(grid, "test", f).unwrap()
    }

    #[test]
    fn approximating_polynomial_is_a_fixed_point() {
        let u = field(513, |x| model_u0(x[0], x[1]) * (1.0 + 0.5 * (2.0 * x[0] - x[0].hypot(x[1]))));
        let sys = LaplacianSystem::flat(1, 1);
        let tf = TangentFrame::new(&[0.0], None);
        let rep = flatness_iteration(&u, Denominator::ModelU0, &tf, 0.5, &sys, &XRPolynomial::zero(1), &FitOptions::default(), None)
            .unwrap();
        assert!(rep.diffs.iter().all(|d| *d < 1e-3), "{:?}", rep.diffs);
        assert!(rep.constraint_defects.iter().all(|d| *d < 1e-12));
    }

    #[test]
    fn planted_homogeneous_perturbation_decays_at_its_rate() {
        let gamma = 2.5;
        let u = field(2049, |x| model_u0(x[0], x[1]) * (1.0 + 0.2 * x[0].hypot(x[1]).powf(gamma) * (1.0 + 0.5 * x[0] / x[0].hypot(x[1]).max(1e-300))));
        let sys = LaplacianSystem::flat(1, 1);
        let tf = TangentFrame::new(&[0.0], None);
        let opts = FitOptions { scales: 6, min_r_factor: 1.0, samples_per_scale: 400, ..Default::default() };
        let rep = flatness_iteration(&u, Denominator::ModelU0, &tf, 0.5, &sys, &XRPolynomial::zero(1), &opts, None).unwrap();
        let planted = 0.5f64.powf(gamma);
        for w in rep.diffs.windows(2) {
            let ratio = w[1] / w[0];
            assert!((ratio / planted - 1.0).abs() < 0.05, "{:?}", rep.diffs);
        }
    }

    #[test]
    fn k0_constraint_holds_exactly() {
        let u = field(513, |x| model_u0(x[0], x[1]) * (1.0 + 0.3 * x[0] + 0.35 * x[0].hypot(x[1]) + 0.1 * x[0] * x[0]));
        let sys = LaplacianSystem::flat(1, 0);
        let tf = TangentFrame::new(&[0.0], None);
        let rhs = XRPolynomial::constant(1, 1.0);
        let rep = flatness_iteration(&u, Denominator::ModelU0, &tf, 0.5, &sys, &rhs, &FitOptions::default(), None).unwrap();
        assert!(rep.k0_defects.iter().all(|d| d.abs() < 1e-14), "{:?}", rep.k0_defects);
    }
}
