use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::sampling::{annulus_samples, rng, Sample, TangentFrame};
use super::ExpandError;
use crate::mollify::{glued_fields, MollifiedField};
use crate::pdesolve::DiscreteField;
use crate::poly::{exponents_up_to, total_degree};
use crate::slitgeom::frame;
use crate::xrpoly::XRPolynomial;

/// The denominator `W` of the quotient `u/W`.
#[derive(Clone, Copy, Debug)]
pub enum Denominator<'a> {
    /// The model `U₀` of the field's own geometry, evaluated exactly.
    ModelU0,
    /// A computed positive solution `U`, interpolated.
    Field(&'a DiscreteField),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QuotientKind {
    ByU0,
    ByU,
}

impl QuotientKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QuotientKind::ByU0 => "BY_U0",
            QuotientKind::ByU => "BY_U",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    /// Outermost scale `λ₀`.
    pub lambda0: f64,
    /// Ratio between successive scales.
    pub rho: f64,
    pub scales: usize,
    pub samples_per_scale: usize,
    pub seed: u64,
    /// Samples keep `r > min_r_factor·h`.
    pub min_r_factor: f64,
    /// Discretization floor; an innermost residual below ten times this is
    /// left out of the regression.
    pub floor: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { lambda0: 0.5, rho: 0.5, scales: 5, samples_per_scale: 200, seed: 0, min_r_factor: 4.0, floor: None }
    }
}

/// Least-squares line through `(log λ, log residual)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub used: usize,
    pub dropped_innermost: bool,
}

/// Ordinary least squares on log–log data over at least four scales. Returns
/// `None` when fewer than four positive residuals remain.
pub fn loglog_fit(scales: &[f64], residuals: &[f64], floor: Option<f64>) -> Option<Regression> {
    let mut pts: Vec<(f64, f64)> =
        scales.iter().zip(residuals).filter(|(_, r)| **r > 0.0).map(|(s, r)| (s.ln(), r.ln())).collect();
    let mut dropped = false;
    if let (Some(f), Some(&last)) = (floor, residuals.last()) {
        if last < 10.0 * f && last > 0.0 && pts.len() > 4 {
            pts.pop();
            dropped = true;
        }
    }
    if pts.len() < 4 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(Regression { slope, intercept, r_squared, used: pts.len(), dropped_innermost: dropped })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub base_point: Vec<f64>,
    pub kind: QuotientKind,
    pub degree: u32,
    /// Innermost polynomial in local `(x, r)` coordinates at `Z`.
    pub coefficients: XRPolynomial,
    pub scales: Vec<f64>,
    /// Sup of `|u/W − P_λ|` over the half-annulus at each scale.
    pub residuals: Vec<f64>,
    /// Sup of `|P_λ − P_{λ/ρ}|` over the samples of `B_λ`, from the second scale on.
    pub corrections: Vec<f64>,
    pub regression: Option<Regression>,
    pub alpha_hat: Option<f64>,
    pub condition: f64,
    pub samples_per_scale: usize,
}

/// One accepted sample with the radial variable used in the fit and the quotient.
#[derive(Clone, Debug)]
pub(crate) struct Point {
    pub sample: Sample,
    pub rv: f64,
    pub q: f64,
}

/// Per scale, samples of the ball `B_λ` (for fitting) and of the
/// half-annulus `{ρλ < |X − Z| < λ}` (for residuals).
pub(crate) struct Shells {
    pub scales: Vec<f64>,
    pub balls: Vec<Vec<Point>>,
    pub shells: Vec<Vec<Point>>,
}

pub(crate) fn prepare(
    u: &DiscreteField,
    w: Denominator,
    tf: &TangentFrame,
    opts: &FitOptions,
    rbar: Option<&MollifiedField>,
) -> Result<Shells, ExpandError> {
    let grid = u.grid();
    if tf.n() != grid.n() {
        return Err(ExpandError::Invalid("base point dimension differs from the grid".into()));
    }
    if !(opts.rho > 0.0 && opts.rho < 1.0) || opts.lambda0 <= 0.0 {
        return Err(ExpandError::Invalid(format!("scales need 0 < ρ < 1 and λ₀ > 0, got {} and {}", opts.rho, opts.lambda0)));
    }
    let h = grid.h();
    let scales: Vec<f64> = (0..opts.scales).map(|m| opts.lambda0 * opts.rho.powi(m as i32)).collect();
    if let Some(&last) = scales.last() {
        if last < 8.0 * h {
            return Err(ExpandError::WindowTooSmall(format!("innermost scale {last:.3e} is below 8h = {:.3e}", 8.0 * h)));
        }
    }
    // the same stream at every scale makes the sample sets self-similar
    let mut balls = Vec::with_capacity(scales.len());
    let mut shells = Vec::with_capacity(scales.len());
    for &lam in &scales {
        for (stream, lo, out) in [(0u64, 0.0, &mut balls), (1, opts.rho * lam, &mut shells)] {
            let mut rng = rng(opts.seed.wrapping_mul(2).wrapping_add(stream));
            let samples = annulus_samples(grid, tf, lo, lam, opts.samples_per_scale, opts.min_r_factor * h, &mut rng)?;
            out.push(samples.into_iter().map(|s| point(u, w, s, rbar)).collect::<Result<Vec<_>, _>>()?);
        }
    }
    Ok(Shells { scales, balls, shells })
}

fn point(u: &DiscreteField, w: Denominator, s: Sample, rbar: Option<&MollifiedField>) -> Result<Point, ExpandError> {
    let grid = u.grid();
    let mut xx = s.x.clone();
    xx.push(s.t);
    // the quotient of interpolants is exact on constant quotients
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, c) in grid.interpolation_stencil(&xx) {
        num += c * u.value(i);
        den += c * match w {
            Denominator::ModelU0 => frame(grid.graph(), &grid.coords(i))?.u0,
            Denominator::Field(f) => f.value(i),
        };
    }
    if den.abs() < 1e-14 {
        return Err(ExpandError::QuotientBlowup { at: xx, value: den });
    }
    let rv = match rbar {
        Some(field) => glued_fields(field, &xx)?.r_bar.value,
        None => s.r,
    };
    Ok(Point { sample: s, rv, q: num / den })
}

/// Scaled monomial `(y/λ)^μ (r/λ)^m`.
pub(crate) fn scaled_monomial(e: &[u32], y: &[f64], r: f64, lam: f64) -> f64 {
    let n = y.len();
    let mut v = (r / lam).powi(e[n] as i32);
    for i in 0..n {
        v *= (y[i] / lam).powi(e[i] as i32);
    }
    v
}

/// Least squares with a condition check; returns the solution and the condition number.
pub(crate) fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Result<(DVector<f64>, f64), ExpandError> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > 1e12 {
        return Err(ExpandError::IllConditioned { condition });
    }
    let x = svd.solve(&b, 0.0).map_err(|e| ExpandError::Invalid(e.to_string()))?;
    Ok((x, condition))
}

/// Fits `u/W ≈ P` of the given degree in local `(x, r)` coordinates at `Z`,
/// nested from the outermost scale inward: at each scale the correction is
/// refit on samples of `B_λ ∩ {r > 4h}`.
pub fn fit_expansion(
    u: &DiscreteField,
    w: Denominator,
    tf: &TangentFrame,
    degree: u32,
    opts: &FitOptions,
) -> Result<ExpansionFit, ExpandError> {
    fit_prepared(&prepare(u, w, tf, opts, None)?, w, tf, degree, opts)
}

pub(crate) fn fit_prepared(
    shells: &Shells,
    w: Denominator,
    tf: &TangentFrame,
    degree: u32,
    opts: &FitOptions,
) -> Result<ExpansionFit, ExpandError> {
    let n = tf.n();
    let basis = exponents_up_to(n + 1, degree);
    let mut p = XRPolynomial::zero(n);
    let mut residuals = Vec::new();
    let mut corrections = Vec::new();
    let mut condition: f64 = 0.0;
    for (m, &lam) in shells.scales.iter().enumerate() {
        let ball = &shells.balls[m];
        let a = DMatrix::from_fn(ball.len(), basis.len(), |i, j| scaled_monomial(&basis[j], &ball[i].sample.y, ball[i].rv, lam));
        let b = DVector::from_iterator(ball.len(), ball.iter().map(|pt| pt.q - p.eval(&pt.sample.y, pt.rv)));
        let (c, cond) = least_squares(a, b)?;
        condition = condition.max(cond);
        let mut corr = XRPolynomial::zero(n);
        for (e, ci) in basis.iter().zip(c.iter()) {
            corr.add_term(&e[..n], e[n], ci / lam.powi(total_degree(e) as i32));
        }
        if m > 0 {
            corrections.push(ball.iter().map(|pt| corr.eval(&pt.sample.y, pt.rv).abs()).fold(0.0, f64::max));
        }
        p = &p + &corr;
        residuals.push(shells.shells[m].iter().map(|pt| (pt.q - p.eval(&pt.sample.y, pt.rv)).abs()).fold(0.0, f64::max));
    }
    let regression = loglog_fit(&shells.scales, &residuals, opts.floor);
    let alpha_hat = regression.as_ref().map(|r| r.slope - degree as f64);
    Ok(ExpansionFit {
        base_point: tf.z.clone(),
        kind: match w {
            Denominator::ModelU0 => QuotientKind::ByU0,
            Denominator::Field(_) => QuotientKind::ByU,
        },
        degree,
        coefficients: p,
        scales: shells.scales.clone(),
        residuals,
        corrections,
        regression,
        alpha_hat,
        condition,
        samples_per_scale: opts.samples_per_scale,
    })
}

/// Fits of `u/U₀` at degrees `k` and `k+1` against `u/U` at degree `k+1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarnackGainReport {
    pub k: u32,
    pub by_u0_k: ExpansionFit,
    pub by_u0_k1: ExpansionFit,
    pub by_u_k1: ExpansionFit,
    /// Residual decay rates (log–log slopes) at degree `k+1`.
    pub rate_u0_k1: Option<f64>,
    pub rate_u_k1: Option<f64>,
    pub gain: Option<f64>,
    /// `u/U` residuals at degree `k+1` decay faster than `λ^{k+1}`.
    pub sustains_extra_degree: bool,
}

pub fn harnack_gain(
    u: &DiscreteField,
    big_u: &DiscreteField,
    tf: &TangentFrame,
    k: u32,
    opts: &FitOptions,
) -> Result<HarnackGainReport, ExpandError> {
    let by_u0 = prepare(u, Denominator::ModelU0, tf, opts, None)?;
    let by_u = prepare(u, Denominator::Field(big_u), tf, opts, None)?;
    let by_u0_k = fit_prepared(&by_u0, Denominator::ModelU0, tf, k, opts)?;
    let by_u0_k1 = fit_prepared(&by_u0, Denominator::ModelU0, tf, k + 1, opts)?;
    let by_u_k1 = fit_prepared(&by_u, Denominator::Field(big_u), tf, k + 1, opts)?;
    let rate_u0_k1 = by_u0_k1.regression.as_ref().map(|r| r.slope);
    let rate_u_k1 = by_u_k1.regression.as_ref().map(|r| r.slope);
    let gain = rate_u_k1.zip(rate_u0_k1).map(|(a, b)| a - b);
    let sustains_extra_degree = rate_u_k1.is_some_and(|r| r > (k + 1) as f64);
    Ok(HarnackGainReport { k, by_u0_k, by_u0_k1, by_u_k1, rate_u0_k1, rate_u_k1, gain, sustains_extra_degree })
}
