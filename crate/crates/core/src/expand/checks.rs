use serde::{Deserialize, Serialize};

use super::fit::loglog_fit;
use super::ExpandError;
use crate::pdesolve::{DiscreteField, GraphFit, NodeClass};
use crate::slitgeom::frame;

/// Normalized gradient-expansion errors per dyadic annulus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub a: f64,
    pub alpha: f64,
    pub scales: Vec<f64>,
    /// `sup |∇u − a∇U₀| / (|X−Z|^α r^{−1/2})`.
    pub full: Vec<f64>,
    /// `sup |∇ₓu − a∇ₓU₀| / (|X−Z|^α U₀/r)`.
    pub tangential: Vec<f64>,
    pub nodes: Vec<usize>,
    pub bounded: bool,
}

/// Compares node gradients of `u` with `a∇U₀` on the annuli
/// `{λ/2 < |X − Z| < λ}`, keeping nodes with `r > 4h` whose stencils stay
/// inside the grid.
pub fn gradient_expansion_check(
    u: &DiscreteField,
    z: &[f64],
    a: f64,
    alpha: f64,
    scales: &[f64],
) -> Result<GradientReport, ExpandError> {
    let grid = u.grid();
    let n = grid.n();
    let h = grid.h();
    let mut full = vec![0.0f64; scales.len()];
    let mut tangential = vec![0.0f64; scales.len()];
    let mut nodes = vec![0usize; scales.len()];
    let outer = scales.iter().copied().fold(0.0, f64::max);
    for idx in 0..grid.len() {
        if !matches!(grid.class(idx), NodeClass::Interior | NodeClass::Symmetry) {
            continue;
        }
        let x = grid.coords(idx);
        let dist = x[..n].iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + x[n] * x[n];
        let dist = dist.sqrt();
        if dist >= outer {
            continue;
        }
        let Some(m) = scales.iter().position(|&l| dist < l && dist > 0.5 * l) else { continue };
        let fr = frame(grid.graph(), &x)?;
        if fr.r <= 4.0 * h || fr.u0 < 1e-12 {
            continue;
        }
        let Some(g) = u.node_gradient(idx) else { continue };
        let gu0 = fr.grad_u0();
        let diff: Vec<f64> = g.iter().zip(&gu0).map(|(gi, ui)| gi - a * ui).collect();
        let e_full = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
        let e_x = diff[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = dist.powf(alpha);
        full[m] = full[m].max(e_full / (scale / fr.r.sqrt()));
        tangential[m] = tangential[m].max(e_x / (scale * fr.u0 / fr.r));
        nodes[m] += 1;
    }
    if nodes.contains(&0) {
        return Err(ExpandError::WindowTooSmall("an annulus contains no admissible nodes".into()));
    }
    let bounded = [&full, &tangential].iter().all(|v| v.iter().all(|x| *x <= 4.0 * v[0].max(1e-300)) || v[0] == 0.0);
    Ok(GradientReport { a, alpha, scales: scales.to_vec(), full, tangential, nodes, bounded })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapPoint {
    pub x1: f64,
    pub g_hat: f64,
    pub g_hat_prime: f64,
    /// Offset `δ = 2√h` along `+eₙ`; `−u₁/u₂` is taken at `δ` and `2δ` and
    /// extrapolated linearly to `0`.
    pub offset: f64,
    pub ratio_near: f64,
    pub ratio_far: f64,
    pub extrapolated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub points: Vec<BootstrapPoint>,
    /// Sample abscissae dropped for a degenerate `u₂` or a missing fit.
    pub excluded: Vec<f64>,
    pub max_abs_deviation: f64,
    /// Deviation relative to `max |ĝ'|`; `None` when `ĝ' ≈ 0`.
    pub max_rel_deviation: Option<f64>,
}

/// Compares `−u₁/u₂` near `Γ̂` with the slope `ĝ'` of the fitted graph. On `Γ`
/// the level set `u = 0` gives `u₁ + ĝ' u₂ = 0`.
pub fn bootstrap_check(u: &DiscreteField, fit: &GraphFit, abscissae: &[f64]) -> Result<BootstrapReport, ExpandError> {
    let grid = u.grid();
    if grid.n() != 2 {
        return Err(ExpandError::Invalid("bootstrap check needs n = 2".into()));
    }
    let h = grid.h();
    let threshold = 1e-8 * u.max_abs();
    let offset = 2.0 * h.sqrt();
    let ratio = |x1: f64, x2: f64| -> Option<f64> {
        let f = |a: f64, b: f64| u.interpolate(&[a, b, 0.0]);
        let u1 = (f(x1 + h, x2) - f(x1 - h, x2)) / (2.0 * h);
        let u2 = (f(x1, x2 + h) - f(x1, x2 - h)) / (2.0 * h);
        (u2.abs() > threshold).then(|| -u1 / u2)
    };
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for &x1 in abscissae {
        let Some((g, gp)) = fit.eval(x1) else {
            excluded.push(x1);
            continue;
        };
        match (ratio(x1, g + offset), ratio(x1, g + 2.0 * offset)) {
            (Some(q1), Some(q2)) => points.push(BootstrapPoint {
                x1,
                g_hat: g,
                g_hat_prime: gp,
                offset,
                ratio_near: q1,
                ratio_far: q2,
                extrapolated: 2.0 * q1 - q2,
            }),
            _ => excluded.push(x1),
        }
    }
    if points.is_empty() {
        return Err(ExpandError::DegenerateDenominator(abscissae.len()));
    }
    let max_abs_deviation = points.iter().map(|p| (p.extrapolated - p.g_hat_prime).abs()).fold(0.0, f64::max);
    let slope_scale = points.iter().map(|p| p.g_hat_prime.abs()).fold(0.0, f64::max);
    let max_rel_deviation = (slope_scale > 1e-3).then(|| max_abs_deviation / slope_scale);
    Ok(BootstrapReport { points, excluded, max_abs_deviation, max_rel_deviation })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GrowthClass {
    Regular,
    SingularCandidate,
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub x0: Vec<f64>,
    pub radii: Vec<f64>,
    pub sups: Vec<f64>,
    pub exponent: f64,
    pub r_squared: f64,
    pub class: GrowthClass,
}

const GROWTH_RADII: usize = 8;

/// Log–log slope of `sup_{B_ρ(X₀)} |u|` over `ρ ∈ [8h, 0.2]`, `X₀ = (x₀, 0)`.
pub fn optimal_growth_check(u: &DiscreteField, x0: &[f64]) -> Result<GrowthReport, ExpandError> {
    let grid = u.grid();
    let n = grid.n();
    let h = grid.h();
    if x0.len() != n {
        return Err(ExpandError::Invalid("base point dimension differs from the grid".into()));
    }
    let (lo, hi) = (8.0 * h, 0.2);
    if lo >= hi {
        return Err(ExpandError::WindowTooSmall(format!("8h = {lo:.3e} is not below 0.2")));
    }
    let eps = 1e-8 * u.max_abs();
    let plane = grid.lattice().nx * grid.lattice().nj;
    let near: Vec<usize> = (0..plane)
        .filter(|&i| grid.class(i).is_free())
        .filter(|&i| grid.coords(i)[..n].iter().zip(x0).all(|(a, b)| (a - b).abs() <= 2.0 * h))
        .collect();
    let contact = near.iter().filter(|&&i| u.value(i) < eps).count();
    if contact == 0 || contact == near.len() {
        return Err(ExpandError::NotOnFreeBoundary(format!("{contact} of {} plane nodes within 2h are in contact", near.len())));
    }
    let radii: Vec<f64> = (0..GROWTH_RADII).map(|i| lo * (hi / lo).powf(i as f64 / (GROWTH_RADII - 1) as f64)).collect();
    let mut sups = vec![0.0f64; radii.len()];
    for idx in 0..grid.len() {
        let x = grid.coords(idx);
        let d2 = x[..n].iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + x[n] * x[n];
        let d = d2.sqrt();
        if d > hi {
            continue;
        }
        let v = u.value(idx).abs();
        for (s, &rad) in sups.iter_mut().zip(&radii) {
            if d <= rad {
                *s = s.max(v);
            }
        }
    }
    if sups.contains(&0.0) {
        return Err(ExpandError::WindowTooSmall("u vanishes on a ball of the window".into()));
    }
    let reg = loglog_fit(&radii, &sups, None).ok_or_else(|| ExpandError::WindowTooSmall("too few radii".into()))?;
    let class = if (1.4..=1.6).contains(&reg.slope) {
        GrowthClass::Regular
    } else if reg.slope >= 1.9 {
        GrowthClass::SingularCandidate
    } else {
        GrowthClass::Indeterminate
    };
    Ok(GrowthReport { x0: x0.to_vec(), radii, sups, exponent: reg.slope, r_squared: reg.r_squared, class })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::pdesolve::{extract_free_boundary, signorini_solve, Grid, GridMode, SignoriniConfig};
    use crate::slitgeom::{model_u0, BoundaryGraph};

    fn model(x: &[f64]) -> f64 {
        let (a, t) = (x[x.len() - 2], x[x.len() - 1]);
        a.hypot(t).powf(1.5) * (1.5 * t.atan2(a)).cos()
    }

    #[test]
    fn growth_of_the_model_solution() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 257, GridMode::Signorini).unwrap());
        let (u, _) = signorini_solve(&grid, &model, &SignoriniConfig::default()).unwrap();
        let fb = extract_free_boundary(&u).unwrap();
        let rep = optimal_growth_check(&u, &fb.points[0]).unwrap();
        assert!((rep.exponent - 1.5).abs() < 0.05, "{}", rep.exponent);
        assert_eq!(rep.class, GrowthClass::Regular);
        assert!(matches!(optimal_growth_check(&u, &[0.5]), Err(ExpandError::NotOnFreeBoundary(_))));
    }

    #[test]
    fn zero_field_is_degenerate() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 65, GridMode::Signorini).unwrap());
        let u = DiscreteField::from_fn(grid, "zero", |_| 0.0).unwrap();
        assert!(optimal_growth_check(&u, &[0.0]).is_err());
    }

    #[test]
    fn gradient_expansion_of_exact_slit_polynomial() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 257, GridMode::Laplace).unwrap());
        let a = 0.8;
        let u = DiscreteField::from_fn(grid.clone(), "exact", |x| model_u0(x[0], x[1]) * (a + 2.0 * x[0] - x[0].hypot(x[1])))
            .unwrap();
        let scales = [0.8, 0.4, 0.2, 0.1];
        let rep = gradient_expansion_check(&u, &[0.0], a, 1.0, &scales).unwrap();
        assert!(rep.bounded, "{rep:?}");
        let pure = DiscreteField::from_fn(grid, "exact", |x| a * model_u0(x[0], x[1])).unwrap();
        let rep = gradient_expansion_check(&pure, &[0.0], a, 1.0, &scales).unwrap();
        assert!(rep.full.iter().all(|v| *v < 0.05), "{:?}", rep.full);
    }
}
