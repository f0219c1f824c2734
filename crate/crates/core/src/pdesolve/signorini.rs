//! Thin obstacle problem: minimize the Dirichlet energy with `u ≥ 0` on the
//! plane `x_{n+1} = 0`, by projected SOR nested from coarse to fine grids.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::field::{DiscreteField, FieldMeta};
use super::grid::{Grid, GridMode, NodeClass};
use super::laplace::SolveStats;
use super::operator::{energy, projected_sor, stencil_laplacian};
use super::SolveError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SignoriniConfig {
    /// Stop once the largest update of a sweep is `≤ tol·‖φ‖∞`.
    pub tol: f64,
    /// Relaxation factor; `None` picks `2/(1 + sin(πh/2))` per level.
    pub omega: Option<f64>,
    pub max_sweeps: usize,
    /// Start from solves on successively halved grids.
    pub nested: bool,
}

impl Default for SignoriniConfig {
    fn default() -> Self {
        Self { tol: 1e-10, omega: None, max_sweeps: 200_000, nested: true }
    }
}

fn coarser(npts: usize) -> Option<usize> {
    let c = npts.div_ceil(2);
    (npts % 4 == 1 && c >= 17).then_some(c)
}

pub fn signorini_solve(
    grid: &Arc<Grid>,
    phi: &dyn Fn(&[f64]) -> f64,
    cfg: &SignoriniConfig,
) -> Result<(DiscreteField, SolveStats), SolveError> {
    let start = Instant::now();
    if grid.mode() != GridMode::Signorini {
        return Err(SolveError::InvalidGrid("signorini_solve needs a Signorini-mode grid".into()));
    }
    let mut sizes = vec![grid.npts()];
    if cfg.nested {
        while let Some(c) = coarser(*sizes.last().expect("non-empty")) {
            sizes.push(c);
        }
    }
    let phi_norm = (0..grid.len())
        .filter(|&i| grid.class(i) == NodeClass::Outer)
        .map(|i| phi(&grid.coords(i)).abs())
        .fold(0.0, f64::max);
    if !phi_norm.is_finite() {
        return Err(SolveError::NonFinite(0));
    }
    let mut stats = SolveStats::default();
    let mut prev: Option<DiscreteField> = None;
    for (level, &npts) in sizes.iter().enumerate().rev() {
        let g = if level == 0 { grid.clone() } else { Arc::new(Grid::new(grid.graph(), npts, GridMode::Signorini)?) };
        let mut u: Vec<f64> = (0..g.len())
            .map(|idx| {
                let x = g.coords(idx);
                match (g.class(idx), &prev) {
                    (NodeClass::Outer, _) => phi(&x),
                    (_, Some(c)) => c.interpolate(&x),
                    (_, None) => 0.0,
                }
            })
            .collect();
        for (idx, v) in u.iter_mut().enumerate() {
            if g.class(idx) == NodeClass::ContactCandidate {
                *v = v.max(0.0);
            }
        }
        let omega = cfg.omega.unwrap_or_else(|| 2.0 / (1.0 + (PI * g.h() / 2.0).sin()));
        let finest = level == 0;
        let target = cfg.tol * phi_norm;
        let l = g.lattice();
        let mut converged = phi_norm == 0.0;
        let mut sweeps = 0;
        let mut last = 0.0;
        if finest {
            stats.energy_history.push(energy(l, &u));
        }
        while !converged && sweeps < cfg.max_sweeps {
            last = projected_sor(l, &mut u, omega);
            sweeps += 1;
            if finest {
                stats.energy_history.push(energy(l, &u));
            }
            converged = last <= target;
        }
        if !converged {
            return Err(SolveError::NonConvergence { iterations: sweeps, residual: last / phi_norm });
        }
        if finest {
            stats.iterations = sweeps;
            stats.residual = if phi_norm > 0.0 { last / phi_norm } else { 0.0 };
            stats.converged = true;
        }
        let meta = FieldMeta { equation: "signorini".into(), residual: stats.residual };
        prev = Some(DiscreteField::new(g, u, meta)?);
    }
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok((prev.expect("at least one level"), stats))
}

/// Discrete optimality system on the plane, with `Δ_h` the unscaled
/// reflected stencil `Σ w(uⱼ − uᵢ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Complementarity {
    pub min_u: f64,
    pub max_laplacian: f64,
    /// `max u·(−Δ_h u)₊`.
    pub max_product: f64,
    pub eps_c: f64,
    pub holds: bool,
}

/// Checks `u ≥ 0`, `Δ_h u ≤ ε_c` and `u·(−Δ_h u)₊ ≤ ε_c·‖u‖∞` at every
/// plane node, with `ε_c = 10·tol·‖u‖∞`.
pub fn complementarity(u: &DiscreteField, tol: f64) -> Complementarity {
    let grid = u.grid();
    let l = grid.lattice();
    let norm = u.max_abs();
    let eps_c = 10.0 * tol * norm;
    let (mut min_u, mut max_lap, mut max_prod) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for idx in 0..l.nx * l.nj {
        if !grid.class(idx).is_free() {
            continue;
        }
        let v = u.value(idx);
        let lap = stencil_laplacian(l, u.values(), idx);
        min_u = min_u.min(v);
        max_lap = max_lap.max(lap);
        max_prod = max_prod.max(v * (-lap).max(0.0));
    }
    let holds = min_u >= 0.0 && max_lap <= eps_c && max_prod <= eps_c * norm.max(1e-300);
    Complementarity { min_u, max_laplacian: max_lap, max_product: max_prod, eps_c, holds }
}

/// Moving-least-squares quadratic fit `x_n = ĝ(x')` through free-boundary
/// points, `n = 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphFit {
    pub points: Vec<(f64, f64)>,
    pub width: f64,
}

impl GraphFit {
    /// `(ĝ(s), ĝ'(s))`, or `None` with fewer than three points in reach.
    pub fn eval(&self, s: f64) -> Option<(f64, f64)> {
        let mut m = Matrix3::zeros();
        let mut rhs = Vector3::zeros();
        let mut used = 0;
        for &(p, v) in &self.points {
            let z = (p - s) / self.width;
            if z.abs() > 3.0 {
                continue;
            }
            used += 1;
            let w = (-z * z).exp();
            let b = Vector3::new(1.0, p - s, (p - s).powi(2));
            m += w * b * b.transpose();
            rhs += w * v * b;
        }
        if used < 3 {
            return None;
        }
        let c = m.lu().solve(&rhs)?;
        Some((c[0], c[1]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundary {
    /// Points of `Γ̂` in `ℝⁿ`.
    pub points: Vec<Vec<f64>>,
    pub contact_nodes: usize,
    pub plane_nodes: usize,
    pub eps_contact: f64,
    pub fit: Option<GraphFit>,
}

/// Locates the sub-grid zero of `u` past the last contact node `p` on a grid
/// line. Near a regular free boundary `u ∼ c·s^{3/2}`, so `u^{2/3}` is
/// interpolated linearly, clamped to `[x_p, x_{p+1}]`.
fn refine(xp: f64, h: f64, v1: f64, v2: f64) -> f64 {
    let (a, b) = (v1.max(0.0).powf(2.0 / 3.0), v2.max(0.0).powf(2.0 / 3.0));
    if b <= a {
        return xp + h;
    }
    (xp + h - a * h / (b - a)).clamp(xp, xp + h)
}

/// Contact set `{u < ε_contact}` on the plane, `ε_contact = 10⁻⁸‖u‖∞`, and
/// its boundary along the `xₙ` grid lines.
pub fn extract_free_boundary(u: &DiscreteField) -> Result<FreeBoundary, SolveError> {
    let grid = u.grid();
    let l = grid.lattice();
    let n = grid.n();
    let h = grid.h();
    let eps = 1e-8 * u.max_abs();
    let plane_nodes = (0..l.nx * l.nj).filter(|&i| grid.class(i).is_free()).count();
    let contact_nodes = (0..l.nx * l.nj).filter(|&i| grid.class(i).is_free() && u.value(i) < eps).count();
    if contact_nodes == 0 {
        return Err(SolveError::EmptyContact);
    }
    if contact_nodes == plane_nodes {
        return Err(SolveError::FullContact);
    }
    // grid lines along xₙ: the i axis for n = 1, the j axis for n = 2
    let (lines, len, stride, step) =
        if n == 1 { (vec![0usize], l.nx, 1usize, 0usize) } else { ((1..l.nx - 1).collect(), l.nj, l.nx, 1usize) };
    let mut points = Vec::new();
    let mut fit_points = Vec::new();
    for &line in &lines {
        let at = |k: usize| line * step + k * stride;
        let contact = |k: usize| u.value(at(k)) < eps;
        let mut best: Option<f64> = None;
        for k in 1..len - 2 {
            let xk = -1.0 + k as f64 * h;
            if contact(k) && !contact(k + 1) {
                let v2 = if k + 2 < len - 1 { u.value(at(k + 2)) } else { 2.0 * u.value(at(k + 1)) };
                let s = refine(xk, h, u.value(at(k + 1)), v2);
                best = Some(best.map_or(s, |b: f64| if s.abs() < b.abs() { s } else { b }));
                points.push(point(n, line, h, s));
            } else if !contact(k) && contact(k + 1) && k >= 1 {
                let xk1 = -1.0 + (k + 1) as f64 * h;
                let v2 = if k >= 2 { u.value(at(k - 1)) } else { 2.0 * u.value(at(k)) };
                let s = -refine(-xk1, h, u.value(at(k)), v2);
                points.push(point(n, line, h, s));
            }
        }
        if n == 2 {
            if let Some(s) = best {
                fit_points.push((-1.0 + line as f64 * h, s));
            }
        }
    }
    let fit = (n == 2).then_some(GraphFit { points: fit_points, width: 8.0 * h });
    Ok(FreeBoundary { points, contact_nodes, plane_nodes, eps_contact: eps, fit })
}

fn point(n: usize, line: usize, h: f64, s: f64) -> Vec<f64> {
    if n == 1 {
        vec![s]
    } else {
        vec![-1.0 + line as f64 * h, s]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slitgeom::BoundaryGraph;

    fn model(x: &[f64], shift: f64) -> f64 {
        let (a, t) = (x[x.len() - 2] - shift, x[x.len() - 1]);
        let rho = a.hypot(t);
        rho.powf(1.5) * (1.5 * t.atan2(a)).cos()
    }

    #[test]
    fn model_free_boundary_in_one_dimension() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 65, GridMode::Signorini).unwrap());
        let (u, stats) = signorini_solve(&grid, &|x| model(x, 0.0), &SignoriniConfig::default()).unwrap();
        assert!(stats.converged);
        assert!(stats.energy_history.windows(2).all(|w| w[1] <= w[0] + 1e-13 * w[0].abs()));
        let fb = extract_free_boundary(&u).unwrap();
        assert_eq!(fb.points.len(), 1);
        assert!(fb.points[0][0].abs() <= 2.0 * grid.h(), "{:?}", fb.points);
        let c = complementarity(&u, 1e-10);
        assert!(c.holds, "{c:?}");
        let err = (0..grid.len()).map(|i| (u.value(i) - model(&grid.coords(i), 0.0)).abs()).fold(0.0, f64::max);
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn translated_model() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 65, GridMode::Signorini).unwrap());
        let (u, _) = signorini_solve(&grid, &|x| model(x, 0.2), &SignoriniConfig::default()).unwrap();
        let fb = extract_free_boundary(&u).unwrap();
        assert!((fb.points[0][0] - 0.2).abs() <= 2.0 * grid.h());
    }

    #[test]
    fn positive_data_gives_no_contact() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 33, GridMode::Signorini).unwrap());
        let (u, _) = signorini_solve(&grid, &|x| 1.0 + 0.1 * x[0], &SignoriniConfig::default()).unwrap();
        assert!(matches!(extract_free_boundary(&u), Err(SolveError::EmptyContact)));
        // the unconstrained harmonic extension of affine data is itself
        for i in 0..grid.len() {
            assert!((u.value(i) - 1.0 - 0.1 * grid.coords(i)[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn contact_set_monotone_in_data() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 33, GridMode::Signorini).unwrap());
        let cfg = SignoriniConfig::default();
        for (lo, hi) in [(0.0, 0.05), (-0.1, 0.0), (0.1, 0.3)] {
            let (a, _) = signorini_solve(&grid, &|x| model(x, 0.0) + lo, &cfg).unwrap();
            let (b, _) = signorini_solve(&grid, &|x| model(x, 0.0) + hi, &cfg).unwrap();
            let ea = 1e-8 * a.max_abs();
            let eb = 1e-8 * b.max_abs();
            for i in 0..grid.lattice().nx {
                if grid.class(i).is_free() && b.value(i) < eb {
                    assert!(a.value(i) < ea, "node {i} in contact for larger data only");
                }
            }
        }
    }

    #[test]
    fn graph_fit_recovers_a_parabola() {
        let pts: Vec<(f64, f64)> = (0..41).map(|i| -1.0 + i as f64 * 0.05).map(|s| (s, 0.3 * s * s - 0.1 * s)).collect();
        let fit = GraphFit { points: pts, width: 0.2 };
        let (v, d) = fit.eval(0.4).unwrap();
        assert!((v - (0.048 - 0.04)).abs() < 1e-12 && (d - 0.14).abs() < 1e-12);
    }
}
