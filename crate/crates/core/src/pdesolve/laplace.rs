use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::field::{DiscreteField, FieldMeta};
use super::grid::{Grid, GridMode, Lattice, NodeClass, NodeWeights};
use super::multigrid::Hierarchy;
use super::operator::{apply, diagonal, residual, sor};
use super::SolveError;
use crate::slitgeom::{frame, BoundaryGraph, GeometryFrame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Conjugate gradients preconditioned by one multigrid V-cycle.
    MgPcg,
    /// Successive over-relaxation.
    Sor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOrdering {
    Lexicographic,
    RedBlack,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Relative tolerance on the max diagonally scaled residual.
    pub tol: f64,
    pub max_iter: usize,
    pub omega: f64,
    pub ordering: SweepOrdering,
    pub smoothing_sweeps: usize,
    pub coarse_sweeps: usize,
    /// Solve for `u/U₀` with the `U₀`-weighted stencil, which is exact on
    /// `U₀` and removes the pollution of the square-root edge singularity.
    pub singular_weights: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolverMethod::MgPcg,
            tol: 1e-10,
            max_iter: 400,
            omega: 1.5,
            ordering: SweepOrdering::Lexicographic,
            smoothing_sweeps: 1,
            coarse_sweeps: 40,
            singular_weights: true,
        }
    }
}

/// Iteration record of a solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final max diagonally scaled residual, relative to the data norm.
    pub residual: f64,
    pub energy_history: Vec<f64>,
    pub wall_time_s: f64,
    pub converged: bool,
}

/// Right-hand side `F = (U₀/r)·f` with `r` clamped to `h`.
pub type SourceFn<'a> = &'a dyn Fn(&GeometryFrame) -> f64;

/// Dirichlet data evaluated at grid coordinates.
pub type DataFn<'a> = &'a dyn Fn(&[f64]) -> f64;

/// Solves `Δu = (U₀/r) f` in the half-cube minus the slit with `u = 0` on the
/// slit, even reflection across the rest of the plane and `u = data` on the
/// outer faces.
pub fn laplace_slit(
    grid: &Arc<Grid>,
    boundary: &dyn Fn(&[f64]) -> f64,
    source: Option<SourceFn>,
    cfg: &SolverConfig,
) -> Result<(DiscreteField, SolveStats), SolveError> {
    let start = Instant::now();
    if grid.mode() != GridMode::Laplace {
        return Err(SolveError::InvalidGrid("laplace_slit needs a Laplace-mode grid".into()));
    }
    let h = grid.h();
    let len = grid.len();
    let mut u = vec![0.0; len];
    let mut b = vec![0.0; len];
    let mut data_norm: f64 = 0.0;
    let weighted = cfg.singular_weights;
    let mut weights = NodeWeights { s: vec![0.0; if weighted { len } else { 0 }], q: vec![0.0; if weighted { len } else { 0 }] };
    for idx in 0..len {
        let class = grid.class(idx);
        let fr = if weighted || (source.is_some() && class.is_free()) {
            Some(frame(grid.graph(), &grid.coords(idx))?)
        } else {
            None
        };
        match class {
            NodeClass::Outer => {
                u[idx] = boundary(&grid.coords(idx));
                data_norm = data_norm.max(u[idx].abs());
            }
            c if c.is_free() => {
                if let (Some(f), Some(fr)) = (source, &fr) {
                    let weight = if fr.r == 0.0 { 0.0 } else { fr.u0 / fr.r.max(h) };
                    let val = weight * f(fr);
                    data_norm = data_norm.max(val.abs());
                    b[idx] = -h * h * grid.mass(idx) * val;
                }
            }
            _ => {}
        }
        if let (true, Some(fr)) = (weighted, &fr) {
            weights.s[idx] = fr.u0;
            if class.is_free() && fr.r > 0.0 {
                // q = −h² m s ΔU₀ with ΔU₀ = U₀ Δd/(2r)
                let lap_d = laplacian_of_distance(grid.graph(), fr);
                weights.q[idx] = -h * h * grid.mass(idx) * fr.u0 * fr.u0 * lap_d / (2.0 * fr.r);
            }
        }
    }
    if let Some(i) = u.iter().chain(&b).position(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite(i % len));
    }
    let mut stats = SolveStats::default();
    if data_norm == 0.0 {
        stats.converged = true;
        stats.wall_time_s = start.elapsed().as_secs_f64();
        let field = DiscreteField::new(grid.clone(), u, FieldMeta { equation: "laplace_slit".into(), residual: 0.0 })?;
        return Ok((field, stats));
    }
    // move the outer data to the right-hand side
    let mut lattice = grid.lattice().clone();
    let mut tmp = vec![0.0; len];
    apply(&lattice, &u, &mut tmp);
    for (bi, t) in b.iter_mut().zip(&tmp) {
        *bi -= t;
    }
    if weighted {
        for (bi, si) in b.iter_mut().zip(&weights.s) {
            *bi *= si;
        }
        lattice.weights = Some(weights);
    }
    let mut x = vec![0.0; len];
    let target = cfg.tol * data_norm;
    match cfg.method {
        SolverMethod::MgPcg => pcg(&lattice, &b, &mut x, cfg, target, &mut stats)?,
        SolverMethod::Sor => sor_solve(&lattice, &b, &mut x, cfg, target, &mut stats)?,
    }
    let scale = lattice.weights.as_ref().map(|w| &w.s);
    for idx in 0..len {
        if grid.class(idx).is_free() {
            u[idx] = x[idx] * scale.map_or(1.0, |s| s[idx]);
        }
    }
    stats.residual /= data_norm;
    stats.wall_time_s = start.elapsed().as_secs_f64();
    let field =
        DiscreteField::new(grid.clone(), u, FieldMeta { equation: "laplace_slit".into(), residual: stats.residual })?;
    Ok((field, stats))
}

/// `Δd = −κ/(1 − κd)` with `κ` the curvature of the graph at the foot.
fn laplacian_of_distance(graph: &BoundaryGraph, f: &GeometryFrame) -> f64 {
    if graph.n() == 1 || graph.affine_coefficients().is_some() {
        return 0.0;
    }
    let e = graph.eval(&f.foot[..1]);
    let kappa = e.hess[0][0] / (1.0 + e.grad[0] * e.grad[0]).powf(1.5);
    let v = -kappa / (1.0 - kappa * f.d);
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

/// Max of `sᵢ|rᵢ|/diagᵢ`: the Jacobi correction of `u`. The residual in
/// units of `Δu` has a round-off floor near `ε‖u‖/h²`.
fn scaled_max(l: &Lattice, diag: &[f64], r: &[f64]) -> f64 {
    let s = l.weights.as_ref().map(|w| &w.s);
    r.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| v.abs() * s.map_or(1.0, |s| s[i]) / diag[i])
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn pcg(
    l: &Lattice,
    b: &[f64],
    u: &mut [f64],
    cfg: &SolverConfig,
    target: f64,
    stats: &mut SolveStats,
) -> Result<(), SolveError> {
    let len = l.len();
    let diag = diagonal(l);
    let mut mg = Hierarchy::new(l, cfg.smoothing_sweeps.max(1), cfg.coarse_sweeps.max(1));
    let mut r = vec![0.0; len];
    residual(l, b, u, &mut r);
    let mut res = scaled_max(l, &diag, &r);
    if res <= target {
        stats.converged = true;
        stats.residual = res;
        return Ok(());
    }
    let mut z = vec![0.0; len];
    mg.precondition(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; len];
    let mut rz = dot(&r, &z);
    for it in 1..=cfg.max_iter {
        apply(l, &p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..len {
            u[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = scaled_max(l, &diag, &r);
        stats.iterations = it;
        if res <= target {
            // confirm against the true residual
            residual(l, b, u, &mut r);
            res = scaled_max(l, &diag, &r);
            if res <= target {
                stats.converged = true;
                stats.residual = res;
                return Ok(());
            }
        }
        mg.precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..len {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveError::NonConvergence { iterations: cfg.max_iter, residual: res / (target / cfg.tol) })
}

fn sor_solve(
    l: &Lattice,
    b: &[f64],
    u: &mut [f64],
    cfg: &SolverConfig,
    target: f64,
    stats: &mut SolveStats,
) -> Result<(), SolveError> {
    let mut r = vec![0.0; l.len()];
    let diag = diagonal(l);
    let red_black = cfg.ordering == SweepOrdering::RedBlack;
    let mut res = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        sor(l, b, u, cfg.omega, red_black);
        stats.iterations = it;
        if it % 10 == 0 || it == cfg.max_iter {
            residual(l, b, u, &mut r);
            res = scaled_max(l, &diag, &r);
            if res <= target {
                stats.converged = true;
                stats.residual = res;
                return Ok(());
            }
        }
    }
    Err(SolveError::NonConvergence { iterations: cfg.max_iter, residual: res / (target / cfg.tol) })
}

/// The positive harmonic `U` with `U(½eₙ) = 1`. Outer data defaults to `U₀`
/// of the grid's own geometry.
pub fn normalized_u(
    grid: &Arc<Grid>,
    boundary: Option<DataFn>,
    cfg: &SolverConfig,
) -> Result<(DiscreteField, SolveStats), SolveError> {
    let graph = grid.graph().clone();
    let default = move |x: &[f64]| frame(&graph, x).map(|f| f.u0).unwrap_or(f64::NAN);
    let data: &dyn Fn(&[f64]) -> f64 = match boundary {
        Some(f) => f,
        None => &default,
    };
    let (field, stats) = laplace_slit(grid, data, None, cfg)?;
    let mut half = vec![0.0; grid.n() + 1];
    half[grid.n() - 1] = 0.5;
    let at_half = field.interpolate(&half);
    if !(at_half > 0.0) {
        return Err(SolveError::NonPositive(at_half));
    }
    let scaled = field.scaled(1.0 / at_half);
    for idx in 0..grid.len() {
        if matches!(grid.class(idx), NodeClass::Interior | NodeClass::Symmetry) && scaled.value(idx) <= 0.0 {
            return Err(SolveError::NonPositive(scaled.value(idx)));
        }
    }
    let meta = FieldMeta { equation: "normalized_u".into(), residual: field.meta().residual };
    Ok((DiscreteField::new(grid.clone(), scaled.values().to_vec(), meta)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slitgeom::{model_u0, BoundaryGraph};

    fn flat_poly(x: &[f64]) -> f64 {
        let (d, t) = (x[x.len() - 2], x[x.len() - 1]);
        model_u0(d, t) * (2.0 * d - d.hypot(t))
    }

    fn max_err(u: &DiscreteField, exact: impl Fn(&[f64]) -> f64) -> f64 {
        let grid = u.grid();
        (0..grid.len())
            .filter(|&i| frame(grid.graph(), &grid.coords(i)).unwrap().r > 0.1)
            .map(|i| (u.value(i) - exact(&grid.coords(i))).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn second_order_on_harmonic_slit_polynomial() {
        let g = BoundaryGraph::flat(1);
        let errs: Vec<f64> = [129, 257, 513]
            .iter()
            .map(|&npts| {
                let grid = Arc::new(Grid::new(&g, npts, GridMode::Laplace).unwrap());
                let (u, stats) = laplace_slit(&grid, &flat_poly, None, &SolverConfig::default()).unwrap();
                assert!(stats.converged && stats.residual <= 1e-10);
                max_err(&u, flat_poly)
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.2..=4.8).contains(&ratio), "{errs:?}");
        }
    }

    #[test]
    fn weighted_source_reproduces_u0_times_r() {
        let g = BoundaryGraph::flat(1);
        let exact = |x: &[f64]| model_u0(x[0], x[1]) * x[0].hypot(x[1]);
        let grid = Arc::new(Grid::new(&g, 129, GridMode::Laplace).unwrap());
        let (u, _) = laplace_slit(&grid, &exact, Some(&|_: &GeometryFrame| 2.0), &SolverConfig::default()).unwrap();
        assert!(max_err(&u, exact) < 2e-3, "{}", max_err(&u, exact));
    }

    #[test]
    fn zero_data_gives_zero() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(2), 17, GridMode::Laplace).unwrap());
        let (u, stats) = laplace_slit(&grid, &|_| 0.0, None, &SolverConfig::default()).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        assert!(stats.converged);
    }

    #[test]
    fn maximum_principle_and_sor_agreement() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::paraboloid(2, 0.3).unwrap(), 17, GridMode::Laplace).unwrap());
        let data = |x: &[f64]| (3.0 * x[0]).sin() + x[1] * x[2];
        let (u, _) = laplace_slit(&grid, &data, None, &SolverConfig::default()).unwrap();
        let outer: Vec<f64> = (0..grid.len())
            .filter(|&i| grid.class(i) == NodeClass::Outer)
            .map(|i| data(&grid.coords(i)))
            .chain([0.0])
            .collect();
        let lo = outer.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = outer.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(u.values().iter().all(|v| (lo - 1e-12..=hi + 1e-12).contains(v)));
        for ordering in [SweepOrdering::Lexicographic, SweepOrdering::RedBlack] {
            let cfg = SolverConfig { method: SolverMethod::Sor, ordering, max_iter: 20_000, ..Default::default() };
            let (v, _) = laplace_slit(&grid, &data, None, &cfg).unwrap();
            let diff = u.values().iter().zip(v.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-9, "{diff}");
        }
    }

    #[test]
    fn symmetry_nodes_see_their_mirror() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 33, GridMode::Laplace).unwrap());
        let cfg = SolverConfig { singular_weights: false, ..Default::default() };
        let (u, _) = laplace_slit(&grid, &flat_poly, None, &cfg).unwrap();
        let l = grid.lattice();
        for i in 1..l.nx - 1 {
            if grid.class(i) == NodeClass::Symmetry {
                // reflected 5-point stencil: u(t = −h) = u(t = h)
                let lap = u.value(i - 1) + u.value(i + 1) + 2.0 * u.value(i + l.nx) - 4.0 * u.value(i);
                assert!(lap.abs() < 1e-9, "{lap}");
            }
        }
    }

    #[test]
    fn normalized_u_matches_rescaled_u0() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 129, GridMode::Laplace).unwrap());
        let (u, _) = normalized_u(&grid, None, &SolverConfig::default()).unwrap();
        let c = model_u0(0.5, 0.0);
        let err = max_err(&u, |x| model_u0(x[0], x[1]) / c);
        assert!(err < 1e-8, "{err}");
        assert!((u.interpolate(&[0.5, 0.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tilted_plane_is_a_rotated_flat_solution() {
        let g = BoundaryGraph::tilted(0.2).unwrap();
        let q = 1.04f64.sqrt();
        let exact = |x: &[f64]| {
            let d = (x[1] - 0.2 * x[0]) / q;
            model_u0(d, x[2]) * (2.0 * d - d.hypot(x[2]) + 0.3)
        };
        let mut errs = vec![];
        for npts in [65, 129] {
            let grid = Arc::new(Grid::new(&g, npts, GridMode::Laplace).unwrap());
            let (u, _) = laplace_slit(&grid, &exact, None, &SolverConfig::default()).unwrap();
            errs.push(max_err(&u, exact));
        }
        assert!(errs[0] / errs[1] > 3.2 && errs[1] < 1e-3, "{errs:?}");
    }
}
