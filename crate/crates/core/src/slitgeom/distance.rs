//! Signed distance in `ℝⁿ` to the graph `Γ`, via multistart safeguarded Newton
//! on the graph parameter.

use super::{BoundaryGraph, GeomError};

const SEEDS_PER_AXIS: usize = 33;
const MAX_NEWTON: usize = 100;

/// Result of a closest-point query.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedDistance {
    /// Signed distance, positive on the side `x_n > g(x')`.
    pub d: f64,
    /// Closest point of `Γ`, in `ℝⁿ`.
    pub foot: Vec<f64>,
    /// Upward unit normal of `Γ` at the foot (equals `(x − foot)/d` off `Γ`).
    pub nu: Vec<f64>,
    /// Set when distinct feet at equal distance were found (cut locus).
    pub multiple_feet: bool,
}

/// Signed distance from `x ∈ ℝⁿ` to `Γ`.
pub fn signed_distance(graph: &BoundaryGraph, x: &[f64]) -> Result<SignedDistance, GeomError> {
    let n = graph.n();
    if x.len() != n {
        return Err(GeomError::DimensionMismatch { expected: n, got: x.len() });
    }
    if n == 1 {
        return Ok(SignedDistance { d: x[0], foot: vec![0.0], nu: vec![1.0], multiple_feet: false });
    }
    let m = n - 1;
    let xp = &x[..m];
    let xn = x[m];
    if let Some(a) = graph.affine_coefficients() {
        let q = (1.0 + a.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let d = (xn - a.iter().zip(xp).map(|(ai, xi)| ai * xi).sum::<f64>()) / q;
        let mut nu: Vec<f64> = a.iter().map(|ai| -ai / q).collect();
        nu.push(1.0 / q);
        let foot: Vec<f64> = x.iter().zip(&nu).map(|(xi, ni)| xi - d * ni).collect();
        check_extent(graph, &foot[..m])?;
        return Ok(SignedDistance { d, foot, nu, multiple_feet: false });
    }
    let problem = Problem { graph, xp, xn };
    let candidates = if m == 1 { problem.solve_1d()? } else { problem.solve_nd()? };
    let (best_s, best_f) = candidates
        .iter()
        .cloned()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one candidate");
    let scale = best_f.max(1e-300);
    let multiple_feet = candidates.iter().any(|(s, f)| {
        let sep = s.iter().zip(&best_s).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        sep > 1e-6 && (f - best_f).abs() <= 1e-9 * scale
    });
    check_extent(graph, &best_s)?;
    let e = graph.eval(&best_s);
    let q = (1.0 + e.grad.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let mut nu: Vec<f64> = e.grad.iter().map(|gi| -gi / q).collect();
    nu.push(1.0 / q);
    let dist = (2.0 * best_f).sqrt();
    let d = if xn >= e.g { dist } else { -dist };
    let mut foot = best_s.clone();
    foot.push(e.g);
    Ok(SignedDistance { d, foot, nu, multiple_feet })
}

fn check_extent(graph: &BoundaryGraph, s: &[f64]) -> Result<(), GeomError> {
    let rho = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rho > graph.extent() * (1.0 + 1e-12) {
        return Err(GeomError::OutOfDomain { radius: rho, extent: graph.extent() });
    }
    Ok(())
}

struct Problem<'a> {
    graph: &'a BoundaryGraph,
    xp: &'a [f64],
    xn: f64,
}

impl Problem<'_> {
    /// `F(s) = ½|x' − s|² + ½(x_n − g(s))²`.
    fn objective(&self, s: &[f64]) -> f64 {
        let g = self.graph.value(s);
        0.5 * (s.iter().zip(self.xp).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + (self.xn - g).powi(2))
    }

    fn search_box(&self) -> (Vec<f64>, Vec<f64>) {
        let ext = self.graph.extent();
        let start: Vec<f64> = self.xp.iter().map(|v| v.clamp(-ext, ext)).collect();
        let radius = (2.0 * self.objective(&start)).sqrt() * (1.0 + 1e-9) + 1e-12;
        let lo = self.xp.iter().map(|v| (v - radius).max(-ext)).collect();
        let hi = self.xp.iter().map(|v| (v + radius).min(ext)).collect();
        (lo, hi)
    }

    fn solve_1d(&self) -> Result<Vec<(Vec<f64>, f64)>, GeomError> {
        let (lo, hi) = self.search_box();
        let (lo, hi) = (lo[0], hi[0]);
        if hi <= lo {
            return Err(GeomError::OutOfDomain { radius: self.xp[0].abs(), extent: self.graph.extent() });
        }
        let ns = SEEDS_PER_AXIS;
        let seeds: Vec<f64> = (0..ns).map(|i| lo + (hi - lo) * i as f64 / (ns - 1) as f64).collect();
        let vals: Vec<f64> = seeds.iter().map(|&s| self.objective(&[s])).collect();
        let mut minima: Vec<usize> = (0..ns)
            .filter(|&i| {
                let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
                let right = if i + 1 == ns { f64::INFINITY } else { vals[i + 1] };
                vals[i] <= left && vals[i] <= right
            })
            .collect();
        minima.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        minima.truncate(3);
        let mut out = Vec::new();
        for i in minima {
            let a = seeds[i.saturating_sub(1)];
            let b = seeds[(i + 1).min(ns - 1)];
            let s = self.bracketed_newton(a, b, seeds[i])?;
            out.push((vec![s], self.objective(&[s])));
        }
        Ok(out)
    }

    /// `F'(s)` and `F''(s)` for a one-dimensional parameter.
    fn derivs_1d(&self, s: f64) -> (f64, f64) {
        let e = self.graph.eval(&[s]);
        let res = self.xn - e.g;
        let gp = e.grad[0];
        (s - self.xp[0] - res * gp, 1.0 + gp * gp - res * e.hess[0][0])
    }

    fn bracketed_newton(&self, mut a: f64, mut b: f64, start: f64) -> Result<f64, GeomError> {
        let (fa, _) = self.derivs_1d(a);
        let (fb, _) = self.derivs_1d(b);
        if fa > 0.0 || fb < 0.0 {
            return Ok(self.golden(a, b));
        }
        let tol = 1e-15 * (1.0 + self.xp[0].abs() + self.xn.abs());
        let mut s = start;
        let mut widths = [b - a; 2];
        for it in 0..MAX_NEWTON {
            let (f1, f2) = self.derivs_1d(s);
            if f1.abs() <= tol {
                return Ok(s);
            }
            if f1 < 0.0 {
                a = s;
            } else {
                b = s;
            }
            // fall back to bisection when Newton stops shrinking the bracket
            let stalled = it >= 2 && b - a > 0.5 * widths[it % 2];
            widths[it % 2] = b - a;
            let newton = if f2 > 0.0 { s - f1 / f2 } else { f64::NAN };
            let next = if !stalled && newton.is_finite() && newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if (next - s).abs() <= 4.0 * f64::EPSILON * (1.0 + s.abs()) || b - a <= 4.0 * f64::EPSILON * (1.0 + s.abs()) {
                return Ok(next);
            }
            s = next;
        }
        Err(GeomError::NonConvergence { iterations: MAX_NEWTON })
    }

    fn golden(&self, mut a: f64, mut b: f64) -> f64 {
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = self.objective(&[c]);
        let mut fd = self.objective(&[d]);
        for _ in 0..200 {
            if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = self.objective(&[c]);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = self.objective(&[d]);
            }
        }
        0.5 * (a + b)
    }

    fn solve_nd(&self) -> Result<Vec<(Vec<f64>, f64)>, GeomError> {
        let m = self.xp.len();
        let (lo, hi) = self.search_box();
        let ns = if m <= 2 { SEEDS_PER_AXIS } else { 9 };
        let total = ns.pow(m as u32);
        let mut seeds: Vec<(f64, Vec<f64>)> = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rem = idx;
            let mut s = Vec::with_capacity(m);
            for a in 0..m {
                let i = rem % ns;
                rem /= ns;
                s.push(lo[a] + (hi[a] - lo[a]) * i as f64 / (ns - 1) as f64);
            }
            seeds.push((self.objective(&s), s));
        }
        seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
        for (_, s0) in seeds.into_iter().take(3) {
            let s = self.damped_newton(s0)?;
            let f = self.objective(&s);
            out.push((s, f));
        }
        Ok(out)
    }

    fn damped_newton(&self, mut s: Vec<f64>) -> Result<Vec<f64>, GeomError> {
        let m = s.len();
        let mut mu = 0.0;
        let mut f = self.objective(&s);
        for _ in 0..MAX_NEWTON {
            let e = self.graph.eval(&s);
            let res = self.xn - e.g;
            let grad: Vec<f64> = (0..m).map(|i| s[i] - self.xp[i] - res * e.grad[i]).collect();
            let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            if gnorm <= 1e-15 * (1.0 + self.xn.abs()) {
                return Ok(s);
            }
            let hess = nalgebra::DMatrix::from_fn(m, m, |i, j| {
                let delta = if i == j { 1.0 } else { 0.0 };
                delta + e.grad[i] * e.grad[j] - res * e.hess[i][j]
            });
            let mut accepted = false;
            for _ in 0..60 {
                let shifted = &hess + nalgebra::DMatrix::identity(m, m) * mu;
                let step = shifted.clone().cholesky().map(|c| c.solve(&nalgebra::DVector::from_vec(grad.clone())));
                if let Some(step) = step {
                    let cand: Vec<f64> = (0..m).map(|i| s[i] - step[i]).collect();
                    let fc = self.objective(&cand);
                    if fc <= f {
                        let moved = step.norm();
                        s = cand;
                        f = fc;
                        mu *= 0.25;
                        accepted = true;
                        if moved <= 1e-15 * (1.0 + s.iter().map(|v| v.abs()).sum::<f64>()) {
                            return Ok(s);
                        }
                        break;
                    }
                }
                mu = if mu == 0.0 { 1e-6 } else { mu * 10.0 };
            }
            if !accepted {
                return Ok(s);
            }
        }
        Err(GeomError::NonConvergence { iterations: MAX_NEWTON })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_distance_and_sign() {
        let g = BoundaryGraph::flat(3);
        let up = signed_distance(&g, &[0.0, 0.0, 0.3]).unwrap();
        assert_eq!(up.d, 0.3);
        assert_eq!(up.nu, vec![0.0, 0.0, 1.0]);
        let down = signed_distance(&g, &[0.0, 0.0, -0.4]).unwrap();
        assert_eq!(down.d, -0.4);
    }

    #[test]
    fn tilted_plane_rotation_oracle() {
        let g = BoundaryGraph::tilted(0.2).unwrap();
        let r = signed_distance(&g, &[0.0, 0.5]).unwrap();
        assert!((r.d - 0.5 / 1.04f64.sqrt()).abs() < 1e-15);
        assert!((r.d - 0.490290).abs() < 1e-6);
    }

    #[test]
    fn parabola_foot_is_orthogonal() {
        let g = BoundaryGraph::paraboloid(2, 0.4).unwrap();
        for &(a, b) in &[(0.3, 0.2), (-0.5, -0.3), (0.1, 0.6), (0.7, 0.05)] {
            let r = signed_distance(&g, &[a, b]).unwrap();
            let diff = [a - r.foot[0], b - r.foot[1]];
            let cross = diff[0] * r.nu[1] - diff[1] * r.nu[0];
            assert!(cross.abs() < 1e-13, "foot not orthogonal: {cross}");
            assert!((diff[0] * r.nu[0] + diff[1] * r.nu[1] - r.d).abs() < 1e-13);
        }
    }

    #[test]
    fn parabola_matches_brute_force() {
        let g = BoundaryGraph::paraboloid(2, 0.8).unwrap();
        let x = [0.2, 0.45];
        let r = signed_distance(&g, &x).unwrap();
        let brute = (0..200_001)
            .map(|i| -1.0 + 2.0 * i as f64 / 200_000.0)
            .map(|s| ((x[0] - s).powi(2) + (x[1] - 0.4 * s * s).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!((r.d - brute).abs() < 1e-9);
    }

    #[test]
    fn convex_cusp_reports_two_feet() {
        let g = BoundaryGraph::abs_power(2, 0.3, 0.25).unwrap();
        let r = signed_distance(&g, &[0.0, 0.2]).unwrap();
        assert!(r.multiple_feet);
        assert!(r.d > 0.0 && r.d < 0.2);
    }

    #[test]
    fn surface_case_uses_newton() {
        let g = BoundaryGraph::paraboloid(3, 0.3).unwrap();
        let x = [0.2, -0.1, 0.3];
        let r = signed_distance(&g, &x).unwrap();
        let diff: Vec<f64> = x.iter().zip(&r.foot).map(|(a, b)| a - b).collect();
        for i in 0..3 {
            assert!((diff[i] - r.d * r.nu[i]).abs() < 1e-12);
        }
    }
}
