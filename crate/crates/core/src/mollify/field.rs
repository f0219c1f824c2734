use super::kernel::{kernel_nodes, KernelNode};
use super::MollifyError;
use crate::slitgeom::{frame, signed_distance, BoundaryGraph};

const QUAD_ORDER: usize = 8;
const PANEL_LEVELS: [usize; 4] = [1, 2, 4, 8];

/// Dyadic scale `λ_k = 4^{−k}`.
pub fn dyadic_scale(k: u32) -> f64 {
    0.25f64.powi(k as i32)
}

/// Transition profile: `1` on `t ≤ 2.25`, `0` on `t ≥ 2.75`, quintic smoothstep
/// in between. Returns `(h, h', h'')`.
pub fn h_profile(t: f64) -> (f64, f64, f64) {
    const A: f64 = 2.25;
    const W: f64 = 0.5;
    if t <= A {
        return (1.0, 0.0, 0.0);
    }
    if t >= A + W {
        return (0.0, 0.0, 0.0);
    }
    let s = (t - A) / W;
    let smooth = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    let d1 = 30.0 * s * s * (1.0 - s) * (1.0 - s);
    let d2 = 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    (1.0 - smooth, -d1 / W, -d2 / (W * W))
}

/// Mollified distances `d_λ = d ∗ ρ_λ` at the dyadic scales `λ_k`,
/// `k_min ≤ k ≤ k_max`, together with the glued `d̄`, `r̄`, `Ū₀`.
#[derive(Clone, Debug)]
pub struct MollifiedField {
    graph: BoundaryGraph,
    k_min: u32,
    k_max: u32,
    rules: Vec<(usize, Vec<KernelNode>, Vec<KernelNode>)>,
}

/// `d_λ`, `∇d_λ` and `D²d_λ` (row-major) at a point of `ℝⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MollifiedDistance {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    /// Order-halving estimate of the error in `d_λ`.
    pub error_estimate: f64,
    pub grad_error_estimate: f64,
    pub hess_error_estimate: f64,
    /// Panels per axis used by the accepted rule.
    pub panels: usize,
}

impl MollifiedDistance {
    pub fn laplacian(&self) -> f64 {
        let n = self.grad.len();
        (0..n).map(|i| self.hess[i * n + i]).sum()
    }
}

/// Value, gradient in `ℝ^{n+1}` and Laplacian of a glued function.
#[derive(Clone, Debug, PartialEq)]
pub struct Glued {
    pub value: f64,
    pub grad: Vec<f64>,
    pub laplacian: f64,
}

/// Output of [`glued_fields`].
#[derive(Clone, Debug, PartialEq)]
pub struct GluedFields {
    /// Level `k` with `r ∈ [λ_k, 4λ_k)`.
    pub level: u32,
    pub r_bar: Glued,
    pub u0_bar: Glued,
    /// `d̄` glued across levels of `|d|`; `None` when `|d|` leaves the scale window.
    pub d_bar: Option<Glued>,
    pub quadrature_error: f64,
}

impl MollifiedField {
    /// Scales `λ_k`, `k_min ≤ k ≤ k_max`; glued fields are defined for
    /// `r ∈ [λ_{k_max}, λ_{k_min})`.
    pub fn new(graph: BoundaryGraph, k_min: u32, k_max: u32) -> Result<Self, MollifyError> {
        if graph.n() > 2 {
            return Err(MollifyError::UnsupportedDimension(graph.n()));
        }
        if k_max <= k_min {
            return Err(MollifyError::InvalidScales { k_min, k_max });
        }
        let n = graph.n();
        let rules = PANEL_LEVELS
            .iter()
            .map(|&p| (p, kernel_nodes(n, QUAD_ORDER, p), kernel_nodes(n, QUAD_ORDER / 2, p)))
            .collect();
        Ok(Self { graph, k_min, k_max, rules })
    }

    pub fn graph(&self) -> &BoundaryGraph {
        &self.graph
    }

    pub fn k_min(&self) -> u32 {
        self.k_min
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    /// Discrete kernel mass of the base rule.
    pub fn kernel_mass(&self) -> f64 {
        self.rules[0].1.iter().map(|k| k.rho).sum()
    }

    /// Range `[lo, hi)` of `r` covered by the glued fields.
    pub fn r_window(&self) -> (f64, f64) {
        (dyadic_scale(self.k_max), dyadic_scale(self.k_min))
    }

    /// Level `k` with `s ∈ [λ_k, 4λ_k)`, restricted to `k_min < k ≤ k_max`.
    pub fn level_of(&self, s: f64) -> Result<u32, MollifyError> {
        let (lo, hi) = self.r_window();
        if !(s >= lo && s < hi) {
            return Err(MollifyError::ScaleOutOfRange { r: s, lo, hi });
        }
        let mut k = self.k_min + 1;
        while s < dyadic_scale(k) {
            k += 1;
        }
        Ok(k)
    }
}

/// Mollified distance at scale `λ` via the differentiated kernel. The affine
/// part `d(x) − λν(x)·y` of the integrand is integrated exactly, so the
/// quadrature only sees the `O(λ^{1+α})` remainder.
pub fn mollified_distance(field: &MollifiedField, lambda: f64, x: &[f64]) -> Result<MollifiedDistance, MollifyError> {
    let graph = &field.graph;
    let n = graph.n();
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(MollifyError::InvalidLambda(lambda));
    }
    let base = signed_distance(graph, x)?;
    if graph.affine_coefficients().is_some() {
        return Ok(MollifiedDistance {
            value: base.d,
            grad: base.nu,
            hess: vec![0.0; n * n],
            error_estimate: 0.0,
            grad_error_estimate: 0.0,
            hess_error_estimate: 0.0,
            panels: 0,
        });
    }
    let tol = lambda.powf(2.0 + graph.alpha()) / 100.0;
    let mut accepted: Option<MollifiedDistance> = None;
    let mut worst = f64::INFINITY;
    let mut pt = vec![0.0; n];
    for (panels, fine, coarse) in &field.rules {
        let mut remainder = |y: &[f64]| -> Result<f64, MollifyError> {
            for i in 0..n {
                pt[i] = x[i] - lambda * y[i];
            }
            let d = signed_distance(graph, &pt)?.d;
            let lin: f64 = base.nu.iter().zip(y).map(|(v, yi)| v * yi).sum();
            Ok(d - base.d + lambda * lin)
        };
        let a = integrate(fine, n, &mut remainder)?;
        let b = integrate(coarse, n, &mut remainder)?;
        let max_diff = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        let est = (a.0 - b.0).abs();
        let grad_est = max_diff(&a.1, &b.1) / lambda;
        let hess_est = max_diff(&a.2, &b.2) / (lambda * lambda);
        worst = est;
        if est <= tol {
            accepted = Some(MollifiedDistance {
                value: base.d + a.0,
                grad: base.nu.iter().zip(&a.1).map(|(v, g)| v + g / lambda).collect(),
                hess: a.2.iter().map(|h| h / (lambda * lambda)).collect(),
                error_estimate: est,
                grad_error_estimate: grad_est,
                hess_error_estimate: hess_est,
                panels: *panels,
            });
            // derivatives carry the same tolerance after scaling by λ and λ²
            if grad_est * lambda <= tol && hess_est * lambda * lambda <= tol {
                break;
            }
        } else if accepted.is_some() {
            break;
        }
    }
    accepted.ok_or(MollifyError::QuadratureFailure { lambda, estimate: worst, tolerance: tol })
}

/// `(∫ρe, ∫∇ρ e, ∫D²ρ e)` for the unscaled kernel.
fn integrate(
    nodes: &[KernelNode],
    n: usize,
    e: &mut dyn FnMut(&[f64]) -> Result<f64, MollifyError>,
) -> Result<(f64, Vec<f64>, Vec<f64>), MollifyError> {
    let mut v = 0.0;
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n * n];
    for node in nodes {
        let ev = e(&node.y)?;
        v += node.rho * ev;
        for i in 0..n {
            g[i] += node.grad[i] * ev;
        }
        for i in 0..n * n {
            h[i] += node.hess[i] * ev;
        }
    }
    Ok((v, g, h))
}

/// `r_λ` and `(U₀)_λ` with gradients in `ℝ^{n+1}` and Laplacians.
fn lifted(m: &MollifiedDistance, t: f64) -> (Glued, Glued) {
    let n = m.grad.len();
    let dl = m.value;
    let rl = dl.hypot(t);
    let lap_d = m.laplacian();
    let g2: f64 = m.grad.iter().map(|v| v * v).sum();
    let mut grad_r: Vec<f64> = m.grad.iter().map(|g| dl * g / rl).collect();
    grad_r.push(t / rl);
    let lap_r = (dl * lap_d + (g2 * t * t + dl * dl) / (rl * rl)) / rl;
    let r = Glued { value: rl, grad: grad_r, laplacian: lap_r };

    let u = if dl >= -0.5 * rl {
        let s = dl + rl;
        let uval = (0.5 * s).sqrt();
        let grad: Vec<f64> = (0..=n)
            .map(|i| {
                let ds = if i < n { m.grad[i] } else { 0.0 } + r.grad[i];
                ds / (4.0 * uval)
            })
            .collect();
        let gu2: f64 = grad.iter().map(|v| v * v).sum();
        let lap = ((lap_d + lap_r) / 4.0 - gu2) / uval;
        Glued { value: uval, grad, laplacian: lap }
    } else {
        // U = |t| w / √2 with w = q^{−1/2}, q = r_λ − d_λ
        let q = rl - dl;
        let w = q.powf(-0.5);
        let grad_q: Vec<f64> = (0..=n).map(|i| r.grad[i] - if i < n { m.grad[i] } else { 0.0 }).collect();
        let gq2: f64 = grad_q.iter().map(|v| v * v).sum();
        let grad_w: Vec<f64> = grad_q.iter().map(|g| -0.5 * w * w * w * g).collect();
        let lap_w = -0.5 * w * w * w * (lap_r - lap_d) + 0.75 * w.powi(5) * gq2;
        let sg = t.signum();
        let at = t.abs();
        let s2 = std::f64::consts::SQRT_2;
        let mut grad: Vec<f64> = grad_w[..n].iter().map(|g| at * g / s2).collect();
        grad.push((sg * w + at * grad_w[n]) / s2);
        let lap = (2.0 * sg * grad_w[n] + at * lap_w) / s2;
        Glued { value: at * w / s2, grad, laplacian: lap }
    };
    (r, u)
}

/// `b + φ(a − b)` with the product-rule gradient and Laplacian.
fn glue(a: &Glued, b: &Glued, phi: f64, grad_phi: &[f64], lap_phi: f64) -> Glued {
    let diff = a.value - b.value;
    let grad_diff: Vec<f64> = a.grad.iter().zip(&b.grad).map(|(p, q)| p - q).collect();
    let value = b.value + phi * diff;
    let grad = (0..a.grad.len()).map(|i| b.grad[i] + phi * grad_diff[i] + diff * grad_phi[i]).collect();
    let cross: f64 = grad_phi.iter().zip(&grad_diff).map(|(p, q)| p * q).sum();
    let laplacian = b.laplacian + phi * (a.laplacian - b.laplacian) + 2.0 * cross + diff * lap_phi;
    Glued { value, grad, laplacian }
}

/// Glued `r̄`, `Ū₀` (and `d̄` where defined) at `X ∈ ℝ^{n+1}`.
pub fn glued_fields(field: &MollifiedField, x: &[f64]) -> Result<GluedFields, MollifyError> {
    let n = field.graph.n();
    let fr = frame(&field.graph, x)?;
    let level = field.level_of(fr.r)?;
    let lam = dyadic_scale(level);
    let t = x[n];
    let small = mollified_distance(field, lam, &x[..n])?;
    let big = mollified_distance(field, 4.0 * lam, &x[..n])?;
    let (r_s, u_s) = lifted(&small, t);
    let (r_b, u_b) = lifted(&big, t);

    let (h, h1, h2) = h_profile(r_s.value / lam);
    let grad_phi: Vec<f64> = r_s.grad.iter().map(|g| h1 * g / lam).collect();
    let gr2: f64 = r_s.grad.iter().map(|g| g * g).sum();
    let lap_phi = h2 * gr2 / (lam * lam) + h1 * r_s.laplacian / lam;
    let r_bar = glue(&r_s, &r_b, h, &grad_phi, lap_phi);
    let u0_bar = glue(&u_s, &u_b, h, &grad_phi, lap_phi);
    let mut quadrature_error = small.error_estimate.max(big.error_estimate);

    let d_bar = match field.level_of(fr.d.abs()) {
        Ok(kd) => {
            let lam_d = dyadic_scale(kd);
            let (ds, db) = if kd == level {
                (small, big)
            } else {
                (mollified_distance(field, lam_d, &x[..n])?, mollified_distance(field, 4.0 * lam_d, &x[..n])?)
            };
            quadrature_error = quadrature_error.max(ds.error_estimate).max(db.error_estimate);
            let as_glued = |m: &MollifiedDistance| {
                let mut grad = m.grad.clone();
                grad.push(0.0);
                Glued { value: m.value, grad, laplacian: m.laplacian() }
            };
            let sg = ds.value.signum();
            let (h, h1, h2) = h_profile(ds.value.abs() / lam_d);
            let mut grad_phi: Vec<f64> = ds.grad.iter().map(|g| sg * h1 * g / lam_d).collect();
            grad_phi.push(0.0);
            let g2: f64 = ds.grad.iter().map(|g| g * g).sum();
            let lap_phi = h2 * g2 / (lam_d * lam_d) + sg * h1 * ds.laplacian() / lam_d;
            Some(glue(&as_glued(&ds), &as_glued(&db), h, &grad_phi, lap_phi))
        }
        Err(_) => None,
    };
    Ok(GluedFields { level, r_bar, u0_bar, d_bar, quadrature_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_endpoints_and_derivatives() {
        assert_eq!(h_profile(2.0), (1.0, 0.0, 0.0));
        assert_eq!(h_profile(3.0), (0.0, 0.0, 0.0));
        let (v, d1, _) = h_profile(2.5);
        assert!((v - 0.5).abs() < 1e-15 && d1 < 0.0);
        let s = 1e-6;
        for &t in &[2.3, 2.5, 2.7] {
            let fd = (h_profile(t + s).0 - h_profile(t - s).0) / (2.0 * s);
            assert!((fd - h_profile(t).1).abs() < 1e-6);
            let fd2 = (h_profile(t + s).1 - h_profile(t - s).1) / (2.0 * s);
            assert!((fd2 - h_profile(t).2).abs() < 1e-4);
        }
    }

    #[test]
    fn levels() {
        let f = MollifiedField::new(BoundaryGraph::flat(2), 1, 5).unwrap();
        assert_eq!(f.level_of(0.0625).unwrap(), 2);
        assert_eq!(f.level_of(0.2).unwrap(), 2);
        assert_eq!(f.level_of(0.001).unwrap(), 5);
        assert!(f.level_of(0.25).is_err());
        assert!(f.level_of(0.0009).is_err());
    }

    #[test]
    fn flat_fields_are_unchanged() {
        let f = MollifiedField::new(BoundaryGraph::flat(2), 1, 5).unwrap();
        for x in [[0.1, 0.03, 0.04], [-0.05, -0.1, 0.02], [0.0, 0.01, -0.003]] {
            let g = glued_fields(&f, &x).unwrap();
            let fr = frame(f.graph(), &x).unwrap();
            assert!((g.r_bar.value - fr.r).abs() < 1e-15);
            assert!((g.u0_bar.value - fr.u0).abs() < 1e-15);
            assert!((g.r_bar.laplacian - 1.0 / fr.r).abs() < 1e-12 / fr.r);
            assert!(g.u0_bar.laplacian.abs() < 1e-12 * fr.r.powf(-1.5));
        }
    }

    #[test]
    fn lifted_derivatives_match_finite_differences() {
        let g = BoundaryGraph::paraboloid(2, 0.4).unwrap();
        let f = MollifiedField::new(g, 1, 5).unwrap();
        for x in [[0.02, 0.05, 0.03], [0.01, -0.07, 0.02], [-0.03, -0.02, 0.1]] {
            let c = glued_fields(&f, &x).unwrap();
            let s = 1e-5;
            let mut lap_r = 0.0;
            let mut lap_u = 0.0;
            for i in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += s;
                xm[i] -= s;
                let p = glued_fields(&f, &xp).unwrap();
                let m = glued_fields(&f, &xm).unwrap();
                let fd_r = (p.r_bar.value - m.r_bar.value) / (2.0 * s);
                let fd_u = (p.u0_bar.value - m.u0_bar.value) / (2.0 * s);
                assert!((fd_r - c.r_bar.grad[i]).abs() < 1e-6, "{x:?} {i}");
                assert!((fd_u - c.u0_bar.grad[i]).abs() < 1e-5, "{x:?} {i}");
                lap_r += (p.r_bar.value - 2.0 * c.r_bar.value + m.r_bar.value) / (s * s);
                lap_u += (p.u0_bar.value - 2.0 * c.u0_bar.value + m.u0_bar.value) / (s * s);
            }
            assert!((lap_r - c.r_bar.laplacian).abs() < 1e-2 * c.r_bar.laplacian.abs().max(1.0), "{lap_r} {}", c.r_bar.laplacian);
            assert!((lap_u - c.u0_bar.laplacian).abs() < 2e-2 * c.u0_bar.laplacian.abs().max(1.0), "{lap_u} {}", c.u0_bar.laplacian);
        }
    }
}
