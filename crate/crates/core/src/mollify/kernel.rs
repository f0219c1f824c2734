//! The bump `ρ(y) = c(1 − |y|²/ε²)⁴` on `B_ε`, `ε = 1/10`, and its quadrature nodes.

use std::f64::consts::PI;

use crate::quadrature::composite;

/// Support radius of the unscaled kernel.
pub const KERNEL_RADIUS: f64 = 0.1;

/// Normalizing constant for dimension `n ∈ {1, 2}`.
pub fn kernel_constant(n: usize) -> f64 {
    let e = KERNEL_RADIUS;
    match n {
        1 => 315.0 / (256.0 * e),
        2 => 5.0 / (PI * e * e),
        _ => panic!("mollification is implemented for n ≤ 2"),
    }
}

/// Kernel value, gradient and Hessian (row-major `n × n`) at `y`.
pub fn kernel_derivatives(n: usize, y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let c = kernel_constant(n);
    let e2 = KERNEL_RADIUS * KERNEL_RADIUS;
    let s2: f64 = y.iter().map(|v| v * v).sum();
    let u = 1.0 - s2 / e2;
    if u <= 0.0 {
        return (0.0, vec![0.0; n], vec![0.0; n * n]);
    }
    let val = c * u.powi(4);
    let grad = y.iter().map(|yi| -8.0 * c * u.powi(3) * yi / e2).collect();
    let mut hess = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let diag = if i == j { -8.0 * c * u.powi(3) / e2 } else { 0.0 };
            hess[i * n + j] = diag + 48.0 * c * u * u * y[i] * y[j] / (e2 * e2);
        }
    }
    (val, grad, hess)
}

/// One quadrature node carrying the kernel data it multiplies.
#[derive(Clone, Debug)]
pub struct KernelNode {
    pub y: Vec<f64>,
    pub rho: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

/// Tensor Gauss–Legendre nodes over the kernel support with weights folded in.
/// For `n = 2` the rule is polar with every angle paired with its antipode, so
/// odd integrands vanish exactly.
pub fn kernel_nodes(n: usize, order: usize, panels: usize) -> Vec<KernelNode> {
    let e = KERNEL_RADIUS;
    let mut out = Vec::new();
    let mut push = |y: Vec<f64>, w: f64| {
        let (rho, grad, hess) = kernel_derivatives(n, &y);
        out.push(KernelNode {
            y,
            rho: w * rho,
            grad: grad.into_iter().map(|g| w * g).collect(),
            hess: hess.into_iter().map(|h| w * h).collect(),
        });
    };
    match n {
        1 => {
            for (s, w) in composite(order, panels, 0.0, e) {
                push(vec![s], w);
                push(vec![-s], w);
            }
        }
        2 => {
            let radial = composite(order, panels, 0.0, e);
            let angular = composite(order, panels, 0.0, PI);
            for &(s, ws) in &radial {
                for &(phi, wp) in &angular {
                    let (sn, cs) = phi.sin_cos();
                    push(vec![s * cs, s * sn], ws * wp * s);
                    push(vec![-s * cs, -s * sn], ws * wp * s);
                }
            }
        }
        _ => panic!("mollification is implemented for n ≤ 2"),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_mass_and_vanishing_moments() {
        for n in 1..=2 {
            let nodes = kernel_nodes(n, 8, 1);
            let mass: f64 = nodes.iter().map(|k| k.rho).sum();
            assert!((mass - 1.0).abs() < 1e-12, "n={n} mass={mass}");
            // ∫ ∂ᵢρ · y_j = −δᵢⱼ
            for i in 0..n {
                for j in 0..n {
                    let m: f64 = nodes.iter().map(|k| k.grad[i] * k.y[j]).sum();
                    let expect = if i == j { -1.0 } else { 0.0 };
                    assert!((m - expect).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let y = [0.03, -0.02];
        let (_, g, h) = kernel_derivatives(2, &y);
        let step = 1e-6;
        for i in 0..2 {
            let mut yp = y;
            let mut ym = y;
            yp[i] += step;
            ym[i] -= step;
            let (vp, gp, _) = kernel_derivatives(2, &yp);
            let (vm, gm, _) = kernel_derivatives(2, &ym);
            assert!(((vp - vm) / (2.0 * step) - g[i]).abs() < 1e-4 * g[i].abs().max(1.0));
            for j in 0..2 {
                assert!(((gp[j] - gm[j]) / (2.0 * step) - h[j * 2 + i]).abs() < 1e-3 * h[j * 2 + i].abs().max(1.0));
            }
        }
    }
}
