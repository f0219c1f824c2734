//! The symmetric slit-domain stencil on a [`Lattice`].
//!
//! For a free node the equation reads `diag·uᵢ − Σ wᵢⱼuⱼ = bᵢ` with unit
//! weights, except that edges inside the plane `x_{n+1} = 0` carry weight `½`.
//! This is the reflection stencil multiplied by the half-cell mass `½`, so the
//! matrix stays symmetric.

use super::grid::Lattice;

#[inline]
fn stencil(l: &Lattice, u: &[f64], idx: usize, j_axis: bool, kt: usize) -> (f64, f64) {
    match &l.weights {
        None => plain(l, u, idx, j_axis, kt),
        Some(wt) => {
            let s = &wt.s;
            let sj = l.nx;
            let st = l.nx * l.nj;
            let w = if kt == 0 { 0.5 } else { 1.0 };
            let mut sum = w * (s[idx - 1] * u[idx - 1] + s[idx + 1] * u[idx + 1]);
            let mut diag = w * (s[idx - 1] + s[idx + 1]);
            if j_axis {
                sum += w * (s[idx - sj] * u[idx - sj] + s[idx + sj] * u[idx + sj]);
                diag += w * (s[idx - sj] + s[idx + sj]);
            }
            sum += s[idx + st] * u[idx + st];
            diag += s[idx + st];
            if kt > 0 {
                sum += s[idx - st] * u[idx - st];
                diag += s[idx - st];
            }
            (s[idx] * sum, s[idx] * diag + wt.q[idx])
        }
    }
}

#[inline]
fn plain(l: &Lattice, u: &[f64], idx: usize, j_axis: bool, kt: usize) -> (f64, f64) {
    let sj = l.nx;
    let st = l.nx * l.nj;
    let w = if kt == 0 { 0.5 } else { 1.0 };
    let mut s = w * (u[idx - 1] + u[idx + 1]);
    let mut diag = 2.0 * w;
    if j_axis {
        s += w * (u[idx - sj] + u[idx + sj]);
        diag += 2.0 * w;
    }
    s += u[idx + st];
    diag += 1.0;
    if kt > 0 {
        s += u[idx - st];
        diag += 1.0;
    }
    (s, diag)
}

fn for_each_free(l: &Lattice, forward: bool, mut f: impl FnMut(usize, usize, usize, usize)) {
    let j_range: Vec<usize> = if l.nj > 1 { (1..l.nj - 1).collect() } else { vec![0] };
    let kts: Vec<usize> = (0..l.nt - 1).collect();
    let is: Vec<usize> = (1..l.nx - 1).collect();
    let order = |v: &Vec<usize>| -> Vec<usize> {
        if forward {
            v.clone()
        } else {
            v.iter().rev().copied().collect()
        }
    };
    let (kts, js, is) = (order(&kts), order(&j_range), order(&is));
    for &kt in &kts {
        for &j in &js {
            let base = (kt * l.nj + j) * l.nx;
            for &i in &is {
                let idx = base + i;
                if l.free[idx] {
                    f(idx, i, j, kt);
                }
            }
        }
    }
}

/// `out = A·u` on free nodes, zero elsewhere.
pub fn apply(l: &Lattice, u: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let ja = l.nj > 1;
    for_each_free(l, true, |idx, _, _, kt| {
        let (s, d) = stencil(l, u, idx, ja, kt);
        out[idx] = d * u[idx] - s;
    });
}

/// `r = b − A·u` on free nodes, zero elsewhere.
pub fn residual(l: &Lattice, b: &[f64], u: &[f64], r: &mut [f64]) {
    r.iter_mut().for_each(|v| *v = 0.0);
    let ja = l.nj > 1;
    for_each_free(l, true, |idx, _, _, kt| {
        let (s, d) = stencil(l, u, idx, ja, kt);
        r[idx] = b[idx] - (d * u[idx] - s);
    });
}

/// Diagonal of the operator on free nodes, zero elsewhere.
pub fn diagonal(l: &Lattice) -> Vec<f64> {
    let zero = vec![0.0; l.len()];
    let mut out = zero.clone();
    let ja = l.nj > 1;
    for_each_free(l, true, |idx, _, _, kt| out[idx] = stencil(l, &zero, idx, ja, kt).1);
    out
}

/// One Gauss–Seidel sweep in lexicographic (`forward`) or reversed order.
pub fn gauss_seidel(l: &Lattice, b: &[f64], u: &mut [f64], forward: bool) {
    let ja = l.nj > 1;
    for_each_free(l, forward, |idx, _, _, kt| {
        let (s, d) = stencil(l, u, idx, ja, kt);
        u[idx] = (b[idx] + s) / d;
    });
}

/// Over-relaxed sweep; returns the largest update. With `red_black` the
/// nodes with even `i + j + kt` are swept before the odd ones.
pub fn sor(l: &Lattice, b: &[f64], u: &mut [f64], omega: f64, red_black: bool) -> f64 {
    let ja = l.nj > 1;
    let mut max_upd: f64 = 0.0;
    let colors: &[Option<usize>] = if red_black { &[Some(0), Some(1)] } else { &[None] };
    for &color in colors {
        for_each_free(l, true, |idx, i, j, kt| {
            if color.is_some_and(|c| (i + j + kt) % 2 != c) {
                return;
            }
            let (s, d) = stencil(l, u, idx, ja, kt);
            let upd = omega * ((b[idx] + s) / d - u[idx]);
            u[idx] += upd;
            max_upd = max_upd.max(upd.abs());
        });
    }
    max_upd
}

/// Projected over-relaxed sweep for `A u = 0` with `u ≥ 0` on the plane.
pub fn projected_sor(l: &Lattice, u: &mut [f64], omega: f64) -> f64 {
    let ja = l.nj > 1;
    let mut max_upd: f64 = 0.0;
    for_each_free(l, true, |idx, _, _, kt| {
        let (s, d) = stencil(l, u, idx, ja, kt);
        let mut new = u[idx] + omega * (s / d - u[idx]);
        if kt == 0 && new < 0.0 {
            new = 0.0;
        }
        max_upd = max_upd.max((new - u[idx]).abs());
        u[idx] = new;
    });
    max_upd
}

/// Dirichlet energy `½ Σ_edges w (uᵢ − uⱼ)²` over the half-cube (node
/// weights are ignored).
pub fn energy(l: &Lattice, u: &[f64]) -> f64 {
    let sj = l.nx;
    let st = l.nx * l.nj;
    let mut e = 0.0;
    for kt in 0..l.nt {
        let w = if kt == 0 { 0.5 } else { 1.0 };
        for j in 0..l.nj {
            for i in 0..l.nx {
                let idx = (kt * l.nj + j) * l.nx + i;
                if i + 1 < l.nx {
                    e += w * (u[idx + 1] - u[idx]).powi(2);
                }
                if l.nj > 1 && j + 1 < l.nj {
                    e += w * (u[idx + sj] - u[idx]).powi(2);
                }
                if kt + 1 < l.nt {
                    e += (u[idx + st] - u[idx]).powi(2);
                }
            }
        }
    }
    0.5 * e
}

/// Unscaled reflected Laplacian `Σ wᵢⱼ(uⱼ − uᵢ)` at a free node.
pub fn stencil_laplacian(l: &Lattice, u: &[f64], idx: usize) -> f64 {
    let kt = idx / (l.nx * l.nj);
    let (s, d) = plain(l, u, idx, l.nj > 1, kt);
    s - d * u[idx]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(nx: usize, nj: usize) -> Lattice {
        let nt = nx.div_ceil(2);
        let mut free = vec![false; nx * nj * nt];
        for kt in 0..nt - 1 {
            for j in 0..nj {
                for i in 1..nx - 1 {
                    if nj == 1 || (j > 0 && j < nj - 1) {
                        free[(kt * nj + j) * nx + i] = true;
                    }
                }
            }
        }
        Lattice { nx, nj, nt, free, weights: None }
    }

    #[test]
    fn operator_is_symmetric() {
        for nj in [1, 7] {
            let l = lattice(7, nj);
            let len = l.len();
            let mask = |v: Vec<f64>| -> Vec<f64> { v.iter().zip(&l.free).map(|(x, f)| if *f { *x } else { 0.0 }).collect() };
            let u = mask((0..len).map(|i| ((i * 37 % 11) as f64).sin()).collect());
            let v = mask((0..len).map(|i| ((i * 13 % 7) as f64).cos()).collect());
            let mut au = vec![0.0; len];
            let mut av = vec![0.0; len];
            apply(&l, &u, &mut au);
            apply(&l, &v, &mut av);
            let a: f64 = au.iter().zip(&v).map(|(x, y)| x * y).sum();
            let b: f64 = av.iter().zip(&u).map(|(x, y)| x * y).sum();
            assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
            // energy is ½uᵀAu for vectors vanishing off the free set
            assert!((energy(&l, &u) - 0.5 * au.iter().zip(&u).map(|(x, y)| x * y).sum::<f64>()).abs() < 1e-12);
        }
    }
}
