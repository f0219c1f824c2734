//! Geometric V-cycle used as a symmetric preconditioner: forward Gauss–Seidel
//! before and backward Gauss–Seidel after the coarse correction, prolongation
//! `P` multilinear, restriction `R = Pᵀ/2^{D−2}` with `D = n + 1`.

use super::grid::{Lattice, NodeWeights};
use super::operator::{gauss_seidel, residual};

pub struct Hierarchy {
    levels: Vec<Lattice>,
    smoothing: usize,
    coarse_sweeps: usize,
    x: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
}

fn coarsen(fine: &Lattice) -> Option<Lattice> {
    if fine.nx % 4 != 1 || fine.nx < 9 {
        return None;
    }
    let nx = fine.nx.div_ceil(2);
    let nj = if fine.nj > 1 { nx } else { 1 };
    let nt = nx.div_ceil(2);
    let mut injected = Vec::with_capacity(nx * nj * nt);
    for kt in 0..nt {
        for j in 0..nj {
            for i in 0..nx {
                let fj = if fine.nj > 1 { 2 * j } else { 0 };
                injected.push(fine.index(2 * i, fj, 2 * kt));
            }
        }
    }
    let free = injected.iter().map(|&f| fine.free[f]).collect();
    // the curvature term carries a factor h²
    let weights = fine.weights.as_ref().map(|w| NodeWeights {
        s: injected.iter().map(|&f| w.s[f]).collect(),
        q: injected.iter().map(|&f| 4.0 * w.q[f]).collect(),
    });
    Some(Lattice { nx, nj, nt, free, weights })
}

/// Coarse indices and weights covering fine index `i`.
#[inline]
fn parents(i: usize) -> [(usize, f64); 2] {
    if i.is_multiple_of(2) {
        [(i / 2, 1.0), (i / 2, 0.0)]
    } else {
        [((i - 1) / 2, 0.5), (i.div_ceil(2), 0.5)]
    }
}

impl Hierarchy {
    pub fn new(fine: &Lattice, smoothing: usize, coarse_sweeps: usize) -> Self {
        let mut levels = vec![fine.clone()];
        while let Some(c) = coarsen(levels.last().expect("non-empty")) {
            levels.push(c);
        }
        let x = levels.iter().map(|l| vec![0.0; l.len()]).collect();
        let b = levels.iter().map(|l| vec![0.0; l.len()]).collect();
        let r = levels.iter().map(|l| vec![0.0; l.len()]).collect();
        Self { levels, smoothing, coarse_sweeps, x, b, r }
    }

    /// `z = M⁻¹ r` by one V-cycle from a zero initial guess.
    pub fn precondition(&mut self, r: &[f64], z: &mut [f64]) {
        self.b[0].copy_from_slice(r);
        self.vcycle(0);
        z.copy_from_slice(&self.x[0]);
    }

    fn vcycle(&mut self, lev: usize) {
        let l = &self.levels[lev];
        self.x[lev].iter_mut().for_each(|v| *v = 0.0);
        if lev + 1 == self.levels.len() {
            for _ in 0..self.coarse_sweeps {
                gauss_seidel(l, &self.b[lev], &mut self.x[lev], true);
                gauss_seidel(l, &self.b[lev], &mut self.x[lev], false);
            }
            return;
        }
        for _ in 0..self.smoothing {
            gauss_seidel(l, &self.b[lev], &mut self.x[lev], true);
        }
        residual(l, &self.b[lev], &self.x[lev], &mut self.r[lev]);
        self.restrict(lev);
        self.vcycle(lev + 1);
        self.prolong_add(lev);
        let l = &self.levels[lev];
        for _ in 0..self.smoothing {
            gauss_seidel(l, &self.b[lev], &mut self.x[lev], false);
        }
    }

    fn restrict(&mut self, lev: usize) {
        let bc = &mut self.b[lev + 1];
        let f = &self.levels[lev];
        let c = &self.levels[lev + 1];
        let scale = if f.dims() == 3 { 0.5 } else { 1.0 };
        bc.iter_mut().for_each(|v| *v = 0.0);
        let rf = &self.r[lev];
        for kt in 0..f.nt {
            let pk = parents(kt);
            for j in 0..f.nj {
                let pj = if f.nj > 1 { parents(j) } else { [(0, 1.0), (0, 0.0)] };
                for i in 0..f.nx {
                    let v = rf[f.index(i, j, kt)];
                    if v == 0.0 {
                        continue;
                    }
                    let pi = parents(i);
                    for &(ck, wk) in &pk {
                        if wk == 0.0 || ck >= c.nt {
                            continue;
                        }
                        for &(cj, wj) in &pj {
                            if wj == 0.0 {
                                continue;
                            }
                            for &(ci, wi) in &pi {
                                if wi == 0.0 {
                                    continue;
                                }
                                bc[c.index(ci, cj, ck)] += scale * wk * wj * wi * v;
                            }
                        }
                    }
                }
            }
        }
        for (v, free) in bc.iter_mut().zip(&c.free) {
            if !free {
                *v = 0.0;
            }
        }
    }

    fn prolong_add(&mut self, lev: usize) {
        let (fine_part, coarse_part) = self.x.split_at_mut(lev + 1);
        let xf = &mut fine_part[lev];
        let xc = &coarse_part[0];
        let f = &self.levels[lev];
        let c = &self.levels[lev + 1];
        for kt in 0..f.nt {
            let pk = parents(kt);
            for j in 0..f.nj {
                let pj = if f.nj > 1 { parents(j) } else { [(0, 1.0), (0, 0.0)] };
                for i in 0..f.nx {
                    let idx = f.index(i, j, kt);
                    if !f.free[idx] {
                        continue;
                    }
                    let pi = parents(i);
                    let mut s = 0.0;
                    for &(ck, wk) in &pk {
                        if wk == 0.0 {
                            continue;
                        }
                        for &(cj, wj) in &pj {
                            if wj == 0.0 {
                                continue;
                            }
                            for &(ci, wi) in &pi {
                                if wi != 0.0 {
                                    s += wk * wj * wi * xc[c.index(ci, cj, ck)];
                                }
                            }
                        }
                    }
                    xf[idx] += s;
                }
            }
        }
    }
}
