//! Finite-difference checks of the distance identities
//! `∇ₓr = (d/r)ν`, `∇ₓU₀ = (U₀/2r)ν` and `Δr^m = m r^{m−2}(m − κd)`.

use serde::{Deserialize, Serialize};

use super::{frame, signed_distance, BoundaryGraph, GeomError};

/// Maximum absolute deviations over the accepted sample points.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub h_fd: f64,
    pub points_used: usize,
    pub points_skipped: usize,
    pub grad_r: f64,
    pub grad_u0: f64,
    pub lap_r1: f64,
    pub lap_r2: f64,
    pub multiple_feet: usize,
}

fn shifted(x: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[i] += h;
    y
}

/// Evaluates the identities at every sample with `r > 10·h_fd`; other samples
/// are counted as skipped.
pub fn check_distance_identities(
    graph: &BoundaryGraph,
    samples: &[Vec<f64>],
    h_fd: f64,
) -> Result<IdentityReport, GeomError> {
    let n = graph.n();
    let mut rep = IdentityReport { h_fd, ..Default::default() };
    let r_of = |p: &[f64]| -> Result<f64, GeomError> { Ok(frame(graph, p)?.r) };
    let u0_of = |p: &[f64]| -> Result<f64, GeomError> { Ok(frame(graph, p)?.u0) };
    let d_of = |p: &[f64]| -> Result<f64, GeomError> { Ok(signed_distance(graph, p)?.d) };
    for x in samples {
        let f = frame(graph, x)?;
        if f.r <= 10.0 * h_fd {
            rep.points_skipped += 1;
            continue;
        }
        if f.multiple_feet {
            rep.multiple_feet += 1;
        }
        rep.points_used += 1;
        let mut lap_d = 0.0;
        let d0 = f.d;
        for i in 0..n {
            let rp = r_of(&shifted(x, i, h_fd))?;
            let rm = r_of(&shifted(x, i, -h_fd))?;
            let gr = (rp - rm) / (2.0 * h_fd);
            rep.grad_r = rep.grad_r.max((gr - f.d / f.r * f.nu[i]).abs());
            let up = u0_of(&shifted(x, i, h_fd))?;
            let um = u0_of(&shifted(x, i, -h_fd))?;
            let gu = (up - um) / (2.0 * h_fd);
            rep.grad_u0 = rep.grad_u0.max((gu - f.u0 / (2.0 * f.r) * f.nu[i]).abs());
            let xi = &x[..n];
            let dp = d_of(&shifted(xi, i, h_fd))?;
            let dm = d_of(&shifted(xi, i, -h_fd))?;
            lap_d += (dp - 2.0 * d0 + dm) / (h_fd * h_fd);
        }
        let kappa = -lap_d;
        for (m, slot) in [(1i32, 0usize), (2, 1)] {
            let pw = |p: &[f64]| -> Result<f64, GeomError> { Ok(r_of(p)?.powi(m)) };
            let centre = f.r.powi(m);
            let mut lap = 0.0;
            for i in 0..=n {
                lap += (pw(&shifted(x, i, h_fd))? - 2.0 * centre + pw(&shifted(x, i, -h_fd))?) / (h_fd * h_fd);
            }
            let mf = m as f64;
            let expected = mf * f.r.powi(m - 2) * (mf - kappa * f.d);
            let dev = (lap - expected).abs();
            if slot == 0 {
                rep.lap_r1 = rep.lap_r1.max(dev);
            } else {
                rep.lap_r2 = rep.lap_r2.max(dev);
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_laplacian_of_r() {
        let g = BoundaryGraph::flat(2);
        let rep = check_distance_identities(&g, &[vec![0.0, 0.5, 0.5]], 1e-3).unwrap();
        assert_eq!(rep.points_used, 1);
        assert!(rep.lap_r1 < 1e-5, "{rep:?}");
        assert!(rep.grad_u0 < 1e-6 && rep.grad_r < 1e-6);
    }

    #[test]
    fn close_points_are_skipped() {
        let g = BoundaryGraph::flat(1);
        let rep = check_distance_identities(&g, &[vec![0.001, 0.001]], 1e-3).unwrap();
        assert_eq!(rep.points_skipped, 1);
    }
}
