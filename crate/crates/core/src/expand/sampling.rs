use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ExpandError;
use crate::pdesolve::Grid;
use crate::slitgeom::{frame, BoundaryGraph};

/// Coordinates recentred at `Z ∈ Γ`: the last local axis is the unit normal
/// of `Γ` in `ℝⁿ`, the others span its tangent space.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentFrame {
    pub z: Vec<f64>,
    /// Rows are the local axes.
    pub axes: Vec<Vec<f64>>,
}

impl TangentFrame {
    /// Frame from the slope `g'(z')` (`n = 2`); `n = 1` has no tangent.
    pub fn new(z: &[f64], slope: Option<f64>) -> Self {
        if z.len() == 1 {
            return Self { z: z.to_vec(), axes: vec![vec![1.0]] };
        }
        let s = slope.unwrap_or(0.0);
        let q = (1.0 + s * s).sqrt();
        Self { z: z.to_vec(), axes: vec![vec![1.0 / q, s / q], vec![-s / q, 1.0 / q]] }
    }

    /// Frame from the exact gradient of the graph at `z'`.
    pub fn from_graph(graph: &BoundaryGraph, z: &[f64]) -> Self {
        if z.len() == 1 {
            return Self::new(z, None);
        }
        Self::new(z, Some(graph.eval(&z[..1]).grad[0]))
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// Local coordinates of `x ∈ ℝⁿ`.
    pub fn local(&self, x: &[f64]) -> Vec<f64> {
        self.axes.iter().map(|a| a.iter().zip(x).zip(&self.z).map(|((ai, xi), zi)| ai * (xi - zi)).sum()).collect()
    }

    /// Global point `Z + Σ yᵢ aᵢ`.
    pub fn global(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.z.clone();
        for (a, yi) in self.axes.iter().zip(y) {
            for (xj, aj) in x.iter_mut().zip(a) {
                *xj += yi * aj;
            }
        }
        x
    }
}

/// A sample `X = (x, t)` with its local coordinates and `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
    pub r: f64,
    pub u0: f64,
}

const MAX_PASSES: usize = 64;

/// Stratified samples of the half-annulus `{lo < |X − Z| < hi, t ≥ 0}` with
/// `r > min_r`, inside the half-cube. Whole passes over the strata are kept
/// until at least `count` samples are accepted.
pub fn annulus_samples(
    grid: &Grid,
    tf: &TangentFrame,
    lo: f64,
    hi: f64,
    count: usize,
    min_r: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Sample>, ExpandError> {
    let n = tf.n();
    let (nr, na, nb) = if n == 1 { (8, 32, 1) } else { (4, 8, 8) };
    let mut out = Vec::new();
    for _ in 0..MAX_PASSES {
        for ir in 0..nr {
            for ia in 0..na {
                for ib in 0..nb {
                    let rad = lo + (hi - lo) * (ir as f64 + rng.random::<f64>()) / nr as f64;
                    let a = std::f64::consts::PI * (ia as f64 + rng.random::<f64>()) / na as f64;
                    let b = std::f64::consts::PI * (ib as f64 + rng.random::<f64>()) / nb as f64;
                    // unit vector of the upper half-sphere in local coordinates
                    let (y, t) = if n == 1 {
                        (vec![rad * a.cos()], rad * a.sin())
                    } else {
                        (vec![rad * a.cos(), rad * a.sin() * b.cos()], rad * a.sin() * b.sin())
                    };
                    let x = tf.global(&y);
                    if x.iter().any(|v| v.abs() > 1.0) || t > 1.0 {
                        continue;
                    }
                    let mut xx = x.clone();
                    xx.push(t);
                    let fr = frame(grid.graph(), &xx)?;
                    if fr.r <= min_r {
                        continue;
                    }
                    out.push(Sample { y: tf.local(&x), x, t, r: fr.r, u0: fr.u0 });
                }
            }
        }
        if out.len() >= count {
            return Ok(out);
        }
    }
    Err(ExpandError::WindowTooSmall(format!(
        "only {} of {count} samples in the annulus ({lo:.3e}, {hi:.3e}) with r > {min_r:.3e}",
        out.len()
    )))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
