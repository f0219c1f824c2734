use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::field::{dyadic_scale, glued_fields, mollified_distance, MollifiedField};
use super::MollifyError;
use crate::slitgeom::frame;

/// The nine normalized quantities tracked across scales.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    /// `|d_λ − d| / λ^{1+α}`
    DlValue,
    /// `|∇d_λ − ∇d| / λ^α`
    DlGrad,
    /// `|D²d_λ| / λ^{α−1}`
    DlHess,
    /// `|r̄/r − 1| / r^α`
    RbarRatio,
    /// `|Ū₀/U₀ − 1| / r^α`
    U0barRatio,
    /// `|∇r̄ − ∇r| / r^α`
    RbarGrad,
    /// `|∂_{n+1}r̄ − ∂_{n+1}r| / (r^{α−1/2} U₀)`
    RbarDt,
    /// `|Δr̄ − 1/r| / r^{α−1}`
    RbarLap,
    /// `|ΔŪ₀| / r^{α−3/2}`
    U0barLap,
}

impl BoundId {
    pub const ALL: [BoundId; 9] = [
        BoundId::DlValue,
        BoundId::DlGrad,
        BoundId::DlHess,
        BoundId::RbarRatio,
        BoundId::U0barRatio,
        BoundId::RbarGrad,
        BoundId::RbarDt,
        BoundId::RbarLap,
        BoundId::U0barLap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::DlValue => "dl_value",
            BoundId::DlGrad => "dl_grad",
            BoundId::DlHess => "dl_hess",
            BoundId::RbarRatio => "rbar_ratio",
            BoundId::U0barRatio => "u0bar_ratio",
            BoundId::RbarGrad => "rbar_grad",
            BoundId::RbarDt => "rbar_dt",
            BoundId::RbarLap => "rbar_lap",
            BoundId::U0barLap => "u0bar_lap",
        }
    }
}

/// Measured sup of one bound at one scale.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundSample {
    pub bound: BoundId,
    pub lambda: f64,
    pub normalized_sup: f64,
}

/// Cross-scale verdict of one bound.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundVerdict {
    pub bound: BoundId,
    /// `max/min` of the per-scale sups (1 when all vanish).
    pub spread: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RegularizationReport {
    pub alpha: f64,
    pub levels: Vec<u32>,
    pub samples: Vec<BoundSample>,
    pub verdicts: Vec<BoundVerdict>,
    pub points_per_scale: usize,
    pub multiple_feet: usize,
    pub max_quadrature_error: f64,
}

/// Sups at or below this are treated as exact zeros.
pub const ZERO_FLOOR: f64 = 1e-12;
/// Allowed fluctuation of normalized sups across scales.
pub const SPREAD_LIMIT: f64 = 4.0;

impl RegularizationReport {
    pub fn sup(&self, bound: BoundId, lambda: f64) -> Option<f64> {
        self.samples.iter().find(|s| s.bound == bound && s.lambda == lambda).map(|s| s.normalized_sup)
    }

    /// Largest sup of a bound over all scales.
    pub fn max_sup(&self, bound: BoundId) -> f64 {
        self.samples.iter().filter(|s| s.bound == bound).map(|s| s.normalized_sup).fold(0.0, f64::max)
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// CSV with columns `bound_id, lambda, normalized_sup, verdict`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bound_id,lambda,normalized_sup,verdict\n");
        for s in &self.samples {
            let pass = self.verdicts.iter().find(|v| v.bound == s.bound).is_some_and(|v| v.pass);
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.bound.as_str(),
                s.lambda,
                s.normalized_sup,
                if pass { "PASS" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Self-similar unit pattern: points `Y = (y', ρcosθ, ρsinθ)` with `ρ ∈ [1, 4)`
/// log-stratified, `θ` stratified over `(−π, π)` and `y' ∈ [−2, 2]^{n−1}`.
fn unit_annulus_pattern(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let u = (i as f64 + rng.random::<f64>()) / count as f64;
            let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * u;
            let rho = 4f64.powf(rng.random::<f64>());
            let mut y: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-2.0..2.0)).collect();
            y.push(rho * theta.cos());
            y.push(rho * theta.sin());
            y
        })
        .collect()
}

/// Unit pattern for the tube `D₄`: `y' ∈ [−2, 2]^{n−1}`, `y_n` stratified in `(−4, 4)`.
fn unit_tube_pattern(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_7ab1e);
    (0..count)
        .map(|i| {
            let mut y: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-2.0..2.0)).collect();
            y.push(-4.0 + 8.0 * (i as f64 + rng.random::<f64>()) / count as f64);
            y
        })
        .collect()
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

/// Samples the nine normalized errors at each level `k` (scale `λ_k`) of
/// `levels` on a self-similar pattern, and compares the sups across scales.
pub fn regularization_report(
    field: &MollifiedField,
    alpha: f64,
    levels: &[u32],
    sample_density: usize,
    seed: u64,
) -> Result<RegularizationReport, MollifyError> {
    if levels.len() < 3 {
        return Err(MollifyError::TooFewScales(levels.len()));
    }
    let graph = field.graph();
    let n = graph.n();
    let annulus = unit_annulus_pattern(n, sample_density, seed);
    let tube = unit_tube_pattern(n, sample_density, seed);
    let mut samples = Vec::new();
    let mut multiple_feet = 0;
    let mut max_quadrature_error: f64 = 0.0;
    for &k in levels {
        let lam = dyadic_scale(k);
        field.level_of(lam)?;
        let mut sup = [0.0f64; 9];
        for y in &tube {
            let x: Vec<f64> = y.iter().map(|v| v * lam).collect();
            let sd = crate::slitgeom::signed_distance(graph, &x)?;
            if sd.d.abs() >= 4.0 * lam {
                continue;
            }
            multiple_feet += sd.multiple_feet as usize;
            let m = mollified_distance(field, lam, &x)?;
            max_quadrature_error = max_quadrature_error.max(m.error_estimate);
            sup[0] = sup[0].max((m.value - sd.d).abs() / lam.powf(1.0 + alpha));
            sup[1] = sup[1].max(norm(m.grad.iter().zip(&sd.nu).map(|(a, b)| a - b)) / lam.powf(alpha));
            sup[2] = sup[2].max(norm(m.hess.iter().copied()) * lam.powf(1.0 - alpha));
        }
        for y in &annulus {
            let x: Vec<f64> = y.iter().map(|v| v * lam).collect();
            let fr = frame(graph, &x)?;
            if !(fr.r >= lam && fr.r < 4.0 * lam) || fr.u0 <= 0.0 {
                continue;
            }
            multiple_feet += fr.multiple_feet as usize;
            let g = glued_fields(field, &x)?;
            max_quadrature_error = max_quadrature_error.max(g.quadrature_error);
            let r = fr.r;
            let t = fr.t();
            let mut grad_r: Vec<f64> = fr.nu.iter().map(|v| fr.d / r * v).collect();
            grad_r.push(t / r);
            sup[3] = sup[3].max((g.r_bar.value / r - 1.0).abs() / r.powf(alpha));
            sup[4] = sup[4].max((g.u0_bar.value / fr.u0 - 1.0).abs() / r.powf(alpha));
            sup[5] = sup[5].max(norm(g.r_bar.grad.iter().zip(&grad_r).map(|(a, b)| a - b)) / r.powf(alpha));
            sup[6] = sup[6].max((g.r_bar.grad[n] - t / r).abs() / (r.powf(alpha - 0.5) * fr.u0));
            sup[7] = sup[7].max((g.r_bar.laplacian - 1.0 / r).abs() / r.powf(alpha - 1.0));
            sup[8] = sup[8].max(g.u0_bar.laplacian.abs() / r.powf(alpha - 1.5));
        }
        for (i, b) in BoundId::ALL.iter().enumerate() {
            samples.push(BoundSample { bound: *b, lambda: lam, normalized_sup: sup[i] });
        }
    }
    let verdicts = BoundId::ALL
        .iter()
        .map(|&b| {
            let vals: Vec<f64> = samples.iter().filter(|s| s.bound == b).map(|s| s.normalized_sup).collect();
            let max = vals.iter().copied().fold(0.0, f64::max);
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let finite = vals.iter().all(|v| v.is_finite());
            let (spread, pass) = if max <= ZERO_FLOOR {
                (1.0, finite)
            } else {
                let s = max / min;
                (s, finite && s < SPREAD_LIMIT)
            };
            BoundVerdict { bound: b, spread, pass }
        })
        .collect();
    Ok(RegularizationReport {
        alpha,
        levels: levels.to_vec(),
        samples,
        verdicts,
        points_per_scale: sample_density,
        multiple_feet,
        max_quadrature_error,
    })
}

/// Outcome of a barrier evaluation.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BarrierReport {
    /// `α` for `V = Ū₀ − Ū₀^{1+2α}`, or `γ` for `V = Ū₀^{2γ}`.
    pub exponent: f64,
    /// `min (−ΔV)·r^{p}` with `p = 3/2 − α` (resp. `2 − γ`).
    pub min_normalized: f64,
    pub floor: f64,
    pub min_v: f64,
    pub max_u0_bar: f64,
    pub points: usize,
    pub pass: bool,
}

/// Barrier sample points: `r` log-uniform in the glued window, `θ` stratified.
fn barrier_points(field: &MollifiedField, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = field.graph().n();
    let (lo, hi) = field.r_window();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xba771e);
    (0..count)
        .map(|i| {
            let theta = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (i as f64 + rng.random::<f64>()) / count as f64;
            let r = lo * (hi / lo).powf(rng.random::<f64>() * 0.999);
            let mut x: Vec<f64> = (0..n - 1).map(|_| r * rng.random_range(-1.0..1.0)).collect();
            x.push(r * theta.cos());
            x.push(r * theta.sin());
            x
        })
        .collect()
}

fn barrier_scan(
    field: &MollifiedField,
    count: usize,
    seed: u64,
    mut eval: impl FnMut(f64, f64, f64, f64) -> (f64, f64),
) -> Result<(f64, f64, f64, usize), MollifyError> {
    let mut min_norm = f64::INFINITY;
    let mut min_v = f64::INFINITY;
    let mut max_u = 0.0f64;
    let mut used = 0;
    for x in barrier_points(field, count, seed) {
        let fr = frame(field.graph(), &x)?;
        if field.level_of(fr.r).is_err() || fr.u0 <= 0.0 {
            continue;
        }
        let g = glued_fields(field, &x)?;
        let u = g.u0_bar.value;
        let gu2: f64 = g.u0_bar.grad.iter().map(|v| v * v).sum();
        let (v, normalized) = eval(u, gu2, g.u0_bar.laplacian, fr.r);
        min_norm = min_norm.min(normalized);
        min_v = min_v.min(v);
        max_u = max_u.max(u);
        used += 1;
    }
    Ok((min_norm, min_v, max_u, used))
}

/// Evaluates `ΔV` for `V = Ū₀ − Ū₀^{1+2α}` and reports `min (−ΔV)·r^{3/2−α}`
/// against the floor `c₀`.
pub fn barrier_check(
    field: &MollifiedField,
    alpha: f64,
    samples: usize,
    seed: u64,
    c0: f64,
) -> Result<BarrierReport, MollifyError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(MollifyError::InvalidExponent(alpha));
    }
    let (min_normalized, min_v, max_u0_bar, points) = barrier_scan(field, samples, seed, |u, gu2, lap_u, r| {
        let v = u - u.powf(1.0 + 2.0 * alpha);
        let lap_v = lap_u - (1.0 + 2.0 * alpha) * u.powf(2.0 * alpha - 1.0) * (u * lap_u + 2.0 * alpha * gu2);
        (v, -lap_v * r.powf(1.5 - alpha))
    })?;
    Ok(BarrierReport {
        exponent: alpha,
        min_normalized,
        floor: c0,
        min_v,
        max_u0_bar,
        points,
        pass: points > 0 && min_normalized >= c0 && min_v >= 0.0,
    })
}

/// The degenerate barrier `V = Ū₀^{2γ}`: reports `min (−ΔV)·r^{2−γ}`.
pub fn remark_barrier_check(
    field: &MollifiedField,
    gamma: f64,
    samples: usize,
    seed: u64,
    c0: f64,
) -> Result<BarrierReport, MollifyError> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(MollifyError::InvalidExponent(gamma));
    }
    let (min_normalized, min_v, max_u0_bar, points) = barrier_scan(field, samples, seed, |u, gu2, lap_u, r| {
        let p = 2.0 * gamma;
        let lap_v = p * u.powf(p - 1.0) * lap_u + p * (p - 1.0) * u.powf(p - 2.0) * gu2;
        (u.powf(p), -lap_v * r.powf(2.0 - gamma))
    })?;
    Ok(BarrierReport {
        exponent: gamma,
        min_normalized,
        floor: c0,
        min_v,
        max_u0_bar,
        points,
        pass: points > 0 && min_normalized >= c0,
    })
}
