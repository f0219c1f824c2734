//! Per-point geometry in `ℝ^{n+1}`: `d`, `r`, `θ`, `ν` and the model solution `U₀`.

use super::{signed_distance, BoundaryGraph, GeomError};

/// Geometry of a point `X = (x, x_{n+1})` relative to the slit.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryFrame {
    pub x: Vec<f64>,
    pub d: f64,
    pub r: f64,
    /// Angle of `(d, x_{n+1})`; `None` exactly on `Γ` where it is undefined.
    pub theta: Option<f64>,
    pub nu: Vec<f64>,
    pub u0: f64,
    pub foot: Vec<f64>,
    pub multiple_feet: bool,
}

impl GeometryFrame {
    pub fn t(&self) -> f64 {
        *self.x.last().expect("non-empty point")
    }

    pub fn on_gamma(&self) -> bool {
        self.theta.is_none()
    }

    /// Conjugate companion `V = √r·sin(θ/2)` of `U₀`.
    pub fn v0(&self) -> f64 {
        conjugate_u0(self.d, self.t())
    }

    /// Gradient of `U₀` in `ℝ^{n+1}`: `(U₀/2r)·ν` in `x`, `V/2r` in `x_{n+1}`.
    pub fn grad_u0(&self) -> Vec<f64> {
        let mut g: Vec<f64> = self.nu.iter().map(|v| self.u0 / (2.0 * self.r) * v).collect();
        g.push(self.v0() / (2.0 * self.r));
        g
    }
}

/// `U₀ = √((d+r)/2)` evaluated without cancellation: for `d < 0` the
/// equivalent form `|t|/√(2(r−d))` is used.
pub fn model_u0(d: f64, t: f64) -> f64 {
    let r = d.hypot(t);
    if r == 0.0 {
        0.0
    } else if d >= 0.0 {
        (0.5 * (d + r)).sqrt()
    } else {
        t.abs() / (2.0 * (r - d)).sqrt()
    }
}

/// `V = sign(t)·√((r−d)/2)`, so that `U₀ + iV = √(d + i t)`.
pub fn conjugate_u0(d: f64, t: f64) -> f64 {
    let r = d.hypot(t);
    if r == 0.0 {
        return 0.0;
    }
    let mag = if d <= 0.0 { (0.5 * (r - d)).sqrt() } else { t.abs() / (2.0 * (r + d)).sqrt() };
    if t < 0.0 {
        -mag
    } else {
        mag
    }
}

/// Angle of `(d, t)` in `(−π, π]`, `θ = π` on the slit.
pub fn angle(d: f64, t: f64) -> f64 {
    let th = t.atan2(d);
    if th == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        th
    }
}

/// Geometry frame at `X ∈ ℝ^{n+1}`.
pub fn frame(graph: &BoundaryGraph, x: &[f64]) -> Result<GeometryFrame, GeomError> {
    let n = graph.n();
    if x.len() != n + 1 {
        return Err(GeomError::DimensionMismatch { expected: n + 1, got: x.len() });
    }
    let sd = signed_distance(graph, &x[..n])?;
    let t = x[n];
    let t_eff = if t == 0.0 { 0.0 } else { t };
    let r = sd.d.hypot(t_eff);
    let theta = if r == 0.0 { None } else { Some(angle(sd.d, t_eff)) };
    Ok(GeometryFrame {
        x: x.to_vec(),
        d: sd.d,
        r,
        theta,
        nu: sd.nu,
        u0: model_u0(sd.d, t_eff),
        foot: sd.foot,
        multiple_feet: sd.multiple_feet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn flat_examples() {
        let g = BoundaryGraph::flat(2);
        let f = frame(&g, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!((f.d, f.r, f.theta, f.u0), (1.0, 1.0, Some(0.0), 1.0));
        let f = frame(&g, &[0.0, -1.0, 0.0]).unwrap();
        assert_eq!(f.theta, Some(PI));
        assert_eq!(f.u0, 0.0);
        let f = frame(&g, &[0.0, -1.0, -0.0]).unwrap();
        assert_eq!(f.theta, Some(PI));
        let f = frame(&g, &[0.3, 0.0, 0.2]).unwrap();
        assert_eq!(f.r, 0.2);
        assert!((f.theta.unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((f.u0 - 0.1f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn on_gamma_is_flagged() {
        let g = BoundaryGraph::flat(1);
        let f = frame(&g, &[0.0, 0.0]).unwrap();
        assert!(f.on_gamma());
        assert_eq!(f.u0, 0.0);
        assert_eq!(f.r, 0.0);
    }

    #[test]
    fn u0_formulas_agree() {
        for &(d, t) in &[(0.3, 0.1), (-0.3, 0.1), (-0.3, 1e-9), (1e-8, -0.5), (-2.0, -0.01)] {
            let r: f64 = f64::hypot(d, t);
            let u = model_u0(d, t);
            assert!((u * u - 0.5 * (d + r)).abs() <= 1e-12 * r);
            let th = angle(d, t);
            assert!((u - r.sqrt() * (th / 2.0).cos()).abs() <= 1e-12);
            let v = conjugate_u0(d, t);
            assert!((v - r.sqrt() * (th / 2.0).sin()).abs() <= 1e-12);
        }
    }
}
