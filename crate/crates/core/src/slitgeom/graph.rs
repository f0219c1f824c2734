//! The boundary graph `Γ = {x_n = g(x')}` and its JSON representation.

use serde::{Deserialize, Serialize};

use super::GeomError;
use crate::poly::MultiPoly;

/// One monomial `coeff · x'^exp` of a polynomial graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphTerm {
    pub exp: Vec<u32>,
    pub coeff: f64,
}

/// Serialized description of `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    /// Polynomial coefficient list.
    Poly { terms: Vec<GraphTerm> },
    /// Values on a uniform tensor grid over `[lo, hi]^{n-1}` (row-major, first
    /// variable slowest) interpolated by local Lagrange polynomials of `order`.
    Samples { lo: f64, hi: f64, shape: Vec<usize>, values: Vec<f64>, order: usize },
    /// `coeff · |x'|^exponent`, a profile of limited Hölder regularity.
    AbsPower { coeff: f64, exponent: f64 },
}

/// Serialized description of a boundary graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGraphSpec {
    pub n: usize,
    pub g: GraphSpec,
    pub k: u32,
    pub alpha: f64,
    #[serde(default = "default_norm_bound")]
    pub norm_bound: f64,
    #[serde(default = "default_extent")]
    pub extent: f64,
}

fn default_norm_bound() -> f64 {
    1.0
}

fn default_extent() -> f64 {
    2.0
}

#[derive(Clone, Debug)]
enum Repr {
    Zero,
    Poly { p: MultiPoly, grad: Vec<MultiPoly>, hess: Vec<Vec<MultiPoly>>, affine: Option<Vec<f64>> },
    Samples { lo: f64, step: f64, shape: Vec<usize>, values: Vec<f64>, order: usize },
    AbsPower { coeff: f64, exponent: f64 },
}

/// Value, gradient and Hessian of `g` at a point of `ℝ^{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphEval {
    pub g: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

/// `Γ` as the graph of `g: ℝ^{n-1} → ℝ` inside `ℝⁿ`, with declared regularity
/// `Γ ∈ C^{k+1,α}`. The graph passes through the origin; it is *normalized*
/// when in addition `∇g(0) = 0` (tilted planes are allowed but not normalized).
#[derive(Clone, Debug)]
pub struct BoundaryGraph {
    n: usize,
    k: u32,
    alpha: f64,
    norm_bound: f64,
    extent: f64,
    spec: GraphSpec,
    repr: Repr,
}

impl PartialEq for BoundaryGraph {
    fn eq(&self, other: &Self) -> bool {
        self.to_spec() == other.to_spec()
    }
}

impl Serialize for BoundaryGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_spec().serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundaryGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let spec = BoundaryGraphSpec::deserialize(d)?;
        BoundaryGraph::from_spec(spec).map_err(serde::de::Error::custom)
    }
}

impl BoundaryGraph {
    /// The straight slit `g ≡ 0` in `ℝⁿ`.
    pub fn flat(n: usize) -> Self {
        Self::polynomial(n, Vec::new(), 6, 0.5).expect("flat graph is valid")
    }

    /// `g(x') = c·x₁` for `n = 2`.
    pub fn tilted(c: f64) -> Result<Self, GeomError> {
        Self::polynomial(2, vec![GraphTerm { exp: vec![1], coeff: c }], 6, 0.5)
    }

    /// `g(x') = (ε/2)|x'|²`.
    pub fn paraboloid(n: usize, eps: f64) -> Result<Self, GeomError> {
        let terms = (0..n.saturating_sub(1))
            .map(|i| {
                let mut exp = vec![0; n - 1];
                exp[i] = 2;
                GraphTerm { exp, coeff: eps / 2.0 }
            })
            .collect();
        Self::polynomial(n, terms, 6, 0.5)
    }

    pub fn polynomial(n: usize, terms: Vec<GraphTerm>, k: u32, alpha: f64) -> Result<Self, GeomError> {
        Self::from_spec(BoundaryGraphSpec {
            n,
            g: GraphSpec::Poly { terms },
            k,
            alpha,
            norm_bound: default_norm_bound(),
            extent: default_extent(),
        })
    }

    /// `g(x') = δ|x'|^{1+α}` with declared regularity `C^{1,α}`.
    pub fn abs_power(n: usize, delta: f64, alpha: f64) -> Result<Self, GeomError> {
        Self::from_spec(BoundaryGraphSpec {
            n,
            g: GraphSpec::AbsPower { coeff: delta, exponent: 1.0 + alpha },
            k: 0,
            alpha,
            norm_bound: default_norm_bound(),
            extent: default_extent(),
        })
    }

    pub fn from_json(s: &str) -> Result<Self, GeomError> {
        let spec: BoundaryGraphSpec =
            serde_json::from_str(s).map_err(|e| GeomError::InvalidGraph(e.to_string()))?;
        Self::from_spec(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("graph spec serializes")
    }

    pub fn to_spec(&self) -> BoundaryGraphSpec {
        BoundaryGraphSpec {
            n: self.n,
            g: self.spec.clone(),
            k: self.k,
            alpha: self.alpha,
            norm_bound: self.norm_bound,
            extent: self.extent,
        }
    }

    pub fn from_spec(spec: BoundaryGraphSpec) -> Result<Self, GeomError> {
        let invalid = |m: String| Err(GeomError::InvalidGraph(m));
        if spec.n == 0 {
            return invalid("n must be at least 1".into());
        }
        if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
            return invalid(format!("alpha = {} outside (0, 1)", spec.alpha));
        }
        if !(spec.norm_bound > 0.0) || !(spec.extent >= 1.0) {
            return invalid("norm_bound must be positive and extent at least 1".into());
        }
        let m = spec.n - 1;
        let mut extent = spec.extent;
        let repr = match &spec.g {
            GraphSpec::Poly { terms } => {
                for t in terms {
                    if t.exp.len() != m {
                        return invalid(format!("term exponent {:?} does not have length n-1 = {m}", t.exp));
                    }
                    if !t.coeff.is_finite() {
                        return invalid("non-finite coefficient".into());
                    }
                }
                let p = MultiPoly::from_terms(m, terms.iter().map(|t| (t.exp.clone(), t.coeff)));
                if m == 0 || p.is_zero() {
                    if !p.is_zero() {
                        return invalid("for n = 1 the graph constant must be 0".into());
                    }
                    Repr::Zero
                } else {
                    let grad: Vec<MultiPoly> = (0..m).map(|i| p.derivative(i)).collect();
                    let hess = grad.iter().map(|gi| (0..m).map(|j| gi.derivative(j)).collect()).collect();
                    let affine = if p.degree() == Some(1) {
                        Some((0..m).map(|i| p.coeff(&unit(m, i))).collect())
                    } else {
                        None
                    };
                    Repr::Poly { p, grad, hess, affine }
                }
            }
            GraphSpec::Samples { lo, hi, shape, values, order } => {
                if m == 0 {
                    return invalid("sampled graphs need n >= 2".into());
                }
                if shape.len() != m || shape.iter().product::<usize>() != values.len() {
                    return invalid("sample table shape does not match values".into());
                }
                if *order < 1 || shape.iter().any(|&s| s < order + 1) || !(hi > lo) {
                    return invalid("sample table too small for the interpolation order".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return invalid("non-finite sample".into());
                }
                let step = (hi - lo) / (shape[0] - 1) as f64;
                if shape.iter().any(|&s| s != shape[0]) {
                    return invalid("sample tables must be square".into());
                }
                extent = extent.min(-lo).min(*hi);
                if extent < 1.0 {
                    return invalid("sample table must cover the unit ball".into());
                }
                Repr::Samples { lo: *lo, step, shape: shape.clone(), values: values.clone(), order: *order }
            }
            GraphSpec::AbsPower { coeff, exponent } => {
                if m == 0 {
                    return invalid("abs_power graphs need n >= 2".into());
                }
                if !(*exponent > 1.0) || !coeff.is_finite() {
                    return invalid("abs_power needs exponent > 1".into());
                }
                Repr::AbsPower { coeff: *coeff, exponent: *exponent }
            }
        };
        let graph = BoundaryGraph {
            n: spec.n,
            k: spec.k,
            alpha: spec.alpha,
            norm_bound: spec.norm_bound,
            extent,
            spec: spec.g,
            repr,
        };
        graph.check_normalization()?;
        Ok(graph)
    }

    fn check_normalization(&self) -> Result<(), GeomError> {
        let m = self.n - 1;
        if m == 0 {
            return Ok(());
        }
        let e0 = self.eval(&vec![0.0; m]);
        if e0.g.abs() > 1e-12 {
            return Err(GeomError::InvalidGraph(format!("graph does not pass through the origin: g(0) = {}", e0.g)));
        }
        for p in unit_ball_samples(m) {
            let e = self.eval(&p);
            let gn = e.grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            if e.g.abs() > self.norm_bound || gn > self.norm_bound {
                return Err(GeomError::InvalidGraph(format!(
                    "|g| or |grad g| exceeds norm_bound {} at {:?}",
                    self.norm_bound, p
                )));
            }
        }
        Ok(())
    }

    /// Dimension of the boundary hyperplane (`Γ ⊂ ℝⁿ`, ambient `ℝ^{n+1}`).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Schauder index: `Γ ∈ C^{k+1,α}`.
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// Radius of the region of `ℝ^{n-1}` on which `g` is defined.
    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// Whether `∇g(0) = 0`.
    pub fn is_normalized(&self) -> bool {
        let m = self.n - 1;
        m == 0 || self.eval(&vec![0.0; m]).grad.iter().all(|v| v.abs() <= 1e-12)
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    /// Coefficients `a` when `g(x') = a·x'`, including the flat case.
    pub fn affine_coefficients(&self) -> Option<Vec<f64>> {
        match &self.repr {
            Repr::Zero => Some(vec![0.0; self.n - 1]),
            Repr::Poly { affine, .. } => affine.clone(),
            _ => None,
        }
    }

    /// The polynomial `g`, if the graph is polynomial.
    pub fn polynomial_g(&self) -> Option<MultiPoly> {
        match &self.repr {
            Repr::Zero => Some(MultiPoly::zero(self.n - 1)),
            Repr::Poly { p, .. } => Some(p.clone()),
            _ => None,
        }
    }

    pub fn spec(&self) -> &GraphSpec {
        &self.spec
    }

    /// `g(x')` only.
    pub fn value(&self, s: &[f64]) -> f64 {
        match &self.repr {
            Repr::Zero => 0.0,
            Repr::Poly { p, .. } => p.eval(s),
            Repr::AbsPower { coeff, exponent } => coeff * norm(s).powf(*exponent),
            Repr::Samples { .. } => self.eval(s).g,
        }
    }

    /// Value, gradient and Hessian of `g` at `s ∈ ℝ^{n-1}`.
    pub fn eval(&self, s: &[f64]) -> GraphEval {
        let m = self.n - 1;
        debug_assert_eq!(s.len(), m);
        match &self.repr {
            Repr::Zero => GraphEval { g: 0.0, grad: vec![0.0; m], hess: vec![vec![0.0; m]; m] },
            Repr::Poly { p, grad, hess, .. } => GraphEval {
                g: p.eval(s),
                grad: grad.iter().map(|q| q.eval(s)).collect(),
                hess: hess.iter().map(|row| row.iter().map(|q| q.eval(s)).collect()).collect(),
            },
            Repr::AbsPower { coeff, exponent } => {
                let rho = norm(s);
                if rho == 0.0 {
                    return GraphEval { g: 0.0, grad: vec![0.0; m], hess: vec![vec![0.0; m]; m] };
                }
                let p = *exponent;
                let g = coeff * rho.powf(p);
                let a = coeff * p * rho.powf(p - 2.0);
                let grad = s.iter().map(|v| a * v).collect();
                let hess = (0..m)
                    .map(|i| {
                        (0..m)
                            .map(|j| {
                                let delta = if i == j { 1.0 } else { 0.0 };
                                a * (delta + (p - 2.0) * s[i] * s[j] / (rho * rho))
                            })
                            .collect()
                    })
                    .collect();
                GraphEval { g, grad, hess }
            }
            Repr::Samples { lo, step, shape, values, order } => {
                sample_eval(*lo, *step, shape, values, *order, s)
            }
        }
    }
}

fn unit(m: usize, i: usize) -> Vec<u32> {
    let mut e = vec![0; m];
    e[i] = 1;
    e
}

fn norm(s: &[f64]) -> f64 {
    s.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn unit_ball_samples(m: usize) -> Vec<Vec<f64>> {
    let per: usize = if m == 1 { 201 } else if m == 2 { 41 } else { 9 };
    let mut out = Vec::new();
    let total = per.pow(m as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut p = Vec::with_capacity(m);
        for _ in 0..m {
            p.push(-1.0 + 2.0 * (rem % per) as f64 / (per - 1) as f64);
            rem /= per;
        }
        if norm(&p) <= 1.0 {
            out.push(p);
        }
    }
    out
}

/// Lagrange basis values and first two derivatives at `t` for nodes `0..=order`.
fn lagrange_1d(order: usize, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let nodes: Vec<f64> = (0..=order).map(|i| i as f64).collect();
    let np = nodes.len();
    let mut v = vec![0.0; np];
    let mut d1 = vec![0.0; np];
    let mut d2 = vec![0.0; np];
    for j in 0..np {
        let denom: f64 = (0..np).filter(|&i| i != j).map(|i| nodes[j] - nodes[i]).product();
        let others: Vec<f64> = (0..np).filter(|&i| i != j).map(|i| t - nodes[i]).collect();
        let k = others.len();
        v[j] = others.iter().product::<f64>() / denom;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for a in 0..k {
            let mut pa = 1.0;
            for (c, o) in others.iter().enumerate() {
                if c != a {
                    pa *= o;
                }
            }
            s1 += pa;
            for b in 0..k {
                if b == a {
                    continue;
                }
                let mut pab = 1.0;
                for (c, o) in others.iter().enumerate() {
                    if c != a && c != b {
                        pab *= o;
                    }
                }
                s2 += pab;
            }
        }
        d1[j] = s1 / denom;
        d2[j] = s2 / denom;
    }
    (v, d1, d2)
}

fn sample_eval(lo: f64, step: f64, shape: &[usize], values: &[f64], order: usize, s: &[f64]) -> GraphEval {
    let m = s.len();
    let mut starts = Vec::with_capacity(m);
    let mut bases = Vec::with_capacity(m);
    for (a, &sa) in s.iter().enumerate() {
        let u = (sa - lo) / step;
        let max_start = shape[a] - 1 - order;
        let centre = (u - order as f64 / 2.0).round();
        let start = centre.clamp(0.0, max_start as f64) as usize;
        starts.push(start);
        let (v, d1, d2) = lagrange_1d(order, u - start as f64);
        bases.push((v, d1, d2));
    }
    let np = order + 1;
    let total = np.pow(m as u32);
    let mut g = 0.0;
    let mut grad = vec![0.0; m];
    let mut hess = vec![vec![0.0; m]; m];
    let mut strides = vec![1usize; m];
    for a in (0..m.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * shape[a + 1];
    }
    for idx in 0..total {
        let mut rem = idx;
        let mut local = vec![0usize; m];
        for a in (0..m).rev() {
            local[a] = rem % np;
            rem /= np;
        }
        let flat: usize = (0..m).map(|a| (starts[a] + local[a]) * strides[a]).sum();
        let val = values[flat];
        let w: f64 = (0..m).map(|a| bases[a].0[local[a]]).product();
        g += w * val;
        for i in 0..m {
            let wi: f64 = (0..m)
                .map(|a| if a == i { bases[a].1[local[a]] } else { bases[a].0[local[a]] })
                .product();
            grad[i] += wi * val / step;
            for j in 0..m {
                let wij: f64 = (0..m)
                    .map(|a| {
                        if a == i && a == j {
                            bases[a].2[local[a]]
                        } else if a == i || a == j {
                            bases[a].1[local[a]]
                        } else {
                            bases[a].0[local[a]]
                        }
                    })
                    .product();
                hess[i][j] += wij * val / (step * step);
            }
        }
    }
    GraphEval { g, grad, hess }
}
