use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::slitgeom::{BoundaryGraph, BoundaryGraphSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    GeometryCheck,
    HarmonicBasis,
    Regularize,
    Barrier,
    LaplaceConvergence,
    HarnackGain,
    Signorini,
    Bootstrap,
    Flatness,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 9] = [
        ExperimentId::GeometryCheck,
        ExperimentId::HarmonicBasis,
        ExperimentId::Regularize,
        ExperimentId::Barrier,
        ExperimentId::LaplaceConvergence,
        ExperimentId::HarnackGain,
        ExperimentId::Signorini,
        ExperimentId::Bootstrap,
        ExperimentId::Flatness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::GeometryCheck => "geometry-check",
            ExperimentId::HarmonicBasis => "harmonic-basis",
            ExperimentId::Regularize => "regularize",
            ExperimentId::Barrier => "barrier",
            ExperimentId::LaplaceConvergence => "laplace-convergence",
            ExperimentId::HarnackGain => "harnack-gain",
            ExperimentId::Signorini => "signorini",
            ExperimentId::Bootstrap => "bootstrap",
            ExperimentId::Flatness => "flatness",
        }
    }

    fn default_graph(self, tilt: f64, delta: f64, alpha: f64) -> Result<BoundaryGraph, ExperimentError> {
        let g = match self {
            ExperimentId::GeometryCheck => BoundaryGraph::paraboloid(2, 0.2),
            ExperimentId::Regularize | ExperimentId::Barrier => BoundaryGraph::abs_power(2, delta, alpha),
            ExperimentId::HarnackGain => BoundaryGraph::tilted(tilt),
            ExperimentId::Bootstrap => Ok(BoundaryGraph::flat(2)),
            _ => Ok(BoundaryGraph::flat(1)),
        };
        g.map_err(|e| ExperimentError::ConfigInvalid(e.to_string()))
    }

    fn default_npts(self, n: usize) -> usize {
        match (self, n) {
            (ExperimentId::LaplaceConvergence, _) => 129,
            (ExperimentId::HarnackGain, _) => 161,
            (ExperimentId::Signorini, 1) => 513,
            (ExperimentId::Signorini, _) => 129,
            (ExperimentId::Bootstrap, _) => 65,
            (ExperimentId::Flatness, _) => 1025,
            _ => 65,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentId {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| ExperimentError::ConfigInvalid(format!("unknown experiment '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Points per axis; odd. `None` selects the experiment default.
    #[serde(default)]
    pub n: Option<usize>,
    /// Relaxation factor for SOR-type sweeps; `None` selects the automatic value.
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n: None, omega: None, tol: default_tol() }
    }
}

/// Dyadic windows: fits use `λ = λ₀ρᵐ` for `m < count`; mollification
/// reports use the levels `λ_k = 4^{−k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleWindows {
    #[serde(default)]
    pub lambda0: Option<f64>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default = "default_levels")]
    pub levels: Vec<u32>,
}

impl Default for ScaleWindows {
    fn default() -> Self {
        Self { lambda0: None, rho: default_rho(), count: None, levels: default_levels() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    /// Boundary graph; `None` selects the experiment default.
    #[serde(default)]
    pub geometry: Option<BoundaryGraphSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub scales: ScaleWindows,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_k")]
    pub k: u32,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Polynomial degree for the harmonic basis.
    #[serde(default = "default_degree")]
    pub degree: u32,
    /// Slope `c` of tilted planes and rotated model data.
    #[serde(default = "default_tilt")]
    pub tilt: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Repeat grid-based runs at `h/2`.
    #[serde(default = "default_true")]
    pub refine: bool,
    /// Store solved fields as flat binary files with JSON sidecars.
    #[serde(default)]
    pub write_fields: bool,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_rho() -> f64 {
    0.5
}
fn default_levels() -> Vec<u32> {
    vec![2, 3, 4, 5]
}
fn default_alpha() -> f64 {
    0.25
}
fn default_k() -> u32 {
    1
}
fn default_delta() -> f64 {
    0.1
}
fn default_degree() -> u32 {
    4
}
fn default_tilt() -> f64 {
    0.3
}
fn default_samples() -> usize {
    200
}
fn default_true() -> bool {
    true
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Default configuration of an experiment.
    pub fn new(experiment: ExperimentId) -> Self {
        Self {
            experiment,
            geometry: None,
            grid: GridSpec::default(),
            scales: ScaleWindows::default(),
            alpha: default_alpha(),
            k: default_k(),
            delta: default_delta(),
            degree: default_degree(),
            tilt: default_tilt(),
            samples: default_samples(),
            refine: true,
            write_fields: false,
            out_dir: default_out(),
            seed: 0,
        }
    }

    pub(crate) fn resolve(&self) -> Result<Resolved, ExperimentError> {
        let bad = |m: String| Err(ExperimentError::ConfigInvalid(m));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} must lie in (0, 1)", self.alpha));
        }
        if self.experiment == ExperimentId::Barrier && self.alpha >= 0.5 {
            return bad(format!("the barrier needs alpha < 1/2, got {}", self.alpha));
        }
        if !(self.scales.rho > 0.0 && self.scales.rho <= 0.5) {
            return bad(format!("rho = {} must lie in (0, 1/2]", self.scales.rho));
        }
        if let Some(l) = self.scales.lambda0 {
            if !(l > 0.0 && l < 1.0) {
                return bad(format!("lambda0 = {l} must lie in (0, 1)"));
            }
        }
        if self.scales.count.is_some_and(|c| c < 4) {
            return bad("at least 4 fit scales are needed".into());
        }
        if self.scales.levels.len() < 3 || self.scales.levels.windows(2).any(|w| w[1] <= w[0]) || self.scales.levels[0] == 0 {
            return bad("levels must be at least 3 increasing positive integers".into());
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return bad(format!("delta = {} must lie in (0, 1/2]", self.delta));
        }
        if self.k > 3 {
            return bad(format!("k = {} exceeds 3", self.k));
        }
        if self.degree > 6 {
            return bad(format!("degree = {} exceeds 6", self.degree));
        }
        if !self.tilt.is_finite() || self.tilt.abs() > 0.5 {
            return bad(format!("tilt = {} must satisfy |c| ≤ 1/2", self.tilt));
        }
        if self.samples < 16 {
            return bad(format!("samples = {} is below 16", self.samples));
        }
        if !(self.grid.tol > 0.0 && self.grid.tol < 1e-2) {
            return bad(format!("tolerance {} must lie in (0, 1e-2)", self.grid.tol));
        }
        if let Some(w) = self.grid.omega {
            if !(w > 0.0 && w < 2.0) {
                return bad(format!("omega = {w} must lie in (0, 2)"));
            }
        }
        let graph = match &self.geometry {
            Some(spec) => BoundaryGraph::from_spec(spec.clone()).map_err(|e| ExperimentError::ConfigInvalid(e.to_string()))?,
            None => self.experiment.default_graph(self.tilt, self.delta, self.alpha)?,
        };
        match self.experiment {
            ExperimentId::LaplaceConvergence if graph.affine_coefficients().is_none() => {
                return bad("laplace-convergence needs an affine graph (exact harmonic data)".into());
            }
            ExperimentId::Signorini | ExperimentId::Bootstrap | ExperimentId::Flatness if !graph.is_flat() => {
                return bad(format!("{} runs on the straight slit", self.experiment));
            }
            ExperimentId::Bootstrap if graph.n() != 2 => {
                return bad("bootstrap needs n = 2".into());
            }
            ExperimentId::Regularize | ExperimentId::Barrier if graph.n() != 2 => {
                return bad(format!("{} needs n = 2", self.experiment));
            }
            _ => {}
        }
        let npts = self.grid.n.unwrap_or_else(|| self.experiment.default_npts(graph.n()));
        if npts.is_multiple_of(2) || npts < 17 {
            return bad(format!("grid N = {npts} must be odd and at least 17"));
        }
        if npts > 4097 {
            return bad(format!("grid N = {npts} exceeds 4097"));
        }
        if graph.n() == 2 && npts > 513 {
            return bad(format!("grid N = {npts} exceeds 513 for n = 2"));
        }
        Ok(Resolved { config: self.clone(), graph, npts })
    }
}

/// A validated configuration with defaults filled in.
pub(crate) struct Resolved {
    pub config: ExperimentConfig,
    pub graph: BoundaryGraph,
    pub npts: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"experiment": "signorini"}"#).unwrap();
        assert_eq!(c, ExperimentConfig::new(ExperimentId::Signorini));
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.resolve().unwrap().npts, 513);
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        let mut c = ExperimentConfig::new(ExperimentId::Bootstrap);
        c.grid.n = Some(64);
        assert!(c.resolve().is_err());
        c.grid.n = Some(65);
        c.scales.rho = 0.6;
        assert!(c.resolve().is_err());
        c.scales.rho = 0.5;
        c.alpha = 1.0;
        assert!(c.resolve().is_err());
        c.alpha = 0.25;
        assert!(c.resolve().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"experiment": "barrier", "alpah": 0.2}"#).is_err());
        assert!("laplace-convergence".parse::<ExperimentId>().is_ok());
        assert!("laplace".parse::<ExperimentId>().is_err());
    }
}
