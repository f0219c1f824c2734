use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{Grid, NodeClass};
use super::SolveError;

const MAGIC: &[u8; 8] = b"SLITFLD1";

/// What a field solves and how well.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub equation: String,
    pub residual: f64,
}

/// Grid function on the half-cube, extended evenly across `x_{n+1} = 0`.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    meta: FieldMeta,
}

/// Header and payload of a field file, before it is matched to a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredField {
    pub n: usize,
    pub npts: usize,
    pub h: f64,
    pub classes: Vec<NodeClass>,
    pub values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    format: String,
    n: usize,
    npts: usize,
    h: f64,
    nodes: usize,
    layout: String,
    class_codes: Vec<(u8, NodeClass)>,
    meta: FieldMeta,
}

impl DiscreteField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, meta: FieldMeta) -> Result<Self, SolveError> {
        if values.len() != grid.len() {
            return Err(SolveError::InvalidGrid(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SolveError::NonFinite(i));
        }
        Ok(Self { grid, values, meta })
    }

    /// Samples a function at every node.
    pub fn from_fn(grid: Arc<Grid>, equation: &str, f: impl Fn(&[f64]) -> f64) -> Result<Self, SolveError> {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i))).collect();
        Self::new(grid, values, FieldMeta { equation: equation.into(), residual: 0.0 })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn meta(&self) -> &FieldMeta {
        &self.meta
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|v| c * v).collect(), meta: self.meta.clone() }
    }

    /// Multilinear interpolation at `X`; `x_{n+1}` is reflected to `|x_{n+1}|`
    /// and coordinates are clamped to the grid.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        self.grid.interpolation_stencil(x).iter().map(|&(i, w)| w * self.values[i]).sum()
    }

    /// Central-difference gradient in `ℝ^{n+1}` at a node not on an outer face.
    /// On the plane the reflected neighbour gives `∂_{n+1}u = 0`.
    pub fn node_gradient(&self, idx: usize) -> Option<Vec<f64>> {
        let g = &self.grid;
        if g.class(idx) == NodeClass::Outer {
            return None;
        }
        let l = g.lattice();
        let h = g.h();
        let (_, _, kt) = g.ijk(idx);
        let u = &self.values;
        let st = l.nx * l.nj;
        let mut grad = vec![(u[idx + 1] - u[idx - 1]) / (2.0 * h)];
        if g.n() == 2 {
            grad.push((u[idx + l.nx] - u[idx - l.nx]) / (2.0 * h));
        }
        grad.push(if kt == 0 { 0.0 } else { (u[idx + st] - u[idx - st]) / (2.0 * h) });
        Some(grad)
    }

    /// Writes `<path>` (binary) and `<path>.json` (sidecar). Layout: magic,
    /// `n`, `N` as little-endian `u32`, `h` as `f64`, one class byte per node,
    /// then one little-endian `f64` per node in node-major order.
    pub fn write_binary(&self, path: &Path) -> Result<(), SolveError> {
        let g = &self.grid;
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&(g.n() as u32).to_le_bytes())?;
        w.write_all(&(g.npts() as u32).to_le_bytes())?;
        w.write_all(&g.h().to_le_bytes())?;
        let classes: Vec<u8> = g.classes().iter().map(|c| *c as u8).collect();
        w.write_all(&classes)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        let sidecar = Sidecar {
            format: "slitlab-field-v1".into(),
            n: g.n(),
            npts: g.npts(),
            h: g.h(),
            nodes: g.len(),
            layout: "index = ((kt * nj) + j) * N + i; nj = N for n = 2 and 1 for n = 1".into(),
            class_codes: [
                NodeClass::Interior,
                NodeClass::Slit,
                NodeClass::Symmetry,
                NodeClass::Outer,
                NodeClass::ContactCandidate,
            ]
            .iter()
            .map(|c| (*c as u8, *c))
            .collect(),
            meta: self.meta.clone(),
        };
        let mut side = path.as_os_str().to_owned();
        side.push(".json");
        std::fs::write(side, serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    /// Attaches stored values to a grid with the same layout and classes.
    pub fn from_stored(grid: Arc<Grid>, stored: StoredField, meta: FieldMeta) -> Result<Self, SolveError> {
        if stored.n != grid.n() || stored.npts != grid.npts() || stored.classes != grid.classes() {
            return Err(SolveError::InvalidGrid("stored field does not match the grid".into()));
        }
        Self::new(grid, stored.values, meta)
    }
}

/// Reads a field file written by [`DiscreteField::write_binary`].
pub fn read_binary(path: &Path) -> Result<StoredField, SolveError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SolveError::InvalidGrid("bad field file magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let npts = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let h = f64::from_le_bytes(b8);
    if !(1..=2).contains(&n) || npts < 2 {
        return Err(SolveError::InvalidGrid("bad field header".into()));
    }
    let len = npts * if n == 2 { npts } else { 1 } * npts.div_ceil(2);
    let mut cls = vec![0u8; len];
    r.read_exact(&mut cls)?;
    let classes = cls
        .into_iter()
        .map(|c| NodeClass::from_u8(c).ok_or_else(|| SolveError::InvalidGrid(format!("bad class byte {c}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut values = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut b8)?;
        values.push(f64::from_le_bytes(b8));
    }
    Ok(StoredField { n, npts, h, classes, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdesolve::GridMode;
    use crate::slitgeom::BoundaryGraph;

    #[test]
    fn interpolation_reproduces_multilinear_functions() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(2), 9, GridMode::Laplace).unwrap());
        let f = DiscreteField::from_fn(grid, "test", |x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1] + 3.0 * x[2]).unwrap();
        let v = f.interpolate(&[0.13, -0.41, 0.27]);
        assert!((v - (1.0 + 0.26 + 0.41 - 0.5 * 0.13 * 0.41 + 0.81)).abs() < 1e-12);
        assert_eq!(f.interpolate(&[0.13, -0.41, -0.27]), v);
    }

    #[test]
    fn binary_round_trip() {
        let grid = Arc::new(Grid::new(&BoundaryGraph::flat(1), 9, GridMode::Laplace).unwrap());
        let f = DiscreteField::from_fn(grid.clone(), "test", |x| x[0] * x[1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.bin");
        f.write_binary(&p).unwrap();
        let stored = read_binary(&p).unwrap();
        assert_eq!(stored.values, f.values());
        let back = DiscreteField::from_stored(grid, stored, f.meta().clone()).unwrap();
        assert_eq!(back.values(), f.values());
        assert!(p.with_extension("bin.json").exists());
    }
}
