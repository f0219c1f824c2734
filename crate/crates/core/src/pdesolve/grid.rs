use serde::{Deserialize, Serialize};

use super::SolveError;
use crate::slitgeom::BoundaryGraph;

/// Role of a grid node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum NodeClass {
    Interior = 0,
    /// On `x_{n+1} = 0` with `x_n ≤ g(x')`: Dirichlet zero.
    Slit = 1,
    /// On `x_{n+1} = 0` off the slit: even reflection.
    Symmetry = 2,
    /// Faces of the half-cube other than the plane: Dirichlet data.
    Outer = 3,
    /// Every plane node in Signorini mode.
    ContactCandidate = 4,
}

impl NodeClass {
    pub fn from_u8(v: u8) -> Option<Self> {
        Some(match v {
            0 => NodeClass::Interior,
            1 => NodeClass::Slit,
            2 => NodeClass::Symmetry,
            3 => NodeClass::Outer,
            4 => NodeClass::ContactCandidate,
            _ => return None,
        })
    }

    /// Whether the node carries an unknown.
    pub fn is_free(self) -> bool {
        matches!(self, NodeClass::Interior | NodeClass::Symmetry | NodeClass::ContactCandidate)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    Laplace,
    Signorini,
}

/// Node layout of a half-cube lattice, shared by the fine grid and the
/// multigrid hierarchy. Index `((kt·nj) + j)·nx + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub nx: usize,
    pub nj: usize,
    pub nt: usize,
    pub free: Vec<bool>,
    pub weights: Option<NodeWeights>,
}

/// Unknowns `x = u/s` for a positive node weight `s`. Row `i` becomes
/// `sᵢ Σ wᵢⱼ sⱼ (xᵢ − xⱼ) + qᵢ xᵢ`, which is symmetric, and exact on `u = s`
/// when `qᵢ = −h² mᵢ sᵢ Δs(Xᵢ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeWeights {
    pub s: Vec<f64>,
    pub q: Vec<f64>,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.nx * self.nj * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> usize {
        if self.nj > 1 {
            3
        } else {
            2
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, kt: usize) -> usize {
        (kt * self.nj + j) * self.nx + i
    }
}

/// The half-cube `[−1,1]ⁿ × [0,1]` with `N` nodes per unit-2 axis and
/// spacing `h = 2/(N−1)`; `x_n = 0` and `x_{n+1} = 0` are grid planes.
#[derive(Clone, Debug)]
pub struct Grid {
    n: usize,
    npts: usize,
    h: f64,
    mode: GridMode,
    graph: BoundaryGraph,
    classes: Vec<NodeClass>,
    lattice: Lattice,
}

impl Grid {
    pub fn new(graph: &BoundaryGraph, npts: usize, mode: GridMode) -> Result<Self, SolveError> {
        let n = graph.n();
        if !(1..=2).contains(&n) {
            return Err(SolveError::UnsupportedDimension(n));
        }
        if npts < 5 || npts.is_multiple_of(2) {
            return Err(SolveError::InvalidGrid(format!("node count {npts} must be odd and at least 5")));
        }
        let h = 2.0 / (npts - 1) as f64;
        let nx = npts;
        let nj = if n == 2 { npts } else { 1 };
        let nt = npts.div_ceil(2);
        let total = nx * nj * nt;
        let mut classes = vec![NodeClass::Interior; total];
        let (mut slit, mut sym) = (0usize, 0usize);
        for kt in 0..nt {
            for j in 0..nj {
                for i in 0..nx {
                    let idx = (kt * nj + j) * nx + i;
                    let face = i == 0 || i == nx - 1 || kt == nt - 1 || (n == 2 && (j == 0 || j == nj - 1));
                    classes[idx] = if face {
                        NodeClass::Outer
                    } else if kt > 0 {
                        NodeClass::Interior
                    } else if mode == GridMode::Signorini {
                        NodeClass::ContactCandidate
                    } else {
                        let x1 = -1.0 + i as f64 * h;
                        let on_slit = if n == 1 { x1 <= 0.0 } else { -1.0 + j as f64 * h <= graph.value(&[x1]) };
                        if on_slit {
                            slit += 1;
                            NodeClass::Slit
                        } else {
                            sym += 1;
                            NodeClass::Symmetry
                        }
                    };
                }
            }
        }
        if mode == GridMode::Laplace && (slit == 0 || sym == 0) {
            return Err(SolveError::InvalidClassification(format!(
                "{slit} slit and {sym} symmetry nodes: the edge misses the grid window"
            )));
        }
        let free = classes.iter().map(|c| c.is_free()).collect();
        Ok(Self { n, npts, h, mode, graph: graph.clone(), classes, lattice: Lattice { nx, nj, nt, free, weights: None } })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nodes per `[−1, 1]` axis.
    pub fn npts(&self) -> usize {
        self.npts
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn graph(&self) -> &BoundaryGraph {
        &self.graph
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[NodeClass] {
        &self.classes
    }

    pub fn class(&self, idx: usize) -> NodeClass {
        self.classes[idx]
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// `(i, j, kt)` of a node; `j = 0` for `n = 1`.
    pub fn ijk(&self, idx: usize) -> (usize, usize, usize) {
        let l = &self.lattice;
        (idx % l.nx, (idx / l.nx) % l.nj, idx / (l.nx * l.nj))
    }

    pub fn index(&self, i: usize, j: usize, kt: usize) -> usize {
        self.lattice.index(i, j, kt)
    }

    /// Coordinates `X = (x, x_{n+1})` of a node.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let (i, j, kt) = self.ijk(idx);
        let mut x = vec![-1.0 + i as f64 * self.h];
        if self.n == 2 {
            x.push(-1.0 + j as f64 * self.h);
        }
        x.push(kt as f64 * self.h);
        x
    }

    /// Lumped mass: `½` on the plane (half cell), `1` elsewhere.
    pub fn mass(&self, idx: usize) -> f64 {
        if idx < self.lattice.nx * self.lattice.nj {
            0.5
        } else {
            1.0
        }
    }

    /// Nodes and weights of multilinear interpolation at `X`, with
    /// `x_{n+1}` reflected to `|x_{n+1}|` and coordinates clamped to the grid.
    pub fn interpolation_stencil(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let l = &self.lattice;
        let maxes = [l.nx - 1, l.nj - 1, l.nt - 1];
        let fracs = if self.n == 1 {
            [(x[0] + 1.0) / self.h, 0.0, x[1].abs() / self.h]
        } else {
            [(x[0] + 1.0) / self.h, (x[1] + 1.0) / self.h, x[2].abs() / self.h]
        };
        let mut lo = [0usize; 3];
        let mut fr = [0.0f64; 3];
        for a in 0..3 {
            let m = maxes[a];
            if m == 0 {
                continue;
            }
            let f = fracs[a].clamp(0.0, m as f64);
            lo[a] = (f.floor() as usize).min(m - 1);
            fr[a] = f - lo[a] as f64;
        }
        let mut out = Vec::with_capacity(8);
        'corners: for c in 0..8usize {
            let mut w = 1.0;
            let mut ids = [0usize; 3];
            for a in 0..3 {
                let bit = (c >> a) & 1;
                if maxes[a] == 0 {
                    if bit == 1 {
                        continue 'corners;
                    }
                    continue;
                }
                ids[a] = lo[a] + bit;
                w *= if bit == 1 { fr[a] } else { 1.0 - fr[a] };
            }
            if w != 0.0 {
                out.push((l.index(ids[0], ids[1], ids[2]), w));
            }
        }
        out
    }

    pub fn count(&self, class: NodeClass) -> usize {
        self.classes.iter().filter(|c| **c == class).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_is_a_partition() {
        let g = BoundaryGraph::flat(2);
        let grid = Grid::new(&g, 9, GridMode::Laplace).unwrap();
        assert_eq!(grid.len(), 9 * 9 * 5);
        let plane = 9 * 9;
        let outer_plane = 4 * 8;
        assert_eq!(grid.count(NodeClass::Slit) + grid.count(NodeClass::Symmetry), plane - outer_plane);
        // x₂ ≤ 0 on the slit: j ∈ 1..=4 for i ∈ 1..=7
        assert_eq!(grid.count(NodeClass::Slit), 7 * 4);
        let sig = Grid::new(&g, 9, GridMode::Signorini).unwrap();
        assert_eq!(sig.count(NodeClass::ContactCandidate), plane - outer_plane);
        assert_eq!(sig.count(NodeClass::Slit), 0);
    }

    #[test]
    fn even_counts_rejected() {
        assert!(Grid::new(&BoundaryGraph::flat(1), 10, GridMode::Laplace).is_err());
    }

    #[test]
    fn coordinates() {
        let grid = Grid::new(&BoundaryGraph::flat(1), 5, GridMode::Laplace).unwrap();
        assert_eq!(grid.h(), 0.5);
        let idx = grid.index(2, 0, 1);
        assert_eq!(grid.coords(idx), vec![0.0, 0.5]);
        assert_eq!(grid.class(grid.index(2, 0, 0)), NodeClass::Slit);
        assert_eq!(grid.class(grid.index(3, 0, 0)), NodeClass::Symmetry);
    }
}
