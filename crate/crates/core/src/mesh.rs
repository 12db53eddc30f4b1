//! Uniform triangulations of square domains and the overlapping two-level
//! decomposition built on top of them.
//!
//! Every square cell is split along its `/` diagonal, so interior hat
//! functions are exact lattice translates of each other. Interior nodes are
//! numbered row-major: node `(i, j)` (x index `i`, y index `j`, both in
//! `1..n`) has DOF index `(j - 1) * (n - 1) + (i - 1)`.

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[ax, bx] x [ay, by]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub ax: f64,
    pub bx: f64,
    pub ay: f64,
    pub by: f64,
}

impl Rect {
    pub fn new(ax: f64, bx: f64, ay: f64, by: f64) -> Self {
        Self { ax, bx, ay, by }
    }

    /// The `[0, 2] x [0, 2]` domain used by the reference experiments.
    pub fn reference() -> Self {
        Self::new(0.0, 2.0, 0.0, 2.0)
    }

    pub fn width(&self) -> f64 {
        self.bx - self.ax
    }

    pub fn height(&self) -> f64 {
        self.by - self.ay
    }
}

/// Offsets of the six neighbours of a node in the `/`-diagonal triangulation,
/// in counter-clockwise order starting from `(1, 0)`.
pub const NEIGHBOURS: [(i32, i32); 6] = [(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)];

/// Value at lattice coordinates `(u, v)` (relative to the node, in cell
/// units) of the hat function attached to that node.
pub fn hat_value(u: f64, v: f64) -> f64 {
    (1.0 - u.abs().max(v.abs()).max((u - v).abs())).max(0.0)
}

#[derive(Clone, Debug)]
pub struct UniformMesh {
    bounds: Rect,
    n: usize,
    h: f64,
}

impl UniformMesh {
    pub fn new(bounds: Rect, n: usize) -> Result<Self> {
        build_mesh(bounds, n)
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    /// Cells per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Interior nodes per axis, `n - 1`.
    pub fn side(&self) -> usize {
        self.n - 1
    }

    pub fn num_dofs(&self) -> usize {
        self.side() * self.side()
    }

    pub fn node_coords(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.bounds.ax + i as f64 * self.h,
            self.bounds.ay + j as f64 * self.h,
        )
    }

    /// DOF index of lattice node `(i, j)`, or `None` for boundary and
    /// out-of-range nodes.
    pub fn dof_index(&self, i: usize, j: usize) -> Option<usize> {
        if i == 0 || j == 0 || i >= self.n || j >= self.n {
            return None;
        }
        Some((j - 1) * self.side() + (i - 1))
    }

    /// Inverse of [`dof_index`](Self::dof_index).
    pub fn dof_node(&self, dof: usize) -> (usize, usize) {
        let side = self.side();
        (dof % side + 1, dof / side + 1)
    }

    /// All triangles as triples of lattice nodes, two per cell: lower-right
    /// `(i,j),(i+1,j),(i+1,j+1)` then upper-left `(i,j),(i+1,j+1),(i,j+1)`.
    pub fn triangles(&self) -> Vec<[(usize, usize); 3]> {
        let mut out = Vec::with_capacity(2 * self.n * self.n);
        for j in 0..self.n {
            for i in 0..self.n {
                out.push([(i, j), (i + 1, j), (i + 1, j + 1)]);
                out.push([(i, j), (i + 1, j + 1), (i, j + 1)]);
            }
        }
        out
    }
}

/// Builds the uniform triangulation of a square with `n` cells per axis.
pub fn build_mesh(bounds: Rect, n: usize) -> Result<UniformMesh> {
    let (w, hgt) = (bounds.width(), bounds.height());
    if !(w > 0.0) || (w - hgt).abs() > 1e-12 * w.max(hgt) {
        return Err(Error::NonSquareDomain {
            ax: bounds.ax,
            bx: bounds.bx,
            ay: bounds.ay,
            by: bounds.by,
        });
    }
    if n < 2 {
        return Err(Error::MeshTooCoarse(n));
    }
    Ok(UniformMesh {
        bounds,
        n,
        h: w / n as f64,
    })
}

/// Closed lattice index box `[i0, i1] x [j0, j1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl LatticeBox {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i <= self.i1 && j >= self.j0 && j <= self.j1
    }
}

#[derive(Clone, Debug)]
pub struct Subdomain {
    /// Coarse cell `(cx, cy)` this subdomain grows from.
    pub coarse_cell: (usize, usize),
    /// Closed core cell in lattice coordinates.
    pub core: LatticeBox,
    /// Closed extended subdomain, clipped to the domain.
    pub extended: LatticeBox,
    /// Interior fine DOFs strictly inside the extended subdomain, ascending.
    pub dofs: Vec<usize>,
}

impl Subdomain {
    /// Number of DOFs along x and y; congruent subdomains share this shape.
    pub fn shape(&self) -> (usize, usize) {
        (
            self.extended.i1 - self.extended.i0 - 1,
            self.extended.j1 - self.extended.j0 - 1,
        )
    }
}

#[derive(Clone, Debug)]
pub struct TwoLevelDecomposition {
    n: usize,
    m: usize,
    overlap: usize,
    h: f64,
    subdomains: Vec<Subdomain>,
    colors: Vec<Vec<usize>>,
}

impl TwoLevelDecomposition {
    /// Coarse cells per axis.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Fine cells per coarse cell along an axis.
    pub fn cells_per_coarse(&self) -> usize {
        self.n / self.m
    }

    pub fn overlap_cells(&self) -> usize {
        self.overlap
    }

    pub fn coarse_h(&self) -> f64 {
        self.h * self.cells_per_coarse() as f64
    }

    pub fn delta(&self) -> f64 {
        self.h * self.overlap as f64
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    /// Color classes; subdomains in the same class have disjoint DOF sets.
    pub fn colors(&self) -> &[Vec<usize>] {
        &self.colors
    }
}

/// Splits the mesh into `m x m` coarse cells and extends each by
/// `overlap_cells` fine layers (clipped to the domain).
///
/// Colors come from a periodic `p x p` tiling of coarse indices: `p = 2`
/// (at most four colors) whenever `2 * overlap_cells <= n / m`, and `p = 3`
/// otherwise.
pub fn build_decomposition(
    mesh: &UniformMesh,
    m: usize,
    overlap_cells: usize,
) -> Result<TwoLevelDecomposition> {
    let n = mesh.n();
    if m == 0 || !n.is_multiple_of(m) {
        return Err(Error::CoarseMismatch { n, m });
    }
    let s = n / m;
    if overlap_cells == 0 || overlap_cells >= s {
        return Err(Error::InvalidOverlap {
            overlap: overlap_cells,
            limit: s,
        });
    }
    let k = overlap_cells;
    let mut subdomains = Vec::with_capacity(m * m);
    for cy in 0..m {
        for cx in 0..m {
            let core = LatticeBox {
                i0: cx * s,
                i1: (cx + 1) * s,
                j0: cy * s,
                j1: (cy + 1) * s,
            };
            let extended = LatticeBox {
                i0: core.i0.saturating_sub(k),
                i1: (core.i1 + k).min(n),
                j0: core.j0.saturating_sub(k),
                j1: (core.j1 + k).min(n),
            };
            let mut dofs = Vec::new();
            for j in extended.j0 + 1..extended.j1 {
                for i in extended.i0 + 1..extended.i1 {
                    if let Some(d) = mesh.dof_index(i, j) {
                        dofs.push(d);
                    }
                }
            }
            subdomains.push(Subdomain {
                coarse_cell: (cx, cy),
                core,
                extended,
                dofs,
            });
        }
    }

    let p = if 2 * k <= s { 2 } else { 3 };
    let mut colors = vec![Vec::new(); p * p];
    for (idx, sd) in subdomains.iter().enumerate() {
        let (cx, cy) = sd.coarse_cell;
        colors[(cx % p) + p * (cy % p)].push(idx);
    }
    colors.retain(|c| !c.is_empty());

    Ok(TwoLevelDecomposition {
        n,
        m,
        overlap: k,
        h: mesh.h(),
        subdomains,
        colors,
    })
}

/// Sparse nodal interpolation of coarse hats onto the fine mesh.
///
/// Column `c` (coarse node in row-major order over the `(m-1)^2` interior
/// coarse nodes) stores the fine DOFs in the coarse hat's support with their
/// weights.
#[derive(Clone, Debug)]
pub struct Prolongation {
    fine_dim: usize,
    coarse_side: usize,
    stride: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl Prolongation {
    pub fn fine_dim(&self) -> usize {
        self.fine_dim
    }

    pub fn coarse_dim(&self) -> usize {
        self.columns.len()
    }

    /// Interior coarse nodes per axis.
    pub fn coarse_side(&self) -> usize {
        self.coarse_side
    }

    /// Fine cells per coarse cell.
    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn column(&self, c: usize) -> &[(usize, f64)] {
        &self.columns[c]
    }

    /// `fine += P * coarse`.
    pub fn add_prolongated(&self, coarse: &[f64], fine: &mut [f64]) {
        for (col, &w) in self.columns.iter().zip(coarse) {
            if w == 0.0 {
                continue;
            }
            for &(i, p) in col {
                fine[i] += p * w;
            }
        }
    }

    pub fn prolongate(&self, coarse: &[f64]) -> Vec<f64> {
        let mut fine = vec![0.0; self.fine_dim];
        self.add_prolongated(coarse, &mut fine);
        fine
    }

    /// `P^T * fine`.
    pub fn restrict(&self, fine: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|col| col.iter().map(|&(i, p)| p * fine[i]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.fine_dim, self.coarse_dim());
        for (c, col) in self.columns.iter().enumerate() {
            for &(i, p) in col {
                d[(i, c)] = p;
            }
        }
        d
    }
}

/// Interpolates every interior coarse hat of the `m x m` coarse mesh onto
/// the fine interior DOFs. Exact because the coarse triangles are unions of
/// fine triangles with the same diagonal orientation.
pub fn coarse_prolongation(mesh: &UniformMesh, m: usize) -> Result<Prolongation> {
    let n = mesh.n();
    if m == 0 || !n.is_multiple_of(m) {
        return Err(Error::CoarseMismatch { n, m });
    }
    let s = n / m;
    let coarse_side = m.saturating_sub(1);
    let mut columns = Vec::with_capacity(coarse_side * coarse_side);
    for cj in 1..m {
        for ci in 1..m {
            let (ni, nj) = (ci * s, cj * s);
            let mut col = Vec::new();
            for j in nj + 1 - s..nj + s {
                for i in ni + 1 - s..ni + s {
                    let u = (i as f64 - ni as f64) / s as f64;
                    let v = (j as f64 - nj as f64) / s as f64;
                    let w = hat_value(u, v);
                    if w > 0.0 {
                        if let Some(d) = mesh.dof_index(i, j) {
                            col.push((d, w));
                        }
                    }
                }
            }
            columns.push(col);
        }
    }
    Ok(Prolongation {
        fine_dim: mesh.num_dofs(),
        coarse_side,
        stride: s,
        columns,
    })
}
