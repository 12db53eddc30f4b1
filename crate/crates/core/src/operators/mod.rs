//! The assembled operator as a translation-invariant symbol, with FFT
//! products, dense and local extraction, and the Galerkin coarse operator.

mod coarse;
mod fft;
mod symbol_io;

pub use coarse::{build_coarse, CoarseOperator};
pub use symbol_io::{read_symbol_file, write_symbol_file, SymbolFile};

use nalgebra::DMatrix;

use crate::assembly::DirectionalMeasure;
use crate::error::{Error, Result};
use crate::krylov::LinearOperator;
use crate::mesh::UniformMesh;
use fft::BttbPlan;

/// Largest dimension `to_dense` will materialize.
pub const DENSE_LIMIT: usize = 20_000;

/// Entries `A[r, c] = symbol[offset(c) - offset(r)]` on the `(2N-1)^2`
/// offset window, `N = n - 1` DOFs per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Symbol {
    side: usize,
    values: Vec<f64>,
}

impl Symbol {
    pub fn zeros(side: usize) -> Self {
        let w = (2 * side).saturating_sub(1);
        Self {
            side,
            values: vec![0.0; w * w],
        }
    }

    pub fn from_entries(
        side: usize,
        entries: impl IntoIterator<Item = ((i32, i32), f64)>,
    ) -> Result<Self> {
        let mut s = Self::zeros(side);
        let r = side as i32 - 1;
        for ((di, dj), v) in entries {
            if di.abs() > r || dj.abs() > r {
                return Err(Error::InvalidArgument(format!(
                    "offset ({di}, {dj}) outside the window of a {side} x {side} DOF grid"
                )));
            }
            let k = s.index(di, dj);
            s.values[k] += v;
        }
        Ok(s)
    }

    fn index(&self, di: i32, dj: i32) -> usize {
        let r = self.side as i32 - 1;
        let w = (2 * self.side - 1) as i32;
        ((dj + r) * w + (di + r)) as usize
    }

    /// DOFs per axis.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, di: i32, dj: i32) -> f64 {
        let r = self.side as i32 - 1;
        if di.abs() > r || dj.abs() > r {
            0.0
        } else {
            self.values[self.index(di, dj)]
        }
    }

    pub fn nonzeros(&self) -> Vec<((i32, i32), f64)> {
        let r = self.side as i32 - 1;
        let mut out = Vec::new();
        for dj in -r..=r {
            for di in -r..=r {
                let v = self.get(di, dj);
                if v != 0.0 {
                    out.push(((di, dj), v));
                }
            }
        }
        out
    }

    /// Largest `|S(d) - S(-d)|`.
    pub fn asymmetry(&self) -> f64 {
        self.nonzeros()
            .iter()
            .map(|&((di, dj), v)| (v - self.get(-di, -dj)).abs())
            .fold(0.0, f64::max)
    }
}

/// Stiffness-plus-mass operator on the interior DOFs of a uniform mesh.
#[derive(Debug)]
pub struct FractionalOperator {
    mesh: UniformMesh,
    alpha: f64,
    c: f64,
    measure: DirectionalMeasure,
    symbol: Symbol,
    nonzeros: Vec<((i32, i32), f64)>,
    plan: BttbPlan,
}

impl FractionalOperator {
    pub fn new(
        mesh: &UniformMesh,
        alpha: f64,
        c: f64,
        measure: DirectionalMeasure,
        symbol: Symbol,
    ) -> Result<Self> {
        if symbol.side() != mesh.side() {
            return Err(Error::DimensionMismatch {
                expected: mesh.side(),
                got: symbol.side(),
            });
        }
        let plan = BttbPlan::new(&symbol);
        let nonzeros = symbol.nonzeros();
        Ok(Self {
            mesh: mesh.clone(),
            alpha,
            c,
            measure,
            symbol,
            nonzeros,
            plan,
        })
    }

    pub fn mesh(&self) -> &UniformMesh {
        &self.mesh
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn reaction(&self) -> f64 {
        self.c
    }

    pub fn measure(&self) -> &DirectionalMeasure {
        &self.measure
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn dim(&self) -> usize {
        self.mesh.num_dofs()
    }

    fn offset(&self, r: usize, c: usize) -> (i32, i32) {
        let n = self.mesh.side();
        let (ri, rj) = ((r % n) as i32, (r / n) as i32);
        let (ci, cj) = ((c % n) as i32, (c / n) as i32);
        (ci - ri, cj - rj)
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let (di, dj) = self.offset(r, c);
        self.symbol.get(di, dj)
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    /// FFT-based product.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut y = vec![0.0; x.len()];
        self.plan.apply(x, &mut y);
        Ok(y)
    }

    /// Product by direct summation over the symbol's nonzeros.
    pub fn direct_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let n = self.mesh.side() as i32;
        let mut y = vec![0.0; x.len()];
        for (r, yr) in y.iter_mut().enumerate() {
            let (ri, rj) = ((r as i32) % n, (r as i32) / n);
            let mut acc = 0.0;
            for &((di, dj), v) in &self.nonzeros {
                let (ci, cj) = (ri + di, rj + dj);
                if ci >= 0 && ci < n && cj >= 0 && cj < n {
                    acc += v * x[(cj * n + ci) as usize];
                }
            }
            *yr = acc;
        }
        Ok(y)
    }

    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let d = self.dim();
        if d > DENSE_LIMIT {
            return Err(Error::TooLargeForDense(d));
        }
        Ok(DMatrix::from_fn(d, d, |r, c| self.entry(r, c)))
    }

    /// Principal submatrix on `dofs`.
    pub fn extract_local(&self, dofs: &[usize]) -> Result<DMatrix<f64>> {
        let d = self.dim();
        if let Some(&bad) = dofs.iter().find(|&&i| i >= d) {
            return Err(Error::IndexOutOfRange { index: bad, dim: d });
        }
        Ok(DMatrix::from_fn(dofs.len(), dofs.len(), |a, b| {
            self.entry(dofs[a], dofs[b])
        }))
    }

    /// Dense Cholesky check of positive definiteness.
    pub fn check_positive_definite(&self) -> Result<()> {
        let a = self.to_dense()?;
        nalgebra::Cholesky::new(a)
            .map(|_| ())
            .ok_or_else(|| Error::NotPositiveDefinite("stiffness operator".into()))
    }
}

impl LinearOperator for FractionalOperator {
    fn dim(&self) -> usize {
        self.mesh.num_dofs()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        self.plan.apply(x, y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{build_operator, discretize_measure, MeasureSpec};
    use crate::mesh::{build_mesh, Rect};

    fn operator(n: usize) -> FractionalOperator {
        let mesh = build_mesh(Rect::reference(), n).unwrap();
        let mu = discretize_measure(MeasureSpec::Axes4).unwrap();
        build_operator(&mesh, 0.75, 1.0, &mu, 1e-12).unwrap()
    }

    #[test]
    fn fft_product_matches_direct() {
        for n in [2, 3, 4, 7] {
            let op = operator(n);
            let x: Vec<f64> = (0..op.dim())
                .map(|i| ((i * 7 + 3) % 11) as f64 - 5.0)
                .collect();
            let a = op.matvec(&x).unwrap();
            let b = op.direct_matvec(&x).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12 * (1.0 + v.abs()));
            }
        }
    }

    #[test]
    fn dense_and_local() {
        let op = operator(5);
        let a = op.to_dense().unwrap();
        assert_eq!(a.nrows(), 16);
        assert_eq!(a, a.transpose());
        let loc = op.extract_local(&[0, 5, 15]).unwrap();
        assert_eq!(loc[(1, 2)], a[(5, 15)]);
        assert!(op.extract_local(&[16]).is_err());
        assert!(op.matvec(&[1.0]).is_err());
        op.check_positive_definite().unwrap();
    }

    #[test]
    fn symbol_window() {
        assert!(Symbol::from_entries(3, [((3, 0), 1.0)]).is_err());
        let s = Symbol::from_entries(3, [((2, -2), 1.0), ((-2, 2), 1.5)]).unwrap();
        assert_eq!(s.get(2, -2), 1.0);
        assert_eq!(s.get(5, 0), 0.0);
        assert_eq!(s.asymmetry(), 0.5);
    }
}
