use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::FractionalOperator;
use crate::error::{Error, Result};
use crate::mesh::Prolongation;

/// `A0 = P0^T A P0` with its Cholesky factorization.
#[derive(Debug)]
pub struct CoarseOperator {
    prolongation: Prolongation,
    matrix: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl CoarseOperator {
    pub fn prolongation(&self) -> &Prolongation {
        &self.prolongation
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `fine += P0 A0^{-1} P0^T r`.
    pub fn add_correction(&self, r: &[f64], fine: &mut [f64]) {
        let rc = DVector::from_vec(self.prolongation.restrict(r));
        let z = self.factor.solve(&rc);
        self.prolongation.add_prolongated(z.as_slice(), fine);
    }
}

/// Galerkin coarse operator.
///
/// Interior coarse hats are translates of one another on the fine lattice,
/// so `A0` is itself block Toeplitz. Two fine products (the corner coarse
/// hats at the bottom-left and bottom-right) determine every coarse offset
/// with non-negative y component; the rest follow by symmetry.
pub fn build_coarse(op: &FractionalOperator, p0: &Prolongation) -> Result<CoarseOperator> {
    if p0.fine_dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: p0.fine_dim(),
        });
    }
    let cs = p0.coarse_side();
    if cs == 0 {
        return Err(Error::InvalidArgument(
            "coarse space is empty (one coarse cell per axis)".into(),
        ));
    }
    let unit = |c: usize| {
        let mut e = vec![0.0; p0.coarse_dim()];
        e[c] = 1.0;
        e
    };
    let left = op.matvec(&p0.prolongate(&unit(0)))?;
    let right = op.matvec(&p0.prolongate(&unit(cs - 1)))?;

    let w = 2 * cs - 1;
    let r = cs as i64 - 1;
    let mut table = vec![0.0; w * w];
    let idx = |di: i64, dj: i64| ((dj + r) as usize) * w + (di + r) as usize;
    let project = |col: &[f64], ci: usize, cj: usize| -> f64 {
        p0.column(cj * cs + ci)
            .iter()
            .map(|&(i, p)| p * col[i])
            .sum()
    };
    for dj in 0..=r {
        for di in -r..=r {
            if dj == 0 && di < 0 {
                continue;
            }
            let v = if di >= 0 {
                project(&left, di as usize, dj as usize)
            } else {
                project(&right, (r + di) as usize, dj as usize)
            };
            table[idx(di, dj)] = v;
            table[idx(-di, -dj)] = v;
        }
    }
    let dim = cs * cs;
    let matrix = DMatrix::from_fn(dim, dim, |a, b| {
        let (ai, aj) = ((a % cs) as i64, (a / cs) as i64);
        let (bi, bj) = ((b % cs) as i64, (b / cs) as i64);
        table[idx(bi - ai, bj - aj)]
    });
    let factor = Cholesky::new(matrix.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("coarse operator".into()))?;
    Ok(CoarseOperator {
        prolongation: p0.clone(),
        matrix,
        factor,
    })
}
