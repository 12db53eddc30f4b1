//! Two-level additive Schwarz preconditioner
//! `B = P0 A0^{-1} P0^T + sum_i R_i^T A_i^{-1} R_i`.

use std::collections::HashMap;

use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Error, Result};
use crate::krylov::Preconditioner;
use crate::mesh::{coarse_prolongation, TwoLevelDecomposition};
use crate::operators::{build_coarse, CoarseOperator, FractionalOperator};
use crate::par;

#[derive(Debug)]
struct LocalBlock {
    dofs: Vec<usize>,
    factor: usize,
}

#[derive(Debug)]
pub struct SchwarzPreconditioner {
    dim: usize,
    locals: Vec<LocalBlock>,
    factors: Vec<Cholesky<f64, Dyn>>,
    colors: Vec<Vec<usize>>,
    coarse: Option<CoarseOperator>,
}

/// Factors one local block per congruent subdomain shape and, when
/// `with_coarse` is set and the coarse mesh has interior nodes, the Galerkin
/// coarse operator.
pub fn build_preconditioner(
    op: &FractionalOperator,
    decomposition: &TwoLevelDecomposition,
    with_coarse: bool,
) -> Result<SchwarzPreconditioner> {
    let mut shape_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut representatives: Vec<usize> = Vec::new();
    let mut locals = Vec::with_capacity(decomposition.subdomains().len());
    for (idx, sd) in decomposition.subdomains().iter().enumerate() {
        let next = representatives.len();
        let f = *shape_index.entry(sd.shape()).or_insert_with(|| {
            representatives.push(idx);
            next
        });
        locals.push(LocalBlock {
            dofs: sd.dofs.clone(),
            factor: f,
        });
    }
    let factors = par::map_slice(&representatives, |&idx| {
        let block = op.extract_local(&decomposition.subdomains()[idx].dofs)?;
        Cholesky::new(block)
            .ok_or_else(|| Error::NotPositiveDefinite(format!("local block of subdomain {idx}")))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let coarse = if with_coarse && decomposition.m() > 1 {
        let p0 = coarse_prolongation(op.mesh(), decomposition.m())?;
        Some(build_coarse(op, &p0)?)
    } else {
        None
    };
    Ok(SchwarzPreconditioner {
        dim: op.dim(),
        locals,
        factors,
        colors: decomposition.colors().to_vec(),
        coarse,
    })
}

impl SchwarzPreconditioner {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_subdomains(&self) -> usize {
        self.locals.len()
    }

    /// Distinct local factorizations.
    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn coarse(&self) -> Option<&CoarseOperator> {
        self.coarse.as_ref()
    }

    /// `z = sum_i R_i^T A_i^{-1} R_i r`. Subdomains of one color are solved
    /// concurrently and scattered in a fixed order, so the result does not
    /// depend on the thread count.
    pub fn apply_one_level(&self, r: &[f64], z: &mut [f64]) {
        assert_eq!(r.len(), self.dim);
        assert_eq!(z.len(), self.dim);
        z.iter_mut().for_each(|v| *v = 0.0);
        for color in &self.colors {
            let solved = par::map_slice(color, |&i| {
                let b = &self.locals[i];
                let rhs = DVector::from_iterator(b.dofs.len(), b.dofs.iter().map(|&d| r[d]));
                self.factors[b.factor].solve(&rhs)
            });
            for (&i, x) in color.iter().zip(&solved) {
                for (&d, v) in self.locals[i].dofs.iter().zip(x.iter()) {
                    z[d] += v;
                }
            }
        }
    }

    /// Coarse correction alone (zero without a coarse space).
    pub fn apply_coarse(&self, r: &[f64], z: &mut [f64]) {
        z.iter_mut().for_each(|v| *v = 0.0);
        if let Some(c) = &self.coarse {
            c.add_correction(r, z);
        }
    }

    /// Borrowed view that applies only the one-level part.
    pub fn one_level(&self) -> OneLevel<'_> {
        OneLevel(self)
    }
}

impl Preconditioner for SchwarzPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.apply_one_level(r, z);
        if let Some(c) = &self.coarse {
            let mut zc = vec![0.0; z.len()];
            c.add_correction(r, &mut zc);
            for (a, b) in z.iter_mut().zip(&zc) {
                *a += b;
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OneLevel<'a>(&'a SchwarzPreconditioner);

impl Preconditioner for OneLevel<'_> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.0.apply_one_level(r, z);
    }
}
