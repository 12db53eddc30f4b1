//! Preconditioned conjugate gradients and Lanczos condition estimates.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Symmetric positive definite operator `y = A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Symmetric positive definite approximation of `A^{-1}`: `z = B r`.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            *yr = self.row(r).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Relative residual treated as exact convergence whatever the stopping rule.
pub const EXACT_RESIDUAL: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct SolveConfig {
    /// Stop once `|alpha_k| * ||p_k||_inf` (the max-norm of the update) is
    /// at most this.
    pub tol_infty: f64,
    pub max_iter: usize,
    pub record_history: bool,
    /// If set, stop on `||r_k||_2 <= tol * ||b||_2` instead.
    pub relative_residual: Option<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol_infty: 1e-6,
            max_iter: 1000,
            record_history: false,
            relative_residual: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    ZeroRhs,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// CG step lengths, one per iteration.
    pub alphas: Vec<f64>,
    /// `beta_k = (r_{k+1}, z_{k+1}) / (r_k, z_k)`, one per completed
    /// direction update.
    pub betas: Vec<f64>,
    /// Update max-norms `|alpha_k| ||p_k||_inf` when history is recorded.
    pub history: Vec<f64>,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.stop_reason != StopReason::MaxIterations
    }
}

/// State passed to an observer after each iteration.
pub struct IterationState<'a> {
    pub iteration: usize,
    pub alpha: f64,
    pub direction: &'a [f64],
    pub update_norm: f64,
    pub residual: &'a [f64],
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn pcg<A, M>(a: &A, m: &M, b: &[f64], cfg: &SolveConfig) -> Result<SolveReport>
where
    A: LinearOperator + ?Sized,
    M: Preconditioner + ?Sized,
{
    pcg_observed(a, m, b, cfg, |_| {})
}

/// Unpreconditioned CG.
pub fn cg<A>(a: &A, b: &[f64], cfg: &SolveConfig) -> Result<SolveReport>
where
    A: LinearOperator + ?Sized,
{
    pcg(a, &Identity, b, cfg)
}

/// PCG from `u_0 = 0`, calling `observer` after every iteration.
///
/// A zero right-hand side returns the zero solution after one iteration.
pub fn pcg_observed<A, M, F>(
    a: &A,
    m: &M,
    b: &[f64],
    cfg: &SolveConfig,
    mut observer: F,
) -> Result<SolveReport>
where
    A: LinearOperator + ?Sized,
    M: Preconditioner + ?Sized,
    F: FnMut(&IterationState<'_>),
{
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if cfg.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be positive".into()));
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::Breakdown("right-hand side is not finite".into()));
    }
    let mut report = SolveReport {
        solution: vec![0.0; n],
        iterations: 0,
        stop_reason: StopReason::MaxIterations,
        alphas: Vec::new(),
        betas: Vec::new(),
        history: Vec::new(),
    };
    let bnorm = l2(b);
    if bnorm == 0.0 {
        report.iterations = 1;
        report.stop_reason = StopReason::ZeroRhs;
        return Ok(report);
    }

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for k in 0..cfg.max_iter {
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if !(pq > 0.0) || !(rz > 0.0) {
            return Err(Error::Breakdown(format!(
                "curvature (p, Ap) = {pq:e}, (r, z) = {rz:e} at iteration {}",
                k + 1
            )));
        }
        let alpha = rz / pq;
        for i in 0..n {
            report.solution[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let update = alpha.abs() * max_norm(&p);
        if !update.is_finite() {
            return Err(Error::Breakdown(format!(
                "non-finite update at iteration {}",
                k + 1
            )));
        }
        report.alphas.push(alpha);
        report.iterations = k + 1;
        if cfg.record_history {
            report.history.push(update);
        }
        observer(&IterationState {
            iteration: k + 1,
            alpha,
            direction: &p,
            update_norm: update,
            residual: &r,
        });
        let rnorm = l2(&r);
        let done = rnorm <= EXACT_RESIDUAL * bnorm
            || match cfg.relative_residual {
                Some(tol) => rnorm <= tol * bnorm,
                None => update <= cfg.tol_infty,
            };
        if done {
            report.stop_reason = StopReason::Converged;
            return Ok(report);
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        report.betas.push(beta);
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(report)
}

/// Lanczos tridiagonal matrix from `k` CG step lengths and the `k - 1`
/// (or more) following `beta` values.
pub fn lanczos_matrix(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for j in 0..k {
        t[(j, j)] = 1.0 / alphas[j];
        if j > 0 {
            t[(j, j)] += betas[j - 1] / alphas[j - 1];
            let off = betas[j - 1].sqrt() / alphas[j - 1];
            t[(j, j - 1)] = off;
            t[(j - 1, j)] = off;
        }
    }
    t
}

/// Smallest and largest Ritz values.
pub fn extreme_ritz_values(alphas: &[f64], betas: &[f64]) -> Result<(f64, f64)> {
    if alphas.is_empty() || betas.len() + 1 < alphas.len() {
        return Err(Error::InvalidArgument(
            "need k step lengths and at least k - 1 betas".into(),
        ));
    }
    let eig = SymmetricEigen::new(lanczos_matrix(alphas, betas));
    let lo = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Breakdown("non-finite Ritz values".into()));
    }
    Ok((lo, hi))
}

#[derive(Clone, Copy, Debug)]
pub struct ConditionEstimate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub probes: usize,
}

impl ConditionEstimate {
    pub fn condition(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

/// Extreme eigenvalues of `B A` from PCG runs on seeded random right-hand
/// sides. A probe that breaks down is replaced by a fresh one.
pub fn estimate_condition<A, M>(a: &A, m: &M, probes: usize, seed: u64) -> Result<ConditionEstimate>
where
    A: LinearOperator + ?Sized,
    M: Preconditioner + ?Sized,
{
    if probes == 0 {
        return Err(Error::InvalidArgument("need at least one probe".into()));
    }
    let n = a.dim();
    let cfg = SolveConfig {
        max_iter: n.clamp(1, 1000),
        relative_residual: Some(1e-10),
        ..SolveConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut done = 0;
    let mut attempts = 0;
    while done < probes {
        attempts += 1;
        if attempts > 3 * probes {
            return Err(Error::Breakdown("too many failed condition probes".into()));
        }
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rep = match pcg(a, m, &b, &cfg) {
            Ok(r) => r,
            Err(Error::Breakdown(_)) => continue,
            Err(e) => return Err(e),
        };
        let (l, h) = match extreme_ritz_values(&rep.alphas, &rep.betas) {
            Ok(v) => v,
            Err(Error::Breakdown(_)) => continue,
            Err(e) => return Err(e),
        };
        lo = lo.min(l);
        hi = hi.max(h);
        done += 1;
    }
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite("preconditioned operator".into()));
    }
    Ok(ConditionEstimate {
        lambda_min: lo,
        lambda_max: hi,
        probes,
    })
}
