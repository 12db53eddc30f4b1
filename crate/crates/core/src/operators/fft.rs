//! Block-Toeplitz-with-Toeplitz-blocks products through a zero-padded 2D
//! circulant embedding.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Symbol;
use crate::par;

/// Rows handed to one worker per FFT batch.
const ROWS_PER_TASK: usize = 8;

pub(crate) struct BttbPlan {
    side: usize,
    padded: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Eigenvalues of the circulant embedding, stored transposed to match
    /// the column pass.
    eigen_t: Vec<Complex64>,
}

impl std::fmt::Debug for BttbPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BttbPlan")
            .field("side", &self.side)
            .field("padded", &self.padded)
            .finish()
    }
}

fn fft_rows(fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64], len: usize) {
    par::for_each_chunk_mut(buf, len * ROWS_PER_TASK, |_, chunk| {
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], p: usize) {
    const B: usize = 32;
    for bi in (0..p).step_by(B) {
        for bj in (0..p).step_by(B) {
            for i in bi..(bi + B).min(p) {
                for j in bj..(bj + B).min(p) {
                    dst[j * p + i] = src[i * p + j];
                }
            }
        }
    }
}

impl BttbPlan {
    pub(crate) fn new(symbol: &Symbol) -> Self {
        let side = symbol.side();
        let width = (2 * side).saturating_sub(1).max(1);
        let padded = width.next_power_of_two();
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(padded);
        let inverse = planner.plan_fft_inverse(padded);

        let p = padded;
        let mut kernel = vec![Complex64::default(); p * p];
        let r = side as i64 - 1;
        for dj in -r..=r {
            for di in -r..=r {
                let v = symbol.get(di as i32, dj as i32);
                if v != 0.0 {
                    // A[r, c] = symbol[c - r], i.e. kernel[d] = symbol[-d]
                    let row = (-dj).rem_euclid(p as i64) as usize;
                    let col = (-di).rem_euclid(p as i64) as usize;
                    kernel[row * p + col] = Complex64::new(v, 0.0);
                }
            }
        }
        fft_rows(&forward, &mut kernel, p);
        let mut eigen_t = vec![Complex64::default(); p * p];
        transpose(&kernel, &mut eigen_t, p);
        fft_rows(&forward, &mut eigen_t, p);

        Self {
            side,
            padded,
            forward,
            inverse,
            eigen_t,
        }
    }

    /// `y = A x` for the Toeplitz operator defined by the symbol.
    pub(crate) fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (n, p) = (self.side, self.padded);
        let mut buf = vec![Complex64::default(); p * p];
        for j in 0..n {
            for i in 0..n {
                buf[j * p + i] = Complex64::new(x[j * n + i], 0.0);
            }
        }
        // rows beyond n are zero and stay zero under the row transform
        fft_rows(&self.forward, &mut buf[..n * p], p);
        let mut tr = vec![Complex64::default(); p * p];
        transpose(&buf, &mut tr, p);
        fft_rows(&self.forward, &mut tr, p);
        for (v, e) in tr.iter_mut().zip(&self.eigen_t) {
            *v *= e;
        }
        fft_rows(&self.inverse, &mut tr, p);
        transpose(&tr, &mut buf, p);
        fft_rows(&self.inverse, &mut buf[..n * p], p);
        let scale = 1.0 / (p * p) as f64;
        for j in 0..n {
            for i in 0..n {
                y[j * n + i] = buf[j * p + i].re * scale;
            }
        }
    }
}
