//! Manufactured solution `u = g(x) g(y)` with `g(t) = (2t - t^2)^4` on
//! `[0, 2]^2`, and its right-hand side for the four-axis measure.

use crate::fraccalc;

/// Monomial coefficients of `g(t) = t^4 (2 - t)^4`.
pub const G_COEFFS: [f64; 9] = [0.0, 0.0, 0.0, 0.0, 16.0, -32.0, 24.0, -8.0, 1.0];

pub fn g(t: f64) -> f64 {
    let s = t * (2.0 - t);
    s * s * s * s
}

pub fn manufactured_u(x: f64, y: f64) -> f64 {
    g(x) * g(y)
}

/// `_0D_t^mu g + _tD_2^mu g` on `(0, 2)`.
pub fn g_two_sided(t: f64, mu: f64) -> f64 {
    let left =
        fraccalc::frac_deriv_polynomial(&G_COEFFS, mu, t).expect("g vanishes at 0 to fourth order");
    let right = fraccalc::frac_deriv_polynomial_right(&G_COEFFS, mu, 2.0, t)
        .expect("g vanishes at 2 to fourth order");
    left + right
}

/// `-1/4 sum_{axes} D^{2 alpha} u + c u`: the strong form of the operator
/// with weight 1/4 on each axis direction, applied to `u`.
pub fn manufactured_f(x: f64, y: f64, alpha: f64, c: f64) -> f64 {
    let mu = 2.0 * alpha;
    let (gx, gy) = (g(x), g(y));
    -0.25 * (g_two_sided(x, mu) * gy + gx * g_two_sided(y, mu)) + c * gx * gy
}

/// Right-hand side of the reference problem (`c = 0`).
pub fn manufactured_f_example1(x: f64, y: f64, alpha: f64) -> f64 {
    manufactured_f(x, y, alpha, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solution_values() {
        assert_eq!(manufactured_u(1.0, 1.0), 1.0);
        assert_eq!(manufactured_u(0.0, 0.7), 0.0);
        assert_eq!(manufactured_u(0.5, 1.0), 0.31640625);
        let poly: f64 = G_COEFFS
            .iter()
            .enumerate()
            .map(|(p, a)| a * 0.3f64.powi(p as i32))
            .sum();
        assert!((poly - g(0.3)).abs() < 1e-15);
    }

    #[test]
    fn rhs_symmetries() {
        for &(x, y) in &[(0.3, 1.1), (0.5, 1.5), (1.7, 0.2)] {
            let f = manufactured_f_example1(x, y, 0.75);
            assert!((f - manufactured_f_example1(y, x, 0.75)).abs() < 1e-12 * f.abs().max(1.0));
            assert!(
                (f - manufactured_f_example1(2.0 - x, y, 0.75)).abs() < 1e-12 * f.abs().max(1.0)
            );
        }
    }
}
