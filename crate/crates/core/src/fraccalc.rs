//! Closed-form Riemann–Liouville calculus for compactly supported
//! piecewise-linear functions and for polynomials.
//!
//! A continuous piecewise-linear `v` with compact support can be written as
//! `v(x) = sum_j c_j (x - s_j)_+` where `c_j` is the slope change at `s_j`.
//! Because `(x - s)_+` has left derivative `(x - s)_+^{1-a} / Gamma(2-a)`,
//! every fractional derivative of `v` is a finite sum of power functions.

use crate::error::{Error, Result};

/// Gamma function (`libm::tgamma`, accurate to a few ulp).
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `1 / Gamma(x)`, zero at the poles `x = 0, -1, -2, ...`.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / libm::tgamma(x)
    }
}

/// `x_+^p`, with an explicit zero branch for `x <= 0`.
#[inline]
pub fn pos_pow(x: f64, p: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (p * x.ln()).exp()
    }
}

/// Restriction of a hat function (or any compactly supported continuous
/// piecewise-linear function) to a line.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearTrace {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearTrace {
    /// Breakpoints must be strictly increasing and the end values zero.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: breakpoints.len(),
                got: values.len(),
            });
        }
        if breakpoints.len() < 2 {
            return Err(Error::InvalidArgument(
                "a trace needs at least two breakpoints".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "trace breakpoints must be strictly increasing".into(),
            ));
        }
        if values[0] != 0.0 || *values.last().unwrap() != 0.0 {
            return Err(Error::InvalidArgument(
                "trace must vanish at both ends of its support".into(),
            ));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of the piecewise-linear interpolant (zero outside the support).
    pub fn eval(&self, x: f64) -> f64 {
        let s = &self.breakpoints;
        if x <= s[0] || x >= s[s.len() - 1] {
            return 0.0;
        }
        let k = s.partition_point(|&b| b <= x);
        let (a, b) = (s[k - 1], s[k]);
        let t = (x - a) / (b - a);
        self.values[k - 1] * (1.0 - t) + self.values[k] * t
    }

    /// Mirror image `x -> -x`.
    pub fn reflect(&self) -> Self {
        Self {
            breakpoints: self.breakpoints.iter().rev().map(|s| -s).collect(),
            values: self.values.iter().rev().copied().collect(),
        }
    }
}

/// `v(x) = sum_j coef_j * (x - loc_j)_+`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SlopeJumpForm {
    jumps: Vec<(f64, f64)>,
}

impl SlopeJumpForm {
    /// Pairs `(location, slope change)` in increasing location order.
    pub fn jumps(&self) -> &[(f64, f64)] {
        &self.jumps
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.jumps.iter().map(|&(s, c)| c * (x - s).max(0.0)).sum()
    }

    /// Form of `x -> v(-x)`. Uses `sum c_j = sum c_j s_j = 0`, so that
    /// `sum c_j (x - s_j)_+ = sum c_j (s_j - x)_+`.
    pub fn reflect(&self) -> Self {
        Self {
            jumps: self.jumps.iter().rev().map(|&(s, c)| (-s, c)).collect(),
        }
    }
}

/// Slope changes of a trace, keeping zero coefficients.
pub(crate) fn slope_jumps_raw(trace: &PiecewiseLinearTrace) -> Vec<(f64, f64)> {
    let s = &trace.breakpoints;
    let v = &trace.values;
    let mut out = Vec::with_capacity(s.len());
    let mut prev = 0.0;
    for k in 0..s.len() {
        let next = if k + 1 < s.len() {
            (v[k + 1] - v[k]) / (s[k + 1] - s[k])
        } else {
            0.0
        };
        out.push((s[k], next - prev));
        prev = next;
    }
    out
}

/// Converts a trace to slope-jump form; exactly-zero slope changes are dropped.
pub fn to_slope_jumps(trace: &PiecewiseLinearTrace) -> SlopeJumpForm {
    SlopeJumpForm {
        jumps: slope_jumps_raw(trace)
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .collect(),
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.5 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange(alpha))
    }
}

/// Left derivative `_{-inf}D_x^alpha v` of the function in slope-jump form.
pub fn rl_left_deriv(form: &SlopeJumpForm, alpha: f64, x: f64) -> Result<f64> {
    check_order(alpha)?;
    Ok(left_deriv_unchecked(form.jumps(), alpha, x))
}

/// Right derivative `_xD_{+inf}^alpha v`, the mirror of [`rl_left_deriv`].
pub fn rl_right_deriv(form: &SlopeJumpForm, alpha: f64, x: f64) -> Result<f64> {
    check_order(alpha)?;
    let p = 1.0 - alpha;
    let sum: f64 = form
        .jumps()
        .iter()
        .map(|&(s, c)| c * pos_pow(s - x, p))
        .sum();
    Ok(sum * rgamma(2.0 - alpha))
}

pub(crate) fn left_deriv_unchecked(jumps: &[(f64, f64)], alpha: f64, x: f64) -> f64 {
    let p = 1.0 - alpha;
    let sum: f64 = jumps.iter().map(|&(s, c)| c * pos_pow(x - s, p)).sum();
    sum * rgamma(2.0 - alpha)
}

/// `_0D_x^mu x^p = Gamma(p+1) / Gamma(p+1-mu) * x^(p-mu)` for `x >= 0`.
///
/// `mu = 0` is the identity; orders with `p + 1 - mu` at a Gamma pole give 0.
pub fn rl_power_rule(p: u32, mu: f64, x: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&mu) {
        return Err(Error::OrderOutOfRange(mu));
    }
    if mu > 1.0 && p == 0 {
        return Err(Error::InvalidArgument(
            "x^0 has a non-integrable derivative of order above one".into(),
        ));
    }
    if x < 0.0 || x.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "power rule needs x >= 0, got {x}"
        )));
    }
    let pf = p as f64;
    let scale = gamma(pf + 1.0) * rgamma(pf + 1.0 - mu);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let e = pf - mu;
    let xp = if e == 0.0 { 1.0 } else { x.powf(e) };
    Ok(scale * xp)
}

/// `_0D_x^mu sum_p coeffs[p] x^p`.
pub fn frac_deriv_polynomial(coeffs: &[f64], mu: f64, x: f64) -> Result<f64> {
    if mu > 1.0 && coeffs.first().is_some_and(|&a| a != 0.0) {
        return Err(Error::InvalidArgument(
            "polynomial must vanish at the origin for orders above one".into(),
        ));
    }
    let mut acc = 0.0;
    for (p, &a) in coeffs.iter().enumerate() {
        if a != 0.0 {
            acc += a * rl_power_rule(p as u32, mu, x)?;
        }
    }
    Ok(acc)
}

/// Coefficients of `q(s) = g(b - s)` given those of `g`.
pub fn reflect_polynomial(coeffs: &[f64], b: f64) -> Vec<f64> {
    let mut out = vec![0.0; coeffs.len()];
    // (b - s)^p = sum_k C(p,k) b^(p-k) (-s)^k
    for (p, &a) in coeffs.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let mut binom = 1.0;
        for (k, o) in out.iter_mut().enumerate().take(p + 1) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *o += a * binom * b.powi((p - k) as i32) * sign;
            binom = binom * (p - k) as f64 / (k + 1) as f64;
        }
    }
    out
}

/// Right derivative `_xD_b^mu g(x)` of a polynomial supported on `[0, b]`,
/// computed as the left derivative of `g(b - s)` at `s = b - x`.
pub fn frac_deriv_polynomial_right(coeffs: &[f64], mu: f64, b: f64, x: f64) -> Result<f64> {
    let reflected = reflect_polynomial(coeffs, b);
    frac_deriv_polynomial(&reflected, mu, b - x)
}
