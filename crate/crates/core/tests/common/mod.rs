//! Reference computations for the integration tests. Everything here works
//! from definitions with general-purpose quadrature and shares no code with
//! the closed forms in the library.

#![allow(dead_code)]

use fracdd::mesh::hat_value;

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

// Gauss-Kronrod 7/15 nodes on [-1, 1] (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature with absolute tolerance `tol`, floored
/// at roundoff level relative to the whole integral.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, floor: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol.max(floor) || depth == 0 || (b - a).abs() < 1e-14 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, floor, depth - 1) + rec(f, m, b, 0.5 * tol, floor, depth - 1)
    }
    let floor = 1e-15 * gk15(f, a, b).0.abs();
    rec(f, a, b, tol, floor, 40)
}

/// Tanh-sinh quadrature on `[a, b]`. The integrand receives the point
/// together with its distances to `a` and `b`, which stay accurate near the
/// endpoints where algebraic singularities live.
pub fn tanh_sinh<F: Fn(f64, f64, f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    if half <= 0.0 {
        return 0.0;
    }
    let hp = std::f64::consts::FRAC_PI_2;
    let eval = |t: f64| -> f64 {
        let u = hp * t.sinh();
        let w = hp * t.cosh() / (u.cosh() * u.cosh());
        // 1 - tanh(u) and 1 + tanh(u) without cancellation
        let to_b = half * 2.0 / ((2.0 * u).exp() + 1.0);
        let to_a = half * 2.0 / ((-2.0 * u).exp() + 1.0);
        if to_a <= 0.0 || to_b <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let x = if u < 0.0 { a + to_a } else { b - to_b };
        w * f(x, to_a, to_b)
    };
    // wide enough that strong endpoint singularities lose no visible mass
    let tmax = 6.0;
    let mut step = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * step <= tmax {
        sum += eval(k as f64 * step) + eval(-(k as f64) * step);
        k += 1;
    }
    let mut prev = sum * step * half;
    for _ in 0..9 {
        step *= 0.5;
        let mut k = 1;
        while k as f64 * step <= tmax {
            sum += eval(k as f64 * step) + eval(-(k as f64) * step);
            k += 2;
        }
        let cur = sum * step * half;
        if (cur - prev).abs() <= 1e-15 * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Piecewise linear function given by breakpoints and values (zero outside).
#[derive(Clone, Debug)]
pub struct Pl {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl Pl {
    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.x[0] || t >= *self.x.last().unwrap() {
            return 0.0;
        }
        let i = self.x.partition_point(|&b| b <= t) - 1;
        let l = (t - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.v[i] + l * (self.v[i + 1] - self.v[i])
    }

    fn slope(&self, i: usize) -> f64 {
        (self.v[i + 1] - self.v[i]) / (self.x[i + 1] - self.x[i])
    }

    /// `I^beta v (x) = 1/Gamma(beta) int_{-inf}^x (x-s)^{beta-1} v(s) ds` by
    /// tanh-sinh between breakpoints.
    pub fn frac_integral(&self, beta: f64, x: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.x.len() - 1 {
            let (lo, hi) = (self.x[i], self.x[i + 1].min(x));
            if hi <= lo {
                continue;
            }
            let last = hi == x;
            acc += tanh_sinh(
                &|s, _, db| {
                    let d = if last { db } else { x - s };
                    d.powf(beta - 1.0) * self.eval(s)
                },
                lo,
                hi,
            );
        }
        acc / gamma(beta)
    }

    /// Left RL derivative `d/dx I^{1-alpha} v` with the derivative taken by
    /// a five-point difference. `x` must stay well away from breakpoints.
    pub fn left_deriv_quadrature(&self, alpha: f64, x: f64) -> f64 {
        let e = 1e-4;
        let f = |t: f64| self.frac_integral(1.0 - alpha, t);
        (f(x - 2.0 * e) - 8.0 * f(x - e) + 8.0 * f(x + e) - f(x + 2.0 * e)) / (12.0 * e)
    }

    /// Right derivative via the reflection `x -> -x`.
    pub fn right_deriv_quadrature(&self, alpha: f64, x: f64) -> f64 {
        let r = Pl {
            x: self.x.iter().rev().map(|t| -t).collect(),
            v: self.v.iter().rev().copied().collect(),
        };
        r.left_deriv_quadrature(alpha, -x)
    }

    /// Closed form derivative on pieces, written from the slopes.
    pub fn left_deriv_pieces(&self, alpha: f64, x: f64) -> f64 {
        let q = 1.0 - alpha;
        let mut acc = 0.0;
        for i in 0..self.x.len() - 1 {
            let a = (x - self.x[i]).max(0.0).powf(q);
            let b = (x - self.x[i + 1]).max(0.0).powf(q);
            acc += self.slope(i) * (a - b);
        }
        acc / gamma(2.0 - alpha)
    }

    pub fn right_deriv_pieces(&self, alpha: f64, x: f64) -> f64 {
        let q = 1.0 - alpha;
        let mut acc = 0.0;
        for i in 0..self.x.len() - 1 {
            let a = (self.x[i + 1] - x).max(0.0).powf(q);
            let b = (self.x[i] - x).max(0.0).powf(q);
            acc -= self.slope(i) * (a - b);
        }
        acc / gamma(2.0 - alpha)
    }
}

/// Left RL derivative of order `mu in (1, 2)` of a polynomial from the
/// Caputo form plus boundary terms:
/// `g(0) x^{-mu}/Gamma(1-mu) + g'(0) x^{1-mu}/Gamma(2-mu)
///  + 1/Gamma(2-mu) int_0^x (x-s)^{1-mu} g''(s) ds`,
/// with the integral substituted by `u = (x - s)^{2-mu}`.
pub fn poly_deriv_quadrature(coeffs: &[f64], mu: f64, x: f64) -> f64 {
    let g2 = |s: f64| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .skip(2)
            .map(|(p, a)| a * (p * (p - 1)) as f64 * s.powi(p as i32 - 2))
            .sum()
    };
    let q = 2.0 - mu;
    let umax = x.powf(q);
    let v = integrate(&|u: f64| g2(x - u.powf(1.0 / q)), 0.0, umax, 1e-14);
    let c0 = coeffs.first().copied().unwrap_or(0.0);
    let c1 = coeffs.get(1).copied().unwrap_or(0.0);
    let mut bnd = c1 * x.powf(1.0 - mu) / gamma(2.0 - mu);
    if c0 != 0.0 {
        bnd += c0 * x.powf(-mu) / gamma(1.0 - mu);
    }
    v / (q * gamma(q)) + bnd
}

/// Left RL derivative of order `mu in (0, 1)` of a polynomial vanishing at 0.
pub fn poly_deriv_quadrature_low(coeffs: &[f64], mu: f64, x: f64) -> f64 {
    let g1 = |s: f64| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(p, a)| a * p as f64 * s.powi(p as i32 - 1))
            .sum()
    };
    let q = 1.0 - mu;
    let umax = x.powf(q);
    let v = integrate(&|u: f64| g1(x - u.powf(1.0 / q)), 0.0, umax, 1e-14);
    v / (q * gamma(q))
}

/// Left RL integral `I^alpha w (x)` of a function with integrable
/// singularities at `breaks`, by tanh-sinh on each gap.
pub fn rl_integral<F: Fn(f64) -> f64>(w: &F, alpha: f64, from: f64, breaks: &[f64], x: f64) -> f64 {
    let mut pts: Vec<f64> = vec![from];
    pts.extend(breaks.iter().copied().filter(|&b| b > from && b < x));
    pts.push(x);
    let mut acc = 0.0;
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let last = b == x;
        acc += tanh_sinh(
            &|s, _da, db| {
                let dist = if last { db } else { x - s };
                dist.powf(alpha - 1.0) * w(s)
            },
            a,
            b,
        );
    }
    acc / gamma(alpha)
}

/// Hat of the node at `(xi, yi)` on a mesh of width `h`, evaluated at a point.
fn hat(xi: f64, yi: f64, h: f64, x: f64, y: f64) -> f64 {
    hat_value((x - xi) / h, (y - yi) / h)
}

/// `(D^alpha_theta phi_a, D^alpha_{theta+pi} phi_b)` by brute force in
/// physical coordinates. Lines parallel to `theta` are sampled by adaptive
/// quadrature in the transverse coordinate; on each line the traces are
/// rebuilt from the hat formula at the intersections with the three mesh
/// line families, derivatives are evaluated piece by piece and the product
/// is integrated with tanh-sinh between breakpoints.
pub fn stiffness_entry_oracle(
    h: f64,
    node_a: (f64, f64),
    node_b: (f64, f64),
    theta: f64,
    alpha: f64,
    tol: f64,
) -> f64 {
    let (e, n) = ((theta.cos(), theta.sin()), (-theta.sin(), theta.cos()));
    let star = |c: (f64, f64)| -> Vec<(f64, f64)> {
        let mut v = vec![c];
        for (a, b) in [(1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1)] {
            v.push((c.0 + a as f64 * h, c.1 + b as f64 * h));
        }
        v
    };
    let origin = node_a;
    let proj = |p: (f64, f64), d: (f64, f64)| (p.0 - origin.0) * d.0 + (p.1 - origin.1) * d.1;
    let (sa, sb) = (star(node_a), star(node_b));
    let trange = |s: &[(f64, f64)]| {
        s.iter()
            .map(|&p| proj(p, n))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| {
                (a.min(t), b.max(t))
            })
    };
    let srange = |s: &[(f64, f64)]| {
        s.iter()
            .map(|&p| proj(p, e))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| {
                (a.min(t), b.max(t))
            })
    };
    let (ta, tb) = (trange(&sa), trange(&sb));
    let (t0, t1) = (ta.0.max(tb.0), ta.1.min(tb.1));
    if t1 <= t0 {
        return 0.0;
    }
    let (s_lo, _) = srange(&sa);
    let (_, s_hi) = srange(&sb);
    if s_hi <= s_lo {
        return 0.0;
    }
    let s_min = srange(&sa).0.min(srange(&sb).0) - h;
    let s_max = srange(&sa).1.max(srange(&sb).1) + h;

    let at = |s: f64, t: f64| (origin.0 + s * e.0 + t * n.0, origin.1 + s * e.1 + t * n.1);
    // intersections of the line with x = ih, y = jh, y - x = kh
    let breakpoints = |t: f64| -> Vec<f64> {
        let p0 = at(0.0, t);
        let mut out = Vec::new();
        let mut family = |base: f64, rate: f64| {
            if rate.abs() < 1e-14 {
                return;
            }
            let lo = (base + rate * s_min).min(base + rate * s_max);
            let hi = (base + rate * s_min).max(base + rate * s_max);
            let mut k = (lo / h).floor() as i64;
            while (k as f64) * h <= hi + 1e-12 {
                let s = (k as f64 * h - base) / rate;
                if s > s_min && s < s_max {
                    out.push(s);
                }
                k += 1;
            }
        };
        family(p0.0, e.0);
        family(p0.1, e.1);
        family(p0.1 - p0.0, e.1 - e.0);
        out.push(s_min);
        out.push(s_max);
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out
    };
    let trace = |c: (f64, f64), t: f64, bps: &[f64]| -> Pl {
        Pl {
            x: bps.to_vec(),
            v: bps
                .iter()
                .map(|&s| {
                    let p = at(s, t);
                    hat(c.0, c.1, h, p.0, p.1)
                })
                .collect(),
        }
    };
    let line = |t: f64| -> f64 {
        let bps = breakpoints(t);
        let (va, vb) = (trace(node_a, t, &bps), trace(node_b, t, &bps));
        let mut acc = 0.0;
        for w in bps.windows(2) {
            if w[1] <= s_lo || w[0] >= s_hi {
                continue;
            }
            acc += tanh_sinh(
                &|s, _, _| va.left_deriv_pieces(alpha, s) * vb.right_deriv_pieces(alpha, s),
                w[0],
                w[1],
            );
        }
        acc
    };
    let mut cuts: Vec<f64> = sa
        .iter()
        .chain(&sb)
        .map(|&p| proj(p, n))
        .filter(|&t| t > t0 && t < t1)
        .collect();
    cuts.push(t0);
    cuts.push(t1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    cuts.windows(2)
        .map(|w| integrate(&line, w[0], w[1], tol))
        .sum()
}

/// Deterministic pseudo-random vector in `[-1, 1)`.
pub fn lcg_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut s = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    (0..len)
        .map(|_| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
