//! Assembly of the discrete bilinear form
//! `B(v, w) = -sum_k p_k (D_{theta_k} v, D_{theta_k + pi} w) + c (v, w)`
//! on the uniform `/`-diagonal triangulation.
//!
//! A stiffness entry `(D_theta phi_0, D_{theta+pi} phi_d)` is computed by
//! slicing both hats with lines parallel to `theta`. On each line the traces
//! are piecewise linear, so the left derivative of one and the right
//! derivative of the other are sums of `(x - a_j)_+^{1-alpha}` and
//! `(b_k - x)_+^{1-alpha}` terms, and their product integrates exactly:
//!
//! `int (x-a)_+^{1-alpha} (b-x)_+^{1-alpha} dx = B(2-alpha, 2-alpha) (b-a)_+^{3-2alpha}`.
//!
//! Between consecutive transverse positions where a line passes through a
//! star vertex the jump locations move linearly and the jump coefficients are
//! constant, so the transverse integral is also done in closed form.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraccalc::{self, PiecewiseLinearTrace};
use crate::mesh::{UniformMesh, NEIGHBOURS};
use crate::operators::{FractionalOperator, Symbol};
use crate::par;

/// Named direction measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasureSpec {
    /// Weight 1/4 on each of the four axis directions.
    Axes4,
    /// Midpoint rule for the constant density 1 on `[0, 2pi)` with `L` nodes.
    Uniform(usize),
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureSpec::Axes4 => write!(f, "axes4"),
            MeasureSpec::Uniform(l) => write!(f, "uniform:{l}"),
        }
    }
}

impl FromStr for MeasureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "axes4" {
            return Ok(MeasureSpec::Axes4);
        }
        if let Some(l) = s.strip_prefix("uniform:") {
            let l: usize = l
                .parse()
                .map_err(|_| Error::UnknownMeasure(s.to_string()))?;
            return Ok(MeasureSpec::Uniform(l));
        }
        Err(Error::UnknownMeasure(s.to_string()))
    }
}

impl Serialize for MeasureSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MeasureSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    /// Angle in `[0, 2pi)`.
    pub theta: f64,
    pub weight: f64,
}

/// Discrete direction measure `sum_k p_k delta(theta - theta_k)` with
/// antipodal symmetry.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionalMeasure {
    directions: Vec<Direction>,
    /// Index of the antipodal partner of each direction.
    partner: Vec<usize>,
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

impl DirectionalMeasure {
    /// Validates weights and antipodal pairing.
    pub fn new(directions: Vec<Direction>) -> Result<Self> {
        let directions: Vec<Direction> = directions
            .into_iter()
            .map(|d| Direction {
                theta: wrap_angle(d.theta),
                weight: d.weight,
            })
            .collect();
        if let Some(d) = directions.iter().find(|d| !(d.weight > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "direction weight must be positive, got {}",
                d.weight
            )));
        }
        let mut partner = vec![usize::MAX; directions.len()];
        for i in 0..directions.len() {
            if partner[i] != usize::MAX {
                continue;
            }
            let di = directions[i];
            let found = (0..directions.len()).find(|&j| {
                j != i
                    && partner[j] == usize::MAX
                    && angle_distance(directions[j].theta, di.theta + PI) < 1e-12
                    && (directions[j].weight - di.weight).abs() <= 1e-12 * di.weight
            });
            match found {
                Some(j) => {
                    partner[i] = j;
                    partner[j] = i;
                }
                None => {
                    return Err(Error::AsymmetricMeasure {
                        theta: di.theta,
                        weight: di.weight,
                    })
                }
            }
        }
        Ok(Self {
            directions,
            partner,
        })
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn total_mass(&self) -> f64 {
        self.directions.iter().map(|d| d.weight).sum()
    }

    /// One representative per antipodal pair, with angle in `[0, pi)` and the
    /// pair's mean weight.
    pub fn pair_representatives(&self) -> Vec<Direction> {
        let mut out = Vec::with_capacity(self.directions.len() / 2);
        for (i, &j) in self.partner.iter().enumerate() {
            if i < j {
                let (a, b) = (self.directions[i], self.directions[j]);
                let theta = if a.theta < PI { a.theta } else { b.theta };
                out.push(Direction {
                    theta,
                    weight: 0.5 * (a.weight + b.weight),
                });
            }
        }
        out
    }

    /// Same directions with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            directions: self
                .directions
                .iter()
                .map(|d| Direction {
                    theta: d.theta,
                    weight: d.weight * factor,
                })
                .collect(),
            partner: self.partner.clone(),
        }
    }
}

/// Discretizes a named measure. `Axes4` ignores the direction count.
pub fn discretize_measure(spec: MeasureSpec) -> Result<DirectionalMeasure> {
    match spec {
        MeasureSpec::Axes4 => DirectionalMeasure::new(
            (0..4)
                .map(|k| Direction {
                    theta: k as f64 * PI / 2.0,
                    weight: 0.25,
                })
                .collect(),
        ),
        MeasureSpec::Uniform(l) => {
            if l == 0 || l % 2 != 0 {
                return Err(Error::OddDirectionCount(l));
            }
            let step = 2.0 * PI / l as f64;
            DirectionalMeasure::new(
                (0..l)
                    .map(|k| Direction {
                        theta: (k as f64 + 0.5) * step,
                        weight: step,
                    })
                    .collect(),
            )
        }
    }
}

/// Sparse table of translation-invariant entries keyed by DOF offset
/// `(di, dj)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OffsetTable {
    entries: BTreeMap<(i32, i32), f64>,
}

impl OffsetTable {
    pub fn get(&self, offset: (i32, i32)) -> f64 {
        self.entries.get(&offset).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, offset: (i32, i32)) -> bool {
        self.entries.contains_key(&offset)
    }

    pub fn insert(&mut self, offset: (i32, i32), value: f64) {
        self.entries.insert(offset, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = ((i32, i32), f64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Entries `(D_theta phi_0, D_{theta+pi} phi_d)` for one direction.
#[derive(Clone, Debug)]
pub struct StiffnessEntryTable {
    pub theta: f64,
    pub alpha: f64,
    pub table: OffsetTable,
    /// Largest `max(|di|, |dj|)` among retained offsets.
    pub cutoff: i32,
}

impl StiffnessEntryTable {
    pub fn get(&self, offset: (i32, i32)) -> f64 {
        self.table.get(offset)
    }
}

/// Line frame for direction `theta`: along-coordinate `s = p . e`,
/// transverse coordinate `t = p . n`.
#[derive(Clone, Copy, Debug)]
struct Frame {
    e: (f64, f64),
    n: (f64, f64),
}

impl Frame {
    fn new(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Frame {
            e: (c, s),
            n: (-s, c),
        }
    }

    fn along(&self, p: (f64, f64)) -> f64 {
        p.0 * self.e.0 + p.1 * self.e.1
    }

    fn across(&self, p: (f64, f64)) -> f64 {
        p.0 * self.n.0 + p.1 * self.n.1
    }
}

/// Star of a hat: its node plus the six neighbours, in lattice units.
fn star_vertices(center: (f64, f64)) -> [(f64, f64); 7] {
    let mut v = [center; 7];
    for (k, (a, b)) in NEIGHBOURS.iter().enumerate() {
        v[k + 1] = (center.0 + *a as f64, center.1 + *b as f64);
    }
    v
}

fn range_of(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
        (lo.min(x), hi.max(x))
    })
}

/// Restriction of the hat centred at `center` (lattice units) to the line at
/// transverse position `t`, parametrized by the along-coordinate.
fn hat_trace(center: (f64, f64), frame: &Frame, t: f64) -> Option<PiecewiseLinearTrace> {
    let c = (frame.along(center), frame.across(center));
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(12);
    for k in 0..6 {
        let (a1, b1) = NEIGHBOURS[k];
        let (a2, b2) = NEIGHBOURS[(k + 1) % 6];
        let p1 = (center.0 + a1 as f64, center.1 + b1 as f64);
        let p2 = (center.0 + a2 as f64, center.1 + b2 as f64);
        // vertices as (s, t, value)
        let tri = [
            (c.0, c.1, 1.0),
            (frame.along(p1), frame.across(p1), 0.0),
            (frame.along(p2), frame.across(p2), 0.0),
        ];
        let mut lo = (f64::INFINITY, 0.0);
        let mut hi = (f64::NEG_INFINITY, 0.0);
        for e in 0..3 {
            let (sp, tp, vp) = tri[e];
            let (sq, tq, vq) = tri[(e + 1) % 3];
            if tp == tq || (tp - t) * (tq - t) > 0.0 {
                continue;
            }
            let lam = (t - tp) / (tq - tp);
            let s = sp + lam * (sq - sp);
            let v = vp + lam * (vq - vp);
            if s < lo.0 {
                lo = (s, v);
            }
            if s > hi.0 {
                hi = (s, v);
            }
        }
        if hi.0 - lo.0 > 1e-13 {
            pts.push(lo);
            pts.push(hi);
        }
    }
    if pts.is_empty() {
        return None;
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut s: Vec<f64> = Vec::with_capacity(pts.len());
    let mut v: Vec<f64> = Vec::with_capacity(pts.len());
    let mut count = 0.0;
    for (ps, pv) in pts {
        if let Some(&last) = s.last() {
            if ps - last <= 1e-10 {
                // merge coincident chord endpoints
                let k = v.len() - 1;
                v[k] = (v[k] * count + pv) / (count + 1.0);
                count += 1.0;
                continue;
            }
        }
        s.push(ps);
        v.push(pv);
        count = 1.0;
    }
    if s.len() < 2 {
        return None;
    }
    v[0] = 0.0;
    *v.last_mut().unwrap() = 0.0;
    PiecewiseLinearTrace::new(s, v).ok()
}

fn line_jumps(center: (f64, f64), frame: &Frame, t: f64) -> Vec<(f64, f64)> {
    hat_trace(center, frame, t)
        .map(|tr| fraccalc::slope_jumps_raw(&tr))
        .unwrap_or_default()
}

/// `int_R D_left(a) * D_right(b) ds` up to the factor `1 / Gamma(4 - 2 alpha)`.
fn line_pair_sum(left: &[(f64, f64)], right: &[(f64, f64)], gamma_exp: f64) -> f64 {
    let mut acc = 0.0;
    for &(a, c) in left {
        for &(b, d) in right {
            acc += c * d * fraccalc::pos_pow(b - a, gamma_exp);
        }
    }
    acc
}

/// `int_{t0}^{t1} g(t)_+^p dt` for `g` linear with end values `g0`, `g1`.
fn linear_power_integral(g0: f64, g1: f64, width: f64, p: f64) -> f64 {
    if g0 <= 0.0 && g1 <= 0.0 {
        return 0.0;
    }
    let sum = g0 + g1;
    if g0 > 0.0 && g1 > 0.0 {
        let r = (g1 - g0) / sum;
        if r.abs() <= 0.5 {
            // (1/2) int_{-1}^{1} (1 + r u)^p du = sum_k C(p, 2k) r^{2k} / (2k + 1)
            let gm = 0.5 * sum;
            let r2 = r * r;
            let mut binom = 1.0;
            let mut rpow = 1.0;
            let mut series = 1.0;
            let mut k = 0usize;
            loop {
                let j = 2 * k;
                binom *= (p - j as f64) * (p - (j + 1) as f64) / (((j + 1) * (j + 2)) as f64);
                rpow *= r2;
                k += 1;
                let term = binom * rpow / (2 * k + 1) as f64;
                series += term;
                if term.abs() < 1e-17 * series.abs() || k > 60 {
                    break;
                }
            }
            return width * fraccalc::pos_pow(gm, p) * series;
        }
    }
    let q = (g1 - g0) / width;
    (fraccalc::pos_pow(g1, p + 1.0) - fraccalc::pos_pow(g0, p + 1.0)) / ((p + 1.0) * q)
}

const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_27),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_361_96),
    (0.183_434_642_495_649_8, 0.362_683_783_378_361_96),
    (0.525_532_409_916_329, 0.313_706_645_877_887_27),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// `(D_theta phi_a, D_{theta+pi} phi_b)` for unit cells, hats centred at
/// `a` and `b` in lattice coordinates.
pub(crate) fn unit_pair_entry(a: (f64, f64), b: (f64, f64), theta: f64, alpha: f64) -> f64 {
    let frame = Frame::new(theta);
    let sa = star_vertices(a);
    let sb = star_vertices(b);
    let (ta_lo, ta_hi) = range_of(sa.iter().map(|&p| frame.across(p)));
    let (tb_lo, tb_hi) = range_of(sb.iter().map(|&p| frame.across(p)));
    let (t_lo, t_hi) = (ta_lo.max(tb_lo), ta_hi.min(tb_hi));
    if t_hi - t_lo <= 1e-12 {
        return 0.0;
    }
    // right derivative of phi_b vanishes beyond its support, left derivative
    // of phi_a vanishes before its support
    let (sa_lo, _) = range_of(sa.iter().map(|&p| frame.along(p)));
    let (_, sb_hi) = range_of(sb.iter().map(|&p| frame.along(p)));
    if sb_hi <= sa_lo {
        return 0.0;
    }

    let mut cuts: Vec<f64> = sa
        .iter()
        .chain(sb.iter())
        .map(|&p| frame.across(p))
        .filter(|&t| t > t_lo && t < t_hi)
        .collect();
    cuts.push(t_lo);
    cuts.push(t_hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-11);

    let p = 3.0 - 2.0 * alpha;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let width = t1 - t0;
        if width <= 1e-11 {
            continue;
        }
        let (u1, u2) = (t0 + 0.25 * width, t0 + 0.75 * width);
        let la1 = line_jumps(a, &frame, u1);
        let la2 = line_jumps(a, &frame, u2);
        let lb1 = line_jumps(b, &frame, u1);
        let lb2 = line_jumps(b, &frame, u2);
        if la1.is_empty() || lb1.is_empty() {
            continue;
        }
        if la1.len() != la2.len() || lb1.len() != lb2.len() {
            // combinatorics changed inside the piece; integrate pointwise
            let mid = 0.5 * (t0 + t1);
            for (x, wt) in GAUSS8 {
                let t = mid + 0.5 * width * x;
                let la = line_jumps(a, &frame, t);
                let lb = line_jumps(b, &frame, t);
                total += 0.5 * width * wt * line_pair_sum(&la, &lb, p);
            }
            continue;
        }
        // jump locations are linear in t on the piece: extrapolate to the ends
        let ends = |j1: &[(f64, f64)], j2: &[(f64, f64)]| -> Vec<(f64, f64, f64)> {
            j1.iter()
                .zip(j2)
                .map(|(&(s1, c1), &(s2, c2))| {
                    let half = 0.5 * (s2 - s1);
                    (s1 - half, s2 + half, 0.5 * (c1 + c2))
                })
                .collect()
        };
        let ea = ends(&la1, &la2);
        let eb = ends(&lb1, &lb2);
        for &(a0, a1, c) in &ea {
            if c == 0.0 {
                continue;
            }
            for &(b0, b1, d) in &eb {
                if d == 0.0 {
                    continue;
                }
                total += c * d * linear_power_integral(b0 - a0, b1 - a1, width, p);
            }
        }
    }
    total * fraccalc::rgamma(4.0 - 2.0 * alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.5 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange(alpha))
    }
}

fn check_offset(mesh: &UniformMesh, offset: (i32, i32)) -> Result<()> {
    let lim = mesh.n() as i64 - 2;
    let (di, dj) = (offset.0 as i64, offset.1 as i64);
    if di.abs() > lim || dj.abs() > lim {
        return Err(Error::InvalidArgument(format!(
            "offset ({di}, {dj}) does not connect two interior DOFs of an n = {} mesh",
            mesh.n()
        )));
    }
    Ok(())
}

/// `(D^alpha_theta phi_0, D^alpha_{theta+pi} phi_offset)` for interior hats
/// whose nodes differ by `offset` lattice steps.
pub fn directional_entry(
    mesh: &UniformMesh,
    theta: f64,
    alpha: f64,
    offset: (i32, i32),
) -> Result<f64> {
    check_alpha(alpha)?;
    check_offset(mesh, offset)?;
    let scale = mesh.h().powf(2.0 - 2.0 * alpha);
    Ok(scale * unit_pair_entry((0.0, 0.0), (offset.0 as f64, offset.1 as f64), theta, alpha))
}

/// Same entry computed from absolute node positions, without using
/// translation invariance.
pub fn pair_entry(
    mesh: &UniformMesh,
    theta: f64,
    alpha: f64,
    node_a: (usize, usize),
    node_b: (usize, usize),
) -> Result<f64> {
    check_alpha(alpha)?;
    for &(i, j) in &[node_a, node_b] {
        if mesh.dof_index(i, j).is_none() {
            return Err(Error::InvalidArgument(format!(
                "node ({i}, {j}) is not interior"
            )));
        }
    }
    let scale = mesh.h().powf(2.0 - 2.0 * alpha);
    Ok(scale
        * unit_pair_entry(
            (node_a.0 as f64, node_a.1 as f64),
            (node_b.0 as f64, node_b.1 as f64),
            theta,
            alpha,
        ))
}

/// Offsets whose line families can couple the two hats for direction `theta`.
fn candidate_offsets(mesh: &UniformMesh, theta: f64) -> Vec<(i32, i32)> {
    let frame = Frame::new(theta);
    let star = star_vertices((0.0, 0.0));
    let (t_lo, t_hi) = range_of(star.iter().map(|&p| frame.across(p)));
    let (s_lo, s_hi) = range_of(star.iter().map(|&p| frame.along(p)));
    let lim = mesh.n() as i32 - 2;
    let mut out = Vec::new();
    for dj in -lim..=lim {
        for di in -lim..=lim {
            let d = (di as f64, dj as f64);
            let (dt, ds) = (frame.across(d), frame.along(d));
            let overlap = (t_hi.min(t_hi + dt)) - (t_lo.max(t_lo + dt));
            if overlap <= 1e-12 || s_hi + ds <= s_lo {
                continue;
            }
            out.push((di, dj));
        }
    }
    out
}

/// Entries for every offset in the `(2n-3)^2` window that survive the
/// relative drop tolerance (relative to the `(0,0)` entry).
pub fn assemble_directional_stiffness(
    mesh: &UniformMesh,
    theta: f64,
    alpha: f64,
    drop_tol: f64,
) -> Result<StiffnessEntryTable> {
    check_alpha(alpha)?;
    if !(drop_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "drop tolerance must be non-negative, got {drop_tol}"
        )));
    }
    let scale = mesh.h().powf(2.0 - 2.0 * alpha);
    let offsets = candidate_offsets(mesh, theta);
    let values = par::map_slice(&offsets, |&(di, dj)| {
        scale * unit_pair_entry((0.0, 0.0), (di as f64, dj as f64), theta, alpha)
    });
    let diag = scale * unit_pair_entry((0.0, 0.0), (0.0, 0.0), theta, alpha);
    let threshold = drop_tol * diag.abs();
    let mut table = OffsetTable::default();
    let mut cutoff = 0;
    for (&off, &v) in offsets.iter().zip(&values) {
        if !(v.abs() < threshold) {
            table.insert(off, v);
            cutoff = cutoff.max(off.0.abs()).max(off.1.abs());
        }
    }
    Ok(StiffnessEntryTable {
        theta,
        alpha,
        table,
        cutoff,
    })
}

/// P1 mass matrix stencil: `h^2/2` on the diagonal and `h^2/12` for each of
/// the six edge neighbours.
pub fn assemble_mass(mesh: &UniformMesh) -> OffsetTable {
    let h2 = mesh.h() * mesh.h();
    let mut t = OffsetTable::default();
    t.insert((0, 0), h2 / 2.0);
    for off in NEIGHBOURS {
        t.insert(off, h2 / 12.0);
    }
    t
}

/// Assembles `A = -sum_k p_k S_{theta_k} + c M` as a translation-invariant
/// symbol. Each antipodal pair contributes `-p (S_theta + S_theta^T)`, which
/// makes the symbol exactly symmetric.
pub fn build_operator(
    mesh: &UniformMesh,
    alpha: f64,
    c: f64,
    measure: &DirectionalMeasure,
    drop_tol: f64,
) -> Result<FractionalOperator> {
    check_alpha(alpha)?;
    if !(c >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reaction coefficient must be non-negative, got {c}"
        )));
    }
    let mut combined: BTreeMap<(i32, i32), f64> = BTreeMap::new();
    for dir in measure.pair_representatives() {
        let s = assemble_directional_stiffness(mesh, dir.theta, alpha, drop_tol)?;
        for ((di, dj), v) in s.table.iter() {
            *combined.entry((di, dj)).or_insert(0.0) -= dir.weight * v;
            *combined.entry((-di, -dj)).or_insert(0.0) -= dir.weight * v;
        }
    }
    if c != 0.0 {
        let lim = mesh.n() as i32 - 2;
        for (off, v) in assemble_mass(mesh).iter() {
            if off.0.abs() > lim || off.1.abs() > lim {
                continue;
            }
            *combined.entry(off).or_insert(0.0) += c * v;
        }
    }
    let symbol = Symbol::from_entries(mesh.side(), combined)?;
    FractionalOperator::new(mesh, alpha, c, measure.clone(), symbol)
}
