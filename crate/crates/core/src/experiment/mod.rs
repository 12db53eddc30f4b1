//! Experiment driver: configuration, single runs, iteration-count tables and
//! CSV output.

mod load;
mod manufactured;

pub use load::{l2_error, load_vector};
pub use manufactured::{
    g, g_two_sided, manufactured_f, manufactured_f_example1, manufactured_u, G_COEFFS,
};

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::{build_operator, discretize_measure, MeasureSpec};
use crate::error::{Error, Result};
use crate::krylov::{estimate_condition, pcg, ConditionEstimate, SolveConfig, SolveReport};
use crate::mesh::{build_decomposition, build_mesh, Rect, UniformMesh};
use crate::operators::{read_symbol_file, write_symbol_file, FractionalOperator, SymbolFile};
use crate::schwarz::build_preconditioner;

/// Seed for the condition-number probes.
pub const PROBE_SEED: u64 = 0x5eed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol_infty: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    1000
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            tol_infty: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

impl SolverSpec {
    pub fn config(&self) -> SolveConfig {
        SolveConfig {
            tol_infty: self.tol_infty,
            max_iter: self.max_iter,
            ..SolveConfig::default()
        }
    }
}

/// One experiment. Mirrors the JSON config file field for field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// `[ax, bx, ay, by]`.
    #[serde(default = "default_bounds")]
    pub bounds: [f64; 4],
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub c: f64,
    #[serde(default = "default_measure")]
    pub measure: MeasureSpec,
    pub n: usize,
    pub m: usize,
    #[serde(default = "default_overlap")]
    pub overlap_cells: usize,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default = "default_example")]
    pub example: u8,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_drop_tol")]
    pub drop_tol: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_bounds() -> [f64; 4] {
    [0.0, 2.0, 0.0, 2.0]
}

fn default_alpha() -> f64 {
    0.75
}

fn default_measure() -> MeasureSpec {
    MeasureSpec::Axes4
}

fn default_overlap() -> usize {
    1
}

fn default_example() -> u8 {
    1
}

fn default_probes() -> usize {
    5
}

fn default_drop_tol() -> f64 {
    1e-12
}

impl ExperimentSpec {
    /// Defaults for the given example: four axis directions for example 1,
    /// sixteen midpoint directions of the uniform measure for example 2.
    pub fn new(example: u8, n: usize, m: usize, overlap_cells: usize) -> Self {
        Self {
            bounds: default_bounds(),
            alpha: default_alpha(),
            c: 0.0,
            measure: if example == 2 {
                MeasureSpec::Uniform(16)
            } else {
                MeasureSpec::Axes4
            },
            n,
            m,
            overlap_cells,
            solver: SolverSpec::default(),
            example,
            probes: default_probes(),
            drop_tol: default_drop_tol(),
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn rect(&self) -> Rect {
        let [ax, bx, ay, by] = self.bounds;
        Rect::new(ax, bx, ay, by)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.example == 1 || self.example == 2) {
            return Err(Error::Config(format!(
                "example must be 1 or 2, got {}",
                self.example
            )));
        }
        if self.bounds != default_bounds() {
            return Err(Error::Config(
                "the manufactured right-hand side is defined on [0, 2] x [0, 2]".into(),
            ));
        }
        if self.example == 1 && self.measure != MeasureSpec::Axes4 {
            return Err(Error::Config(
                "example 1 uses the four-axis measure (its exact solution depends on it)".into(),
            ));
        }
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return Err(Error::OrderOutOfRange(self.alpha));
        }
        if !(self.c >= 0.0) {
            return Err(Error::Config(format!(
                "c must be non-negative, got {}",
                self.c
            )));
        }
        if !(self.solver.tol_infty > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::Config(
                "solver tolerance and max_iter must be positive".into(),
            ));
        }
        if !(self.drop_tol >= 0.0) {
            return Err(Error::Config("drop_tol must be non-negative".into()));
        }
        discretize_measure(self.measure)?;
        let mesh = build_mesh(self.rect(), self.n)?;
        build_decomposition(&mesh, self.m, self.overlap_cells)?;
        Ok(())
    }

    /// Settings that determine the assembled operator and right-hand side.
    fn problem_key(&self) -> (usize, u64, u64, String, u64, u8) {
        (
            self.n,
            self.alpha.to_bits(),
            self.c.to_bits(),
            self.measure.to_string(),
            self.drop_tol.to_bits(),
            self.example,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub h: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    pub delta: f64,
    pub iterations: usize,
    pub converged: bool,
    pub cond_est: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub l2_error: Option<f64>,
    pub seconds: f64,
}

/// Assembled operator and right-hand side shared by runs that differ only
/// in the decomposition.
#[derive(Debug)]
pub struct Problem {
    pub mesh: UniformMesh,
    pub operator: FractionalOperator,
    pub rhs: Vec<f64>,
    pub example: u8,
}

fn cache_matches(file: &SymbolFile, spec: &ExperimentSpec, op_dirs: &[(f64, f64)]) -> bool {
    file.n as usize == spec.n
        && file.alpha == spec.alpha
        && file.c == spec.c
        && file.directions == op_dirs
}

/// Assembles the operator (or loads it from `cache` when the cached header
/// matches the spec, rewriting the cache otherwise) and the load vector.
pub fn prepare_problem(spec: &ExperimentSpec, cache: Option<&Path>) -> Result<Problem> {
    spec.validate()?;
    let mesh = build_mesh(spec.rect(), spec.n)?;
    let measure = discretize_measure(spec.measure)?;
    let dirs: Vec<(f64, f64)> = measure
        .directions()
        .iter()
        .map(|d| (d.theta, d.weight))
        .collect();
    let cached = match cache {
        Some(path) if path.exists() => match read_symbol_file(path) {
            Ok(file) if cache_matches(&file, spec, &dirs) => Some(file.into_operator(&mesh)?),
            _ => None,
        },
        _ => None,
    };
    let operator = match cached {
        Some(op) => op,
        None => {
            let op = build_operator(&mesh, spec.alpha, spec.c, &measure, spec.drop_tol)?;
            if let Some(path) = cache {
                write_symbol_file(path, &SymbolFile::from_operator(&op))?;
            }
            op
        }
    };
    let (alpha, c) = (spec.alpha, spec.c);
    let rhs = load_vector(&mesh, move |x, y| manufactured_f(x, y, alpha, c));
    Ok(Problem {
        mesh,
        operator,
        rhs,
        example: spec.example,
    })
}

/// Outcome of one preconditioned solve before it is flattened into a row.
#[derive(Debug)]
pub struct RunOutcome {
    pub row: ResultRow,
    pub report: SolveReport,
    pub condition: Option<ConditionEstimate>,
}

/// Builds the two-level preconditioner for `(m, overlap_cells)`, solves,
/// and optionally estimates the condition number of `B A`.
pub fn solve_problem(problem: &Problem, spec: &ExperimentSpec) -> Result<RunOutcome> {
    let start = Instant::now();
    let decomposition = build_decomposition(&problem.mesh, spec.m, spec.overlap_cells)?;
    let precond = build_preconditioner(&problem.operator, &decomposition, true)?;
    let report = pcg(
        &problem.operator,
        &precond,
        &problem.rhs,
        &spec.solver.config(),
    )?;
    let condition = if spec.probes > 0 {
        Some(estimate_condition(
            &problem.operator,
            &precond,
            spec.probes,
            PROBE_SEED,
        )?)
    } else {
        None
    };
    let l2 =
        (problem.example == 1).then(|| l2_error(&problem.mesh, &report.solution, manufactured_u));
    let seconds = start.elapsed().as_secs_f64();
    let row = ResultRow {
        h: problem.mesh.h(),
        big_h: decomposition.coarse_h(),
        delta: decomposition.delta(),
        iterations: report.iterations,
        converged: report.converged(),
        cond_est: condition.map(|c| c.condition()),
        lambda_min: condition.map(|c| c.lambda_min),
        lambda_max: condition.map(|c| c.lambda_max),
        l2_error: l2,
        seconds,
    };
    Ok(RunOutcome {
        row,
        report,
        condition,
    })
}

pub fn run_experiment(spec: &ExperimentSpec, cache: Option<&Path>) -> Result<RunOutcome> {
    let problem = prepare_problem(spec, cache)?;
    solve_problem(&problem, spec)
}

/// One row of a user grid file: a JSON array of these objects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRow {
    pub n: usize,
    pub m: usize,
    pub overlap_cells: usize,
}

pub fn load_grid(path: &Path) -> Result<Vec<GridRow>> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("grid file: {e}")))
}

/// Default specs of example `table` for each grid row.
pub fn grid_specs(table: u8, rows: &[GridRow]) -> Result<Vec<ExperimentSpec>> {
    if !(table == 1 || table == 2) {
        return Err(Error::Config(format!("table must be 1 or 2, got {table}")));
    }
    let specs: Vec<ExperimentSpec> = rows
        .iter()
        .map(|r| ExperimentSpec::new(table, r.n, r.m, r.overlap_cells))
        .collect();
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

/// The reference grid: `(n, m) in {(64, 8), (128, 16), (256, 32)}` with
/// overlaps of 1, 2 and 4 fine cells.
pub fn table_specs(table: u8) -> Result<Vec<ExperimentSpec>> {
    let mut rows = Vec::new();
    for (n, m) in [(64, 8), (128, 16), (256, 32)] {
        for overlap_cells in [1, 2, 4] {
            rows.push(GridRow {
                n,
                m,
                overlap_cells,
            });
        }
    }
    grid_specs(table, &rows)
}

/// Runs every spec, assembling each distinct operator once. Rows sharing an
/// operator run on up to `jobs` worker threads; the output keeps input order.
pub fn run_table(specs: &[ExperimentSpec], jobs: usize) -> Result<Vec<ResultRow>> {
    for s in specs {
        s.validate()?;
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, s) in specs.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|(first, _)| specs[*first].problem_key() == s.problem_key())
        {
            Some((_, members)) => members.push(i),
            None => groups.push((i, vec![i])),
        }
    }
    let mut rows: Vec<Option<ResultRow>> = vec![None; specs.len()];
    for (first, members) in groups {
        let problem = crate::par::with_threads(jobs, || prepare_problem(&specs[first], None))?;
        let results = crate::par::with_threads(jobs, || {
            crate::par::map_slice(&members, |&i| solve_problem(&problem, &specs[i]))
        });
        for (&i, r) in members.iter().zip(results) {
            rows[i] = Some(r?.row);
        }
    }
    Ok(rows
        .into_iter()
        .map(|r| r.expect("every row solved"))
        .collect())
}

/// `max - min` iteration count, zero for no rows.
pub fn iteration_spread(rows: &[ResultRow]) -> usize {
    let max = rows.iter().map(|r| r.iterations).max().unwrap_or(0);
    let min = rows.iter().map(|r| r.iterations).min().unwrap_or(0);
    max - min
}

pub const CSV_HEADER: [&str; 7] = [
    "h", "H", "delta", "iters", "cond_est", "l2_error", "seconds",
];

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Writes rows as CSV; floats carry 17 significant digits.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            fmt_float(r.h),
            fmt_float(r.big_h),
            fmt_float(r.delta),
            r.iterations.to_string(),
            fmt_opt(r.cond_est),
            fmt_opt(r.l2_error),
            fmt_float(r.seconds),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
