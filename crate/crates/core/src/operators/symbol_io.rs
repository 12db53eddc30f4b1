//! Binary symbol cache (little endian):
//!
//! ```text
//! b"FSYM" | u32 version = 1 | u32 n | u32 directions | f64 alpha | f64 c
//! directions x (f64 theta, f64 weight)
//! entries until EOF: (i32 di, i32 dj, f64 value)
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{FractionalOperator, Symbol};
use crate::assembly::{Direction, DirectionalMeasure};
use crate::error::{Error, Result};
use crate::mesh::UniformMesh;

const MAGIC: &[u8; 4] = b"FSYM";
const VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 4 + 4 + 8 + 8;

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolFile {
    pub n: u32,
    pub alpha: f64,
    pub c: f64,
    pub directions: Vec<(f64, f64)>,
    pub entries: Vec<((i32, i32), f64)>,
}

impl SymbolFile {
    pub fn from_operator(op: &FractionalOperator) -> Self {
        Self {
            n: op.mesh().n() as u32,
            alpha: op.alpha(),
            c: op.reaction(),
            directions: op
                .measure()
                .directions()
                .iter()
                .map(|d| (d.theta, d.weight))
                .collect(),
            entries: op.symbol().nonzeros(),
        }
    }

    /// Rebuilds the operator on `mesh`, which must have the stored `n`.
    pub fn into_operator(self, mesh: &UniformMesh) -> Result<FractionalOperator> {
        if mesh.n() != self.n as usize {
            return Err(Error::Format(format!(
                "file holds n = {}, mesh has n = {}",
                self.n,
                mesh.n()
            )));
        }
        let measure = DirectionalMeasure::new(
            self.directions
                .iter()
                .map(|&(theta, weight)| Direction { theta, weight })
                .collect(),
        )?;
        let symbol = Symbol::from_entries(mesh.side(), self.entries)
            .map_err(|e| Error::Format(e.to_string()))?;
        FractionalOperator::new(mesh, self.alpha, self.c, measure, symbol)
    }
}

pub fn write_symbol_file(path: &Path, file: &SymbolFile) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER + 16 * (file.directions.len() + file.entries.len()));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&file.n.to_le_bytes());
    buf.extend_from_slice(&(file.directions.len() as u32).to_le_bytes());
    buf.extend_from_slice(&file.alpha.to_le_bytes());
    buf.extend_from_slice(&file.c.to_le_bytes());
    for &(t, p) in &file.directions {
        buf.extend_from_slice(&t.to_le_bytes());
        buf.extend_from_slice(&p.to_le_bytes());
    }
    for &((di, dj), v) in &file.entries {
        buf.extend_from_slice(&di.to_le_bytes());
        buf.extend_from_slice(&dj.to_le_bytes());
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn i32_at(b: &[u8], at: usize) -> i32 {
    i32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn read_symbol_file(path: &Path) -> Result<SymbolFile> {
    parse(&fs::read(path)?)
}

fn parse(b: &[u8]) -> Result<SymbolFile> {
    if b.len() < HEADER || &b[..4] != MAGIC {
        return Err(Error::Format("missing FSYM header".into()));
    }
    let version = u32_at(b, 4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u32_at(b, 8);
    let ndir = u32_at(b, 12) as usize;
    let alpha = f64_at(b, 16);
    let c = f64_at(b, 24);
    let body = &b[HEADER..];
    if body.len() < 16 * ndir || !(body.len() - 16 * ndir).is_multiple_of(16) {
        return Err(Error::Format(format!(
            "body of {} bytes does not hold {ndir} directions plus whole entries",
            body.len()
        )));
    }
    let directions = (0..ndir)
        .map(|k| (f64_at(body, 16 * k), f64_at(body, 16 * k + 8)))
        .collect();
    let rest = &body[16 * ndir..];
    let entries: Vec<((i32, i32), f64)> = rest
        .chunks_exact(16)
        .map(|e| ((i32_at(e, 0), i32_at(e, 4)), f64_at(e, 8)))
        .collect();

    let lookup: HashMap<(i32, i32), f64> = entries.iter().copied().collect();
    if lookup.len() != entries.len() {
        return Err(Error::Format("duplicate offsets".into()));
    }
    for (&(di, dj), &v) in &lookup {
        let w = lookup.get(&(-di, -dj)).copied().unwrap_or(0.0);
        if (v - w).abs() > 1e-12 * v.abs().max(w.abs()) {
            return Err(Error::Format(format!(
                "entries at ({di}, {dj}) and ({}, {}) differ",
                -di, -dj
            )));
        }
    }
    Ok(SymbolFile {
        n,
        alpha,
        c,
        directions,
        entries,
    })
}
