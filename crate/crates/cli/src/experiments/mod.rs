//! One module per subcommand that produces a CSV.

pub mod fermion;
pub mod lmg;
pub mod mfrg;
pub mod mps;
pub mod verify;

use std::path::{Path, PathBuf};

use crate::settings::{Kind, RunConfig};
use crate::table::{self, Table};
use crate::Result;

/// A finished table plus the number of verify violations it contains.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub violations: usize,
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.kind {
        Kind::Lmg => lmg::run(cfg).map(Outcome::plain),
        Kind::Fermion => fermion::run(cfg).map(Outcome::plain),
        Kind::Verify => verify::run(cfg),
        Kind::Mfrg => mfrg::run(cfg).map(Outcome::plain),
        Kind::Mps => mps::run(cfg).map(Outcome::plain),
    }
}

impl Outcome {
    fn plain(table: Table) -> Self {
        Self { table, violations: 0 }
    }
}

/// Cartesian product in row-major order: the first list varies slowest.
pub fn grid3<A: Copy, B: Copy, C: Copy>(a: &[A], b: &[B], c: &[C]) -> Vec<(A, B, C)> {
    let mut out = Vec::with_capacity(a.len() * b.len() * c.len());
    for &x in a {
        for &y in b {
            for &z in c {
                out.push((x, y, z));
            }
        }
    }
    out
}

/// Run an experiment and write its CSV under `out_dir`; returns the CSV path.
pub fn run_to_file(cfg: &RunConfig, out_dir: &Path) -> Result<(PathBuf, Outcome)> {
    let path = cfg.output_path(out_dir);
    table::begin(&path, &cfg.header_comment())?;
    let outcome = run(cfg)?;
    table::finish(&path, &outcome.table)?;
    Ok((path, outcome))
}
