//! The full set of inequality checks over a seeded family of random instances.

use mfrg_core::linalg::CMat;
use mfrg_core::verify::{instance_family, theorem_suite, CheckReport, ConstantSet, Instance, NormChoice, SuiteOptions};
use mfrg_core::FullyConnectedHamiltonian;
use rayon::prelude::*;

use super::Outcome;
use crate::settings::RunConfig;
use crate::table::Table;
use crate::{CliError, Result};

pub const COLUMNS: [&str; 8] = ["check", "instance", "lhs", "rhs", "margin", "satisfied", "preconditions_met", "base_seed"];

pub fn suite_options(cfg: &RunConfig) -> Result<SuiteOptions> {
    let constants = match cfg.get_or("verify.constants", "supplement".to_string())?.as_str() {
        "supplement" => ConstantSet::Supplement,
        "main_text" => ConstantSet::MainText,
        other => return Err(CliError::Usage(format!("verify.constants must be supplement or main_text, got {other}"))),
    };
    let norm = match cfg.get_or("verify.norm", "exact".to_string())?.as_str() {
        "exact" => NormChoice::Exact,
        "extensive" => NormChoice::Extensive,
        other => return Err(CliError::Usage(format!("verify.norm must be exact or extensive, got {other}"))),
    };
    Ok(SuiteOptions { eps0: cfg.get_or("verify.eps0", 0.01)?, constants, norm })
}

/// A Hamiltonian with no terms: every state is a ground state.
pub fn degenerate_instance(n: usize) -> Result<Instance> {
    let h = FullyConnectedHamiltonian::new(2, vec![CMat::zeros(2, 2); n], vec![])?;
    Ok(Instance::solve("degenerate", h, 0)?)
}

pub fn reports(cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let count: usize = cfg.get_or("verify.count", 50)?;
    let sizes: Vec<usize> = cfg.grid("verify.n", &[6, 8])?;
    let d: usize = cfg.get_or("verify.d", 2)?;
    let with_degenerate: bool = cfg.get_or("verify.degenerate", false)?;
    let opts = suite_options(cfg)?;
    let specs = if sizes.is_empty() { Vec::new() } else { instance_family(count, &sizes, d, cfg.base_seed) };
    let per_instance: Vec<Vec<CheckReport>> = cfg.install(|| {
        specs
            .par_iter()
            .map(|s| -> Result<Vec<CheckReport>> { Ok(theorem_suite(&s.build()?, &opts)?) })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut out: Vec<CheckReport> = per_instance.into_iter().flatten().collect();
    if with_degenerate {
        out.extend(theorem_suite(&degenerate_instance(4)?, &opts)?);
    }
    Ok(out)
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let reports = reports(cfg)?;
    let mut t = Table::new(cfg.header_comment(), &COLUMNS);
    for r in &reports {
        t.push(vec![
            r.check.as_str().into(),
            r.instance.as_str().into(),
            r.lhs.into(),
            r.rhs.into(),
            r.margin.into(),
            r.satisfied.into(),
            r.preconditions_met.into(),
            cfg.base_seed.into(),
        ]);
    }
    let violations = reports.iter().filter(|r| r.is_violation()).count();
    Ok(Outcome { table: t, violations })
}
