//! Level-by-level trace of a renormalization schedule.

use mfrg_core::mfrg::{run_mfrg_observed, NormMode, RenormalizedSystem, Schedule, StepOptions, StopReason};
use mfrg_core::model::ModelSpec;
use mfrg_core::solve::LanczosOptions;
use mfrg_core::{C64, FullyConnectedHamiltonian};

use crate::settings::RunConfig;
use crate::table::{Cell, Table};
use crate::{CliError, Result};

pub const COLUMNS: [&str; 13] = [
    "level",
    "n_level",
    "total_dim",
    "e0",
    "gap",
    "epsilon",
    "step_error",
    "lemma8_bound",
    "lemma8_gap_bound",
    "lemma8_applicable",
    "fidelity_to_exact",
    "stop_reason",
    "base_seed",
];

/// Largest level-0 dimension for which fidelities to the exact ground state are reported.
pub const DEFAULT_EXACT_LIMIT: usize = 1 << 16;

/// One row of the trace. Step quantities refer to the step that produced the level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub level: usize,
    pub n_level: usize,
    pub total_dim: usize,
    pub e0: f64,
    pub gap: f64,
    pub epsilon: Option<f64>,
    pub step_error: Option<f64>,
    pub lemma8_bound: Option<f64>,
    pub lemma8_gap_bound: Option<f64>,
    pub lemma8_applicable: Option<bool>,
    pub fidelity_to_exact: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub rows: Vec<LevelRow>,
    pub stop_reason: StopReason,
    pub system: RenormalizedSystem,
}

/// Run `schedule` on `h` and record every level.
pub fn trace(h: FullyConnectedHamiltonian, schedule: &Schedule, opts: &StepOptions, exact_limit: usize) -> Result<Trace> {
    let initial = RenormalizedSystem::initial(h, &opts.lanczos)?;
    let exact: Option<Vec<C64>> = (initial.total_dim() <= exact_limit).then(|| initial.ground_vector().to_vec());
    let mut rows = Vec::new();
    let system = run_mfrg_observed(initial, schedule, opts, |s| {
        let step = s.trace.last();
        rows.push(LevelRow {
            level: s.level,
            n_level: s.n_sites(),
            total_dim: s.total_dim(),
            e0: s.ground.e0,
            gap: s.ground.gap,
            epsilon: step.map(|r| r.epsilon),
            step_error: step.map(|r| r.step_error),
            lemma8_bound: step.map(|r| r.lemma8.fidelity_bound),
            lemma8_gap_bound: step.map(|r| r.lemma8.gap_bound),
            lemma8_applicable: step.map(|r| r.lemma8.applicable),
            fidelity_to_exact: exact.as_ref().map(|v| s.fidelity_to(v)),
        });
    })?;
    let stop_reason = system.stop_reason.expect("finished runs carry a stop reason");
    Ok(Trace { rows, stop_reason, system })
}

pub fn step_options(cfg: &RunConfig) -> Result<StepOptions> {
    let norm = match cfg.get_or("mfrg.norm", "exact".to_string())?.as_str() {
        "exact" => NormMode::Exact,
        "extensive" => NormMode::ExtensiveBound,
        other => return Err(CliError::Usage(format!("mfrg.norm must be exact or extensive, got {other}"))),
    };
    Ok(StepOptions {
        lanczos: LanczosOptions::default(),
        norm,
        enforce_lemma8: cfg.get_or("mfrg.enforce_lemma8", true)?,
        eps0: cfg.get_or("mfrg.eps0", 0.01)?,
    })
}

pub fn run(cfg: &RunConfig) -> Result<Table> {
    cfg.file.reject_unknown(|k| !k.starts_with("mfrg.") || matches!(k, "mfrg.norm" | "mfrg.enforce_lemma8" | "mfrg.eps0" | "mfrg.exact_limit"))?;
    let h = ModelSpec::from_file(&cfg.file)?.spin_hamiltonian()?;
    if !cfg.file.keys().any(|k| k.starts_with("level.")) {
        return Err(CliError::Usage("schedule needs level.N.block_size and level.N.z keys".into()));
    }
    let schedule = Schedule::from_file(&cfg.file)?;
    let opts = step_options(cfg)?;
    let exact_limit = cfg.get_or("mfrg.exact_limit", DEFAULT_EXACT_LIMIT)?;
    let tr = trace(h, &schedule, &opts, exact_limit)?;
    let mut t = Table::new(cfg.header_comment(), &COLUMNS);
    let last = tr.rows.len() - 1;
    for (i, r) in tr.rows.iter().enumerate() {
        t.push(vec![
            r.level.into(),
            r.n_level.into(),
            r.total_dim.into(),
            r.e0.into(),
            r.gap.into(),
            r.epsilon.into(),
            r.step_error.into(),
            r.lemma8_bound.into(),
            r.lemma8_gap_bound.into(),
            r.lemma8_applicable.map_or(Cell::Missing, Cell::from),
            r.fidelity_to_exact.into(),
            if i == last { tr.stop_reason.to_string().into() } else { Cell::Missing },
            cfg.base_seed.into(),
        ]);
    }
    Ok(t)
}
