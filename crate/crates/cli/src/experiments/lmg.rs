//! Ground-state energy, gap and half-chain entropy of the LMG model over a grid.

use mfrg_core::entangle::dicke_half_entropy;
use mfrg_core::solve::solve_lmg_dicke;
use mfrg_core::GroundState;
use rayon::prelude::*;

use super::grid3;
use crate::settings::RunConfig;
use crate::table::{Cell, Table};
use crate::{CliError, Result};

pub const COLUMNS: [&str; 10] =
    ["n", "gamma", "h", "e0", "e1", "gap", "entropy_half", "gap_asymptote", "sector_gap_is_global", "base_seed"];

/// `2 sqrt((h - 1)(h - γ))`, defined in the paramagnetic phase `h > max(1, γ)`.
pub fn gap_asymptote(gamma: f64, h: f64) -> Option<f64> {
    (h > 1.0 && h > gamma).then(|| 2.0 * ((h - 1.0) * (h - gamma)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmgRow {
    pub n: usize,
    pub gamma: f64,
    pub h: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
    pub entropy_half: f64,
    pub sector_gap_is_global: Option<bool>,
}

pub fn solve_point(n: usize, gamma: f64, h: f64) -> Result<LmgRow> {
    let gs = solve_lmg_dicke(n, gamma, h)?;
    let GroundState::Dicke(ds) = &gs.state else {
        unreachable!("the Dicke solver returns Dicke states")
    };
    Ok(LmgRow {
        n,
        gamma,
        h,
        e0: gs.e0,
        e1: gs.e1,
        gap: gs.gap,
        entropy_half: dicke_half_entropy(ds)?,
        sector_gap_is_global: gs.sector_cross_check,
    })
}

pub fn rows(cfg: &RunConfig) -> Result<Vec<LmgRow>> {
    let ns: Vec<usize> = cfg.grid("lmg.n", &[50, 100, 200, 400])?;
    let gammas: Vec<f64> = cfg.grid("lmg.gamma", &[0.8])?;
    let hs: Vec<f64> = cfg.grid("lmg.h", &[1.5, 2.0])?;
    if let Some(n) = ns.iter().find(|&&n| n < 2 || n % 2 == 1) {
        return Err(CliError::Usage(format!("lmg.n must hold even values >= 2, found {n}")));
    }
    let points = grid3(&ns, &gammas, &hs);
    cfg.install(|| points.par_iter().map(|&(n, g, h)| solve_point(n, g, h)).collect())?
}

pub fn run(cfg: &RunConfig) -> Result<Table> {
    let mut t = Table::new(cfg.header_comment(), &COLUMNS);
    for r in rows(cfg)? {
        t.push(vec![
            r.n.into(),
            r.gamma.into(),
            r.h.into(),
            r.e0.into(),
            r.e1.into(),
            r.gap.into(),
            r.entropy_half.into(),
            gap_asymptote(r.gamma, r.h).into(),
            r.sector_gap_is_global.map_or(Cell::Missing, Cell::from),
            cfg.base_seed.into(),
        ]);
    }
    Ok(t)
}
