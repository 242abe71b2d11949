//! Sample-averaged gap and half-system entropy of random all-to-all fermions.

use mfrg_core::entangle::{self, fermion_half_entropy};
use mfrg_core::model::{Bipartition, FermionModel};
use mfrg_core::seed::derive_seed;
use mfrg_core::solve::{fock, solve_fermion};
use mfrg_core::GroundState;
use rayon::prelude::*;

use super::grid3;
use crate::settings::RunConfig;
use crate::table::Table;
use crate::{CliError, Result};

pub const COLUMNS: [&str; 9] =
    ["n", "mu", "kappa", "samples", "mean_gap", "std_gap", "mean_entropy", "std_entropy", "base_seed"];

/// Default pairing grid: six values between 0 and 100.
pub const DEFAULT_KAPPA: [f64; 6] = [0.0, 0.04, 0.2, 1.0, 5.0, 100.0];

/// Largest mode count accepted by the Fock-space cross-check.
pub const ORACLE_MAX_N: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub parity_strict: bool,
    /// Use `t = 0` instead of random hopping.
    pub zero_hopping: bool,
    /// Also solve every sample in Fock space and record the largest deviation.
    pub oracle: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub e0: f64,
    pub gap: f64,
    pub entropy: f64,
    /// `max(|ΔE0|, |Δgap|, |ΔS|)` against Fock space, when requested.
    pub oracle_deviation: Option<f64>,
}

/// Seed of one sample, mixed from the grid point and the sample index.
pub fn sample_seed(base: u64, n: usize, mu: f64, kappa: f64, index: usize) -> u64 {
    derive_seed(base, &[n as u64, mu.to_bits(), kappa.to_bits(), index as u64])
}

pub fn solve_sample(n: usize, mu: f64, kappa: f64, seed: u64, opts: Options) -> Result<Sample> {
    let model = if opts.zero_hopping { FermionModel::zero_hopping(n, kappa, mu)? } else { FermionModel::random(n, kappa, mu, seed)? };
    let gs = solve_fermion(&model, opts.parity_strict)?;
    let GroundState::Covariance(cs) = &gs.state else {
        unreachable!("the quadratic solver returns covariance states")
    };
    let half: Vec<usize> = (0..n / 2).collect();
    let entropy = fermion_half_entropy(cs, &half)?;
    let oracle_deviation = if opts.oracle {
        let f = fock::solve(&model)?;
        let gap = if opts.parity_strict { f.gap_same_parity } else { f.gap };
        let s = entangle::entropy(&entangle::schmidt(&f.vector, &vec![2; n], &Bipartition::half(n))?);
        Some((gs.e0 - f.e0).abs().max((gs.gap - gap).abs()).max((entropy - s).abs()))
    } else {
        None
    };
    Ok(Sample { e0: gs.e0, gap: gs.gap, entropy, oracle_deviation })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FermionRow {
    pub n: usize,
    pub mu: f64,
    pub kappa: f64,
    pub samples: usize,
    pub mean_gap: f64,
    pub std_gap: f64,
    pub mean_entropy: f64,
    pub std_entropy: f64,
    pub oracle_max_deviation: Option<f64>,
}

/// Mean and sample standard deviation, summed in index order.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

pub fn options(cfg: &RunConfig) -> Result<Options> {
    Ok(Options {
        parity_strict: cfg.get_or("fermion.parity_strict", false)?,
        zero_hopping: cfg.get_or("fermion.zero_hopping", false)?,
        oracle: cfg.get_or("fermion.oracle", false)?,
    })
}

pub fn rows(cfg: &RunConfig) -> Result<Vec<FermionRow>> {
    let ns: Vec<usize> = cfg.grid("fermion.n", &[50, 100, 200])?;
    let mus: Vec<f64> = cfg.grid("fermion.mu", &[0.0, 0.04, 1.0])?;
    let kappas: Vec<f64> = cfg.grid("fermion.kappa", &DEFAULT_KAPPA)?;
    let opts = options(cfg)?;
    if let Some(n) = ns.iter().find(|&&n| n < 2) {
        return Err(CliError::Usage(format!("fermion.n must be at least 2, found {n}")));
    }
    if opts.oracle {
        if let Some(n) = ns.iter().find(|&&n| n > ORACLE_MAX_N) {
            return Err(CliError::Usage(format!("Fock-space cross-check needs n <= {ORACLE_MAX_N}, found {n}")));
        }
    }
    let points = grid3(&ns, &mus, &kappas);
    let samples = cfg.samples;
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..samples).map(move |s| (p, s))).collect();
    let base = cfg.base_seed;
    let solved: Vec<Sample> = cfg.install(|| {
        jobs.par_iter()
            .map(|&(p, s)| {
                let (n, mu, k) = points[p];
                solve_sample(n, mu, k, sample_seed(base, n, mu, k, s), opts)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(points
        .iter()
        .zip(solved.chunks(samples))
        .map(|(&(n, mu, kappa), chunk)| {
            let gaps: Vec<f64> = chunk.iter().map(|s| s.gap).collect();
            let ents: Vec<f64> = chunk.iter().map(|s| s.entropy).collect();
            let (mean_gap, std_gap) = mean_std(&gaps);
            let (mean_entropy, std_entropy) = mean_std(&ents);
            let oracle_max_deviation = opts.oracle.then(|| chunk.iter().filter_map(|s| s.oracle_deviation).fold(0.0, f64::max));
            FermionRow { n, mu, kappa, samples, mean_gap, std_gap, mean_entropy, std_entropy, oracle_max_deviation }
        })
        .collect())
}

pub fn run(cfg: &RunConfig) -> Result<Table> {
    let oracle = options(cfg)?.oracle;
    let mut columns = COLUMNS.to_vec();
    if oracle {
        columns.push("oracle_max_deviation");
    }
    let mut t = Table::new(cfg.header_comment(), &columns);
    for r in rows(cfg)? {
        let mut row = vec![
            r.n.into(),
            r.mu.into(),
            r.kappa.into(),
            r.samples.into(),
            r.mean_gap.into(),
            r.std_gap.into(),
            r.mean_entropy.into(),
            r.std_entropy.into(),
            cfg.base_seed.into(),
        ];
        if oracle {
            row.push(r.oracle_max_deviation.into());
        }
        t.push(row);
    }
    Ok(t)
}
