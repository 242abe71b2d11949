//! Bond-dimension sweep of MPS compressions of a ground state.

use mfrg_core::entangle::{mps_region_check, to_mps};
use mfrg_core::linalg::{self, C64};
use mfrg_core::model::{Bipartition, ModelSpec};
use mfrg_core::solve::{solve_auto, solve_lmg_dicke, LanczosOptions};
use mfrg_core::verify::check_eckart_young;
use rayon::prelude::*;

use crate::settings::RunConfig;
use crate::table::Table;
use crate::{CliError, Result};

pub const COLUMNS: [&str; 5] = ["D", "recon_error", "max_region_lhs_over_size", "eckart_young_min_margin", "base_seed"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpsRow {
    pub bond: usize,
    /// `‖ψ - ψ_D‖` with `ψ_D` normalized.
    pub recon_error: f64,
    /// Largest `lhs / |X|` over contiguous regions `X`, the empirical δ.
    pub max_region_lhs_over_size: f64,
    /// Smallest `rhs - lhs` of the Schmidt-tail bound over all cuts.
    pub eckart_young_min_margin: f64,
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits.
pub fn ghz(n: usize) -> Vec<C64> {
    let mut v = vec![linalg::ZERO; 1 << n];
    let a = linalg::re(std::f64::consts::FRAC_1_SQRT_2);
    v[0] = a;
    v[(1 << n) - 1] = a;
    v
}

/// Full ground-state vector of a spin model, through the Dicke basis when possible.
pub fn ground_vector(spec: &ModelSpec) -> Result<(Vec<usize>, Vec<C64>)> {
    match *spec {
        ModelSpec::Lmg { n, gamma, h } if n % 2 == 0 => Ok(solve_lmg_dicke(n, gamma, h)?.to_full_vector()?),
        _ => {
            let h = spec.spin_hamiltonian()?;
            Ok(solve_auto(&h, h.dims(), &LanczosOptions::default())?.to_full_vector()?)
        }
    }
}

pub fn compress(state: &[C64], dims: &[usize], bond: usize) -> Result<MpsRow> {
    let n = dims.len();
    let order: Vec<usize> = (0..n).collect();
    let mps = to_mps(state, dims, &order, bond)?;
    let approx = mps.to_vector();
    let recon_error = state.iter().zip(&approx).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let mut delta = 0.0f64;
    for start in 0..n {
        for end in start + 1..=n {
            let region: Vec<usize> = (start..end).collect();
            let r = mps_region_check(&mps, state, dims, &region)?;
            delta = delta.max(r.lhs / r.size as f64);
        }
    }
    let mut margin = f64::INFINITY;
    for cut in 1..n {
        let region: Vec<usize> = (0..cut).collect();
        let rep = check_eckart_young("mps", state, &approx, dims, &Bipartition::new(n, &region)?)?;
        margin = margin.min(rep.margin);
    }
    Ok(MpsRow { bond, recon_error, max_region_lhs_over_size: delta, eckart_young_min_margin: margin })
}

pub fn rows(cfg: &RunConfig) -> Result<Vec<MpsRow>> {
    let bonds: Vec<usize> = cfg.grid("mps.bond", &[1, 2, 4, 8, 16, 32, 64])?;
    let (dims, state) = match cfg.get_or("mps.state", "ground".to_string())?.as_str() {
        "ground" => {
            if cfg.file.contains("mps.n") {
                return Err(CliError::Usage("mps.n applies to the ghz state; ground states take model.n".into()));
            }
            ground_vector(&ModelSpec::from_file(&cfg.file)?)?
        }
        "ghz" => {
            let n: usize = cfg.get_or("mps.n", 6)?;
            if !(2..=20).contains(&n) {
                return Err(CliError::Usage(format!("mps.n must be in 2..=20, got {n}")));
            }
            (vec![2; n], ghz(n))
        }
        other => return Err(CliError::Usage(format!("mps.state must be ground or ghz, got {other}"))),
    };
    cfg.install(|| bonds.par_iter().map(|&d| compress(&state, &dims, d)).collect())?
}

pub fn run(cfg: &RunConfig) -> Result<Table> {
    cfg.file.reject_unknown(|k| !k.starts_with("mps.") || matches!(k, "mps.bond" | "mps.state" | "mps.n"))?;
    let mut t = Table::new(cfg.header_comment(), &COLUMNS);
    for r in rows(cfg)? {
        t.push(vec![
            r.bond.into(),
            r.recon_error.into(),
            r.max_region_lhs_over_size.into(),
            r.eckart_young_min_margin.into(),
            cfg.base_seed.into(),
        ]);
    }
    Ok(t)
}
