//! Fixed inputs for the kernel benchmarks, built once per group.

use mfrg_core::mfrg::{LevelSpec, RenormalizedSystem, Schedule};
use mfrg_core::solve::{solve_lmg_dicke, LanczosOptions};
use mfrg_core::{build_lmg, FermionModel, FullyConnectedHamiltonian, C64};

pub const GAMMA: f64 = 0.8;
pub const FIELD: f64 = 1.5;

pub fn lmg(n: usize) -> FullyConnectedHamiltonian {
    build_lmg(n, GAMMA, FIELD).expect("valid LMG parameters")
}

/// Product-basis ground state of the LMG model, expanded from the Dicke basis.
pub fn lmg_ground(n: usize) -> (Vec<usize>, Vec<C64>) {
    solve_lmg_dicke(n, GAMMA, FIELD)
        .and_then(|gs| gs.to_full_vector())
        .expect("Dicke ground state")
}

pub fn fermions(n: usize) -> FermionModel {
    FermionModel::random(n, 1.0, 1.0, 7).expect("valid fermion parameters")
}

/// Level 0 of the LMG model, ready for a coarse-graining step.
pub fn level0(n: usize) -> RenormalizedSystem {
    RenormalizedSystem::initial(lmg(n), &LanczosOptions::default()).expect("level 0 ground state")
}

pub fn blocks_of(size: usize, z: usize) -> Schedule {
    Schedule::new(vec![LevelSpec::uniform(size, z)], 1).expect("valid schedule")
}
