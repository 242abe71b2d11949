//! Ground states, entanglement and mean-field renormalization for fully
//! connected quantum lattice models.

pub mod config;
pub mod entangle;
pub mod error;
pub mod linalg;
pub mod mfrg;
pub mod model;
pub mod operator;
pub mod seed;
pub mod solve;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};
pub use model::{build_lmg, build_random_gapped, Bipartition, Channel, FermionModel, FullyConnectedHamiltonian, ModelSpec};
pub use operator::LinearOperator;
pub use solve::{GroundState, GroundStateSolution};
