//! Ground states, first excitations and gaps.

mod dicke;
mod fermion;
pub mod fock;
mod lanczos;

pub use dicke::{lmg_total_spin_sector, solve_lmg_dicke, DickeState};
pub(crate) use dicke::ln_binomial;
pub use fermion::{solve_fermion, CovarianceState};
pub use lanczos::{extremal_eigenvalue, solve_lanczos, LanczosOptions};

use crate::error::{Error, Result};
use crate::linalg::{self, C64, ZERO};
use crate::model::FullyConnectedHamiltonian;
use crate::operator::LinearOperator;

/// Ground states closer than this to the next level count as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum GroundState {
    /// Amplitudes in the product basis; site 0 is the most significant digit.
    FullVector { dims: Vec<usize>, amplitudes: Vec<C64> },
    Dicke(DickeState),
    Covariance(CovarianceState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateSolution {
    pub state: GroundState,
    pub e0: f64,
    /// Second-lowest eigenvalue; infinite for a one-dimensional space.
    pub e1: f64,
    pub gap: f64,
    /// `‖H v − E0 v‖` for vector representations, zero for the closed-form routes.
    pub residual: f64,
    pub degenerate: bool,
    /// For the Dicke route: whether the symmetric-sector gap equals the global gap.
    pub sector_cross_check: Option<bool>,
}

impl GroundStateSolution {
    pub(crate) fn from_vector(dims: Vec<usize>, amplitudes: Vec<C64>, e0: f64, e1: f64, residual: f64) -> Self {
        let gap = e1 - e0;
        Self {
            state: GroundState::FullVector { dims, amplitudes },
            e0,
            e1,
            gap,
            residual,
            degenerate: gap < DEGENERACY_THRESHOLD,
            sector_cross_check: None,
        }
    }

    pub fn vector(&self) -> Option<&[C64]> {
        match &self.state {
            GroundState::FullVector { amplitudes, .. } => Some(amplitudes),
            _ => None,
        }
    }

    pub fn dims(&self) -> Option<&[usize]> {
        match &self.state {
            GroundState::FullVector { dims, .. } => Some(dims),
            _ => None,
        }
    }

    /// The full product-basis vector, expanding Dicke coefficients if needed.
    pub fn to_full_vector(&self) -> Result<(Vec<usize>, Vec<C64>)> {
        match &self.state {
            GroundState::FullVector { dims, amplitudes } => Ok((dims.clone(), amplitudes.clone())),
            GroundState::Dicke(ds) => Ok((vec![2; ds.n], ds.to_full_vector()?)),
            GroundState::Covariance(_) => {
                Err(Error::InvalidArgument("covariance states have no product-basis vector here".into()))
            }
        }
    }
}

/// Exact diagonalization of a fully connected Hamiltonian.
pub fn solve_dense(h: &FullyConnectedHamiltonian) -> Result<GroundStateSolution> {
    let m = h.assemble_dense()?;
    Ok(solve_dense_matrix(&m, h.dims(), h))
}

/// Exact diagonalization of any operator via its dense form.
pub fn solve_dense_operator(op: &dyn LinearOperator, dims: Vec<usize>) -> GroundStateSolution {
    let m = op.to_dense();
    solve_dense_matrix(&m, dims, op)
}

fn solve_dense_matrix(m: &linalg::CMat, dims: Vec<usize>, op: &dyn LinearOperator) -> GroundStateSolution {
    let (vals, vecs) = linalg::eigh(m);
    let mut v: Vec<C64> = vecs.column(0).iter().copied().collect();
    linalg::normalize(&mut v);
    linalg::fix_phase(&mut v);
    let e1 = vals.get(1).copied().unwrap_or(f64::INFINITY);
    let residual = residual(op, &v, vals[0]);
    GroundStateSolution::from_vector(dims, v, vals[0], e1, residual)
}

/// Dense for operators that prefer it, Lanczos otherwise.
pub fn solve_auto(op: &dyn LinearOperator, dims: Vec<usize>, opts: &LanczosOptions) -> Result<GroundStateSolution> {
    if op.prefers_dense() || op.dim() <= 64 {
        Ok(solve_dense_operator(op, dims))
    } else {
        solve_lanczos(op, dims, opts)
    }
}

pub(crate) fn residual(op: &dyn LinearOperator, v: &[C64], e: f64) -> f64 {
    let mut hv = vec![ZERO; v.len()];
    op.apply(v, &mut hv);
    hv.iter().zip(v).map(|(a, b)| (a - b * e).norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨v|H|v⟩` for a unit vector.
pub fn expectation(op: &dyn LinearOperator, v: &[C64]) -> f64 {
    let mut hv = vec![ZERO; v.len()];
    op.apply(v, &mut hv);
    linalg::dotc(v, &hv).re
}
