//! Exact diagonalization of the quadratic fermion model in Fock space.
//!
//! Mode `j` maps to qubit `j` through the Jordan-Wigner ordering, with
//! qubit value 1 meaning occupied. Regions made of leading modes therefore
//! have the same reduced state as the corresponding leading qubits.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{re, C64};
use crate::model::FermionModel;

const MAX_MODES: usize = 14;

#[derive(Debug, Clone)]
pub struct FockSolution {
    pub e0: f64,
    pub gap: f64,
    /// Lowest excitation with the ground state's fermion parity.
    pub gap_same_parity: f64,
    /// Ground vector over `2^n` occupation states, mode 0 most significant.
    pub vector: Vec<C64>,
}

fn occupied(state: usize, mode: usize, n: usize) -> bool {
    (state >> (n - 1 - mode)) & 1 == 1
}

/// Apply `c_mode` (or `c_mode†`) to a basis state: new state and sign, or
/// `None` when it annihilates the state.
fn apply(state: usize, mode: usize, dagger: bool, n: usize) -> Option<(usize, f64)> {
    if occupied(state, mode, n) == dagger {
        return None;
    }
    let before = (0..mode).filter(|&l| occupied(state, l, n)).count();
    let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
    Some((state ^ (1 << (n - 1 - mode)), sign))
}

/// Apply a product of ladder operators, rightmost first.
fn apply_string(state: usize, ops: &[(usize, bool)], n: usize) -> Option<(usize, f64)> {
    let mut s = state;
    let mut sign = 1.0;
    for &(mode, dagger) in ops.iter().rev() {
        let (next, sg) = apply(s, mode, dagger, n)?;
        s = next;
        sign *= sg;
    }
    Some((s, sign))
}

pub fn hamiltonian(model: &FermionModel) -> Result<DMatrix<f64>> {
    let n = model.n;
    if n > MAX_MODES {
        return Err(Error::ResourceLimit(format!("{n} modes exceed the Fock-space limit {MAX_MODES}")));
    }
    let dim = 1usize << n;
    let h = model.single_particle();
    let delta = model.pairing();
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut add = |ops: &[(usize, bool)], amp: f64| {
            if amp == 0.0 {
                return;
            }
            if let Some((row, sign)) = apply_string(col, ops, n) {
                m[(row, col)] += amp * sign;
            }
        };
        for i in 0..n {
            for j in 0..n {
                add(&[(i, true), (j, false)], h[(i, j)]);
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                add(&[(i, true), (j, true)], delta);
                add(&[(j, false), (i, false)], delta);
            }
        }
    }
    Ok(m)
}

pub fn solve(model: &FermionModel) -> Result<FockSolution> {
    let m = hamiltonian(model)?;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let ground = eig.eigenvectors.column(order[0]);
    let parity_of = |col: usize| -> f64 {
        // expectation of (-1)^N
        let v = eig.eigenvectors.column(col);
        v.iter().enumerate().map(|(s, a)| if s.count_ones() % 2 == 0 { a * a } else { -a * a }).sum()
    };
    let p0 = parity_of(order[0]);
    let gap = eig.eigenvalues[order[1]] - e0;
    let gap_same_parity = order[1..]
        .iter()
        .find(|&&c| parity_of(c) * p0 > 0.5)
        .map_or(f64::INFINITY, |&c| eig.eigenvalues[c] - e0);
    Ok(FockSolution { e0, gap, gap_same_parity, vector: ground.iter().map(|&x| re(x)).collect() })
}
