//! Quadratic fermion Hamiltonians in the Majorana representation.
//!
//! With `c_j = (a_j + i b_j)/2` the model reads
//! `H = tr(h)/2 + (i/2) sum_pq M_pq a_p b_q` where `M = h - D` and `D` is
//! the antisymmetric pairing matrix (`D_pq = kappa/n` for `p < q`). The SVD
//! `M = U S V^T` gives quasiparticle energies `S` and the ground-state
//! correlations `i<a_p b_q> = -(U V^T)_pq`.

use nalgebra::DMatrix;

use super::{GroundState, GroundStateSolution, DEGENERACY_THRESHOLD};
use crate::error::Result;
use crate::model::FermionModel;

/// Majorana covariance `Gamma_xy = i<[x, y]>/2` in the interleaved order
/// `(a_0, b_0, a_1, b_1, ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub n: usize,
    pub gamma: DMatrix<f64>,
    /// Quasiparticle energies, ascending and non-negative.
    pub energies: Vec<f64>,
}

impl CovarianceState {
    /// `max |Gamma^2 + 1|`.
    pub fn purity_defect(&self) -> f64 {
        let g2 = &self.gamma * &self.gamma;
        let dim = g2.nrows();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let target = if i == j { -1.0 } else { 0.0 };
                worst = worst.max((g2[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Ground state of the quadratic model. With `parity_strict` the gap is the
/// lowest excitation preserving fermion parity, `eps_1 + eps_2`.
pub fn solve_fermion(model: &FermionModel, parity_strict: bool) -> Result<GroundStateSolution> {
    let n = model.n;
    let h = model.single_particle();
    let delta = model.pairing();
    let m = DMatrix::from_fn(n, n, |p, q| {
        let d = match p.cmp(&q) {
            std::cmp::Ordering::Less => delta,
            std::cmp::Ordering::Greater => -delta,
            std::cmp::Ordering::Equal => 0.0,
        };
        h[(p, q)] - d
    });
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let w = &u * &v_t;
    let mut energies: Vec<f64> = svd.singular_values.iter().copied().collect();
    energies.sort_by(f64::total_cmp);

    let mut gamma = DMatrix::zeros(2 * n, 2 * n);
    for p in 0..n {
        for q in 0..n {
            gamma[(2 * p, 2 * q + 1)] = -w[(p, q)];
            gamma[(2 * q + 1, 2 * p)] = w[(p, q)];
        }
    }
    let e0 = 0.5 * h.trace() - 0.5 * energies.iter().sum::<f64>();
    let gap = if parity_strict { energies[0] + energies[1] } else { energies[0] };
    Ok(GroundStateSolution {
        state: GroundState::Covariance(CovarianceState { n, gamma, energies }),
        e0,
        e1: e0 + gap,
        gap,
        residual: 0.0,
        degenerate: gap < DEGENERACY_THRESHOLD,
        sector_cross_check: None,
    })
}
