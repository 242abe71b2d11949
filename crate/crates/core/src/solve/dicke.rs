//! LMG model in the collective-spin basis.

use statrs::function::gamma::ln_gamma;

use super::{GroundState, GroundStateSolution, DEGENERACY_THRESHOLD};
use crate::error::{Error, Result};
use crate::linalg::{self, re, C64};

/// Coefficients over permutation-symmetric states `|D_k⟩`, where `k` counts
/// down spins.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeState {
    pub n: usize,
    pub coefficients: Vec<f64>,
}

/// Largest `n` whose Dicke state can be expanded into the product basis.
const MAX_EXPANSION_SITES: usize = 24;

pub(crate) fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

impl DickeState {
    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Product-basis amplitudes; bit value 1 on a site means spin down.
    pub fn to_full_vector(&self) -> Result<Vec<C64>> {
        if self.n > MAX_EXPANSION_SITES {
            return Err(Error::ResourceLimit(format!("{} spins too many to expand", self.n)));
        }
        let amp: Vec<f64> = (0..=self.n)
            .map(|k| self.coefficients[k] * (-0.5 * ln_binomial(self.n, k)).exp())
            .collect();
        Ok((0..1usize << self.n).map(|x| re(amp[x.count_ones() as usize])).collect())
    }
}

/// Tridiagonal blocks of the LMG Hamiltonian at total spin `two_s / 2`,
/// split by the parity of `j = S - m`. Each block is `(diag, off, j values)`.
fn sector_blocks(n: usize, two_s: usize, gamma: f64, h: f64) -> [(Vec<f64>, Vec<f64>, Vec<usize>); 2] {
    let nf = n as f64;
    let s = two_s as f64 / 2.0;
    let cas = s * (s + 1.0);
    let diag = |j: usize| {
        let m = s - j as f64;
        -(1.0 + gamma) * (cas - m * m) / nf + (1.0 + gamma) / 2.0 - 2.0 * h * m
    };
    // ⟨m|S+²|m-2⟩ coupling j and j+2
    let off = |j: usize| {
        let lo = s - j as f64 - 2.0;
        let amp = ((cas - lo * (lo + 1.0)) * (cas - (lo + 1.0) * (lo + 2.0))).sqrt();
        -(1.0 - gamma) / 2.0 * amp / nf
    };
    let build = |start: usize| {
        let js: Vec<usize> = (start..=two_s).step_by(2).collect();
        let d = js.iter().map(|&j| diag(j)).collect();
        let o = js.iter().take(js.len().saturating_sub(1)).map(|&j| off(j)).collect();
        (d, o, js)
    };
    [build(0), build(1)]
}

/// All eigenvalues (ascending) of the LMG Hamiltonian restricted to one
/// total-spin multiplet, counted once per multiplet.
pub fn lmg_total_spin_sector(n: usize, two_s: usize, gamma: f64, h: f64) -> Vec<f64> {
    let mut vals: Vec<f64> = sector_blocks(n, two_s, gamma, h)
        .iter()
        .filter(|(d, _, _)| !d.is_empty())
        .flat_map(|(d, o, _)| linalg::tridiagonal_eigenvalues(d, o))
        .collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Ground state and gap of the LMG model inside the maximal-spin sector.
pub fn solve_lmg_dicke(n: usize, gamma: f64, h: f64) -> Result<GroundStateSolution> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::InvalidArgument(format!("Dicke solver needs even n >= 2, got {n}")));
    }
    if n > 10_000 {
        return Err(Error::ResourceLimit(format!("n = {n} exceeds 10^4")));
    }
    let blocks = sector_blocks(n, n, gamma, h);
    let spectra: Vec<Vec<f64>> = blocks.iter().map(|(d, o, _)| linalg::tridiagonal_eigenvalues(d, o)).collect();
    let ground_block = if spectra[0][0] <= spectra[1][0] { 0 } else { 1 };
    let mut all: Vec<f64> = spectra.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    let (e0, e1) = (all[0], all[1]);

    let (d, o, js) = &blocks[ground_block];
    let y = linalg::tridiagonal_eigenvector(d, o, e0);
    let mut coefficients = vec![0.0; n + 1];
    for (&j, &c) in js.iter().zip(&y) {
        coefficients[j] = c;
    }
    let residual = (0..y.len())
        .map(|i| {
            let mut t = (d[i] - e0) * y[i];
            if i > 0 {
                t += o[i - 1] * y[i - 1];
            }
            if i + 1 < y.len() {
                t += o[i] * y[i + 1];
            }
            t * t
        })
        .sum::<f64>()
        .sqrt();

    let cross_check = (n <= 200).then(|| {
        let mut global: Vec<f64> = (0..=n / 2)
            .flat_map(|t| lmg_total_spin_sector(n, n - 2 * t, gamma, h).into_iter().take(2))
            .collect();
        global.sort_by(f64::total_cmp);
        (global[0] - e0).abs() <= 1e-10 && ((global[1] - global[0]) - (e1 - e0)).abs() <= 1e-10
    });

    let gap = e1 - e0;
    Ok(GroundStateSolution {
        state: GroundState::Dicke(DickeState { n, coefficients }),
        e0,
        e1,
        gap,
        residual,
        degenerate: gap < DEGENERACY_THRESHOLD,
        sector_cross_check: cross_check,
    })
}
