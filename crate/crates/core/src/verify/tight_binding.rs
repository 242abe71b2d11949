use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::mfrg::MeanFieldBasis;
use crate::operator::{hermiticity_defect, LinearOperator};

/// Levels whose ground-state weight falls below this are left out of the ladder.
pub const OCCUPATION_THRESHOLD: f64 = 1e-14;

/// The ground state written over the eigenspaces of the deviation count `M_L`,
/// with `H` reduced to the normalized projections `|ω_x⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct TightBindingModel {
    pub block: Vec<usize>,
    /// `c_x = ‖Π_{=x} |Ω⟩‖` for `x = 0..=|L|`.
    pub amplitudes: Vec<f64>,
    pub occupied: Vec<bool>,
    /// Occupied ladder positions, ascending.
    pub levels: Vec<usize>,
    /// `hopping[(a, b)] = ⟨ω_{levels[a]}| H |ω_{levels[b]}⟩`.
    pub hopping: CMat,
}

impl TightBindingModel {
    pub fn weights(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c * c).collect()
    }

    /// `Σ_{x ≥ m} |c_x|²`.
    pub fn tail(&self, m: usize) -> f64 {
        self.weights().iter().skip(m).sum()
    }

    /// `⟨x⟩ = Σ x |c_x|²`.
    pub fn mean(&self) -> f64 {
        self.weights().iter().enumerate().map(|(x, w)| x as f64 * w).sum()
    }

    /// `J_{x,x'}`, zero when either level is unoccupied.
    pub fn hopping_between(&self, x: usize, xp: usize) -> C64 {
        match (self.levels.binary_search(&xp), self.levels.binary_search(&x)) {
            (Ok(a), Ok(b)) => self.hopping[(a, b)],
            _ => ZERO,
        }
    }

    /// `max |J_{x,x'}|` over `|x - x'| > k`.
    pub fn band_defect(&self, k: usize) -> f64 {
        let mut worst = 0.0f64;
        for (a, &x) in self.levels.iter().enumerate() {
            for (b, &xp) in self.levels.iter().enumerate() {
                if x.abs_diff(xp) > k {
                    worst = worst.max(self.hopping[(a, b)].norm());
                }
            }
        }
        worst
    }

    /// Largest off-diagonal hopping magnitude; zero for a single-level ladder.
    pub fn max_hopping(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.levels.len() {
            for b in 0..self.levels.len() {
                if a != b {
                    worst = worst.max(self.hopping[(a, b)].norm());
                }
            }
        }
        worst
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.hopping)
    }

    pub fn normalization_defect(&self) -> f64 {
        (self.weights().iter().sum::<f64>() - 1.0).abs()
    }
}

/// `Π_{=x} |ψ⟩` for every `x`, built site by site from `P_i = |0⟩⟨0|_i`
/// and `Q_i = 1 - P_i`.
pub fn deviation_projections(state: &[C64], dims: &[usize], mf: &MeanFieldBasis, block: &[usize]) -> Vec<Vec<C64>> {
    let mut parts = vec![state.to_vec()];
    for &i in block {
        let s = nalgebra::DVector::from_vec(mf.sites[i].mean_field_state());
        let p = &s * s.adjoint();
        let q = CMat::identity(dims[i], dims[i]) - &p;
        let mut next = vec![vec![ZERO; state.len()]; parts.len() + 1];
        for (x, v) in parts.iter().enumerate() {
            let kept = linalg::apply_local(&p, i, dims, v);
            let moved = linalg::apply_local(&q, i, dims, v);
            linalg::axpy(linalg::ONE, &kept, &mut next[x]);
            linalg::axpy(linalg::ONE, &moved, &mut next[x + 1]);
        }
        parts = next;
    }
    parts
}

pub fn build_tight_binding(
    h: &dyn LinearOperator,
    state: &[C64],
    dims: &[usize],
    mf: &MeanFieldBasis,
    block: &[usize],
) -> Result<TightBindingModel> {
    if h.dim() != state.len() || linalg::total_dim(dims) != state.len() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: state.len() });
    }
    if mf.dims() != dims || block.iter().any(|&i| i >= dims.len()) {
        return Err(Error::InvalidArgument("block or mean-field basis does not match the state".into()));
    }
    let parts = deviation_projections(state, dims, mf, block);
    let amplitudes: Vec<f64> = parts.iter().map(|v| linalg::norm(v)).collect();
    let occupied: Vec<bool> = amplitudes.iter().map(|c| c * c >= OCCUPATION_THRESHOLD).collect();
    let levels: Vec<usize> = (0..parts.len()).filter(|&x| occupied[x]).collect();
    let omegas: Vec<Vec<C64>> = levels
        .iter()
        .map(|&x| parts[x].iter().map(|a| a / amplitudes[x]).collect())
        .collect();
    let mut hopping = CMat::zeros(levels.len(), levels.len());
    let mut hw = vec![ZERO; state.len()];
    for (b, w) in omegas.iter().enumerate() {
        h.apply(w, &mut hw);
        for (a, v) in omegas.iter().enumerate() {
            hopping[(a, b)] = linalg::dotc(v, &hw);
        }
    }
    Ok(TightBindingModel { block: block.to_vec(), amplitudes, occupied, levels, hopping })
}
