//! Closed-form constants of the mean-field renormalization analysis.
//!
//! Everything here is bookkeeping: values are reported next to measured
//! quantities and never steer the iteration.

use std::f64::consts::E;

/// Variance trade-off constant `sqrt(18 k_A^2 k (k + k_A))`; equals `6 k^2` when `k_A = k`.
pub fn gamma_variance(k: usize, k_a: usize) -> f64 {
    let (k, ka) = (k as f64, k_a as f64);
    (18.0 * ka * ka * k * (k + ka)).sqrt()
}

/// Robustness scale `2 gamma g1 sqrt(gbar1 / (n gap))`.
pub fn delta_rob(gamma: f64, g1: f64, gbar1: f64, n: usize, gap: f64) -> f64 {
    2.0 * gamma * g1 * (gbar1 / (n as f64 * gap)).sqrt()
}

/// `(gap eps0 / (9 gbar1 n))^2`.
pub fn epsilon_tilde(gap: f64, eps0: f64, gbar1: f64, n: usize) -> f64 {
    (gap * eps0 / (9.0 * gbar1 * n as f64)).powi(2)
}

/// Cutoff on the deviation count beyond which the ground-state weight is below `eps0`.
pub fn m0(c: &LevelConstants, gap: f64, eps0: f64) -> f64 {
    let n = c.n as f64;
    let k = c.k as f64;
    let gamma = gamma_variance(c.k, c.k);
    let et = epsilon_tilde(gap, eps0, c.gbar1, c.n);
    (c.gbar1 * n / gap).sqrt() * (gamma * c.g1 / gap + 15.0 * k.powf(1.5) * (3.0 / et).ln())
}

/// `delta0 = sqrt(4 (gbar1 k)^2 (delta_rob / gap) ln^2 n + 123 (gbar1 k)^2 / n)`.
pub fn delta0(c: &LevelConstants, delta_rob: f64, gap: f64) -> f64 {
    let n = c.n as f64;
    let gk = c.gbar1 * c.k as f64;
    let ln_n = n.ln();
    (4.0 * gk * gk * delta_rob / gap * ln_n * ln_n + 123.0 * gk * gk / n).sqrt()
}

/// Largest effective hopping on the deviation ladder of a block of `block_size` sites.
pub fn j_bar(c: &LevelConstants, block_size: usize, delta0: f64, m0: f64) -> f64 {
    let n = c.n as f64;
    let k = c.k as f64;
    let l = block_size as f64;
    4.0 * l * (delta0 + 9.0 * c.g1 * (k * (m0 + 1.0) / n).sqrt()) + c.g1 * k * l * l / n
}

/// Deviation tail bound `6 (2 J / gap)^(x / (6 e k^2)) + 2 eps0`.
///
/// `None` when `J >= gap / 2` or `eps0 > min(1/2, gap/2)`, where the bound is not claimed.
pub fn ladder_tail_bound(j_bar: f64, gap: f64, k: usize, xbar: f64, eps0: f64) -> Option<f64> {
    let ratio = 2.0 * j_bar / gap;
    if !(ratio < 1.0) || eps0 > 0.5_f64.min(gap / 2.0) {
        return None;
    }
    let kk = (k * k) as f64;
    Some(6.0 * ratio.powf(xbar / (6.0 * E * kk)) + 2.0 * eps0)
}

/// Two-sided concentration bound `2 exp(-x / (29 k sqrt(k gbar1 |L| / gap)))`.
pub fn tail_decay_bound(xbar: f64, k: usize, gbar1: f64, block_size: usize, gap: f64) -> f64 {
    let k = k as f64;
    let width = 29.0 * k * (k * gbar1 * block_size as f64 / gap).sqrt();
    2.0 * (-xbar / width).exp()
}

/// Extensiveness constants of one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelConstants {
    pub n: usize,
    pub k: usize,
    pub g0: f64,
    pub g1: f64,
    pub gbar1: f64,
}

impl LevelConstants {
    pub fn new(n: usize, k: usize, g0: f64, g1: f64) -> Self {
        Self { n, k, g0, g1, gbar1: g0 + g1 }
    }
}

/// Derived quantities of one level at a measured gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelParameters {
    pub constants: LevelConstants,
    pub gap: f64,
    pub eps0: f64,
    pub delta_rob: f64,
    pub m0: f64,
    pub delta0: f64,
}

impl LevelParameters {
    pub fn evaluate(constants: LevelConstants, gap: f64, eps0: f64) -> Self {
        let c = constants;
        let dr = delta_rob(gamma_variance(c.k, c.k), c.g1, c.gbar1, c.n, gap);
        Self { constants, gap, eps0, delta_rob: dr, m0: m0(&c, gap, eps0), delta0: delta0(&c, dr, gap) }
    }

    pub fn j_bar(&self, block_size: usize) -> f64 {
        j_bar(&self.constants, block_size, self.delta0, self.m0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowInputs {
    pub g0: f64,
    pub g1: f64,
    pub gbar1: f64,
    pub z: usize,
    pub block_size: usize,
    pub n: usize,
    pub delta0: f64,
    pub j_bar: f64,
}

/// Constants of the renormalized Hamiltonian: `g0' = (g0 + g1) z + J`, `g1' = 16 z g1`.
pub fn parameter_flow_bounds(p: &FlowInputs) -> (f64, f64) {
    let z = p.z as f64;
    ((p.g0 + p.g1) * z + p.j_bar, 16.0 * z * p.g1)
}

/// Certified drift of ground state and gap when `H` is compressed to a
/// subspace holding all but `epsilon` of the ground-state weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma8Bounds {
    pub epsilon: f64,
    pub h_norm: f64,
    pub gap: f64,
    /// `9 ‖H‖ sqrt(epsilon) / gap`.
    pub eps_bar: f64,
    /// `eps_bar / (1 - eps_bar)`.
    pub fidelity_bound: f64,
    /// `(1 - eps_bar) gap`.
    pub gap_bound: f64,
    /// `epsilon < 1/2` and `eps_bar < 1`; otherwise the bounds say nothing.
    pub applicable: bool,
}

pub fn lemma8_bounds(h_norm: f64, epsilon: f64, gap: f64) -> Lemma8Bounds {
    let epsilon = epsilon.max(0.0);
    let eps_bar = 9.0 * h_norm * epsilon.sqrt() / gap;
    let applicable = epsilon < 0.5 && eps_bar < 1.0 && gap > 0.0;
    let fidelity_bound = if eps_bar < 1.0 { eps_bar / (1.0 - eps_bar) } else { f64::INFINITY };
    Lemma8Bounds {
        epsilon,
        h_norm,
        gap,
        eps_bar,
        fidelity_bound,
        gap_bound: (1.0 - eps_bar) * gap,
        applicable,
    }
}
