//! Proven inequalities evaluated on concrete instances.
//!
//! Every check returns a [`CheckReport`]. A report whose preconditions hold
//! must be satisfied; reports with unmet preconditions are informational.

mod suite;
mod tight_binding;

pub use suite::{instance_family, theorem_suite, Instance, InstanceSpec, SuiteOptions};
pub use tight_binding::{build_tight_binding, deviation_projections, TightBindingModel, OCCUPATION_THRESHOLD};

use crate::entangle;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::mfrg::bounds::{delta_rob, gamma_variance, ladder_tail_bound, lemma8_bounds, tail_decay_bound, LevelConstants, LevelParameters};
use crate::mfrg::MeanFieldBasis;
use crate::model::Bipartition;
use crate::operator::LinearOperator;
use crate::solve::DEGENERACY_THRESHOLD;

/// Absolute slack on every inequality.
pub const SLACK: f64 = 1e-9;

/// Tolerance for the unitary invariance `u ρ_i u† = ρ_i`.
pub const INVARIANCE_TOL: f64 = 1e-8;

/// Band-structure tolerance on tight-binding hoppings.
pub const BAND_TOL: f64 = 1e-10;

/// Agreement between the two computations of the deviation tail.
pub const LADDER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub check: String,
    pub instance: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub satisfied: bool,
    pub preconditions_met: bool,
}

fn finite(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-f64::MAX, f64::MAX)
    }
}

impl CheckReport {
    /// `lhs ≤ rhs` with preconditions met.
    pub fn evaluate(check: &str, instance: &str, lhs: f64, rhs: f64) -> Self {
        Self::with_preconditions(check, instance, lhs, rhs, true)
    }

    /// Non-finite values are stored clamped so that reports stay printable.
    pub fn with_preconditions(check: &str, instance: &str, lhs: f64, rhs: f64, preconditions_met: bool) -> Self {
        let holds = !lhs.is_nan() && !rhs.is_nan() && lhs <= rhs + SLACK;
        let (lhs, rhs) = (finite(lhs), finite(rhs));
        Self {
            check: check.to_string(),
            instance: instance.to_string(),
            lhs,
            rhs,
            margin: finite(rhs - lhs),
            satisfied: !preconditions_met || holds,
            preconditions_met,
        }
    }

    /// A tolerance check `value ≤ tol`, without the inequality slack.
    pub fn within(check: &str, instance: &str, value: f64, tol: f64) -> Self {
        let mut r = Self::evaluate(check, instance, value, tol);
        r.satisfied = value <= tol;
        r
    }

    pub fn unmet(check: &str, instance: &str) -> Self {
        Self::with_preconditions(check, instance, 0.0, 0.0, false)
    }

    pub fn is_violation(&self) -> bool {
        self.preconditions_met && !self.satisfied
    }
}

fn robustness_scale(c: &LevelConstants, gap: f64) -> f64 {
    delta_rob(gamma_variance(c.k, c.k), c.g1, c.gbar1, c.n, gap)
}

fn gapped(gap: f64) -> bool {
    gap.is_finite() && gap > DEGENERACY_THRESHOLD
}

/// `Var_Ω(A_L) Δ ≤ γ² gbar1 |L|` for `A_L = Σ_{i∈L} a_i` with `‖a_i‖ ≤ 1`.
pub fn check_variance_gap(inst: &Instance, block: &[usize], ops: &[CMat]) -> Result<CheckReport> {
    const NAME: &str = "variance_gap";
    if ops.len() != block.len() {
        return Err(Error::DimensionMismatch { expected: block.len(), got: ops.len() });
    }
    for a in ops {
        if linalg::hermitian_norm(a) > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument("observable terms must have norm at most 1".into()));
        }
    }
    if !gapped(inst.ground.gap) {
        return Ok(CheckReport::unmet(NAME, &inst.id));
    }
    let dims = inst.hamiltonian.dims();
    let v = inst.vector();
    let mut av = vec![ZERO; v.len()];
    for (&i, a) in block.iter().zip(ops) {
        linalg::apply_local_add(a, i, &dims, v, &mut av, linalg::ONE);
    }
    let mean = linalg::dotc(v, &av).re;
    let var = (linalg::norm(&av).powi(2) - mean * mean).max(0.0);
    let c = inst.constants();
    let gamma = gamma_variance(c.k, 1);
    Ok(CheckReport::evaluate(NAME, &inst.id, var * inst.ground.gap, gamma * gamma * c.gbar1 * block.len() as f64))
}

/// `2|0⟩⟨0| - 1` on one site: fixes the mean-field state, flips the sign of its complement.
pub fn phase_unitary(mf: &MeanFieldBasis, site: usize) -> CMat {
    let s = nalgebra::DVector::from_vec(mf.sites[site].mean_field_state());
    let d = s.len();
    &s * s.adjoint() * linalg::re(2.0) - CMat::identity(d, d)
}

/// `|⟨Ω|(u† H u - H)|Ω⟩| ≤ δ_Rob` for a unitary leaving `ρ_i` invariant.
pub fn check_robustness(inst: &Instance, site: usize, u: &CMat) -> Result<CheckReport> {
    const NAME: &str = "robustness";
    let id = format!("{}/site{site:02}", inst.id);
    let dims = inst.hamiltonian.dims();
    if site >= dims.len() || u.nrows() != dims[site] || u.ncols() != dims[site] {
        return Err(Error::InvalidArgument(format!("unitary does not act on site {site}")));
    }
    if (u.adjoint() * u - CMat::identity(dims[site], dims[site])).camax() > 1e-10 {
        return Err(Error::InvalidArgument("operator is not unitary".into()));
    }
    if !gapped(inst.ground.gap) {
        return Ok(CheckReport::unmet(NAME, &id));
    }
    let v = inst.vector();
    let rho = entangle::reduced_density(v, &dims, &[site])?;
    let invariant = (u * &rho * u.adjoint() - &rho).camax() <= INVARIANCE_TOL;
    let uv = linalg::apply_local(u, site, &dims, v);
    let lhs = (crate::solve::expectation(&inst.hamiltonian, &uv) - crate::solve::expectation(&inst.hamiltonian, v)).abs();
    let rhs = robustness_scale(&inst.constants(), inst.ground.gap);
    Ok(CheckReport::with_preconditions(NAME, &id, lhs, rhs, invariant))
}

/// `Σ_{s≥1} λ_{s,i}² ≤ δ_Rob / (2Δ)` at every site.
pub fn check_schmidt_concentration(inst: &Instance, mf: &MeanFieldBasis) -> Vec<CheckReport> {
    const NAME: &str = "schmidt_concentration";
    let gap = inst.ground.gap;
    mf.sites
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let id = format!("{}/site{i:02}", inst.id);
            if !gapped(gap) {
                return CheckReport::unmet(NAME, &id);
            }
            let rhs = robustness_scale(&inst.constants(), gap) / (2.0 * gap);
            CheckReport::evaluate(NAME, &id, s.deviation_weight(), rhs)
        })
        .collect()
}

/// `⟨Ω|M_L|Ω⟩ ≤ (δ_Rob / 2Δ) |L|`.
pub fn check_ml_average(inst: &Instance, mf: &MeanFieldBasis, block: &[usize]) -> Result<CheckReport> {
    const NAME: &str = "ml_average";
    if !gapped(inst.ground.gap) {
        return Ok(CheckReport::unmet(NAME, &inst.id));
    }
    let w = crate::mfrg::deviation_weights(inst.vector(), &inst.hamiltonian.dims(), mf, block)?;
    let lhs: f64 = w.iter().enumerate().map(|(x, p)| x as f64 * p).sum();
    let gap = inst.ground.gap;
    let rhs = robustness_scale(&inst.constants(), gap) / (2.0 * gap) * block.len() as f64;
    Ok(CheckReport::evaluate(NAME, &inst.id, lhs, rhs))
}

/// Hoppings beyond the interaction range vanish: `max_{|x-x'|>k} |J_{x,x'}| ≤ 1e-10`.
pub fn check_band_structure(id: &str, tb: &TightBindingModel, k: usize) -> CheckReport {
    CheckReport::within("band_structure", id, tb.band_defect(k), BAND_TOL)
}

/// The deviation tail from rotated-basis counting against the ladder weights.
pub fn check_ladder_consistency(inst: &Instance, mf: &MeanFieldBasis, tb: &TightBindingModel) -> Result<CheckReport> {
    let dims = inst.hamiltonian.dims();
    let mut worst = 0.0f64;
    for m in 0..=tb.block.len() + 1 {
        let t = crate::mfrg::tail_probability(inst.vector(), &dims, mf, &tb.block, m)?;
        worst = worst.max((t - tb.tail(m)).abs());
    }
    Ok(CheckReport::within("ladder_consistency", &inst.id, worst, LADDER_TOL))
}

/// Two-sided concentration of the ladder around its mean, one report per `x̄ = 1..=|L|`:
/// `‖Π_{≥⟨x⟩+x̄}Ω‖² + ‖Π_{≤⟨x⟩-x̄}Ω‖² ≤ 2 exp(-x̄ / (29 k sqrt(k gbar1 |L| / Δ)))`.
///
/// The ladder gap is replaced by the (smaller) gap of `H`. The bound is
/// claimed for `k gbar1 |L| ≥ Δ`.
pub fn check_tail_decay(inst: &Instance, tb: &TightBindingModel) -> Vec<CheckReport> {
    const NAME: &str = "tail_decay";
    let c = inst.constants();
    let l = tb.block.len();
    let gap = inst.ground.gap;
    let weights = tb.weights();
    let mean = tb.mean();
    (1..=l)
        .map(|xbar| {
            let id = format!("{}/xbar{xbar:02}", inst.id);
            if !gapped(gap) {
                return CheckReport::unmet(NAME, &id);
            }
            let hi = mean + xbar as f64;
            let lo = mean - xbar as f64;
            // a small tolerance keeps integer thresholds stable against rounding of the mean
            let lhs: f64 = weights
                .iter()
                .enumerate()
                .filter(|&(x, _)| x as f64 >= hi - 1e-12 || x as f64 <= lo + 1e-12)
                .map(|(_, w)| w)
                .sum();
            let rhs = tail_decay_bound(xbar as f64, c.k, c.gbar1, l, gap);
            let pre = c.k as f64 * c.gbar1 * l as f64 >= gap;
            CheckReport::with_preconditions(NAME, &id, lhs, rhs, pre)
        })
        .collect()
}

/// `‖Π_{>x̄}Ω‖ ≤ 6 (2J/Δ)^{x̄/(6ek²)} + 2ε0` with the closed-form block hopping `J`,
/// claimed only when `2J/Δ < 1` and `ε0 ≤ min(1/2, Δ/2)`.
pub fn check_ladder_tail(inst: &Instance, tb: &TightBindingModel, eps0: f64) -> Vec<CheckReport> {
    const NAME: &str = "ladder_tail";
    let gap = inst.ground.gap;
    let c = inst.constants();
    let l = tb.block.len();
    (0..=l)
        .map(|xbar| {
            let id = format!("{}/xbar{xbar:02}", inst.id);
            if !gapped(gap) {
                return CheckReport::unmet(NAME, &id);
            }
            let j = LevelParameters::evaluate(c, gap, eps0).j_bar(l);
            let lhs = tb.tail(xbar + 1).sqrt();
            match ladder_tail_bound(j, gap, c.k, xbar as f64, eps0) {
                Some(rhs) => CheckReport::evaluate(NAME, &id, lhs, rhs),
                None => CheckReport::with_preconditions(NAME, &id, lhs, 0.0, false),
            }
        })
        .collect()
}

/// Which `‖H‖` enters `ε̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormChoice {
    /// `E_max - E0` from the spectrum.
    Exact,
    /// `gbar1 · n`.
    Extensive,
}

/// Ground-state drift and gap of `W† H W` for an isometry `W`:
/// `‖Ω - Ω̃‖ ≤ ε̄/(1-ε̄)` and `Δ̃ ≥ (1-ε̄)Δ` with `ε̄ = 9‖H‖√ε/Δ`.
///
/// Preconditions: a gapped ground state, `ε < 1/2`, and `ε̄ < 1` (otherwise the
/// statement has no content).
pub fn check_effective_hamiltonian(inst: &Instance, label: &str, isometry: &CMat, norm: NormChoice) -> Result<[CheckReport; 2]> {
    let id = format!("{}/{label}", inst.id);
    let (fid, gapn) = ("effective_fidelity", "effective_gap");
    let h = &inst.hamiltonian;
    if isometry.nrows() != h.dim() || isometry.ncols() == 0 {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: isometry.nrows() });
    }
    if !gapped(inst.ground.gap) {
        return Ok([CheckReport::unmet(fid, &id), CheckReport::unmet(gapn, &id)]);
    }
    let v = inst.vector();
    let dense = h.assemble_dense()?;
    let h_norm = match norm {
        NormChoice::Exact => linalg::eigvalsh(&dense).last().copied().unwrap_or(0.0) - inst.ground.e0,
        NormChoice::Extensive => inst.constants().gbar1 * h.n() as f64,
    };
    let omega = nalgebra::DVector::from_column_slice(v);
    let kept = isometry.adjoint() * &omega;
    let epsilon = 1.0 - kept.norm_squared();
    let bounds = lemma8_bounds(h_norm, epsilon, inst.ground.gap);
    let compressed = isometry.adjoint() * &dense * isometry;
    let (vals, vecs) = linalg::eigh(&compressed);
    let tilde: Vec<C64> = (isometry * vecs.column(0)).iter().copied().collect();
    let drift = linalg::phase_aligned_distance(v, &tilde);
    let gap_tilde = if vals.len() > 1 { vals[1] - vals[0] } else { f64::INFINITY };
    let pre = bounds.applicable;
    Ok([
        CheckReport::with_preconditions(fid, &id, drift, bounds.fidelity_bound, pre),
        CheckReport::with_preconditions(gapn, &id, bounds.gap_bound, gap_tilde, pre),
    ])
}

/// `Σ_{m > SR(ψ')} λ_m(ψ)² ≤ ‖ψ - ψ'‖²` across a cut.
pub fn check_eckart_young(id: &str, psi: &[C64], psi_prime: &[C64], dims: &[usize], bp: &Bipartition) -> Result<CheckReport> {
    if psi.len() != psi_prime.len() {
        return Err(Error::DimensionMismatch { expected: psi.len(), got: psi_prime.len() });
    }
    let spec = entangle::schmidt(psi, dims, bp)?;
    let prime = entangle::schmidt(psi_prime, dims, bp)?;
    let rank = prime.rank(1e-12);
    let lhs = spec.tail_weight(rank);
    let rhs: f64 = psi.iter().zip(psi_prime).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(CheckReport::evaluate("eckart_young", id, lhs, rhs))
}

/// Which value of the leading constant `a1` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstantSet {
    /// `a1 = 230 ln(10368 e k²)`.
    #[default]
    Supplement,
    /// `a1 = 230 ln(10386 e k²)`.
    MainText,
}

/// `2 (ln n)^α + ln d + 1`, carried in log space because `α` is in the thousands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBound {
    pub alpha: f64,
    pub f: f64,
    /// Natural log of the bound.
    pub ln_value: f64,
}

impl EntropyBound {
    /// The bound itself, saturating at `f64::MAX`.
    pub fn value(&self) -> f64 {
        if self.ln_value >= f64::MAX.ln() {
            f64::MAX
        } else {
            self.ln_value.exp()
        }
    }

    /// Whether an entropy lies below the bound, compared in log space.
    pub fn admits(&self, entropy: f64) -> bool {
        entropy <= 0.0 || entropy.ln() <= self.ln_value
    }
}

pub fn entropy_bound(n: usize, d: usize, k: usize, gbar1: f64, gap: f64, set: ConstantSet) -> Result<EntropyBound> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("entropy bound needs n >= 3, got {n}")));
    }
    if !(gap > 0.0) || !(gbar1 > 0.0) || d < 1 {
        return Err(Error::InvalidArgument("entropy bound needs positive gap and gbar1".into()));
    }
    let base = match set {
        ConstantSet::Supplement => 10368.0,
        ConstantSet::MainText => 10386.0,
    };
    let kk = (k * k) as f64;
    let a1 = 230.0 * (base * std::f64::consts::E * kk).ln();
    let f = 2.0_f64.max((324.0 * gbar1 / gap).ln());
    let alpha = a1 + 230.0 * f.ln();
    // ln(2 (ln n)^α) and ln(ln d + 1), combined with log-sum-exp
    let t = std::f64::consts::LN_2 + alpha * (n as f64).ln().ln();
    let r = ((d as f64).ln() + 1.0).ln();
    let m = t.max(r);
    let ln_value = m + ((t - m).exp() + (r - m).exp()).ln();
    Ok(EntropyBound { alpha, f, ln_value })
}

/// Half-cut entropy of the ground state against the polylogarithmic bound.
pub fn check_entropy_bound(inst: &Instance, set: ConstantSet) -> Result<CheckReport> {
    const NAME: &str = "entropy_bound";
    let h = &inst.hamiltonian;
    if !gapped(inst.ground.gap) || h.n() < 3 {
        return Ok(CheckReport::unmet(NAME, &inst.id));
    }
    let s = entangle::entropy(&entangle::schmidt(inst.vector(), &h.dims(), &Bipartition::half(h.n()))?);
    let c = inst.constants();
    let b = entropy_bound(h.n(), h.d(), c.k, c.gbar1, inst.ground.gap, set)?;
    let mut r = CheckReport::evaluate(NAME, &inst.id, s, b.value());
    r.satisfied = b.admits(s);
    Ok(r)
}
