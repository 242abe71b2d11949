//! Mean-field renormalization: per-site dominant states, deviation-count
//! truncation of blocks, compressed Hamiltonians and the level iteration.
//!
//! Effective Hamiltonians are kept matrix-free: a level applies its parent
//! through the block isometries, so only vectors of the parent dimension are
//! ever stored.

pub mod bounds;

use std::fmt;
use std::sync::Arc;

pub use bounds::{lemma8_bounds, parameter_flow_bounds, FlowInputs, Lemma8Bounds, LevelConstants, LevelParameters};

use crate::config::KeyValueFile;
use crate::entangle;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::model::{Channel, FullyConnectedHamiltonian};
use crate::operator::LinearOperator;
use crate::solve::{self, GroundStateSolution, LanczosOptions, DEGENERACY_THRESHOLD};

/// Default total dimension at which the iteration stops.
pub const DEFAULT_STOP_DIM: usize = 1 << 14;

/// Compressed operators up to this dimension are diagonalized densely.
const DENSE_SOLVE_DIM: usize = 256;

/// Dominant local state of one site.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteBasis {
    /// Local eigenbasis of the one-site reduced density matrix, ordered by
    /// decreasing weight; column 0 is the mean-field state.
    pub basis: CMat,
    /// Schmidt coefficients of the site-vs-rest cut, descending.
    pub schmidt: Vec<f64>,
}

impl SiteBasis {
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn mean_field_state(&self) -> Vec<C64> {
        self.basis.column(0).iter().copied().collect()
    }

    pub fn lambda0(&self) -> f64 {
        self.schmidt[0]
    }

    /// Unitary taking the mean-field state to the first basis vector.
    pub fn rotation(&self) -> CMat {
        self.basis.adjoint()
    }

    /// `Σ_{s≥1} λ_s²`, the weight outside the mean-field state.
    pub fn deviation_weight(&self) -> f64 {
        self.schmidt.iter().skip(1).map(|l| l * l).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldBasis {
    pub sites: Vec<SiteBasis>,
}

impl MeanFieldBasis {
    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sites.iter().map(SiteBasis::dim).collect()
    }

    /// Product of all mean-field states.
    pub fn product_state(&self) -> Vec<C64> {
        let mut v = vec![linalg::ONE];
        for s in &self.sites {
            let next: Vec<C64> = v.iter().flat_map(|a| s.basis.column(0).iter().map(move |b| a * b).collect::<Vec<_>>()).collect();
            v = next;
        }
        v
    }
}

/// Mean-field basis from a full ground-state vector.
pub fn mean_field_basis(state: &[C64], dims: &[usize]) -> Result<MeanFieldBasis> {
    let mut sites = Vec::with_capacity(dims.len());
    for i in 0..dims.len() {
        let rho = entangle::reduced_density(state, dims, &[i])?;
        let (vals, vecs) = linalg::eigh(&rho);
        let d = dims[i];
        let order: Vec<usize> = (0..d).rev().collect();
        let schmidt: Vec<f64> = order.iter().map(|&j| vals[j].max(0.0).sqrt()).collect();
        if d > 1 && (schmidt[0] - schmidt[1]).abs() < DEGENERACY_THRESHOLD {
            return Err(Error::Degenerate {
                what: format!("top Schmidt values at site {i}"),
                splitting: (schmidt[0] - schmidt[1]).abs(),
            });
        }
        let mut basis = CMat::zeros(d, d);
        for (c, &j) in order.iter().enumerate() {
            let mut col: Vec<C64> = vecs.column(j).iter().copied().collect();
            linalg::fix_phase(&mut col);
            for r in 0..d {
                basis[(r, c)] = col[r];
            }
        }
        sites.push(SiteBasis { basis, schmidt });
    }
    Ok(MeanFieldBasis { sites })
}

/// Mean-field basis of a solved ground state; degenerate ground states are rejected.
pub fn mean_field_basis_of(gs: &GroundStateSolution) -> Result<MeanFieldBasis> {
    if gs.degenerate {
        return Err(Error::Degenerate { what: "ground state".into(), splitting: gs.gap });
    }
    let (dims, v) = gs.to_full_vector()?;
    mean_field_basis(&v, &dims)
}

/// Rotate every site of `block` into its mean-field basis.
fn rotate_block(state: &[C64], dims: &[usize], mf: &MeanFieldBasis, block: &[usize]) -> Vec<C64> {
    let mut v = state.to_vec();
    for &i in block {
        v = linalg::apply_local(&mf.sites[i].rotation(), i, dims, &v);
    }
    v
}

fn check_block(block: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &i in block {
        if i >= n || seen[i] {
            return Err(Error::InvalidArgument(format!("bad block site {i}")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// The deviation count `M_L`, diagonal in the rotated product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationOperator {
    pub block: Vec<usize>,
    pub dims: Vec<usize>,
}

impl DeviationOperator {
    pub fn new(mf: &MeanFieldBasis, block: &[usize]) -> Result<Self> {
        check_block(block, mf.n())?;
        Ok(Self { block: block.to_vec(), dims: mf.dims() })
    }

    /// Value on a rotated basis state given by its local indices.
    pub fn value(&self, config: &[usize]) -> usize {
        self.block.iter().filter(|&&i| config[i] != 0).count()
    }

    /// Diagonal of `M_L` over the rotated product basis.
    pub fn diagonal(&self) -> Vec<usize> {
        let strides = linalg::strides(&self.dims);
        (0..linalg::total_dim(&self.dims))
            .map(|idx| self.block.iter().filter(|&&i| !(idx / strides[i]).is_multiple_of(self.dims[i])).count())
            .collect()
    }
}

/// `‖Π_{=x}^L |ψ⟩‖²` for `x = 0..=|L|`.
pub fn deviation_weights(state: &[C64], dims: &[usize], mf: &MeanFieldBasis, block: &[usize]) -> Result<Vec<f64>> {
    check_block(block, dims.len())?;
    if state.len() != linalg::total_dim(dims) {
        return Err(Error::DimensionMismatch { expected: linalg::total_dim(dims), got: state.len() });
    }
    let rotated = rotate_block(state, dims, mf, block);
    let m = DeviationOperator { block: block.to_vec(), dims: dims.to_vec() };
    let mut w = vec![0.0; block.len() + 1];
    for (amp, x) in rotated.iter().zip(m.diagonal()) {
        w[x] += amp.norm_sqr();
    }
    Ok(w)
}

/// `‖Π_{≥m}^L |ψ⟩‖²`.
pub fn tail_probability(state: &[C64], dims: &[usize], mf: &MeanFieldBasis, block: &[usize], m: usize) -> Result<f64> {
    if m > block.len() + 1 {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds |L| + 1 = {}", block.len() + 1)));
    }
    if m == 0 {
        return Ok(1.0);
    }
    let w = deviation_weights(state, dims, mf, block)?;
    Ok(w[m.min(w.len())..].iter().sum())
}

/// `Σ_{m=0}^{z} C(|L|, m) (d-1)^m` for uniform local dimension.
pub fn kept_dim(block_size: usize, d: usize, z: usize) -> usize {
    let mut total = 0usize;
    let mut binom = 1usize;
    for m in 0..=z.min(block_size) {
        total += binom * (d - 1).pow(m as u32);
        binom = binom * (block_size - m) / (m + 1);
    }
    total
}

/// Isometry onto the block states with at most `z` deviating sites.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockProjector {
    pub block: Vec<usize>,
    pub z: usize,
    pub local_dims: Vec<usize>,
    /// Kept configurations (local indices in the rotated basis), ordered by
    /// deviation count, then lexicographically.
    pub configs: Vec<Vec<usize>>,
    /// `d^|L| × kept` matrix whose columns are the kept rotated product states.
    pub isometry: CMat,
}

impl BlockProjector {
    pub fn new(mf: &MeanFieldBasis, block: &[usize], z: usize) -> Result<Self> {
        check_block(block, mf.n())?;
        if block.is_empty() {
            return Err(Error::InvalidArgument("empty block".into()));
        }
        if z > block.len() {
            return Err(Error::InvalidArgument(format!("z = {z} exceeds block size {}", block.len())));
        }
        let local_dims: Vec<usize> = block.iter().map(|&i| mf.sites[i].dim()).collect();
        let full = linalg::total_dim(&local_dims);
        let mut configs = Vec::new();
        let mut cfg = vec![0usize; block.len()];
        for _ in 0..full {
            if cfg.iter().filter(|&&a| a != 0).count() <= z {
                configs.push(cfg.clone());
            }
            // odometer increment, last site fastest
            for p in (0..cfg.len()).rev() {
                cfg[p] += 1;
                if cfg[p] < local_dims[p] {
                    break;
                }
                cfg[p] = 0;
            }
        }
        configs.sort_by_key(|c| c.iter().filter(|&&a| a != 0).count());
        let mut isometry = CMat::zeros(full, configs.len());
        for (col, c) in configs.iter().enumerate() {
            let mut v = vec![linalg::ONE];
            for (p, &a) in c.iter().enumerate() {
                let b = &mf.sites[block[p]].basis;
                v = v.iter().flat_map(|x| b.column(a).iter().map(move |y| x * y).collect::<Vec<_>>()).collect();
            }
            for (r, val) in v.into_iter().enumerate() {
                isometry[(r, col)] = val;
            }
        }
        Ok(Self { block: block.to_vec(), z, local_dims, configs, isometry })
    }

    pub fn kept_dim(&self) -> usize {
        self.configs.len()
    }

    pub fn full_dim(&self) -> usize {
        self.isometry.nrows()
    }

    /// `max |W†W - 1|`.
    pub fn isometry_defect(&self) -> f64 {
        let g = self.isometry.adjoint() * &self.isometry;
        (g - CMat::identity(self.kept_dim(), self.kept_dim())).camax()
    }
}

/// `out[l, i, r] = Σ_j mat[i, j] x[l, j, r]`.
fn apply_slot(mat: &CMat, x: &[C64], left: usize, right: usize) -> Vec<C64> {
    let (rows, cols) = mat.shape();
    let mut out = vec![ZERO; left * rows * right];
    for l in 0..left {
        for j in 0..cols {
            let xs = &x[(l * cols + j) * right..(l * cols + j + 1) * right];
            for i in 0..rows {
                let a = mat[(i, j)];
                if a == ZERO {
                    continue;
                }
                let os = &mut out[(l * rows + i) * right..(l * rows + i + 1) * right];
                for (o, v) in os.iter_mut().zip(xs) {
                    *o += a * v;
                }
            }
        }
    }
    out
}

/// One coarse-graining: the product of block isometries from a level to its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMap {
    pub parent_dims: Vec<usize>,
    pub projectors: Vec<BlockProjector>,
    /// Parent index of each index in block-concatenated order, when that order
    /// differs from the parent's.
    permutation: Option<Vec<usize>>,
    adjoints: Vec<CMat>,
}

impl LevelMap {
    pub fn new(parent_dims: Vec<usize>, projectors: Vec<BlockProjector>) -> Result<Self> {
        let n = parent_dims.len();
        let mut seen = vec![false; n];
        for p in &projectors {
            for &i in &p.block {
                if i >= n || seen[i] {
                    return Err(Error::InvalidArgument(format!("blocks do not partition the sites (site {i})")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("blocks do not cover every site".into()));
        }
        let order: Vec<usize> = projectors.iter().flat_map(|p| p.block.iter().copied()).collect();
        let permutation = if order.iter().enumerate().all(|(a, &b)| a == b) {
            None
        } else {
            let strides = linalg::strides(&parent_dims);
            let odims: Vec<usize> = order.iter().map(|&i| parent_dims[i]).collect();
            let ostrides = linalg::strides(&odims);
            Some(
                (0..linalg::total_dim(&parent_dims))
                    .map(|idx| order.iter().enumerate().map(|(p, &s)| ((idx / ostrides[p]) % odims[p]) * strides[s]).sum())
                    .collect(),
            )
        };
        let adjoints = projectors.iter().map(|p| p.isometry.adjoint()).collect();
        Ok(Self { parent_dims, projectors, permutation, adjoints })
    }

    /// Per-site dimensions of the coarse level.
    pub fn dims(&self) -> Vec<usize> {
        self.projectors.iter().map(BlockProjector::kept_dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.projectors.iter().map(BlockProjector::kept_dim).product()
    }

    pub fn parent_dim(&self) -> usize {
        linalg::total_dim(&self.parent_dims)
    }

    /// The isometry as a dense `parent_dim × dim` matrix.
    pub fn to_dense(&self) -> CMat {
        let dim = self.dim();
        let mut w = CMat::zeros(self.parent_dim(), dim);
        let mut e = vec![ZERO; dim];
        for j in 0..dim {
            e[j] = linalg::ONE;
            for (i, v) in self.embed(&e).into_iter().enumerate() {
                w[(i, j)] = v;
            }
            e[j] = ZERO;
        }
        w
    }

    /// `W x`.
    pub fn embed(&self, x: &[C64]) -> Vec<C64> {
        let kept = self.dims();
        let mut v = x.to_vec();
        let mut left = 1;
        for (b, p) in self.projectors.iter().enumerate() {
            let right: usize = kept[b + 1..].iter().product();
            v = apply_slot(&p.isometry, &v, left, right);
            left *= p.full_dim();
        }
        match &self.permutation {
            None => v,
            Some(perm) => {
                let mut out = vec![ZERO; v.len()];
                for (i, &t) in perm.iter().enumerate() {
                    out[t] = v[i];
                }
                out
            }
        }
    }

    /// `W† y`.
    pub fn restrict(&self, y: &[C64]) -> Vec<C64> {
        let mut v = match &self.permutation {
            None => y.to_vec(),
            Some(perm) => perm.iter().map(|&t| y[t]).collect(),
        };
        let full: Vec<usize> = self.projectors.iter().map(BlockProjector::full_dim).collect();
        let mut right = 1;
        for b in (0..self.projectors.len()).rev() {
            let left: usize = full[..b].iter().product();
            v = apply_slot(&self.adjoints[b], &v, left, right);
            right *= self.projectors[b].kept_dim();
        }
        v
    }
}

/// `W† H W` applied without forming it.
pub struct EffectiveOperator {
    pub parent: Arc<dyn LinearOperator>,
    pub map: Arc<LevelMap>,
}

impl LinearOperator for EffectiveOperator {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let up = self.map.embed(x);
        let mut hy = vec![ZERO; up.len()];
        self.parent.apply(&up, &mut hy);
        y.copy_from_slice(&self.map.restrict(&hy));
    }

    fn prefers_dense(&self) -> bool {
        self.map.dim() <= DENSE_SOLVE_DIM
    }
}

/// How `‖H‖` enters the certified bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormMode {
    /// `E_max - E0`, the norm of `H` shifted so that the ground energy is zero.
    #[default]
    Exact,
    /// `gbar1 · n` from the level constants.
    ExtensiveBound,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    pub lanczos: LanczosOptions,
    pub norm: NormMode,
    /// Reject steps whose discarded weight is not below 1/2.
    pub enforce_lemma8: bool,
    pub eps0: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { lanczos: LanczosOptions::default(), norm: NormMode::Exact, enforce_lemma8: true, eps0: 0.01 }
    }
}

/// Bookkeeping for one coarse-graining.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub from_level: usize,
    pub blocks: Vec<Vec<usize>>,
    pub z: Vec<usize>,
    /// `1 - ‖Π|Ω⟩‖²`.
    pub epsilon: f64,
    /// Measured `‖|Ω⟩ - W|Ω̃⟩‖` after phase alignment.
    pub step_error: f64,
    pub e0_before: f64,
    pub gap_before: f64,
    pub e0_after: f64,
    pub gap_after: f64,
    pub lemma8: Lemma8Bounds,
    /// Closed-form level constants before the step, at the measured gap.
    pub parameters: LevelParameters,
    pub j_bar: f64,
    /// Bounds on the coarse level's constants `(g0', g1')`.
    pub flow: (f64, f64),
}

impl StepRecord {
    pub fn gap_ratio(&self) -> f64 {
        self.gap_after / self.gap_before
    }

    /// Whether the measured drift respects the certified bounds (vacuously true when not applicable).
    pub fn lemma8_holds(&self, slack: f64) -> bool {
        !self.lemma8.applicable
            || (self.step_error <= self.lemma8.fidelity_bound + slack && self.gap_after >= self.lemma8.gap_bound - slack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    StopDim,
    ScheduleExhausted,
    /// The next step would discard half or more of the ground-state weight.
    Precondition,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::StopDim => "stop_dim",
            StopReason::ScheduleExhausted => "schedule_exhausted",
            StopReason::Precondition => "precondition",
        })
    }
}

/// One level of the iteration together with its history.
#[derive(Clone)]
pub struct RenormalizedSystem {
    pub level: usize,
    pub dims: Vec<usize>,
    pub hamiltonian: Arc<dyn LinearOperator>,
    pub ground: GroundStateSolution,
    /// Maps from level 1, 2, ... back to their parents.
    pub maps: Vec<Arc<LevelMap>>,
    /// Level constants: measured at level 0, flow bounds afterwards.
    pub constants: LevelConstants,
    pub trace: Vec<StepRecord>,
    pub stop_reason: Option<StopReason>,
}

impl fmt::Debug for RenormalizedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RenormalizedSystem")
            .field("level", &self.level)
            .field("dims", &self.dims)
            .field("e0", &self.ground.e0)
            .field("gap", &self.ground.gap)
            .field("constants", &self.constants)
            .field("trace", &self.trace)
            .field("stop_reason", &self.stop_reason)
            .finish()
    }
}

impl RenormalizedSystem {
    /// Level 0 of a fully connected Hamiltonian, solved exactly.
    pub fn initial(h: FullyConnectedHamiltonian, opts: &LanczosOptions) -> Result<Self> {
        let dims = h.dims();
        let gs = solve::solve_auto(&h, dims.clone(), opts)?;
        Ok(Self::with_ground(h, gs))
    }

    /// Level 0 with a ground state computed elsewhere (for example a Dicke expansion).
    pub fn with_ground(h: FullyConnectedHamiltonian, ground: GroundStateSolution) -> Self {
        let constants = LevelConstants::new(h.n(), h.k(), h.g0(), h.g1());
        let dims = h.dims();
        Self {
            level: 0,
            dims,
            hamiltonian: Arc::new(h),
            ground,
            maps: Vec::new(),
            constants,
            trace: Vec::new(),
            stop_reason: None,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        linalg::total_dim(&self.dims)
    }

    pub fn ground_vector(&self) -> &[C64] {
        self.ground.vector().expect("levels store full vectors")
    }

    /// Composed isometry applied to a level vector, giving a level-0 vector.
    pub fn embed_to_level0(&self, x: &[C64]) -> Vec<C64> {
        self.maps.iter().rev().fold(x.to_vec(), |v, m| m.embed(&v))
    }

    /// Columns of the composed isometry checked against orthonormality, `max |W†W - 1|`.
    pub fn composed_isometry_defect(&self) -> f64 {
        let dim = self.total_dim();
        let cols: Vec<Vec<C64>> = (0..dim)
            .map(|j| {
                let mut e = vec![ZERO; dim];
                e[j] = linalg::ONE;
                self.embed_to_level0(&e)
            })
            .collect();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in 0..=i {
                let target = if i == j { linalg::ONE } else { ZERO };
                worst = worst.max((linalg::dotc(&cols[i], &cols[j]) - target).norm());
            }
        }
        worst
    }

    /// `Σ_t ‖Ω^(t) - Ω^(t+1)‖`.
    pub fn cumulative_error(&self) -> f64 {
        self.trace.iter().map(|s| s.step_error).sum()
    }

    /// `Σ_t ε̄_t / (1 - ε̄_t)`.
    pub fn cumulative_bound(&self) -> f64 {
        self.trace.iter().map(|s| s.lemma8.fidelity_bound).sum()
    }

    /// `|⟨Ω_0 | W Ω_s⟩|²` against a level-0 reference vector.
    pub fn fidelity_to(&self, exact: &[C64]) -> f64 {
        let up = self.embed_to_level0(self.ground_vector());
        linalg::dotc(exact, &up).norm_sqr()
    }
}

/// Compress a level through the given blocks and cutoffs and solve the result.
pub fn renormalize_step(
    sys: &RenormalizedSystem,
    mf: &MeanFieldBasis,
    blocks: &[Vec<usize>],
    z: &[usize],
    opts: &StepOptions,
) -> Result<RenormalizedSystem> {
    if z.len() != blocks.len() {
        return Err(Error::DimensionMismatch { expected: blocks.len(), got: z.len() });
    }
    if mf.dims() != sys.dims {
        return Err(Error::InvalidArgument("mean-field basis does not match the level".into()));
    }
    let projectors = blocks
        .iter()
        .zip(z)
        .map(|(b, &zb)| BlockProjector::new(mf, b, zb))
        .collect::<Result<Vec<_>>>()?;
    let map = Arc::new(LevelMap::new(sys.dims.clone(), projectors)?);

    let omega = sys.ground_vector();
    let kept = map.restrict(omega);
    let epsilon = (1.0 - linalg::norm(&kept).powi(2)).max(0.0);
    if opts.enforce_lemma8 && epsilon >= 0.5 {
        return Err(Error::Precondition(format!(
            "discarded ground-state weight {epsilon:.3e} is not below 1/2"
        )));
    }

    let gap = sys.ground.gap;
    let h_norm = match opts.norm {
        NormMode::Exact => solve::extremal_eigenvalue(sys.hamiltonian.as_ref(), &opts.lanczos)? - sys.ground.e0,
        NormMode::ExtensiveBound => sys.constants.gbar1 * sys.n_sites() as f64,
    };
    let lemma8 = lemma8_bounds(h_norm, epsilon, gap);

    let effective: Arc<dyn LinearOperator> = Arc::new(EffectiveOperator { parent: sys.hamiltonian.clone(), map: map.clone() });
    let dims = map.dims();
    let ground = solve::solve_auto(effective.as_ref(), dims.clone(), &opts.lanczos)?;
    let step_error = linalg::phase_aligned_distance(omega, &map.embed(ground.vector().expect("full vector")));

    let parameters = LevelParameters::evaluate(sys.constants, gap, opts.eps0);
    let block_size = blocks.iter().map(Vec::len).max().unwrap_or(0);
    let z_max = z.iter().copied().max().unwrap_or(0);
    let j_bar = parameters.j_bar(block_size);
    let flow = parameter_flow_bounds(&FlowInputs {
        g0: sys.constants.g0,
        g1: sys.constants.g1,
        gbar1: sys.constants.gbar1,
        z: z_max,
        block_size,
        n: sys.constants.n,
        delta0: parameters.delta0,
        j_bar,
    });

    let record = StepRecord {
        from_level: sys.level,
        blocks: blocks.to_vec(),
        z: z.to_vec(),
        epsilon,
        step_error,
        e0_before: sys.ground.e0,
        gap_before: gap,
        e0_after: ground.e0,
        gap_after: ground.gap,
        lemma8,
        parameters,
        j_bar,
        flow,
    };
    let mut maps = sys.maps.clone();
    maps.push(map);
    let mut trace = sys.trace.clone();
    trace.push(record);
    Ok(RenormalizedSystem {
        level: sys.level + 1,
        dims,
        hamiltonian: effective,
        ground,
        maps,
        constants: LevelConstants::new(blocks.len(), sys.constants.k, flow.0, flow.1),
        trace,
        stop_reason: None,
    })
}

/// Consecutive chunks of `size` sites; the last may be shorter.
pub fn contiguous_blocks(n: usize, size: usize) -> Vec<Vec<usize>> {
    (0..n).collect::<Vec<_>>().chunks(size.max(1)).map(<[usize]>::to_vec).collect()
}

/// Block size and deviation cutoff of one level. `z` holds one value for all
/// blocks or one per block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSpec {
    pub block_size: usize,
    pub z: Vec<usize>,
}

impl LevelSpec {
    pub fn uniform(block_size: usize, z: usize) -> Self {
        Self { block_size, z: vec![z] }
    }

    fn cutoffs(&self, blocks: &[Vec<usize>]) -> Result<Vec<usize>> {
        match self.z.len() {
            1 => Ok(blocks.iter().map(|b| self.z[0].min(b.len())).collect()),
            m if m == blocks.len() => Ok(self.z.iter().zip(blocks).map(|(&z, b)| z.min(b.len())).collect()),
            m => Err(Error::InvalidArgument(format!("{m} cutoffs for {} blocks", blocks.len()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub levels: Vec<LevelSpec>,
    pub stop_dim: usize,
}

impl Schedule {
    pub fn new(levels: Vec<LevelSpec>, stop_dim: usize) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidArgument("empty schedule".into()));
        }
        if levels.iter().any(|l| l.block_size == 0 || l.z.is_empty()) {
            return Err(Error::InvalidArgument("block sizes must be positive and z given".into()));
        }
        Ok(Self { levels, stop_dim })
    }

    /// Keys `level.N.block_size`, `level.N.z` and optional `stop_dim`. Level
    /// numbers must be consecutive; other keys are left to the caller.
    pub fn from_file(file: &KeyValueFile) -> Result<Self> {
        let mut numbers: Vec<usize> = Vec::new();
        for key in file.keys() {
            if let Some(rest) = key.strip_prefix("level.") {
                let (num, field) = rest
                    .split_once('.')
                    .ok_or_else(|| Error::InvalidArgument(format!("malformed schedule key {key}")))?;
                if field != "block_size" && field != "z" {
                    return Err(Error::InvalidArgument(format!("unknown schedule key {key}")));
                }
                let num: usize = num
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("level number in {key} is not an integer")))?;
                if !numbers.contains(&num) {
                    numbers.push(num);
                }
            }
        }
        numbers.sort_unstable();
        if numbers.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::InvalidArgument("schedule levels must be consecutive".into()));
        }
        let levels = numbers
            .iter()
            .map(|n| {
                Ok(LevelSpec {
                    block_size: file.require(&format!("level.{n}.block_size"))?,
                    z: file
                        .get_list(&format!("level.{n}.z"))?
                        .ok_or_else(|| Error::InvalidArgument(format!("missing level.{n}.z")))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(levels, file.get_or("stop_dim", DEFAULT_STOP_DIM)?)
    }
}

/// Iterate coarse-graining steps until the level is small enough or the
/// schedule runs out. The mean-field basis is re-derived from each level's
/// own ground state.
pub fn run_mfrg(initial: RenormalizedSystem, schedule: &Schedule, opts: &StepOptions) -> Result<RenormalizedSystem> {
    run_mfrg_observed(initial, schedule, opts, |_| {})
}

/// As [`run_mfrg`], calling `observe` on every level including level 0. A
/// step refused for discarding too much weight ends the run with
/// [`StopReason::Precondition`].
pub fn run_mfrg_observed(
    initial: RenormalizedSystem,
    schedule: &Schedule,
    opts: &StepOptions,
    mut observe: impl FnMut(&RenormalizedSystem),
) -> Result<RenormalizedSystem> {
    let mut sys = initial;
    observe(&sys);
    for spec in &schedule.levels {
        if sys.total_dim() <= schedule.stop_dim {
            sys.stop_reason = Some(StopReason::StopDim);
            return Ok(sys);
        }
        let mf = mean_field_basis_of(&sys.ground)?;
        let blocks = contiguous_blocks(sys.n_sites(), spec.block_size);
        let z = spec.cutoffs(&blocks)?;
        sys = match renormalize_step(&sys, &mf, &blocks, &z, opts) {
            Ok(next) => next,
            Err(Error::Precondition(_)) => {
                sys.stop_reason = Some(StopReason::Precondition);
                return Ok(sys);
            }
            Err(e) => return Err(e),
        };
        observe(&sys);
    }
    sys.stop_reason = Some(if sys.total_dim() <= schedule.stop_dim { StopReason::StopDim } else { StopReason::ScheduleExhausted });
    Ok(sys)
}

/// Block Hamiltonian with the rest of the system frozen in its mean-field
/// product state: terms inside the block plus `⟨0| H_{L, L^c} |0⟩_{L^c}`.
pub fn mean_field_block_hamiltonian(h: &FullyConnectedHamiltonian, mf: &MeanFieldBasis, block: &[usize]) -> Result<FullyConnectedHamiltonian> {
    check_block(block, h.n())?;
    if mf.n() != h.n() || mf.dims() != h.dims() {
        return Err(Error::InvalidArgument("mean-field basis does not match the Hamiltonian".into()));
    }
    let inner = h.subset_hamiltonian(block)?;
    let rest: Vec<usize> = (0..h.n()).filter(|i| !block.contains(i)).collect();
    let mut onsite: Vec<CMat> = inner.onsite().to_vec();
    let mut channels: Vec<Channel> = inner.channels().to_vec();
    let norm_n = h.norm_n() as f64;
    for ch in h.channels() {
        // power sums of the frozen single-site expectations
        let vals: Vec<f64> = rest
            .iter()
            .map(|&i| {
                let s = mf.sites[i].mean_field_state();
                let hs: Vec<C64> = (&ch.ops[i] * nalgebra::DVector::from_column_slice(&s)).iter().copied().collect();
                linalg::dotc(&s, &hs).re
            })
            .collect();
        let p1: f64 = vals.iter().sum();
        let p2: f64 = vals.iter().map(|v| v * v).sum();
        let e1 = p1;
        let e2 = (p1 * p1 - p2) / 2.0;
        let pre = ch.prefactor(h.norm_n());
        // one block site times (body - 1) frozen sites
        let single = pre * if ch.body == 2 { e1 } else { e2 };
        for (slot, &i) in block.iter().enumerate() {
            onsite[slot] += &ch.ops[i] * linalg::re(single);
        }
        if ch.body == 3 {
            // two block sites times one frozen site, as a two-body channel with the same normalization
            let coupling = pre * e1 * norm_n;
            channels.push(Channel::new(coupling, block.iter().map(|&i| ch.ops[i].clone()).collect(), 2));
        }
    }
    Ok(FullyConnectedHamiltonian::with_norm(h.d(), onsite, channels, h.norm_n())?.with_dense_limit(h.dense_limit()))
}

/// `‖W_L† V_L W_L‖` up to a constant shift, i.e. half the spectral width.
pub fn measured_onsite_norm(h: &FullyConnectedHamiltonian, mf: &MeanFieldBasis, projector: &BlockProjector) -> Result<f64> {
    let v = mean_field_block_hamiltonian(h, mf, &projector.block)?.assemble_dense()?;
    let w = &projector.isometry;
    let compressed = w.adjoint() * v * w;
    let vals = linalg::eigvalsh(&compressed);
    Ok((vals[vals.len() - 1] - vals[0]) / 2.0)
}

#[cfg(test)]
mod tests;
