use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::mfrg::{self, BlockProjector, LevelMap};
use crate::model::{build_random_gapped, FullyConnectedHamiltonian};
use crate::seed::derive_seed;
use crate::solve::{self, GroundStateSolution};

/// A solved Hamiltonian with an identifier used in reports.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub hamiltonian: FullyConnectedHamiltonian,
    pub ground: GroundStateSolution,
    /// Seeds the random observables and comparison states drawn by the suite.
    pub seed: u64,
}

impl Instance {
    pub fn solve(id: impl Into<String>, hamiltonian: FullyConnectedHamiltonian, seed: u64) -> Result<Self> {
        let ground = solve::solve_dense(&hamiltonian)?;
        Ok(Self { id: id.into(), hamiltonian, ground, seed })
    }

    pub fn vector(&self) -> &[C64] {
        self.ground.vector().expect("instances hold full vectors")
    }

    pub fn constants(&self) -> LevelConstants {
        let h = &self.hamiltonian;
        LevelConstants::new(h.n(), h.k(), h.g0(), h.g1())
    }
}

/// Parameters of one random gapped instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceSpec {
    pub index: usize,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub channels: usize,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn id(&self) -> String {
        format!("rand-{:03}", self.index)
    }

    pub fn build(&self) -> Result<Instance> {
        let h = build_random_gapped(self.n, self.d, self.k, self.seed, self.channels)?;
        Instance::solve(self.id(), h, derive_seed(self.seed, &[1]))
    }
}

/// `count` instances cycling through `n ∈ sizes` and `k ∈ {2, 3}`.
pub fn instance_family(count: usize, sizes: &[usize], d: usize, base_seed: u64) -> Vec<InstanceSpec> {
    (0..count)
        .map(|i| InstanceSpec {
            index: i,
            n: sizes[i % sizes.len()],
            d,
            k: 2 + (i / sizes.len()) % 2,
            channels: 3,
            seed: derive_seed(base_seed, &[i as u64]),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub eps0: f64,
    pub constants: ConstantSet,
    pub norm: NormChoice,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { eps0: 0.01, constants: ConstantSet::Supplement, norm: NormChoice::Exact }
    }
}

const SUITE_CHECKS: [&str; 12] = [
    "band_structure",
    "eckart_young",
    "effective_fidelity",
    "effective_gap",
    "entropy_bound",
    "ladder_consistency",
    "ladder_tail",
    "ml_average",
    "robustness",
    "schmidt_concentration",
    "tail_decay",
    "variance_gap",
];

fn random_product(dims: &[usize], rng: &mut ChaCha8Rng) -> Vec<C64> {
    let mut v = vec![linalg::ONE];
    for &d in dims {
        let s = linalg::random_unit_vector(d, rng);
        v = v.iter().flat_map(|a| s.iter().map(move |b| a * b)).collect();
    }
    v
}

/// Every check on one instance, sorted by check name then instance label.
///
/// Degenerate ground states, or a degenerate top Schmidt value at some site,
/// turn the affected checks into rows with unmet preconditions.
pub fn theorem_suite(inst: &Instance, opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let unmet_all = |names: &[&str]| names.iter().map(|c| CheckReport::unmet(c, &inst.id)).collect::<Vec<_>>();
    if inst.ground.degenerate {
        return Ok(unmet_all(&SUITE_CHECKS));
    }
    let h = &inst.hamiltonian;
    let n = h.n();
    let dims = h.dims();
    let block: Vec<usize> = (0..n.div_ceil(2)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(inst.seed);
    let mut out = Vec::new();

    let ops: Vec<CMat> = block.iter().map(|_| linalg::random_hermitian(h.d(), &mut rng)).collect();
    out.push(check_variance_gap(inst, &block, &ops)?);
    if n >= 2 {
        let bp = Bipartition::half(n);
        for r in 1..=2 {
            let t = entangle::truncate_schmidt(inst.vector(), &dims, &bp, r)?;
            out.push(check_eckart_young(&format!("{}/rank{r}", inst.id), inst.vector(), &t, &dims, &bp)?);
        }
        let p = random_product(&dims, &mut rng);
        out.push(check_eckart_young(&format!("{}/product", inst.id), inst.vector(), &p, &dims, &bp)?);
    }
    out.push(check_entropy_bound(inst, opts.constants)?);

    // Π dropping the top eigenvector
    let dense = h.assemble_dense()?;
    let (_, vecs) = linalg::eigh(&dense);
    let drop_top = vecs.columns(0, vecs.ncols() - 1).into_owned();
    out.extend(check_effective_hamiltonian(inst, "drop_top", &drop_top, opts.norm)?);

    let mf = match mfrg::mean_field_basis(inst.vector(), &dims) {
        Ok(mf) => mf,
        Err(Error::Degenerate { .. }) => {
            out.extend(unmet_all(&[
                "band_structure",
                "ladder_consistency",
                "ladder_tail",
                "ml_average",
                "robustness",
                "schmidt_concentration",
                "tail_decay",
            ]));
            out.sort_by(|a, b| (&a.check, &a.instance).cmp(&(&b.check, &b.instance)));
            return Ok(out);
        }
        Err(e) => return Err(e),
    };

    for i in 0..n {
        out.push(check_robustness(inst, i, &phase_unitary(&mf, i))?);
    }
    out.extend(check_schmidt_concentration(inst, &mf));
    out.push(check_ml_average(inst, &mf, &block)?);

    let tb = build_tight_binding(h, inst.vector(), &dims, &mf, &block)?;
    out.push(check_band_structure(&inst.id, &tb, h.k()));
    out.push(check_ladder_consistency(inst, &mf, &tb)?);
    out.extend(check_tail_decay(inst, &tb));
    out.extend(check_ladder_tail(inst, &tb, opts.eps0));

    let blocks = mfrg::contiguous_blocks(n, block.len());
    for z in 1..=2 {
        let projectors = blocks
            .iter()
            .map(|b| BlockProjector::new(&mf, b, z.min(b.len())))
            .collect::<Result<Vec<_>>>()?;
        let w = LevelMap::new(dims.clone(), projectors)?.to_dense();
        out.extend(check_effective_hamiltonian(inst, &format!("mfrg_z{z}"), &w, opts.norm)?);
    }

    out.sort_by(|a, b| (&a.check, &a.instance).cmp(&(&b.check, &b.instance)));
    Ok(out)
}
