use super::bounds::{gamma_variance, delta_rob};
use super::*;
use crate::linalg::{self, kron, CMat, C64, ONE};
use crate::model::{build_lmg, build_random_gapped, pauli_x, pauli_z};
use crate::solve::solve_dense;
use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lmg_system(n: usize, gamma: f64, h: f64) -> RenormalizedSystem {
    RenormalizedSystem::initial(build_lmg(n, gamma, h).unwrap(), &LanczosOptions::default()).unwrap()
}

fn loose() -> StepOptions {
    StepOptions { enforce_lemma8: false, ..StepOptions::default() }
}

fn robustness_over_twice_gap(h: &FullyConnectedHamiltonian, gap: f64) -> f64 {
    let dr = delta_rob(gamma_variance(h.k(), h.k()), h.g1(), h.gbar1(), h.n(), gap);
    dr / (2.0 * gap)
}

#[test]
fn product_ground_state_gives_local_ground_states() {
    let fields = [0.3, -0.7, 1.1];
    let onsite: Vec<CMat> = fields.iter().map(|&f| pauli_x() * linalg::re(f)).collect();
    let h = FullyConnectedHamiltonian::new(2, onsite.clone(), vec![]).unwrap();
    let gs = solve_dense(&h).unwrap();
    let mf = mean_field_basis_of(&gs).unwrap();
    for (i, site) in mf.sites.iter().enumerate() {
        assert_relative_eq!(site.lambda0(), 1.0, epsilon = 1e-12);
        let (_, vecs) = linalg::eigh(&onsite[i]);
        let local: Vec<C64> = vecs.column(0).iter().copied().collect();
        let ov = linalg::dotc(&local, &site.mean_field_state()).norm();
        assert_relative_eq!(ov, 1.0, epsilon = 1e-12);
        let u = site.rotation();
        assert!((u.adjoint() * &u - CMat::identity(2, 2)).camax() < 1e-12);
        let rotated = &u * nalgebra::DVector::from_vec(site.mean_field_state());
        assert_relative_eq!(rotated[0].re, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn strong_field_polarizes_every_site() {
    let sys = lmg_system(6, 0.8, 1e3);
    let mf = mean_field_basis_of(&sys.ground).unwrap();
    for site in &mf.sites {
        let s = site.mean_field_state();
        assert!((s[0] - ONE).norm() < 1e-6, "{s:?}");
    }
}

#[test]
fn single_site_concentration_on_lmg() {
    let h = build_lmg(8, 0.8, 1.5).unwrap();
    let gs = solve_dense(&h).unwrap();
    let mf = mean_field_basis_of(&gs).unwrap();
    let rhs = robustness_over_twice_gap(&h, gs.gap);
    for site in &mf.sites {
        let lhs = 1.0 - site.lambda0().powi(2);
        assert!(lhs <= rhs, "{lhs} > {rhs}");
        assert_relative_eq!(lhs, site.deviation_weight(), epsilon = 1e-12);
    }
}

#[test]
fn degenerate_top_schmidt_values_are_rejected() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell = vec![linalg::re(s), ZERO, ZERO, linalg::re(s)];
    match mean_field_basis(&bell, &[2, 2]) {
        Err(Error::Degenerate { what, .. }) => assert!(what.contains("site 0"), "{what}"),
        other => panic!("expected degeneracy error, got {other:?}"),
    }
}

#[test]
fn deviation_operator_counts_flipped_sites() {
    let h = build_lmg(4, 0.8, 1.5).unwrap();
    let mf = mean_field_basis_of(&solve_dense(&h).unwrap()).unwrap();
    let m = DeviationOperator::new(&mf, &[1, 2]).unwrap();
    assert_eq!(m.value(&[0, 0, 0, 0]), 0);
    assert_eq!(m.value(&[1, 1, 0, 0]), 1);
    assert_eq!(m.value(&[1, 1, 1, 1]), 2);
    let diag = m.diagonal();
    assert_eq!(diag.len(), 16);
    assert!(diag.iter().all(|&x| x <= 2));
    // index 0b0110 flips sites 1 and 2
    assert_eq!(diag[0b0110], 2);
    assert_eq!(diag[0b1001], 0);
}

#[test]
fn mean_deviation_count_is_bounded() {
    let h = build_lmg(8, 0.8, 1.5).unwrap();
    let gs = solve_dense(&h).unwrap();
    let mf = mean_field_basis_of(&gs).unwrap();
    let block = [0, 1, 2, 3];
    let w = deviation_weights(gs.vector().unwrap(), &h.dims(), &mf, &block).unwrap();
    let mean: f64 = w.iter().enumerate().map(|(x, p)| x as f64 * p).sum();
    let rhs = robustness_over_twice_gap(&h, gs.gap) * block.len() as f64;
    assert!(mean <= rhs, "{mean} > {rhs}");
    // per-site deviation weights add up to the mean count
    let per_site: f64 = block.iter().map(|&i| mf.sites[i].deviation_weight()).sum();
    assert_relative_eq!(mean, per_site, epsilon = 1e-10);
}

/// `Π_{=x}` built from the projectors `|0⟩⟨0|` and `1 - |0⟩⟨0|` on each block site.
fn projector_oracle(state: &[C64], dims: &[usize], mf: &MeanFieldBasis, block: &[usize]) -> Vec<f64> {
    let mut w = vec![0.0; block.len() + 1];
    for mask in 0..(1usize << block.len()) {
        let mut v = state.to_vec();
        for (p, &i) in block.iter().enumerate() {
            let s = nalgebra::DVector::from_vec(mf.sites[i].mean_field_state());
            let p0 = &s * s.adjoint();
            let proj = if mask >> p & 1 == 1 { CMat::identity(dims[i], dims[i]) - p0 } else { p0 };
            v = linalg::apply_local(&proj, i, dims, &v);
        }
        w[mask.count_ones() as usize] += linalg::norm(&v).powi(2);
    }
    w
}

#[test]
fn tail_probability_matches_projector_oracle() {
    let h = build_lmg(10, 0.8, 1.5).unwrap();
    let gs = solve_dense(&h).unwrap();
    let mf = mean_field_basis_of(&gs).unwrap();
    let v = gs.vector().unwrap();
    let dims = h.dims();
    let block = [0, 1, 2, 3, 4];
    let oracle = projector_oracle(v, &dims, &mf, &block);
    let w = deviation_weights(v, &dims, &mf, &block).unwrap();
    for (a, b) in w.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
    let mut prev = f64::INFINITY;
    for m in 0..=block.len() + 1 {
        let t = tail_probability(v, &dims, &mf, &block, m).unwrap();
        let expect: f64 = oracle[m.min(oracle.len())..].iter().sum();
        assert!((t - expect).abs() <= 1e-12);
        assert!(t <= prev + 1e-15);
        prev = t;
    }
    assert_eq!(tail_probability(v, &dims, &mf, &block, 0).unwrap(), 1.0);
    assert_eq!(tail_probability(v, &dims, &mf, &block, 6).unwrap(), 0.0);
    assert!(tail_probability(v, &dims, &mf, &block, 7).is_err());
}

#[test]
fn kept_dimension_counts() {
    assert_eq!(kept_dim(4, 2, 2), 11);
    assert_eq!(kept_dim(4, 2, 4), 16);
    assert_eq!(kept_dim(4, 3, 0), 1);
    assert_eq!(kept_dim(2, 11, 1), 21);

    let h = build_lmg(4, 0.8, 1.5).unwrap();
    let mf = mean_field_basis_of(&solve_dense(&h).unwrap()).unwrap();
    for z in 0..=4 {
        let p = BlockProjector::new(&mf, &[0, 1, 2, 3], z).unwrap();
        assert_eq!(p.kept_dim(), kept_dim(4, 2, z));
        assert!(p.isometry_defect() <= 1e-12);
    }
    let p0 = BlockProjector::new(&mf, &[0, 1, 2, 3], 0).unwrap();
    let col: Vec<C64> = p0.isometry.column(0).iter().copied().collect();
    assert_relative_eq!(linalg::dotc(&col, &mf.product_state()).norm(), 1.0, epsilon = 1e-12);
    assert!(BlockProjector::new(&mf, &[0, 1], 3).is_err());
}

#[test]
fn configurations_are_ordered_by_deviation_count() {
    let h = build_lmg(3, 0.8, 1.5).unwrap();
    let mf = mean_field_basis_of(&solve_dense(&h).unwrap()).unwrap();
    let p = BlockProjector::new(&mf, &[0, 1, 2], 2).unwrap();
    let expect: Vec<Vec<usize>> = vec![
        vec![0, 0, 0],
        vec![0, 0, 1],
        vec![0, 1, 0],
        vec![1, 0, 0],
        vec![0, 1, 1],
        vec![1, 0, 1],
        vec![1, 1, 0],
    ];
    assert_eq!(p.configs, expect);
}

fn random_vec(dim: usize, seed: u64) -> Vec<C64> {
    linalg::random_unit_vector(dim, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn level_map_matches_explicit_tensor_product() {
    let h = build_lmg(4, 0.8, 1.5).unwrap();
    let mf = mean_field_basis_of(&solve_dense(&h).unwrap()).unwrap();
    // non-contiguous blocks force the permutation path
    let p0 = BlockProjector::new(&mf, &[0, 2], 1).unwrap();
    let p1 = BlockProjector::new(&mf, &[3, 1], 2).unwrap();
    let w = kron(&p0.isometry, &p1.isometry);
    let map = LevelMap::new(vec![2; 4], vec![p0, p1]).unwrap();
    assert_eq!(map.dims(), vec![3, 4]);
    let x = random_vec(12, 1);
    let y = map.embed(&x);
    let concat: Vec<C64> = (&w * nalgebra::DVector::from_vec(x.clone())).iter().copied().collect();
    // concatenated order is (0, 2, 3, 1); scatter back to site order
    for (idx, amp) in concat.iter().enumerate() {
        let d = |p: usize| (idx >> (3 - p)) & 1;
        let target = (d(0) << 3) | (d(3) << 2) | (d(1) << 1) | d(2);
        assert!((y[target] - amp).norm() < 1e-14);
    }
    let back = map.restrict(&y);
    for (a, b) in back.iter().zip(&x) {
        assert!((a - b).norm() < 1e-13);
    }
    let u = random_vec(16, 2);
    let lhs = linalg::dotc(&u, &map.embed(&x));
    let rhs = linalg::dotc(&map.restrict(&u), &x);
    assert!((lhs - rhs).norm() < 1e-13);
}

#[test]
fn blocks_must_partition_the_sites() {
    let h = build_lmg(4, 0.8, 1.5).unwrap();
    let mf = mean_field_basis_of(&solve_dense(&h).unwrap()).unwrap();
    let p0 = BlockProjector::new(&mf, &[0, 1], 1).unwrap();
    let p1 = BlockProjector::new(&mf, &[1, 2], 1).unwrap();
    assert!(LevelMap::new(vec![2; 4], vec![p0.clone(), p1]).is_err());
    assert!(LevelMap::new(vec![2; 4], vec![p0]).is_err());
}

#[test]
fn full_cutoff_is_unitarily_equivalent() {
    let sys = lmg_system(8, 0.8, 1.5);
    let mf = mean_field_basis_of(&sys.ground).unwrap();
    let next = renormalize_step(&sys, &mf, &contiguous_blocks(8, 4), &[4, 4], &StepOptions::default()).unwrap();
    assert!((next.ground.e0 - sys.ground.e0).abs() <= 1e-10);
    assert!((next.ground.gap - sys.ground.gap).abs() <= 1e-10);
    let a = linalg::eigvalsh(&sys.hamiltonian.to_dense());
    let b = linalg::eigvalsh(&next.hamiltonian.to_dense());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() <= 1e-10);
    }
    let step = &next.trace[0];
    assert!(step.epsilon < 1e-12);
    assert!(step.step_error < 1e-9);
    assert!(step.lemma8.applicable && step.lemma8_holds(1e-9));
}

#[test]
fn effective_hamiltonian_is_hermitian_and_isometry_composes() {
    let sys = lmg_system(6, 0.8, 1.5);
    let mf = mean_field_basis_of(&sys.ground).unwrap();
    let next = renormalize_step(&sys, &mf, &contiguous_blocks(6, 2), &[1, 1, 1], &loose()).unwrap();
    let m = next.hamiltonian.to_dense();
    assert!(crate::operator::hermiticity_defect(&m) <= 1e-12);
    assert!(next.composed_isometry_defect() <= 1e-10);
    let mf2 = mean_field_basis_of(&next.ground).unwrap();
    let third = renormalize_step(&next, &mf2, &[vec![0, 1], vec![2]], &[1, 1], &loose()).unwrap();
    assert_eq!(third.dims, vec![5, 3]);
    assert!(third.composed_isometry_defect() <= 1e-10);
    assert!(crate::operator::hermiticity_defect(&third.hamiltonian.to_dense()) <= 1e-12);
}

#[test]
fn fidelity_is_monotone_in_cutoff() {
    for (n, block) in [(8usize, 4usize), (9, 3)] {
        let sys = lmg_system(n, 0.8, 1.5);
        let exact = sys.ground_vector().to_vec();
        let mf = mean_field_basis_of(&sys.ground).unwrap();
        let blocks = contiguous_blocks(n, block);
        let mut prev = 0.0;
        for z in 0..=block {
            let next = renormalize_step(&sys, &mf, &blocks, &vec![z; blocks.len()], &loose()).unwrap();
            let f = next.fidelity_to(&exact);
            assert!(f >= prev - 1e-12, "n={n} z={z}: {f} < {prev}");
            prev = f;
        }
        assert!((prev - 1.0).abs() < 1e-9);
    }
}

#[test]
fn certified_drift_on_random_instance() {
    let h = build_random_gapped(8, 2, 2, 7, 3).unwrap();
    let sys = RenormalizedSystem::initial(h, &LanczosOptions::default()).unwrap();
    let mf = mean_field_basis_of(&sys.ground).unwrap();
    let mut applicable = 0;
    for z in 1..=4 {
        for norm in [NormMode::Exact, NormMode::ExtensiveBound] {
            let opts = StepOptions { norm, ..loose() };
            let next = renormalize_step(&sys, &mf, &contiguous_blocks(8, 4), &[z, z], &opts).unwrap();
            let step = &next.trace[0];
            if step.lemma8.applicable {
                applicable += 1;
                assert!(step.step_error <= step.lemma8.fidelity_bound + 1e-9);
                assert!(step.gap_after >= step.lemma8.gap_bound - 1e-9);
            }
        }
    }
    assert!(applicable > 0);
}

#[test]
fn large_discarded_weight_is_a_precondition_error() {
    // deep in the ordered phase the ground state is far from any product state
    let sys = lmg_system(8, 0.8, 0.3);
    let mf = mean_field_basis_of(&sys.ground).unwrap();
    let blocks: Vec<Vec<usize>> = vec![(0..8).collect()];
    let p = BlockProjector::new(&mf, &blocks[0], 0).unwrap();
    let c: Vec<C64> = p.isometry.column(0).iter().copied().collect();
    let eps = 1.0 - linalg::dotc(&c, sys.ground_vector()).norm_sqr();
    assert!(eps >= 0.5, "{eps}");
    let res = renormalize_step(&sys, &mf, &blocks, &[0], &StepOptions::default());
    assert!(matches!(res, Err(Error::Precondition(_))));
    let forced = renormalize_step(&sys, &mf, &blocks, &[0], &loose()).unwrap();
    assert!(!forced.trace[0].lemma8.applicable);
    assert!(forced.trace[0].lemma8_holds(0.0));
}

#[test]
fn refused_step_ends_the_run_with_a_stop_reason() {
    let sys = lmg_system(8, 0.8, 0.3);
    let schedule = Schedule::new(vec![LevelSpec::uniform(8, 0)], 1).unwrap();
    let mut seen = Vec::new();
    let out = run_mfrg_observed(sys, &schedule, &StepOptions::default(), |s| seen.push(s.level)).unwrap();
    assert_eq!(out.level, 0);
    assert_eq!(out.stop_reason, Some(StopReason::Precondition));
    assert_eq!(seen, vec![0]);
}

#[test]
fn observer_sees_every_level() {
    let sys = lmg_system(8, 0.8, 1.5);
    let schedule = Schedule::new(vec![LevelSpec::uniform(2, 2), LevelSpec::uniform(2, 1)], 1).unwrap();
    let mut seen = Vec::new();
    let out = run_mfrg_observed(sys, &schedule, &StepOptions::default(), |s| seen.push((s.level, s.total_dim()))).unwrap();
    assert_eq!(seen, vec![(0, 256), (1, 256), (2, 49)]);
    assert_eq!(out.stop_reason, Some(StopReason::ScheduleExhausted));
}

#[test]
fn full_cutoff_schedule_preserves_energy() {
    let sys = lmg_system(8, 0.8, 1.5);
    let e0 = sys.ground.e0;
    let schedule = Schedule::new(vec![LevelSpec::uniform(2, 2), LevelSpec::uniform(2, 2)], 1).unwrap();
    let out = run_mfrg(sys, &schedule, &StepOptions::default()).unwrap();
    assert_eq!(out.level, 2);
    assert!((out.ground.e0 - e0).abs() <= 1e-9);
    assert!(out.trace.iter().all(|s| s.step_error <= 1e-9));
    assert_eq!(out.stop_reason, Some(StopReason::ScheduleExhausted));
}

#[test]
fn large_stop_dim_is_a_no_op() {
    let sys = lmg_system(6, 0.8, 1.5);
    let schedule = Schedule::new(vec![LevelSpec::uniform(2, 1)], 1 << 10).unwrap();
    let out = run_mfrg(sys, &schedule, &StepOptions::default()).unwrap();
    assert_eq!(out.level, 0);
    assert!(out.trace.is_empty());
    assert_eq!(out.stop_reason, Some(StopReason::StopDim));
}

#[test]
fn two_levels_accumulate_errors_under_the_bound_sum() {
    let sys = lmg_system(8, 0.8, 2.0);
    let exact = sys.ground_vector().to_vec();
    let schedule = Schedule::new(vec![LevelSpec::uniform(2, 1), LevelSpec::uniform(2, 1)], 1).unwrap();
    let out = run_mfrg(sys, &schedule, &loose()).unwrap();
    assert_eq!(out.dims, vec![5, 5]);
    assert_eq!(out.trace.len(), 2);
    assert!(out.cumulative_error() <= out.cumulative_bound() + 1e-9);
    // the triangle inequality ties the cumulative error to the end-to-end distance
    let up = out.embed_to_level0(out.ground_vector());
    assert!(linalg::phase_aligned_distance(&exact, &up) <= out.cumulative_error() + 1e-9);
    for s in &out.trace {
        assert!(s.lemma8_holds(1e-9));
        assert!(s.gap_ratio().is_finite());
    }
}

#[test]
fn measured_onsite_block_norm_respects_flow_bound() {
    let h = build_lmg(8, 0.8, 1.5).unwrap();
    let sys = RenormalizedSystem::initial(h.clone(), &LanczosOptions::default()).unwrap();
    let mf = mean_field_basis_of(&sys.ground).unwrap();
    let next = renormalize_step(&sys, &mf, &contiguous_blocks(8, 4), &[2, 2], &loose()).unwrap();
    let (g0_bound, g1_bound) = next.trace[0].flow;
    assert_relative_eq!(g1_bound, 16.0 * 2.0 * h.g1(), epsilon = 1e-12);
    for p in &next.maps[0].projectors {
        let v = measured_onsite_norm(&h, &mf, p).unwrap();
        assert!(v <= g0_bound, "{v} > {g0_bound}");
    }
}

#[test]
fn frozen_environment_reproduces_mean_field_energy() {
    // on a product state, ⟨0_L| V_L |0_L⟩ plus the frozen-frozen terms is the full energy
    let h = build_random_gapped(5, 2, 3, 11, 3).unwrap();
    let mf = mean_field_basis_of(&solve_dense(&h).unwrap()).unwrap();
    let prod = mf.product_state();
    let full = crate::solve::expectation(&h, &prod);
    let block = [1, 3];
    let v = mean_field_block_hamiltonian(&h, &mf, &block).unwrap();
    let rest: Vec<usize> = vec![0, 2, 4];
    let env = h.subset_hamiltonian(&rest).unwrap();
    let block_state = {
        let a = mf.sites[1].mean_field_state();
        let b = mf.sites[3].mean_field_state();
        a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect::<Vec<_>>()
    };
    let env_state = {
        let mut s = vec![ONE];
        for &i in &rest {
            let m = mf.sites[i].mean_field_state();
            s = s.iter().flat_map(|x| m.iter().map(move |y| x * y)).collect();
        }
        s
    };
    let e_block = crate::solve::expectation(&v, &block_state);
    let e_env = crate::solve::expectation(&env, &env_state);
    assert_relative_eq!(e_block + e_env, full, epsilon = 1e-10);
}

#[test]
fn schedule_parses_levels_and_stop_dim() {
    let f = KeyValueFile::parse("stop_dim = 100\nlevel.1.block_size = 4\nlevel.1.z = 2\nlevel.2.block_size = 2\nlevel.2.z = 1, 2\n").unwrap();
    let s = Schedule::from_file(&f).unwrap();
    assert_eq!(s.stop_dim, 100);
    assert_eq!(s.levels, vec![LevelSpec::uniform(4, 2), LevelSpec { block_size: 2, z: vec![1, 2] }]);
    let gap = KeyValueFile::parse("level.1.block_size = 4\nlevel.1.z = 2\nlevel.3.block_size = 2\nlevel.3.z = 1\n").unwrap();
    assert!(Schedule::from_file(&gap).is_err());
    let missing = KeyValueFile::parse("level.1.block_size = 4\n").unwrap();
    assert!(Schedule::from_file(&missing).is_err());
    let bad = KeyValueFile::parse("level.1.size = 4\n").unwrap();
    assert!(Schedule::from_file(&bad).is_err());
    let default = KeyValueFile::parse("level.0.block_size = 2\nlevel.0.z = 1\n").unwrap();
    assert_eq!(Schedule::from_file(&default).unwrap().stop_dim, DEFAULT_STOP_DIM);
    assert!(Schedule::new(vec![], 10).is_err());
}

#[test]
fn contiguous_blocks_cover_sites() {
    assert_eq!(contiguous_blocks(5, 2), vec![vec![0, 1], vec![2, 3], vec![4]]);
    assert_eq!(contiguous_blocks(4, 4), vec![vec![0, 1, 2, 3]]);
}

#[test]
fn polarized_product_has_zero_deviation() {
    let onsite = vec![pauli_z() * linalg::re(-1.0); 4];
    let h = FullyConnectedHamiltonian::new(2, onsite, vec![]).unwrap();
    let gs = solve_dense(&h).unwrap();
    let mf = mean_field_basis_of(&gs).unwrap();
    let w = deviation_weights(gs.vector().unwrap(), &h.dims(), &mf, &[0, 1, 2, 3]).unwrap();
    assert_relative_eq!(w[0], 1.0, epsilon = 1e-12);
    assert!(w[1..].iter().all(|&p| p < 1e-24));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn kept_dim_matches_enumeration(l in 1usize..5, d in 2usize..4, z in 0usize..5, seed in 0u64..100) {
        let z = z.min(l);
        let h = build_random_gapped(l.max(2), d, 2, seed, 1).unwrap();
        let mf = mean_field_basis_of(&solve_dense(&h).unwrap()).unwrap();
        let block: Vec<usize> = (0..l).collect();
        let p = BlockProjector::new(&mf, &block, z).unwrap();
        prop_assert_eq!(p.kept_dim(), kept_dim(l, d, z));
        prop_assert!(p.isometry_defect() <= 1e-12);
    }

    #[test]
    fn deviation_weights_sum_to_one(seed in 0u64..200) {
        let h = build_random_gapped(5, 2, 2, seed, 2).unwrap();
        let gs = solve_dense(&h).unwrap();
        let mf = mean_field_basis_of(&gs).unwrap();
        let w = deviation_weights(gs.vector().unwrap(), &h.dims(), &mf, &[0, 2, 4]).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
