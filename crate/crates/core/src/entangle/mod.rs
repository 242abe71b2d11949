//! Schmidt spectra, entropies and reduced states.

mod mps;

pub use mps::{mps_region_check, to_mps, MatrixProductState, RegionCheck};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::model::Bipartition;
use crate::solve::{CovarianceState, DickeState};

const NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum {
    pub bipartition: Bipartition,
    /// Descending, non-negative.
    pub coefficients: Vec<f64>,
}

impl SchmidtSpectrum {
    pub fn count(&self) -> usize {
        self.coefficients.len()
    }

    /// Number of coefficients above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }

    /// `sum_{m >= r} lambda_m^2` (zero-based), the weight beyond the first `r`.
    pub fn tail_weight(&self, r: usize) -> f64 {
        self.coefficients.iter().skip(r).map(|c| c * c).sum()
    }
}

fn check_normalized(state: &[C64]) -> Result<()> {
    let nrm = linalg::norm(state);
    if (nrm - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidArgument(format!("state norm {nrm} is not 1")));
    }
    Ok(())
}

fn check_dims(state: &[C64], dims: &[usize]) -> Result<()> {
    let dim = linalg::total_dim(dims);
    if state.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: state.len() });
    }
    Ok(())
}

/// Coefficient matrix with rows over the sites of `a` and columns over
/// `b`, each in the listed order.
pub fn bipartite_matrix(state: &[C64], dims: &[usize], a: &[usize], b: &[usize]) -> CMat {
    let strides = linalg::strides(dims);
    let dim_a: usize = a.iter().map(|&i| dims[i]).product();
    let dim_b: usize = b.iter().map(|&i| dims[i]).product();
    let mut m = CMat::zeros(dim_a, dim_b);
    for (idx, amp) in state.iter().enumerate() {
        if *amp == ZERO {
            continue;
        }
        let digit = |site: usize| (idx / strides[site]) % dims[site];
        let row = a.iter().fold(0, |acc, &s| acc * dims[s] + digit(s));
        let col = b.iter().fold(0, |acc, &s| acc * dims[s] + digit(s));
        m[(row, col)] = *amp;
    }
    m
}

/// Reorder sites so that new site `p` is old site `order[p]`.
pub fn permute_sites(state: &[C64], dims: &[usize], order: &[usize]) -> (Vec<usize>, Vec<C64>) {
    let new_dims: Vec<usize> = order.iter().map(|&i| dims[i]).collect();
    let m = bipartite_matrix(state, dims, order, &[]);
    (new_dims, m.column(0).iter().copied().collect())
}

pub fn schmidt(state: &[C64], dims: &[usize], bipartition: &Bipartition) -> Result<SchmidtSpectrum> {
    check_dims(state, dims)?;
    check_normalized(state)?;
    if bipartition.n() != dims.len() {
        return Err(Error::InvalidArgument("bipartition does not cover the sites".into()));
    }
    let m = bipartite_matrix(state, dims, &bipartition.a, &bipartition.b);
    Ok(SchmidtSpectrum { bipartition: bipartition.clone(), coefficients: linalg::singular_values(&m) })
}

/// Von Neumann entropy in nats.
pub fn entropy(spectrum: &SchmidtSpectrum) -> f64 {
    entropy_of_weights(spectrum.coefficients.iter().map(|c| c * c))
}

pub fn entropy_of_weights(weights: impl IntoIterator<Item = f64>) -> f64 {
    weights.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.ln()).sum()
}

/// Half-chain entropy of a permutation-symmetric state.
pub fn dicke_half_entropy(ds: &DickeState) -> Result<f64> {
    let n = ds.n;
    if n % 2 == 1 {
        return Err(Error::InvalidArgument(format!("half cut needs even n, got {n}")));
    }
    let half = n / 2;
    let cmax = ds.coefficients.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    if cmax == 0.0 {
        return Err(Error::InvalidArgument("zero state".into()));
    }
    // coefficients below this never matter at double precision
    let kmax = (0..=n).rev().find(|&k| ds.coefficients[k].abs() >= 1e-18 * cmax).unwrap_or(0);
    let size = half.min(kmax) + 1;
    let ln_half: Vec<f64> = (0..size).map(|k| crate::solve::ln_binomial(half, k)).collect();
    let m = DMatrix::from_fn(size, size, |k1, k2| {
        let k = k1 + k2;
        if k > kmax {
            return 0.0;
        }
        let c = ds.coefficients[k];
        if c == 0.0 {
            return 0.0;
        }
        c * (0.5 * (ln_half[k1] + ln_half[k2] - crate::solve::ln_binomial(n, k))).exp()
    });
    let eig = m.symmetric_eigenvalues();
    Ok(entropy_of_weights(eig.iter().map(|l| l * l)))
}

fn binary_entropy(p: f64) -> f64 {
    let mut s = 0.0;
    if p > 0.0 {
        s -= p * p.ln();
    }
    if p < 1.0 {
        s -= (1.0 - p) * (1.0 - p).ln();
    }
    s
}

/// Entanglement entropy of a set of modes in a Gaussian fermion state.
pub fn fermion_half_entropy(cs: &CovarianceState, region: &[usize]) -> Result<f64> {
    if region.is_empty() || region.len() >= cs.n {
        return Err(Error::InvalidArgument("region must be a nonempty proper subset".into()));
    }
    if region.iter().any(|&i| i >= cs.n) {
        return Err(Error::InvalidArgument("mode outside the system".into()));
    }
    let idx: Vec<usize> = region.iter().flat_map(|&i| [2 * i, 2 * i + 1]).collect();
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| cs.gamma[(idx[r], idx[c])]);
    // singular values come in equal pairs; each pair contributes once
    let s = sub.singular_values();
    Ok(0.5 * s.iter().map(|&nu| binary_entropy((1.0 + nu.clamp(0.0, 1.0)) / 2.0)).sum::<f64>())
}

/// Partial trace over the complement of `region`; rows follow `region` order.
pub fn reduced_density(state: &[C64], dims: &[usize], region: &[usize]) -> Result<CMat> {
    check_dims(state, dims)?;
    if region.is_empty() {
        return Err(Error::InvalidArgument("empty region".into()));
    }
    let bp = Bipartition::new(dims.len(), region)?;
    let m = bipartite_matrix(state, dims, region, &bp.b);
    Ok(&m * m.adjoint())
}

/// `‖rho - sigma‖_1` from the eigenvalues of the difference.
pub fn trace_distance(rho: &CMat, sigma: &CMat) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch { expected: rho.nrows(), got: sigma.nrows() });
    }
    for m in [rho, sigma] {
        let tr = m.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidArgument(format!("trace {tr} is not 1")));
        }
    }
    Ok(linalg::eigvalsh(&(rho - sigma)).iter().map(|v| v.abs()).sum())
}

/// Best rank-`r` approximation across a cut, renormalized.
pub fn truncate_schmidt(state: &[C64], dims: &[usize], bipartition: &Bipartition, r: usize) -> Result<Vec<C64>> {
    check_dims(state, dims)?;
    let m = bipartite_matrix(state, dims, &bipartition.a, &bipartition.b);
    let (u, s, vt) = linalg::svd(&m);
    let keep = r.min(s.len());
    let mut approx = CMat::zeros(m.nrows(), m.ncols());
    for k in 0..keep {
        approx += u.column(k) * vt.row(k) * linalg::re(s[k]);
    }
    // scatter back to the natural site order
    let strides = linalg::strides(dims);
    let mut out = vec![ZERO; state.len()];
    for (idx, slot) in out.iter_mut().enumerate() {
        let digit = |site: usize| (idx / strides[site]) % dims[site];
        let row = bipartition.a.iter().fold(0, |acc, &s| acc * dims[s] + digit(s));
        let col = bipartition.b.iter().fold(0, |acc, &s| acc * dims[s] + digit(s));
        *slot = approx[(row, col)];
    }
    linalg::normalize(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{re, ONE};
    use crate::model::build_lmg;
    use crate::solve::{fock, solve_dense, solve_fermion, solve_lanczos, solve_lmg_dicke, GroundState, LanczosOptions};
    use crate::FermionModel;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bell() -> Vec<C64> {
        let r = re(1.0 / 2f64.sqrt());
        vec![r, ZERO, ZERO, r]
    }

    /// Entropy from eigenvalues of a dense reduced density matrix.
    fn rdm_entropy(state: &[C64], dims: &[usize], region: &[usize]) -> f64 {
        let rho = reduced_density(state, dims, region).unwrap();
        entropy_of_weights(linalg::eigvalsh(&rho))
    }

    #[test]
    fn simple_spectra() {
        let prod = vec![ONE, ZERO, ZERO, ZERO];
        let s = schmidt(&prod, &[2, 2], &Bipartition::half(2)).unwrap();
        assert!((s.coefficients[0] - 1.0).abs() < 1e-15 && s.rank(1e-12) == 1);
        assert_eq!(entropy(&s), 0.0);
        let s = schmidt(&bell(), &[2, 2], &Bipartition::half(2)).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((s.coefficients[0] - r).abs() < 1e-15 && (s.coefficients[1] - r).abs() < 1e-15);
        assert!((entropy(&s) - 2f64.ln()).abs() < 1e-14);
        let uniform = SchmidtSpectrum { bipartition: Bipartition::half(2), coefficients: vec![0.5; 4] };
        assert!((entropy(&uniform) - 4f64.ln()).abs() < 1e-14);
        assert!(schmidt(&[ONE, ONE, ZERO, ZERO], &[2, 2], &Bipartition::half(2)).is_err());
    }

    #[test]
    fn lmg_half_cut_against_rdm() {
        let gs = solve_dense(&build_lmg(8, 0.8, 1.5).unwrap()).unwrap();
        let v = gs.vector().unwrap();
        let s = schmidt(v, &[2; 8], &Bipartition::half(8)).unwrap();
        assert!((s.coefficients.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!((entropy(&s) - rdm_entropy(v, &[2; 8], &[0, 1, 2, 3])).abs() <= 1e-10);
        assert!(s.coefficients.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn reduced_density_cases() {
        let rho = reduced_density(&bell(), &[2, 2], &[0]).unwrap();
        assert!((rho - CMat::identity(2, 2) * re(0.5)).camax() < 1e-15);
        let prod = vec![ZERO, ONE, ZERO, ZERO];
        let rho = reduced_density(&prod, &[2, 2], &[1]).unwrap();
        assert!((rho[(1, 1)] - ONE).norm() < 1e-15 && rho[(0, 0)].norm() < 1e-15);
        assert!(reduced_density(&prod, &[2, 2], &[]).is_err());
    }

    #[test]
    fn trace_distance_cases() {
        let a = CMat::from_diagonal_element(2, 2, ONE).map(|z| z * 0.5);
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
        let p0 = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let p1 = CMat::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
        assert!((trace_distance(&p0, &p1).unwrap() - 2.0).abs() < 1e-15);
        assert!((trace_distance(&a, &p0).unwrap() - 1.0).abs() < 1e-15);
        assert!(trace_distance(&a, &CMat::identity(3, 3)).is_err());
    }

    #[test]
    fn dicke_entropy_cases() {
        let single = DickeState { n: 2, coefficients: vec![0.0, 1.0, 0.0] };
        assert!((dicke_half_entropy(&single).unwrap() - 2f64.ln()).abs() < 1e-14);
        let product = DickeState { n: 6, coefficients: vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0] };
        assert!(dicke_half_entropy(&product).unwrap().abs() < 1e-14);
        assert!(dicke_half_entropy(&DickeState { n: 3, coefficients: vec![1.0, 0.0, 0.0, 0.0] }).is_err());
    }

    #[test]
    fn dicke_entropy_matches_full_vector() {
        for n in [4usize, 6, 8, 10] {
            for h in [1.2, 2.0] {
                let s = solve_lmg_dicke(n, 0.9, h).unwrap();
                let GroundState::Dicke(ds) = &s.state else { unreachable!() };
                let fast = dicke_half_entropy(ds).unwrap();
                let v = ds.to_full_vector().unwrap();
                let slow = entropy(&schmidt(&v, &vec![2; n], &Bipartition::half(n)).unwrap());
                assert!((fast - slow).abs() <= 1e-8, "n={n} h={h}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn dicke_entropy_at_large_n_is_finite() {
        let s = solve_lmg_dicke(10_000, 0.8, 1.5).unwrap();
        let GroundState::Dicke(ds) = &s.state else { unreachable!() };
        let e = dicke_half_entropy(ds).unwrap();
        assert!(e.is_finite() && e > 0.0 && e < 2.0);
    }

    #[test]
    fn fermion_entropy_cases() {
        let m = FermionModel::zero_hopping(6, 0.0, 1.0).unwrap();
        let GroundState::Covariance(cs) = solve_fermion(&m, false).unwrap().state else { unreachable!() };
        assert!(fermion_half_entropy(&cs, &[0, 1, 2]).unwrap().abs() < 1e-12);
        // a maximally mixed mode: Gamma block zero
        let mut mixed = cs.clone();
        mixed.gamma.fill(0.0);
        assert!((fermion_half_entropy(&mixed, &[0]).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert!(fermion_half_entropy(&cs, &[]).is_err());
    }

    #[test]
    fn fermion_entropy_matches_fock_space() {
        for seed in 0..5u64 {
            for (mu, kappa) in [(0.04, 1.0), (1.0, 1.0), (0.5, 0.2)] {
                let m = FermionModel::random(8, kappa, mu, seed).unwrap();
                let GroundState::Covariance(cs) = solve_fermion(&m, false).unwrap().state else { unreachable!() };
                let f = fock::solve(&m).unwrap();
                let fast = fermion_half_entropy(&cs, &[0, 1, 2, 3]).unwrap();
                let slow = rdm_entropy(&f.vector, &[2; 8], &[0, 1, 2, 3]);
                assert!((fast - slow).abs() <= 1e-7, "seed {seed}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn eckart_young_truncation_is_optimal_within_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = linalg::random_unit_vector(64, &mut rng);
        let dims = [2; 6];
        let bp = Bipartition::half(6);
        let sp = schmidt(&v, &dims, &bp).unwrap();
        for r in 1..8 {
            let t = truncate_schmidt(&v, &dims, &bp, r).unwrap();
            let dist: f64 = v.iter().zip(&t).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!(sp.tail_weight(r) <= dist + 1e-12);
        }
    }

    #[test]
    fn lanczos_state_gives_same_entropy() {
        let h = build_lmg(10, 0.8, 1.5).unwrap();
        let d = solve_dense(&h).unwrap();
        let l = solve_lanczos(&h, h.dims(), &LanczosOptions::default()).unwrap();
        let bp = Bipartition::half(10);
        let a = entropy(&schmidt(d.vector().unwrap(), &[2; 10], &bp).unwrap());
        let b = entropy(&schmidt(l.vector().unwrap(), &[2; 10], &bp).unwrap());
        assert!((a - b).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn entropy_symmetric_across_cut(seed in any::<u64>(), n in 2usize..=8, cut in 1usize..8) {
            prop_assume!(cut < n);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = vec![2; n];
            let v = linalg::random_unit_vector(1 << n, &mut rng);
            let region: Vec<usize> = (0..n).filter(|i| (seed >> i) & 1 == 1).take(cut).collect();
            prop_assume!(!region.is_empty() && region.len() < n);
            let bp = Bipartition::new(n, &region).unwrap();
            let flipped = Bipartition { a: bp.b.clone(), b: bp.a.clone() };
            let sa = entropy(&schmidt(&v, &dims, &bp).unwrap());
            let sb = entropy(&schmidt(&v, &dims, &flipped).unwrap());
            prop_assert!((sa - sb).abs() <= 1e-9);
        }

        #[test]
        fn schmidt_tail_equals_rdm_tail(seed in any::<u64>(), n in 2usize..=10, r in 0usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = vec![2; n];
            let v = linalg::random_unit_vector(1 << n, &mut rng);
            let bp = Bipartition::half(n);
            let sp = schmidt(&v, &dims, &bp).unwrap();
            let rho = reduced_density(&v, &dims, &bp.a).unwrap();
            let mut eig = linalg::eigvalsh(&rho);
            eig.reverse();
            let tail: f64 = eig.iter().skip(r).map(|x| x.max(0.0)).sum();
            prop_assert!((sp.tail_weight(r) - tail).abs() <= 1e-10);
        }

        #[test]
        fn reduced_density_is_a_state(seed in any::<u64>(), n in 1usize..=7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = linalg::random_unit_vector(1 << n, &mut rng);
            let rho = reduced_density(&v, &vec![2; n], &[0]).unwrap();
            prop_assert!((rho.trace().re - 1.0).abs() <= 1e-12);
            prop_assert!(linalg::eigvalsh(&rho)[0] >= -1e-12);
        }
    }
}
