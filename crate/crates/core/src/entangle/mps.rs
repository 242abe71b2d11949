//! Matrix product states from explicit vectors by sequential truncated SVD.

use super::{bipartite_matrix, check_dims, permute_sites, trace_distance};
use crate::error::{Error, Result};
use crate::linalg::{self, re, CMat, C64, ONE, ZERO};

#[derive(Debug, Clone)]
pub struct MatrixProductState {
    /// `order[p]` is the original site at chain position `p`.
    pub order: Vec<usize>,
    /// Local dimensions in chain order.
    pub dims: Vec<usize>,
    /// Left-canonical tensors reshaped to `(D_left * d) x D_right`.
    pub tensors: Vec<CMat>,
    /// Bond dimensions between consecutive positions.
    pub bond_dims: Vec<usize>,
    pub max_bond: usize,
    /// Weight discarded at each cut during the sweep.
    pub discarded: Vec<f64>,
}

impl MatrixProductState {
    /// Contract to a vector in the original site order.
    pub fn to_vector(&self) -> Vec<C64> {
        let mut acc = CMat::from_element(1, 1, ONE);
        for (t, &d) in self.tensors.iter().zip(&self.dims) {
            // acc: (prefix) x D_left, t: (D_left * d) x D_right
            let dl = t.nrows() / d;
            let dr = t.ncols();
            let mut next = CMat::zeros(acc.nrows() * d, dr);
            for p in 0..acc.nrows() {
                for s in 0..d {
                    for l in 0..dl {
                        let a = acc[(p, l)];
                        if a == ZERO {
                            continue;
                        }
                        for r in 0..dr {
                            next[(p * d + s, r)] += a * t[(l * d + s, r)];
                        }
                    }
                }
            }
            acc = next;
        }
        let chain: Vec<C64> = acc.column(0).iter().copied().collect();
        let mut inverse = vec![0; self.order.len()];
        for (p, &site) in self.order.iter().enumerate() {
            inverse[site] = p;
        }
        permute_sites(&chain, &self.dims, &inverse).1
    }

    /// `max ‖A†A - 1‖` over all tensors.
    pub fn isometry_defect(&self) -> f64 {
        self.tensors
            .iter()
            .map(|t| (t.adjoint() * t - CMat::identity(t.ncols(), t.ncols())).camax())
            .fold(0.0, f64::max)
    }
}

/// Singular values below this fraction of the largest are dropped as numerical zeros.
pub const SCHMIDT_CUTOFF: f64 = 1e-14;

/// Left-to-right truncated SVD sweep keeping at most `max_bond` values per cut.
pub fn to_mps(state: &[C64], dims: &[usize], order: &[usize], max_bond: usize) -> Result<MatrixProductState> {
    check_dims(state, dims)?;
    if max_bond == 0 {
        return Err(Error::InvalidArgument("bond dimension must be at least 1".into()));
    }
    let n = dims.len();
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        return Err(Error::InvalidArgument("order is not a permutation of the sites".into()));
    }
    let (chain_dims, chain) = permute_sites(state, dims, order);
    let mut tensors = Vec::with_capacity(n);
    let mut bond_dims = Vec::with_capacity(n.saturating_sub(1));
    let mut discarded = Vec::with_capacity(n.saturating_sub(1));
    // rest: D_left x (remaining dims), row-major over the remaining sites
    let mut rest = CMat::from_row_slice(1, chain.len(), &chain);
    for p in 0..n.saturating_sub(1) {
        let d = chain_dims[p];
        let dl = rest.nrows();
        let right = rest.ncols() / d;
        let mat = CMat::from_fn(dl * d, right, |r, c| rest[(r / d, (r % d) * right + c)]);
        let (u, s, vt) = linalg::svd(&mat);
        let numerical_rank = s.iter().take_while(|&&x| x > SCHMIDT_CUTOFF * s[0]).count().max(1);
        let keep = max_bond.min(numerical_rank);
        discarded.push(s[keep..].iter().map(|x| x * x).sum());
        tensors.push(u.columns(0, keep).into_owned());
        let mut next = CMat::from_fn(keep, right, |r, c| vt[(r, c)] * re(s[r]));
        let nrm = next.norm();
        if nrm > 0.0 {
            next /= re(nrm);
        }
        bond_dims.push(keep);
        rest = next;
    }
    let d = chain_dims[n - 1];
    let dl = rest.nrows();
    tensors.push(CMat::from_fn(dl * d, 1, |r, _| rest[(r / d, r % d)]));
    Ok(MatrixProductState {
        order: order.to_vec(),
        dims: chain_dims,
        tensors,
        max_bond: bond_dims.iter().copied().max().unwrap_or(1),
        bond_dims,
        discarded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCheck {
    /// `‖tr_{X^c}|Ω_D⟩⟨Ω_D| − tr_{X^c}|Ω⟩⟨Ω|‖_1`
    pub lhs: f64,
    pub size: usize,
}

/// Trace distance between the region states of the MPS and the exact state.
/// `region` lists original sites and must be contiguous along the chain.
pub fn mps_region_check(mps: &MatrixProductState, exact: &[C64], exact_dims: &[usize], region: &[usize]) -> Result<RegionCheck> {
    check_dims(exact, exact_dims)?;
    if region.is_empty() {
        return Err(Error::InvalidArgument("empty region".into()));
    }
    let mut positions: Vec<usize> = region
        .iter()
        .map(|s| mps.order.iter().position(|o| o == s).ok_or_else(|| Error::InvalidArgument(format!("site {s} not in chain"))))
        .collect::<Result<_>>()?;
    positions.sort_unstable();
    if positions.windows(2).any(|w| w[1] != w[0] + 1) {
        return Err(Error::InvalidArgument("region is not contiguous in the chain order".into()));
    }
    let x: Vec<usize> = positions.iter().map(|&p| mps.order[p]).collect();
    let xc: Vec<usize> = (0..exact_dims.len()).filter(|s| !x.contains(s)).collect();
    let approx = mps.to_vector();
    let lhs = factored_trace_distance(
        &bipartite_matrix(&approx, exact_dims, &x, &xc),
        &bipartite_matrix(exact, exact_dims, &x, &xc),
    )?;
    Ok(RegionCheck { lhs, size: x.len() })
}

/// `‖P P† − Q Q†‖_1` without forming the large side when the complement is small.
fn factored_trace_distance(p: &CMat, q: &CMat) -> Result<f64> {
    let rows = p.nrows();
    let cols = p.ncols() + q.ncols();
    if rows <= cols {
        return trace_distance(&(p * p.adjoint()), &(q * q.adjoint()));
    }
    // B = [P Q] = Z R; the difference is Z (R S R†) Z† with S = diag(1, -1)
    let mut b = CMat::zeros(rows, cols);
    b.columns_mut(0, p.ncols()).copy_from(p);
    b.columns_mut(p.ncols(), q.ncols()).copy_from(q);
    let r = b.qr().r();
    let mut sr = r.adjoint();
    for i in p.ncols()..cols {
        sr.row_mut(i).neg_mut();
    }
    let core = &r * sr;
    Ok(linalg::eigvalsh(&core).iter().map(|v| v.abs()).sum())
}
