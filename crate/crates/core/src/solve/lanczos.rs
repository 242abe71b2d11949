use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::GroundStateSolution;
use crate::error::{Error, Result};
use crate::linalg::{self, re, C64, ZERO};
use crate::operator::{Affine, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Residual target for both of the two lowest Ritz pairs.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 400, seed: 0x5eed }
    }
}

struct Outcome {
    e1: f64,
    vector: Vec<C64>,
}

/// Two lowest eigenpairs with full reorthogonalization. When the Krylov space
/// closes before `dim` the run continues from a fresh random vector
/// orthogonal to the basis, so degenerate levels are still found.
fn run(op: &dyn LinearOperator, opts: &LanczosOptions) -> Result<Outcome> {
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let max_iter = opts.max_iter.min(dim).max(1);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_iter.min(512));
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut v = linalg::random_unit_vector(dim, &mut rng);
    let mut w = vec![ZERO; dim];
    let mut best_residual = f64::INFINITY;
    let mut scale = 0.0f64;

    for j in 0..max_iter {
        op.apply(&v, &mut w);
        let a = linalg::dotc(&v, &w).re;
        alpha.push(a);
        linalg::axpy(re(-a), &v, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), beta.last()) {
            linalg::axpy(re(-b), prev, &mut w);
        }
        basis.push(std::mem::take(&mut v));
        for _ in 0..2 {
            for q in &basis {
                let c = linalg::dotc(q, &w);
                linalg::axpy(-c, q, &mut w);
            }
        }
        let b = linalg::norm(&w);
        scale = scale.max(a.abs()).max(b);
        let m = alpha.len();
        let exhausted = m == dim;
        let breakdown = b <= 1e-12 * scale.max(1.0);

        let check = m < 40 || m.is_multiple_of(4) || exhausted || breakdown || j + 1 == max_iter;
        if check {
            let t = tridiagonal(&alpha, &beta);
            let eig = SymmetricEigen::new(t);
            let order = ascending(eig.eigenvalues.as_slice());
            let coupling = if breakdown { 0.0 } else { b };
            let res = |k: usize| coupling * eig.eigenvectors[(m - 1, order[k])].abs();
            let r0 = res(0);
            let r1 = if m > 1 { res(1) } else { 0.0 };
            best_residual = best_residual.min(r0.max(r1));
            // a lone Ritz value says nothing about E1 unless the space is exhausted
            let have_two = m > 1 || exhausted;
            if (r0 <= opts.tol && r1 <= opts.tol && have_two) || exhausted {
                let y: Vec<f64> = (0..m).map(|i| eig.eigenvectors[(i, order[0])]).collect();
                let mut vec = vec![ZERO; dim];
                for (q, &c) in basis.iter().zip(&y) {
                    linalg::axpy(re(c), q, &mut vec);
                }
                linalg::normalize(&mut vec);
                let e1 = if m > 1 { eig.eigenvalues[order[1]] } else { f64::INFINITY };
                return Ok(Outcome { e1, vector: vec });
            }
        }

        if breakdown {
            // restart orthogonal to everything found so far
            let mut fresh = linalg::random_unit_vector(dim, &mut rng);
            for _ in 0..2 {
                for q in &basis {
                    let c = linalg::dotc(q, &fresh);
                    linalg::axpy(-c, q, &mut fresh);
                }
            }
            if linalg::normalize(&mut fresh) < 1e-8 {
                return Err(Error::NotConverged { iterations: j + 1, residual: best_residual });
            }
            beta.push(0.0);
            v = fresh;
        } else {
            beta.push(b);
            w.iter_mut().for_each(|z| *z /= b);
            v = std::mem::replace(&mut w, vec![ZERO; dim]);
        }
    }
    Err(Error::NotConverged { iterations: max_iter, residual: best_residual })
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let m = alpha.len();
    DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    })
}

fn ascending(vals: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    order
}

pub fn solve_lanczos(op: &dyn LinearOperator, dims: Vec<usize>, opts: &LanczosOptions) -> Result<GroundStateSolution> {
    let out = run(op, opts)?;
    let mut v = out.vector;
    linalg::fix_phase(&mut v);
    let e0 = super::expectation(op, &v);
    let residual = super::residual(op, &v, e0);
    Ok(GroundStateSolution::from_vector(dims, v, e0, out.e1, residual))
}

/// Largest eigenvalue, returned as an upper estimate (Ritz value plus residual).
pub fn extremal_eigenvalue(op: &dyn LinearOperator, opts: &LanczosOptions) -> Result<f64> {
    if op.prefers_dense() || op.dim() <= 64 {
        let vals = linalg::eigvalsh(&op.to_dense());
        return Ok(*vals.last().expect("nonempty"));
    }
    let neg = Affine { inner: op, scale: -1.0, shift: 0.0 };
    let out = run(&neg, opts)?;
    let top = super::expectation(op, &out.vector);
    let res = super::residual(op, &out.vector, top);
    Ok(top + res)
}
