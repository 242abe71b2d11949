//! Dense and tensor-product helpers shared by the solvers.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Product of local dimensions.
pub fn total_dim(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Row-major strides; site 0 is the most significant digit.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// `out += scale * (op acting on `site`) input`.
pub fn apply_local_add(op: &CMat, site: usize, dims: &[usize], input: &[C64], out: &mut [C64], scale: C64) {
    let d = dims[site];
    debug_assert_eq!(op.nrows(), d);
    let right: usize = dims[site + 1..].iter().product();
    let left: usize = dims[..site].iter().product();
    let block = d * right;
    for l in 0..left {
        let base = l * block;
        for a in 0..d {
            let dst = base + a * right;
            for b in 0..d {
                let coef = op[(a, b)] * scale;
                if coef == ZERO {
                    continue;
                }
                let src = base + b * right;
                for r in 0..right {
                    out[dst + r] += coef * input[src + r];
                }
            }
        }
    }
}

pub fn apply_local(op: &CMat, site: usize, dims: &[usize], input: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; input.len()];
    apply_local_add(op, site, dims, input, &mut out, ONE);
    out
}

pub fn is_real(m: &CMat) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Hermitian eigendecomposition with eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let (vals, vecs) = if is_real(m) {
        let r = m.map(|z| z.re);
        let e = SymmetricEigen::new(r);
        (e.eigenvalues.as_slice().to_vec(), e.eigenvectors.map(re))
    } else {
        let e = SymmetricEigen::new(m.clone());
        (e.eigenvalues.as_slice().to_vec(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = CMat::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    (sorted_vals, sorted_vecs)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    let mut vals: Vec<f64> = if is_real(m) {
        SymmetricEigen::new(m.map(|z| z.re)).eigenvalues.as_slice().to_vec()
    } else {
        m.clone().symmetric_eigenvalues().as_slice().to_vec()
    };
    vals.sort_by(f64::total_cmp);
    vals
}

/// Operator norm of a Hermitian matrix.
pub fn hermitian_norm(m: &CMat) -> f64 {
    eigvalsh(m).iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = if is_real(m) {
        m.map(|z| z.re).singular_values().as_slice().to_vec()
    } else {
        m.singular_values().as_slice().to_vec()
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Thin SVD `m = U diag(s) V†`, singular values descending.
pub fn svd(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let s = svd.singular_values.as_slice().to_vec();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u_sorted = CMat::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let vt_sorted = CMat::from_fn(order.len(), v_t.ncols(), |r, c| v_t[(order[r], c)]);
    (u_sorted, order.iter().map(|&i| s[i]).collect(), vt_sorted)
}

pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [C64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        let inv = 1.0 / n;
        v.iter_mut().for_each(|z| *z *= inv);
    }
    n
}

/// `y += a x`
pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Distance between two unit vectors after aligning their global phase.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    let ov = dotc(a, b);
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x * phase - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Rotate `v` so its largest-magnitude entry is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        // a small tolerance keeps the choice stable against rounding
        if z.norm() > best_abs + 1e-12 {
            best = i;
            best_abs = z.norm();
        }
    }
    if best_abs > 0.0 {
        let ph = v[best].conj() / best_abs;
        v.iter_mut().for_each(|z| *z *= ph);
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Random Hermitian matrix from complex Gaussian entries, scaled to unit operator norm.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let h = (&g + g.adjoint()) * re(0.5);
    let nrm = hermitian_norm(&h);
    if nrm > 0.0 {
        h / re(nrm)
    } else {
        CMat::identity(d, d)
    }
}

/// Haar-ish random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
        .collect();
    normalize(&mut v);
    v
}

/// Unitary `exp(i phi A)` for Hermitian `A`.
pub fn exp_i_hermitian(a: &CMat, phi: f64) -> CMat {
    let (vals, vecs) = eigh(a);
    let diag = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| C64::from_polar(1.0, phi * l)),
    ));
    &vecs * diag * vecs.adjoint()
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (length `diag.len() - 1`), ascending. Implicit QL.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    d
}

/// Eigenvector of a symmetric tridiagonal matrix for a known eigenvalue,
/// by inverse iteration with a pivoted tridiagonal solve.
pub fn tridiagonal_eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = diag.iter().chain(off).fold(1.0f64, |a, b| a.max(b.abs()));
    let shift = lambda - 1e-13 * scale;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64 / 13.0).collect();
    for _ in 0..4 {
        x = solve_shifted_tridiagonal(diag, off, shift, &x);
        let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    let (mut big, mut idx) = (0.0, 0);
    for (i, v) in x.iter().enumerate() {
        if v.abs() > big + 1e-12 {
            big = v.abs();
            idx = i;
        }
    }
    if x[idx] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    x
}

/// Solve `(T - shift) x = b` with partial pivoting.
fn solve_shifted_tridiagonal(diag: &[f64], off: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // rows stored as (lower, main, upper, upper2) after elimination
    let mut dl: Vec<f64> = off.to_vec();
    let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
    let mut du: Vec<f64> = off.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut rhs = b.to_vec();
    let tiny = f64::MIN_POSITIVE.sqrt();
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            rhs[i + 1] -= f * rhs[i];
            dl[i] = 0.0;
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            if i + 1 < n - 1 {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            du[i] = tmp;
            rhs.swap(i, i + 1);
            rhs[i + 1] -= f * rhs[i];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = rhs[n - 1] / d[n - 1];
    if n >= 2 {
        x[n - 2] = (rhs[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (rhs[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    x
}
