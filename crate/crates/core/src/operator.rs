//! Matrix-free operators.

use crate::linalg::{CMat, C64, ZERO};

/// A Hermitian operator known through its action on vectors.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y = A x`; both slices have length `dim()`.
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// Dense matrix by applying the operator to every basis vector.
    fn to_dense(&self) -> CMat {
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        let mut e = vec![ZERO; n];
        let mut col = vec![ZERO; n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
            e[j] = ZERO;
        }
        m
    }

    /// Whether `to_dense` is cheaper than a matrix-free iterative solve.
    fn prefers_dense(&self) -> bool {
        false
    }
}

/// A stored dense matrix.
#[derive(Debug, Clone)]
pub struct DenseOperator(pub CMat);

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.0.nrows();
        y.iter_mut().for_each(|v| *v = ZERO);
        // column-major storage: accumulate column by column
        for j in 0..n {
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            let col = self.0.column(j);
            for (yi, a) in y.iter_mut().zip(col.iter()) {
                *yi += a * xj;
            }
        }
    }

    fn to_dense(&self) -> CMat {
        self.0.clone()
    }

    fn prefers_dense(&self) -> bool {
        true
    }
}

/// `scale * A + shift`, used to reach the top of a spectrum with a
/// bottom-of-spectrum solver.
pub struct Affine<'a> {
    pub inner: &'a dyn LinearOperator,
    pub scale: f64,
    pub shift: f64,
}

impl LinearOperator for Affine<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.inner.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = *yi * self.scale + xi * self.shift;
        }
    }

    fn prefers_dense(&self) -> bool {
        self.inner.prefers_dense()
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (**self).apply(x, y)
    }
    fn to_dense(&self) -> CMat {
        (**self).to_dense()
    }
    fn prefers_dense(&self) -> bool {
        (**self).prefers_dense()
    }
}

/// Hermiticity defect `max |A - A†|`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}
