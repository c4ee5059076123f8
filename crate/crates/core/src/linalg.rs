//! Bridge to `faer` for the two cubic kernels: GEMM and the self-adjoint
//! eigendecomposition. Everything else in the crate works on row-major
//! `Vec<C64>` buffers.
//!
//! Matrices whose imaginary parts are exactly zero go through the real
//! kernels. Parallelism is pinned to `Par::Seq` so results do not depend on
//! the thread count of the caller.

use faer::{Accum, Mat, Par, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

fn is_real(a: &[C64]) -> bool {
    a.iter().all(|z| z.im == 0.0)
}

fn to_real(a: &[C64], n: usize, m: usize) -> Mat<f64> {
    Mat::from_fn(n, m, |i, j| a[i * m + j].re)
}

fn to_complex(a: &[C64], n: usize, m: usize) -> Mat<C64> {
    Mat::from_fn(n, m, |i, j| a[i * m + j])
}

/// `a` is `n x k`, `b` is `k x m`; both row-major.
pub(crate) fn matmul(a: &[C64], b: &[C64], n: usize, k: usize, m: usize) -> Vec<C64> {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    let mut out = vec![C64::new(0.0, 0.0); n * m];
    if n == 0 || m == 0 {
        return out;
    }
    if is_real(a) && is_real(b) {
        let (fa, fb) = (to_real(a, n, k), to_real(b, k, m));
        let mut c = Mat::<f64>::zeros(n, m);
        faer::linalg::matmul::matmul(c.as_mut(), Accum::Replace, fa.as_ref(), fb.as_ref(), 1.0, Par::Seq);
        for i in 0..n {
            for j in 0..m {
                out[i * m + j] = C64::new(c[(i, j)], 0.0);
            }
        }
    } else {
        let (fa, fb) = (to_complex(a, n, k), to_complex(b, k, m));
        let mut c = Mat::<C64>::zeros(n, m);
        faer::linalg::matmul::matmul(
            c.as_mut(),
            Accum::Replace,
            fa.as_ref(),
            fb.as_ref(),
            C64::new(1.0, 0.0),
            Par::Seq,
        );
        for i in 0..n {
            for j in 0..m {
                out[i * m + j] = c[(i, j)];
            }
        }
    }
    out
}

/// Eigenvalues in ascending order and the row-major matrix whose columns are
/// the matching orthonormal eigenvectors. Reads the lower triangle only.
pub(crate) fn eigh(a: &[C64], n: usize) -> Result<(Vec<f64>, Vec<C64>)> {
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut vecs = vec![C64::new(0.0, 0.0); n * n];
    let mut vals = Vec::with_capacity(n);
    if is_real(a) {
        let evd = to_real(a, n, n)
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::EigenFailure)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        for i in 0..n {
            vals.push(s[i]);
            for j in 0..n {
                vecs[i * n + j] = C64::new(u[(i, j)], 0.0);
            }
        }
    } else {
        let evd = to_complex(a, n, n)
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::EigenFailure)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        for i in 0..n {
            vals.push(s[i].re);
            for j in 0..n {
                vecs[i * n + j] = u[(i, j)];
            }
        }
    }
    Ok((vals, vecs))
}
