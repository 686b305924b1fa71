//! Small self-contained linear algebra kernels: compressed sparse rows,
//! banded Cholesky and a cyclic Jacobi eigensolver for projected problems.

mod banded;
mod jacobi;
mod operator;
mod sparse;

pub use banded::{BandedCholesky, FactorError};
pub use jacobi::symmetric_eigen;
pub use operator::{GramOperator, SymmetricOperator};
pub use sparse::{CsrMatrix, Triplets};

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Uncompensated dot product with four partial sums, for hot loops where
/// the compensated [`crate::sum::dot`] is too slow.
pub fn fast_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() / 4 * 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
