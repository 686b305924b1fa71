use super::{CsrMatrix, SymmetricOperator};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
}

const CHUNK: usize = 8;

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite band matrix.
///
/// Storage is row-wise lower band: `band[i * (bw + 1) + (bw - (i - j))]`
/// holds `L[i][j]` for `i - bw <= j <= i`. Fill-in stays inside the band, so
/// the factor of the 1D radial pencils is pentadiagonal and the 2D grid
/// factors cost `O(n · bw²)`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
    /// `Lᵀ` stored row-wise: `upper[i * (bw + 1) + (k - i)]` holds `L[k][i]`.
    upper: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self, FactorError> {
        if a.rows() != a.cols() {
            return Err(FactorError::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let n = a.rows();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for (r, c, v) in a.entries() {
            if c <= r {
                band[r * w + bw - (r - c)] = v;
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // L[i][j] = (A[i][j] - Σ_k L[i][k] L[j][k]) / L[j][j], k from klo to j
                let klo = lo.max(j.saturating_sub(bw));
                let len = j - klo;
                let ri = i * w + bw - (i - klo);
                let rj = j * w + bw - (j - klo);
                let s = band[i * w + bw - (i - j)] - super::fast_dot(&band[ri..ri + len], &band[rj..rj + len]);
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(FactorError::NotPositiveDefinite { row: i, pivot: s });
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + bw - (i - j)] = s / band[j * w + bw];
                }
            }
        }
        let mut upper = vec![0.0; n * w];
        for k in 0..n {
            for i in k.saturating_sub(bw)..=k {
                upper[i * w + (k - i)] = band[k * w + bw - (k - i)];
            }
        }
        Ok(Self { n, bw, band, upper })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = &self.band[i * w + bw - (i - lo)..i * w + bw];
            x[i] = (x[i] - super::fast_dot(row, &x[lo..i])) / self.band[i * w + bw];
        }
        for i in (0..n).rev() {
            x[i] /= self.band[i * w + bw];
            let xi = x[i];
            let lo = i.saturating_sub(bw);
            let row = &self.band[i * w + bw - (i - lo)..i * w + bw];
            for (xk, l) in x[lo..i].iter_mut().zip(row) {
                *xk -= l * xi;
            }
        }
    }

    /// Solves for several right-hand sides in one pass over the factor.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let m = rhs.len();
        if m == 0 {
            return Vec::new();
        }
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let m_in = m;
        let m = m.div_ceil(CHUNK) * CHUNK;
        // row-major n × m, padded with zero columns, so each row of
        // right-hand sides is contiguous
        let mut x = vec![0.0; n * m];
        for (j, b) in rhs.iter().enumerate() {
            assert_eq!(b.len(), n);
            for (i, &v) in b.iter().enumerate() {
                x[i * m + j] = v;
            }
        }
        // both sweeps accumulate chunks of right-hand sides in registers
        for c0 in (0..m).step_by(CHUNK) {
            for i in 0..n {
                let lo = i.saturating_sub(bw);
                let mut acc = [0.0f64; CHUNK];
                acc.copy_from_slice(&x[i * m + c0..i * m + c0 + CHUNK]);
                let row = &self.band[i * w + bw - (i - lo)..i * w + bw];
                for (k, &l) in (lo..i).zip(row) {
                    let xk = &x[k * m + c0..k * m + c0 + CHUNK];
                    for t in 0..CHUNK {
                        acc[t] -= l * xk[t];
                    }
                }
                let d = self.band[i * w + bw];
                for t in 0..CHUNK {
                    x[i * m + c0 + t] = acc[t] / d;
                }
            }
            for i in (0..n).rev() {
                let hi = (i + bw + 1).min(n);
                let mut acc = [0.0f64; CHUNK];
                acc.copy_from_slice(&x[i * m + c0..i * m + c0 + CHUNK]);
                let col = &self.upper[i * w + 1..i * w + 1 + (hi - i - 1)];
                for (k, &l) in (i + 1..hi).zip(col) {
                    let xk = &x[k * m + c0..k * m + c0 + CHUNK];
                    for t in 0..CHUNK {
                        acc[t] -= l * xk[t];
                    }
                }
                let d = self.band[i * w + bw];
                for t in 0..CHUNK {
                    x[i * m + c0 + t] = acc[t] / d;
                }
            }
        }
        (0..m_in).map(|j| (0..n).map(|i| x[i * m + j]).collect()).collect()
    }

    /// [`BandedCholesky::solve_many`] followed by refinement against `a`
    /// until the largest relative correction drops below `rtol` (at most
    /// four steps). Refinement contracts the error by roughly the size of
    /// the first correction, so the error left after a correction `c` is
    /// about `c²`.
    pub fn solve_many_refined<A: SymmetricOperator + ?Sized>(
        &self,
        a: &A,
        rhs: &[Vec<f64>],
        rtol: f64,
    ) -> Vec<Vec<f64>> {
        let mut x = self.solve_many(rhs);
        for _ in 0..4 {
            let r: Vec<Vec<f64>> = rhs
                .iter()
                .zip(&x)
                .map(|(b, xi)| b.iter().zip(a.apply(xi)).map(|(bi, ai)| bi - ai).collect())
                .collect();
            let dx = self.solve_many(&r);
            let mut worst: f64 = 0.0;
            for (xi, di) in x.iter_mut().zip(&dx) {
                let scale = super::norm2(xi).max(f64::MIN_POSITIVE);
                worst = worst.max(super::norm2(di) / scale);
                for (v, d) in xi.iter_mut().zip(di) {
                    *v += d;
                }
            }
            if worst <= rtol {
                break;
            }
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solve followed by iterative refinement against the original matrix
    /// until the relative residual drops below `rtol` or stalls.
    pub fn solve_refined<A: SymmetricOperator + ?Sized>(&self, a: &A, b: &[f64], rtol: f64) -> (Vec<f64>, f64) {
        let bnorm = super::norm2(b).max(f64::MIN_POSITIVE);
        let mut x = self.solve(b);
        let mut rel = f64::INFINITY;
        for _ in 0..4 {
            let ax = a.apply(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let next = super::norm2(&r) / bnorm;
            if next >= rel {
                break;
            }
            rel = next;
            if rel <= rtol {
                break;
            }
            let dx = self.solve(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        (x, rel)
    }
}
