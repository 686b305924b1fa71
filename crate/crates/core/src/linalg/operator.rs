use super::CsrMatrix;

/// A symmetric operator that can be applied to vectors and has an assembled
/// matrix available for factorisation.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Vec<f64>;
    fn assembled(&self) -> &CsrMatrix;
    /// `(D, w)` with the operator equal to `Dᵀ diag(w) D`, if known.
    fn root(&self) -> Option<(&CsrMatrix, &[f64])> {
        None
    }
}

impl SymmetricOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.mul_vec(x)
    }

    fn assembled(&self) -> &CsrMatrix {
        self
    }
}

/// `Dᵀ diag(w) D` applied in factored form.
///
/// For a biharmonic form the assembled entries are of size `h⁻⁴` while
/// smooth vectors are mapped to values of order one, so the assembled
/// product loses about `ε·h⁻⁴` relative accuracy. The factored product
/// only loses `ε·h⁻²`.
#[derive(Debug, Clone, Copy)]
pub struct GramOperator<'a> {
    pub root: &'a CsrMatrix,
    pub weights: &'a [f64],
    pub assembled: &'a CsrMatrix,
}

impl SymmetricOperator for GramOperator<'_> {
    fn dim(&self) -> usize {
        self.root.cols()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let dx = self.root.mul_vec(x);
        let wdx: Vec<f64> = dx.iter().zip(self.weights).map(|(v, w)| v * w).collect();
        self.root.mul_transpose_vec(&wdx)
    }

    fn assembled(&self) -> &CsrMatrix {
        self.assembled
    }

    fn root(&self) -> Option<(&CsrMatrix, &[f64])> {
        Some((self.root, self.weights))
    }
}
