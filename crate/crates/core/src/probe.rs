//! Discrete versions of the identities behind the Euclidean buckling
//! inequality, evaluated on computed planar eigenfunctions.
//!
//! For an eigenfunction `u` with `‖∇u‖ = 1` and a coordinate `x^p`, the
//! field `x^p ∇u` splits as `∇h + w` with `w` orthogonal to all gradients
//! of clamped functions. Setting `∇q = ∇(x^p u) − ∇h`, the continuum
//! identities are
//!
//! * `1 + 2‖∂_p u‖² = 2∫ x^p u ∂_p(Δu)` (reported as `L21`, zero in the limit),
//! * `3‖∂_p u‖² − 2Λ‖∇q‖² = ½ − Λ‖u‖²/2` (reported as `L22`),
//! * `Λ Σ_p ‖w_p‖² ≥ 1` (reported as the margin `L23 = Λ Σ_p ‖w_p‖² − 1`),
//!
//! and, combining the last two, `Λ Σ_p ‖∇q_p‖² ≥ 5/3`. Reaching `3` for every
//! eigenfunction would give the coefficient `4/n` bound. The statistic is
//! reported against both numbers and neither is asserted.
//!
//! The second identity needs `⟨w, ∇Δ(x^p u)⟩ = 0`. Since `Δ(x^p u)` does not
//! vanish on the boundary, `w` is not orthogonal to its gradient, and the
//! computed `L22` tends to `−⟨w, ∇Δ(x^p u)⟩` rather than to zero (about `1`
//! for the first mode of the square). That term is reported alongside, and
//! `L22` plus the term does converge to zero.
//!
//! Everything uses the discrete gradient and weights that define `B`, so
//! the projection is exactly orthogonal in the discrete inner product and
//! the residuals measure discretisation error only.

use crate::discretize::{build_planar, DiscreteGradient, DiscretizeError, OperatorPair, PlanarGrid, Shape};
use crate::eigensolve::{smallest_pairs, EigenError, EigenResult, SolverOptions};
use crate::linalg::{symmetric_eigen, BandedCholesky, SymmetricOperator};
use crate::sum::{dot, sum};
use serde::Serialize;
use thiserror::Error;

pub const PROVED_FLOOR: f64 = 5.0 / 3.0;
pub const CONJECTURAL_THRESHOLD: f64 = 3.0;
/// Relative gap below which neighbouring eigenvalues form one cluster.
pub const CLUSTER_GAP: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error(transparent)]
    Discretize(#[from] DiscretizeError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error("gradient Gram matrix is singular: {0}")]
    SingularProjection(String),
    #[error("eigenfunction {index} has zero gradient")]
    InvalidEigenfunction { index: usize },
    #[error("eigenvector {index} has length {len}, expected {dim}")]
    LengthMismatch { index: usize, len: usize, dim: usize },
    #[error("index {index} out of range ({available} eigenpairs)")]
    IndexOutOfRange { index: usize, available: usize },
    #[error("coordinate index must be 0 or 1, got {0}")]
    BadAxis(usize),
}

/// Decomposition `x^p ⊙ Gu = Gh + w`.
#[derive(Debug, Clone)]
pub struct Projection {
    pub h: Vec<f64>,
    pub w: Vec<f64>,
    /// `max_j |⟨w, Gφ_j⟩_W| / ‖w‖` over the nodal basis `φ_j`.
    pub orthogonality_defect: f64,
    /// `|‖x^p ⊙ Gu‖² − ‖Gh‖² − ‖w‖²| / ‖x^p ⊙ Gu‖²`.
    pub pythagoras_defect: f64,
    pub w_norm2: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QNorms {
    pub grad_q_norm2: f64,
    pub u_norm2: f64,
    pub w_norm2: f64,
    /// `‖u‖² − ‖∇q‖² − ‖w‖²`, zero in the continuum.
    pub identity_defect: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LemmaResiduals {
    pub l21: [f64; 2],
    pub l22: [f64; 2],
    /// `⟨w, ∇Δ(x^p u)⟩` for each `p`.
    pub l22_boundary_term: [f64; 2],
    pub l23: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplingMatrices {
    /// `b[p][i][j] = Σ W x^p ⟨Gu_i, Gu_j⟩`.
    pub b: [Vec<Vec<f64>>; 2],
    /// `c[p][i][j] = ⟨G ∂_p u_i, G u_j⟩_W`.
    pub c: [Vec<Vec<f64>>; 2],
    pub b_defect: f64,
    pub c_defect: f64,
    pub c_diagonal: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeEntry {
    pub i: usize,
    pub p: usize,
    #[serde(rename = "L21")]
    pub l21: f64,
    #[serde(rename = "L22")]
    pub l22: f64,
    #[serde(rename = "L22_boundary_term")]
    pub l22_boundary_term: f64,
    pub partial_norm2: f64,
    pub w_norm2: f64,
    pub grad_q_norm2: f64,
    pub u_norm2: f64,
    pub identity_defect: f64,
    pub orthogonality_defect: f64,
    pub pythagoras_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbePerIndex {
    pub i: usize,
    pub value: f64,
    #[serde(rename = "L23")]
    pub l23: f64,
    pub conjecture_statistic: f64,
    pub proved_floor: f64,
    pub conjectural_threshold: f64,
    pub above_proved_floor: bool,
    pub above_conjectural_threshold: bool,
    /// `Σ_p ‖∂_p u‖²`, which is `1` by normalisation.
    pub gradient_norm2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub domain: Shape,
    pub resolution: usize,
    pub entries: Vec<ProbeEntry>,
    pub per_i: Vec<ProbePerIndex>,
    pub b_defect: f64,
    pub c_defect: f64,
    pub c_diagonal: f64,
    pub max_eigen_residual: f64,
}

/// Ratios `coarse / fine` of the magnitudes of each residual.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementReport {
    pub coarse: usize,
    pub fine: usize,
    pub entries: Vec<RefinementEntry>,
    pub c_defect_ratio: f64,
    pub c_diagonal_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementEntry {
    pub i: usize,
    pub p: usize,
    #[serde(rename = "L21_ratio")]
    pub l21_ratio: f64,
    #[serde(rename = "L22_ratio")]
    pub l22_ratio: f64,
    /// Ratio for `L22` plus its boundary term.
    #[serde(rename = "L22_corrected_ratio")]
    pub l22_corrected_ratio: f64,
    pub identity_defect_ratio: f64,
}

/// Eigenpairs of one planar pencil together with what the probes need.
pub struct Probe {
    shape: Shape,
    resolution: usize,
    pair: OperatorPair,
    grad: DiscreteGradient,
    chol: BandedCholesky,
    values: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    max_eigen_residual: f64,
}

fn fix_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .cloned()
        .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

impl Probe {
    /// Solves for the `count` lowest buckling pairs of a planar domain.
    /// Two extra pairs are computed so that a degenerate cluster at the top
    /// can still be put in canonical form.
    pub fn solve(shape: &Shape, resolution: usize, count: usize, options: &SolverOptions) -> Result<Self, ProbeError> {
        let (pair, grad) = build_planar(shape, resolution)?;
        let extra = (count + 2).min(pair.dim() / 4);
        let eig = smallest_pairs(&pair.buckling_operator(), &pair.b, extra, options)?;
        let mut probe = Self::from_parts(*shape, resolution, pair, grad, eig)?;
        probe.values.truncate(count);
        probe.vectors.truncate(count);
        Ok(probe)
    }

    /// Wraps an existing pencil and its B-orthonormal eigenpairs.
    pub fn from_parts(
        shape: Shape,
        resolution: usize,
        pair: OperatorPair,
        grad: DiscreteGradient,
        eig: EigenResult,
    ) -> Result<Self, ProbeError> {
        if pair.planar_grid().is_none() {
            return Err(DiscretizeError::NotPlanar(shape.name()).into());
        }
        let dim = pair.dim();
        for (index, v) in eig.vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(ProbeError::LengthMismatch {
                    index,
                    len: v.len(),
                    dim,
                });
            }
            if grad.apply(v).iter().all(|&x| x == 0.0) {
                return Err(ProbeError::InvalidEigenfunction { index });
            }
        }
        let chol = BandedCholesky::factor(&pair.b).map_err(|e| ProbeError::SingularProjection(e.to_string()))?;
        let mut probe = Self {
            shape,
            resolution,
            values: eig.values.clone(),
            vectors: eig.vectors,
            max_eigen_residual: eig.residuals.iter().cloned().fold(0.0, f64::max),
            pair,
            grad,
            chol,
        };
        probe.canonicalize();
        Ok(probe)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn pair(&self) -> &OperatorPair {
        &self.pair
    }

    pub fn gradient(&self) -> &DiscreteGradient {
        &self.grad
    }

    fn grid(&self) -> &PlanarGrid {
        self.pair.planar_grid().expect("checked on construction")
    }

    /// Within each cluster of equal eigenvalues, rotates the basis so that
    /// `⟨∂₁u_i, ∂₁u_j⟩` is diagonal, ordered by increasing `‖∂₁u_i‖`.
    /// Eigenvalues are then the Rayleigh quotients of the rotated vectors.
    fn canonicalize(&mut self) {
        let mut start = 0;
        while start < self.values.len() {
            let mut end = start + 1;
            while end < self.values.len() && self.values[end] - self.values[end - 1] <= CLUSTER_GAP * self.values[end] {
                end += 1;
            }
            if end - start > 1 {
                let k = end - start;
                let grads: Vec<Vec<f64>> = self.vectors[start..end].iter().map(|v| self.grad.apply(v)).collect();
                let mut m = vec![0.0; k * k];
                for a in 0..k {
                    for b in 0..k {
                        m[a * k + b] = self.grad.inner(&grads[a], &grads[b], Some(0));
                    }
                }
                let (_, s) = symmetric_eigen(&m, k);
                let old = self.vectors[start..end].to_vec();
                for (c, sc) in s.iter().enumerate() {
                    let mut v = vec![0.0; old[0].len()];
                    for (coef, basis) in sc.iter().zip(&old) {
                        for (x, y) in v.iter_mut().zip(basis) {
                            *x += coef * y;
                        }
                    }
                    fix_sign(&mut v);
                    self.vectors[start + c] = v;
                }
                let a = self.pair.buckling_operator();
                for idx in start..end {
                    let v = &self.vectors[idx];
                    self.values[idx] = dot(v, &a.apply(v)) / dot(v, &self.pair.b.mul_vec(v));
                }
            }
            start = end;
        }
    }

    fn check(&self, i: usize, p: usize) -> Result<(), ProbeError> {
        if i >= self.len() {
            return Err(ProbeError::IndexOutOfRange {
                index: i,
                available: self.len(),
            });
        }
        if p > 1 {
            return Err(ProbeError::BadAxis(p));
        }
        Ok(())
    }

    /// `x^p` at edge midpoints.
    fn edge_coordinate(&self, p: usize) -> Vec<f64> {
        self.grad.midpoints.iter().map(|m| m[p]).collect()
    }

    /// `‖∂_p u_i‖²` from the edges along axis `p`.
    pub fn partial_norm2(&self, i: usize, p: usize) -> Result<f64, ProbeError> {
        self.check(i, p)?;
        let gu = self.grad.apply(&self.vectors[i]);
        Ok(self.grad.inner(&gu, &gu, Some(p)))
    }

    /// Projects `x^p ⊙ Gu_i` onto the range of `G` in the `W` inner product.
    pub fn project_gradient_space(&self, i: usize, p: usize) -> Result<Projection, ProbeError> {
        self.check(i, p)?;
        let x = self.edge_coordinate(p);
        let gu = self.grad.apply(&self.vectors[i]);
        let target: Vec<f64> = x.iter().zip(&gu).map(|(a, b)| a * b).collect();
        let rhs = self.grad.adjoint_weighted(&target);
        let (h, _) = self.chol.solve_refined(&self.pair.b, &rhs, 1e-13);
        let gh = self.grad.apply(&h);
        let w: Vec<f64> = target.iter().zip(&gh).map(|(a, b)| a - b).collect();
        let w_norm2 = self.grad.inner(&w, &w, None);
        let t2 = self.grad.inner(&target, &target, None);
        let gh2 = self.grad.inner(&gh, &gh, None);
        let pythagoras_defect = (t2 - gh2 - w_norm2).abs() / t2.max(f64::MIN_POSITIVE);
        let gtw = self.grad.adjoint_weighted(&w);
        // ‖Gφ_j‖_W is O(1) for the nodal basis, so this is a relative measure
        let orthogonality_defect =
            gtw.iter().fold(0.0f64, |m, x| m.max(x.abs())) / w_norm2.sqrt().max(f64::MIN_POSITIVE);
        Ok(Projection {
            h,
            w,
            orthogonality_defect,
            pythagoras_defect,
            w_norm2,
        })
    }

    /// Norms of `∇q = G(x^p u_i) − Gh` and `u_i`, given the projection.
    pub fn q_norms(&self, i: usize, p: usize, projection: &Projection) -> Result<QNorms, ProbeError> {
        self.check(i, p)?;
        let coords = self.grid().unknown_coordinates();
        let u = &self.vectors[i];
        let xu: Vec<f64> = u.iter().zip(&coords).map(|(v, c)| v * c[p]).collect();
        let gxu = self.grad.apply(&xu);
        let gh = self.grad.apply(&projection.h);
        let gq: Vec<f64> = gxu.iter().zip(&gh).map(|(a, b)| a - b).collect();
        let grad_q_norm2 = self.grad.inner(&gq, &gq, None);
        let u_norm2 = self.u_norm2(i);
        Ok(QNorms {
            grad_q_norm2,
            u_norm2,
            w_norm2: projection.w_norm2,
            identity_defect: u_norm2 - grad_q_norm2 - projection.w_norm2,
        })
    }

    fn u_norm2(&self, i: usize) -> f64 {
        sum(self.vectors[i].iter().zip(&self.pair.mass).map(|(v, m)| m * v * v))
    }

    /// `Σ h² x^p u_i ∂_p(Lu_i)` over the unknowns.
    fn moment_of_laplacian(&self, i: usize, p: usize) -> f64 {
        let grid = self.grid();
        let u = &self.vectors[i];
        let lu = grid.laplacian_on_lattice(u);
        let d = grid.centred_difference(&lu, p);
        let coords = grid.unknown_coordinates();
        sum((0..u.len()).map(|k| self.pair.mass[k] * coords[k][p] * u[k] * d[k]))
    }

    /// `⟨w, ∇Δ(x^p u_i)⟩_W`, with `Δ(x^p u_i)` from the clamped Laplacian
    /// on interior and boundary nodes.
    pub fn l22_boundary_term(&self, i: usize, p: usize, projection: &Projection) -> Result<f64, ProbeError> {
        self.check(i, p)?;
        let grid = self.grid();
        let coords = grid.unknown_coordinates();
        let xu: Vec<f64> = self.vectors[i].iter().zip(&coords).map(|(v, c)| v * c[p]).collect();
        let lap = grid.laplacian_on_lattice(&xu);
        let d = self.grad.apply_to_lattice(&lap, grid.h);
        Ok(self.grad.inner(&projection.w, &d, None))
    }

    /// Residuals of the two identities for `p = 1, 2` and the margin of
    /// the inequality, for eigenpair `i` (zero-based).
    pub fn lemma_residuals(&self, i: usize) -> Result<LemmaResiduals, ProbeError> {
        self.check(i, 0)?;
        let lambda = self.values[i];
        let mut l21 = [0.0; 2];
        let mut l22 = [0.0; 2];
        let mut l22_boundary_term = [0.0; 2];
        let mut w_total = 0.0;
        for p in 0..2 {
            let d2 = self.partial_norm2(i, p)?;
            l21[p] = 1.0 + 2.0 * d2 - 2.0 * self.moment_of_laplacian(i, p);
            let proj = self.project_gradient_space(i, p)?;
            let q = self.q_norms(i, p, &proj)?;
            l22_boundary_term[p] = self.l22_boundary_term(i, p, &proj)?;
            l22[p] = 3.0 * d2 - 2.0 * lambda * q.grad_q_norm2 - 0.5 + lambda * q.u_norm2 / 2.0;
            w_total += q.w_norm2;
        }
        Ok(LemmaResiduals {
            l21,
            l22,
            l22_boundary_term,
            l23: lambda * w_total - 1.0,
        })
    }

    /// `Λ_i Σ_p ‖∇q_pi‖²`.
    pub fn conjecture_statistic(&self, i: usize) -> Result<f64, ProbeError> {
        self.check(i, 0)?;
        let mut total = 0.0;
        for p in 0..2 {
            let proj = self.project_gradient_space(i, p)?;
            total += self.q_norms(i, p, &proj)?.grad_q_norm2;
        }
        Ok(self.values[i] * total)
    }

    /// `b_pij` and `c_pij` for the first `k` eigenpairs, with the largest
    /// deviations from symmetry of `b` and antisymmetry of `c`.
    pub fn coupling_matrices(&self, k: usize) -> Result<CouplingMatrices, ProbeError> {
        if k > self.len() {
            return Err(ProbeError::IndexOutOfRange {
                index: k,
                available: self.len(),
            });
        }
        let grid = self.grid();
        let grads: Vec<Vec<f64>> = self.vectors[..k].iter().map(|v| self.grad.apply(v)).collect();
        let bu: Vec<Vec<f64>> = self.vectors[..k].iter().map(|v| self.pair.b.mul_vec(v)).collect();
        let mut b: [Vec<Vec<f64>>; 2] = [vec![vec![0.0; k]; k], vec![vec![0.0; k]; k]];
        let mut c = b.clone();
        let (mut b_defect, mut c_defect, mut c_diagonal) = (0.0f64, 0.0f64, 0.0f64);
        for p in 0..2 {
            let x = self.edge_coordinate(p);
            let partials: Vec<Vec<f64>> = self.vectors[..k]
                .iter()
                .map(|v| grid.centred_difference_of_unknowns(v, p))
                .collect();
            let wx: Vec<f64> = x.iter().zip(&self.grad.weights).map(|(a, w)| a * w).collect();
            for i in 0..k {
                for j in 0..k {
                    // the product gᵢgⱼ is formed first so that b is exactly symmetric
                    b[p][i][j] = sum((0..wx.len()).map(|e| wx[e] * (grads[i][e] * grads[j][e])));
                    c[p][i][j] = dot(&partials[i], &bu[j]);
                }
            }
            for i in 0..k {
                c_diagonal = c_diagonal.max(c[p][i][i].abs());
                for j in 0..k {
                    b_defect = b_defect.max((b[p][i][j] - b[p][j][i]).abs());
                    c_defect = c_defect.max((c[p][i][j] + c[p][j][i]).abs());
                }
            }
        }
        Ok(CouplingMatrices {
            b,
            c,
            b_defect,
            c_defect,
            c_diagonal,
        })
    }

    /// Every probe for every computed pair.
    pub fn report(&self) -> Result<ProbeReport, ProbeError> {
        let mut entries = Vec::new();
        let mut per_i = Vec::new();
        for i in 0..self.len() {
            let lambda = self.values[i];
            let lemmas = self.lemma_residuals(i)?;
            let mut q_total = 0.0;
            let mut gradient_norm2 = 0.0;
            for p in 0..2 {
                let proj = self.project_gradient_space(i, p)?;
                let q = self.q_norms(i, p, &proj)?;
                let d2 = self.partial_norm2(i, p)?;
                q_total += q.grad_q_norm2;
                gradient_norm2 += d2;
                entries.push(ProbeEntry {
                    i: i + 1,
                    p: p + 1,
                    l21: lemmas.l21[p],
                    l22: lemmas.l22[p],
                    l22_boundary_term: lemmas.l22_boundary_term[p],
                    partial_norm2: d2,
                    w_norm2: q.w_norm2,
                    grad_q_norm2: q.grad_q_norm2,
                    u_norm2: q.u_norm2,
                    identity_defect: q.identity_defect,
                    orthogonality_defect: proj.orthogonality_defect,
                    pythagoras_defect: proj.pythagoras_defect,
                });
            }
            let statistic = lambda * q_total;
            per_i.push(ProbePerIndex {
                i: i + 1,
                value: lambda,
                l23: lemmas.l23,
                conjecture_statistic: statistic,
                proved_floor: PROVED_FLOOR,
                conjectural_threshold: CONJECTURAL_THRESHOLD,
                above_proved_floor: statistic >= PROVED_FLOOR,
                above_conjectural_threshold: statistic >= CONJECTURAL_THRESHOLD,
                gradient_norm2,
            });
        }
        let coupling = self.coupling_matrices(self.len())?;
        Ok(ProbeReport {
            domain: self.shape,
            resolution: self.resolution,
            entries,
            per_i,
            b_defect: coupling.b_defect,
            c_defect: coupling.c_defect,
            c_diagonal: coupling.c_diagonal,
            max_eigen_residual: self.max_eigen_residual,
        })
    }
}

fn ratio(coarse: f64, fine: f64) -> f64 {
    coarse.abs() / fine.abs()
}

/// Compares reports on the same domain at two resolutions.
pub fn refinement(coarse: &ProbeReport, fine: &ProbeReport) -> RefinementReport {
    let entries = coarse
        .entries
        .iter()
        .zip(&fine.entries)
        .map(|(c, f)| RefinementEntry {
            i: c.i,
            p: c.p,
            l21_ratio: ratio(c.l21, f.l21),
            l22_ratio: ratio(c.l22, f.l22),
            l22_corrected_ratio: ratio(c.l22 + c.l22_boundary_term, f.l22 + f.l22_boundary_term),
            identity_defect_ratio: ratio(c.identity_defect, f.identity_defect),
        })
        .collect();
    RefinementReport {
        coarse: coarse.resolution,
        fine: fine.resolution,
        entries,
        c_defect_ratio: ratio(coarse.c_defect, fine.c_defect),
        c_diagonal_ratio: ratio(coarse.c_diagonal, fine.c_diagonal),
    }
}
