use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat};

use super::norm_1;
use crate::error::{Error, Result};
use crate::model::{max_abs, HamiltonianMatrix};
use crate::similarity::SimilarityTransform;

/// Right-eigenvector matrices with `‖R‖₁‖R⁻¹‖₁` above this are rejected.
pub const DEFECTIVE_CONDITION: f64 = 1e12;

/// `H = Σ_n E_n |R_n⟩⟨L_n|` with `⟨L_n|R_m⟩ = δ_nm`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<c64>,
    /// Columns are right eigenvectors.
    pub right: Mat<c64>,
    /// Columns are left eigenvectors.
    pub left: Mat<c64>,
    /// `max_n ‖L_n‖ ‖R_n‖`, the worst eigenvalue condition number.
    pub eigen_condition: f64,
    /// `‖R‖₁‖R⁻¹‖₁` of the (possibly preconditioned) eigenvector matrix.
    pub matrix_condition: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max_{n,m} |⟨L_n|R_m⟩ − δ_nm|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let g = self.left.adjoint() * &self.right;
        let mut worst = 0.0_f64;
        for j in 0..g.ncols() {
            for i in 0..g.nrows() {
                let delta = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - c64::new(delta, 0.0)).norm());
            }
        }
        worst
    }

    /// `Σ_n E_n R_n L_n†`.
    pub fn reconstruct(&self) -> Mat<c64> {
        let n = self.dim();
        let scaled = Mat::from_fn(n, n, |i, j| self.right[(i, j)] * self.eigenvalues[j]);
        scaled * self.left.adjoint()
    }

    /// `max|H − Σ_n E_n R_n L_n†| / max|H|`.
    pub fn reconstruction_residual(&self, h: &Mat<c64>) -> f64 {
        let diff = self.reconstruct() - h;
        max_abs(&diff) / max_abs(h).max(f64::MIN_POSITIVE)
    }
}

pub fn decompose(h: &HamiltonianMatrix) -> Result<SpectralDecomposition> {
    decompose_matrix(&h.matrix)
}

/// Eigendecomposition with left vectors taken from the rows of `R⁻¹`.
///
/// When a diagonal similarity makes the coupling magnitudes symmetric (as
/// for any chain with one-way-asymmetric hopping), the balanced matrix is
/// decomposed instead and the eigenvectors are mapped back.
pub fn decompose_matrix(h: &Mat<c64>) -> Result<SpectralDecomposition> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    if !max_abs(h).is_finite() {
        return Err(Error::param("hamiltonian", "contains non-finite entries"));
    }
    match symmetrizing_scale(h) {
        Some(d) => decompose_scaled(h, &d),
        None => decompose_plain(h),
    }
}

/// Decomposes `H̄ = S⁻¹HS` for a given diagonal `S` and maps back.
pub fn decompose_with_similarity(
    h: &HamiltonianMatrix,
    s: &SimilarityTransform,
) -> Result<SpectralDecomposition> {
    if s.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: s.dim(),
        });
    }
    decompose_scaled(&h.matrix, s.diagonal())
}

fn decompose_plain(h: &Mat<c64>) -> Result<SpectralDecomposition> {
    let eig = h.eigen().map_err(|_| Error::NoConvergence)?;
    let n = h.nrows();
    let eigenvalues: Vec<c64> = (0..n).map(|k| eig.S()[k]).collect();
    let mut right = eig.U().to_owned();
    normalize_columns(&mut right);

    let inverse = right.partial_piv_lu().inverse();
    let condition = norm_1(&right) * norm_1(&inverse);
    if !condition.is_finite() || condition > DEFECTIVE_CONDITION {
        return Err(Error::DefectiveMatrix { condition });
    }
    let left = inverse.adjoint().to_owned();
    finish(eigenvalues, right, left, condition)
}

/// `R = D R̄`, `L = D⁻¹ L̄` from the decomposition of `D⁻¹HD`.
///
/// Skin-effect eigenvectors are exponentially localized, which makes `R`
/// too ill-conditioned to invert; `R̄` is close to unitary.
fn decompose_scaled(h: &Mat<c64>, d: &[f64]) -> Result<SpectralDecomposition> {
    let n = h.nrows();
    let hbar = Mat::from_fn(n, n, |i, j| h[(i, j)] * (d[j] / d[i]));
    let bar = decompose_plain(&hbar)?;
    let mut right = Mat::from_fn(n, n, |i, j| bar.right[(i, j)] * d[i]);
    let mut left = Mat::from_fn(n, n, |i, j| bar.left[(i, j)] / d[i]);
    for j in 0..n {
        let norm = column_norm(&right, j);
        if norm > 0.0 {
            for i in 0..n {
                right[(i, j)] /= norm;
                left[(i, j)] *= norm;
            }
        }
    }
    finish(bar.eigenvalues, right, left, bar.matrix_condition)
}

/// Diagonal `D` such that `|(D⁻¹HD)_ij| = |(D⁻¹HD)_ji|` for all `i ≠ j`.
///
/// Propagates `d_j/d_i = sqrt(|H_ji/H_ij|)` over the coupling graph. Returns
/// `None` when some coupling is one-directional, when a cycle is
/// inconsistent, when `D` is trivial, or when its range is unrepresentable.
fn symmetrizing_scale(h: &Mat<c64>) -> Option<Vec<f64>> {
    let n = h.nrows();
    let mut log_d = vec![f64::NAN; n];
    let mut queue = std::collections::VecDeque::new();
    for root in 0..n {
        if !log_d[root].is_nan() {
            continue;
        }
        log_d[root] = 0.0;
        queue.push_back(root);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if j == i {
                    continue;
                }
                let (fwd, back) = (h[(i, j)].norm(), h[(j, i)].norm());
                if fwd == 0.0 && back == 0.0 {
                    continue;
                }
                if fwd == 0.0 || back == 0.0 {
                    return None;
                }
                let want = log_d[i] + 0.5 * (back / fwd).ln();
                if log_d[j].is_nan() {
                    log_d[j] = want;
                    queue.push_back(j);
                } else if (log_d[j] - want).abs() > 1e-9 * (1.0 + want.abs()) {
                    return None;
                }
            }
        }
    }
    let hi = log_d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = log_d.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi - lo < 1e-12 || hi - lo > 1400.0 {
        return None;
    }
    let mid = 0.5 * (hi + lo);
    Some(log_d.iter().map(|l| (l - mid).exp()).collect())
}

fn finish(
    eigenvalues: Vec<c64>,
    right: Mat<c64>,
    mut left: Mat<c64>,
    matrix_condition: f64,
) -> Result<SpectralDecomposition> {
    let n = eigenvalues.len();
    let mut eigen_condition = 0.0_f64;
    for k in 0..n {
        let overlap: c64 = (0..n).map(|i| left[(i, k)].conj() * right[(i, k)]).sum();
        if overlap.norm() == 0.0 || !overlap.norm().is_finite() {
            return Err(Error::DefectiveMatrix {
                condition: f64::INFINITY,
            });
        }
        let fix = overlap.conj().inv();
        for i in 0..n {
            left[(i, k)] *= fix;
        }
        eigen_condition = eigen_condition.max(column_norm(&left, k) * column_norm(&right, k));
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        right,
        left,
        eigen_condition,
        matrix_condition,
    })
}

fn column_norm(m: &Mat<c64>, j: usize) -> f64 {
    (0..m.nrows())
        .map(|i| m[(i, j)].norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn normalize_columns(m: &mut Mat<c64>) {
    for j in 0..m.ncols() {
        let norm = column_norm(m, j);
        if norm > 0.0 {
            for i in 0..m.nrows() {
                m[(i, j)] /= norm;
            }
        }
    }
}
