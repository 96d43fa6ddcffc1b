//! Diagonal similarity transforms `S` mapping a non-Hermitian chain onto its
//! Hermitian counterpart `S⁻¹HS`.

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::model::{Family, GainLossAxis, HamiltonianMatrix, ModelSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityTransform {
    diagonal: Vec<f64>,
    skin_factor: f64,
    family: Family,
    uniform: bool,
}

impl SimilarityTransform {
    pub fn identity(dim: usize, family: Family) -> Self {
        SimilarityTransform {
            diagonal: vec![1.0; dim],
            skin_factor: 1.0,
            family,
            uniform: false,
        }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    /// Ratio between consecutive sites (HN) or cells (SSH).
    pub fn skin_factor(&self) -> f64 {
        self.skin_factor
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// False for models without a uniform transform; the diagonal is then
    /// the identity.
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        v.iter().zip(&self.diagonal).map(|(x, s)| x * s).collect()
    }

    pub fn apply_inverse(&self, v: &[c64]) -> Vec<c64> {
        v.iter().zip(&self.diagonal).map(|(x, s)| x / s).collect()
    }
}

/// Skin factor `r` per matrix step: per site for Hatano–Nelson chains, per
/// unit cell for SSH chains. `r = 1` when the model is Hermitian or has no
/// diagonal similarity to its counterpart (the σz chains).
pub fn skin_factor(spec: &ModelSpec) -> Result<f64> {
    spec.validate()?;
    Ok(match *spec {
        ModelSpec::ContinuousHn {
            mass,
            drift,
            spacing,
            ..
        } => (drift * mass * spacing).exp(),
        ModelSpec::DiscreteHn {
            hop_right,
            hop_left,
            ..
        } => (hop_left / hop_right).sqrt(),
        ModelSpec::NonHermitianSsh {
            intracell,
            gain_loss,
            gainloss_axis: GainLossAxis::Y,
            ..
        } => ((intracell - gain_loss / 2.0) / (intracell + gain_loss / 2.0))
            .abs()
            .sqrt(),
        ModelSpec::NonHermitianSsh { .. } | ModelSpec::BoundarySsh { .. } => 1.0,
    })
}

/// `ln r` per unit of physical position: `b·m` for the continuous model,
/// per site or per cell for the lattices.
pub fn log_skin_per_length(spec: &ModelSpec) -> Result<f64> {
    match *spec {
        ModelSpec::ContinuousHn { mass, drift, .. } => {
            spec.validate()?;
            Ok(drift * mass)
        }
        _ => Ok(skin_factor(spec)?.ln()),
    }
}

pub fn build_similarity(spec: &ModelSpec, dim: usize) -> Result<SimilarityTransform> {
    let expected = spec.dim()?;
    if dim != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: dim,
        });
    }
    let r = skin_factor(spec)?;
    let family = spec.family();
    let diagonal: Vec<f64> = match *spec {
        ModelSpec::ContinuousHn {
            mass,
            drift,
            spacing,
            ..
        } => (0..dim)
            .map(|i| (drift * mass * spacing * i as f64).exp())
            .collect(),
        ModelSpec::DiscreteHn { .. } => (0..dim).map(|i| r.powi(i as i32 + 1)).collect(),
        ModelSpec::NonHermitianSsh {
            gainloss_axis: GainLossAxis::Y,
            ..
        } => (0..dim)
            .map(|i| {
                let (cell, is_b) = (i / 2, i % 2 == 1);
                r.powi(cell as i32 + is_b as i32)
            })
            .collect(),
        ModelSpec::NonHermitianSsh { .. } | ModelSpec::BoundarySsh { .. } => {
            return Ok(SimilarityTransform::identity(dim, family));
        }
    };
    if diagonal.iter().any(|s| !s.is_finite() || *s <= 0.0) {
        return Err(Error::param(
            "skin_factor",
            format!("r = {r} overflows the similarity diagonal over {dim} sites"),
        ));
    }
    Ok(SimilarityTransform {
        diagonal,
        skin_factor: r,
        family,
        uniform: true,
    })
}

/// `S⁻¹HS`, entrywise `H[i][j] · S[j] / S[i]`.
pub fn hermitian_counterpart(
    h: &HamiltonianMatrix,
    s: &SimilarityTransform,
) -> Result<HamiltonianMatrix> {
    if h.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: s.dim(),
        });
    }
    let d = s.diagonal();
    let matrix = Mat::from_fn(h.dim(), h.dim(), |i, j| h.matrix[(i, j)] * (d[j] / d[i]));
    HamiltonianMatrix::new(matrix, h.geometry.clone())
}

/// `max |M[i][j] - conj(M[j][i])|`.
pub fn hermiticity_residual(m: &Mat<c64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}
