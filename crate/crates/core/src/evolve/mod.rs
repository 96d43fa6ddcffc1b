//! Exact time evolution `ψ(t) = e^{-iHt} ψ(0)` under non-Hermitian `H`.
//!
//! The primary route expands `ψ(0)` in biorthonormal left/right eigenvectors
//! and evaluates every requested time directly. A Padé scaling-and-squaring
//! exponential serves as an independent cross-check and as the fallback when
//! the eigenvector matrix is numerically defective.
//!
//! States are carried at unit norm; amplification lives in
//! [`WaveState::log_norm_offset`].

mod expm;
mod spectral;

use faer::{c64, Col, ColRef, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HamiltonianMatrix;
use crate::similarity::SimilarityTransform;

pub use expm::{expm, norm_1, ScaledExp};
pub use spectral::{
    decompose, decompose_matrix, decompose_with_similarity, SpectralDecomposition,
    DEFECTIVE_CONDITION,
};

/// `ψ = e^{log_norm_offset} · amplitudes`, with `amplitudes` normally kept
/// at unit Euclidean norm.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveState {
    pub amplitudes: Vec<c64>,
    pub log_norm_offset: f64,
    pub time: f64,
}

impl WaveState {
    /// Wraps raw amplitudes, moving their norm into the offset.
    pub fn from_amplitudes(amplitudes: Vec<c64>, time: f64) -> Result<Self> {
        let mut state = WaveState {
            amplitudes,
            log_norm_offset: 0.0,
            time,
        };
        state.renormalize()?;
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `ln ‖ψ‖²` of the represented state.
    pub fn log_norm_sq(&self) -> f64 {
        2.0 * self.log_norm_offset + self.amplitude_norm().powi(2).ln()
    }

    fn amplitude_norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Rescales amplitudes to unit norm without changing the represented state.
    pub fn renormalize(&mut self) -> Result<()> {
        let norm = self.amplitude_norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NumericalOverflow("state normalization"));
        }
        for a in &mut self.amplitudes {
            *a /= norm;
        }
        self.log_norm_offset += norm.ln();
        Ok(())
    }

    /// Amplitudes of the represented state; may overflow for strongly
    /// amplified states.
    pub fn raw_amplitudes(&self) -> Vec<c64> {
        let scale = self.log_norm_offset.exp();
        self.amplitudes.iter().map(|a| a * scale).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spectral,
    Expm,
    #[default]
    Auto,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "spectral" => Ok(Method::Spectral),
            "expm" => Ok(Method::Expm),
            "auto" => Ok(Method::Auto),
            other => Err(format!("unknown method `{other}` (spectral|expm|auto)")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Spectral => "spectral",
            Method::Expm => "expm",
            Method::Auto => "auto",
        })
    }
}

/// Expansion coefficients `⟨L_n|ψ0⟩` ready for repeated evaluation.
#[derive(Clone, Debug)]
pub struct ModalState<'a> {
    dec: &'a SpectralDecomposition,
    coefficients: Vec<c64>,
    base_offset: f64,
}

impl<'a> ModalState<'a> {
    pub fn new(dec: &'a SpectralDecomposition, psi0: &WaveState) -> Result<Self> {
        if psi0.dim() != dec.dim() {
            return Err(Error::DimensionMismatch {
                expected: dec.dim(),
                found: psi0.dim(),
            });
        }
        let coefficients = dec.left.adjoint() * ColRef::from_slice(&psi0.amplitudes);
        Ok(ModalState {
            dec,
            coefficients: coefficients.iter().copied().collect(),
            base_offset: psi0.log_norm_offset,
        })
    }

    /// `ψ(t) = Σ_n e^{-iE_n t} R_n ⟨L_n|ψ0⟩`, with the largest growth factor
    /// `max Im(E_n)·t` pulled into the log offset before exponentiating.
    pub fn at(&self, t: f64) -> Result<WaveState> {
        let growth = self
            .dec
            .eigenvalues
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(e, _)| e.im * t)
            .fold(f64::NEG_INFINITY, f64::max);
        let growth = if growth.is_finite() { growth } else { 0.0 };
        let weights = Col::from_fn(self.coefficients.len(), |n| {
            let e = self.dec.eigenvalues[n];
            let phase = c64::new(e.im * t - growth, -e.re * t).exp();
            self.coefficients[n] * phase
        });
        let amplitudes = &self.dec.right * &weights;
        let mut state = WaveState {
            amplitudes: amplitudes.iter().copied().collect(),
            log_norm_offset: self.base_offset + growth,
            time: t,
        };
        state.renormalize()?;
        Ok(state)
    }
}

pub fn propagate_spectral(
    dec: &SpectralDecomposition,
    psi0: &WaveState,
    t: f64,
) -> Result<WaveState> {
    let mut out = ModalState::new(dec, psi0)?.at(t)?;
    out.time = psi0.time + t;
    Ok(out)
}

fn apply_scaled(u: &ScaledExp, psi: &WaveState, t: f64) -> Result<WaveState> {
    if psi.dim() != u.matrix.nrows() {
        return Err(Error::DimensionMismatch {
            expected: u.matrix.nrows(),
            found: psi.dim(),
        });
    }
    let out = &u.matrix * ColRef::from_slice(&psi.amplitudes);
    let mut state = WaveState {
        amplitudes: out.iter().copied().collect(),
        log_norm_offset: psi.log_norm_offset + u.log_scale,
        time: t,
    };
    state.renormalize()?;
    Ok(state)
}

fn propagator(h: &Mat<c64>, t: f64) -> Result<ScaledExp> {
    let a = h * faer::Scale(c64::new(0.0, -t));
    expm(&a)
}

pub fn propagate_expm(h: &HamiltonianMatrix, psi0: &WaveState, t: f64) -> Result<WaveState> {
    if psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi0.dim(),
        });
    }
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    apply_scaled(&propagator(&h.matrix, t)?, psi0, psi0.time + t)
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<WaveState>,
    /// Method that produced the frames (`Auto` is resolved).
    pub method: Method,
}

impl EvolutionResult {
    /// `|ψ_i|²` of the unit-norm amplitudes of frame `k`.
    pub fn site_density(&self, k: usize) -> Vec<f64> {
        self.states[k]
            .amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .collect()
    }

    /// `ln ‖ψ(t_k)‖²`.
    pub fn log_norm(&self, k: usize) -> f64 {
        self.states[k].log_norm_sq()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    for (k, t) in times.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::param("times", format!("entry {k} is not finite")).at_frame(k));
        }
        if k > 0 && *t < times[k - 1] {
            return Err(Error::param("times", "must be ascending").at_frame(k));
        }
    }
    Ok(())
}

/// One frame per requested time, measured from `psi0`.
///
/// `preconditioner` is an optional diagonal similarity used to balance the
/// eigenproblem: the decomposition is computed for `S⁻¹HS` and mapped back.
/// It changes only the numerics, not the propagator.
pub fn evolve_series(
    h: &HamiltonianMatrix,
    psi0: &WaveState,
    times: &[f64],
    method: Method,
    preconditioner: Option<&SimilarityTransform>,
) -> Result<EvolutionResult> {
    check_times(times)?;
    if psi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: psi0.dim(),
        });
    }
    match method {
        Method::Spectral => {
            let dec = build_decomposition(h, preconditioner)?;
            spectral_series(&dec, psi0, times)
        }
        Method::Expm => expm_series(h, psi0, times),
        Method::Auto => match build_decomposition(h, preconditioner) {
            Ok(dec) => spectral_series(&dec, psi0, times),
            Err(Error::DefectiveMatrix { condition }) => {
                log::warn!("eigenvector condition {condition:.3e} too large; falling back to expm");
                expm_series(h, psi0, times)
            }
            Err(e) => Err(e),
        },
    }
}

fn build_decomposition(
    h: &HamiltonianMatrix,
    preconditioner: Option<&SimilarityTransform>,
) -> Result<SpectralDecomposition> {
    match preconditioner {
        Some(s) if s.is_uniform() => decompose_with_similarity(h, s),
        _ => decompose(h),
    }
}

pub fn spectral_series(
    dec: &SpectralDecomposition,
    psi0: &WaveState,
    times: &[f64],
) -> Result<EvolutionResult> {
    check_times(times)?;
    let modal = ModalState::new(dec, psi0)?;
    let states = times
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut s = modal.at(t).map_err(|e| e.at_frame(k))?;
            s.time = psi0.time + t;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvolutionResult {
        times: times.to_vec(),
        states,
        method: Method::Spectral,
    })
}

/// Steps frame to frame with exact propagators `e^{-iHΔt}`, reusing the
/// propagator while the spacing stays the same.
pub fn expm_series(
    h: &HamiltonianMatrix,
    psi0: &WaveState,
    times: &[f64],
) -> Result<EvolutionResult> {
    check_times(times)?;
    let mut states = Vec::with_capacity(times.len());
    let mut cached: Option<(f64, ScaledExp)> = None;
    let mut current = psi0.clone();
    let mut last_t = 0.0;
    for (k, &t) in times.iter().enumerate() {
        let dt = t - last_t;
        if dt != 0.0 {
            let reuse = matches!(&cached, Some((step, _)) if (step - dt).abs() <= 1e-12 * dt.abs());
            if !reuse {
                cached = Some((dt, propagator(&h.matrix, dt).map_err(|e| e.at_frame(k))?));
            }
            let (_, u) = cached.as_ref().expect("propagator cached above");
            current = apply_scaled(u, &current, psi0.time + t).map_err(|e| e.at_frame(k))?;
        }
        current.time = psi0.time + t;
        states.push(current.clone());
        last_t = t;
    }
    Ok(EvolutionResult {
        times: times.to_vec(),
        states,
        method: Method::Expm,
    })
}

#[cfg(test)]
mod tests;
