//! Closed-form predictions for packet trajectories.
//!
//! The `hn_*` functions are exact for the continuous Hatano–Nelson model before the
//! packet reaches a wall. [`GeneralOracle`] applies to any model with a
//! uniform skin factor `r`, using a measured width series `σ(t)`.
//!
//! Positions returned by `*_peak` functions are displacements of the peak
//! caused by the skin effect, measured from the launch point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{counterpart_bands, ModelSpec};
use crate::wavepacket::{derivative, moving_average};

/// Step of the central difference used for `∂E/∂k`.
pub const DISPERSION_STEP: f64 = 1e-5;

/// Default smoothing window applied to `σ(t)²` before differentiating.
pub const SIGMA_SMOOTHING: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wall {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HnOracleParams {
    pub mass: f64,
    pub drift: f64,
    pub sigma: f64,
    pub momentum: f64,
    pub center: f64,
    pub energy_offset: f64,
    pub walls: (f64, f64),
}

impl HnOracleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::param("mass", "must be positive and finite"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param("sigma", "must be positive and finite"));
        }
        Ok(())
    }
}

/// `σ(t)² = σ² + t²/(4σ²m²)`.
pub fn sigma_sq_t(p: &HnOracleParams, t: f64) -> f64 {
    let (s2, m) = (p.sigma * p.sigma, p.mass);
    s2 + t * t / (4.0 * s2 * m * m)
}

/// Skin-induced displacement `2bm[σ(t)² − σ²]`.
pub fn hn_peak(p: &HnOracleParams, t: f64) -> f64 {
    2.0 * p.drift * p.mass * (sigma_sq_t(p, t) - p.sigma * p.sigma)
}

/// `bt/(mσ²)`.
pub fn hn_peak_velocity(p: &HnOracleParams, t: f64) -> f64 {
    p.drift * t / (p.mass * p.sigma * p.sigma)
}

/// Absolute peak position `x0 + (k0/m)t + x_p(t)`.
pub fn hn_peak_position(p: &HnOracleParams, t: f64) -> f64 {
    p.center + p.momentum / p.mass * t + hn_peak(p, t)
}

/// `A = exp{2b²m²[σ(t)² − σ²]}`, the norm gain of a packet launched at
/// rest.
pub fn norm_amplification(p: &HnOracleParams, t: f64) -> f64 {
    let (b, m) = (p.drift, p.mass);
    (2.0 * b * b * m * m * (sigma_sq_t(p, t) - p.sigma * p.sigma)).exp()
}

/// `‖ψ(t)‖²/‖ψ(0)‖² = A·e^{2bk0t}`. The counterpart packet moves at `k0/m`
/// through the `e^{2bmx}` profile, which adds the second factor.
pub fn norm_gain(p: &HnOracleParams, t: f64) -> f64 {
    norm_amplification(p, t) * (2.0 * p.drift * p.momentum * t).exp()
}

/// Unnormalized density of the free-space packet, including the norm
/// gain. Valid only before the packet meets a wall.
pub fn hn_density(p: &HnOracleParams, x: f64, t: f64) -> f64 {
    let s2t = sigma_sq_t(p, t);
    let d = x - hn_peak_position(p, t);
    norm_gain(p, t) / (2.0 * std::f64::consts::PI * s2t).sqrt() * (-d * d / (2.0 * s2t)).exp()
}

/// `k0/m + bt/(mσ²)`.
pub fn hn_v_in(p: &HnOracleParams, t: f64) -> f64 {
    p.momentum / p.mass + hn_peak_velocity(p, t)
}

/// `−k0/m + bt/(mσ²)`.
pub fn hn_v_ref(p: &HnOracleParams, t: f64) -> f64 {
    -p.momentum / p.mass + hn_peak_velocity(p, t)
}

/// Time after which a packet reflected at `wall` can no longer move away
/// from it: `v_ref ≥ 0` at the right wall, `v_ref ≤ 0` at the left.
/// `None` when the reflected packet always leaves.
pub fn hn_stuck_time(p: &HnOracleParams, wall: Wall) -> Option<f64> {
    let (b, k0) = (p.drift, p.momentum);
    let toward = match wall {
        Wall::Right => b,
        Wall::Left => -b,
    };
    if toward <= 0.0 {
        return None;
    }
    // v_ref(t) = 0 at t = k0σ²/b.
    Some((k0 * p.sigma * p.sigma / b).max(0.0))
}

/// `k1` with `E(k1) = E(k0)` on the same band: `−k0`, since every
/// implemented counterpart dispersion is even in `k`.
pub fn reflected_momentum(_spec: &ModelSpec, k0: f64) -> f64 {
    -k0
}

/// `∂E/∂k` of counterpart band `band` (0 = upper) by central difference.
pub fn group_velocity(spec: &ModelSpec, band: usize, k: f64) -> Result<f64> {
    let h = DISPERSION_STEP;
    let pick = |k: f64| -> Result<f64> {
        counterpart_bands(spec, k)?
            .get(band)
            .copied()
            .ok_or_else(|| Error::param("band", format!("model has no band {band}")))
    };
    Ok((pick(k + h)? - pick(k - h)?) / (2.0 * h))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralOracleParams {
    /// `ln r` per unit of position (per cell for SSH chains).
    pub log_r: f64,
    /// Uniformly spaced sample times of the measured width.
    pub times: Vec<f64>,
    /// Measured `σ(t)`; `None` where the width could not be read.
    pub sigma: Vec<Option<f64>>,
    pub spec: ModelSpec,
    pub band: usize,
    pub k0: f64,
    pub k1: f64,
    pub smoothing_window: usize,
}

/// Predictions from `x_p(t) = 2 ln(r)[σ(t)² − σ(0)²]` with a measured `σ(t)`.
#[derive(Clone, Debug)]
pub struct GeneralOracle {
    params: GeneralOracleParams,
    /// Gap-filled `σ(t)²` over the span of available samples.
    sigma_sq: Vec<Option<f64>>,
    /// `v_p(t) = 2 ln r · dσ²/dt` on the same span.
    drift_velocity: Vec<Option<f64>>,
}

impl GeneralOracle {
    pub fn new(params: GeneralOracleParams) -> Result<Self> {
        if params.times.len() != params.sigma.len() {
            return Err(Error::DimensionMismatch {
                expected: params.times.len(),
                found: params.sigma.len(),
            });
        }
        if !params.log_r.is_finite() {
            return Err(Error::param("log_r", "must be finite"));
        }
        if params
            .sigma
            .iter()
            .flatten()
            .any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return Err(Error::param("sigma", "samples must be positive"));
        }
        let sigma_sq = fill_gaps(&params.times, &params.sigma);
        let drift_velocity = drift_velocities(&params, &sigma_sq)?;
        Ok(GeneralOracle {
            params,
            sigma_sq,
            drift_velocity,
        })
    }

    pub fn params(&self) -> &GeneralOracleParams {
        &self.params
    }

    /// `σ(t)²`, linearly interpolated between samples.
    pub fn sigma_sq_at(&self, t: f64) -> Result<f64> {
        interpolate(&self.params.times, &self.sigma_sq, t)
    }

    /// `2 ln(r)[σ(t)² − σ(0)²]`, with `σ(0)` the first measured width.
    pub fn general_peak(&self, t: f64) -> Result<f64> {
        let s0 = self
            .sigma_sq
            .iter()
            .flatten()
            .next()
            .copied()
            .ok_or(Error::WidthUnavailable)?;
        Ok(2.0 * self.params.log_r * (self.sigma_sq_at(t)? - s0))
    }

    /// `2 ln r · dσ(t)²/dt`.
    pub fn drift_velocity(&self, t: f64) -> Result<f64> {
        interpolate(&self.params.times, &self.drift_velocity, t)
    }

    /// `(∂E/∂k|k0 + v_p(t), ∂E/∂k|k1 + v_p(t))`.
    pub fn general_velocities(&self, t: f64) -> Result<(f64, f64)> {
        let p = &self.params;
        let vp = self.drift_velocity(t)?;
        let v0 = group_velocity(&p.spec, p.band, p.k0)?;
        let v1 = group_velocity(&p.spec, p.band, p.k1)?;
        Ok((v0 + vp, v1 + vp))
    }

    /// Whether a packet reflected at `wall` at time `t` stays there.
    pub fn predicts_stuck(&self, t: f64, wall: Wall) -> Result<bool> {
        let (_, v_ref) = self.general_velocities(t)?;
        Ok(match wall {
            Wall::Right => v_ref >= 0.0,
            Wall::Left => v_ref <= 0.0,
        })
    }
}

/// `σ²` at every sample between the first and last measured width, with
/// interior gaps filled linearly.
fn fill_gaps(times: &[f64], sigma: &[Option<f64>]) -> Vec<Option<f64>> {
    let known: Vec<(usize, f64)> = sigma
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (i, s * s)))
        .collect();
    let mut out = vec![None; sigma.len()];
    for w in known.windows(2) {
        let ((i, a), (j, b)) = (w[0], w[1]);
        for (k, slot) in out.iter_mut().enumerate().take(j + 1).skip(i) {
            let f = (times[k] - times[i]) / (times[j] - times[i]);
            *slot = Some(a + f * (b - a));
        }
    }
    if let [(i, s)] = known[..] {
        out[i] = Some(s);
    }
    out
}

fn drift_velocities(
    params: &GeneralOracleParams,
    sigma_sq: &[Option<f64>],
) -> Result<Vec<Option<f64>>> {
    let mut out = vec![None; sigma_sq.len()];
    let Some(first) = sigma_sq.iter().position(Option::is_some) else {
        return Ok(out);
    };
    let last = sigma_sq.iter().rposition(Option::is_some).unwrap_or(first);
    if last - first < 2 {
        return Ok(out);
    }
    let span: Vec<f64> = sigma_sq[first..=last].iter().flatten().copied().collect();
    let smoothed = moving_average(&span, params.smoothing_window);
    let slope = derivative(&params.times[first..=last], &smoothed, 1)?;
    for (slot, d) in out[first..=last].iter_mut().zip(slope) {
        *slot = Some(2.0 * params.log_r * d);
    }
    Ok(out)
}

fn interpolate(times: &[f64], values: &[Option<f64>], t: f64) -> Result<f64> {
    let n = times.len();
    if n == 0 || !t.is_finite() {
        return Err(Error::WidthUnavailable);
    }
    let j = times.partition_point(|&s| s < t);
    if j < n && times[j] == t {
        return values[j].ok_or(Error::WidthUnavailable);
    }
    if j == 0 || j == n {
        return Err(Error::WidthUnavailable);
    }
    match (values[j - 1], values[j]) {
        (Some(a), Some(b)) => {
            let f = (t - times[j - 1]) / (times[j] - times[j - 1]);
            Ok(a + f * (b - a))
        }
        _ => Err(Error::WidthUnavailable),
    }
}
