//! Gaussian initial states and the observables read off density frames.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{EvolutionResult, WaveState};
use crate::model::{Geometry, Sublattice};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub sigma: f64,
    pub center: f64,
    pub momentum: f64,
}

impl GaussianParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::param(
                "sigma",
                format!("must be positive, got {}", self.sigma),
            ));
        }
        if !self.center.is_finite() {
            return Err(Error::param("center", "must be finite"));
        }
        if !self.momentum.is_finite() {
            return Err(Error::param("momentum", "must be finite"));
        }
        Ok(())
    }
}

/// `(2πσ²)^{-1/4} exp(-(x-x0)²/(4σ²) + i k0 (x-x0))` on every site, or on the
/// A sublattice only for two-orbital chains.
pub fn gaussian_state(geometry: &Geometry, params: &GaussianParams) -> Result<WaveState> {
    let one = c64::new(1.0, 0.0);
    spinor_gaussian(geometry, params, [one, c64::new(0.0, 0.0)])
}

/// Gaussian envelope times a fixed cell spinor `(u_A, u_B)`, such as a band
/// spinor from [`crate::model::band_spinor`]. Single-orbital chains use `u_A`.
pub fn spinor_gaussian(
    geometry: &Geometry,
    params: &GaussianParams,
    spinor: [c64; 2],
) -> Result<WaveState> {
    params.validate()?;
    let GaussianParams {
        sigma,
        center,
        momentum,
    } = *params;
    let (lo, hi) = geometry.extent();
    if center - lo < 4.0 * sigma || hi - center < 4.0 * sigma {
        log::warn!("packet centre {center} is closer than 4σ to a wall of [{lo}, {hi}]");
    }
    let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25);
    let amplitudes = geometry
        .coords()
        .iter()
        .zip(geometry.sublattice())
        .map(|(&x, s)| {
            let weight = match s {
                Sublattice::B => spinor[1],
                _ => spinor[0],
            };
            if weight == c64::new(0.0, 0.0) {
                return weight;
            }
            let d = x - center;
            c64::new(-d * d / (4.0 * sigma * sigma), momentum * d).exp() * norm * weight
        })
        .collect();
    WaveState::from_amplitudes(amplitudes, 0.0)
}

/// `|ψ_i|²` summed per cell, from the unit-norm amplitudes.
pub fn density(state: &WaveState, geometry: &Geometry) -> Result<Vec<f64>> {
    if state.dim() != geometry.dim() {
        return Err(Error::DimensionMismatch {
            expected: geometry.dim(),
            found: state.dim(),
        });
    }
    let mut out = vec![0.0; geometry.cell_count()];
    for (a, &c) in state.amplitudes.iter().zip(geometry.cells()) {
        out[c] += a.norm_sqr();
    }
    Ok(out)
}

fn check_frame(density: &[f64], geometry: &Geometry) -> Result<usize> {
    if density.len() != geometry.cell_count() {
        return Err(Error::DimensionMismatch {
            expected: geometry.cell_count(),
            found: density.len(),
        });
    }
    let mut best: Option<usize> = None;
    for (i, &d) in density.iter().enumerate() {
        if !d.is_finite() {
            return Err(Error::DegenerateDensity);
        }
        if d > 0.0 && best.is_none_or(|b| d > density[b]) {
            best = Some(i);
        }
    }
    best.ok_or(Error::DegenerateDensity)
}

/// Position of the density maximum, refined by a parabola through the
/// maximal site and its neighbours.
pub fn peak_position(density: &[f64], geometry: &Geometry) -> Result<f64> {
    let i = check_frame(density, geometry)?;
    let x = geometry.cell_positions();
    let (lo, hi) = geometry.extent();
    if i == 0 || i + 1 == density.len() {
        return Ok(x[i]);
    }
    let (y0, y1, y2) = (density[i - 1], density[i], density[i + 1]);
    let curvature = y0 - 2.0 * y1 + y2;
    let shift = if curvature < 0.0 {
        (0.5 * (y0 - y2) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Ok((x[i] + shift * geometry.spacing()).clamp(lo, hi))
}

/// `σ = δ / (2 sqrt(2 ln 2))` from the full width at half maximum `δ` of the
/// dominant peak.
pub fn sigma_from_halfwidth(density: &[f64], geometry: &Geometry) -> Result<f64> {
    let i = check_frame(density, geometry)?;
    let x = geometry.cell_positions();
    let half = 0.5 * density[i];
    let crossing = |j: usize, k: usize| {
        // density[j] ≥ half > density[k]
        let f = (density[j] - half) / (density[j] - density[k]);
        x[j] + f * (x[k] - x[j])
    };
    let left = (1..=i)
        .rev()
        .find(|&j| density[j - 1] < half)
        .map(|j| crossing(j, j - 1))
        .ok_or(Error::WidthUnavailable)?;
    let right = (i..density.len() - 1)
        .find(|&j| density[j + 1] < half)
        .map(|j| crossing(j, j + 1))
        .ok_or(Error::WidthUnavailable)?;
    Ok((right - left) / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt()))
}

/// Local maxima with height at least `min_ratio` times the global maximum,
/// highest first, as `(position, density)`.
pub fn local_peaks(
    density: &[f64],
    geometry: &Geometry,
    min_ratio: f64,
) -> Result<Vec<(f64, f64)>> {
    let top = density[check_frame(density, geometry)?];
    let x = geometry.cell_positions();
    let n = density.len();
    let mut peaks: Vec<(f64, f64)> = (0..n)
        .filter(|&i| {
            let left = if i == 0 {
                f64::NEG_INFINITY
            } else {
                density[i - 1]
            };
            let right = if i + 1 == n {
                f64::NEG_INFINITY
            } else {
                density[i + 1]
            };
            density[i] > left && density[i] >= right && density[i] >= min_ratio * top
        })
        .map(|i| (x[i], density[i]))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(peaks)
}

/// Centered moving average; the window shrinks symmetrically at the ends.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window.max(1) / 2;
    let n = values.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let slice = &values[i - h..=i + h];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// Numerical derivative of uniformly sampled `x(t)`: central differences in
/// the interior, one-sided at the ends, after a moving average of `window`.
pub fn derivative(times: &[f64], values: &[f64], window: usize) -> Result<Vec<f64>> {
    let n = times.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: values.len(),
        });
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::param("times", "must increase"));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(Error::param("times", "must be uniformly spaced"));
        }
    }
    let x = moving_average(values, window);
    Ok((0..n)
        .map(|i| match i {
            0 => (x[1] - x[0]) / dt,
            i if i == n - 1 => (x[n - 1] - x[n - 2]) / dt,
            i => (x[i + 1] - x[i - 1]) / (2.0 * dt),
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub x_peak: f64,
    pub v_peak: f64,
    pub sigma_measured: Option<f64>,
    pub log_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySeries {
    pub records: Vec<TrajectoryRecord>,
    /// First time the peak comes within `contact_distance` of a wall.
    pub boundary_contact_time: Option<f64>,
    pub contact_distance: f64,
    pub walls: (f64, f64),
}

impl TrajectorySeries {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.x_peak).collect()
    }

    /// Index of the first record within `contact_distance` of `wall`.
    pub fn contact_index(&self, wall: f64) -> Option<usize> {
        self.records
            .iter()
            .position(|r| (r.x_peak - wall).abs() <= self.contact_distance)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryOptions {
    /// Moving-average window applied to `x_peak` before differencing.
    pub smoothing_window: usize,
    /// Wall proximity, in grid units, that counts as boundary contact.
    pub contact_threshold: f64,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            smoothing_window: 1,
            contact_threshold: 3.0,
        }
    }
}

/// Peak, width and norm of every frame, plus `v = dx_peak/dt`.
pub fn extract_trajectory(
    result: &EvolutionResult,
    geometry: &Geometry,
    options: &TrajectoryOptions,
) -> Result<TrajectorySeries> {
    let mut records = Vec::with_capacity(result.len());
    for (k, state) in result.states.iter().enumerate() {
        let frame = density(state, geometry).map_err(|e| e.at_frame(k))?;
        let x_peak = peak_position(&frame, geometry).map_err(|e| e.at_frame(k))?;
        let sigma_measured = match sigma_from_halfwidth(&frame, geometry) {
            Ok(s) => Some(s),
            Err(Error::WidthUnavailable) => None,
            Err(e) => return Err(e.at_frame(k)),
        };
        records.push(TrajectoryRecord {
            t: result.times[k],
            x_peak,
            v_peak: 0.0,
            sigma_measured,
            log_norm: result.log_norm(k),
        });
    }
    let walls = geometry.extent();
    let contact_distance = options.contact_threshold * geometry.spacing();
    let mut series = TrajectorySeries {
        records,
        boundary_contact_time: None,
        contact_distance,
        walls,
    };
    series.boundary_contact_time = series
        .records
        .iter()
        .find(|r| r.x_peak - walls.0 <= contact_distance || walls.1 - r.x_peak <= contact_distance)
        .map(|r| r.t);
    if series.records.len() >= 3 {
        let v = peak_velocity_series(&series, options.smoothing_window)?;
        for (r, v) in series.records.iter_mut().zip(v) {
            r.v_peak = v;
        }
    }
    Ok(series)
}

pub fn peak_velocity_series(trajectory: &TrajectorySeries, window: usize) -> Result<Vec<f64>> {
    derivative(&trajectory.times(), &trajectory.positions(), window)
}

/// Least-squares line `v = intercept + slope·t` over `[t_start, t_end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
}

impl LineFit {
    pub fn at(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_start + self.t_end)
    }
}

pub fn fit_line(t: &[f64], v: &[f64]) -> Result<LineFit> {
    let n = t.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mt = t.iter().sum::<f64>() / n as f64;
    let mv = v.iter().sum::<f64>() / n as f64;
    let sxx: f64 = t.iter().map(|x| (x - mt).powi(2)).sum();
    let sxy: f64 = t.iter().zip(v).map(|(x, y)| (x - mt) * (y - mv)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData { needed: 2, got: 1 });
    }
    let slope = sxy / sxx;
    Ok(LineFit {
        slope,
        intercept: mv - slope * mt,
        t_start: t[0],
        t_end: t[n - 1],
        samples: n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Classification {
    Reflected {
        v_in_fit: LineFit,
        v_ref_fit: LineFit,
    },
    Stuck,
    NoContact,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Reflected { .. } => "Reflected",
            Classification::Stuck => "Stuck",
            Classification::NoContact => "NoContact",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReflectionOptions {
    /// Time span after contact that is inspected.
    pub window: f64,
    /// Samples next to contact and departure left out of the fits.
    pub guard_band: usize,
    /// Samples whose measured width exceeds this are left out of the fits.
    pub width_cutoff: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReflectionOutcome {
    pub classification: Classification,
    pub contact_time: Option<f64>,
    /// The inspection window ran past the last frame.
    pub truncated: bool,
}

/// Stuck when the peak stays within the contact distance of `boundary` for
/// the whole window after contact, apart from `guard_band` samples right
/// after contact; otherwise line fits of `v(t)` before
/// contact and after the peak departs from the wall, each skipping
/// `guard_band` samples next to the wall.
pub fn classify_reflection(
    trajectory: &TrajectorySeries,
    boundary: f64,
    options: &ReflectionOptions,
) -> Result<ReflectionOutcome> {
    let Some(ic) = trajectory.contact_index(boundary) else {
        return Ok(ReflectionOutcome {
            classification: Classification::NoContact,
            contact_time: None,
            truncated: false,
        });
    };
    let records = &trajectory.records;
    let tc = records[ic].t;
    let t_stop = tc + options.window;
    let truncated = t_stop > records[records.len() - 1].t + 1e-12;
    if truncated {
        log::warn!("reflection window ends at {t_stop}, past the last frame");
    }
    let after: Vec<&TrajectoryRecord> =
        records[ic..].iter().take_while(|r| r.t <= t_stop).collect();
    // The global maximum can flicker between lobes while the packet arrives,
    // so the guard band after contact is not inspected.
    let stuck = after
        .iter()
        .skip(options.guard_band)
        .all(|r| (r.x_peak - boundary).abs() <= trajectory.contact_distance);
    let outcome = |classification| ReflectionOutcome {
        classification,
        contact_time: Some(tc),
        truncated,
    };
    if stuck {
        return Ok(outcome(Classification::Stuck));
    }
    let usable = |r: &&TrajectoryRecord| match (options.width_cutoff, r.sigma_measured) {
        (Some(cut), Some(s)) => s <= cut,
        _ => true,
    };
    let before: Vec<&TrajectoryRecord> = records[..ic.saturating_sub(options.guard_band)]
        .iter()
        .filter(usable)
        .collect();
    // The reflected fit starts once the peak has left the wall again.
    let departure = after
        .iter()
        .position(|r| (r.x_peak - boundary).abs() > trajectory.contact_distance)
        .unwrap_or(after.len());
    let after: Vec<&TrajectoryRecord> = after[departure..]
        .iter()
        .skip(options.guard_band)
        .copied()
        .filter(usable)
        .collect();
    let fit = |rs: &[&TrajectoryRecord]| {
        let t: Vec<f64> = rs.iter().map(|r| r.t).collect();
        let v: Vec<f64> = rs.iter().map(|r| r.v_peak).collect();
        fit_line(&t, &v)
    };
    Ok(outcome(Classification::Reflected {
        v_in_fit: fit(&before)?,
        v_ref_fit: fit(&after)?,
    }))
}
