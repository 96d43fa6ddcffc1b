//! Evolve → trajectory → classification → oracle pipeline.

use skinwave_core::evolve::{evolve_series, EvolutionResult, WaveState};
use skinwave_core::model::{band_spinor, build_hamiltonian, Geometry, ModelSpec};
use skinwave_core::oracle::{
    group_velocity, hn_peak_position, hn_v_in, hn_v_ref, reflected_momentum, GeneralOracle,
    GeneralOracleParams, HnOracleParams, Wall, SIGMA_SMOOTHING,
};
use skinwave_core::similarity::{build_similarity, log_skin_per_length};
use skinwave_core::wavepacket::{
    classify_reflection, density, extract_trajectory, fit_line, gaussian_state, local_peaks,
    spinor_gaussian, Classification, LineFit, ReflectionOptions, ReflectionOutcome,
    TrajectoryOptions, TrajectoryRecord, TrajectorySeries,
};

use crate::config::ExperimentConfig;
use crate::error::{Context, Result};

/// Secondary peaks below this fraction of the frame maximum are not listed.
pub const SNAPSHOT_PEAK_RATIO: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleRow {
    pub t: f64,
    pub x_peak: Option<f64>,
    pub v_in: Option<f64>,
    pub v_ref: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSeries {
    /// Which closed form produced the rows.
    pub kind: &'static str,
    /// Counterpart band followed by the prediction, for two-band models.
    pub band: Option<usize>,
    pub rows: Vec<OracleRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub requested: f64,
    pub frame: usize,
    pub t: f64,
    /// `(position, density)`, highest first.
    pub peaks: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub name: String,
    pub config: ExperimentConfig,
    pub geometry: Geometry,
    pub evolution: EvolutionResult,
    pub trajectory: TrajectorySeries,
    /// Wall reached first, if any.
    pub wall: Option<Wall>,
    pub reflection: ReflectionOutcome,
    /// Line fit of `v_peak(t)` over the usable samples before contact.
    pub pre_contact_fit: Option<LineFit>,
    pub oracle: Option<OracleSeries>,
    pub snapshots: Vec<Snapshot>,
}

impl ExperimentRun {
    /// Index of the first frame in contact with a wall.
    pub fn contact_index(&self) -> Option<usize> {
        let wall = self.wall?;
        self.trajectory
            .contact_index(wall_position(&self.trajectory, wall))
    }

    /// Frames before contact (all frames without contact).
    pub fn pre_contact(&self) -> &[TrajectoryRecord] {
        let end = self
            .contact_index()
            .unwrap_or(self.trajectory.records.len());
        &self.trajectory.records[..end]
    }

    /// `max |x_peak − x_peak_oracle|` over the frames before contact.
    pub fn max_oracle_deviation(&self) -> Option<f64> {
        let oracle = self.oracle.as_ref()?;
        self.pre_contact()
            .iter()
            .zip(&oracle.rows)
            .filter_map(|(r, o)| o.x_peak.map(|x| (r.x_peak - x).abs()))
            .reduce(f64::max)
    }

    /// Domain length used by the width cutoff.
    pub fn domain_length(&self) -> f64 {
        domain_length(&self.geometry)
    }

    /// Per-cell density of frame `k`, from the unit-norm amplitudes.
    pub fn frame_density(&self, k: usize) -> Result<Vec<f64>> {
        density(&self.evolution.states[k], &self.geometry)
            .context(|| format!("{}: density of frame {k}", self.name))
    }
}

fn domain_length(geometry: &Geometry) -> f64 {
    let (lo, hi) = geometry.extent();
    hi - lo + geometry.spacing()
}

fn wall_position(trajectory: &TrajectorySeries, wall: Wall) -> f64 {
    match wall {
        Wall::Left => trajectory.walls.0,
        Wall::Right => trajectory.walls.1,
    }
}

/// Runs one experiment; nothing is written to disk.
pub fn run_experiment(name: &str, config: &ExperimentConfig) -> Result<ExperimentRun> {
    config.validate()?;
    let ctx = |what: &str| format!("{name}: {what}");
    let h = build_hamiltonian(&config.model).context(|| ctx("building the Hamiltonian"))?;
    let psi0 = initial_state(config, &h.geometry).context(|| ctx("building the packet"))?;
    let similarity =
        build_similarity(&config.model, h.dim()).context(|| ctx("building the similarity"))?;
    let times = config.times.grid();
    let evolution = evolve_series(&h, &psi0, &times, config.method, Some(&similarity))
        .context(|| ctx("evolving"))?;
    log::info!(
        "{name}: {} frames via {}",
        evolution.len(),
        evolution.method
    );

    let a = &config.analysis;
    let trajectory = extract_trajectory(
        &evolution,
        &h.geometry,
        &TrajectoryOptions {
            smoothing_window: a.smoothing_window,
            contact_threshold: a.contact_threshold,
        },
    )
    .context(|| ctx("extracting the trajectory"))?;

    let width_cutoff = a
        .width_cutoff_fraction
        .map(|f| f * domain_length(&h.geometry));
    let wall = first_wall(&trajectory);
    let boundary = wall.map_or(trajectory.walls.1, |w| wall_position(&trajectory, w));
    let reflection = classify_reflection(
        &trajectory,
        boundary,
        &ReflectionOptions {
            window: a.window,
            guard_band: a.guard_band,
            width_cutoff,
        },
    )
    .context(|| ctx("classifying the reflection"))?;

    let contact = wall.and_then(|w| trajectory.contact_index(wall_position(&trajectory, w)));
    let fit_end = contact.map_or(trajectory.records.len(), |ic| {
        ic.saturating_sub(a.guard_band)
    });
    let usable: Vec<&TrajectoryRecord> = trajectory.records[..fit_end]
        .iter()
        .filter(|r| match (width_cutoff, r.sigma_measured) {
            (Some(cut), Some(s)) => s <= cut,
            _ => true,
        })
        .collect();
    let pre_contact_fit = if usable.len() >= 2 {
        let t: Vec<f64> = usable.iter().map(|r| r.t).collect();
        let v: Vec<f64> = usable.iter().map(|r| r.v_peak).collect();
        Some(fit_line(&t, &v).context(|| ctx("fitting the pre-contact velocity"))?)
    } else {
        None
    };

    let oracle = build_oracle(config, &trajectory, contact);

    let mut snapshots = Vec::with_capacity(a.snapshots.len());
    for &requested in &a.snapshots {
        let frame = nearest_frame(&evolution.times, requested);
        let d =
            density(&evolution.states[frame], &h.geometry).context(|| ctx("snapshot density"))?;
        let peaks =
            local_peaks(&d, &h.geometry, SNAPSHOT_PEAK_RATIO).context(|| ctx("snapshot peaks"))?;
        snapshots.push(Snapshot {
            requested,
            frame,
            t: evolution.times[frame],
            peaks,
        });
    }

    Ok(ExperimentRun {
        name: name.to_string(),
        config: config.clone(),
        geometry: h.geometry,
        evolution,
        trajectory,
        wall,
        reflection,
        pre_contact_fit,
        oracle,
        snapshots,
    })
}

fn initial_state(
    config: &ExperimentConfig,
    geometry: &Geometry,
) -> skinwave_core::Result<WaveState> {
    let params = config.packet.gaussian();
    match config.packet.band {
        Some(band) => {
            let spinor = band_spinor(&config.model, params.momentum, band)?;
            spinor_gaussian(geometry, &params, spinor)
        }
        None => gaussian_state(geometry, &params),
    }
}

fn first_wall(trajectory: &TrajectorySeries) -> Option<Wall> {
    let left = trajectory.contact_index(trajectory.walls.0);
    let right = trajectory.contact_index(trajectory.walls.1);
    match (left, right) {
        (Some(l), Some(r)) => Some(if l <= r { Wall::Left } else { Wall::Right }),
        (Some(_), None) => Some(Wall::Left),
        (None, Some(_)) => Some(Wall::Right),
        (None, None) => None,
    }
}

fn nearest_frame(times: &[f64], t: f64) -> usize {
    times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map_or(0, |(i, _)| i)
}

/// Closed-form predictions; `None` for models without a counterpart band
/// structure.
fn build_oracle(
    config: &ExperimentConfig,
    trajectory: &TrajectorySeries,
    contact: Option<usize>,
) -> Option<OracleSeries> {
    let result = match config.model {
        ModelSpec::ContinuousHn { .. } => Ok(hn_oracle(config, trajectory, contact)),
        _ => general_oracle(config, trajectory, contact),
    };
    match result {
        Ok(series) => Some(series),
        Err(e) => {
            log::info!("no oracle for this model: {e}");
            None
        }
    }
}

fn hn_oracle(
    config: &ExperimentConfig,
    trajectory: &TrajectorySeries,
    contact: Option<usize>,
) -> OracleSeries {
    let ModelSpec::ContinuousHn {
        mass,
        drift,
        onsite_energy,
        ..
    } = config.model
    else {
        unreachable!("hn_oracle is only called for the continuous model")
    };
    let p = HnOracleParams {
        mass,
        drift,
        sigma: config.packet.sigma,
        momentum: config.packet.momentum,
        center: config.packet.center,
        energy_offset: onsite_energy,
        walls: trajectory.walls,
    };
    let rows = trajectory
        .records
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let before = contact.is_none_or(|ic| k < ic);
            OracleRow {
                t: r.t,
                x_peak: before.then(|| hn_peak_position(&p, r.t)),
                v_in: before.then(|| hn_v_in(&p, r.t)),
                v_ref: (!before).then(|| hn_v_ref(&p, r.t)),
            }
        })
        .collect();
    OracleSeries {
        kind: "continuum Gaussian",
        band: None,
        rows,
    }
}

/// Band whose peak the global maximum follows: the packet's own band, the
/// upper band at rest, otherwise the mode moving toward the amplified side.
fn oracle_band(config: &ExperimentConfig, log_r: f64) -> skinwave_core::Result<usize> {
    if let Some(band) = config.packet.band {
        return Ok(band);
    }
    let k0 = config.packet.momentum;
    if k0 == 0.0 || !config.model.is_ssh() {
        return Ok(0);
    }
    let v = group_velocity(&config.model, 0, k0)?;
    let toward_right = log_r >= 0.0;
    Ok(if (v > 0.0) == toward_right { 0 } else { 1 })
}

fn general_oracle(
    config: &ExperimentConfig,
    trajectory: &TrajectorySeries,
    contact: Option<usize>,
) -> skinwave_core::Result<OracleSeries> {
    let spec = &config.model;
    let log_r = log_skin_per_length(spec)?;
    let band = oracle_band(config, log_r)?;
    let k0 = config.packet.momentum;
    let v0 = group_velocity(spec, band, k0)?;
    // Widths are only meaningful while the packet is away from both walls.
    let free = |r: &TrajectoryRecord| {
        (r.x_peak - trajectory.walls.0) > trajectory.contact_distance
            && (trajectory.walls.1 - r.x_peak) > trajectory.contact_distance
    };
    let oracle = GeneralOracle::new(GeneralOracleParams {
        log_r,
        times: trajectory.times(),
        sigma: trajectory
            .records
            .iter()
            .map(|r| r.sigma_measured.filter(|_| free(r)))
            .collect(),
        spec: spec.clone(),
        band,
        k0,
        k1: reflected_momentum(spec, k0),
        smoothing_window: SIGMA_SMOOTHING,
    })?;
    let rows = trajectory
        .records
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let before = contact.is_none_or(|ic| k < ic);
            let velocities = oracle.general_velocities(r.t).ok();
            OracleRow {
                t: r.t,
                x_peak: if before {
                    oracle
                        .general_peak(r.t)
                        .ok()
                        .map(|xp| config.packet.center + v0 * r.t + xp)
                } else {
                    None
                },
                v_in: velocities.filter(|_| before).map(|v| v.0),
                v_ref: velocities.filter(|_| !before).map(|v| v.1),
            }
        })
        .collect();
    Ok(OracleSeries {
        kind: "measured-width skin drift",
        band: spec.is_ssh().then_some(band),
        rows,
    })
}

/// Label of the classification with the wall it refers to.
pub fn classification_label(run: &ExperimentRun) -> String {
    match (run.reflection.classification, run.wall) {
        (Classification::NoContact, _) | (_, None) => "NoContact".to_string(),
        (c, Some(Wall::Left)) => format!("{} (left wall)", c.label()),
        (c, Some(Wall::Right)) => format!("{} (right wall)", c.label()),
    }
}
