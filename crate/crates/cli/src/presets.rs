//! Built-in experiments, one per reproduced figure panel.

use std::path::PathBuf;

use skinwave_core::evolve::Method;
use skinwave_core::model::{GainLossAxis, ModelSpec};
use skinwave_core::oracle::group_velocity;

use crate::config::{AnalysisConfig, ExperimentConfig, OutputConfig, PacketConfig, TimesConfig};
use crate::error::{CliError, Context, Result};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    build: fn() -> Result<ExperimentConfig>,
}

impl Preset {
    pub fn config(&self) -> Result<ExperimentConfig> {
        let mut c = (self.build)()?;
        c.output.directory = PathBuf::from("out").join(self.name);
        Ok(c)
    }
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig1a",
        summary: "continuum chain, k0 = 0: uniform acceleration, stuck at the right wall",
        build: || Ok(hn(0.0, 5.0, 0.5)),
    },
    Preset {
        name: "fig1b",
        summary: "continuum chain, k0 = -10: reflected at the left wall, |v_in| < |v_ref|",
        build: || Ok(hn(-10.0, 2.0, 0.42)),
    },
    Preset {
        name: "fig1c",
        summary: "continuum chain, k0 = 20: reflected at the right wall, |v_in| > |v_ref|",
        build: || Ok(hn(20.0, 5.0, 0.42)),
    },
    Preset {
        name: "fig1d",
        summary: "continuum chain, k0 = 13: near the critical velocity (reported only)",
        build: || Ok(hn(13.0, 5.0, 0.5)),
    },
    Preset {
        name: "fig3",
        summary: "continuum chain, k0 = 20: velocity fits up to the width cutoff",
        build: || {
            let mut c = hn(20.0, 5.0, 0.39);
            c.times = TimesConfig {
                t_max: 0.6,
                frame_count: 101,
            };
            Ok(c)
        },
    },
    Preset {
        name: "fig4",
        summary: "SSH chain, gamma = -0.2, k0 = 0: skin drift from the spreading, stuck",
        build: || Ok(ssh_y(2.0, 1.0, -0.2, 0.0, None, 3500.0, 351)),
    },
    Preset {
        name: "fig5b",
        summary: "SSH chain, gamma = -0.01, k0 = 2: two counter-propagating modes",
        build: || Ok(ssh_y(2.0, 1.0, -0.01, 2.0, None, 1000.0, 501)),
    },
    Preset {
        name: "fig5c",
        summary: "SSH chain, gamma = -0.2, k0 = 2: only the higher mode is visible",
        build: || Ok(ssh_y(2.0, 1.0, -0.2, 2.0, None, 1000.0, 501)),
    },
    Preset {
        name: "sm-meet",
        summary: "SSH chain, gamma = -0.05, k0 = 2: two packets meet near t = 500",
        build: || {
            let mut c = ssh_y(2.0, 1.0, -0.05, 2.0, None, 1000.0, 501);
            c.analysis.snapshots = vec![460.0, 500.0, 540.0];
            Ok(c)
        },
    },
    Preset {
        name: "sm-spread-slow",
        summary: "SSH chain, t1 = 20, t2 = 1, gamma = -2: slow spreading, reflected",
        build: || spread(1.0),
    },
    Preset {
        name: "sm-spread-fast",
        summary: "SSH chain, t1 = 20, t2 = 10, gamma = -2: fast spreading, stuck",
        build: || spread(10.0),
    },
    Preset {
        name: "sm-boundary",
        summary: "Hermitian SSH bulk, gamma = -2 on the right 40 cells: stuck",
        build: || {
            let model = ModelSpec::BoundarySsh {
                intracell: 20.0,
                intercell: 10.0,
                gain_loss: -2.0,
                cells: SSH_CELLS,
                boundary_cells: 40,
                gainloss_axis: GainLossAxis::Z,
            };
            let k0 = momentum_for_velocity(&model, LOWER_BAND, 1.0)?;
            let mut c = ssh(model, k0, Some(LOWER_BAND), 500.0, 251);
            c.packet.center = SPREAD_CENTER;
            Ok(c)
        },
    },
];

pub fn find(name: &str) -> Result<&'static Preset> {
    PRESETS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| CliError::UnknownPreset(name.to_string()))
}

pub fn preset_config(name: &str) -> Result<ExperimentConfig> {
    find(name)?.config()
}

/// Continuum grid pinned to L = 10, dx = 0.01.
const HN_LENGTH: f64 = 10.0;
const HN_SPACING: f64 = 0.01;
const SSH_CELLS: usize = 500;
const LOWER_BAND: usize = 1;
/// Far enough from the left wall that the packet's tail is not clipped;
/// clipped tails seed components the skin effect amplifies.
const SPREAD_CENTER: f64 = 250.0;

fn hn(momentum: f64, center: f64, window: f64) -> ExperimentConfig {
    ExperimentConfig {
        method: Method::Auto,
        model: ModelSpec::continuous_hn(1.0, 1.0, HN_LENGTH, HN_SPACING),
        packet: PacketConfig {
            sigma: 0.25,
            center,
            momentum,
            band: None,
        },
        times: TimesConfig {
            t_max: 1.2,
            frame_count: 200,
        },
        analysis: AnalysisConfig {
            smoothing_window: 1,
            contact_threshold: 50.0,
            // Incident and reflected halves overlap for about σ(t_c)/|v|,
            // roughly ten frames at this time step.
            guard_band: 10,
            width_cutoff_fraction: Some(0.25),
            window,
            snapshots: Vec::new(),
        },
        output: OutputConfig::default(),
    }
}

fn ssh(
    model: ModelSpec,
    momentum: f64,
    band: Option<usize>,
    t_max: f64,
    frame_count: usize,
) -> ExperimentConfig {
    ExperimentConfig {
        method: Method::Auto,
        model,
        packet: PacketConfig {
            sigma: 20.0,
            center: 250.0,
            momentum,
            band,
        },
        times: TimesConfig { t_max, frame_count },
        analysis: AnalysisConfig {
            smoothing_window: 5,
            contact_threshold: 15.0,
            guard_band: 5,
            width_cutoff_fraction: None,
            window: 200.0,
            snapshots: Vec::new(),
        },
        output: OutputConfig::default(),
    }
}

fn ssh_y(
    t1: f64,
    t2: f64,
    gamma: f64,
    momentum: f64,
    band: Option<usize>,
    t_max: f64,
    frame_count: usize,
) -> ExperimentConfig {
    let model = ModelSpec::NonHermitianSsh {
        intracell: t1,
        intercell: t2,
        gain_loss: gamma,
        cells: SSH_CELLS,
        gainloss_axis: GainLossAxis::Y,
    };
    ssh(model, momentum, band, t_max, frame_count)
}

/// Same launch velocity for both spreading rates; only `t2` differs.
fn spread(t2: f64) -> Result<ExperimentConfig> {
    let model = ModelSpec::NonHermitianSsh {
        intracell: 20.0,
        intercell: t2,
        gain_loss: -2.0,
        cells: SSH_CELLS,
        gainloss_axis: GainLossAxis::Y,
    };
    let k0 = momentum_for_velocity(&model, LOWER_BAND, 1.0)?;
    let mut c = ssh(model, k0, Some(LOWER_BAND), 600.0, 301);
    c.packet.center = SPREAD_CENTER;
    Ok(c)
}

/// Smallest `k` in `(0, π)` where the counterpart band has group velocity
/// `target`, by bracketing on a grid and bisecting. When `target` is the
/// band's top speed the bracket degenerates to a tangency, and the
/// momentum of the velocity maximum is returned.
pub fn momentum_for_velocity(model: &ModelSpec, band: usize, target: f64) -> Result<f64> {
    let v = |k: f64| {
        group_velocity(model, band, k)
            .map(|v| v - target)
            .context(|| format!("group velocity at k = {k}"))
    };
    const STEPS: usize = 4096;
    let grid = |i: usize| std::f64::consts::PI * i as f64 / STEPS as f64;
    let mut best = (grid(1), v(grid(1))?);
    let mut lo = best.0;
    let mut f_lo = best.1;
    for i in 2..STEPS {
        let hi = grid(i);
        let f_hi = v(hi)?;
        if f_lo.signum() != f_hi.signum() {
            return bisect(&v, lo, hi, f_lo);
        }
        if f_hi > best.1 {
            best = (hi, f_hi);
        }
        lo = hi;
        f_lo = f_hi;
    }
    // No sign change: check whether the maximum just touches the target.
    let step = grid(1);
    let (k, f) = golden_max(&v, (best.0 - step).max(0.0), best.0 + step)?;
    if f.abs() <= 1e-9 * target.abs().max(1.0) {
        return Ok(k);
    }
    Err(CliError::config(
        "packet.momentum",
        format!("band {band} never reaches group velocity {target}"),
    ))
}

fn bisect(v: &impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64> {
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let f_mid = v(mid)?;
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn golden_max(v: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let g = 0.5 * (5.0_f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (v(c)?, v(d)?);
    for _ in 0..200 {
        if b - a < 1e-12 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = v(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = v(d)?;
        }
    }
    let k = 0.5 * (a + b);
    Ok((k, v(k)?))
}
