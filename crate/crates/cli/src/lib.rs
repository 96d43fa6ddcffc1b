//! Experiment presets, config files and reproducible outputs for wave
//! packets in open-boundary non-Hermitian chains.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod presets;
pub mod report;

use std::path::{Path, PathBuf};

use skinwave_core::evolve::Method;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use experiment::{run_experiment, ExperimentRun};
pub use output::ManifestEntry;
pub use report::ExperimentReport;

use crate::error::CliError as E;
use crate::output::{csv_text, heatmap_pgm, write_file};

/// Command-line overrides applied on top of a preset or config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub method: Option<Method>,
    pub no_heatmap: bool,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(out) = &self.out {
            config.output.directory = out.clone();
        }
        if let Some(m) = self.method {
            config.method = m;
        }
        if self.no_heatmap {
            config.output.heatmap = false;
        }
    }
}

#[derive(Debug)]
pub struct Completed {
    pub run: ExperimentRun,
    pub report: ExperimentReport,
}

pub fn run_preset(name: &str, overrides: &Overrides) -> Result<Completed> {
    let mut config = presets::preset_config(name)?;
    overrides.apply(&mut config);
    run_config(name, &config)
}

pub fn run_config_file(path: &Path, overrides: &Overrides) -> Result<Completed> {
    let mut config = ExperimentConfig::load(path)?;
    overrides.apply(&mut config);
    let name = path.file_stem().map_or_else(
        || "config".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    run_config(&name, &config)
}

/// Runs `config`, writes its outputs and builds the report.
pub fn run_config(name: &str, config: &ExperimentConfig) -> Result<Completed> {
    let run = run_experiment(name, config)?;
    let manifest = emit_outputs(&run)?;
    let report = ExperimentReport::new(&run, manifest);
    Ok(Completed { run, report })
}

/// Writes the files enabled in the run's output config.
pub fn emit_outputs(run: &ExperimentRun) -> Result<Vec<ManifestEntry>> {
    let out = &run.config.output;
    let dir = &out.directory;
    std::fs::create_dir_all(dir).map_err(|e| E::io(dir, e))?;
    let mut manifest = Vec::new();
    let x = run.geometry.cell_positions();
    let frames: Vec<Vec<f64>> = (0..run.evolution.len())
        .map(|k| run.frame_density(k))
        .collect::<Result<_>>()?;

    if out.density_csv {
        let rows = frames.iter().enumerate().flat_map(|(k, d)| {
            let t = run.evolution.times[k];
            let ln = run.evolution.log_norm(k);
            d.iter()
                .zip(x)
                .map(move |(&d, &x)| vec![Some(t), Some(x), Some(d), Some(ln)])
        });
        let text = csv_text("t,x,density,log_norm", rows);
        manifest.push(write_file(dir, "density.csv", text.as_bytes())?);
    }
    if out.trajectory_csv {
        let rows = run.trajectory.records.iter().map(|r| {
            vec![
                Some(r.t),
                Some(r.x_peak),
                Some(r.v_peak),
                r.sigma_measured,
                Some(r.log_norm),
            ]
        });
        let text = csv_text("t,x_peak,v_peak,sigma_measured,log_norm", rows);
        manifest.push(write_file(dir, "trajectory.csv", text.as_bytes())?);
    }
    if out.oracle_csv {
        if let Some(oracle) = &run.oracle {
            let rows = oracle
                .rows
                .iter()
                .map(|o| vec![Some(o.t), o.x_peak, o.v_in, o.v_ref]);
            let text = csv_text("t,x_peak_oracle,v_in_oracle,v_ref_oracle", rows);
            manifest.push(write_file(dir, "oracle.csv", text.as_bytes())?);
        }
    }
    if out.heatmap {
        manifest.push(write_file(dir, "heatmap.pgm", &heatmap_pgm(&frames))?);
    }
    if !run.snapshots.is_empty() {
        let rows = run.snapshots.iter().flat_map(|s| {
            frames[s.frame]
                .iter()
                .zip(x)
                .map(move |(&d, &x)| vec![Some(s.t), Some(x), Some(d)])
        });
        let text = csv_text("t,x,density", rows);
        manifest.push(write_file(dir, "snapshots.csv", text.as_bytes())?);
    }
    Ok(manifest)
}
