//! Plain-text experiment report.

use std::fmt::Write as _;

use skinwave_core::evolve::Method;
use skinwave_core::wavepacket::{Classification, LineFit};

use crate::experiment::{classification_label, ExperimentRun};
use crate::output::{format_float, ManifestEntry};

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotSummary {
    pub t: f64,
    /// `(position, density relative to the frame maximum)`, highest first.
    pub peaks: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub model: String,
    pub method: Method,
    pub frames: usize,
    pub cells: usize,
    pub t_max: f64,
    pub classification: String,
    pub contact_time: Option<f64>,
    pub window_truncated: bool,
    pub v_in_fit: Option<LineFit>,
    pub v_ref_fit: Option<LineFit>,
    /// Slope of the pre-contact velocity fit, the skin acceleration.
    pub v_p_slope: Option<f64>,
    pub oracle: Option<String>,
    pub max_oracle_deviation: Option<f64>,
    pub final_log_norm: f64,
    pub snapshots: Vec<SnapshotSummary>,
    pub manifest: Vec<ManifestEntry>,
}

impl ExperimentReport {
    pub fn new(run: &ExperimentRun, manifest: Vec<ManifestEntry>) -> Self {
        let (v_in_fit, v_ref_fit) = match run.reflection.classification {
            Classification::Reflected {
                v_in_fit,
                v_ref_fit,
            } => (Some(v_in_fit), Some(v_ref_fit)),
            _ => (None, None),
        };
        let model = serde_variant(&run.config.model);
        let last = run.evolution.len() - 1;
        ExperimentReport {
            name: run.name.clone(),
            model,
            method: run.evolution.method,
            frames: run.evolution.len(),
            cells: run.geometry.cell_count(),
            t_max: run.config.times.t_max,
            classification: classification_label(run),
            contact_time: run.reflection.contact_time,
            window_truncated: run.reflection.truncated,
            v_in_fit,
            v_ref_fit,
            v_p_slope: run.pre_contact_fit.map(|f| f.slope),
            oracle: run.oracle.as_ref().map(|o| match o.band {
                Some(b) => format!("{} (band {b})", o.kind),
                None => o.kind.to_string(),
            }),
            max_oracle_deviation: run.max_oracle_deviation(),
            final_log_norm: run.evolution.log_norm(last),
            snapshots: run
                .snapshots
                .iter()
                .map(|s| {
                    let top = s.peaks.first().map_or(1.0, |p| p.1);
                    SnapshotSummary {
                        t: s.t,
                        peaks: s.peaks.iter().map(|&(x, d)| (x, d / top)).collect(),
                    }
                })
                .collect(),
            manifest,
        }
    }

    /// True when every present numeric field is finite.
    pub fn is_finite(&self) -> bool {
        let fit_ok = |f: &Option<LineFit>| {
            f.is_none_or(|f| {
                [f.slope, f.intercept, f.t_start, f.t_end]
                    .iter()
                    .all(|x| x.is_finite())
            })
        };
        let opt_ok = |x: Option<f64>| x.is_none_or(f64::is_finite);
        fit_ok(&self.v_in_fit)
            && fit_ok(&self.v_ref_fit)
            && opt_ok(self.contact_time)
            && opt_ok(self.v_p_slope)
            && opt_ok(self.max_oracle_deviation)
            && self.final_log_norm.is_finite()
            && self.t_max.is_finite()
            && self.snapshots.iter().all(|s| {
                s.t.is_finite() && s.peaks.iter().all(|p| p.0.is_finite() && p.1.is_finite())
            })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let opt = |x: Option<f64>| x.map_or_else(|| "absent".to_string(), format_float);
        let fit = |f: &Option<LineFit>| match f {
            Some(f) => format!(
                "{} + {} t over [{}, {}] ({} samples)",
                format_float(f.intercept),
                format_float(f.slope),
                format_float(f.t_start),
                format_float(f.t_end),
                f.samples
            ),
            None => "absent".to_string(),
        };
        let mut line = |key: &str, value: String| {
            let _ = writeln!(out, "{key:<22} {value}");
        };
        line("experiment", self.name.clone());
        line("model", format!("{} ({} cells)", self.model, self.cells));
        line("method", self.method.to_string());
        line(
            "frames",
            format!(
                "{} over t in [0, {}]",
                self.frames,
                format_float(self.t_max)
            ),
        );
        line(
            "time origin",
            "t = 0 is the launch of the packet".to_string(),
        );
        line("classification", self.classification.clone());
        line("contact time", opt(self.contact_time));
        line("window truncated", self.window_truncated.to_string());
        line("v_in fit", fit(&self.v_in_fit));
        line("v_ref fit", fit(&self.v_ref_fit));
        line("v_p slope", opt(self.v_p_slope));
        line(
            "oracle",
            self.oracle.clone().unwrap_or_else(|| "absent".to_string()),
        );
        line("max oracle deviation", opt(self.max_oracle_deviation));
        line("final ln norm^2", format_float(self.final_log_norm));
        for s in &self.snapshots {
            let peaks: Vec<String> = s
                .peaks
                .iter()
                .map(|(x, h)| format!("{}@{}", format_float(*x), format_float(*h)))
                .collect();
            line(
                &format!("snapshot t={}", format_float(s.t)),
                peaks.join(" "),
            );
        }
        let _ = writeln!(out, "files");
        for e in &self.manifest {
            let _ = writeln!(out, "  {:<16} {:>10}  sha256 {}", e.file, e.bytes, e.sha256);
        }
        out
    }
}

fn serde_variant(model: &skinwave_core::model::ModelSpec) -> String {
    use skinwave_core::model::ModelSpec::*;
    match model {
        ContinuousHn { .. } => "ContinuousHN",
        DiscreteHn { .. } => "DiscreteHN",
        NonHermitianSsh { .. } => "NonHermitianSSH",
        BoundarySsh { .. } => "BoundarySSH",
    }
    .to_string()
}
