//! CSV logs, metric tables and the JSON metadata sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use inzsmf_core::harness::{Repetition, StepRecord};
use inzsmf_core::{Comparison, ExperimentConfig, ExperimentResult, MetricsReport};
use serde::Serialize;

use crate::error::CliError;

/// 17 significant digits, enough to round-trip every `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub const LOG_HEADER: [&str; 15] = [
    "step",
    "true_theta",
    "true_x1",
    "true_x2",
    "est_theta",
    "est_x1",
    "est_x2",
    "theta_lo",
    "theta_hi",
    "x1_lo",
    "x1_hi",
    "x2_lo",
    "x2_hi",
    "contained",
    "step_time_s",
];

pub const METRICS_HEADER: [&str; 16] = [
    "config",
    "filter",
    "gain",
    "side",
    "innovation",
    "steps",
    "reps",
    "seed",
    "reduction_order",
    "rmse_theta",
    "rmse_x",
    "aar_theta",
    "aar_x",
    "art_seconds",
    "containment_rate",
    "burn_in",
];

pub const COMPARISON_HEADER: [&str; 16] = [
    "config",
    "gain",
    "rmse_theta_zsmf",
    "rmse_theta_inzsmf",
    "rmse_theta_improvement_pct",
    "rmse_x_zsmf",
    "rmse_x_inzsmf",
    "rmse_x_improvement_pct",
    "aar_theta_zsmf",
    "aar_theta_inzsmf",
    "aar_theta_improvement_pct",
    "aar_x_zsmf",
    "aar_x_inzsmf",
    "aar_x_improvement_pct",
    "art_zsmf",
    "art_inzsmf",
];

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::Config {
            field: "out".into(),
            reason: format!("{other:?}"),
        },
    })
}

fn log_row(r: &StepRecord) -> Vec<String> {
    let contained = match r.contained {
        Some(true) => "true",
        Some(false) => "false",
        None => "",
    };
    let p = &r.bounds.position;
    let mut row = vec![r.step.to_string()];
    row.extend(
        [
            r.truth[0],
            r.truth[1],
            r.truth[2],
            r.estimate[0],
            r.estimate[1],
            r.estimate[2],
            r.bounds.theta.0,
            r.bounds.theta.1,
            p.lower[0],
            p.upper[0],
            p.lower[1],
            p.upper[1],
        ]
        .map(num),
    );
    row.push(contained.into());
    row.push(num(r.step_time_s));
    row
}

pub fn log_file_name(config: &ExperimentConfig, rep: usize) -> String {
    format!("{}_{}_{}_rep{rep}.csv", config.name, config.filter, config.gain)
}

/// Per-step log of one repetition.
pub fn write_log(dir: &Path, config: &ExperimentConfig, rep: &Repetition) -> Result<PathBuf, CliError> {
    let path = dir.join(log_file_name(config, rep.index));
    let mut w = writer(&path)?;
    w.write_record(LOG_HEADER)?;
    for r in &rep.log.records {
        w.write_record(log_row(r))?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn write_logs(dir: &Path, result: &ExperimentResult) -> Result<Vec<PathBuf>, CliError> {
    result
        .repetitions
        .iter()
        .map(|rep| write_log(dir, &result.config, rep))
        .collect()
}

fn metrics_row(c: &ExperimentConfig, m: &MetricsReport) -> Vec<String> {
    let mut row = vec![
        c.name.clone(),
        c.filter.to_string(),
        c.gain.to_string(),
        c.side.to_string(),
        c.innovation.to_string(),
        c.steps.to_string(),
        c.reps.to_string(),
        c.seed.to_string(),
        c.reduction_order.to_string(),
    ];
    row.extend([m.rmse_theta, m.rmse_x, m.aar_theta, m.aar_x, m.art_seconds, m.containment_rate].map(num));
    row.push(c.burn_in.to_string());
    row
}

/// One row per (configuration, filter, gain) with the mean metrics.
pub fn write_metrics(path: &Path, results: &[&ExperimentResult]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(METRICS_HEADER)?;
    for r in results {
        w.write_record(metrics_row(&r.config, &r.mean))?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Side-by-side means with improvement percentages, one row per comparison.
pub fn write_comparisons(path: &Path, comparisons: &[Comparison]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(COMPARISON_HEADER)?;
    for c in comparisons {
        let (z, n, i) = (&c.baseline.mean, &c.candidate.mean, &c.improvement);
        let mut row = vec![c.baseline.config.name.clone(), c.baseline.config.gain.to_string()];
        row.extend(
            [
                z.rmse_theta,
                n.rmse_theta,
                i.rmse_theta,
                z.rmse_x,
                n.rmse_x,
                i.rmse_x,
                z.aar_theta,
                n.aar_theta,
                i.aar_theta,
                z.aar_x,
                n.aar_x,
                i.aar_x,
                z.art_seconds,
                n.art_seconds,
            ]
            .map(num),
        );
        w.write_record(row)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub configs: Vec<&'a ExperimentConfig>,
    pub noise_model: &'a str,
    pub truth_model: &'a str,
    pub gain_policy: &'a str,
    pub containment: String,
    pub art: &'a str,
    pub files: Vec<String>,
}

pub const NOISE_MODEL: &str = "process and measurement noise uniform on the generator hypercubes <0,H_w>, <0,H_v>; \
     ChaCha8 stream per repetition derived from (seed, repetition index), shared by both filters";
pub const TRUTH_MODEL: &str = "Euler-discretized unicycle on a circle of the configured radius and speed; \
     the position fix at step k measures the state at step k";
pub const GAIN_POLICY: &str = "fradius: F-radius optimal gain recomputed every step; \
     poles: minimum-norm pole placement, computed once for the invariant filter (constant error dynamics) \
     and every step for the Euclidean filter";
pub const ART_NOTE: &str = "mean wall-clock duration of the filter update only; varies between runs";

impl<'a> Metadata<'a> {
    pub fn new(command: &'a str, seed: u64, configs: Vec<&'a ExperimentConfig>, files: &[PathBuf]) -> Self {
        let first = configs.first().copied();
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            containment: format!(
                "fraction of steps after burn-in {} with the true state inside the reported set, tolerance {:e}",
                first.map_or(inzsmf_core::harness::DEFAULT_BURN_IN, |c| c.burn_in),
                inzsmf_core::harness::CONTAINMENT_TOL
            ),
            configs,
            noise_model: NOISE_MODEL,
            truth_model: TRUTH_MODEL,
            gain_policy: GAIN_POLICY,
            art: ART_NOTE,
            files: files
                .iter()
                .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
