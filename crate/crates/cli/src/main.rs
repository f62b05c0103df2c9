//! `inzsmf`: runs the vehicle experiments for the invariant and Euclidean
//! zonotopic filters and writes CSV logs, metric tables and a JSON sidecar.

mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};
use inzsmf_core::harness::PRESET_NAMES;
use inzsmf_core::{compare, run_experiment, Comparison, ExperimentConfig, ExperimentResult, GainKind};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "inzsmf", version, about = "Zonotopic set-membership filters on SE(2): experiments and comparisons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one filter over the configured experiment.
    Run(ExperimentArgs),
    /// Run both filters on shared noise realizations and report improvements.
    Compare(ExperimentArgs),
    /// Compare both filters over all eight initial-error presets.
    Matrix(ExperimentArgs),
    /// Seeded property sweep over the library.
    Selftest {
        #[arg(long, env = "INZSMF_SEED", default_value_t = 0)]
        seed: u64,
    },
}

/// Overrides are applied on top of the preset, then the config file.
/// Every flag can also be set through an `INZSMF_` environment variable.
#[derive(Debug, Clone, Args)]
struct ExperimentArgs {
    #[arg(long, env = "INZSMF_PRESET", value_parser = PossibleValuesParser::new(PRESET_NAMES))]
    preset: Option<String>,
    /// Flat `key = value` file; keys match the flag names.
    #[arg(long, env = "INZSMF_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, env = "INZSMF_OUT", default_value = "out")]
    out: PathBuf,
    #[arg(long, env = "INZSMF_FILTER", value_parser = PossibleValuesParser::new(["zsmf", "inzsmf"]))]
    filter: Option<String>,
    #[arg(long, env = "INZSMF_GAIN", value_parser = PossibleValuesParser::new(["poles", "fradius"]))]
    gain: Option<String>,
    #[arg(long, env = "INZSMF_SIDE", value_parser = PossibleValuesParser::new(["left", "right"]))]
    side: Option<String>,
    #[arg(long, env = "INZSMF_INNOVATION", value_parser = PossibleValuesParser::new(["standard", "alternative"]))]
    innovation: Option<String>,
    #[arg(long, env = "INZSMF_STEPS")]
    steps: Option<usize>,
    #[arg(long, env = "INZSMF_REPS")]
    reps: Option<usize>,
    #[arg(long, env = "INZSMF_SEED")]
    seed: Option<u64>,
    /// Closed-loop poles for the pole-configuration gain, e.g. `0.95,0.98,0.98`.
    #[arg(long, env = "INZSMF_POLES", allow_hyphen_values = true)]
    poles: Option<String>,
    /// Diagonal of the initial generator matrix, e.g. `1.7,5.2,5.2`.
    #[arg(long, env = "INZSMF_H0")]
    h0: Option<String>,
    #[arg(long, env = "INZSMF_REDUCTION_ORDER")]
    reduction_order: Option<usize>,
    /// Skip the per-step CSV logs.
    #[arg(long, env = "INZSMF_NO_LOGS")]
    no_logs: bool,
}

impl ExperimentArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut push = |k, val: Option<String>| {
            if let Some(val) = val {
                v.push((k, val));
            }
        };
        push("filter", self.filter.clone());
        push("gain", self.gain.clone());
        push("side", self.side.clone());
        push("innovation", self.innovation.clone());
        push("steps", self.steps.map(|x| x.to_string()));
        push("reps", self.reps.map(|x| x.to_string()));
        push("seed", self.seed.map(|x| x.to_string()));
        push("poles", self.poles.clone());
        push("h0", self.h0.clone());
        push("reduction_order", self.reduction_order.map(|x| x.to_string()));
        v
    }

    /// Preset, then file, then flags. Also reports whether the gain was
    /// chosen explicitly.
    fn resolve(&self, preset: Option<&str>) -> Result<(ExperimentConfig, bool), CliError> {
        let file = match &self.config {
            Some(path) => config::read_file(path)?,
            None => Vec::new(),
        };
        let mut c = ExperimentConfig::default();
        config::apply_pairs(&mut c, &file)?;
        if let Some(p) = preset {
            config::apply(&mut c, "preset", p)?;
            let refinements: Vec<_> = file
                .iter()
                .filter(|(k, _)| !matches!(k.replace('-', "_").as_str(), "preset" | "name"))
                .cloned()
                .collect();
            config::apply_pairs(&mut c, &refinements)?;
        }
        let overrides = self.overrides();
        for (k, v) in &overrides {
            config::apply(&mut c, k, v)?;
        }
        let gain_given = overrides.iter().any(|(k, _)| *k == "gain")
            || file.iter().any(|(k, _)| k.trim() == "gain");
        Ok((c, gain_given))
    }
}

/// Everything a command needs before any run starts.
#[derive(Debug)]
struct RunManifest {
    command: &'static str,
    configs: Vec<ExperimentConfig>,
    out_dir: PathBuf,
    write_logs: bool,
}

impl RunManifest {
    fn new(command: &'static str, configs: Vec<ExperimentConfig>, args: &ExperimentArgs) -> Result<Self, CliError> {
        for c in &configs {
            c.validate()?;
        }
        Ok(Self {
            command,
            configs,
            out_dir: args.out.clone(),
            write_logs: !args.no_logs,
        })
    }

    fn seed(&self) -> u64 {
        self.configs.first().map_or(0, |c| c.seed)
    }
}

fn finish(manifest: &RunManifest, results: &[&ExperimentResult], comparisons: &[Comparison]) -> Result<(), CliError> {
    let dir = &manifest.out_dir;
    output::create_dir(dir)?;
    let mut files = Vec::new();
    if manifest.write_logs {
        for r in results {
            files.extend(output::write_logs(dir, r)?);
        }
    }
    let metrics = dir.join("metrics.csv");
    output::write_metrics(&metrics, results)?;
    files.push(metrics);
    if !comparisons.is_empty() {
        let path = dir.join("comparison.csv");
        output::write_comparisons(&path, comparisons)?;
        files.push(path);
    }
    let configs: Vec<&ExperimentConfig> = results.iter().map(|r| &r.config).collect();
    output::Metadata::new(manifest.command, manifest.seed(), configs, &files).write(&dir.join("metadata.json"))
}

fn print_metrics(results: &[&ExperimentResult]) {
    println!(
        "{:<12} {:<7} {:<8} {:>10} {:>10} {:>10} {:>10} {:>10} {:>8}",
        "config", "filter", "gain", "RMSE(θ)", "RMSE(x)", "AAR(θ)", "AAR(x)", "ART(ms)", "contain"
    );
    for r in results {
        let (c, m) = (&r.config, &r.mean);
        println!(
            "{:<12} {:<7} {:<8} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>8.4}",
            c.name,
            c.filter.to_string(),
            c.gain.to_string(),
            m.rmse_theta,
            m.rmse_x,
            m.aar_theta,
            m.aar_x,
            m.art_seconds * 1e3,
            m.containment_rate
        );
    }
}

fn print_comparisons(comparisons: &[Comparison]) {
    println!(
        "{:<12} {:<8} {:>22} {:>22} {:>22} {:>24}",
        "config", "gain", "RMSE(θ) z / in / %", "RMSE(x) z / in / %", "AAR(θ) z / in / %", "AAR(x) z / in / %"
    );
    for c in comparisons {
        let (z, n, i) = (&c.baseline.mean, &c.candidate.mean, &c.improvement);
        let cell = |a: f64, b: f64, p: f64| format!("{a:.3}/{b:.3}/{p:+.1}");
        println!(
            "{:<12} {:<8} {:>22} {:>22} {:>22} {:>24}",
            c.baseline.config.name,
            c.baseline.config.gain.to_string(),
            cell(z.rmse_theta, n.rmse_theta, i.rmse_theta),
            cell(z.rmse_x, n.rmse_x, i.rmse_x),
            cell(z.aar_theta, n.aar_theta, i.aar_theta),
            cell(z.aar_x, n.aar_x, i.aar_x),
        );
    }
}

fn cmd_run(args: &ExperimentArgs) -> Result<(), CliError> {
    let (config, _) = args.resolve(args.preset.as_deref())?;
    let manifest = RunManifest::new("run", vec![config], args)?;
    let result = run_experiment(&manifest.configs[0])?;
    finish(&manifest, &[&result], &[])?;
    print_metrics(&[&result]);
    report_out(&manifest.out_dir);
    Ok(())
}

fn run_comparisons(manifest: &RunManifest) -> Result<(), CliError> {
    let comparisons = manifest
        .configs
        .iter()
        .map(compare)
        .collect::<Result<Vec<_>, _>>()?;
    let results: Vec<&ExperimentResult> = comparisons
        .iter()
        .flat_map(|c| [&c.baseline, &c.candidate])
        .collect();
    finish(manifest, &results, &comparisons)?;
    print_comparisons(&comparisons);
    report_out(&manifest.out_dir);
    Ok(())
}

fn cmd_compare(args: &ExperimentArgs) -> Result<(), CliError> {
    let (config, gain_given) = args.resolve(args.preset.as_deref())?;
    // The pole-configuration preset is reported under both gains unless one
    // was asked for.
    let configs = if config.name == "table2" && !gain_given {
        [GainKind::Poles, GainKind::Fradius]
            .map(|gain| ExperimentConfig { gain, ..config.clone() })
            .to_vec()
    } else {
        vec![config]
    };
    run_comparisons(&RunManifest::new("compare", configs, args)?)
}

fn cmd_matrix(args: &ExperimentArgs) -> Result<(), CliError> {
    if args.preset.is_some() {
        return Err(CliError::Config {
            field: "preset".into(),
            reason: "matrix runs every table1 preset; use compare for a single one".into(),
        });
    }
    let configs = PRESET_NAMES[..8]
        .iter()
        .map(|p| args.resolve(Some(p)).map(|(c, _)| c))
        .collect::<Result<Vec<_>, _>>()?;
    run_comparisons(&RunManifest::new("matrix", configs, args)?)
}

fn cmd_selftest(seed: u64) -> Result<(), CliError> {
    let checks = inzsmf_core::selftest::run(seed);
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "ok    " } else { "FAILED" }, c.name, c.detail);
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Selftest(failed))
    }
}

fn report_out(dir: &Path) {
    println!("wrote {}", dir.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Matrix(args) => cmd_matrix(args),
        Command::Selftest { seed } => cmd_selftest(*seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
