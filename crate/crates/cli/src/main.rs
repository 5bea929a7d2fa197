use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use scpg_core::calibrate::{calibrate_feedback_weights, CalibrationSettings};
use scpg_core::experiments::{find_experiment, list_experiments, report, run_experiment, ExperimentSpec};
use scpg_core::CpgConfig;

/// Runs the adaptive spiking CPG experiments and checks them against their
/// expected bounds.
#[derive(Debug, Parser)]
#[command(name = "scpg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List registered experiments.
    List,
    /// Run one experiment (or `all`) and write its result bundle.
    Run {
        /// Experiment name from `list`, or `all`.
        name: String,
        /// Network configuration file. Defaults to the shipped configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated seeds. Defaults to the experiment's own seed list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Output directory; each experiment writes into `<out>/<name>/`.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Simulated duration in ms. Defaults to the experiment's own duration.
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Summarize a bundle directory (or a directory of bundles).
    Report {
        dir: PathBuf,
    },
    /// Grid-search the feedback weights and print the resulting configuration.
    Calibrate {
        /// Base configuration. Defaults to the shipped configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Calibration settings file (band, Ref rates, seeds, weight grid).
        #[arg(long)]
        settings: Option<PathBuf>,
        /// Write the calibrated configuration here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>) -> Result<CpgConfig> {
    match path {
        Some(p) => CpgConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(CpgConfig::shipped()),
    }
}

fn cmd_list() {
    for e in list_experiments() {
        println!("{:<24} {}", e.name, e.description);
    }
}

fn cmd_run(name: &str, config: Option<&Path>, seeds: Option<Vec<u64>>, out: &Path, t_end: Option<f64>) -> Result<bool> {
    let cfg = load_config(config)?;
    let names: Vec<&str> = if name == "all" {
        list_experiments().iter().map(|e| e.name).collect()
    } else {
        vec![find_experiment(name)?.name]
    };
    let mut all_passed = true;
    for n in names {
        let mut spec = ExperimentSpec::new(n, cfg, out)?;
        if let Some(s) = &seeds {
            spec.seeds = s.clone();
        }
        if let Some(t) = t_end {
            spec.t_end_ms = t;
        }
        let summary = run_experiment(&spec).with_context(|| format!("running {n}"))?;
        for c in &summary.checks {
            println!(
                "{:<24} {:<58} {:>9.3}  {:<14} {}",
                n,
                c.name,
                c.measured,
                c.bounds_text(),
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
        println!("{n}: {} -> {}", if summary.passed { "PASS" } else { "FAIL" }, spec.bundle_dir().display());
        all_passed &= summary.passed;
    }
    Ok(all_passed)
}

fn cmd_report(dir: &Path) -> Result<bool> {
    let r = report(dir)?;
    print!("{}", r.render());
    Ok(r.passed())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn cmd_calibrate(config: Option<&Path>, settings: Option<&Path>, out: Option<&Path>) -> Result<bool> {
    let base = load_config(config)?;
    let settings = match settings {
        Some(p) => CalibrationSettings::from_toml(&std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => CalibrationSettings::default(),
    };
    if let (Some(o), Some(c)) = (out, config) {
        if same_file(o, c) {
            bail!("refusing to overwrite the input configuration {}", c.display());
        }
    }
    eprintln!("evaluating {} grid points", settings.grid.len());
    let cal = calibrate_feedback_weights(&base, &settings)?;
    eprintln!("score {:.3}, Pearson r {:.3}, {} of {} points monotone", cal.score, cal.pearson_r, cal.monotone, cal.evaluated);
    for (rate, f) in &cal.response {
        eprintln!("  Ref {rate:>5} Hz -> {f:.2} Hz");
    }
    let text = cal.config.to_toml()?;
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::List => {
            cmd_list();
            Ok(true)
        }
        Command::Run { name, config, seeds, out, t_end } => cmd_run(name, config.as_deref(), seeds.clone(), out, *t_end),
        Command::Report { dir } => cmd_report(dir),
        Command::Calibrate { config, settings, out } => cmd_calibrate(config.as_deref(), settings.as_deref(), out.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
