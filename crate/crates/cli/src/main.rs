use clap::{Parser, Subcommand};
use hydrolim::harness::{self, RunConfig, VerifyLevel};
use hydrolim::{HydroError, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Hydrostatic-limit experiments: data generation, ε-sweeps, rate fits,
/// verification suites and plot output.
#[derive(Parser, Debug)]
#[command(name = "hydrolim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate and validate the initial data (u0, v0).
    GenData {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hydrostatic solve plus the coupled error analysis for every ε in the sweep.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Least-squares rate of error against ε from reports or run directories.
    RateFit {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Write the fit as JSON here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite.
    Verify {
        #[arg(long, default_value = "quick", value_parser = parse_level)]
        level: VerifyLevel,
        #[arg(long, default_value_t = 20240531)]
        seed: u64,
        /// Directory for verify_report.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CSV data and gnuplot scripts from reports or run directories.
    Plot {
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "plots")]
        out: PathBuf,
    },
}

fn parse_level(s: &str) -> std::result::Result<VerifyLevel, String> {
    s.parse().map_err(|e: HydroError| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::GenData { config, out } => {
            let config = load_config(config.as_deref())?;
            let out = harness::resolve_out(out, &config);
            let data = harness::gen_data(&config, &out)?;
            print_json(&data.report)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config, out, seed } => {
            let mut config = load_config(config.as_deref())?;
            if let Some(s) = seed {
                config.seed = s;
            }
            let out = harness::resolve_out(out, &config);
            let threads = harness::worker_count();
            log::info!("running {} sweep points on {threads} workers into {}", config.sweep.epsilons.len(), out.display());
            let summary = harness::run(&config, &out, threads)?;
            for r in &summary.reports {
                println!("epsilon {:<8} L2 {:.6e}  Linf {:.6e}  bootstrap {:.6e}", r.epsilon, r.l2_error, r.linf_error, r.bootstrap_ratio);
            }
            if let Some(fit) = &summary.rate_fit {
                println!("slope L2 {:.4}  Linf {:.4}  {}", fit.l2.slope, fit.linf.slope, verdict(fit.passed));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::RateFit { inputs, out } => {
            let loaded = harness::load_reports(&inputs)?;
            let reports: Vec<_> = loaded.into_iter().map(|l| l.report).collect();
            let fit = harness::fit_rate(&reports)?;
            print_json(&fit)?;
            if let Some(path) = out {
                write_json(&path, &fit)?;
            }
            eprintln!("slope L2 {:.4}  Linf {:.4}  {}", fit.l2.slope, fit.linf.slope, verdict(fit.passed));
            Ok(if fit.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Verify { level, seed, out } => {
            let report = harness::verify(level, seed)?;
            for c in &report.checks {
                let cmp = if c.lower_bound { ">=" } else { "<=" };
                eprintln!("{} {}/{}: {:.3e} {cmp} {:.1e}", verdict(c.passed), c.module, c.name, c.value, c.tolerance);
            }
            print_json(&report)?;
            if let Some(dir) = out {
                write_json(&dir.join("verify_report.json"), &report)?;
            }
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Plot { inputs, out } => {
            let summary = harness::plot(&inputs, &out)?;
            for f in &summary.files {
                println!("{}", out.join(f).display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
