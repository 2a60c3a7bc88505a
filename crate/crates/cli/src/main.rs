use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use qfl_core::scenario::{builtin, run_scenario, ScenarioConfig, BUILTINS};

/// Environment variable naming the root directory for scenario outputs.
const OUTPUT_ENV: &str = "QFL_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "qfl", version, about = "Quantum federated learning scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a JSON config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $QFL_OUTPUT_DIR/<name>, else ./qfl-output/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in scenario.
    Scenario {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    ListScenarios,
    /// Print a built-in scenario's config as JSON, as a starting point for `run`.
    ShowConfig {
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn lookup(name: &str, seed: u64) -> Result<ScenarioConfig> {
    match builtin(name, seed) {
        Some(c) => Ok(c),
        None => {
            let names: Vec<&str> = BUILTINS.iter().map(|(n, _)| *n).collect();
            bail!("unknown scenario `{name}` (available: {})", names.join(", "))
        }
    }
}

fn output_dir(config: &ScenarioConfig, flag: Option<PathBuf>, base: Option<&Path>) -> PathBuf {
    if let Some(dir) = flag {
        return dir;
    }
    if let Some(dir) = &config.output_dir {
        return match base {
            Some(b) if dir.is_relative() => b.join(dir),
            _ => dir.clone(),
        };
    }
    let root = std::env::var_os(OUTPUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("qfl-output"));
    root.join(&config.name)
}

fn execute(config: &ScenarioConfig, out: PathBuf, base: Option<&Path>) -> Result<ExitCode> {
    let report = run_scenario(config, &out, base).with_context(|| format!("scenario `{}` failed", config.name))?;
    println!("{}", serde_json::to_string_pretty(&report.summary)?);
    eprintln!(
        "{}: {:?}, {} files in {}",
        report.name,
        report.status,
        report.files.len(),
        out.display()
    );
    Ok(ExitCode::from(report.status.exit_code() as u8))
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::ListScenarios => {
            for (name, about) in BUILTINS {
                println!("{name:<20} {about}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ShowConfig { name, seed } => {
            println!("{}", lookup(&name, seed)?.to_json()?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Scenario { name, seed, out } => {
            let config = lookup(&name, seed)?;
            let dir = output_dir(&config, out, None);
            execute(&config, dir, None)
        }
        Command::Run { config, seed, out } => {
            let mut cfg = ScenarioConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let base = config.parent().map(Path::to_path_buf);
            let dir = output_dir(&cfg, out, base.as_deref());
            execute(&cfg, dir, base.as_deref())
        }
    }
}
