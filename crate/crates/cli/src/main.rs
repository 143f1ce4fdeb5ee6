//! `pilotwave` command-line harness.
//!
//! Exit codes: 0 success, 1 output I/O failure, 2 config error, 3 numerical
//! failure, 64 usage error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use pilotwave::afshar::Stage;
use serde_json::json;

use config::{LabConfig, Loaded};
use output::{Artifacts, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "pilotwave", version, about = "Pilot-wave, GRW and which-path interferometry lab")]
struct Cli {
    /// Scenario config (sectioned key = value file).
    #[arg(long, global = true, env = "PILOTWAVE_CONFIG")]
    config: Option<PathBuf>,
    /// Top-level seed; overrides the config's `seed`.
    #[arg(long, global = true, env = "PILOTWAVE_SEED")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "PILOTWAVE_OUT", default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "PILOTWAVE_THREADS")]
    threads: Option<usize>,
    /// Wave-field snapshot spacing that drives trajectories.
    #[arg(long, global = true, env = "PILOTWAVE_SNAPSHOT_EVERY")]
    snapshot_every: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StageArg {
    I,
    Ii,
    Iii,
    All,
}

impl StageArg {
    fn stages(self) -> Vec<Stage> {
        match self {
            StageArg::I => vec![Stage::I],
            StageArg::Ii => vec![Stage::II],
            StageArg::Iii => vec![Stage::III],
            StageArg::All => Stage::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the wire-grid interferometer stages.
    Afshar {
        #[arg(long, value_enum, default_value = "all")]
        stage: StageArg,
    },
    /// Free two-pinhole flight with a trajectory ensemble.
    Doubleslit {
        /// Ensemble size; defaults to `trajectories.count`.
        #[arg(long)]
        trajectories: Option<usize>,
    },
    /// Seeded GRW collapse runs.
    Grw,
    /// Visibility / distinguishability tables and the inferred wire-plane contrast.
    DualityTable,
    /// Quantum-classical deviation over a mass ladder.
    ClassicalSweep,
    /// Gaussian packet synthesis and free spreading.
    PacketDemo,
    /// Check the config against the schema without running anything.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Afshar { .. } => "afshar",
            Command::Doubleslit { .. } => "doubleslit",
            Command::Grw => "grw",
            Command::DualityTable => "duality-table",
            Command::ClassicalSweep => "classical-sweep",
            Command::PacketDemo => "packet-demo",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] pilotwave::Error),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Loaded, CliError> {
    let path = path.ok_or_else(|| CliError::Config("no config given (--config or PILOTWAVE_CONFIG)".into()))?;
    config::load(path).map_err(|e| CliError::Config(e.to_string()))
}

fn apply_overrides(cli: &Cli, cfg: &mut LabConfig) -> Result<(), CliError> {
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dt) = cli.snapshot_every {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Config(format!("--snapshot-every must be positive, got {dt}")));
        }
        cfg.trajectories.snapshot_every = dt;
        cfg.classical.sweep.snapshot_every = dt;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    let loaded = load_config(cli.config.as_deref())?;
    if let Command::Validate = cli.command {
        print!("{}", loaded.report.render());
        if loaded.report.is_empty() {
            println!("ok: schema version {}", config::SCHEMA_VERSION);
        }
        return if loaded.report.has_errors() { Err(CliError::Config("schema violations".into())) } else { Ok(()) };
    }
    for w in &loaded.report.unknown {
        eprintln!("warning: unknown key {w}");
    }
    if loaded.report.has_errors() {
        eprint!("{}", loaded.report.render());
        let fields: Vec<&str> = loaded.report.missing.iter().map(String::as_str).collect();
        let msg = if fields.is_empty() {
            "schema violations".to_string()
        } else {
            format!("missing required field(s): {}", fields.join(", "))
        };
        return Err(CliError::Config(msg));
    }
    let mut cfg = loaded.config;
    apply_overrides(cli, &mut cfg)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))?;
    }

    let mut out = Artifacts::create(&cli.out)?;
    let results = match &cli.command {
        Command::Afshar { stage } => commands::afshar(&cfg, &stage.stages(), &mut out)?,
        Command::Doubleslit { trajectories } => {
            commands::double_slit(&cfg, trajectories.unwrap_or(cfg.trajectories.count), &mut out)?
        }
        Command::Grw => commands::grw(&cfg, &mut out)?,
        Command::DualityTable => commands::duality_table(&cfg, &mut out)?,
        Command::ClassicalSweep => commands::classical_sweep(&cfg, &mut out)?,
        Command::PacketDemo => commands::packet_demo(&cfg, &mut out)?,
        Command::Validate => unreachable!("handled above"),
    };
    let summary = json!({
        "command": cli.command.name(),
        "schema_version": config::SCHEMA_VERSION,
        "config_hash": loaded.hash,
        "seed": cfg.seed,
        "results": results,
    });
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    out.write("summary.json", text.as_bytes())?;

    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        config_hash: loaded.hash.clone(),
        seed: cfg.seed,
        versions: BTreeMap::from([
            ("pilotwave-core", pilotwave::VERSION),
            ("pilotwave-cli", env!("CARGO_PKG_VERSION")),
        ]),
        threads: rayon::current_num_threads(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        files: out.files().to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    out.write("manifest.json", text.as_bytes())?;
    println!("{}: wrote {} files to {}", cli.command.name(), out.files().len(), out.dir().display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pilotwave: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
