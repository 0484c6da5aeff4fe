use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sentience::audit::{apply_ablation, audit_sentience, AUDIT_CSV_HEADER};
use sentience::harness::{
    build_agent, output_root, parse_grid, report, run_and_write, sweep_and_write, HarnessError, RunConfig,
};

/// Run, sweep, audit and report on simulated perceiving agents.
#[derive(Parser)]
#[command(name = "sentience", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config and write its record under the output root.
    Run { config: PathBuf },
    /// Run the Cartesian product of grid values over a base config.
    Sweep {
        config: PathBuf,
        /// `key=v1,v2,...`; key is a dotted path such as `env.sigma`.
        #[arg(long = "grid", num_args = 1..)]
        grid: Vec<String>,
    },
    /// Audit one channel of the configured agent and print a CSV verdict.
    Audit {
        config: PathBuf,
        #[arg(long)]
        channel: String,
    },
    /// Collect every record under a directory into metrics.csv and plots.
    Report { dir: PathBuf },
}

fn load(path: &Path) -> Result<RunConfig, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::from_toml(&text)
}

fn audit(cfg: &RunConfig, channel: &str) -> Result<(), HarnessError> {
    let agent = build_agent(cfg)?;
    if agent.channel(channel).is_none() {
        return Err(HarnessError::ConfigInvalid(format!("unknown channel {channel}")));
    }
    let (params, ablations) = match &cfg.audit {
        Some(a) => (a.params.clone(), a.ablations.clone()),
        None => (Default::default(), Vec::new()),
    };
    params.validate().map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    let fail = |e: sentience::audit::AuditError| HarnessError::ComponentFailure { module: "audit", message: e.to_string() };
    println!("ablation,{AUDIT_CSV_HEADER}");
    println!("none,{}", audit_sentience(&agent, channel, &params).map_err(fail)?.csv_line());
    for ablation in ablations {
        let ablated = apply_ablation(&agent, channel, ablation).map_err(fail)?;
        println!("{},{}", ablation.name(), audit_sentience(&ablated, channel, &params).map_err(fail)?.csv_line());
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    let root = output_root();
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let (dir, _) = run_and_write(&cfg, &root)?;
            println!("{}", dir.display());
        }
        Command::Sweep { config, grid } => {
            let cfg = load(&config)?;
            let axes = parse_grid(&grid)?;
            println!("{}", sweep_and_write(&cfg, &axes, &root)?.display());
        }
        Command::Audit { config, channel } => audit(&load(&config)?, &channel)?,
        Command::Report { dir } => println!("{}", report(&dir)?.display()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
