use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cosmos_cli::commands::{cmd_characterize, cmd_exhaustive, cmd_explore, RunContext};
use cosmos_cli::config::{load_config, BackendConfig};
use cosmos_cli::report::cmd_report;
use cosmos_cli::CliError;

/// Compositional design-space exploration for multi-component accelerators.
#[derive(Parser)]
#[command(name = "cosmos", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed (COSMOS_SEED overrides the config too,
    /// this flag wins over both).
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured backend.
    #[arg(long, value_parser = ["simulated", "table"])]
    backend: Option<String>,
    /// Replay table CSV (with --backend table).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Worker threads for per-component characterization.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Characterize every synthesizable component into design-space regions.
    Characterize(CommonArgs),
    /// Plan the throughput sweep and map it back onto knob settings.
    Explore {
        #[command(flatten)]
        common: CommonArgs,
        /// Pareto-curve granularity; defaults to the config's delta.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run the naive full-grid baseline and compose it at the system level.
    Exhaustive(CommonArgs),
    /// Summarize spans, invocation counts and plot data from prior runs.
    Report(CommonArgs),
}

fn build_context(common: &CommonArgs) -> Result<RunContext, CliError> {
    let mut config = load_config(&common.config)?;
    if let Some(kind) = &common.backend {
        config.backend = match kind.as_str() {
            "simulated" => BackendConfig::Simulated,
            "table" => {
                let path = common.table.clone().ok_or_else(|| {
                    CliError::Config("--backend table requires --table <csv>".into())
                })?;
                BackendConfig::Table { path, interpolate: true }
            }
            _ => unreachable!("clap validates the value"),
        };
    } else if common.table.is_some() {
        return Err(CliError::Config("--table requires --backend table".into()));
    }
    let seed = common
        .seed
        .or_else(|| std::env::var("COSMOS_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(config.seed);
    let base_dir = common.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let backend = config.make_backend(&base_dir, seed)?;
    Ok(RunContext { config, backend, seed, jobs: common.jobs.max(1) })
}

fn run() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::Characterize(common) => {
            let ctx = build_context(&common)?;
            let regions = cmd_characterize(&ctx, &common.out)?;
            let total_regions: usize = regions.components.iter().map(|c| c.regions.len()).sum();
            println!(
                "characterized {} components into {} regions ({})",
                regions.components.len(),
                total_regions,
                common.out.display()
            );
            Ok(())
        }
        Command::Explore { common, delta } => {
            let ctx = build_context(&common)?;
            let (planned, pareto) = cmd_explore(&ctx, &common.out, delta)?;
            println!(
                "planned {} points over theta [{:.6}, {:.6}] 1/ms; mapped {} system points ({})",
                planned.points.len(),
                planned.theta_min_per_ms,
                planned.theta_max_per_ms,
                pareto.points.len(),
                common.out.display()
            );
            Ok(())
        }
        Command::Exhaustive(common) => {
            let ctx = build_context(&common)?;
            let result = cmd_exhaustive(&ctx, &common.out)?;
            println!(
                "exhaustive baseline: {} grid invocations, {} combinations, {} Pareto-optimal system points",
                result.total_grid_invocations,
                result.combination_count,
                result.system_pareto.as_ref().map_or(0, |p| p.len())
            );
            Ok(())
        }
        Command::Report(common) => {
            // report only consumes artifacts; the config is still parsed so
            // usage errors surface consistently
            let _ = load_config(&common.config)?;
            cmd_report(&common.out)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
