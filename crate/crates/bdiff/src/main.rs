use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bdiff::config::load_config;
use bdiff::{format_weights, run_batch, Result};

#[derive(Parser)]
#[command(name = "bdiff", version, about = "Bayesian diffusion estimation over ad-hoc networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write metrics, a plot script and the resolved scenario.
    Run {
        config: PathBuf,
        /// Output directory; overrides `[run] out` in the scenario file.
        #[arg(long, env = "BDIFF_OUT_DIR")]
        out: Option<PathBuf>,
        /// Number of consecutive seeds to run, starting at the scenario seed.
        #[arg(long)]
        seeds: Option<usize>,
        /// Process nodes and seeds on one thread.
        #[arg(long)]
        sequential: bool,
        /// Also write the final statistics of every node.
        #[arg(long)]
        dump_state: bool,
    },
    /// Parse and validate a scenario without running it.
    Validate { config: PathBuf },
    /// Print the incremental (c) and spatial (a) weight tables.
    Weights { config: PathBuf },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seeds,
            sequential,
            dump_state,
        } => {
            let (sc, mut run) = load_config(&config)?;
            if let Some(n) = seeds {
                if n == 0 {
                    return Err(bdiff::ConfigError::invalid("--seeds", "batch size must be at least 1").into());
                }
                run.seeds = n;
            }
            run.sequential |= sequential;
            run.dump_state |= dump_state;
            let out_dir = out.or(run.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            for report in run_batch(&sc, &run, &out_dir)? {
                let summary: Vec<String> = report
                    .final_msd
                    .iter()
                    .map(|(p, msd)| format!("{p}={msd:.4e}"))
                    .collect();
                println!("seed {} -> {}: final msd {}", report.seed, report.dir.display(), summary.join(" "));
            }
        }
        Command::Validate { config } => {
            let (sc, run) = load_config(&config)?;
            println!(
                "ok: {} nodes ({}), n = {}, T = {}, {} seed(s)",
                sc.node_count(),
                sc.topology.kind(),
                sc.order(),
                sc.steps,
                run.seeds
            );
        }
        Command::Weights { config } => {
            let (sc, _) = load_config(&config)?;
            let net = sc.build_network()?;
            let cfg = sc.diffusion_config(&net)?;
            let text = format!(
                "c ({}):\n{}a ({}):\n{}",
                sc.incremental_weights,
                format_weights(&cfg.incremental_weights),
                sc.spatial_weights,
                format_weights(&cfg.spatial_weights)
            );
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = std::io::stdout().write_all(text.as_bytes());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
