//! Seeded simulator, scenario files and result emission for Bayesian
//! diffusion estimation. The estimator itself lives in `bdiff_core`.

pub mod config;
pub mod edgelist;
pub mod error;
pub mod output;
pub mod rng;
pub mod sim;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use error::{ConfigError, Error, Result};

use config::RunConfig;
use sim::{Execution, Pipeline, RunOutput, Scenario};

pub const METRICS_FILE: &str = "metrics.csv";
pub const PLOT_FILE: &str = "plot_msd.py";
pub const SCENARIO_FILE: &str = "scenario.toml";

/// What one seed of a batch wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedReport {
    pub seed: u64,
    pub dir: PathBuf,
    /// Final network MSD per pipeline, in pipeline order.
    pub final_msd: Vec<(Pipeline, f64)>,
}

/// Writes metrics, the plot script, the resolved scenario and optionally
/// the final statistics of one run into `dir`.
pub fn write_run(sc: &Scenario, out: &RunOutput, dir: &Path, dump_state: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join(METRICS_FILE);
    output::emit_csv(&out.rows, &csv)?;
    output::emit_plot_script(&csv, &dir.join(PLOT_FILE))?;
    let scenario_path = dir.join(SCENARIO_FILE);
    std::fs::write(&scenario_path, config::serialize_scenario(sc)?).map_err(|e| Error::io(&scenario_path, e))?;
    if dump_state {
        for (p, stats) in &out.final_stats {
            let path = dir.join(format!("state_{p}.txt"));
            std::fs::write(&path, output::format_state(stats)).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

fn run_one(sc: &Scenario, dir: &Path, exec: Execution, dump_state: bool) -> Result<SeedReport> {
    let out = sim::run_scenario(sc, exec)?;
    write_run(sc, &out, dir, dump_state)?;
    let final_msd = Pipeline::ALL
        .iter()
        .filter_map(|&p| out.final_row(p).map(|r| (p, r.msd)))
        .collect();
    Ok(SeedReport {
        seed: sc.seed,
        dir: dir.to_path_buf(),
        final_msd,
    })
}

/// Runs `run.seeds` consecutive seeds. A single seed writes straight into
/// `out_dir`; a batch writes one `seed-<s>` subdirectory per seed. Seeds
/// run on worker threads unless `run.sequential` is set; results do not
/// depend on the choice.
pub fn run_batch(sc: &Scenario, run: &RunConfig, out_dir: &Path) -> Result<Vec<SeedReport>> {
    sc.validate()?;
    let exec = if run.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    if run.seeds <= 1 {
        return Ok(vec![run_one(sc, out_dir, exec, run.dump_state)?]);
    }
    let job = |i: usize| {
        let mut s = sc.clone();
        s.seed = sc.seed.wrapping_add(i as u64);
        let dir = out_dir.join(format!("seed-{}", s.seed));
        run_one(&s, &dir, exec, run.dump_state)
    };
    match exec {
        Execution::Sequential => (0..run.seeds).map(job).collect(),
        Execution::Parallel => (0..run.seeds).into_par_iter().map(job).collect(),
    }
}

/// Dense text view of a weight table: one line per node `k`, column `l`
/// holds `w_{l,k}` (zero outside `N_k`).
pub fn format_weights(w: &bdiff_core::graph::NeighbourWeights) -> String {
    let m = w.node_count();
    let mut out = String::new();
    for (k, row) in w.rows() {
        let mut dense = vec![0.0; m];
        for &(l, x) in row {
            dense[l.index()] = x;
        }
        let cells: Vec<String> = dense.iter().map(|x| format!("{x:.6}")).collect();
        out.push_str(&format!("{k:>4}: {}\n", cells.join(" ")));
    }
    out
}
