//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::SimError;
use crate::output;
use crate::report::build_report;
use crate::runner::{evaluate_all, measure_all};
use crate::sweep::{run_sweep, Axis, Method, SweepGrid};
use toaloc_core::scenario::ErrorStats;

#[derive(Debug, Parser)]
#[command(
    name = "toaloc",
    version,
    about = "TOA positioning campaigns with first-path detection"
)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one campaign and write points.csv and summary.csv.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write every averaged profile to pdp.csv.
        #[arg(long)]
        dump_pdp: bool,
    },
    /// Sweep threshold parameters on a shared point set; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        method: Method,
        /// First axis, `name=start:stop:step`. Omitted: the method's default grid.
        #[arg(long)]
        axis1: Option<Axis>,
        /// Optional second axis.
        #[arg(long)]
        axis2: Option<Axis>,
        /// Evaluate grid cells concurrently. Row order is unchanged.
        #[arg(long)]
        parallel_cells: bool,
    },
    /// Print the four-way comparison table.
    Report {
        #[command(flatten)]
        common: Common,
    },
    /// Print the default configuration as JSON.
    Defaults,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON configuration; defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the number of evaluation points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Overrides the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn resolve(&self) -> Result<RunConfig, SimError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.sim.seed = seed;
        }
        if let Some(n) = self.points {
            cfg.sim.n_points = n;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn ensure_dir(dir: &Path) -> Result<(), SimError> {
    fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))
}

fn check_available(stats: &ErrorStats) -> Result<(), SimError> {
    if stats.all_unavailable() {
        Err(SimError::AllUnavailable)
    } else {
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<(), SimError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| SimError::Config(format!("threads: {e}")))?;
    }
    match cli.command {
        Command::Simulate { common, dump_pdp } => simulate(&common.resolve()?, dump_pdp),
        Command::Sweep {
            common,
            method,
            axis1,
            axis2,
            parallel_cells,
        } => {
            let grid = match axis1 {
                Some(axis1) => SweepGrid::new(method, axis1, axis2)?,
                None if axis2.is_some() => {
                    return Err(SimError::Config("--axis2 requires --axis1".into()))
                }
                None => SweepGrid::default_for(method),
            };
            sweep(&common.resolve()?, &grid, parallel_cells)
        }
        Command::Report { common } => report(&common.resolve()?),
        Command::Defaults => {
            println!("{}", RunConfig::default().to_json());
            Ok(())
        }
    }
}

pub fn simulate(cfg: &RunConfig, dump_pdp: bool) -> Result<(), SimError> {
    let measured = measure_all(&cfg.sim)?;
    let results = evaluate_all(&measured, &cfg.sim.threshold, &cfg.sim)?;
    let stats = ErrorStats::from_results(&results);
    ensure_dir(&cfg.out_dir)?;
    output::write_points(&cfg.out_dir.join("points.csv"), &results)?;
    output::write_summary(&cfg.out_dir.join("summary.csv"), &stats)?;
    if dump_pdp {
        output::write_pdp(&cfg.out_dir.join("pdp.csv"), &measured)?;
    }
    println!("{}", output::summary_line(&stats));
    check_available(&stats)
}

pub fn sweep(cfg: &RunConfig, grid: &SweepGrid, parallel_cells: bool) -> Result<(), SimError> {
    let measured = measure_all(&cfg.sim)?;
    let base = grid.base_spec(&cfg.sim.threshold, &cfg.report);
    let rows = run_sweep(&measured, grid, &base, &cfg.sim, parallel_cells)?;
    ensure_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join("sweep.csv");
    output::write_sweep(&path, &grid.param_names(), &rows)?;
    for row in &rows {
        let values: Vec<String> = grid
            .param_names()
            .iter()
            .zip(&row.values)
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        println!("{} {}", values.join(" "), output::summary_line(&row.stats));
    }
    if rows.iter().all(|r| r.stats.all_unavailable()) {
        return Err(SimError::AllUnavailable);
    }
    Ok(())
}

pub fn report(cfg: &RunConfig) -> Result<(), SimError> {
    let measured = measure_all(&cfg.sim)?;
    let table = build_report(&measured, &cfg.report, &cfg.sim)?;
    print!("{table}");
    if table.columns.iter().all(|c| c.stats.all_unavailable()) {
        return Err(SimError::AllUnavailable);
    }
    Ok(())
}
