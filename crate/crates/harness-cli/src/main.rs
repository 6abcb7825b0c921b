//! `lockstep` CLI: sweep grids, single rows, reference generation, and the
//! batch-size benchmark, all driven by a flat key=value config with flag
//! overrides.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lockstep_harness::{
    compute_reference, run_bench, run_row, run_sweep, sweep_reference, union_grid, Approach,
    HarnessError, SweepConfig, CSV_HEADER,
};

#[derive(Parser)]
#[command(name = "lockstep", about = "Lockstep batched stiff ODE sweep harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonFlags {
    /// Flat key=value config file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model name (linear, robertson, robertson-scaled, ignition).
    #[arg(long)]
    model: Option<String>,
    /// Approaches, e.g. 1A,2B (digit: 1 GMRES, 2 direct analytic J,
    /// 3 direct numerical J; letter: A fixed atol, B typical values).
    #[arg(long, value_delimiter = ',')]
    approach: Option<Vec<Approach>>,
    /// Outer interval widths in seconds (comma separated).
    #[arg(long = "dt-cfd", value_delimiter = ',')]
    dt_cfd: Option<Vec<f64>>,
    /// Tolerance scalings (comma separated).
    #[arg(long, value_delimiter = ',')]
    eta: Option<Vec<f64>>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Batch width in cells.
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long = "tile-size")]
    tile_size: Option<usize>,
    /// Storage layout, CY or YC.
    #[arg(long)]
    layout: Option<String>,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-row wall-clock budget in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Run this many sweep rows concurrently.
    #[arg(long = "parallel-rows")]
    parallel_rows: Option<usize>,
    /// Reference cache directory.
    #[arg(long = "cache-dir")]
    cache_dir: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long = "print-config")]
    print_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full approach x dt_cfd x eta grid and emit CSV.
    Sweep(CommonFlags),
    /// Run a single grid point and emit its CSV row.
    Run(CommonFlags),
    /// Build (or refresh) the cached tight-tolerance reference.
    Reference(CommonFlags),
    /// Batch-size x solver timing table.
    Bench(CommonFlags),
}

impl CommonFlags {
    fn build_config(&self) -> Result<SweepConfig, HarnessError> {
        let mut cfg = SweepConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(v) = &self.model {
            cfg.model = v.clone();
        }
        if let Some(v) = &self.approach {
            cfg.approaches = v.clone();
        }
        if let Some(v) = &self.dt_cfd {
            cfg.dt_cfd_list = v.clone();
        }
        if let Some(v) = &self.eta {
            cfg.eta_list = v.clone();
        }
        if let Some(v) = self.rtol {
            cfg.rtol = v;
        }
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.cells {
            cfg.n_cells = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.tile_size {
            cfg.tile_size = v;
        }
        if let Some(v) = &self.layout {
            cfg.set("layout", v)?;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.timeout {
            cfg.timeout_seconds = v;
        }
        if let Some(v) = self.parallel_rows {
            cfg.parallel_rows = v;
        }
        if let Some(v) = &self.cache_dir {
            cfg.cache_dir = Some(v.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(cfg: &SweepConfig, text: &str) -> Result<(), HarnessError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    let flags = match &cli.command {
        Command::Sweep(f) | Command::Run(f) | Command::Reference(f) | Command::Bench(f) => f,
    };
    let cfg = flags.build_config()?;
    if flags.print_config {
        print!("{}", cfg.print());
        return Ok(());
    }
    match cli.command {
        Command::Sweep(_) => {
            let (_, csv) = run_sweep(&cfg)?;
            emit(&cfg, &csv)
        }
        Command::Run(_) => {
            let approach = cfg.approaches[0];
            let dt = cfg.dt_cfd_list[0];
            let eta = cfg.effective_etas()[0];
            let reference = sweep_reference(&cfg)?;
            let row = run_row(&cfg, approach, dt, eta, reference.as_ref());
            emit(&cfg, &format!("{CSV_HEADER}\n{}\n", row.to_csv_line()))
        }
        Command::Reference(_) => {
            let grid = union_grid(&cfg);
            let r = compute_reference(&cfg.model, cfg.t_end, &grid, cfg.cache_dir.as_deref())?;
            println!(
                "reference: model={} t_end={:e} samples={}",
                r.model,
                r.t_end,
                r.times.len()
            );
            Ok(())
        }
        Command::Bench(_) => {
            let sizes = [1usize, 4, 16, 64, 256];
            let table = run_bench(&cfg, &sizes, &cfg.approaches.clone())?;
            emit(&cfg, &table)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
