use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use survgame::{SequenceFormGame, SurveillanceGame};
use survgame_cli::{run_bench, run_simulate, run_solve, run_sweep, ExperimentConfig, Table};

/// Channel surveillance game solver.
#[derive(Parser, Debug)]
#[command(name = "survgame", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance and print its equilibrium.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Also write the sequence-form matrices to this file.
        #[arg(long, value_name = "PATH")]
        dump_matrices: Option<PathBuf>,
    },
    /// Solve every point of the configured k_b/k_c grid.
    Sweep(Common),
    /// Solve, then compare against a Monte Carlo run.
    Simulate(Common),
    /// Time sequence-form against strategic-form solving.
    Bench(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration; defaults describe the two-channel reference instance.
    #[arg(short, long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// CSV destination; standard output when omitted.
    #[arg(short, long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides run.tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Overrides run.workers (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides bench.cell_budget.
    #[arg(long, value_name = "CELLS")]
    cell_budget: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| e.to_string())?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.run.seed = s;
        }
        if let Some(t) = self.tolerance {
            cfg.run.tolerance = t;
        }
        if let Some(w) = self.workers {
            cfg.run.workers = w;
        }
        if let Some(b) = self.cell_budget {
            cfg.bench.cell_budget = b;
        }
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    fn emit(&self, table: &Table) -> Result<(), String> {
        let result = match &self.output {
            Some(path) => File::create(path)
                .map_err(|e| format!("cannot create {}: {e}", path.display()))
                .and_then(|f| table.write_csv(BufWriter::new(f)).map_err(|e| e.to_string())),
            None => table.write_csv(io::stdout().lock()).map_err(|e| e.to_string()),
        };
        result
    }
}

fn dump_matrices(cfg: &ExperimentConfig, path: &PathBuf) -> Result<(), String> {
    let game = cfg
        .game_config()
        .map_err(|e| e.to_string())
        .and_then(|g| SurveillanceGame::new(g).map_err(|e| e.to_string()))?;
    let sf = SequenceFormGame::build(&game, cfg.solve_options().representation);
    let mut out = BufWriter::new(File::create(path).map_err(|e| format!("cannot create {}: {e}", path.display()))?);
    sf.write_matrices(&mut out).and_then(|_| out.flush()).map_err(|e| e.to_string())
}

/// Exit 0 when every equilibrium verified, 1 otherwise, 2 on usage errors.
fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Solve { common, dump_matrices: dump } => {
            let cfg = common.load()?;
            if let Some(path) = &dump {
                dump_matrices(&cfg, path)?;
            }
            let out = run_solve(&cfg).map_err(|e| e.to_string())?;
            if let Err(e) = &out.outcome {
                eprintln!("solve: {e}");
            }
            common.emit(&out.table(&cfg))?;
            Ok(out.verified())
        }
        Command::Sweep(common) => {
            let cfg = common.load()?;
            let out = run_sweep(&cfg).map_err(|e| e.to_string())?;
            for p in out.points.iter().filter(|p| !p.verified()) {
                eprintln!("sweep k_c={} k_b={}: {}", p.k_c, p.k_b, p.outcome.as_ref().unwrap_err());
            }
            common.emit(&out.table())?;
            Ok(out.all_verified())
        }
        Command::Simulate(common) => {
            let cfg = common.load()?;
            let out = run_simulate(&cfg).map_err(|e| e.to_string())?;
            common.emit(&out.table())?;
            Ok(out.verified)
        }
        Command::Bench(common) => {
            let cfg = common.load()?;
            let out = run_bench(&cfg).map_err(|e| e.to_string())?;
            common.emit(&out.table())?;
            Ok(out.all_verified())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
