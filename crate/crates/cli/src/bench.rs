//! Wall-clock comparison of the sequence-form and strategic-form solvers.

use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use survgame::baselines::{build_normal_form, support_enumeration_ne, SupportEnumerationOptions};
use survgame::equilibrium::solve_game;
use survgame::game::{attack_action_count, strategic_column_count};
use survgame::{GameConfig, ModelError, SolveError, SolveOptions, SurveillanceGame};

use crate::config::{ConfigError, ExperimentConfig};
use crate::table::{fmt_float, Record, Table, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    /// Sequence form solved but failed best-response verification.
    Unverified,
    BudgetExceeded,
    Timeout,
    Failed(String),
}

impl CellStatus {
    pub fn label(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Unverified => "unverified",
            CellStatus::BudgetExceeded => "budget_exceeded",
            CellStatus::Timeout => "timeout",
            CellStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n_channels: usize,
    pub seq_rows: usize,
    pub seq_cols: usize,
    pub seq_pivots: Option<usize>,
    pub seq_status: CellStatus,
    /// Median wall time in seconds.
    pub seq_seconds: Option<f64>,
    pub strat_rows: u128,
    /// `None` when the column count overflows.
    pub strat_cols: Option<u128>,
    pub strat_status: CellStatus,
    pub strat_seconds: Option<f64>,
    pub strat_equilibria: Option<usize>,
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs `f` on its own thread. On timeout the thread is detached and left to
/// finish in the background.
fn with_timeout<T: Send + 'static>(timeout: Duration, f: impl FnOnce() -> T + Send + 'static) -> Option<(T, Duration)> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let start = Instant::now();
        let out = f();
        let _ = tx.send((out, start.elapsed()));
    });
    rx.recv_timeout(timeout).ok()
}

/// Presence probabilities spread evenly over [0.2, 0.5].
pub fn bench_pis(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.2];
    }
    (0..n).map(|t| 0.2 + 0.3 * t as f64 / (n - 1) as f64).collect()
}

/// Repeats `f` and returns the last value with the median time, or the
/// status that stopped the repetitions.
fn repeat<T: Send + 'static>(
    repeats: usize,
    timeout: Duration,
    f: impl Fn() -> T + Send + Sync + Clone + 'static,
) -> Result<(T, f64), CellStatus> {
    let mut times = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let g = f.clone();
        match with_timeout(timeout, g) {
            Some((out, dt)) => {
                times.push(dt.as_secs_f64());
                last = Some(out);
            }
            None => return Err(CellStatus::Timeout),
        }
    }
    Ok((last.expect("at least one repeat"), median(&mut times)))
}

fn bench_sequence(config: &GameConfig, options: SolveOptions, repeats: usize, timeout: Duration) -> (CellStatus, Option<f64>, Option<usize>) {
    let cfg = config.clone();
    let run = move || -> Result<usize, (CellStatus, Option<usize>)> {
        let game = SurveillanceGame::new(cfg.clone()).map_err(|e| (CellStatus::Failed(e.to_string()), None))?;
        match solve_game(&game, &options) {
            Ok(r) => Ok(r.pivots),
            Err(SolveError::Verification(r)) => Err((CellStatus::Unverified, Some(r.pivots))),
            Err(e) => Err((CellStatus::Failed(e.to_string()), None)),
        }
    };
    match repeat(repeats, timeout, run) {
        Ok((Ok(pivots), secs)) => (CellStatus::Ok, Some(secs), Some(pivots)),
        Ok((Err((status, pivots)), secs)) => (status, Some(secs), pivots),
        Err(status) => (status, None, None),
    }
}

fn bench_strategic(
    config: &GameConfig,
    budget: u128,
    options: SupportEnumerationOptions,
    repeats: usize,
    timeout: Duration,
) -> (CellStatus, Option<f64>, Option<usize>) {
    let cfg = config.clone();
    let run = move || -> Result<usize, ModelError> {
        let game = SurveillanceGame::new(cfg.clone())?;
        let nf = build_normal_form(&game, budget)?;
        Ok(support_enumeration_ne(&nf, &options)?.len())
    };
    match repeat(repeats, timeout, run) {
        Ok((Ok(found), secs)) => (CellStatus::Ok, Some(secs), Some(found)),
        Ok((Err(ModelError::SizeLimit { .. }), _)) => (CellStatus::BudgetExceeded, None, None),
        Ok((Err(e), _)) => (CellStatus::Failed(e.to_string()), None, None),
        Err(status) => (status, None, None),
    }
}

#[derive(Debug)]
pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    pub cell_budget: u64,
    pub max_support: usize,
    pub repeats: usize,
}

impl BenchOutput {
    pub fn all_verified(&self) -> bool {
        self.rows.iter().all(|r| r.seq_status == CellStatus::Ok)
    }

    pub fn row(&self, n: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.n_channels == n)
    }

    pub fn table(&self) -> Table {
        let opt_f = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
        let opt_i = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
        let mut table: Option<Table> = None;
        for r in &self.rows {
            let cols = r.strat_cols.map(|c| c.to_string()).unwrap_or_else(|| "overflow".into());
            let cells = r
                .strat_cols
                .and_then(|c| c.checked_mul(r.strat_rows))
                .map(|c| c.to_string())
                .unwrap_or_else(|| "overflow".into());
            let message = match (&r.seq_status, &r.strat_status) {
                (CellStatus::Failed(m), _) | (_, CellStatus::Failed(m)) => m.clone(),
                _ => String::new(),
            };
            let mut rec = Record::default();
            rec.int("schema", SCHEMA_VERSION)
                .int("n_channels", r.n_channels)
                .int("repeats", self.repeats)
                .int("seq_rows", r.seq_rows)
                .int("seq_cols", r.seq_cols)
                .text("seq_status", r.seq_status.label())
                .text("seq_seconds", opt_f(r.seq_seconds))
                .text("seq_pivots", opt_i(r.seq_pivots))
                .int("strat_rows", r.strat_rows)
                .text("strat_cols", cols)
                .text("strat_cells", cells)
                .int("cell_budget", self.cell_budget)
                .int("max_support", self.max_support)
                .text("strat_status", r.strat_status.label())
                .text("strat_seconds", opt_f(r.strat_seconds))
                .text("strat_equilibria", opt_i(r.strat_equilibria))
                .text("message", message);
            let t = table.get_or_insert_with(|| Table::new(rec.names.clone()));
            t.push(rec.values);
        }
        table.unwrap_or_default()
    }
}

pub fn run_bench(cfg: &ExperimentConfig) -> Result<BenchOutput, ConfigError> {
    let b = &cfg.bench;
    let timeout = Duration::from_secs_f64(b.timeout_secs);
    let support = SupportEnumerationOptions {
        max_support: b.max_support,
        ..SupportEnumerationOptions::default()
    };
    let mut rows = Vec::with_capacity(b.n_values.len());
    for &n in &b.n_values {
        let config = cfg.game_with(&bench_pis(n), cfg.economics.k_c, cfg.economics.k_b)?;
        let game = SurveillanceGame::new(config.clone()).map_err(|e| ConfigError::Invalid {
            key: "bench.n_values".into(),
            message: format!("N = {n}: {e}"),
        })?;
        let sf = survgame::SequenceFormGame::build(&game, cfg.solve_options().representation);
        let (seq_rows, seq_cols) = sf.payoff_dims();
        drop(sf);
        let (seq_status, seq_seconds, seq_pivots) = bench_sequence(&config, cfg.solve_options(), b.repeats, timeout);
        let strat_rows = attack_action_count(n, config.max_attack);
        let strat_cols = strategic_column_count(n, config.max_monitor);
        let (strat_status, strat_seconds, strat_equilibria) =
            bench_strategic(&config, b.cell_budget as u128, support, b.repeats, timeout);
        rows.push(BenchRow {
            n_channels: n,
            seq_rows,
            seq_cols,
            seq_pivots,
            seq_status,
            seq_seconds,
            strat_rows,
            strat_cols,
            strat_status,
            strat_seconds,
            strat_equilibria,
        });
    }
    Ok(BenchOutput {
        rows,
        cell_budget: b.cell_budget,
        max_support: b.max_support,
        repeats: b.repeats,
    })
}
