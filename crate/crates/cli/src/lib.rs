//! Batch front-end for the surveillance game solver: TOML configuration,
//! single solves, parameter sweeps, Monte Carlo runs and timing benchmarks,
//! all emitted as CSV.

pub mod bench;
pub mod config;
pub mod simulate;
pub mod solve;
pub mod sweep;
pub mod table;

pub use bench::{run_bench, BenchOutput, BenchRow, CellStatus};
pub use config::{ConfigError, ExperimentConfig};
pub use simulate::{run_simulate, SimulateError, SimulateOutput};
pub use solve::{run_solve, SolveOutput};
pub use sweep::{run_sweep, SweepOutput, SweepPoint};
pub use table::{fmt_float, Table, SCHEMA_VERSION};
