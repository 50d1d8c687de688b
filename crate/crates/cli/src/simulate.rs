//! Monte Carlo check of a solved equilibrium.

use survgame::equilibrium::solve_game;
use survgame::simulator::{analytic_capture_rate, simulate, SimulationReport};
use survgame::{EquilibriumResult, SolveError, SurveillanceGame};

use crate::config::{ConfigError, ExperimentConfig};
use crate::solve::{classify, STATUS_OK};
use crate::table::{Record, Table, SCHEMA_VERSION};

/// Standardized difference; zero when the empirical mean is exact.
pub fn z_score(empirical: f64, analytic: f64, se: f64) -> f64 {
    let diff = empirical - analytic;
    if se.is_infinite() {
        0.0
    } else if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 * (1.0 + analytic.abs()) {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

#[derive(Debug)]
pub struct SimulateOutput {
    pub game: SurveillanceGame,
    pub equilibrium: EquilibriumResult,
    pub verified: bool,
    pub analytic_capture_rate: f64,
    pub report: SimulationReport,
}

impl SimulateOutput {
    pub fn z_attacker(&self) -> f64 {
        z_score(self.report.mean_attacker_payoff, self.equilibrium.omega_attacker, self.report.se_attacker_payoff)
    }

    pub fn z_defender(&self) -> f64 {
        z_score(self.report.mean_defender_payoff, self.equilibrium.omega_defender, self.report.se_defender_payoff)
    }

    pub fn z_capture(&self) -> f64 {
        z_score(self.report.capture_rate, self.analytic_capture_rate, self.report.capture_rate_se)
    }

    pub fn table(&self) -> Table {
        let r = &self.report;
        let mut rec = Record::default();
        rec.int("schema", SCHEMA_VERSION)
            .int("n_frames", r.n_frames)
            .int("seed", r.seed)
            .text("status", if self.verified { STATUS_OK } else { "unverified" })
            .float("analytic_attacker", self.equilibrium.omega_attacker)
            .float("analytic_defender", self.equilibrium.omega_defender)
            .float("mean_attacker", r.mean_attacker_payoff)
            .float("mean_defender", r.mean_defender_payoff)
            .float("se_attacker", r.se_attacker_payoff)
            .float("se_defender", r.se_defender_payoff)
            .float("z_attacker", self.z_attacker())
            .float("z_defender", self.z_defender())
            .float("analytic_capture_rate", self.analytic_capture_rate)
            .float("capture_rate", r.capture_rate)
            .float("se_capture_rate", r.capture_rate_se)
            .float("z_capture_rate", self.z_capture());
        for (t, c) in r.channels.iter().enumerate() {
            rec.int(format!("attacked_frames_ch{}", t + 1), c.attacked_frames)
                .int(format!("attacked_disallowed_ch{}", t + 1), c.attacked_disallowed)
                .int(format!("unattacked_frames_ch{}", t + 1), c.unattacked_frames)
                .int(format!("unattacked_disallowed_ch{}", t + 1), c.unattacked_disallowed);
        }
        let mut table = Table::new(rec.names);
        table.push(rec.values);
        table
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solve failed: {0}")]
    Solve(SolveError),
    #[error("simulation failed: {0}")]
    Simulation(survgame::ModelError),
}

/// Solves the configured game, then plays `run.n_frames` frames with
/// `run.seed`. An unverified equilibrium is still simulated and flagged.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulateOutput, SimulateError> {
    let game = SurveillanceGame::new(cfg.game_config()?).map_err(|e| {
        SimulateError::Config(ConfigError::Invalid {
            key: "game".into(),
            message: e.to_string(),
        })
    })?;
    let outcome = solve_game(&game, &cfg.solve_options());
    let verified = outcome.is_ok();
    if classify(&outcome).2.is_none() {
        return Err(SimulateError::Solve(outcome.unwrap_err()));
    }
    let equilibrium = match outcome {
        Ok(r) => r,
        Err(SolveError::Verification(r)) => *r,
        Err(_) => unreachable!("classified above"),
    };
    let report = simulate(&game, &equilibrium.attacker, &equilibrium.defender, cfg.run.n_frames, cfg.run.seed)
        .map_err(SimulateError::Simulation)?;
    let analytic_capture_rate = analytic_capture_rate(&game, &equilibrium.attacker, &equilibrium.defender);
    Ok(SimulateOutput {
        game,
        equilibrium,
        verified,
        analytic_capture_rate,
        report,
    })
}
