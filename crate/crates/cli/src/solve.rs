//! Single equilibrium solve.

use survgame::equilibrium::solve_game;
use survgame::{AttackerStrategy, DefenderStrategy, EquilibriumResult, SolveError, SurveillanceGame};

use crate::config::{ConfigError, ExperimentConfig};
use crate::table::{Record, Table, SCHEMA_VERSION};

pub const STATUS_OK: &str = "ok";
pub const STATUS_UNVERIFIED: &str = "unverified";
pub const STATUS_FAILED: &str = "failed";

/// Attack probabilities per action, then monitoring probabilities per
/// sensing outcome and defend action.
pub(crate) fn strategy_columns(rec: &mut Record, game: &SurveillanceGame, strategies: Option<(&AttackerStrategy, &DefenderStrategy)>) {
    for (i, a) in game.attack_actions().iter().enumerate() {
        let name = format!("attack_{}", a.attacked.label());
        match strategies {
            Some((att, _)) => rec.float(name, att.probs[i]),
            None => rec.blank(name),
        };
    }
    for (j, menu) in game.defend_menus().iter().enumerate() {
        for (k, d) in menu.iter().enumerate() {
            let name = format!("defend_C{}_S{}", d.outcome.disallowed.label(), d.monitored.label());
            match strategies {
                Some((_, def)) => rec.float(name, def.probs[j][k]),
                None => rec.blank(name),
            };
        }
    }
}

pub(crate) fn equilibrium_columns(rec: &mut Record, result: Option<&EquilibriumResult>) {
    match result {
        Some(r) => rec
            .float("omega_attacker", r.omega_attacker)
            .float("omega_defender", r.omega_defender)
            .float("gap_attacker", r.best_response_gap_attacker)
            .float("gap_defender", r.best_response_gap_defender)
            .float("lcp_residual", r.lcp_residual.max())
            .int("pivots", r.pivots)
            .int("seq_rows", r.dims.0)
            .int("seq_cols", r.dims.1),
        None => rec
            .blank("omega_attacker")
            .blank("omega_defender")
            .blank("gap_attacker")
            .blank("gap_defender")
            .blank("lcp_residual")
            .blank("pivots")
            .blank("seq_rows")
            .blank("seq_cols"),
    };
}

/// Status label, diagnostic message and the result if one was produced.
pub(crate) fn classify(outcome: &Result<EquilibriumResult, SolveError>) -> (&'static str, String, Option<&EquilibriumResult>) {
    match outcome {
        Ok(r) => (STATUS_OK, String::new(), Some(r)),
        Err(SolveError::Verification(r)) => (STATUS_UNVERIFIED, outcome.as_ref().unwrap_err().to_string(), Some(r)),
        Err(e) => (STATUS_FAILED, e.to_string(), None),
    }
}

#[derive(Debug)]
pub struct SolveOutput {
    pub game: SurveillanceGame,
    pub outcome: Result<EquilibriumResult, SolveError>,
}

impl SolveOutput {
    pub fn verified(&self) -> bool {
        self.outcome.is_ok()
    }

    pub fn table(&self, cfg: &ExperimentConfig) -> Table {
        let (status, message, result) = classify(&self.outcome);
        let game_cfg = self.game.config();
        let mut rec = Record::default();
        rec.int("schema", SCHEMA_VERSION)
            .int("n_channels", game_cfg.n_channels())
            .int("max_attack", game_cfg.max_attack)
            .int("max_monitor", game_cfg.max_monitor)
            .float("k_a", cfg.economics.k_a)
            .float("k_s", cfg.economics.k_s)
            .float("k_c", cfg.economics.k_c)
            .float("k_b", cfg.economics.k_b)
            .text("status", status)
            .text("message", message);
        equilibrium_columns(&mut rec, result);
        strategy_columns(&mut rec, &self.game, result.map(|r| (&r.attacker, &r.defender)));
        let mut table = Table::new(rec.names);
        table.push(rec.values);
        table
    }
}

pub fn run_solve(cfg: &ExperimentConfig) -> Result<SolveOutput, ConfigError> {
    let game = SurveillanceGame::new(cfg.game_config()?).map_err(|e| ConfigError::Invalid {
        key: "game".into(),
        message: e.to_string(),
    })?;
    let outcome = solve_game(&game, &cfg.solve_options());
    Ok(SolveOutput { game, outcome })
}
