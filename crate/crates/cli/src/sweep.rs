//! Grid sweeps over network demand and penalty factor.

use rayon::prelude::*;
use survgame::baselines::{evaluate_defender_strategy, random_strategy, uniform_surveillance_strategy, AttackerResponse};
use survgame::equilibrium::solve_game;
use survgame::{EquilibriumResult, ModelError, SolveError, SurveillanceGame};

use crate::config::{ConfigError, ExperimentConfig};
use crate::solve::{classify, equilibrium_columns, STATUS_FAILED};
use crate::table::{Record, Table, SCHEMA_VERSION};

/// Defender payoffs of the comparison strategies at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    /// Attacker best-responds to each strategy.
    pub uniform: f64,
    pub random: f64,
    /// Attacker keeps its equilibrium strategy.
    pub uniform_fixed: f64,
    pub random_fixed: f64,
}

#[derive(Debug)]
pub struct SweepPoint {
    pub k_c: f64,
    pub k_b: f64,
    pub game: Option<SurveillanceGame>,
    pub outcome: Result<EquilibriumResult, SolveError>,
    pub comparison: Option<Comparison>,
}

impl SweepPoint {
    pub fn verified(&self) -> bool {
        self.outcome.is_ok()
    }

    /// Probability that each channel is attacked.
    pub fn attack_marginals(&self) -> Option<Vec<f64>> {
        let game = self.game.as_ref()?;
        self.outcome.as_ref().ok().map(|r| r.attacker.channel_marginals(game))
    }

    /// `[outcome][channel]` monitoring probabilities.
    pub fn monitor_marginals(&self) -> Option<Vec<Vec<f64>>> {
        let game = self.game.as_ref()?;
        self.outcome.as_ref().ok().map(|r| r.defender.channel_marginals(game))
    }
}

fn compare(game: &SurveillanceGame, result: &EquilibriumResult) -> Result<Comparison, ModelError> {
    let uniform = uniform_surveillance_strategy(game);
    let random = random_strategy(game);
    let br = |d| evaluate_defender_strategy(game, d, AttackerResponse::BestResponse { reference: None });
    let fixed = |d| evaluate_defender_strategy(game, d, AttackerResponse::Fixed(&result.attacker));
    Ok(Comparison {
        uniform: br(&uniform)?.omega.defender,
        random: br(&random)?.omega.defender,
        uniform_fixed: fixed(&uniform)?.omega.defender,
        random_fixed: fixed(&random)?.omega.defender,
    })
}

fn solve_point(cfg: &ExperimentConfig, k_c: f64, k_b: f64) -> SweepPoint {
    let game = cfg
        .game_with(&cfg.game.pi, k_c, k_b)
        .map_err(|e| SolveError::Model(ModelError::Domain(e.to_string())))
        .and_then(|g| SurveillanceGame::new(g).map_err(SolveError::Model));
    let game = match game {
        Ok(g) => g,
        Err(e) => {
            return SweepPoint {
                k_c,
                k_b,
                game: None,
                outcome: Err(e),
                comparison: None,
            }
        }
    };
    let outcome = solve_game(&game, &cfg.solve_options());
    let comparison = match &outcome {
        Ok(r) => compare(&game, r).ok(),
        Err(SolveError::Verification(r)) => compare(&game, r).ok(),
        Err(_) => None,
    };
    SweepPoint {
        k_c,
        k_b,
        game: Some(game),
        outcome,
        comparison,
    }
}

#[derive(Debug)]
pub struct SweepOutput {
    pub points: Vec<SweepPoint>,
}

impl SweepOutput {
    pub fn all_verified(&self) -> bool {
        self.points.iter().all(SweepPoint::verified)
    }

    pub fn table(&self) -> Table {
        let mut table: Option<Table> = None;
        let template = self.points.iter().find_map(|p| p.game.as_ref());
        for p in &self.points {
            let (status, message, result) = classify(&p.outcome);
            let mut rec = Record::default();
            rec.int("schema", SCHEMA_VERSION)
                .float("k_c", p.k_c)
                .float("k_b", p.k_b)
                .text("status", status)
                .text("message", message);
            equilibrium_columns(&mut rec, result);
            if let Some(game) = template {
                let att = result.map(|r| r.attacker.channel_marginals(game));
                let mon = result.map(|r| r.defender.channel_marginals(game));
                for t in 0..game.n_channels() {
                    let name = format!("attack_ch{}", t + 1);
                    match &att {
                        Some(a) => rec.float(name, a[t]),
                        None => rec.blank(name),
                    };
                }
                for (j, menu) in game.defend_menus().iter().enumerate() {
                    let outcome = menu[0].outcome.disallowed;
                    for t in outcome.iter() {
                        let name = format!("monitor_C{}_ch{}", outcome.label(), t + 1);
                        match &mon {
                            Some(m) => rec.float(name, m[j][t]),
                            None => rec.blank(name),
                        };
                    }
                }
            }
            let omega_d = result.map(|r| r.omega_defender);
            match (p.comparison, omega_d) {
                (Some(c), Some(d)) => rec
                    .float("omega_defender_uniform", c.uniform)
                    .float("omega_defender_random", c.random)
                    .float("advantage_uniform", d - c.uniform)
                    .float("advantage_random", d - c.random)
                    .float("omega_defender_uniform_fixed", c.uniform_fixed)
                    .float("omega_defender_random_fixed", c.random_fixed),
                _ => rec
                    .blank("omega_defender_uniform")
                    .blank("omega_defender_random")
                    .blank("advantage_uniform")
                    .blank("advantage_random")
                    .blank("omega_defender_uniform_fixed")
                    .blank("omega_defender_random_fixed"),
            };
            let t = table.get_or_insert_with(|| Table::new(rec.names.clone()));
            t.push(rec.values);
        }
        table.unwrap_or_default()
    }
}

/// Solves every grid point on a pool of `workers` threads (0 = all cores).
/// Rows keep grid order whatever the completion order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput, ConfigError> {
    let grid = cfg.sweep_points()?;
    cfg.game_config()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.workers)
        .build()
        .map_err(|e| ConfigError::Invalid {
            key: "run.workers".into(),
            message: e.to_string(),
        })?;
    let points = pool.install(|| grid.par_iter().map(|&(k_c, k_b)| solve_point(cfg, k_c, k_b)).collect());
    Ok(SweepOutput { points })
}

/// Rows whose solve failed outright.
pub fn failed_rows(table: &Table) -> usize {
    let col = table.column("status").expect("status column");
    table.rows.iter().filter(|r| r[col] == STATUS_FAILED).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(workers: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::from_toml(
            "[sweep]\nk_c = [0.4, 10.0]\nk_b = { start = 0.01, stop = 1.0, steps = 6 }\n",
        )
        .unwrap();
        cfg.run.workers = workers;
        cfg
    }

    #[test]
    fn order_independent_of_worker_count() {
        let one = run_sweep(&reference(1)).unwrap().table().to_csv_string();
        let four = run_sweep(&reference(4)).unwrap().table().to_csv_string();
        assert_eq!(one, four);
    }

    #[test]
    fn rows_follow_grid_order() {
        let out = run_sweep(&reference(0)).unwrap();
        assert!(out.all_verified());
        let t = out.table();
        assert_eq!(t.rows.len(), 12);
        let k_c = t.column("k_c").unwrap();
        assert_eq!(t.rows[0][k_c], "0.4");
        assert_eq!(t.rows[6][k_c], "10");
        assert_eq!(failed_rows(&t), 0);
    }

    #[test]
    fn low_demand_row_never_monitors() {
        let out = run_sweep(&reference(0)).unwrap();
        let first = &out.points[0];
        assert!(first.monitor_marginals().unwrap().iter().flatten().all(|&m| m.abs() < 1e-9));
        let att = first.attack_marginals().unwrap();
        assert!((att[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equilibrium_beats_uniform_monitoring() {
        for p in run_sweep(&reference(0)).unwrap().points {
            let d = p.outcome.as_ref().unwrap().omega_defender;
            assert!(d >= p.comparison.unwrap().uniform - 1e-7, "k_c {} k_b {}", p.k_c, p.k_b);
        }
    }
}
