//! Behavioral strategies.
//!
//! The attacker moves once at the root, so its behavioral strategy is a single
//! distribution over attack actions. The defender has one information set per
//! sensing outcome and holds one distribution per outcome.

use crate::error::{ModelError, Result};
use crate::game::SurveillanceGame;

pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

fn check_distribution(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(ModelError::Dimension(format!("{what}: empty distribution")));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < -DISTRIBUTION_TOLERANCE) {
        return Err(ModelError::Domain(format!("{what}: negative or non-finite probability")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(ModelError::Domain(format!("{what}: probabilities sum to {total}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackerStrategy {
    /// Indexed like [`SurveillanceGame::attack_actions`].
    pub probs: Vec<f64>,
}

impl AttackerStrategy {
    pub fn pure(game: &SurveillanceGame, action: usize) -> Self {
        let mut probs = vec![0.0; game.attack_actions().len()];
        probs[action] = 1.0;
        Self { probs }
    }

    pub fn validate(&self, game: &SurveillanceGame) -> Result<()> {
        if self.probs.len() != game.attack_actions().len() {
            return Err(ModelError::Dimension(format!(
                "attacker strategy has {} entries, game has {} actions",
                self.probs.len(),
                game.attack_actions().len()
            )));
        }
        check_distribution(&self.probs, "attacker")
    }

    /// Probability that each channel is attacked.
    pub fn channel_marginals(&self, game: &SurveillanceGame) -> Vec<f64> {
        let mut out = vec![0.0; game.n_channels()];
        for (a, p) in game.attack_actions().iter().zip(&self.probs) {
            for t in a.attacked.iter() {
                out[t] += p;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefenderStrategy {
    /// `probs[j][k]`: probability of the k-th action of outcome j's menu.
    pub probs: Vec<Vec<f64>>,
}

impl DefenderStrategy {
    /// Never monitor anything.
    pub fn idle(game: &SurveillanceGame) -> Self {
        Self {
            probs: game
                .defend_menus()
                .iter()
                .map(|menu| {
                    let mut d = vec![0.0; menu.len()];
                    d[0] = 1.0;
                    d
                })
                .collect(),
        }
    }

    pub fn validate(&self, game: &SurveillanceGame) -> Result<()> {
        if self.probs.len() != game.n_outcomes() {
            return Err(ModelError::Dimension(format!(
                "defender strategy covers {} outcomes, game has {}",
                self.probs.len(),
                game.n_outcomes()
            )));
        }
        for (j, (d, menu)) in self.probs.iter().zip(game.defend_menus()).enumerate() {
            if d.len() != menu.len() {
                return Err(ModelError::Dimension(format!(
                    "outcome {j}: {} probabilities for {} actions",
                    d.len(),
                    menu.len()
                )));
            }
            check_distribution(d, &format!("defender outcome {j}"))?;
        }
        Ok(())
    }

    /// `result[j][t]`: probability that channel t is monitored at outcome j.
    pub fn channel_marginals(&self, game: &SurveillanceGame) -> Vec<Vec<f64>> {
        self.probs
            .iter()
            .zip(game.defend_menus())
            .map(|(d, menu)| {
                let mut m = vec![0.0; game.n_channels()];
                for (p, act) in d.iter().zip(menu) {
                    for t in act.monitored.iter() {
                        m[t] += p;
                    }
                }
                m
            })
            .collect()
    }
}
