//! Game instance: action menus, sensing outcomes, chance probabilities and
//! aggregated payoffs of the multi-channel surveillance game.

use std::fmt;

use itertools::Itertools;

use crate::channel::{payoff_cell, ChannelParams, PayoffPair};
use crate::error::{ModelError, Result};

/// Hard ceiling on the channel count; outcomes are indexed by `u32` masks.
pub const MAX_CHANNELS: usize = 20;

/// A set of channels stored as a bitmask (bit `t` is channel `t + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct ChannelSet(pub u32);

impl ChannelSet {
    pub const EMPTY: Self = Self(0);

    pub fn from_channels(channels: impl IntoIterator<Item = usize>) -> Self {
        Self(channels.into_iter().fold(0, |acc, t| acc | (1 << t)))
    }

    pub fn contains(self, channel: usize) -> bool {
        self.0 & (1 << channel) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Zero-based channel indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |t| bits & (1 << t) != 0)
    }

    /// Label with one-based channel numbers joined by dots, `none` if empty.
    pub fn label(self) -> String {
        if self.is_empty() {
            "none".to_string()
        } else {
            self.iter().map(|t| (t + 1).to_string()).join(".")
        }
    }
}

impl fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.iter().map(|t| (t + 1).to_string()).join(","))
    }
}

/// Subsets of `universe` with size at most `max_size`, ordered by size and
/// then lexicographically by channel index. The empty set comes first.
pub fn subsets_by_size(universe: ChannelSet, max_size: usize) -> Vec<ChannelSet> {
    let members: Vec<usize> = universe.iter().collect();
    (0..=max_size.min(members.len()))
        .flat_map(|k| {
            members
                .iter()
                .copied()
                .combinations(k)
                .map(ChannelSet::from_channels)
                .collect::<Vec<_>>()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AttackAction {
    pub attacked: ChannelSet,
}

impl AttackAction {
    pub fn is_no_attack(&self) -> bool {
        self.attacked.is_empty()
    }
}

/// Joint sensing result; bit `t` set means channel `t + 1` is disallowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SensingOutcome {
    pub disallowed: ChannelSet,
}

impl SensingOutcome {
    pub fn from_index(k: usize) -> Self {
        Self {
            disallowed: ChannelSet(k as u32),
        }
    }

    pub fn index(&self) -> usize {
        self.disallowed.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DefendAction {
    pub outcome: SensingOutcome,
    pub monitored: ChannelSet,
}

/// Complete instance definition: capabilities plus per-channel parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub max_attack: usize,
    pub max_monitor: usize,
    pub channels: Vec<ChannelParams>,
}

impl GameConfig {
    pub fn new(max_attack: usize, max_monitor: usize, channels: Vec<ChannelParams>) -> Result<Self> {
        let cfg = Self {
            max_attack,
            max_monitor,
            channels,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same parameters on every channel except the PU presence probability.
    pub fn homogeneous(
        max_attack: usize,
        max_monitor: usize,
        pis: &[f64],
        p_d: f64,
        p_f: f64,
        econ: &crate::channel::RatioParams,
    ) -> Result<Self> {
        let channels = pis
            .iter()
            .map(|&pi| ChannelParams::from_operating_point(pi, p_d, p_f, econ))
            .collect::<Result<Vec<_>>>()?;
        Self::new(max_attack, max_monitor, channels)
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.channels.len();
        if n == 0 {
            return Err(ModelError::Domain("at least one channel is required".into()));
        }
        if n > MAX_CHANNELS {
            return Err(ModelError::SizeLimit {
                what: "n_channels",
                size: n as u128,
                limit: MAX_CHANNELS as u128,
            });
        }
        if self.max_attack == 0 || self.max_monitor == 0 {
            return Err(ModelError::Domain(
                "max_attack and max_monitor must be at least 1".into(),
            ));
        }
        for (t, ch) in self.channels.iter().enumerate() {
            ch.validate()
                .map_err(|e| ModelError::Domain(format!("channel {}: {e}", t + 1)))?;
        }
        Ok(())
    }

    /// Copy of the configuration with every payoff parameter scaled.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            channels: self.channels.iter().map(|c| c.scaled(factor)).collect(),
            ..self.clone()
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `K1 + 1`: number of attack actions including "no attack".
pub fn attack_action_count(n: usize, m: usize) -> u128 {
    (0..=m.min(n)).map(|i| binomial(n, i)).sum()
}

/// Number of defender actions available when `disallowed` channels are busy.
pub fn defend_action_count(disallowed: usize, l: usize) -> u128 {
    (0..=l.min(disallowed)).map(|m| binomial(disallowed, m)).sum()
}

/// `K4 = 1 + (K1 + 1) + (K1 + 1) 2^N`.
pub fn extended_attacker_sequence_count(n: usize, m: usize) -> u128 {
    let actions = attack_action_count(n, m);
    1 + actions + actions * (1u128 << n)
}

/// Sum over sensing outcomes of the defender's action-menu sizes.
pub fn defender_sequence_count(n: usize, l: usize) -> u128 {
    (0..=n)
        .map(|j| binomial(n, j) * defend_action_count(j, l))
        .sum()
}

/// Columns of the strategic form, i.e. the number of pure defender policies.
/// Returns `None` on overflow.
pub fn strategic_column_count(n: usize, l: usize) -> Option<u128> {
    let mut total: u128 = 1;
    for j in 0..=n {
        let menu = defend_action_count(j, l);
        for _ in 0..binomial(n, j) {
            total = total.checked_mul(menu)?;
        }
    }
    Some(total)
}

pub fn enumerate_attack_actions(config: &GameConfig) -> Vec<AttackAction> {
    let n = config.n_channels();
    subsets_by_size(ChannelSet((1u32 << n) - 1), config.max_attack)
        .into_iter()
        .map(|attacked| AttackAction { attacked })
        .collect()
}

pub fn enumerate_defend_actions(config: &GameConfig, outcome: SensingOutcome) -> Vec<DefendAction> {
    subsets_by_size(outcome.disallowed, config.max_monitor)
        .into_iter()
        .map(|monitored| DefendAction { outcome, monitored })
        .collect()
}

/// Probability of the sensing result `outcome` when the attacker plays `action`.
pub fn chance_probability(config: &GameConfig, action: &AttackAction, outcome: SensingOutcome) -> f64 {
    config
        .channels
        .iter()
        .enumerate()
        .map(|(t, ch)| {
            let q = ch.disallowed_probability(action.attacked.contains(t));
            if outcome.disallowed.contains(t) {
                q
            } else {
                1.0 - q
            }
        })
        .product()
}

/// Payoffs of an (attack, surveillance) profile summed over channels: the
/// attacker collects one cell per attacked channel, the defender one per
/// monitored channel.
pub fn aggregate_payoffs(config: &GameConfig, action: &AttackAction, defend: &DefendAction) -> Result<PayoffPair> {
    if !defend.monitored.is_subset_of(defend.outcome.disallowed) {
        return Err(ModelError::Contract(format!(
            "monitored set {} is not contained in disallowed set {}",
            defend.monitored, defend.outcome.disallowed
        )));
    }
    let mut total = PayoffPair::default();
    for (t, ch) in config.channels.iter().enumerate() {
        let attacked = action.attacked.contains(t);
        let monitored = defend.monitored.contains(t);
        let disallowed = defend.outcome.disallowed.contains(t);
        if attacked || monitored {
            let cell = payoff_cell(ch, attacked, disallowed, monitored)?;
            if attacked {
                total.attacker += cell.attacker;
            }
            if monitored {
                total.defender += cell.defender;
            }
        }
    }
    Ok(total)
}

/// Limits guarding the size of the expanded game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildLimits {
    pub max_attacker_sequences: u128,
    pub max_leaves: u128,
}

impl Default for BuildLimits {
    fn default() -> Self {
        Self {
            max_attacker_sequences: 2_000_000,
            max_leaves: 20_000_000,
        }
    }
}

/// Fully expanded game tree: attack menu, chance table and leaf payoffs.
#[derive(Debug, Clone)]
pub struct SurveillanceGame {
    config: GameConfig,
    attack_actions: Vec<AttackAction>,
    defend_menus: Vec<Vec<DefendAction>>,
    /// `chance[i][j]` = P(outcome j | attack action i)
    chance: Vec<Vec<f64>>,
    /// `payoffs[i][j][k]` for attack action i, outcome j, defender action k
    payoffs: Vec<Vec<Vec<PayoffPair>>>,
}

impl SurveillanceGame {
    pub fn new(config: GameConfig) -> Result<Self> {
        Self::with_limits(config, BuildLimits::default())
    }

    pub fn with_limits(config: GameConfig, limits: BuildLimits) -> Result<Self> {
        config.validate()?;
        let n = config.n_channels();
        let k4 = extended_attacker_sequence_count(n, config.max_attack);
        if k4 > limits.max_attacker_sequences {
            return Err(ModelError::SizeLimit {
                what: "attacker sequences",
                size: k4,
                limit: limits.max_attacker_sequences,
            });
        }
        let leaves = attack_action_count(n, config.max_attack) * defender_sequence_count(n, config.max_monitor);
        if leaves > limits.max_leaves {
            return Err(ModelError::SizeLimit {
                what: "leaves",
                size: leaves,
                limit: limits.max_leaves,
            });
        }

        let attack_actions = enumerate_attack_actions(&config);
        let defend_menus: Vec<Vec<DefendAction>> = (0..1usize << n)
            .map(|k| enumerate_defend_actions(&config, SensingOutcome::from_index(k)))
            .collect();
        let chance = attack_actions
            .iter()
            .map(|a| {
                (0..1usize << n)
                    .map(|k| chance_probability(&config, a, SensingOutcome::from_index(k)))
                    .collect()
            })
            .collect();
        let payoffs = attack_actions
            .iter()
            .map(|a| {
                defend_menus
                    .iter()
                    .map(|menu| {
                        menu.iter()
                            .map(|d| aggregate_payoffs(&config, a, d))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            attack_actions,
            defend_menus,
            chance,
            payoffs,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn n_channels(&self) -> usize {
        self.config.n_channels()
    }

    pub fn attack_actions(&self) -> &[AttackAction] {
        &self.attack_actions
    }

    pub fn n_outcomes(&self) -> usize {
        self.defend_menus.len()
    }

    pub fn defend_actions(&self, outcome: usize) -> &[DefendAction] {
        &self.defend_menus[outcome]
    }

    pub fn defend_menus(&self) -> &[Vec<DefendAction>] {
        &self.defend_menus
    }

    pub fn chance(&self, action: usize, outcome: usize) -> f64 {
        self.chance[action][outcome]
    }

    pub fn payoff(&self, action: usize, outcome: usize, defend: usize) -> PayoffPair {
        self.payoffs[action][outcome][defend]
    }

    /// Number of leaves (attack action, outcome, defender action).
    pub fn leaf_count(&self) -> usize {
        self.attack_actions.len() * self.defend_menus.iter().map(Vec::len).sum::<usize>()
    }

    /// Expected payoffs of one pure attack action against a defender whose
    /// distribution at outcome `j` is `defender(j)`.
    pub fn action_value(&self, action: usize, defender: &[Vec<f64>]) -> PayoffPair {
        let mut acc = PayoffPair::default();
        for (j, menu_probs) in defender.iter().enumerate() {
            let p = self.chance[action][j];
            if p == 0.0 {
                continue;
            }
            for (k, &dk) in menu_probs.iter().enumerate() {
                if dk != 0.0 {
                    let u = self.payoffs[action][j][k];
                    acc.attacker += p * dk * u.attacker;
                    acc.defender += p * dk * u.defender;
                }
            }
        }
        acc
    }

    /// Reach-weighted defender payoff of each action at `outcome` against the
    /// attacker mixture `attacker`: `sum_i attacker[i] p(j|i) U_D(i, j, k)`.
    pub fn defender_action_values(&self, outcome: usize, attacker: &[f64]) -> Vec<f64> {
        let menu = &self.defend_menus[outcome];
        let mut values = vec![0.0; menu.len()];
        for (i, &ai) in attacker.iter().enumerate() {
            let w = ai * self.chance[i][outcome];
            if w == 0.0 {
                continue;
            }
            for (k, v) in values.iter_mut().enumerate() {
                *v += w * self.payoffs[i][outcome][k].defender;
            }
        }
        values
    }

    /// Probability of reaching `outcome` under the attacker mixture.
    pub fn reach_probability(&self, outcome: usize, attacker: &[f64]) -> f64 {
        attacker
            .iter()
            .enumerate()
            .map(|(i, &a)| a * self.chance[i][outcome])
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RatioParams;
    use approx::assert_abs_diff_eq;

    fn config(pis: &[f64], m: usize, l: usize) -> GameConfig {
        let econ = RatioParams::new(0.2, 0.1, 3.0, 0.5).unwrap();
        GameConfig::homogeneous(m, l, pis, 0.9, 0.1, &econ).unwrap()
    }

    #[test]
    fn attack_menu_two_channels_single_attack() {
        let acts = enumerate_attack_actions(&config(&[0.2, 0.5], 1, 1));
        let sets: Vec<_> = acts.iter().map(|a| a.attacked).collect();
        assert_eq!(
            sets,
            vec![ChannelSet::EMPTY, ChannelSet::from_channels([0]), ChannelSet::from_channels([1])]
        );
    }

    #[test]
    fn attack_menu_counts() {
        assert_eq!(enumerate_attack_actions(&config(&[0.2; 4], 1, 1)).len(), 5);
        let full = enumerate_attack_actions(&config(&[0.2; 3], 3, 1));
        assert_eq!(full.len(), 8);
        let sizes: Vec<usize> = full.iter().map(|a| a.attacked.len()).collect();
        assert_eq!(sizes, vec![0, 1, 1, 1, 2, 2, 2, 3]);
        assert_eq!(full[4].attacked, ChannelSet::from_channels([0, 1]));
        assert_eq!(full[6].attacked, ChannelSet::from_channels([1, 2]));
    }

    #[test]
    fn defend_menu_counts() {
        let cfg = config(&[0.2, 0.5], 1, 1);
        let both = enumerate_defend_actions(&cfg, SensingOutcome::from_index(0b11));
        assert_eq!(
            both.iter().map(|d| d.monitored).collect::<Vec<_>>(),
            vec![ChannelSet::EMPTY, ChannelSet::from_channels([0]), ChannelSet::from_channels([1])]
        );
        assert_eq!(enumerate_defend_actions(&cfg, SensingOutcome::from_index(0)).len(), 1);
        let cfg3 = config(&[0.2, 0.5, 0.4], 1, 2);
        assert_eq!(enumerate_defend_actions(&cfg3, SensingOutcome::from_index(0b111)).len(), 7);
    }

    #[test]
    fn chance_product_rule() {
        let cfg = config(&[0.2, 0.5], 1, 1);
        let a1 = AttackAction {
            attacked: ChannelSet::from_channels([0]),
        };
        let p = chance_probability(&cfg, &a1, SensingOutcome::from_index(0b11));
        let expect = cfg.channels[0].p_disallowed_attack * cfg.channels[1].p_disallowed_no_attack;
        assert_abs_diff_eq!(p, expect, epsilon = 1e-15);

        let single = config(&[0.3], 1, 1);
        let atk = AttackAction {
            attacked: ChannelSet::from_channels([0]),
        };
        assert_abs_diff_eq!(
            chance_probability(&single, &atk, SensingOutcome::from_index(1)),
            single.channels[0].p_disallowed_attack
        );
    }

    #[test]
    fn chance_sums_to_one() {
        for m in 1..=3 {
            let cfg = config(&[0.1, 0.5, 0.75], m, 1);
            for a in enumerate_attack_actions(&cfg) {
                let total: f64 = (0..8)
                    .map(|k| chance_probability(&cfg, &a, SensingOutcome::from_index(k)))
                    .sum();
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn aggregate_payoff_examples() {
        let cfg = config(&[0.2, 0.2], 2, 2);
        let ch = cfg.channels[0];
        let none = AttackAction {
            attacked: ChannelSet::EMPTY,
        };
        let watch_first = DefendAction {
            outcome: SensingOutcome::from_index(0b01),
            monitored: ChannelSet::from_channels([0]),
        };
        let u = aggregate_payoffs(&cfg, &none, &watch_first).unwrap();
        assert_abs_diff_eq!(u.defender, -ch.cost_surveillance);
        assert_eq!(u.attacker, 0.0);

        let first = AttackAction {
            attacked: ChannelSet::from_channels([0]),
        };
        let idle = DefendAction {
            outcome: SensingOutcome::from_index(0b01),
            monitored: ChannelSet::EMPTY,
        };
        let u = aggregate_payoffs(&cfg, &first, &idle).unwrap();
        assert_abs_diff_eq!(u.attacker, -ch.cost_attack + ch.rho_attack * ch.gain_attack);
        assert_eq!(u.defender, 0.0);

        let both = AttackAction {
            attacked: ChannelSet::from_channels([0, 1]),
        };
        let watch = DefendAction {
            outcome: SensingOutcome::from_index(0b11),
            monitored: ChannelSet::from_channels([0]),
        };
        let u = aggregate_payoffs(&cfg, &both, &watch).unwrap();
        let caught = -ch.cost_attack - ch.rho_attack * ch.penalty;
        let free = -ch.cost_attack + ch.rho_attack * ch.gain_attack;
        assert_abs_diff_eq!(u.attacker, caught + free, epsilon = 1e-12);
        assert_abs_diff_eq!(u.defender, -ch.cost_surveillance + ch.rho_attack * ch.gain_surveillance);
    }

    #[test]
    fn aggregate_rejects_monitoring_allowed() {
        let cfg = config(&[0.2, 0.2], 1, 1);
        let bad = DefendAction {
            outcome: SensingOutcome::from_index(0b01),
            monitored: ChannelSet::from_channels([1]),
        };
        let none = AttackAction {
            attacked: ChannelSet::EMPTY,
        };
        assert!(matches!(aggregate_payoffs(&cfg, &none, &bad), Err(ModelError::Contract(_))));
    }

    #[test]
    fn counting_formulas_match_enumeration() {
        for n in 1..=5 {
            for m in 1..=2 {
                for l in 1..=3 {
                    let cfg = config(&vec![0.3; n], m, l);
                    let acts = enumerate_attack_actions(&cfg).len() as u128;
                    assert_eq!(acts, attack_action_count(n, m));
                    let k4 = 1 + acts + acts * (1u128 << n);
                    assert_eq!(k4, extended_attacker_sequence_count(n, m));
                    let defs: u128 = (0..1usize << n)
                        .map(|k| enumerate_defend_actions(&cfg, SensingOutcome::from_index(k)).len() as u128)
                        .sum();
                    assert_eq!(defs, defender_sequence_count(n, l));
                }
            }
        }
        assert_eq!(defender_sequence_count(4, 1), 48);
        assert_eq!(extended_attacker_sequence_count(4, 1), 86);
        assert_eq!(strategic_column_count(2, 1), Some(12));
        assert_eq!(strategic_column_count(4, 1), Some(5 * 12u128.pow(6)));
    }

    #[test]
    fn size_guard() {
        let cfg = config(&[0.3; 6], 6, 6);
        let tight = BuildLimits {
            max_attacker_sequences: 100,
            max_leaves: 1_000_000,
        };
        assert!(matches!(
            SurveillanceGame::with_limits(cfg, tight),
            Err(ModelError::SizeLimit { .. })
        ));
    }

    #[test]
    fn channel_set_labels() {
        assert_eq!(ChannelSet::EMPTY.label(), "none");
        assert_eq!(ChannelSet::from_channels([0, 2]).label(), "1.3");
        assert_eq!(ChannelSet::from_channels([1]).to_string(), "{2}");
    }
}
