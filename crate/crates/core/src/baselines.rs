//! Oracles and comparison strategies.
//!
//! * the strategic (normal) form, with a bimatrix support-enumeration solver;
//! * the closed-form equilibrium of the one-channel game;
//! * the uniform and random defender strategies, and their evaluation
//!   against an attacker that best-responds.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::channel::{ChannelParams, PayoffPair};
use crate::equilibrium::expected_payoffs;
use crate::error::{ModelError, Result};
use crate::game::{binomial, ChannelSet, GameConfig, SensingOutcome, SurveillanceGame};
use crate::strategy::{AttackerStrategy, DefenderStrategy};

pub const DEFAULT_CELL_BUDGET: u128 = 1_000_000;

/// Expected-payoff bimatrix over attack actions × pure defender policies.
#[derive(Debug, Clone)]
pub struct NormalFormGame {
    /// Menu size per sensing outcome; policy indices are mixed-radix numbers
    /// over these, outcome 0 least significant.
    pub radices: Vec<usize>,
    pub payoff_attacker: DMatrix<f64>,
    pub payoff_defender: DMatrix<f64>,
}

impl NormalFormGame {
    pub fn dims(&self) -> (usize, usize) {
        self.payoff_attacker.shape()
    }

    /// Action chosen at each outcome by policy `col`.
    pub fn policy(&self, col: usize) -> Vec<usize> {
        let mut rest = col;
        self.radices
            .iter()
            .map(|&r| {
                let k = rest % r;
                rest /= r;
                k
            })
            .collect()
    }

    /// Behavioral strategy induced by a mixture over policies.
    pub fn behavioral(&self, mix: &[f64]) -> DefenderStrategy {
        let mut probs: Vec<Vec<f64>> = self.radices.iter().map(|&r| vec![0.0; r]).collect();
        for (col, &w) in mix.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (j, k) in self.policy(col).into_iter().enumerate() {
                probs[j][k] += w;
            }
        }
        DefenderStrategy { probs }
    }
}

/// Number of pure defender policies, `Π_j |menu_j|`.
pub fn policy_count(game: &SurveillanceGame) -> Option<u128> {
    game.defend_menus()
        .iter()
        .try_fold(1u128, |acc, m| acc.checked_mul(m.len() as u128))
}

pub fn build_normal_form(game: &SurveillanceGame, cell_budget: u128) -> Result<NormalFormGame> {
    let rows = game.attack_actions().len();
    let cells = policy_count(game).and_then(|c| c.checked_mul(rows as u128)).unwrap_or(u128::MAX);
    if cells > cell_budget {
        return Err(ModelError::SizeLimit {
            what: "normal-form cells",
            size: cells,
            limit: cell_budget,
        });
    }
    let radices: Vec<usize> = game.defend_menus().iter().map(Vec::len).collect();
    let cols = cells as usize / rows;
    let mut nf = NormalFormGame {
        radices,
        payoff_attacker: DMatrix::zeros(rows, cols),
        payoff_defender: DMatrix::zeros(rows, cols),
    };
    for col in 0..cols {
        let policy = nf.policy(col);
        for i in 0..rows {
            let mut acc = PayoffPair::default();
            for (j, &k) in policy.iter().enumerate() {
                let p = game.chance(i, j);
                let u = game.payoff(i, j, k);
                acc.attacker += p * u.attacker;
                acc.defender += p * u.defender;
            }
            nf.payoff_attacker[(i, col)] = acc.attacker;
            nf.payoff_defender[(i, col)] = acc.defender;
        }
    }
    Ok(nf)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEnumerationOptions {
    /// Largest support size tried for either player.
    pub max_support: usize,
    /// Refuse when the number of support pairs exceeds this.
    pub max_support_pairs: u128,
    pub tolerance: f64,
}

impl Default for SupportEnumerationOptions {
    fn default() -> Self {
        Self {
            max_support: 3,
            max_support_pairs: 50_000_000,
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BimatrixEquilibrium {
    pub attacker: Vec<f64>,
    pub defender: Vec<f64>,
    pub payoffs: PayoffPair,
}

/// Solves `[M_S | -1; 1ᵀ | 0] (w, v) = (0, 1)` for the opponent mixture `w`
/// over `cols` that equalises payoffs over `rows`. `m(r, c)` reads the
/// indifferent player's payoff. Singular systems fall back to least squares.
fn indifference(m: impl Fn(usize, usize) -> f64, rows: &[usize], cols: &[usize], tol: f64) -> Option<(Vec<f64>, f64)> {
    let (k1, k2) = (rows.len(), cols.len());
    let mut a = DMatrix::zeros(k1 + 1, k2 + 1);
    let mut b = DVector::zeros(k1 + 1);
    for (ri, &r) in rows.iter().enumerate() {
        for (ci, &c) in cols.iter().enumerate() {
            a[(ri, ci)] = m(r, c);
        }
        a[(ri, k2)] = -1.0;
    }
    for ci in 0..k2 {
        a[(k1, ci)] = 1.0;
    }
    b[k1] = 1.0;
    let sol = a.clone().lu().solve(&b).or_else(|| a.clone().svd(true, true).solve(&b, 1e-12).ok())?;
    let scale = 1.0 + a.amax();
    if (&a * &sol - &b).amax() > tol * scale {
        return None;
    }
    let w: Vec<f64> = sol.iter().take(k2).copied().collect();
    if w.iter().any(|&p| p < -tol) {
        return None;
    }
    Some((w.iter().map(|p| p.max(0.0)).collect(), sol[k2]))
}

fn check_pair(nf: &NormalFormGame, rows: &[usize], cols: &[usize], tol: f64, scale: f64) -> Option<BimatrixEquilibrium> {
    let (a, b) = (&nf.payoff_attacker, &nf.payoff_defender);
    let (m, n) = nf.dims();

    let (y_s, va) = indifference(|r, c| a[(r, c)], rows, cols, tol)?;
    let mut y = vec![0.0; n];
    cols.iter().zip(&y_s).for_each(|(&c, &p)| y[c] = p);
    let ys = DVector::from_column_slice(&y);
    let ay = a * &ys;
    if ay.iter().any(|&u| u > va + tol * scale) {
        return None;
    }

    let (x_s, vd) = indifference(|c, r| b[(r, c)], cols, rows, tol)?;
    let mut x = vec![0.0; m];
    rows.iter().zip(&x_s).for_each(|(&r, &p)| x[r] = p);
    let xs = DVector::from_column_slice(&x);
    let bx = b.tr_mul(&xs);
    if bx.iter().any(|&u| u > vd + tol * scale) {
        return None;
    }
    Some(BimatrixEquilibrium {
        payoffs: PayoffPair {
            attacker: xs.dot(&ay),
            defender: ys.dot(&bx),
        },
        attacker: x,
        defender: y,
    })
}

/// Number of equal-size (row support, column support) pairs up to `max`.
pub fn support_pair_count(m: usize, n: usize, max: usize) -> u128 {
    (1..=max.min(m).min(n))
        .map(|k| binomial(m, k).saturating_mul(binomial(n, k)))
        .fold(0u128, u128::saturating_add)
}

/// Equilibria of a bimatrix game found by enumerating equal-size support
/// pairs up to `max_support`, deduplicated and in support order.
pub fn support_enumeration_ne(nf: &NormalFormGame, options: &SupportEnumerationOptions) -> Result<Vec<BimatrixEquilibrium>> {
    let (m, n) = nf.dims();
    let pairs = support_pair_count(m, n, options.max_support);
    if pairs > options.max_support_pairs {
        return Err(ModelError::SizeLimit {
            what: "support pairs",
            size: pairs,
            limit: options.max_support_pairs,
        });
    }
    let tol = options.tolerance;
    let scale = 1.0 + nf.payoff_attacker.amax().max(nf.payoff_defender.amax());

    let mut found: Vec<(Vec<usize>, Vec<usize>, BimatrixEquilibrium)> = Vec::new();
    for k in 1..=options.max_support.min(m).min(n) {
        let row_supports: Vec<Vec<usize>> = (0..m).combinations(k).collect();
        let mut batch: Vec<_> = (0..n)
            .into_par_iter()
            .flat_map_iter(|c0| {
                let row_supports = &row_supports;
                (c0 + 1..n).combinations(k - 1).flat_map(move |rest| {
                    let mut cols = Vec::with_capacity(k);
                    cols.push(c0);
                    cols.extend(rest);
                    row_supports
                        .iter()
                        .filter_map(|rows| check_pair(nf, rows, &cols, tol, scale).map(|eq| (rows.clone(), cols.clone(), eq)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        batch.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        found.extend(batch);
    }

    let mut out: Vec<BimatrixEquilibrium> = Vec::new();
    for (_, _, eq) in found {
        let same = |o: &BimatrixEquilibrium| {
            o.attacker.iter().zip(&eq.attacker).all(|(a, b)| (a - b).abs() < 1e-9)
                && o.defender.iter().zip(&eq.defender).all(|(a, b)| (a - b).abs() < 1e-9)
        };
        if !out.iter().any(same) {
            out.push(eq);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingleChannelRegime {
    PureNoAttack,
    PureAttackNoMonitor,
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleChannelNe {
    /// α*: probability of attacking the channel.
    pub attack_prob: f64,
    /// d*: probability of monitoring the channel when it is disallowed.
    pub surveillance_prob: f64,
    pub regime: SingleChannelRegime,
}

/// Closed-form equilibrium of the one-channel game.
pub fn solve_single_channel(ch: &ChannelParams) -> Result<SingleChannelNe> {
    ch.validate()?;
    let p_a = ch.p_disallowed_attack;
    let p_n = ch.p_disallowed_no_attack;
    if p_a <= 0.0 {
        return Err(ModelError::Degenerate("P(disallowed | attack) is zero".into()));
    }
    let reward = p_a * ch.rho_attack * ch.gain_attack;
    if reward - ch.cost_attack <= 0.0 {
        return Ok(SingleChannelNe {
            attack_prob: 0.0,
            surveillance_prob: 0.0,
            regime: SingleChannelRegime::PureNoAttack,
        });
    }
    let capture = ch.rho_attack * ch.gain_surveillance;
    if capture <= ch.cost_surveillance {
        return Ok(SingleChannelNe {
            attack_prob: 1.0,
            surveillance_prob: 0.0,
            regime: SingleChannelRegime::PureAttackNoMonitor,
        });
    }
    let beta = ch.cost_surveillance / capture;
    let d = (reward - ch.cost_attack) / (p_a * ch.rho_attack * (ch.gain_attack + ch.penalty));
    let alpha = beta * p_n / (p_a - beta * (p_a - p_n));
    Ok(SingleChannelNe {
        attack_prob: alpha.clamp(0.0, 1.0),
        surveillance_prob: d.clamp(0.0, 1.0),
        regime: SingleChannelRegime::Interior,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecompositionDeviation {
    /// Largest `|P(attack t) - α*_t|`.
    pub attacker: f64,
    /// Largest `|P(monitor t | C) - d*_t|` over outcomes `C` with `t` disallowed.
    pub defender: f64,
}

/// Compares the per-channel marginals of a strategy pair with the
/// independent single-channel equilibria.
pub fn decomposition_deviation(game: &SurveillanceGame, attacker: &AttackerStrategy, defender: &DefenderStrategy) -> Result<DecompositionDeviation> {
    let singles = single_channel_equilibria(game)?;
    let attack = attacker.channel_marginals(game);
    let monitor = defender.channel_marginals(game);
    let mut dev = DecompositionDeviation::default();
    for (t, ne) in singles.iter().enumerate() {
        dev.attacker = dev.attacker.max((attack[t] - ne.attack_prob).abs());
        for (j, m) in monitor.iter().enumerate() {
            if SensingOutcome::from_index(j).disallowed.contains(t) {
                dev.defender = dev.defender.max((m[t] - ne.surveillance_prob).abs());
            }
        }
    }
    Ok(dev)
}

pub fn single_channel_equilibria(game: &SurveillanceGame) -> Result<Vec<SingleChannelNe>> {
    game.config().channels.iter().map(solve_single_channel).collect()
}

/// Strategy pair in which every channel independently plays its
/// single-channel equilibrium. Only meaningful when `M` and `L` do not bind.
pub fn single_channel_product(game: &SurveillanceGame) -> Result<(AttackerStrategy, DefenderStrategy)> {
    let singles = single_channel_equilibria(game)?;
    let n = game.n_channels();
    let (m, l) = (game.config().max_attack, game.config().max_monitor);
    if m < n || l < n {
        return Err(ModelError::Contract(format!("product strategies need M = L = N, got M={m}, L={l}, N={n}")));
    }
    let factor = |set: ChannelSet, universe: ChannelSet, p: &dyn Fn(usize) -> f64| -> f64 {
        universe.iter().map(|t| if set.contains(t) { p(t) } else { 1.0 - p(t) }).product()
    };
    let all = ChannelSet::from_channels(0..n);
    let attacker = AttackerStrategy {
        probs: game
            .attack_actions()
            .iter()
            .map(|a| factor(a.attacked, all, &|t| singles[t].attack_prob))
            .collect(),
    };
    let defender = DefenderStrategy {
        probs: game
            .defend_menus()
            .iter()
            .map(|menu| {
                menu.iter()
                    .map(|act| factor(act.monitored, act.outcome.disallowed, &|t| singles[t].surveillance_prob))
                    .collect()
            })
            .collect(),
    };
    Ok((attacker, defender))
}

/// Monitors uniformly among the nonempty admissible sets; idles only when
/// nothing is disallowed.
pub fn uniform_surveillance_strategy(game: &SurveillanceGame) -> DefenderStrategy {
    DefenderStrategy {
        probs: game
            .defend_menus()
            .iter()
            .map(|menu| {
                if menu.len() == 1 {
                    vec![1.0]
                } else {
                    let w = 1.0 / (menu.len() - 1) as f64;
                    std::iter::once(0.0).chain(std::iter::repeat_n(w, menu.len() - 1)).collect()
                }
            })
            .collect(),
    }
}

/// Uniform over the whole menu, idling included.
pub fn random_strategy(game: &SurveillanceGame) -> DefenderStrategy {
    DefenderStrategy {
        probs: game
            .defend_menus()
            .iter()
            .map(|menu| vec![1.0 / menu.len() as f64; menu.len()])
            .collect(),
    }
}

/// Tolerance for treating two attacker values as tied.
pub const BEST_RESPONSE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub enum AttackerResponse<'a> {
    /// Best response to the defender. A reference strategy is kept if it is
    /// itself a best response; otherwise ties between pure responses go to
    /// the one that is worst for the defender.
    BestResponse { reference: Option<&'a AttackerStrategy> },
    Fixed(&'a AttackerStrategy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefenderEvaluation {
    pub omega: PayoffPair,
    pub attacker: AttackerStrategy,
}

pub fn evaluate_defender_strategy(game: &SurveillanceGame, defender: &DefenderStrategy, response: AttackerResponse<'_>) -> Result<DefenderEvaluation> {
    defender.validate(game)?;
    let attacker = match response {
        AttackerResponse::Fixed(a) => {
            a.validate(game)?;
            a.clone()
        }
        AttackerResponse::BestResponse { reference } => {
            let values: Vec<PayoffPair> = (0..game.attack_actions().len())
                .map(|i| game.action_value(i, &defender.probs))
                .collect();
            let best = values.iter().map(|v| v.attacker).fold(f64::NEG_INFINITY, f64::max);
            let tol = BEST_RESPONSE_TOLERANCE * (1.0 + best.abs());
            let keep = reference.filter(|r| expected_payoffs(game, r, defender).attacker >= best - tol);
            match keep {
                Some(r) => {
                    r.validate(game)?;
                    r.clone()
                }
                None => {
                    let pick = (0..values.len())
                        .filter(|&i| values[i].attacker >= best - tol)
                        .min_by(|&a, &b| values[a].defender.total_cmp(&values[b].defender).then(a.cmp(&b)))
                        .expect("nonempty action set");
                    AttackerStrategy::pure(game, pick)
                }
            }
        }
    };
    Ok(DefenderEvaluation {
        omega: expected_payoffs(game, &attacker, defender),
        attacker,
    })
}

/// Convenience: the normal form of a configuration under the default budget.
pub fn normal_form_of(config: &GameConfig) -> Result<NormalFormGame> {
    build_normal_form(&SurveillanceGame::new(config.clone())?, DEFAULT_CELL_BUDGET)
}
