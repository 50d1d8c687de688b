//! Equilibrium computation on the sequence form.
//!
//! Both players' best-response programs are stacked into one LCP over
//! `z = (Φ_A, Φ_D, p⁺, p⁻, q⁺, q⁻)`:
//!
//! ```text
//!  0    -A    Eᵀ  -Eᵀ   0    0      Φ_A        0
//! -Bᵀ    0    0    0    Fᵀ  -Fᵀ     Φ_D        0
//! -E     0    0    0    0    0   ·  p⁺    +    e
//!  E     0    0    0    0    0      p⁻        -e
//!  0    -F    0    0    0    0      q⁺         f
//!  0     F    0    0    0    0      q⁻        -f
//! ```
//!
//! `A` and `B` are the payoff matrices shifted so every leaf entry is
//! strictly negative. Every pair of plans meets exactly one unit of leaf
//! weight, so the shift moves each player's payoff by a constant and leaves
//! best responses unchanged.

use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

use crate::channel::PayoffPair;
use crate::error::ModelError;
use crate::game::{GameConfig, SurveillanceGame};
use crate::lcp::{lemke_solve, lemke_solve_traced, LcpProblem, LcpResidual, LcpStatus, LemkeOptions};
use crate::sequence::{ChanceCoupling, Representation, SequenceFormGame};
use crate::strategy::{AttackerStrategy, DefenderStrategy};

/// Where each block of `z` lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LcpLayout {
    pub n_attacker: usize,
    pub n_defender: usize,
    pub e_rows: usize,
    pub f_rows: usize,
}

impl LcpLayout {
    pub fn dim(&self) -> usize {
        self.n_attacker + self.n_defender + 2 * self.e_rows + 2 * self.f_rows
    }

    pub fn attacker(&self) -> std::ops::Range<usize> {
        0..self.n_attacker
    }

    pub fn defender(&self) -> std::ops::Range<usize> {
        self.n_attacker..self.n_attacker + self.n_defender
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumLcp {
    pub problem: LcpProblem,
    pub layout: LcpLayout,
    /// Constants subtracted from the attacker and defender leaf payoffs.
    pub shift: PayoffPair,
}

/// Builds the equilibrium LCP of a sequence-form game.
pub fn assemble_equilibrium_lcp(sf: &SequenceFormGame) -> Result<EquilibriumLcp, ModelError> {
    let (nx, ny) = sf.payoff_dims();
    let (re, rf) = (sf.e_matrix.nrows(), sf.f_matrix.nrows());
    if sf.e_matrix.ncols() != nx || sf.f_matrix.ncols() != ny || sf.e_rhs.len() != re || sf.f_rhs.len() != rf {
        return Err(ModelError::Dimension(format!(
            "E {}x{}, F {}x{} inconsistent with {nx}x{ny} payoffs",
            sf.e_matrix.nrows(),
            sf.e_matrix.ncols(),
            sf.f_matrix.nrows(),
            sf.f_matrix.ncols()
        )));
    }
    let layout = LcpLayout {
        n_attacker: nx,
        n_defender: ny,
        e_rows: re,
        f_rows: rf,
    };
    let n = layout.dim();

    // The constant must survive multiplication by the entry's own scale.
    let shift_scale = |weight: f64| match sf.representation {
        Representation::Extended(ChanceCoupling::Consistent) | Representation::Extended(ChanceCoupling::SumOnly) => 1.0,
        Representation::Reduced => weight,
    };
    let leaf_value = |e: &crate::sequence::PayoffEntry, u: f64| match sf.representation {
        Representation::Reduced => u,
        _ => e.weight * u,
    };
    let max_a = sf.entries.iter().map(|e| leaf_value(e, e.payoff.attacker)).fold(0.0, f64::max);
    let max_d = sf.entries.iter().map(|e| leaf_value(e, e.payoff.defender)).fold(0.0, f64::max);
    let shift = PayoffPair {
        attacker: max_a + 1.0,
        defender: max_d + 1.0,
    };

    let mut m = DMatrix::zeros(n, n);
    let (ox, oy) = (0, nx);
    let (op1, op2) = (nx + ny, nx + ny + re);
    let (oq1, oq2) = (nx + ny + 2 * re, nx + ny + 2 * re + rf);

    for e in &sf.entries {
        let s = shift_scale(e.weight);
        let a = e.weight * e.payoff.attacker - s * shift.attacker;
        let b = e.weight * e.payoff.defender - s * shift.defender;
        m[(ox + e.row, oy + e.col)] -= a;
        m[(oy + e.col, ox + e.row)] -= b;
    }
    for r in 0..re {
        for c in 0..nx {
            let v = sf.e_matrix[(r, c)];
            if v != 0.0 {
                m[(ox + c, op1 + r)] = v;
                m[(ox + c, op2 + r)] = -v;
                m[(op1 + r, ox + c)] = -v;
                m[(op2 + r, ox + c)] = v;
            }
        }
    }
    for r in 0..rf {
        for c in 0..ny {
            let v = sf.f_matrix[(r, c)];
            if v != 0.0 {
                m[(oy + c, oq1 + r)] = v;
                m[(oy + c, oq2 + r)] = -v;
                m[(oq1 + r, oy + c)] = -v;
                m[(oq2 + r, oy + c)] = v;
            }
        }
    }

    let mut b = DVector::zeros(n);
    for r in 0..re {
        b[op1 + r] = sf.e_rhs[r];
        b[op2 + r] = -sf.e_rhs[r];
    }
    for r in 0..rf {
        b[oq1 + r] = sf.f_rhs[r];
        b[oq2 + r] = -sf.f_rhs[r];
    }

    Ok(EquilibriumLcp {
        problem: LcpProblem::new(m, b)?,
        layout,
        shift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Attacker,
    Defender,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationPlan {
    pub owner: Player,
    pub weights: DVector<f64>,
}

impl RealizationPlan {
    /// `max |E w - e|` (or `F`, `f` for the defender).
    pub fn constraint_residual(&self, sf: &SequenceFormGame) -> f64 {
        let (mat, rhs) = match self.owner {
            Player::Attacker => (&sf.e_matrix, &sf.e_rhs),
            Player::Defender => (&sf.f_matrix, &sf.f_rhs),
        };
        (mat * &self.weights - rhs).amax()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedStrategies {
    pub attacker_plan: RealizationPlan,
    pub defender_plan: RealizationPlan,
    pub attacker: AttackerStrategy,
    pub defender: DefenderStrategy,
    /// `extensions[i][j] = φ(A_i·C_j) / φ(A_i)`; empty for the reduced form.
    pub extensions: Vec<Vec<f64>>,
}

fn normalize(weights: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= f64::EPSILON {
        vec![1.0 / weights.len() as f64; weights.len()]
    } else {
        clipped.iter().map(|w| w / total).collect()
    }
}

/// Reads realization plans out of an LCP solution and converts them to
/// behavioral strategies. Zero-weight parents get uniform children.
pub fn extract_strategies(sf: &SequenceFormGame, layout: &LcpLayout, z: &DVector<f64>) -> ExtractedStrategies {
    let x = z.rows(layout.attacker().start, layout.n_attacker).into_owned();
    let y = z.rows(layout.defender().start, layout.n_defender).into_owned();

    let root: Vec<f64> = (0..sf.n_actions()).map(|i| x[sf.action_sequence(i)]).collect();
    let attacker = AttackerStrategy { probs: normalize(&root) };

    let extensions = match sf.representation {
        Representation::Reduced => Vec::new(),
        Representation::Extended(_) => (0..sf.n_actions())
            .map(|i| {
                let w: Vec<f64> = (0..sf.menu_sizes().len())
                    .map(|j| x[sf.extension_sequence(i, j).expect("extended form")])
                    .collect();
                normalize(&w)
            })
            .collect(),
    };

    let defender = DefenderStrategy {
        probs: sf
            .menu_sizes()
            .iter()
            .enumerate()
            .map(|(j, &size)| normalize(&(0..size).map(|k| y[sf.defender_sequence(j, k)]).collect::<Vec<_>>()))
            .collect(),
    };

    ExtractedStrategies {
        attacker_plan: RealizationPlan {
            owner: Player::Attacker,
            weights: x,
        },
        defender_plan: RealizationPlan {
            owner: Player::Defender,
            weights: y,
        },
        attacker,
        defender,
        extensions,
    }
}

/// `Σ_i δ(A_i) Σ_j p(C_j|A_i) Σ_k δ(D_k|C_j) U(A_i, D_k|C_j)`.
pub fn expected_payoffs(game: &SurveillanceGame, attacker: &AttackerStrategy, defender: &DefenderStrategy) -> PayoffPair {
    let mut acc = PayoffPair::default();
    for (i, &a) in attacker.probs.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let v = game.action_value(i, &defender.probs);
        acc.attacker += a * v.attacker;
        acc.defender += a * v.defender;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gaps {
    pub attacker: f64,
    pub defender: f64,
}

impl Gaps {
    pub fn max(&self) -> f64 {
        self.attacker.max(self.defender)
    }
}

/// Best-response gaps by enumeration over pure deviations.
pub fn verify_equilibrium(game: &SurveillanceGame, attacker: &AttackerStrategy, defender: &DefenderStrategy) -> Gaps {
    let omega = expected_payoffs(game, attacker, defender);
    let best_attack = (0..game.attack_actions().len())
        .map(|i| game.action_value(i, &defender.probs).attacker)
        .fold(f64::NEG_INFINITY, f64::max);
    let defender_gap = (0..game.n_outcomes())
        .map(|j| {
            let values = game.defender_action_values(j, &attacker.probs);
            let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let played: f64 = values.iter().zip(&defender.probs[j]).map(|(v, d)| v * d).sum();
            (best - played).max(0.0)
        })
        .sum();
    Gaps {
        attacker: (best_attack - omega.attacker).max(0.0),
        defender: defender_gap,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub representation: Representation,
    pub lemke: LemkeOptions,
    /// Largest accepted best-response gap.
    pub gap_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            representation: Representation::default(),
            lemke: LemkeOptions::default(),
            gap_tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub attacker: AttackerStrategy,
    pub defender: DefenderStrategy,
    pub omega_attacker: f64,
    pub omega_defender: f64,
    pub best_response_gap_attacker: f64,
    pub best_response_gap_defender: f64,
    pub lcp_residual: LcpResidual,
    pub pivots: usize,
    pub wall_time: Duration,
    /// `(attacker sequences, defender sequences)` of the solved form.
    pub dims: (usize, usize),
    pub strategies: ExtractedStrategies,
}

impl EquilibriumResult {
    pub fn omega(&self) -> PayoffPair {
        PayoffPair {
            defender: self.omega_defender,
            attacker: self.omega_attacker,
        }
    }

    pub fn gaps(&self) -> Gaps {
        Gaps {
            attacker: self.best_response_gap_attacker,
            defender: self.best_response_gap_defender,
        }
    }
}

#[derive(Debug, Clone)]
pub enum SolveError {
    Model(ModelError),
    /// Lemke stopped without an accurate complementary solution.
    Lcp {
        status: LcpStatus,
        pivots: usize,
        residual: LcpResidual,
        trace: String,
    },
    /// A complementary solution was found but failed best-response checks.
    Verification(Box<EquilibriumResult>),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Model(e) => write!(f, "{e}"),
            SolveError::Lcp {
                status,
                pivots,
                residual,
                ..
            } => write!(f, "LCP {status:?} after {pivots} pivots (residual {:.3e})", residual.max()),
            SolveError::Verification(r) => write!(
                f,
                "equilibrium rejected: gaps attacker {:.3e}, defender {:.3e}",
                r.best_response_gap_attacker, r.best_response_gap_defender
            ),
        }
    }
}

impl std::error::Error for SolveError {}

impl From<ModelError> for SolveError {
    fn from(e: ModelError) -> Self {
        SolveError::Model(e)
    }
}

pub fn solve(config: &GameConfig, options: &SolveOptions) -> Result<EquilibriumResult, SolveError> {
    let game = SurveillanceGame::new(config.clone())?;
    solve_game(&game, options)
}

/// Full pipeline on an already enumerated game.
pub fn solve_game(game: &SurveillanceGame, options: &SolveOptions) -> Result<EquilibriumResult, SolveError> {
    let start = Instant::now();
    let sf = SequenceFormGame::build(game, options.representation);
    let lcp = assemble_equilibrium_lcp(&sf)?;
    let sol = lemke_solve(&lcp.problem, &options.lemke);
    if sol.status != LcpStatus::Solved {
        let mut buf = Vec::new();
        lemke_solve_traced(&lcp.problem, &options.lemke, &mut buf);
        return Err(SolveError::Lcp {
            status: sol.status,
            pivots: sol.pivot_count,
            residual: sol.residual,
            trace: String::from_utf8_lossy(&buf).into_owned(),
        });
    }

    let strategies = extract_strategies(&sf, &lcp.layout, &sol.z);
    let omega = expected_payoffs(game, &strategies.attacker, &strategies.defender);
    let gaps = verify_equilibrium(game, &strategies.attacker, &strategies.defender);
    let result = EquilibriumResult {
        attacker: strategies.attacker.clone(),
        defender: strategies.defender.clone(),
        omega_attacker: omega.attacker,
        omega_defender: omega.defender,
        best_response_gap_attacker: gaps.attacker,
        best_response_gap_defender: gaps.defender,
        lcp_residual: sol.residual,
        pivots: sol.pivot_count,
        wall_time: start.elapsed(),
        dims: sf.payoff_dims(),
        strategies,
    };
    if gaps.max() > options.gap_tolerance {
        return Err(SolveError::Verification(Box::new(result)));
    }
    Ok(result)
}
