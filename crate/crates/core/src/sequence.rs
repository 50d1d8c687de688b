//! Sequence-form representation of the surveillance game.
//!
//! Two constructions are provided:
//!
//! * the extended form, where sensing results extend the attacker's
//!   sequences (`∅`, `A_i`, `A_i·C_j`), giving `K4 = 1 + (K1+1) + (K1+1)·2^N`
//!   attacker sequences;
//! * the reduced form, the textbook construction where chance is folded into
//!   the payoff entries and the attacker only has `∅` and `A_i`.
//!
//! The defender acts exactly once, at the information set of the observed
//! outcome, so its sequences are the actions `D_{k|C_j}` and its realization
//! plan is one distribution per outcome (`F y = 1`).

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::channel::PayoffPair;
use crate::game::SurveillanceGame;
use crate::strategy::{AttackerStrategy, DefenderStrategy};

/// How the extended attacker sequences `A_i·C_j` are tied to chance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChanceCoupling {
    /// `φ(A_i·C_j) = p(C_j|A_i)·φ(A_i)` for every outcome; entries carry the
    /// unweighted leaf payoff.
    #[default]
    Consistent,
    /// Only `Σ_j φ(A_i·C_j) = φ(A_i)`, with chance-weighted entries. The
    /// attacker can then steer mass between sensing outcomes, so equilibria
    /// of this system need not be equilibria of the surveillance game.
    SumOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Extended(ChanceCoupling),
    Reduced,
}

impl Default for Representation {
    fn default() -> Self {
        Self::Extended(ChanceCoupling::Consistent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackerSequence {
    Root,
    Action(usize),
    Extension { action: usize, outcome: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DefenderSequence {
    pub outcome: usize,
    pub action: usize,
}

/// One nonzero pair of the payoff matrices; `Π = weight · payoff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffEntry {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
    pub payoff: PayoffPair,
}

/// Coordinate-list sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CooMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl CooMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `xᵀ M y`
    pub fn bilinear(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.entries.iter().map(|&(r, c, v)| x[r] * v * y[c]).sum()
    }
}

#[derive(Debug, Clone)]
pub struct SequenceFormGame {
    pub representation: Representation,
    pub attacker_sequences: Vec<AttackerSequence>,
    pub defender_sequences: Vec<DefenderSequence>,
    /// `E`, one column per attacker sequence.
    pub e_matrix: DMatrix<f64>,
    pub e_rhs: DVector<f64>,
    /// `F`, one column per defender sequence.
    pub f_matrix: DMatrix<f64>,
    pub f_rhs: DVector<f64>,
    pub entries: Vec<PayoffEntry>,
    n_actions: usize,
    menu_sizes: Vec<usize>,
    action_seq: Vec<usize>,
    /// `extension_seq[i][j]`; empty for the reduced form.
    extension_seq: Vec<Vec<usize>>,
    defender_seq: Vec<Vec<usize>>,
    /// `chance[i][j]`, kept to map behavioral strategies onto plans.
    chance: Vec<Vec<f64>>,
}

pub fn build_sequence_form(game: &SurveillanceGame) -> SequenceFormGame {
    SequenceFormGame::build(game, Representation::Extended(ChanceCoupling::Consistent))
}

pub fn build_reduced_sequence_form(game: &SurveillanceGame) -> SequenceFormGame {
    SequenceFormGame::build(game, Representation::Reduced)
}

impl SequenceFormGame {
    pub fn build(game: &SurveillanceGame, representation: Representation) -> Self {
        let n_actions = game.attack_actions().len();
        let n_outcomes = game.n_outcomes();
        let chance: Vec<Vec<f64>> = (0..n_actions)
            .map(|i| (0..n_outcomes).map(|j| game.chance(i, j)).collect())
            .collect();

        let mut attacker_sequences = vec![AttackerSequence::Root];
        let action_seq: Vec<usize> = (0..n_actions)
            .map(|i| {
                attacker_sequences.push(AttackerSequence::Action(i));
                attacker_sequences.len() - 1
            })
            .collect();
        let extended = matches!(representation, Representation::Extended(_));
        let extension_seq: Vec<Vec<usize>> = if extended {
            (0..n_actions)
                .map(|i| {
                    (0..n_outcomes)
                        .map(|j| {
                            attacker_sequences.push(AttackerSequence::Extension { action: i, outcome: j });
                            attacker_sequences.len() - 1
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };

        let mut defender_sequences = Vec::new();
        let defender_seq: Vec<Vec<usize>> = game
            .defend_menus()
            .iter()
            .enumerate()
            .map(|(j, menu)| {
                (0..menu.len())
                    .map(|k| {
                        defender_sequences.push(DefenderSequence { outcome: j, action: k });
                        defender_sequences.len() - 1
                    })
                    .collect()
            })
            .collect();
        let menu_sizes: Vec<usize> = game.defend_menus().iter().map(Vec::len).collect();

        // Attacker constraints.
        let mut rows: Vec<Vec<(usize, f64)>> = vec![vec![(0, 1.0)]];
        let mut action_row = vec![(0, -1.0)];
        action_row.extend(action_seq.iter().map(|&s| (s, 1.0)));
        rows.push(action_row);
        if let Representation::Extended(coupling) = representation {
            for i in 0..n_actions {
                let mut r = vec![(action_seq[i], -1.0)];
                r.extend(extension_seq[i].iter().map(|&s| (s, 1.0)));
                rows.push(r);
            }
            if coupling == ChanceCoupling::Consistent {
                // Outcome 0 is implied by the sum row above.
                for i in 0..n_actions {
                    for j in 1..n_outcomes {
                        rows.push(vec![(extension_seq[i][j], 1.0), (action_seq[i], -chance[i][j])]);
                    }
                }
            }
        }
        let mut e_matrix = DMatrix::zeros(rows.len(), attacker_sequences.len());
        for (r, row) in rows.iter().enumerate() {
            for &(c, v) in row {
                e_matrix[(r, c)] += v;
            }
        }
        let mut e_rhs = DVector::zeros(rows.len());
        e_rhs[0] = 1.0;

        // Defender constraints: one distribution per outcome.
        let mut f_matrix = DMatrix::zeros(n_outcomes, defender_sequences.len());
        for (j, seqs) in defender_seq.iter().enumerate() {
            for &s in seqs {
                f_matrix[(j, s)] = 1.0;
            }
        }
        let f_rhs = DVector::from_element(n_outcomes, 1.0);

        let mut entries = Vec::with_capacity(game.leaf_count());
        for i in 0..n_actions {
            for j in 0..n_outcomes {
                let (row, weight) = match representation {
                    Representation::Extended(ChanceCoupling::Consistent) => (extension_seq[i][j], 1.0),
                    Representation::Extended(ChanceCoupling::SumOnly) => (extension_seq[i][j], chance[i][j]),
                    Representation::Reduced => (action_seq[i], chance[i][j]),
                };
                for (k, &col) in defender_seq[j].iter().enumerate() {
                    entries.push(PayoffEntry {
                        row,
                        col,
                        weight,
                        payoff: game.payoff(i, j, k),
                    });
                }
            }
        }

        Self {
            representation,
            attacker_sequences,
            defender_sequences,
            e_matrix,
            e_rhs,
            f_matrix,
            f_rhs,
            entries,
            n_actions,
            menu_sizes,
            action_seq,
            extension_seq,
            defender_seq,
            chance,
        }
    }

    /// `(attacker sequences, defender sequences)`.
    pub fn payoff_dims(&self) -> (usize, usize) {
        (self.attacker_sequences.len(), self.defender_sequences.len())
    }

    fn payoff_matrix(&self, pick: impl Fn(&PayoffPair) -> f64) -> CooMatrix {
        let (nrows, ncols) = self.payoff_dims();
        CooMatrix {
            nrows,
            ncols,
            entries: self
                .entries
                .iter()
                .map(|e| (e.row, e.col, e.weight * pick(&e.payoff)))
                .filter(|&(_, _, v)| v != 0.0)
                .collect(),
        }
    }

    pub fn payoff_attacker(&self) -> CooMatrix {
        self.payoff_matrix(|p| p.attacker)
    }

    pub fn payoff_defender(&self) -> CooMatrix {
        self.payoff_matrix(|p| p.defender)
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn menu_sizes(&self) -> &[usize] {
        &self.menu_sizes
    }

    pub fn action_sequence(&self, action: usize) -> usize {
        self.action_seq[action]
    }

    /// Index of `A_i·C_j`; `None` in the reduced form.
    pub fn extension_sequence(&self, action: usize, outcome: usize) -> Option<usize> {
        self.extension_seq.get(action).map(|v| v[outcome])
    }

    pub fn defender_sequence(&self, outcome: usize, action: usize) -> usize {
        self.defender_seq[outcome][action]
    }

    /// Realization plan induced by an attacker behavioral strategy. Extension
    /// sequences receive `φ(A_i)·p(C_j|A_i)`.
    pub fn attacker_plan(&self, strategy: &AttackerStrategy) -> DVector<f64> {
        let mut x = DVector::zeros(self.attacker_sequences.len());
        x[0] = 1.0;
        for (i, &p) in strategy.probs.iter().enumerate() {
            x[self.action_seq[i]] = p;
            if let Some(ext) = self.extension_seq.get(i) {
                for (j, &s) in ext.iter().enumerate() {
                    x[s] = p * self.chance[i][j];
                }
            }
        }
        x
    }

    pub fn defender_plan(&self, strategy: &DefenderStrategy) -> DVector<f64> {
        let mut y = DVector::zeros(self.defender_sequences.len());
        for (j, probs) in strategy.probs.iter().enumerate() {
            for (k, &p) in probs.iter().enumerate() {
                y[self.defender_seq[j][k]] = p;
            }
        }
        y
    }

    /// `(Φ_Aᵀ Π_A Φ_D, Φ_Aᵀ Π_D Φ_D)`.
    pub fn bilinear_payoffs(&self, x: &DVector<f64>, y: &DVector<f64>) -> PayoffPair {
        let mut acc = PayoffPair::default();
        for e in &self.entries {
            let w = x[e.row] * e.weight * y[e.col];
            acc.attacker += w * e.payoff.attacker;
            acc.defender += w * e.payoff.defender;
        }
        acc
    }

    /// Writes `E`, `e`, `F`, `f`, `Π_A` and `Π_D` as `row col value`
    /// triplets, each block introduced by `# name nrows ncols`.
    pub fn write_matrices<W: Write>(&self, out: &mut W) -> io::Result<()> {
        fn dense<W: Write>(out: &mut W, name: &str, m: &DMatrix<f64>) -> io::Result<()> {
            writeln!(out, "# {name} {} {}", m.nrows(), m.ncols())?;
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let v = m[(r, c)];
                    if v != 0.0 {
                        writeln!(out, "{r} {c} {v}")?;
                    }
                }
            }
            Ok(())
        }
        fn vector<W: Write>(out: &mut W, name: &str, v: &DVector<f64>) -> io::Result<()> {
            writeln!(out, "# {name} {} 1", v.len())?;
            for (r, x) in v.iter().enumerate() {
                if *x != 0.0 {
                    writeln!(out, "{r} 0 {x}")?;
                }
            }
            Ok(())
        }
        fn sparse<W: Write>(out: &mut W, name: &str, m: &CooMatrix) -> io::Result<()> {
            writeln!(out, "# {name} {} {}", m.nrows, m.ncols)?;
            for (r, c, v) in &m.entries {
                writeln!(out, "{r} {c} {v}")?;
            }
            Ok(())
        }
        dense(out, "E", &self.e_matrix)?;
        vector(out, "e", &self.e_rhs)?;
        dense(out, "F", &self.f_matrix)?;
        vector(out, "f", &self.f_rhs)?;
        sparse(out, "PI_A", &self.payoff_attacker())?;
        sparse(out, "PI_D", &self.payoff_defender())
    }
}
