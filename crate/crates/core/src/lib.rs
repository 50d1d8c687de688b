//! Multi-channel primary-user-emulation surveillance game.
//!
//! An attacker chooses a set of channels to emulate a primary user on; a
//! defender observes which channels its energy detector marks as disallowed
//! and chooses which of those to monitor. The crate builds the game in
//! sequence form, solves it as a linear complementarity problem with
//! Lemke's algorithm, and provides baselines and a Monte Carlo simulator
//! for cross-checking.

pub mod baselines;
pub mod channel;
pub mod equilibrium;
pub mod error;
pub mod game;
pub mod instances;
pub mod lcp;
pub mod sequence;
pub mod simulator;
pub mod strategy;

pub use channel::{ChannelParams, PayoffPair, RatioParams, SensingModel};
pub use equilibrium::{solve, EquilibriumResult, SolveError, SolveOptions};
pub use error::{ModelError, Result};
pub use game::{GameConfig, SurveillanceGame};
pub use sequence::{ChanceCoupling, Representation, SequenceFormGame};
pub use strategy::{AttackerStrategy, DefenderStrategy};
