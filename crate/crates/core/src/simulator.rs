//! Frame-level Monte Carlo simulation.
//!
//! Each frame draws PU presence, the attack, the sensing result and the
//! defender's response, then realizes payoffs from what actually happened:
//! gains and penalties only arise on attacked, disallowed channels where the
//! PU is absent. Frames are split into fixed-size chunks, each with its own
//! ChaCha stream, so reports depend only on the seed.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ModelError, Result};
use crate::game::{ChannelSet, SensingOutcome, SurveillanceGame};
use crate::strategy::{AttackerStrategy, DefenderStrategy};

pub const CHUNK_FRAMES: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameOutcome {
    pub pu_present: ChannelSet,
    pub attacked: ChannelSet,
    pub sensed_disallowed: ChannelSet,
    pub monitored: ChannelSet,
    /// Attacked, disallowed, monitored channels with the PU absent.
    pub captured: ChannelSet,
    pub attacker_payoff: f64,
    pub defender_payoff: f64,
}

/// Samplers for one strategy pair.
pub struct FrameSampler<'g> {
    game: &'g SurveillanceGame,
    attack: WeightedIndex<f64>,
    defend: Vec<WeightedIndex<f64>>,
}

fn weighted(probs: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(probs.iter().map(|p| p.max(0.0))).map_err(|e| ModelError::Domain(format!("strategy weights: {e}")))
}

impl<'g> FrameSampler<'g> {
    pub fn new(game: &'g SurveillanceGame, attacker: &AttackerStrategy, defender: &DefenderStrategy) -> Result<Self> {
        attacker.validate(game)?;
        defender.validate(game)?;
        Ok(Self {
            game,
            attack: weighted(&attacker.probs)?,
            defend: defender.probs.iter().map(|d| weighted(d)).collect::<Result<_>>()?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FrameOutcome {
        let channels = &self.game.config().channels;
        let attacked = self.game.attack_actions()[self.attack.sample(rng)].attacked;
        let mut pu_present = ChannelSet::EMPTY;
        let mut disallowed = ChannelSet::EMPTY;
        for (t, ch) in channels.iter().enumerate() {
            let present = rng.random_bool(ch.pi);
            if present {
                pu_present.0 |= 1 << t;
            }
            if rng.random_bool(ch.disallowed_given_presence(present, attacked.contains(t))) {
                disallowed.0 |= 1 << t;
            }
        }
        let j = SensingOutcome { disallowed }.index();
        let monitored = self.game.defend_actions(j)[self.defend[j].sample(rng)].monitored;

        let mut out = FrameOutcome {
            pu_present,
            attacked,
            sensed_disallowed: disallowed,
            monitored,
            captured: ChannelSet::EMPTY,
            attacker_payoff: 0.0,
            defender_payoff: 0.0,
        };
        for (t, ch) in channels.iter().enumerate() {
            if monitored.contains(t) {
                out.defender_payoff -= ch.cost_surveillance;
            }
            if !attacked.contains(t) {
                continue;
            }
            out.attacker_payoff -= ch.cost_attack;
            if disallowed.contains(t) && !pu_present.contains(t) {
                if monitored.contains(t) {
                    out.attacker_payoff -= ch.penalty;
                    out.defender_payoff += ch.gain_surveillance;
                    out.captured.0 |= 1 << t;
                } else {
                    out.attacker_payoff += ch.gain_attack;
                }
            }
        }
        out
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Self) -> Self {
        if self.n == 0 {
            return o;
        }
        if o.n == 0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Self {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64) * (o.n as f64) / n as f64,
        }
    }

    fn standard_error(&self) -> f64 {
        if self.n < 2 {
            f64::INFINITY
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
        }
    }
}

/// Per-channel sensing tallies split by whether the channel was attacked.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DisallowedCounts {
    pub attacked_frames: u64,
    pub attacked_disallowed: u64,
    pub unattacked_frames: u64,
    pub unattacked_disallowed: u64,
}

#[derive(Debug, Clone, Default)]
struct ChunkStats {
    attacker: Moments,
    defender: Moments,
    captures: u64,
    channels: Vec<DisallowedCounts>,
}

impl ChunkStats {
    fn merge(mut self, o: Self) -> Self {
        self.attacker = self.attacker.merge(o.attacker);
        self.defender = self.defender.merge(o.defender);
        self.captures += o.captures;
        if self.channels.is_empty() {
            self.channels = o.channels;
        } else {
            for (a, b) in self.channels.iter_mut().zip(o.channels) {
                a.attacked_frames += b.attacked_frames;
                a.attacked_disallowed += b.attacked_disallowed;
                a.unattacked_frames += b.unattacked_frames;
                a.unattacked_disallowed += b.unattacked_disallowed;
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub n_frames: u64,
    pub seed: u64,
    pub mean_attacker_payoff: f64,
    pub mean_defender_payoff: f64,
    pub se_attacker_payoff: f64,
    pub se_defender_payoff: f64,
    /// Fraction of frames with at least one capture.
    pub capture_rate: f64,
    pub capture_rate_se: f64,
    pub channels: Vec<DisallowedCounts>,
}

fn run_chunk(sampler: &FrameSampler<'_>, seed: u64, chunk: u64, frames: u64) -> ChunkStats {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut stats = ChunkStats {
        channels: vec![DisallowedCounts::default(); sampler.game.n_channels()],
        ..Default::default()
    };
    for _ in 0..frames {
        let f = sampler.sample(&mut rng);
        stats.attacker.push(f.attacker_payoff);
        stats.defender.push(f.defender_payoff);
        if !f.captured.is_empty() {
            stats.captures += 1;
        }
        for (t, c) in stats.channels.iter_mut().enumerate() {
            let hit = f.sensed_disallowed.contains(t) as u64;
            if f.attacked.contains(t) {
                c.attacked_frames += 1;
                c.attacked_disallowed += hit;
            } else {
                c.unattacked_frames += 1;
                c.unattacked_disallowed += hit;
            }
        }
    }
    stats
}

pub fn simulate(game: &SurveillanceGame, attacker: &AttackerStrategy, defender: &DefenderStrategy, n_frames: u64, seed: u64) -> Result<SimulationReport> {
    if n_frames == 0 {
        return Err(ModelError::Domain("n_frames must be at least 1".into()));
    }
    let sampler = FrameSampler::new(game, attacker, defender)?;
    let chunks = n_frames.div_ceil(CHUNK_FRAMES);
    let parts: Vec<ChunkStats> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let frames = CHUNK_FRAMES.min(n_frames - c * CHUNK_FRAMES);
            run_chunk(&sampler, seed, c, frames)
        })
        .collect();
    let total = parts.into_iter().fold(ChunkStats::default(), ChunkStats::merge);

    let rate = total.captures as f64 / n_frames as f64;
    let rate_se = if n_frames < 2 {
        f64::INFINITY
    } else {
        (rate * (1.0 - rate) / (n_frames - 1) as f64).sqrt()
    };
    Ok(SimulationReport {
        n_frames,
        seed,
        mean_attacker_payoff: total.attacker.mean,
        mean_defender_payoff: total.defender.mean,
        se_attacker_payoff: total.attacker.standard_error(),
        se_defender_payoff: total.defender.standard_error(),
        capture_rate: rate,
        capture_rate_se: rate_se,
        channels: total.channels,
    })
}

/// Probability that a frame contains at least one capture.
pub fn analytic_capture_rate(game: &SurveillanceGame, attacker: &AttackerStrategy, defender: &DefenderStrategy) -> f64 {
    let channels = &game.config().channels;
    let mut total = 0.0;
    for (i, &a) in attacker.probs.iter().enumerate() {
        let attacked = game.attack_actions()[i].attacked;
        for j in 0..game.n_outcomes() {
            let reach = a * game.chance(i, j);
            if reach == 0.0 {
                continue;
            }
            for (act, &d) in game.defend_actions(j).iter().zip(&defender.probs[j]) {
                let escape: f64 = act
                    .monitored
                    .iter()
                    .filter(|&t| attacked.contains(t))
                    .map(|t| 1.0 - channels[t].rho_attack)
                    .product();
                total += reach * d * (1.0 - escape);
            }
        }
    }
    total
}
