//! Per-channel sensing probabilities and the single-channel payoff table.
//!
//! The sensing layer is an energy detector calibrated for a constant false
//! alarm rate. Under an attack the emulated primary signal is present for the
//! whole sensing window, so the channel is declared disallowed with the
//! detection probability whether or not the real primary user transmits.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{ModelError, Result};

const PROB_SLACK: f64 = 1e-12;

/// Energy-detector operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingModel {
    pub n_samples: u32,
    pub p_f: f64,
    pub snr_linear: f64,
}

impl SensingModel {
    pub fn new(n_samples: u32, p_f: f64, snr_linear: f64) -> Result<Self> {
        let model = Self {
            n_samples,
            p_f,
            snr_linear,
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds a model from an SNR given in decibels.
    pub fn from_db(n_samples: u32, p_f: f64, snr_db: f64) -> Result<Self> {
        Self::new(n_samples, p_f, 10f64.powf(snr_db / 10.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_f > 0.0 && self.p_f < 1.0) {
            return Err(ModelError::Domain(format!(
                "false-alarm probability must lie in (0, 1), got {}",
                self.p_f
            )));
        }
        if self.n_samples == 0 {
            return Err(ModelError::Domain("n_samples must be at least 1".into()));
        }
        if !(self.snr_linear > 0.0 && self.snr_linear.is_finite()) {
            return Err(ModelError::Domain(format!(
                "snr must be positive and finite, got {}",
                self.snr_linear
            )));
        }
        Ok(())
    }

    pub fn detection_probability(&self) -> Result<f64> {
        detection_probability(self)
    }
}

/// Detection probability of a CFAR energy detector under the central-limit
/// approximation, unit noise power and a constant-envelope primary signal.
///
/// The threshold is `N + Qinv(P_f) * sqrt(2N)` and the statistic under the
/// signal hypothesis has mean `N(1 + snr)` and variance `2N(1 + 2 snr)`.
pub fn detection_probability(model: &SensingModel) -> Result<f64> {
    model.validate()?;
    let normal = Normal::standard();
    let n = f64::from(model.n_samples);
    let gamma = model.snr_linear;
    let q_inv = normal.inverse_cdf(1.0 - model.p_f);
    let threshold = n + q_inv * (2.0 * n).sqrt();
    let arg = (threshold - n * (1.0 + gamma)) / (2.0 * n * (1.0 + 2.0 * gamma)).sqrt();
    // Q(x) = Phi(-x)
    Ok(normal.cdf(-arg))
}

/// Probability that an attacked channel is sensed disallowed.
///
/// The emulated signal is indistinguishable from the primary signal and is
/// always on during an attack, so this is the detector's `P_d`. The
/// simulator draws sensing results from [`ChannelParams`] built with this
/// rule, so both sides share one generative model.
pub fn attacked_disallowed_probability(p_d: f64) -> f64 {
    p_d
}

/// Economic ratios, all relative to the attacker's channel-use gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioParams {
    /// attack cost / use gain
    pub k_a: f64,
    /// monitoring cost / use gain
    pub k_s: f64,
    /// penalty / use gain
    pub k_c: f64,
    /// capture gain / penalty (network demand)
    pub k_b: f64,
}

impl RatioParams {
    pub fn new(k_a: f64, k_s: f64, k_c: f64, k_b: f64) -> Result<Self> {
        let r = Self { k_a, k_s, k_c, k_b };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k_a", self.k_a),
            ("k_s", self.k_s),
            ("k_c", self.k_c),
            ("k_b", self.k_b),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ModelError::Domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Absolute economics with the use gain normalised to 1.
    pub fn expand(&self) -> Economics {
        Economics {
            cost_attack: self.k_a,
            gain_attack: 1.0,
            cost_surveillance: self.k_s,
            gain_surveillance: self.k_b * self.k_c,
            penalty: self.k_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Economics {
    pub cost_attack: f64,
    pub gain_attack: f64,
    pub cost_surveillance: f64,
    pub gain_surveillance: f64,
    pub penalty: f64,
}

/// Physical and economic description of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Probability that the primary user is present.
    pub pi: f64,
    /// P(disallowed | no attack).
    pub p_disallowed_no_attack: f64,
    /// P(disallowed | attack).
    pub p_disallowed_attack: f64,
    /// P(primary absent | disallowed, no attack).
    pub rho_no_attack: f64,
    /// P(primary absent | disallowed, attack).
    pub rho_attack: f64,
    pub cost_attack: f64,
    pub gain_attack: f64,
    pub cost_surveillance: f64,
    /// Capture gain of the defender (written G_M or G_S depending on the table).
    pub gain_surveillance: f64,
    pub penalty: f64,
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(ModelError::Domain(format!(
            "{name} must lie in [0, 1], got {v}"
        )));
    }
    Ok(())
}

impl ChannelParams {
    /// Channel whose sensing is described by a detector operating point.
    pub fn from_operating_point(pi: f64, p_d: f64, p_f: f64, econ: &RatioParams) -> Result<Self> {
        check_prob("pi", pi)?;
        check_prob("p_d", p_d)?;
        check_prob("p_f", p_f)?;
        econ.validate()?;
        let p_n = pi * p_d + (1.0 - pi) * p_f;
        if p_n <= 0.0 {
            return Err(ModelError::Degenerate(
                "P(disallowed | no attack) is zero (pi = 0 and p_f = 0)".into(),
            ));
        }
        let p_a = attacked_disallowed_probability(p_d);
        let rho_n = (1.0 - pi) * p_f / p_n;
        // PU presence is independent of the sensing result under attack.
        let rho_a = 1.0 - pi;
        let e = econ.expand();
        let ch = Self {
            pi,
            p_disallowed_no_attack: p_n,
            p_disallowed_attack: p_a,
            rho_no_attack: rho_n,
            rho_attack: rho_a,
            cost_attack: e.cost_attack,
            gain_attack: e.gain_attack,
            cost_surveillance: e.cost_surveillance,
            gain_surveillance: e.gain_surveillance,
            penalty: e.penalty,
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        check_prob("pi", self.pi)?;
        check_prob("p_disallowed_no_attack", self.p_disallowed_no_attack)?;
        check_prob("p_disallowed_attack", self.p_disallowed_attack)?;
        check_prob("rho_no_attack", self.rho_no_attack)?;
        check_prob("rho_attack", self.rho_attack)?;
        for (name, v) in [
            ("cost_attack", self.cost_attack),
            ("gain_attack", self.gain_attack),
            ("cost_surveillance", self.cost_surveillance),
            ("gain_surveillance", self.gain_surveillance),
            ("penalty", self.penalty),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ModelError::Domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        // Joint masses P(disallowed, PU absent) and P(disallowed, PU present)
        // cannot exceed the priors of absence and presence.
        for (label, p, rho) in [
            ("no attack", self.p_disallowed_no_attack, self.rho_no_attack),
            ("attack", self.p_disallowed_attack, self.rho_attack),
        ] {
            if rho * p > 1.0 - self.pi + PROB_SLACK {
                return Err(ModelError::Domain(format!(
                    "P(disallowed, PU absent | {label}) = {} exceeds 1 - pi = {}",
                    rho * p,
                    1.0 - self.pi
                )));
            }
            if (1.0 - rho) * p > self.pi + PROB_SLACK {
                return Err(ModelError::Domain(format!(
                    "P(disallowed, PU present | {label}) = {} exceeds pi = {}",
                    (1.0 - rho) * p,
                    self.pi
                )));
            }
        }
        Ok(())
    }

    /// Probability of a disallowed sensing result for this channel.
    pub fn disallowed_probability(&self, attacked: bool) -> f64 {
        if attacked {
            self.p_disallowed_attack
        } else {
            self.p_disallowed_no_attack
        }
    }

    /// P(disallowed | PU presence, attack flag), recovered from the joint
    /// masses stored in the channel. Used to sample frames generatively.
    pub fn disallowed_given_presence(&self, pu_present: bool, attacked: bool) -> f64 {
        let (p, rho) = if attacked {
            (self.p_disallowed_attack, self.rho_attack)
        } else {
            (self.p_disallowed_no_attack, self.rho_no_attack)
        };
        let (mass, prior) = if pu_present {
            ((1.0 - rho) * p, self.pi)
        } else {
            (rho * p, 1.0 - self.pi)
        };
        if prior <= 0.0 {
            0.0
        } else {
            (mass / prior).clamp(0.0, 1.0)
        }
    }

    /// Scales every payoff parameter by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            cost_attack: self.cost_attack * factor,
            gain_attack: self.gain_attack * factor,
            cost_surveillance: self.cost_surveillance * factor,
            gain_surveillance: self.gain_surveillance * factor,
            penalty: self.penalty * factor,
            ..*self
        }
    }
}

/// Derives a channel from the PU presence probability, the detector and the
/// economic ratios.
pub fn derive_channel(pi: f64, model: &SensingModel, econ: &RatioParams) -> Result<ChannelParams> {
    let p_d = detection_probability(model)?;
    ChannelParams::from_operating_point(pi, p_d, model.p_f, econ)
}

/// Payoff pair of one action profile.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PayoffPair {
    pub defender: f64,
    pub attacker: f64,
}

impl std::ops::Add for PayoffPair {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            defender: self.defender + rhs.defender,
            attacker: self.attacker + rhs.attacker,
        }
    }
}

impl std::ops::AddAssign for PayoffPair {
    fn add_assign(&mut self, rhs: Self) {
        self.defender += rhs.defender;
        self.attacker += rhs.attacker;
    }
}

/// Expected payoffs on one channel for the given attack / sensing /
/// surveillance status. Surveillance is only possible on disallowed channels.
pub fn payoff_cell(
    channel: &ChannelParams,
    attacked: bool,
    sensed_disallowed: bool,
    monitored: bool,
) -> Result<PayoffPair> {
    if monitored && !sensed_disallowed {
        return Err(ModelError::Contract(
            "an allowed channel cannot be monitored".into(),
        ));
    }
    let c = channel;
    let cell = match (attacked, sensed_disallowed, monitored) {
        (false, _, false) => PayoffPair::default(),
        (false, true, true) => PayoffPair {
            defender: -c.cost_surveillance,
            attacker: 0.0,
        },
        (true, false, _) => PayoffPair {
            defender: 0.0,
            attacker: -c.cost_attack,
        },
        (true, true, false) => PayoffPair {
            defender: 0.0,
            attacker: -c.cost_attack + c.rho_attack * c.gain_attack,
        },
        (true, true, true) => PayoffPair {
            defender: -c.cost_surveillance + c.rho_attack * c.gain_surveillance,
            attacker: -c.cost_attack - c.rho_attack * c.penalty,
        },
        (false, false, true) => unreachable!(),
    };
    Ok(cell)
}
