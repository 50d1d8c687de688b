//! Experiment configuration read from TOML.

use std::path::Path;

use serde::Deserialize;
use survgame::channel::{detection_probability, ChannelParams, RatioParams, SensingModel};
use survgame::sequence::{ChanceCoupling, Representation};
use survgame::{GameConfig, SolveOptions};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    #[serde(default = "one")]
    pub max_attack: usize,
    #[serde(default = "one")]
    pub max_monitor: usize,
    /// PU presence probability per channel; its length is N.
    pub pi: Vec<f64>,
    #[serde(default = "default_n_samples")]
    pub n_samples: u32,
    #[serde(default = "default_p_f")]
    pub p_f: f64,
    #[serde(default = "default_snr_db")]
    pub snr_db: f64,
    /// Overrides the detector-derived detection probability.
    pub p_d: Option<f64>,
}

fn one() -> usize {
    1
}
fn default_n_samples() -> u32 {
    1500
}
fn default_p_f() -> f64 {
    0.1
}
fn default_snr_db() -> f64 {
    -10.0
}

impl Default for GameSection {
    fn default() -> Self {
        Self {
            max_attack: 1,
            max_monitor: 1,
            pi: vec![0.2, 0.5],
            n_samples: default_n_samples(),
            p_f: default_p_f(),
            snr_db: default_snr_db(),
            p_d: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EconomicsSection {
    pub k_a: f64,
    pub k_s: f64,
    pub k_c: f64,
    pub k_b: f64,
}

impl Default for EconomicsSection {
    fn default() -> Self {
        Self {
            k_a: 0.2,
            k_s: 0.1,
            k_c: 0.4,
            k_b: 0.5,
        }
    }
}

/// Either an explicit list or `{ start, stop, steps }` with both ends included.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Linspace { start: f64, stop: f64, steps: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Linspace { start, stop, steps } => match steps {
                0 => Vec::new(),
                1 => vec![start],
                _ => (0..steps)
                    .map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64)
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub k_b: Option<Grid>,
    pub k_c: Option<Grid>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationChoice {
    #[default]
    Extended,
    Reduced,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_n_frames")]
    pub n_frames: u64,
    /// Largest accepted best-response gap.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Worker threads for sweeps; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub representation: RepresentationChoice,
}

fn default_seed() -> u64 {
    20240601
}
fn default_n_frames() -> u64 {
    1_000_000
}
fn default_tolerance() -> f64 {
    1e-7
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: default_seed(),
            n_frames: default_n_frames(),
            tolerance: default_tolerance(),
            workers: 0,
            representation: RepresentationChoice::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    #[serde(default = "default_bench_n")]
    pub n_values: Vec<usize>,
    /// Largest strategic-form payoff table, in cells.
    #[serde(default = "default_cell_budget")]
    pub cell_budget: u64,
    /// Largest support size tried by support enumeration.
    #[serde(default = "default_max_support")]
    pub max_support: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Per-cell wall-clock limit in seconds.
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

fn default_bench_n() -> Vec<usize> {
    vec![2, 3, 4]
}
fn default_cell_budget() -> u64 {
    1_000_000
}
fn default_max_support() -> usize {
    2
}
fn default_repeats() -> usize {
    3
}
fn default_timeout() -> f64 {
    600.0
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            n_values: default_bench_n(),
            cell_budget: default_cell_budget(),
            max_support: default_max_support(),
            repeats: default_repeats(),
            timeout_secs: default_timeout(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub game: GameSection,
    #[serde(default)]
    pub economics: EconomicsSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub bench: BenchSection,
}

fn check_probability(key: &str, value: f64) -> Result<(), ConfigError> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(invalid(key, format!("{value} is not in [0, 1]")));
    }
    Ok(())
}

fn check_positive(key: &str, value: f64) -> Result<(), ConfigError> {
    if !(value.is_finite() && value > 0.0) {
        return Err(invalid(key, format!("{value} must be finite and positive")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Field-level checks with the offending key in the message.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.game;
        if g.pi.is_empty() {
            return Err(invalid("game.pi", "at least one channel is required"));
        }
        for (i, &p) in g.pi.iter().enumerate() {
            check_probability(&format!("game.pi[{i}]"), p)?;
        }
        if g.max_attack == 0 {
            return Err(invalid("game.max_attack", "must be at least 1"));
        }
        if g.max_monitor == 0 {
            return Err(invalid("game.max_monitor", "must be at least 1"));
        }
        if g.n_samples == 0 {
            return Err(invalid("game.n_samples", "must be at least 1"));
        }
        check_probability("game.p_f", g.p_f)?;
        if !g.snr_db.is_finite() {
            return Err(invalid("game.snr_db", "must be finite"));
        }
        if let Some(p_d) = g.p_d {
            check_probability("game.p_d", p_d)?;
        }
        let e = &self.economics;
        check_positive("economics.k_a", e.k_a)?;
        check_positive("economics.k_s", e.k_s)?;
        check_positive("economics.k_c", e.k_c)?;
        check_positive("economics.k_b", e.k_b)?;
        for (name, grid) in [("sweep.k_b", &self.sweep.k_b), ("sweep.k_c", &self.sweep.k_c)] {
            if let Some(grid) = grid {
                let values = grid.values();
                if values.is_empty() {
                    return Err(invalid(name, "grid is empty"));
                }
                for (i, &v) in values.iter().enumerate() {
                    check_positive(&format!("{name}[{i}]"), v)?;
                }
            }
        }
        let r = &self.run;
        check_positive("run.tolerance", r.tolerance)?;
        if r.n_frames == 0 {
            return Err(invalid("run.n_frames", "must be at least 1"));
        }
        let b = &self.bench;
        if b.n_values.is_empty() || b.n_values.contains(&0) {
            return Err(invalid("bench.n_values", "must list channel counts of at least 1"));
        }
        if b.repeats == 0 {
            return Err(invalid("bench.repeats", "must be at least 1"));
        }
        check_positive("bench.timeout_secs", b.timeout_secs)?;
        Ok(())
    }

    pub fn sensing(&self) -> Result<SensingModel, ConfigError> {
        SensingModel::from_db(self.game.n_samples, self.game.p_f, self.game.snr_db)
            .map_err(|e| invalid("game", e.to_string()))
    }

    pub fn detection_probability(&self) -> Result<f64, ConfigError> {
        match self.game.p_d {
            Some(p_d) => Ok(p_d),
            None => detection_probability(&self.sensing()?).map_err(|e| invalid("game", e.to_string())),
        }
    }

    pub fn ratios(&self, k_c: f64, k_b: f64) -> Result<RatioParams, ConfigError> {
        RatioParams::new(self.economics.k_a, self.economics.k_s, k_c, k_b)
            .map_err(|e| invalid("economics", e.to_string()))
    }

    /// Game with the configured economics but the given penalty and demand.
    pub fn game_with(&self, pis: &[f64], k_c: f64, k_b: f64) -> Result<GameConfig, ConfigError> {
        let econ = self.ratios(k_c, k_b)?;
        let p_d = self.detection_probability()?;
        let channels = pis
            .iter()
            .enumerate()
            .map(|(i, &pi)| {
                ChannelParams::from_operating_point(pi, p_d, self.game.p_f, &econ)
                    .map_err(|e| invalid(format!("game.pi[{i}]"), e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        GameConfig::new(self.game.max_attack, self.game.max_monitor, channels)
            .map_err(|e| invalid("game", e.to_string()))
    }

    pub fn game_config(&self) -> Result<GameConfig, ConfigError> {
        self.game_with(&self.game.pi, self.economics.k_c, self.economics.k_b)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            representation: match self.run.representation {
                RepresentationChoice::Extended => Representation::Extended(ChanceCoupling::Consistent),
                RepresentationChoice::Reduced => Representation::Reduced,
            },
            gap_tolerance: self.run.tolerance,
            ..SolveOptions::default()
        }
    }

    /// Sweep grid as `(k_c, k_b)` pairs, k_c outermost. Missing grids fall
    /// back to the single value from `[economics]`.
    pub fn sweep_points(&self) -> Result<Vec<(f64, f64)>, ConfigError> {
        if self.sweep.k_b.is_none() && self.sweep.k_c.is_none() {
            return Err(invalid("sweep", "sweep mode needs a k_b or k_c grid"));
        }
        let k_cs = self.sweep.k_c.as_ref().map_or(vec![self.economics.k_c], Grid::values);
        let k_bs = self.sweep.k_b.as_ref().map_or(vec![self.economics.k_b], Grid::values);
        Ok(k_cs
            .iter()
            .flat_map(|&k_c| k_bs.iter().map(move |&k_b| (k_c, k_b)))
            .collect())
    }
}
