//! Python bindings: build a game, solve it, compare against the
//! single-channel closed form and simulate play.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use survgame::baselines::solve_single_channel;
use survgame::equilibrium::solve_game;
use survgame::sequence::SequenceFormGame;
use survgame::simulator;
use survgame::{ChannelParams, EquilibriumResult, GameConfig, ModelError, RatioParams, SensingModel, SolveOptions, SurveillanceGame};

fn value_err(e: ModelError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// One channel's derived sensing and payoff parameters.
#[pyclass(module = "survgame_py", frozen, from_py_object)]
#[derive(Clone)]
pub struct Channel {
    inner: ChannelParams,
}

#[pymethods]
impl Channel {
    #[new]
    #[pyo3(signature = (pi, p_d, p_f, k_a, k_s, k_c, k_b))]
    fn new(pi: f64, p_d: f64, p_f: f64, k_a: f64, k_s: f64, k_c: f64, k_b: f64) -> PyResult<Self> {
        let econ = RatioParams::new(k_a, k_s, k_c, k_b).map_err(value_err)?;
        let inner = ChannelParams::from_operating_point(pi, p_d, p_f, &econ).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn pi(&self) -> f64 {
        self.inner.pi
    }

    #[getter]
    fn p_disallowed_no_attack(&self) -> f64 {
        self.inner.p_disallowed_no_attack
    }

    #[getter]
    fn p_disallowed_attack(&self) -> f64 {
        self.inner.p_disallowed_attack
    }

    #[getter]
    fn rho_no_attack(&self) -> f64 {
        self.inner.rho_no_attack
    }

    #[getter]
    fn rho_attack(&self) -> f64 {
        self.inner.rho_attack
    }

    fn __repr__(&self) -> String {
        format!("Channel(pi={}, p_N={:.6}, p_A={:.6})", self.inner.pi, self.inner.p_disallowed_no_attack, self.inner.p_disallowed_attack)
    }
}

/// A surveillance game over one or more channels.
#[pyclass(module = "survgame_py", frozen)]
pub struct Game {
    inner: SurveillanceGame,
}

#[pymethods]
impl Game {
    /// Homogeneous economics over channels with presence probabilities `pis`.
    #[new]
    #[pyo3(signature = (pis, k_a, k_s, k_c, k_b, max_attack=1, max_monitor=1, n_samples=1500, p_f=0.1, snr_db=-10.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        pis: Vec<f64>,
        k_a: f64,
        k_s: f64,
        k_c: f64,
        k_b: f64,
        max_attack: usize,
        max_monitor: usize,
        n_samples: u32,
        p_f: f64,
        snr_db: f64,
    ) -> PyResult<Self> {
        let econ = RatioParams::new(k_a, k_s, k_c, k_b).map_err(value_err)?;
        let sensing = SensingModel::from_db(n_samples, p_f, snr_db).map_err(value_err)?;
        let p_d = sensing.detection_probability().map_err(value_err)?;
        let cfg = GameConfig::homogeneous(max_attack, max_monitor, &pis, p_d, p_f, &econ).map_err(value_err)?;
        Ok(Self {
            inner: SurveillanceGame::new(cfg).map_err(value_err)?,
        })
    }

    /// Game from explicit channels.
    #[staticmethod]
    #[pyo3(signature = (channels, max_attack=1, max_monitor=1))]
    fn from_channels(channels: Vec<Channel>, max_attack: usize, max_monitor: usize) -> PyResult<Self> {
        let cfg = GameConfig::new(max_attack, max_monitor, channels.into_iter().map(|c| c.inner).collect()).map_err(value_err)?;
        Ok(Self {
            inner: SurveillanceGame::new(cfg).map_err(value_err)?,
        })
    }

    #[getter]
    fn n_channels(&self) -> usize {
        self.inner.n_channels()
    }

    #[getter]
    fn channels(&self) -> Vec<Channel> {
        self.inner.config().channels.iter().map(|c| Channel { inner: *c }).collect()
    }

    /// Attacked channel sets, one-based, dot separated; `none` for no attack.
    #[getter]
    fn attack_actions(&self) -> Vec<String> {
        self.inner.attack_actions().iter().map(|a| a.attacked.label()).collect()
    }

    /// Sequence-form payoff matrix shape `(attacker, defender)`.
    #[getter]
    fn sequence_form_dims(&self) -> (usize, usize) {
        SequenceFormGame::build(&self.inner, Default::default()).payoff_dims()
    }
}

/// A verified equilibrium.
#[pyclass(module = "survgame_py", frozen)]
pub struct Equilibrium {
    inner: EquilibriumResult,
    attack_marginals: Vec<f64>,
    monitor_marginals: Vec<Vec<f64>>,
}

#[pymethods]
impl Equilibrium {
    #[getter]
    fn omega_attacker(&self) -> f64 {
        self.inner.omega_attacker
    }

    #[getter]
    fn omega_defender(&self) -> f64 {
        self.inner.omega_defender
    }

    /// Probability of each attack action, ordered like `Game.attack_actions`.
    #[getter]
    fn attacker(&self) -> Vec<f64> {
        self.inner.attacker.probs.clone()
    }

    /// Per sensing outcome, the probability of each defend action.
    #[getter]
    fn defender(&self) -> Vec<Vec<f64>> {
        self.inner.defender.probs.clone()
    }

    #[getter]
    fn attack_marginals(&self) -> Vec<f64> {
        self.attack_marginals.clone()
    }

    /// `[outcome][channel]` monitoring probabilities.
    #[getter]
    fn monitor_marginals(&self) -> Vec<Vec<f64>> {
        self.monitor_marginals.clone()
    }

    #[getter]
    fn gaps(&self) -> (f64, f64) {
        (self.inner.best_response_gap_attacker, self.inner.best_response_gap_defender)
    }

    #[getter]
    fn lcp_residual(&self) -> f64 {
        self.inner.lcp_residual.max()
    }

    #[getter]
    fn pivots(&self) -> usize {
        self.inner.pivots
    }

    fn __repr__(&self) -> String {
        format!("Equilibrium(omega_attacker={:.6}, omega_defender={:.6})", self.inner.omega_attacker, self.inner.omega_defender)
    }
}

/// Solves the game and verifies the result by best-response enumeration.
#[pyfunction]
#[pyo3(signature = (game, tolerance=1e-7))]
fn solve(py: Python<'_>, game: &Game, tolerance: f64) -> PyResult<Equilibrium> {
    let options = SolveOptions {
        gap_tolerance: tolerance,
        ..SolveOptions::default()
    };
    let inner = py
        .detach(|| solve_game(&game.inner, &options))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(Equilibrium {
        attack_marginals: inner.attacker.channel_marginals(&game.inner),
        monitor_marginals: inner.defender.channel_marginals(&game.inner),
        inner,
    })
}

/// Closed-form equilibrium of one channel: `(attack_prob, surveillance_prob, regime)`.
#[pyfunction]
fn single_channel(channel: &Channel) -> PyResult<(f64, f64, String)> {
    let ne = solve_single_channel(&channel.inner).map_err(value_err)?;
    Ok((ne.attack_prob, ne.surveillance_prob, format!("{:?}", ne.regime)))
}

/// Plays `n_frames` independent frames of the equilibrium.
#[pyfunction]
#[pyo3(signature = (game, equilibrium, n_frames, seed))]
fn simulate<'py>(py: Python<'py>, game: &Game, equilibrium: &Equilibrium, n_frames: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let eq = &equilibrium.inner;
    let report = py
        .detach(|| simulator::simulate(&game.inner, &eq.attacker, &eq.defender, n_frames, seed))
        .map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("n_frames", report.n_frames)?;
    out.set_item("seed", report.seed)?;
    out.set_item("mean_attacker", report.mean_attacker_payoff)?;
    out.set_item("mean_defender", report.mean_defender_payoff)?;
    out.set_item("se_attacker", report.se_attacker_payoff)?;
    out.set_item("se_defender", report.se_defender_payoff)?;
    out.set_item("capture_rate", report.capture_rate)?;
    out.set_item("se_capture_rate", report.capture_rate_se)?;
    Ok(out)
}

/// Energy-detector detection probability under constant false alarm rate.
#[pyfunction]
#[pyo3(signature = (n_samples=1500, p_f=0.1, snr_db=-10.0))]
fn detection_probability(n_samples: u32, p_f: f64, snr_db: f64) -> PyResult<f64> {
    SensingModel::from_db(n_samples, p_f, snr_db)
        .and_then(|m| m.detection_probability())
        .map_err(value_err)
}

/// Sequence-form shape for `n` channels without building a game.
#[pyfunction]
#[pyo3(signature = (n, max_attack=1, max_monitor=1))]
fn sequence_form_dims(n: usize, max_attack: usize, max_monitor: usize) -> (u128, u128) {
    (
        survgame::game::extended_attacker_sequence_count(n, max_attack),
        survgame::game::defender_sequence_count(n, max_monitor),
    )
}

#[pymodule]
fn survgame_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Channel>()?;
    m.add_class::<Game>()?;
    m.add_class::<Equilibrium>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(single_channel, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(detection_probability, m)?)?;
    m.add_function(wrap_pyfunction!(sequence_form_dims, m)?)?;
    Ok(())
}
