//! Simulated payoffs and sensing frequencies against their expectations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use survgame::baselines::random_strategy;
use survgame::equilibrium::{expected_payoffs, solve_game};
use survgame::instances::{random_config, reference_config, RandomRanges};
use survgame::simulator::{analytic_capture_rate, simulate};
use survgame::{AttackerStrategy, DefenderStrategy, RatioParams, SolveOptions, SurveillanceGame};

const FRAMES: u64 = 1_000_000;
const SEED: u64 = 20_240_601;

fn within(mean: f64, se: f64, target: f64) -> bool {
    (mean - target).abs() <= 3.0 * se
}

#[test]
fn lone_attacker_against_idle_defender() {
    let econ = RatioParams::new(0.2, 0.1, 3.0, 0.5).unwrap();
    let cfg = survgame::GameConfig::homogeneous(1, 1, &[0.2], 0.908, 0.1, &econ).unwrap();
    let game = SurveillanceGame::new(cfg).unwrap();
    let r = simulate(&game, &AttackerStrategy::pure(&game, 1), &DefenderStrategy::idle(&game), FRAMES, SEED).unwrap();
    let target = -0.2 + 0.908 * 0.8;
    assert!(within(r.mean_attacker_payoff, r.se_attacker_payoff, target), "{} ± {}", r.mean_attacker_payoff, r.se_attacker_payoff);
    assert_eq!(r.mean_defender_payoff, 0.0);
}

#[test]
fn equilibrium_payoffs_on_reference_instance() {
    let game = SurveillanceGame::new(reference_config(3.0, 0.5).unwrap()).unwrap();
    let res = solve_game(&game, &SolveOptions::default()).unwrap();
    let r = simulate(&game, &res.attacker, &res.defender, FRAMES, SEED).unwrap();
    assert!(within(r.mean_attacker_payoff, r.se_attacker_payoff, res.omega_attacker));
    assert!(within(r.mean_defender_payoff, r.se_defender_payoff, res.omega_defender));
    let capture = analytic_capture_rate(&game, &res.attacker, &res.defender);
    assert!(within(r.capture_rate, r.capture_rate_se, capture), "{} vs {capture}", r.capture_rate);
}

#[test]
fn sensing_frequencies_and_payoffs_on_random_play() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let game = SurveillanceGame::new(random_config(&mut rng, 3, 2, 2, &RandomRanges::default()).unwrap()).unwrap();
    let k = game.attack_actions().len();
    let att = AttackerStrategy { probs: vec![1.0 / k as f64; k] };
    let def = random_strategy(&game);
    let r = simulate(&game, &att, &def, FRAMES, SEED).unwrap();
    let om = expected_payoffs(&game, &att, &def);
    assert!(within(r.mean_attacker_payoff, r.se_attacker_payoff, om.attacker));
    assert!(within(r.mean_defender_payoff, r.se_defender_payoff, om.defender));
    for (c, ch) in r.channels.iter().zip(&game.config().channels) {
        for (hits, frames, p) in [
            (c.attacked_disallowed, c.attacked_frames, ch.p_disallowed_attack),
            (c.unattacked_disallowed, c.unattacked_frames, ch.p_disallowed_no_attack),
        ] {
            let freq = hits as f64 / frames as f64;
            let se = (p * (1.0 - p) / frames as f64).sqrt();
            assert!(within(freq, se, p), "{freq} vs {p}");
        }
    }
    let capture = analytic_capture_rate(&game, &att, &def);
    assert!(within(r.capture_rate, r.capture_rate_se, capture));
}
