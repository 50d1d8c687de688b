//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary. It exits 0 even when a criterion fails so the
//! report is always printed in full; set `ACCEPTANCE_STRICT=1` to turn any
//! FAIL into a nonzero exit.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use survgame::baselines::{
    build_normal_form, decomposition_deviation, single_channel_product, support_enumeration_ne, DEFAULT_CELL_BUDGET,
    SupportEnumerationOptions,
};
use survgame::channel::detection_probability;
use survgame::equilibrium::{solve_game, verify_equilibrium};
use survgame::game::extended_attacker_sequence_count;
use survgame::instances::{default_sensing, random_config, reference_config, RandomRanges, REFERENCE_K_A, REFERENCE_K_S, REFERENCE_PIS};
use survgame::sequence::Representation;
use survgame::{EquilibriumResult, GameConfig, SequenceFormGame, SolveOptions, SurveillanceGame};
use survgame_cli::config::{EconomicsSection, Grid, GameSection, SweepSection};
use survgame_cli::{run_bench, run_simulate, run_sweep, CellStatus, ExperimentConfig, SweepOutput};

const SIZE_RUNTIME: Duration = Duration::from_secs(1);
const SUITE_SIZE: usize = 100;
const SUITE_SEED: u64 = 2024;
const SUITE_RUNTIME: Duration = Duration::from_secs(300);
const GAP_TOL: f64 = 1e-7;
const LCP_TOL: f64 = 1e-9;
const PAYOFF_MATCH_TOL: f64 = 1e-6;
const DECOMPOSITION_INSTANCES: usize = 20;
const DECOMPOSITION_SEED: u64 = 77;
const DECOMPOSITION_TOL: f64 = 1e-6;
const SWEEP_K_C: [f64; 3] = [0.4, 3.0, 10.0];
const SWEEP_STEPS: usize = 50;
const REFINE_STEPS: usize = 101;
/// Probabilities at or below this count as zero when reading regions.
const POSITIVE_TOL: f64 = 1e-9;
const DOMINANCE_TOL: f64 = 1e-7;
const BENCH_MAX_SUPPORT: usize = 2;
const BENCH_REPEATS: usize = 3;
const BENCH_LIMIT_SECS: f64 = 600.0;
const MC_FRAMES: u64 = 1_000_000;
const MC_SEED: u64 = 20240601;
const MC_RANDOM_INSTANCES: usize = 10;
const MC_Z_LIMIT: f64 = 3.0;
const MC_REFERENCE: (f64, f64) = (3.0, 0.5);
const DETECTION_RANGE: (f64, f64) = (0.90, 0.92);
const DETECTOR_TRIALS: usize = 20_000;
/// Sampling noise allowance in standard errors, plus the Gaussian
/// approximation's own error.
const DETECTOR_SE_MULT: f64 = 4.0;
const DETECTOR_APPROX_TOL: f64 = 5e-3;
/// Upper 10% point of the standard normal.
const Q_INV_0_1: f64 = 1.281_551_565_544_600_4;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} criterion {id} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
    }

    fn note(&self, text: String) {
        println!("     {text}");
    }
}

fn game(cfg: GameConfig) -> SurveillanceGame {
    SurveillanceGame::new(cfg).expect("valid game")
}

fn sizes(report: &mut Report) {
    let start = Instant::now();
    let g4 = game(reference_like(4, 1, 1));
    let (r4, c4) = SequenceFormGame::build(&g4, Representation::default()).payoff_dims();
    let nf2 = build_normal_form(&game(reference_config(3.0, 0.5).unwrap()), DEFAULT_CELL_BUDGET).unwrap();
    let mut formula_mismatch = Vec::new();
    for n in 1..=5 {
        for m in 1..=2.min(n) {
            let g = game(reference_like(n, m, 1));
            let built = SequenceFormGame::build(&g, Representation::default()).payoff_dims().0 as u128;
            let formula = extended_attacker_sequence_count(n, m);
            if built != formula {
                formula_mismatch.push(format!("N={n} M={m}: built {built} vs formula {formula}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = (r4, c4) == (86, 48) && nf2.dims() == (3, 12) && formula_mismatch.is_empty() && elapsed < SIZE_RUNTIME;
    report.line(
        1,
        "matrix sizes",
        pass,
        format!(
            "sequence form N=4 {r4}x{c4}, strategic N=2 {}x{}, attacker-sequence formula mismatches {}, {:.3} s",
            nf2.dims().0,
            nf2.dims().1,
            formula_mismatch.len(),
            elapsed.as_secs_f64()
        ),
    );
    for m in formula_mismatch {
        report.note(m);
    }
}

/// Reference economics with presence probabilities spread over [0.2, 0.5].
fn reference_like(n: usize, m: usize, l: usize) -> GameConfig {
    let pis = survgame_cli::bench::bench_pis(n);
    let econ = survgame::RatioParams::new(REFERENCE_K_A, REFERENCE_K_S, 3.0, 0.5).unwrap();
    let p_d = detection_probability(&default_sensing()).unwrap();
    GameConfig::homogeneous(m, l, &pis, p_d, default_sensing().p_f, &econ).unwrap()
}

struct SuiteEntry {
    game: SurveillanceGame,
    result: Result<EquilibriumResult, String>,
}

fn random_suite() -> (Vec<SuiteEntry>, Duration) {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let start = Instant::now();
    let entries = (0..SUITE_SIZE)
        .map(|i| {
            let n = 1 + i % 3;
            let g = game(random_config(&mut rng, n, 1, 1, &RandomRanges::default()).unwrap());
            let result = solve_game(&g, &SolveOptions::default()).map_err(|e| e.to_string());
            SuiteEntry { game: g, result }
        })
        .collect();
    (entries, start.elapsed())
}

fn validity(report: &mut Report, suite: &[SuiteEntry], elapsed: Duration) {
    let mut worst_gap = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut errors = Vec::new();
    for (i, e) in suite.iter().enumerate() {
        match &e.result {
            Ok(r) => {
                worst_gap = worst_gap.max(r.gaps().max());
                worst_residual = worst_residual.max(r.lcp_residual.max());
            }
            Err(msg) => errors.push(format!("instance {i}: {msg}")),
        }
    }
    let pass = errors.is_empty() && worst_gap <= GAP_TOL && worst_residual <= LCP_TOL && elapsed < SUITE_RUNTIME;
    report.line(
        2,
        "equilibrium validity",
        pass,
        format!(
            "{SUITE_SIZE} instances, {} solver errors, worst gap {worst_gap:.2e} (<= {GAP_TOL:e}), worst LCP residual {worst_residual:.2e} (<= {LCP_TOL:e}), {:.2} s",
            errors.len(),
            elapsed.as_secs_f64()
        ),
    );
    for e in errors {
        report.note(e);
    }
}

fn cross_oracle(report: &mut Report, suite: &[SuiteEntry]) {
    let mut checked = 0;
    let mut misses = Vec::new();
    for (i, e) in suite.iter().enumerate().filter(|(_, e)| e.game.n_channels() == 2) {
        let Ok(r) = &e.result else {
            misses.push(format!("instance {i}: no sequence-form solution"));
            continue;
        };
        checked += 1;
        let nf = build_normal_form(&e.game, DEFAULT_CELL_BUDGET).unwrap();
        let eqs = support_enumeration_ne(&nf, &SupportEnumerationOptions::default()).unwrap();
        let best = eqs
            .iter()
            .map(|q| (q.payoffs.attacker - r.omega_attacker).abs().max((q.payoffs.defender - r.omega_defender).abs()))
            .fold(f64::INFINITY, f64::min);
        if best > PAYOFF_MATCH_TOL {
            misses.push(format!(
                "instance {i}: {} strategic equilibria, closest payoff distance {best:.2e}",
                eqs.len()
            ));
        }
    }
    report.line(
        3,
        "cross-oracle payoffs",
        misses.is_empty() && checked > 0,
        format!("{checked} two-channel instances, {} without a strategic equilibrium within {PAYOFF_MATCH_TOL:e}", misses.len()),
    );
    for m in misses {
        report.note(m);
    }
}

fn decomposition(report: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(DECOMPOSITION_SEED);
    let mut worst_attacker = 0.0f64;
    let mut worst_defender = 0.0f64;
    let mut defender_misses = 0;
    let mut worst_product_gap = 0.0f64;
    let mut errors = 0;
    for i in 0..DECOMPOSITION_INSTANCES {
        let n = 2 + i % 2;
        let g = game(random_config(&mut rng, n, n, n, &RandomRanges::default()).unwrap());
        let Ok(r) = solve_game(&g, &SolveOptions::default()) else {
            errors += 1;
            continue;
        };
        let dev = decomposition_deviation(&g, &r.attacker, &r.defender).unwrap();
        worst_attacker = worst_attacker.max(dev.attacker);
        worst_defender = worst_defender.max(dev.defender);
        if dev.defender > DECOMPOSITION_TOL {
            defender_misses += 1;
        }
        let (att, def) = single_channel_product(&g).unwrap();
        worst_product_gap = worst_product_gap.max(verify_equilibrium(&g, &att, &def).max());
    }
    let pass = errors == 0 && worst_attacker <= DECOMPOSITION_TOL && worst_defender <= DECOMPOSITION_TOL;
    report.line(
        4,
        "single-channel decomposition",
        pass,
        format!(
            "{DECOMPOSITION_INSTANCES} instances (L = M = N in {{2, 3}}), {errors} solver errors, worst attack-marginal deviation {worst_attacker:.2e}, worst monitoring-marginal deviation {worst_defender:.2e} ({defender_misses} instances over {DECOMPOSITION_TOL:e})"
        ),
    );
    report.note(format!(
        "the product of single-channel equilibria is itself an equilibrium (worst gap {worst_product_gap:.2e}); defender equilibria are not unique, so per-outcome monitoring rates need not match"
    ));
}

fn reference_sweep() -> SweepOutput {
    let cfg = reference_sweep_config(
        SWEEP_K_C.to_vec(),
        Grid::Linspace {
            start: 0.01,
            stop: 1.0,
            steps: SWEEP_STEPS,
        },
    );
    run_sweep(&cfg).expect("valid sweep")
}

fn reference_sweep_config(k_c: Vec<f64>, k_b: Grid) -> ExperimentConfig {
    ExperimentConfig {
        game: GameSection {
            pi: REFERENCE_PIS.to_vec(),
            ..GameSection::default()
        },
        economics: EconomicsSection {
            k_a: REFERENCE_K_A,
            k_s: REFERENCE_K_S,
            ..EconomicsSection::default()
        },
        sweep: SweepSection {
            k_c: Some(Grid::Values(k_c)),
            k_b: Some(k_b),
        },
        ..ExperimentConfig::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    /// No monitoring, channel 1 attacked surely.
    Quiet,
    OneMonitored,
    BothMonitored,
    Other,
}

fn region(p: &survgame_cli::SweepPoint) -> Region {
    let (Some(att), Some(mon)) = (p.attack_marginals(), p.monitor_marginals()) else {
        return Region::Other;
    };
    let monitored = (0..att.len())
        .filter(|&t| mon.iter().any(|m| m[t] > POSITIVE_TOL))
        .count();
    match monitored {
        0 if (att[0] - 1.0).abs() <= POSITIVE_TOL && att[1] <= POSITIVE_TOL => Region::Quiet,
        1 => Region::OneMonitored,
        2 => Region::BothMonitored,
        _ => Region::Other,
    }
}

/// Closed k_b interval covered by each maximal run of equal regions.
fn runs(points: &[&survgame_cli::SweepPoint]) -> Vec<(Region, f64, f64)> {
    let mut out: Vec<(Region, f64, f64)> = Vec::new();
    for p in points {
        let r = region(p);
        match out.last_mut() {
            Some(last) if last.0 == r => last.2 = p.k_b,
            _ => out.push((r, p.k_b, p.k_b)),
        }
    }
    out
}

fn regions(report: &mut Report, sweep: &SweepOutput) {
    let mut pass = sweep.all_verified();
    let mut onset = Vec::new();
    let mut notes = Vec::new();
    for &k_c in &SWEEP_K_C {
        let pts: Vec<_> = sweep.points.iter().filter(|p| p.k_c == k_c).collect();
        let rs = runs(&pts);
        let order_ok = rs.len() == 3
            && rs[0].0 == Region::Quiet
            && rs[1].0 == Region::OneMonitored
            && rs[2].0 == Region::BothMonitored;
        let prefix = rs.first().is_some_and(|r| r.0 == Region::Quiet);
        let band = rs.iter().any(|r| r.0 == Region::OneMonitored);
        let suffix = rs.last().is_some_and(|r| r.0 == Region::BothMonitored);
        pass &= order_ok;
        onset.push(if suffix { rs.last().unwrap().1 } else { f64::INFINITY });
        let desc: Vec<String> = rs
            .iter()
            .map(|(r, lo, hi)| format!("{r:?} [{lo:.4}, {hi:.4}]"))
            .collect();
        notes.push(format!(
            "k_C = {k_c}: prefix {} band {} suffix {}: {}",
            ok(prefix),
            ok(band),
            ok(suffix),
            desc.join(", ")
        ));
        if !band {
            if let Some(refined) = refine_band(k_c, &rs) {
                notes.push(refined);
            }
        }
    }
    let onset_ok = onset[2] <= onset[1];
    pass &= onset_ok;
    report.line(
        5,
        "region structure",
        pass,
        format!(
            "three ordered regions at every k_C, suffix onset k_b {:.4} at k_C = 10 vs {:.4} at k_C = 3 ({})",
            onset[2],
            onset[1],
            ok(onset_ok)
        ),
    );
    for n in notes {
        report.note(n);
    }
}

/// Finer grid between the last quiet point and the first doubly monitored
/// one, to show whether a one-channel band falls between grid points.
fn refine_band(k_c: f64, rs: &[(Region, f64, f64)]) -> Option<String> {
    let lo = rs.iter().find(|r| r.0 == Region::Quiet)?.2;
    let hi = rs.iter().find(|r| r.0 == Region::BothMonitored)?.1;
    let sweep = reference_sweep_config(vec![k_c], Grid::Linspace {
        start: lo,
        stop: hi,
        steps: REFINE_STEPS,
    });
    let out = run_sweep(&sweep).ok()?;
    let pts: Vec<_> = out.points.iter().collect();
    let band: Vec<String> = runs(&pts)
        .into_iter()
        .filter(|r| r.0 == Region::OneMonitored)
        .map(|(_, a, b)| format!("[{a:.4}, {b:.4}]"))
        .collect();
    Some(format!(
        "k_C = {k_c}: {REFINE_STEPS}-point refinement of k_b [{lo:.4}, {hi:.4}] finds one-channel band {}",
        if band.is_empty() { "nowhere".to_string() } else { band.join(", ") }
    ))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "missing"
    }
}

fn dominance(report: &mut Report, sweep: &SweepOutput) {
    let mut violations = Vec::new();
    let mut fixed_violations = 0;
    let mut worst = 0.0f64;
    for p in &sweep.points {
        let (Ok(r), Some(c)) = (&p.outcome, p.comparison) else {
            violations.push((p.k_c, p.k_b, f64::NAN));
            continue;
        };
        let shortfall = (c.uniform - r.omega_defender).max(c.random - r.omega_defender);
        if shortfall > DOMINANCE_TOL {
            worst = worst.max(shortfall);
            violations.push((p.k_c, p.k_b, shortfall));
        }
        if c.uniform_fixed - r.omega_defender > DOMINANCE_TOL || c.random_fixed - r.omega_defender > DOMINANCE_TOL {
            fixed_violations += 1;
        }
    }
    report.line(
        6,
        "defender-payoff dominance",
        violations.is_empty(),
        format!(
            "{} of {} grid points where uniform or random monitoring beats the equilibrium against a best-responding attacker by more than {DOMINANCE_TOL:e} (worst {worst:.4})",
            violations.len(),
            sweep.points.len()
        ),
    );
    for &k_c in &SWEEP_K_C {
        let hits: Vec<f64> = violations.iter().filter(|v| v.0 == k_c).map(|v| v.1).collect();
        if let (Some(lo), Some(hi)) = (hits.first(), hits.last()) {
            report.note(format!("k_C = {k_c}: {} points in k_b [{lo:.4}, {hi:.4}]", hits.len()));
        }
    }
    report.note(format!(
        "with the attacker held at its equilibrium strategy instead: {fixed_violations} grid points violate"
    ));
}

fn scaling(report: &mut Report) {
    let mut cfg = ExperimentConfig::default();
    cfg.bench.n_values = vec![3, 4];
    cfg.bench.repeats = BENCH_REPEATS;
    cfg.bench.max_support = BENCH_MAX_SUPPORT;
    cfg.bench.timeout_secs = BENCH_LIMIT_SECS;
    let out = run_bench(&cfg).expect("valid bench");
    let n3 = out.row(3).unwrap();
    let n4 = out.row(4).unwrap();
    let order = match (n3.seq_seconds, n3.strat_seconds) {
        (Some(s), Some(t)) => n3.seq_status == CellStatus::Ok && n3.strat_status == CellStatus::Ok && s < t,
        _ => false,
    };
    let feasible = n4.strat_status == CellStatus::BudgetExceeded
        && n4.seq_status == CellStatus::Ok
        && n4.seq_seconds.is_some_and(|s| s < BENCH_LIMIT_SECS);
    let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |s| format!("{s:.4} s"));
    report.line(
        7,
        "scaling benchmark",
        order && feasible,
        format!(
            "N=3 sequence {} vs strategic {} (support <= {BENCH_MAX_SUPPORT}, median of {BENCH_REPEATS}); N=4 strategic {} with budget {}, sequence {} {}",
            fmt(n3.seq_seconds),
            fmt(n3.strat_seconds),
            n4.strat_status.label(),
            out.cell_budget,
            n4.seq_status.label(),
            fmt(n4.seq_seconds)
        ),
    );
}

fn monte_carlo(report: &mut Report) {
    let mut configs = Vec::new();
    let mut reference = ExperimentConfig::default();
    reference.economics.k_c = MC_REFERENCE.0;
    reference.economics.k_b = MC_REFERENCE.1;
    configs.push(("reference".to_string(), reference.clone()));
    let ranges = RandomRanges::default();
    let mut rng = ChaCha8Rng::seed_from_u64(MC_SEED);
    for i in 0..MC_RANDOM_INSTANCES {
        let n = 1 + i % 3;
        let mut draw = |(lo, hi): (f64, f64)| rng.random_range(lo..hi);
        let mut cfg = ExperimentConfig::default();
        cfg.game.pi = (0..n).map(|_| draw(ranges.pi)).collect();
        cfg.economics = EconomicsSection {
            k_a: draw(ranges.k_a),
            k_s: draw(ranges.k_s),
            k_c: draw(ranges.k_c),
            k_b: draw(ranges.k_b),
        };
        configs.push((format!("random {i} (N={n})"), cfg));
    }
    let mut worst_z = 0.0f64;
    let mut misses = Vec::new();
    for (name, mut cfg) in configs {
        cfg.run.n_frames = MC_FRAMES;
        cfg.run.seed = MC_SEED;
        match run_simulate(&cfg) {
            Ok(out) => {
                let z = out.z_attacker().abs().max(out.z_defender().abs());
                worst_z = worst_z.max(z);
                if z > MC_Z_LIMIT || !out.verified {
                    misses.push(format!("{name}: |z| {z:.2}, verified {}", out.verified));
                }
            }
            Err(e) => misses.push(format!("{name}: {e}")),
        }
    }
    reference.run.n_frames = MC_FRAMES;
    reference.run.seed = MC_SEED;
    let a = run_simulate(&reference).map(|o| o.table().to_csv_string()).unwrap_or_default();
    let b = run_simulate(&reference).map(|o| o.table().to_csv_string()).unwrap_or_default();
    let identical = !a.is_empty() && a == b;
    report.line(
        8,
        "Monte Carlo agreement",
        misses.is_empty() && identical,
        format!(
            "{} instances at {MC_FRAMES} frames, worst |z| {worst_z:.2} (limit {MC_Z_LIMIT}), repeated seed byte-identical: {identical}",
            MC_RANDOM_INSTANCES + 1
        ),
    );
    for m in misses {
        report.note(m);
    }
}

fn detector(report: &mut Report) {
    let model = default_sensing();
    let p_d = detection_probability(&model).unwrap();
    let n = model.n_samples as f64;
    let tau = n + Q_INV_0_1 * (2.0 * n).sqrt();
    let amp = model.snr_linear.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let hits = (0..DETECTOR_TRIALS)
        .filter(|_| {
            let stat: f64 = (0..model.n_samples)
                .map(|_| {
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    (amp + noise).powi(2)
                })
                .sum();
            stat > tau
        })
        .count();
    let empirical = hits as f64 / DETECTOR_TRIALS as f64;
    let se = (p_d * (1.0 - p_d) / DETECTOR_TRIALS as f64).sqrt();
    let allowance = DETECTOR_SE_MULT * se + DETECTOR_APPROX_TOL;
    let in_range = (DETECTION_RANGE.0..=DETECTION_RANGE.1).contains(&p_d);
    let agrees = (empirical - p_d).abs() <= allowance;
    report.line(
        9,
        "detector sanity",
        in_range && agrees,
        format!(
            "P_d = {p_d:.6} (range [{}, {}]), chi-square sampling {empirical:.4} over {DETECTOR_TRIALS} trials (allowance {allowance:.4})",
            DETECTION_RANGE.0, DETECTION_RANGE.1
        ),
    );
}

fn main() {
    let mut report = Report { failures: 0 };
    sizes(&mut report);
    let (suite, elapsed) = random_suite();
    validity(&mut report, &suite, elapsed);
    cross_oracle(&mut report, &suite);
    decomposition(&mut report);
    let sweep = reference_sweep();
    regions(&mut report, &sweep);
    dominance(&mut report, &sweep);
    scaling(&mut report);
    monte_carlo(&mut report);
    detector(&mut report);
    println!("{} of 9 criteria failed", report.failures);
    if report.failures > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
