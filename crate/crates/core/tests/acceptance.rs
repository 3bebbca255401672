//! Acceptance checks for the simulator, the reward chain and the capacity
//! bounds. Each check prints one `PASS`/`FAIL` line; the process exits
//! non-zero if any check fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bec_sim::capacity::{self, CAPACITY_RATIO_CONSTANT};
use bec_sim::channel::{round_erasure_prob, trial_rng, trial_seed};
use bec_sim::harness::verify_suite;
use bec_sim::reward_chain::{self, ChainParams};
use bec_sim::simulator::{self, SimConfig};
use bec_sim::{make_random_spec, BitString, PartyInput};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn inputs(seed: u64) -> (PartyInput, PartyInput) {
    let mut rng = trial_rng(seed, 0);
    let mut draw = || PartyInput::new(BitString::from_bits((0..64).map(|_| rng.random::<bool>())));
    (draw(), draw())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

type Check = (&'static str, fn() -> Outcome, Duration);

const P_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const N_MAX: usize = 10_000;

fn noiseless_correctness() -> Outcome {
    let mut failures = 0;
    for j in 0..1000u64 {
        let n0 = 1 + (j % 64) as usize;
        let spec = make_random_spec(n0, j).unwrap();
        let (x_a, x_b) = inputs(j);
        let reference = spec.reference_transcript(&x_a, &x_b).unwrap();
        let cfg = SimConfig::new(spec, x_a, x_b, 2 * n0, 0.0, j).with_trace(false);
        match simulator::run(&cfg) {
            Ok(r) if r.success && r.out_a == reference && r.out_b == reference => {}
            _ => failures += 1,
        }
    }
    outcome(
        failures == 0,
        format!("1000 runs, n0 in 1..=64, k=2: {failures} failures"),
    )
}

fn exact_oracle_agreement() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for (spec_seed, eps) in [(11u64, 0.1), (11, 0.5), (12, 0.1), (12, 0.5)] {
        let spec = make_random_spec(2, spec_seed).unwrap();
        let (x_a, x_b) = inputs(spec_seed);
        let exact = simulator::exact_error_prob(&spec, &x_a, &x_b, 6, eps).unwrap();
        let seed = trial_seed(spec_seed, (eps * 1000.0) as u64);
        let cfg = SimConfig::new(spec, x_a, x_b, 6, eps, seed).with_monitors(false);
        let trials = 100_000u64;
        let mc = simulator::monte_carlo_error(&cfg, trials).unwrap();
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        let ok = (mc.estimate - exact).abs() <= 3.0 * sigma;
        pass &= ok;
        notes.push(format!("eps={eps} exact={exact:.5} mc={:.5}", mc.estimate));
    }
    let mut worst = 0.0f64;
    for eps in [0.0, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
        for seed in 0..4u64 {
            let spec = make_random_spec(1, seed).unwrap();
            let (x_a, x_b) = inputs(seed);
            let exact = simulator::exact_error_prob(&spec, &x_a, &x_b, 2, eps).unwrap();
            worst = worst.max((exact - (1.0 - (1.0 - eps) * (1.0 - eps))).abs());
        }
    }
    pass &= worst <= 1e-12;
    notes.push(format!("n0=1 closed-form gap {worst:.1e}"));
    outcome(pass, notes.join("; "))
}

fn invariant_suite() -> Outcome {
    let counts = verify_suite(10_000, 2024).unwrap();
    let bad: Vec<String> = counts
        .violations
        .iter()
        .filter(|(_, &v)| v > 0)
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    outcome(
        bad.is_empty(),
        format!(
            "{} runs, {} checks, violations: {}",
            counts.runs,
            counts.violations.len(),
            if bad.is_empty() {
                "none".into()
            } else {
                bad.join(",")
            }
        ),
    )
}

fn recurrence_closed_form() -> Outcome {
    let mut worst = 0.0f64;
    let mut at_one = true;
    for p in P_GRID {
        let params = ChainParams::new(p).unwrap();
        let series = reward_chain::expected_reward_recurrence_series(N_MAX, &params);
        for (n, &f) in series.iter().enumerate().skip(1) {
            let closed = reward_chain::expected_reward_closed_form(n, &params).unwrap();
            worst = worst.max(rel(f, closed));
        }
        let one = reward_chain::expected_reward_closed_form(1, &params).unwrap();
        // the closed form is evaluated in floating point; allow 2 ulps
        at_one &= (one - (2.0 - p)).abs() <= 2.0 * f64::EPSILON * 2.0;
    }
    outcome(
        worst <= 1e-9 && at_one,
        format!("max relative gap {worst:.2e} over n<=1e4, 9 values of p; f(1)=2-p: {at_one}"),
    )
}

fn chain_expectation() -> Outcome {
    let mut notes = Vec::new();
    let params = ChainParams::new(round_erasure_prob(0.2).unwrap()).unwrap();
    let mut rng = trial_rng(77, 0);
    let samples = 100_000;
    let mean = (0..samples)
        .map(|_| reward_chain::sample_chain_total(200, &params, &mut rng) as f64)
        .sum::<f64>()
        / samples as f64;
    let dp = reward_chain::expected_reward_dp(200, &params);
    let mut pass = rel(mean, dp) <= 0.01;
    notes.push(format!(
        "n=200 p={:.2} mean={mean:.3} dp={dp:.3}",
        params.p()
    ));

    let (mut worst_slope, mut below, mut max_gap) = (0.0f64, 0usize, 0.0f64);
    for p in P_GRID {
        let params = ChainParams::new(p).unwrap();
        let dp = reward_chain::expected_reward_dp_series(N_MAX, &params);
        let rate = 2.0 * (1.0 - p) / (1.0 + p);
        worst_slope = worst_slope.max((dp[N_MAX] / N_MAX as f64 - rate).abs());
        for (n, &v) in dp.iter().enumerate().skip(1) {
            if v < n as f64 * rate {
                below += 1;
            }
            let closed = reward_chain::expected_reward_closed_form(n, &params).unwrap();
            max_gap = max_gap.max((v - closed).abs());
        }
    }
    pass &= worst_slope <= 1e-3 && below == 0 && max_gap <= 1.0;
    notes.push(format!(
        "slope err {worst_slope:.1e}, points below linear {below}, max |dp-closed| {max_gap:.4}"
    ));
    outcome(pass, notes.join("; "))
}

fn error_decay() -> Outcome {
    let eps = 0.2;
    let k = 3;
    let hit_tr = reward_chain::hitting_times(&ChainParams::from_epsilon(eps).unwrap())
        .unwrap()
        .hit_tr;
    let mut prev = f64::INFINITY;
    let mut pass = true;
    let mut notes = Vec::new();
    for n0 in [100usize, 400, 1600] {
        let spec = make_random_spec(n0, 5).unwrap();
        let (x_a, x_b) = inputs(5);
        let cfg = SimConfig::new(spec, x_a, x_b, k * n0, eps, trial_seed(31, n0 as u64))
            .with_monitors(false)
            .with_trace(false);
        let est = simulator::monte_carlo_error(&cfg, 10_000).unwrap();
        let bound = reward_chain::error_upper_bound(n0, k as f64, eps, hit_tr).unwrap();
        pass &= est.estimate <= prev && bound >= est.estimate;
        prev = est.estimate;
        notes.push(format!("n0={n0} p_e={:.4} bound={bound:.4}", est.estimate));
    }
    pass &= prev < 0.01;
    outcome(pass, notes.join("; "))
}

fn hitting_time_agreement() -> Outcome {
    let mut worst = 0.0f64;
    let mut finite = true;
    for (i, p) in [0.1, 0.5, 0.9].into_iter().enumerate() {
        let params = ChainParams::new(p).unwrap();
        let solved = reward_chain::hitting_times(&params).unwrap();
        let mut rng = trial_rng(500 + i as u64, 0);
        let mc = reward_chain::estimate_hitting_times(&params, 100_000, &mut rng).unwrap();
        for e in mc {
            let s = solved.get(e.target, e.start).unwrap();
            finite &= s.is_finite();
            worst = worst.max(rel(e.expected, s));
        }
    }
    outcome(
        finite && worst <= 0.02,
        format!(
            "25 entries x 3 values of p, max relative gap {:.3}%",
            worst * 100.0
        ),
    )
}

fn capacity_constants() -> Outcome {
    let d0 = capacity::direct_lb(0.0).unwrap();
    let dp = capacity::direct_lb(0.073).unwrap();
    let threshold = capacity::direct_threshold(CAPACITY_RATIO_CONSTANT);
    let mut min_ratio = f64::INFINITY;
    let mut split_ok = true;
    for eps in capacity::grid(0.001, 0.999, 0.001).unwrap() {
        let r = capacity::best_lb(eps).unwrap();
        min_ratio = min_ratio.min(r.ratio);
        split_ok &= (r.direct_ratio() >= CAPACITY_RATIO_CONSTANT) == (eps <= threshold);
    }
    let pass = d0 == 0.5
        && (0.3766..=0.3768).contains(&dp)
        && min_ratio >= CAPACITY_RATIO_CONSTANT
        && split_ok
        && (threshold - 0.614853).abs() < 1e-5;
    outcome(
        pass,
        format!("direct(0)={d0}, direct(0.073)={dp:.5}, min ratio {min_ratio:.5}, crossover {threshold:.6}, direct-only region matches: {split_ok}"),
    )
}

fn main() -> ExitCode {
    let checks: [Check; 8] = [
        (
            "noiseless correctness",
            noiseless_correctness,
            Duration::from_secs(1),
        ),
        (
            "exact oracle agreement",
            exact_oracle_agreement,
            Duration::from_secs(10),
        ),
        ("invariant suite", invariant_suite, Duration::from_secs(30)),
        (
            "recurrence vs closed form",
            recurrence_closed_form,
            Duration::from_secs(60),
        ),
        (
            "chain expectation",
            chain_expectation,
            Duration::from_secs(60),
        ),
        (
            "error decay at eps=0.2, k=3",
            error_decay,
            Duration::from_secs(120),
        ),
        (
            "hitting times",
            hitting_time_agreement,
            Duration::from_secs(60),
        ),
        (
            "capacity constants",
            capacity_constants,
            Duration::from_secs(1),
        ),
    ];
    let mut failed = 0;
    for (name, check, budget) in checks {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= budget;
        failed += !pass as u32;
        println!(
            "{} {name}: {} [{:.2}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of 8 acceptance checks passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
