//! Batch experiment runner behind the `bec-sim` binary.
//!
//! Modes: `simulate`/`sweep` (Monte-Carlo and, for short runs, exact error
//! probability), `markov` (reward-chain expectations and bound), `bounds`
//! (capacity lower bounds over an ε grid) and `verify` (invariant suite on
//! random instances). Reports are CSV or JSON and depend only on the
//! arguments, never on the worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use rand::Rng;
use serde_json::{json, Value};

use crate::bits::BitString;
use crate::capacity::{self, BoundReport, CAPACITY_RATIO_CONSTANT, DEFAULT_EPS_PRIME};
use crate::channel::{trial_rng, trial_seed, MAX_ENUM_ROUNDS};
use crate::error::{Error, Invariant};
use crate::protocol::{make_random_spec, PartyInput};
use crate::reward_chain::{self, ChainParams};
use crate::simulator::{self, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const SIMULATE_HEADER: &str = "epsilon,k,n0,rounds,trials,errors,p_hat,ci,seed";
pub const BOUNDS_HEADER: &str = "epsilon,shannon,direct_lb,repetition_lb,best_lb,ratio,rho";
pub const VERIFY_HEADER: &str = "check,runs,violations";
pub const MARKOV_HEADER: &str = "p,n,f_recurrence,f_closed_form,f_dp,hit_tr,error_bound";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Simulate,
    Sweep,
    Markov,
    Bounds,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "bec-sim",
    about = "Interactive simulation over the binary erasure channel"
)]
struct Cli {
    /// Experiment mode (may also be given with --mode).
    #[arg(value_enum)]
    mode_arg: Option<Mode>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Erasure probability: a value, a comma list, or lo:hi:step.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long = "eps-prime")]
    eps_prime: Option<f64>,
    /// Round-erasure probability (markov mode): value, list or grid.
    #[arg(long)]
    p: Option<String>,
    /// Rounds per protocol bit.
    #[arg(long)]
    k: Option<f64>,
    /// Protocol length(s), value or comma list.
    #[arg(long)]
    n0: Option<String>,
    /// Chain steps (markov mode), value or comma list.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// ε grid lo:hi:step.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long = "no-monitors")]
    no_monitors: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub epsilons: Vec<f64>,
    pub eps_prime: f64,
    pub ps: Vec<f64>,
    pub k: Option<f64>,
    pub n0s: Vec<usize>,
    pub ns: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub monitors: bool,
}

#[derive(Debug)]
pub enum CliError {
    /// Malformed invocation; message already formatted.
    Usage(String),
    /// `--help` / `--version` output.
    Info(String),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_reals(name: &str, s: &str) -> Result<Vec<f64>, CliError> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, step] = parts.as_slice() else {
            return Err(usage(format!("--{name}: grid must be lo:hi:step")));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("--{name}: bad number {x:?}")))
        };
        return capacity::grid(num(lo)?, num(hi)?, num(step)?)
            .map_err(|e| usage(format!("--{name}: {e}")));
    }
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("--{name}: bad number {x:?}")))
        })
        .collect()
}

fn parse_counts(name: &str, s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("--{name}: bad integer {x:?}")))
        })
        .collect()
}

fn require<T>(v: Option<T>, mode: Mode, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| usage(format!("{mode:?} mode requires --{flag}").to_lowercase()))
}

/// Rounds for protocol length `n0` at overhead `k`, if `k·n0` is integral.
pub fn rounds_for(k: f64, n0: usize) -> Option<usize> {
    let r = k * n0 as f64;
    let rounded = r.round();
    ((r - rounded).abs() < 1e-9 && rounded >= 1.0).then_some(rounded as usize)
}

pub fn parse_args<I, T>(argv: I) -> Result<ExperimentConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Info(e.to_string())
        }
        _ => CliError::Usage(e.to_string()),
    })?;
    let mode = match (cli.mode_arg, cli.mode) {
        (Some(a), Some(b)) if a != b => return Err(usage("conflicting modes")),
        (Some(m), _) | (None, Some(m)) => m,
        (None, None) => return Err(usage("missing mode (simulate|sweep|markov|bounds|verify)")),
    };
    let eps = cli
        .epsilon
        .as_deref()
        .map(|s| parse_reals("epsilon", s))
        .transpose()?;
    let grid = cli
        .grid
        .as_deref()
        .map(|s| parse_reals("grid", s))
        .transpose()?;
    let ps = cli.p.as_deref().map(|s| parse_reals("p", s)).transpose()?;
    let n0s = cli
        .n0
        .as_deref()
        .map(|s| parse_counts("n0", s))
        .transpose()?;
    let ns = cli.n.as_deref().map(|s| parse_counts("n", s)).transpose()?;
    if let Some(t) = cli.trials {
        if t == 0 {
            return Err(usage("--trials must be at least 1"));
        }
    }
    let eps_prime = cli.eps_prime.unwrap_or(DEFAULT_EPS_PRIME);
    if !(0.0 < eps_prime && eps_prime < 1.0) {
        return Err(usage("--eps-prime must lie in (0, 1)"));
    }

    let mut config = ExperimentConfig {
        mode,
        epsilons: Vec::new(),
        eps_prime,
        ps: Vec::new(),
        k: cli.k,
        n0s: Vec::new(),
        ns: Vec::new(),
        trials: cli.trials.unwrap_or(10_000),
        seed: cli.seed,
        out: cli.out,
        format: cli.format.unwrap_or(if mode == Mode::Markov {
            Format::Json
        } else {
            Format::Csv
        }),
        monitors: !cli.no_monitors,
    };

    let in_unit = |v: &[f64], name: &str| -> Result<(), CliError> {
        match v.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            Some(bad) => Err(usage(format!("--{name} value {bad} is outside [0, 1]"))),
            None => Ok(()),
        }
    };

    match mode {
        Mode::Simulate | Mode::Sweep => {
            config.epsilons = if mode == Mode::Simulate {
                require(eps, mode, "epsilon")?
            } else {
                require(grid.or(eps), mode, "grid")?
            };
            in_unit(&config.epsilons, "epsilon")?;
            let k = require(cli.k, mode, "k")?;
            config.n0s = require(n0s, mode, "n0")?;
            for &n0 in &config.n0s {
                if n0 == 0 {
                    return Err(usage("--n0 must be at least 1"));
                }
                if rounds_for(k, n0).is_none() {
                    return Err(usage(format!(
                        "k * n0 = {k} * {n0} is not a positive integer"
                    )));
                }
            }
        }
        Mode::Markov => {
            config.ps = match (ps, eps) {
                (Some(p), _) => p,
                (None, Some(e)) => {
                    in_unit(&e, "epsilon")?;
                    e.iter().map(|&x| 1.0 - (1.0 - x) * (1.0 - x)).collect()
                }
                (None, None) => return Err(usage("markov mode requires --p or --epsilon")),
            };
            in_unit(&config.ps, "p")?;
            config.ns = require(ns, mode, "n")?;
            if let Some(k) = cli.k {
                for &n in &config.ns {
                    if !(k > 0.0) || rounds_for(1.0 / k, n).is_none() {
                        return Err(usage(format!(
                            "n / k = {n} / {k} is not a positive integer"
                        )));
                    }
                }
            }
        }
        Mode::Bounds => {
            config.epsilons = match (grid, eps) {
                (Some(g), _) => g,
                (None, Some(e)) => e,
                (None, None) => capacity::grid(0.001, 0.999, 0.001).expect("default grid"),
            };
            if let Some(bad) = config.epsilons.iter().find(|x| !(0.0 < **x && **x < 1.0)) {
                return Err(usage(format!("bounds need 0 < epsilon < 1, got {bad}")));
            }
        }
        Mode::Verify => {
            config.trials = cli.trials.unwrap_or(1000);
            config.monitors = true;
        }
    }
    Ok(config)
}

/// `%.12g`-style formatting.
pub fn fmt_num(x: f64) -> String {
    const SIG: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-5..SIG).contains(&exp) {
        format!(
            "{}e{}{:02}",
            trim(mantissa),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    } else {
        trim(&format!("{:.*}", (SIG - 1 - exp) as usize, x))
    }
}

fn num(x: f64) -> Value {
    let rounded: f64 = fmt_num(x).parse().unwrap_or(x);
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if !(n.is_u64() || n.is_i64()) => fmt_num(f),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A rendered report plus the exit code it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub body: String,
    pub exit_code: i32,
    /// Summary line for stderr.
    pub note: Option<String>,
}

struct Table {
    header: &'static str,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn render(&self, config: &ExperimentConfig) -> String {
        match config.format {
            Format::Csv => {
                let mut s = String::new();
                s.push_str(self.header);
                s.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(csv_cell).collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Json => {
                let keys: Vec<&str> = self.header.split(',').collect();
                let results: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: serde_json::Map<String, Value> = keys
                            .iter()
                            .map(|k| k.to_string())
                            .zip(row.iter().cloned())
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let doc = json!({ "config": config_json(config), "results": results });
                let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
                s.push('\n');
                s
            }
        }
    }
}

fn config_json(c: &ExperimentConfig) -> Value {
    json!({
        "mode": format!("{:?}", c.mode).to_lowercase(),
        "epsilon": c.epsilons.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "eps_prime": num(c.eps_prime),
        "p": c.ps.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "k": opt_num(c.k),
        "n0": c.n0s,
        "n": c.ns,
        "trials": c.trials,
        "seed": c.seed,
        "monitors": c.monitors,
    })
}

/// Inputs derived from the seed; the simulation outcome does not depend on
/// them, but they make the random protocol concrete.
fn seeded_inputs(seed: u64) -> (PartyInput, PartyInput) {
    let bits =
        |s: u64| PartyInput::new(BitString::from_bits((0..64).map(move |i| s >> i & 1 == 1)));
    (
        bits(trial_seed(seed, u64::MAX)),
        bits(trial_seed(seed, u64::MAX - 1)),
    )
}

fn simulate_table(config: &ExperimentConfig) -> Result<Table, Error> {
    let k = config.k.expect("validated");
    let mut points: Vec<(f64, usize)> = Vec::new();
    for &eps in &config.epsilons {
        for &n0 in &config.n0s {
            points.push((eps, n0));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let with_exact = config.format == Format::Json;
    let mut rows = Vec::with_capacity(points.len());
    for (eps, n0) in points {
        let rounds = rounds_for(k, n0).expect("validated");
        let spec = make_random_spec(n0, config.seed)?;
        let (x_a, x_b) = seeded_inputs(config.seed);
        let sim = SimConfig::new(spec, x_a, x_b, rounds, eps, config.seed)
            .with_monitors(config.monitors)
            .with_trace(false);
        let est = simulator::monte_carlo_error(&sim, config.trials)?;
        let mut row = vec![
            num(eps),
            num(k),
            json!(n0),
            json!(rounds),
            json!(config.trials),
            json!(est.errors),
            num(est.estimate),
            num(est.ci_halfwidth),
            json!(config.seed),
        ];
        if with_exact {
            let exact = if rounds <= MAX_ENUM_ROUNDS {
                Some(simulator::exact_error_prob(
                    &sim.spec, &sim.x_a, &sim.x_b, rounds, eps,
                )?)
            } else {
                None
            };
            row.push(opt_num(exact));
        }
        rows.push(row);
    }
    Ok(Table {
        header: if with_exact {
            "epsilon,k,n0,rounds,trials,errors,p_hat,ci,seed,p_exact"
        } else {
            SIMULATE_HEADER
        },
        rows,
    })
}

/// One markov-mode row.
pub fn markov_row(p: f64, n: usize, k: Option<f64>) -> Result<Vec<Value>, Error> {
    let params = ChainParams::new(p)?;
    let f_rec = reward_chain::expected_reward_recurrence(n, &params);
    let f_closed = if n >= 1 {
        Some(reward_chain::expected_reward_closed_form(n, &params)?)
    } else {
        None
    };
    let f_dp = reward_chain::expected_reward_dp(n, &params);
    let hit_tr = reward_chain::hitting_times(&params).ok().map(|r| r.hit_tr);
    let error_bound = match (k, hit_tr) {
        (Some(k), Some(hit)) => {
            let eps = 1.0 - (1.0 - p).sqrt();
            let n0 = rounds_for(1.0 / k, n).unwrap_or(0);
            reward_chain::error_upper_bound(n0, k, eps, hit).ok()
        }
        _ => None,
    };
    Ok(vec![
        num(p),
        json!(n),
        num(f_rec),
        opt_num(f_closed),
        num(f_dp),
        opt_num(hit_tr),
        opt_num(error_bound),
    ])
}

fn markov_table(config: &ExperimentConfig) -> Result<Table, Error> {
    let mut points: Vec<(f64, usize)> = Vec::new();
    for &p in &config.ps {
        for &n in &config.ns {
            points.push((p, n));
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let rows = points
        .into_iter()
        .map(|(p, n)| markov_row(p, n, config.k))
        .collect::<Result<_, _>>()?;
    Ok(Table {
        header: MARKOV_HEADER,
        rows,
    })
}

fn bounds_row(r: &BoundReport) -> Vec<Value> {
    vec![
        num(r.epsilon),
        num(r.shannon),
        num(r.direct_lb),
        opt_num(r.repetition_lb),
        num(r.best_lb),
        num(r.ratio),
        r.rho.map_or(Value::Null, |x| json!(x)),
    ]
}

fn bounds_table(config: &ExperimentConfig) -> Result<(Table, f64), Error> {
    let mut eps = config.epsilons.clone();
    eps.sort_by(f64::total_cmp);
    let reports = eps
        .iter()
        .map(|&e| capacity::best_lb_with(e, config.eps_prime))
        .collect::<Result<Vec<_>, _>>()?;
    let min_ratio = reports
        .iter()
        .map(|r| r.ratio)
        .fold(f64::INFINITY, f64::min);
    Ok((
        Table {
            header: BOUNDS_HEADER,
            rows: reports.iter().map(bounds_row).collect(),
        },
        min_ratio,
    ))
}

/// Counts from the randomized invariant suite.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyCounts {
    pub runs: u64,
    pub violations: BTreeMap<&'static str, u64>,
}

impl VerifyCounts {
    pub fn total_violations(&self) -> u64 {
        self.violations.values().sum()
    }
}

pub const EXTRA_CHECKS: [&str; 2] = ["chain_projection", "noiseless_reference"];

/// Runs `runs` random instances (ε uniform in (0,1), n0 in 1..=64,
/// k in 2..=6) with monitors on, plus a noiseless run of the same instance,
/// and tallies violations per check.
pub fn verify_suite(runs: u64, seed: u64) -> Result<VerifyCounts, Error> {
    use rayon::prelude::*;
    let per_run = (0..runs)
        .into_par_iter()
        .map(|j| -> Result<Vec<&'static str>, Error> {
            let mut rng = trial_rng(seed, j);
            let eps = loop {
                let e: f64 = rng.random();
                if e > 0.0 {
                    break e;
                }
            };
            let n0 = rng.random_range(1..=64usize);
            let k = rng.random_range(2..=6usize);
            let spec = make_random_spec(n0, rng.random())?;
            let (x_a, x_b) = seeded_inputs(rng.random());
            let cfg = SimConfig::new(spec, x_a, x_b, k * n0, eps, rng.random());
            let mut failed = Vec::new();
            match simulator::run(&cfg) {
                Ok(r) => {
                    if !simulator::trace_matches_chain(&r) {
                        failed.push("chain_projection");
                    }
                }
                Err(Error::InvariantViolation { invariant, .. }) => failed.push(invariant.name()),
                Err(e) => return Err(e),
            }
            let clean = SimConfig {
                epsilon: 0.0,
                ..cfg
            };
            let reference = clean.spec.reference_transcript(&clean.x_a, &clean.x_b)?;
            match simulator::run(&clean) {
                Ok(r) if r.success && r.out_a == reference && r.out_b == reference => {}
                Ok(_) => failed.push("noiseless_reference"),
                Err(Error::InvariantViolation { invariant, .. }) => failed.push(invariant.name()),
                Err(e) => return Err(e),
            }
            Ok(failed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut counts = VerifyCounts {
        runs,
        violations: Invariant::ALL
            .iter()
            .map(|i| i.name())
            .chain(EXTRA_CHECKS)
            .map(|name| (name, 0))
            .collect(),
    };
    for name in per_run.into_iter().flatten() {
        *counts.violations.get_mut(name).expect("known check") += 1;
    }
    Ok(counts)
}

fn verify_table(config: &ExperimentConfig) -> Result<(Table, u64), Error> {
    let counts = verify_suite(config.trials, config.seed)?;
    let rows = counts
        .violations
        .iter()
        .map(|(name, v)| vec![json!(name), json!(counts.runs), json!(v)])
        .collect();
    Ok((
        Table {
            header: VERIFY_HEADER,
            rows,
        },
        counts.total_violations(),
    ))
}

/// Runs the configured experiment and renders its report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, Error> {
    let (table, exit_code, note) = match config.mode {
        Mode::Simulate | Mode::Sweep => (simulate_table(config)?, EXIT_OK, None),
        Mode::Markov => (markov_table(config)?, EXIT_OK, None),
        Mode::Bounds => {
            let (table, min_ratio) = bounds_table(config)?;
            let ok = min_ratio >= CAPACITY_RATIO_CONSTANT;
            let note = format!(
                "min_ratio={} (required >= {CAPACITY_RATIO_CONSTANT})",
                fmt_num(min_ratio)
            );
            (
                table,
                if ok { EXIT_OK } else { EXIT_CHECK_FAILED },
                Some(note),
            )
        }
        Mode::Verify => {
            let (table, violations) = verify_table(config)?;
            let note = format!("violations={violations} over {} runs", config.trials);
            (
                table,
                if violations == 0 {
                    EXIT_OK
                } else {
                    EXIT_CHECK_FAILED
                },
                Some(note),
            )
        }
    };
    Ok(Report {
        body: table.render(config),
        exit_code,
        note,
    })
}

fn worker_pool() -> Option<rayon::ThreadPool> {
    let n: usize = std::env::var("SIM_THREADS").ok()?.trim().parse().ok()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .ok()
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match parse_args(argv) {
        Ok(c) => c,
        Err(CliError::Info(s)) => {
            print!("{s}");
            return EXIT_OK;
        }
        Err(CliError::Usage(s)) => {
            let mut msg = s.trim_end().to_string();
            if !msg.contains("Usage") {
                let _ = write!(msg, "\n\nUsage: bec-sim <MODE> [OPTIONS]  (see --help)");
            }
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    let result = match worker_pool() {
        Some(pool) => pool.install(|| run_experiment(&config)),
        None => run_experiment(&config),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let written = match &config.out {
        Some(path) => std::fs::write(path, &report.body),
        None => std::io::stdout().write_all(report.body.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write report: {e}");
        return EXIT_USAGE;
    }
    if let Some(note) = &report.note {
        eprintln!("{note}");
    }
    report.exit_code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        std::iter::once("bec-sim".to_string())
            .chain(s.split_whitespace().map(String::from))
            .collect()
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(0.5), "0.5");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.0 / 3.0 * 1e-7), "6.66666666667e-08");
        assert_eq!(fmt_num(123456.0), "123456");
        assert_eq!(fmt_num(1e15), "1e+15");
        assert_eq!(fmt_num(-0.25), "-0.25");
    }

    #[test]
    fn parse_modes() {
        let c = parse_args(args(
            "simulate --epsilon 0.2 --k 3 --n0 100 --trials 10 --seed 7",
        ))
        .unwrap();
        assert_eq!(c.mode, Mode::Simulate);
        assert_eq!(c.epsilons, vec![0.2]);
        assert_eq!(c.n0s, vec![100]);
        assert_eq!(c.format, Format::Csv);

        let c = parse_args(args("--mode markov --p 0.36 --n 200")).unwrap();
        assert_eq!(c.mode, Mode::Markov);
        assert_eq!(c.format, Format::Json);

        let c = parse_args(args("bounds --grid 0.001:0.999:0.001")).unwrap();
        assert_eq!(c.epsilons.len(), 999);
    }

    #[test]
    fn usage_errors() {
        for bad in [
            "simulate --k 3 --n0 10",
            "simulate --epsilon 0.2 --k 2.5 --n0 3",
            "simulate --epsilon 1.2 --k 3 --n0 3",
            "markov --n 10",
            "bounds --bogus",
            "",
            "simulate --mode bounds --epsilon 0.1 --k 2 --n0 2",
            "bounds --epsilon 0",
            "verify --trials 0",
        ] {
            assert!(
                matches!(parse_args(args(bad)), Err(CliError::Usage(_))),
                "{bad:?} accepted"
            );
        }
        assert_eq!(main_with_args(args("simulate --k 3")), EXIT_USAGE);
    }

    #[test]
    fn simulate_csv() {
        let c = parse_args(args(
            "simulate --epsilon 0.2 --k 3 --n0 4 --trials 50 --seed 7",
        ))
        .unwrap();
        let r = run_experiment(&c).unwrap();
        let lines: Vec<&str> = r.body.lines().collect();
        assert_eq!(lines[0], SIMULATE_HEADER);
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("0.2,3,4,12,50,"));
        assert!(lines[1].ends_with(",7"));
    }

    #[test]
    fn simulate_json_has_exact() {
        let c = parse_args(args(
            "simulate --epsilon 0.5 --k 3 --n0 2 --trials 100 --format json",
        ))
        .unwrap();
        let v: Value = serde_json::from_str(&run_experiment(&c).unwrap().body).unwrap();
        let row = &v["results"][0];
        assert!(row["p_exact"].is_number());
        assert!(v["config"].is_object());
    }

    #[test]
    fn markov_keys() {
        let c = parse_args(args("markov --p 0.36 --n 200")).unwrap();
        let v: Value = serde_json::from_str(&run_experiment(&c).unwrap().body).unwrap();
        let row = v["results"][0].as_object().unwrap();
        for key in [
            "p",
            "n",
            "f_recurrence",
            "f_closed_form",
            "f_dp",
            "hit_tr",
            "error_bound",
        ] {
            assert!(row.contains_key(key), "{key}");
        }
        assert!(row["hit_tr"].is_number());
        assert!(row["error_bound"].is_null());

        let row = markov_row(0.36, 300, Some(3.0)).unwrap();
        assert!(row[6].is_number());
    }

    #[test]
    fn verify_small() {
        let counts = verify_suite(200, 3).unwrap();
        assert_eq!(counts.runs, 200);
        assert_eq!(counts.total_violations(), 0);
        assert_eq!(
            counts.violations.len(),
            Invariant::ALL.len() + EXTRA_CHECKS.len()
        );
    }
}
