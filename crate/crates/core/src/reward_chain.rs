//! Three-state Markov reward process tracking the simulator's progress.
//!
//! Edges, as `(probability, reward)`:
//!
//! ```text
//! s1 -> s1  (1-p, 2)      s1 -> s2  (p, 1)
//! s2 -> s3  (1,   0)
//! s3 -> s1  (1-p, 1)      s3 -> s2  (p, 0)
//! ```
//!
//! where `p` is the round-erasure probability. Besides sampling, this module
//! computes the expected cumulative reward three ways (the second-order
//! recurrence seeded at `f(0) = 0, f(1) = 2 - p`, its closed form, and an
//! exact backward DP over the three states), the expected hitting times of
//! the transition chain `(Z_{i+1}, Z_i)`, and the resulting concentration
//! bound on the simulator's error probability.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::round_erasure_prob;
use crate::error::{check_unit, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    p: f64,
}

impl ChainParams {
    pub fn new(p: f64) -> Result<Self> {
        Ok(Self {
            p: check_unit("p", p)?,
        })
    }

    /// Chain driven by BEC(ε) rounds.
    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        Self::new(round_erasure_prob(epsilon)?)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn require_irreducible(&self) -> Result<()> {
        if self.p > 0.0 && self.p < 1.0 {
            Ok(())
        } else {
            Err(Error::Reducible(self.p))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChainState {
    #[serde(rename = "s1")]
    S1,
    #[serde(rename = "s2")]
    S2,
    #[serde(rename = "s3")]
    S3,
}

impl ChainState {
    pub const ALL: [ChainState; 3] = [ChainState::S1, ChainState::S2, ChainState::S3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ChainState::S1 => "s1",
            ChainState::S2 => "s2",
            ChainState::S3 => "s3",
        }
    }

    /// Probability of moving to `to` in one step.
    pub fn transition_prob(self, to: ChainState, params: &ChainParams) -> f64 {
        let p = params.p;
        match (self, to) {
            (ChainState::S1, ChainState::S1) | (ChainState::S3, ChainState::S1) => 1.0 - p,
            (ChainState::S1, ChainState::S2) | (ChainState::S3, ChainState::S2) => p,
            (ChainState::S2, ChainState::S3) => 1.0,
            _ => 0.0,
        }
    }
}

impl fmt::Display for ChainState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One chain step: next state and the reward on the traversed edge.
pub fn step(state: ChainState, erased: bool) -> (ChainState, u32) {
    match (state, erased) {
        (ChainState::S1, false) => (ChainState::S1, 2),
        (ChainState::S1, true) => (ChainState::S2, 1),
        (ChainState::S2, _) => (ChainState::S3, 0),
        (ChainState::S3, false) => (ChainState::S1, 1),
        (ChainState::S3, true) => (ChainState::S2, 0),
    }
}

/// Reward of the edge `from -> to`, or `None` if no such edge exists.
pub fn edge_reward(from: ChainState, to: ChainState) -> Option<u32> {
    [false, true]
        .into_iter()
        .map(|e| step(from, e))
        .find(|&(s, _)| s == to)
        .map(|(_, r)| r)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardTrace {
    /// `Z_1 ..= Z_{n+1}`.
    pub states: Vec<ChainState>,
    /// `R_1 ..= R_n`.
    pub rewards: Vec<u32>,
    pub total: u64,
}

impl RewardTrace {
    /// Starts in `s1`, every step is an edge with its labelled reward, and
    /// the total adds up.
    pub fn is_legal(&self) -> bool {
        self.states.first() == Some(&ChainState::S1)
            && self.states.len() == self.rewards.len() + 1
            && self
                .states
                .windows(2)
                .zip(&self.rewards)
                .all(|(w, &r)| edge_reward(w[0], w[1]) == Some(r))
            && self.rewards.iter().map(|&r| r as u64).sum::<u64>() == self.total
    }
}

pub fn simulate_chain<R: Rng + ?Sized>(n: usize, params: &ChainParams, rng: &mut R) -> RewardTrace {
    let mut states = Vec::with_capacity(n + 1);
    let mut rewards = Vec::with_capacity(n);
    let mut state = ChainState::S1;
    let mut total = 0u64;
    states.push(state);
    for _ in 0..n {
        let (next, r) = step(state, rng.random_bool(params.p));
        state = next;
        total += r as u64;
        states.push(state);
        rewards.push(r);
    }
    RewardTrace {
        states,
        rewards,
        total,
    }
}

/// Total reward of `n` chain steps from `s1`, without keeping the trace.
pub fn sample_chain_total<R: Rng + ?Sized>(n: usize, params: &ChainParams, rng: &mut R) -> u64 {
    let mut state = ChainState::S1;
    let mut total = 0u64;
    for _ in 0..n {
        let (next, r) = step(state, rng.random_bool(params.p));
        state = next;
        total += r as u64;
    }
    total
}

/// `f(n)` from `f(m+2) = (1-p) f(m+1) + p f(m) + 2(1-p)` with `f(0) = 0`,
/// `f(1) = 2 - p`.
///
/// The seeding at `f(0)` is taken as given; see [`dp_closed_form_gap`] for
/// how far this drifts from the exact chain expectation.
pub fn expected_reward_recurrence(n: usize, params: &ChainParams) -> f64 {
    expected_reward_recurrence_series(n, params)[n]
}

/// `f(0) ..= f(n_max)` of [`expected_reward_recurrence`].
pub fn expected_reward_recurrence_series(n_max: usize, params: &ChainParams) -> Vec<f64> {
    let p = params.p;
    let mut f = Vec::with_capacity(n_max + 2);
    f.push(0.0);
    f.push(2.0 - p);
    for m in 0..n_max.saturating_sub(1) {
        f.push((1.0 - p) * f[m + 1] + p * f[m] + 2.0 * (1.0 - p));
    }
    f.truncate(n_max + 1);
    f
}

/// `[2n(1-p^2) + p(3-p)(1-(-p)^n)] / (1+p)^2`, the solution of the recurrence.
pub fn expected_reward_closed_form(n: usize, params: &ChainParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig("closed form needs n >= 1".into()));
    }
    let p = params.p;
    let n_f = n as f64;
    let alt = (-p).powi(n.min(i32::MAX as usize) as i32);
    Ok((2.0 * n_f * (1.0 - p * p) + p * (3.0 - p) * (1.0 - alt)) / ((1.0 + p) * (1.0 + p)))
}

/// Exact `E[R_1 + ... + R_n | Z_1 = s1]` by backward induction over the
/// three states.
pub fn expected_reward_dp(n: usize, params: &ChainParams) -> f64 {
    expected_reward_dp_series(n, params)[n]
}

/// `E[R_1 + ... + R_n | Z_1 = s1]` for every `n` in `0..=n_max`.
pub fn expected_reward_dp_series(n_max: usize, params: &ChainParams) -> Vec<f64> {
    let p = params.p;
    let q = 1.0 - p;
    // g[s] = expected reward of the remaining m steps starting in s
    let mut g = [0.0f64; 3];
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(0.0);
    for _ in 0..n_max {
        g = [
            (2.0 - p) + q * g[0] + p * g[1],
            g[2],
            q + q * g[0] + p * g[1],
        ];
        out.push(g[0]);
    }
    out
}

/// `expected_reward_dp - expected_reward_closed_form`.
pub fn dp_closed_form_gap(n: usize, params: &ChainParams) -> Result<f64> {
    Ok(expected_reward_dp(n, params) - expected_reward_closed_form(n, params)?)
}

/// Per-step reward slope `2(1-p)/(1+p)`.
pub fn reward_rate(params: &ChainParams) -> f64 {
    2.0 * (1.0 - params.p) / (1.0 + params.p)
}

/// A state `(Z_{i+1}, Z_i)` of the transition chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransitionState {
    pub next: ChainState,
    pub current: ChainState,
}

impl TransitionState {
    pub const fn new(next: ChainState, current: ChainState) -> Self {
        Self { next, current }
    }
}

impl fmt::Display for TransitionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.next, self.current)
    }
}

impl Serialize for TransitionState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// The transition-chain states reachable when `0 < p < 1`: one per edge.
pub const SUPPORTED_TRANSITIONS: [TransitionState; 5] = [
    TransitionState::new(ChainState::S1, ChainState::S1),
    TransitionState::new(ChainState::S2, ChainState::S1),
    TransitionState::new(ChainState::S3, ChainState::S2),
    TransitionState::new(ChainState::S1, ChainState::S3),
    TransitionState::new(ChainState::S2, ChainState::S3),
];

fn transition_prob(from: TransitionState, to: TransitionState, params: &ChainParams) -> f64 {
    if to.current != from.next {
        0.0
    } else {
        from.next.transition_prob(to.next, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HitEntry {
    pub target: TransitionState,
    pub start: TransitionState,
    /// `E[H_target | Y_1 = start]`, `H = inf{i >= 2 : Y_i = target}`.
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingTimeReport {
    pub supported_states: Vec<TransitionState>,
    pub expected_hits: Vec<HitEntry>,
    pub hit_tr: f64,
}

impl HittingTimeReport {
    pub fn get(&self, target: TransitionState, start: TransitionState) -> Option<f64> {
        self.expected_hits
            .iter()
            .find(|e| e.target == target && e.start == start)
            .map(|e| e.expected)
    }
}

/// Expected hitting times of the transition chain over its supported states,
/// by first-step analysis.
///
/// For a target `τ`, the expected number of steps `m(y)` to reach `τ` from
/// `y ≠ τ` solves `m(y) = 1 + Σ_{y' ≠ τ} P(y, y') m(y')`. Since `H` counts
/// from index 1, `E[H_τ | Y_1 = y] = 1 + m(y)` for `y ≠ τ`, and the return
/// time `2 + Σ_{y' ≠ τ} P(τ, y') m(y')` for `y = τ`.
pub fn hitting_times(params: &ChainParams) -> Result<HittingTimeReport> {
    params.require_irreducible()?;
    let states = SUPPORTED_TRANSITIONS;
    let mut expected_hits = Vec::with_capacity(states.len() * states.len());
    for &target in &states {
        let others: Vec<TransitionState> =
            states.iter().copied().filter(|&s| s != target).collect();
        let k = others.len();
        let mut a = DMatrix::<f64>::identity(k, k);
        let b = DVector::<f64>::from_element(k, 1.0);
        for (i, &y) in others.iter().enumerate() {
            for (j, &y2) in others.iter().enumerate() {
                a[(i, j)] -= transition_prob(y, y2, params);
            }
        }
        let m = a.lu().solve(&b).ok_or(Error::Reducible(params.p))?;
        for &start in &states {
            let expected = if start == target {
                2.0 + others
                    .iter()
                    .enumerate()
                    .map(|(j, &y2)| transition_prob(target, y2, params) * m[j])
                    .sum::<f64>()
            } else {
                let i = others.iter().position(|&s| s == start).unwrap();
                1.0 + m[i]
            };
            expected_hits.push(HitEntry {
                target,
                start,
                expected,
            });
        }
    }
    let hit_tr = expected_hits
        .iter()
        .map(|e| e.expected)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(HittingTimeReport {
        supported_states: states.to_vec(),
        expected_hits,
        hit_tr,
    })
}

/// Monte-Carlo estimate of the same table as [`hitting_times`]: `walks`
/// walks per start state, each run until every supported state was hit.
pub fn estimate_hitting_times<R: Rng + ?Sized>(
    params: &ChainParams,
    walks: usize,
    rng: &mut R,
) -> Result<Vec<HitEntry>> {
    params.require_irreducible()?;
    let states = SUPPORTED_TRANSITIONS;
    let slot = |y: TransitionState| states.iter().position(|&s| s == y).unwrap();
    let mut out = Vec::with_capacity(states.len() * states.len());
    for &start in &states {
        let mut sums = [0u64; 5];
        for _ in 0..walks {
            let mut hit = [0u64; 5];
            let mut remaining = states.len();
            let mut y = start;
            let mut i = 1u64;
            while remaining > 0 {
                let (z, _) = step(y.next, rng.random_bool(params.p));
                y = TransitionState::new(z, y.next);
                i += 1;
                let s = slot(y);
                if hit[s] == 0 {
                    hit[s] = i;
                    remaining -= 1;
                }
            }
            for (acc, h) in sums.iter_mut().zip(hit) {
                *acc += h;
            }
        }
        for (j, &target) in states.iter().enumerate() {
            out.push(HitEntry {
                target,
                start,
                expected: sums[j] as f64 / walks as f64,
            });
        }
    }
    Ok(out)
}

/// Smallest admissible repetition factor: `k` must exceed `2/(1-ε)^2 - 1`.
pub fn min_k(epsilon: f64) -> Result<f64> {
    let eps = check_unit("epsilon", epsilon)?;
    if eps == 1.0 {
        return Err(Error::OutOfDomain {
            name: "epsilon",
            value: eps,
            range: "[0, 1)",
        });
    }
    Ok(2.0 / ((1.0 - eps) * (1.0 - eps)) - 1.0)
}

/// Concentration bound on the simulator's error probability with
/// `k·n0` rounds:
/// `2 exp(-(2 k n0 / hit_tr^2) ((1-p)/(1+p) - 1/k)^2)`.
pub fn error_upper_bound(n0: usize, k: f64, epsilon: f64, hit_tr: f64) -> Result<f64> {
    let threshold = min_k(epsilon)?;
    if !(k > threshold) {
        return Err(Error::BelowThreshold {
            k,
            threshold,
            epsilon,
        });
    }
    if !(hit_tr > 0.0) || !hit_tr.is_finite() {
        return Err(Error::OutOfDomain {
            name: "hit_tr",
            value: hit_tr,
            range: "(0, inf)",
        });
    }
    let p = round_erasure_prob(epsilon)?;
    let margin = (1.0 - p) / (1.0 + p) - 1.0 / k;
    Ok(2.0 * (-(2.0 * k * n0 as f64 / (hit_tr * hit_tr)) * margin * margin).exp())
}
