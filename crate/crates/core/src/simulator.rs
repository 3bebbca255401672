//! Two-party simulation of an alternating protocol over BEC(ε).
//!
//! Each round one party sends a `(message, parity)` pair. Alice sends in odd
//! rounds and Bob in even rounds. The sender extends its estimated
//! transcript with a fresh bit whenever its own estimate says it is its turn
//! to speak (Alice: even length, Bob: odd length), flipping its parity bit.
//! Otherwise it resends the last pair. A receiver that gets both bits
//! unerased appends the message bit iff the parity says it is new: Alice
//! accepts when `p' != p_A`, Bob when `p' == p_B`.
//!
//! Both parties run inside one sequential loop. Monitors check the progress
//! invariants after every round and turn any breach into
//! [`Error::InvariantViolation`], which always indicates a bug, never a
//! protocol failure.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::bits::Transcript;
use crate::channel::{
    enumerate_round_patterns, round_erasure_prob, transmit, trial_seed, ChannelParams,
    ReceivedPair, RoundPattern,
};
use crate::error::{Error, Invariant, Result};
use crate::protocol::{Party, PartyInput, ProtocolSpec};
use crate::reward_chain::{self, ChainState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyState {
    pub party: Party,
    pub estimate: Transcript,
    pub parity: bool,
    /// Last fresh `(t, p)` pair; resent verbatim when no fresh bit is due.
    pub stored_msg: (bool, bool),
    pub input: PartyInput,
}

impl PartyState {
    pub fn new(party: Party, input: PartyInput) -> Self {
        // Before its first fresh send a party's stored pair carries its
        // initial parity, which the peer never accepts.
        let parity = party == Party::Bob;
        Self {
            party,
            estimate: Transcript::new(),
            parity,
            stored_msg: (false, parity),
            input,
        }
    }

    /// Whether the estimate says this party speaks next in the protocol.
    pub fn fresh_due(&self) -> bool {
        let odd = self.estimate.len() % 2 == 1;
        match self.party {
            Party::Alice => !odd,
            Party::Bob => odd,
        }
    }

    /// Parity implied by the estimate length (`len mod 4`).
    pub fn expected_parity(&self) -> bool {
        let s = self.estimate.len() % 4;
        match self.party {
            Party::Alice => s == 1 || s == 2,
            Party::Bob => s == 0 || s == 1,
        }
    }

    /// Sender side. Returns the pair to transmit and whether it was fresh.
    fn send(&mut self, spec: &ProtocolSpec) -> Result<((bool, bool), bool)> {
        if !self.fresh_due() {
            return Ok((self.stored_msg, false));
        }
        let t = if self.estimate.len() >= spec.n0() {
            false
        } else {
            spec.next_bit(self.party, &self.input, &self.estimate)?
        };
        self.parity = !self.parity;
        self.estimate.push(t);
        self.stored_msg = (t, self.parity);
        Ok((self.stored_msg, true))
    }

    /// Receiver side. Returns whether the estimate grew.
    fn receive(&mut self, pair: ReceivedPair) -> bool {
        let Some((t, p)) = pair.unerased() else {
            return false;
        };
        let accept = match self.party {
            Party::Alice => p != self.parity,
            Party::Bob => p == self.parity,
        };
        if accept {
            self.estimate.push(t);
        }
        accept
    }
}

/// Progress classification at the start of round `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtoState {
    /// Equal lengths, `i` even.
    I,
    /// Equal lengths, `i` odd.
    II,
    /// Alice one ahead, `i` odd.
    III,
    /// Alice one ahead, `i` even.
    IV,
    /// Bob one ahead, `i` odd.
    V,
    /// Bob one ahead, `i` even.
    VI,
}

impl ProtoState {
    pub fn name(self) -> &'static str {
        match self {
            ProtoState::I => "I",
            ProtoState::II => "II",
            ProtoState::III => "III",
            ProtoState::IV => "IV",
            ProtoState::V => "V",
            ProtoState::VI => "VI",
        }
    }
}

impl fmt::Display for ProtoState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for ProtoState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

pub fn classify_state(len_a: usize, len_b: usize, i: usize) -> Result<ProtoState> {
    let odd = i % 2 == 1;
    let state = if len_a == len_b {
        if odd {
            ProtoState::II
        } else {
            ProtoState::I
        }
    } else if len_a == len_b + 1 {
        if odd {
            ProtoState::III
        } else {
            ProtoState::IV
        }
    } else if len_b == len_a + 1 {
        if odd {
            ProtoState::V
        } else {
            ProtoState::VI
        }
    } else {
        return Err(Error::InvariantViolation {
            invariant: Invariant::LengthGap,
            round: i,
            detail: format!("|m_A| = {len_a}, |m_B| = {len_b}"),
        });
    };
    Ok(state)
}

pub fn chain_state(s: ProtoState) -> ChainState {
    match s {
        ProtoState::I | ProtoState::II => ChainState::S1,
        ProtoState::IV | ProtoState::V => ChainState::S2,
        ProtoState::III | ProtoState::VI => ChainState::S3,
    }
}

/// Next protocol state and reward of one round, as the progress analysis
/// predicts it. Independent of the party state machines; used by the
/// transition monitor.
pub fn predicted_transition(s: ProtoState, erased: bool) -> (ProtoState, u32) {
    use ProtoState::*;
    match (s, erased) {
        (I, false) => (II, 2),
        (I, true) => (V, 1),
        (II, false) => (I, 2),
        (II, true) => (IV, 1),
        (III, false) => (I, 1),
        (III, true) => (IV, 0),
        (IV, _) => (III, 0),
        (V, _) => (VI, 0),
        (VI, false) => (II, 1),
        (VI, true) => (V, 0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Noise {
    /// Erasures drawn from `ChaCha8Rng::seed_from_u64(seed)`.
    Sampled { seed: u64 },
    /// Round-level erasure flags; an erased round loses both bits.
    Fixed(RoundPattern),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub spec: ProtocolSpec,
    pub x_a: PartyInput,
    pub x_b: PartyInput,
    /// Total rounds, `k · n0`.
    pub rounds: usize,
    pub epsilon: f64,
    pub noise: Noise,
    /// Check the progress invariants every round.
    pub monitors: bool,
    /// Keep the per-round trace in the result.
    pub record_trace: bool,
}

impl SimConfig {
    /// Sampled-noise config with monitors and tracing on.
    pub fn new(
        spec: ProtocolSpec,
        x_a: PartyInput,
        x_b: PartyInput,
        rounds: usize,
        epsilon: f64,
        seed: u64,
    ) -> Self {
        Self {
            spec,
            x_a,
            x_b,
            rounds,
            epsilon,
            noise: Noise::Sampled { seed },
            monitors: true,
            record_trace: true,
        }
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_monitors(mut self, on: bool) -> Self {
        self.monitors = on;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    fn validate(&self) -> Result<ChannelParams> {
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be at least 1".into()));
        }
        if let Noise::Fixed(pat) = &self.noise {
            if pat.rounds() != self.rounds {
                return Err(Error::InvalidConfig(format!(
                    "pattern has {} rounds, config has {}",
                    pat.rounds(),
                    self.rounds
                )));
            }
        }
        ChannelParams::new(self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundRecord {
    pub i: usize,
    pub sender: Party,
    pub fresh: bool,
    pub erased: bool,
    pub len_a_before: usize,
    pub len_a_after: usize,
    pub len_b_before: usize,
    pub len_b_after: usize,
    pub proto_state: ProtoState,
    pub chain_state: ChainState,
    pub reward: u32,
}

impl RoundRecord {
    /// One JSON line: `i, sender, fresh, erased, lenA, lenB, state, chain,
    /// reward`, with lengths taken at the start of the round.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "i": self.i,
            "sender": self.sender,
            "fresh": self.fresh,
            "erased": self.erased,
            "lenA": self.len_a_before,
            "lenB": self.len_b_before,
            "state": self.proto_state,
            "chain": self.chain_state,
            "reward": self.reward,
        })
        .to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub out_a: Transcript,
    pub out_b: Transcript,
    pub success: bool,
    /// `|m_A| + |m_B|` after the last round.
    pub total_reward: u64,
    pub final_len_a: usize,
    pub final_len_b: usize,
    /// Empty unless the config asked for a trace.
    pub trace: Vec<RoundRecord>,
}

impl SimResult {
    /// Trace as JSON lines.
    pub fn trace_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.trace {
            s.push_str(&r.to_json_line());
            s.push('\n');
        }
        s
    }
}

fn violation(invariant: Invariant, round: usize, detail: String) -> Error {
    Error::InvariantViolation {
        invariant,
        round,
        detail,
    }
}

/// Start-of-round checks on the two party states.
fn check_round_start(a: &PartyState, b: &PartyState, i: usize) -> Result<()> {
    let (la, lb) = (a.estimate.len(), b.estimate.len());
    if la.abs_diff(lb) > 1 {
        return Err(violation(
            Invariant::LengthGap,
            i,
            format!("|m_A| = {la}, |m_B| = {lb}"),
        ));
    }
    if la != lb && !(la % 2 == 1 && lb % 2 == 0) {
        return Err(violation(
            Invariant::OddEvenSplit,
            i,
            format!("|m_A| = {la}, |m_B| = {lb}"),
        ));
    }
    if la == lb && (la % 2 == 0) != (i % 2 == 1) {
        return Err(violation(
            Invariant::EqualLengthRound,
            i,
            format!("|m_A| = |m_B| = {la}"),
        ));
    }
    for party in [a, b] {
        if party.parity != party.expected_parity() {
            return Err(violation(
                Invariant::ParityTable,
                i,
                format!(
                    "{} has length {} and parity {}",
                    party.party,
                    party.estimate.len(),
                    party.parity as u8
                ),
            ));
        }
    }
    Ok(())
}

/// Transcript bits appended beyond position `n0` are padding; only the
/// first `n0` bits are compared against the reference.
fn check_appended(party: &PartyState, reference: &Transcript, i: usize) -> Result<()> {
    let pos = party.estimate.len() - 1;
    if let Some(want) = reference.get(pos) {
        if party.estimate.last() != Some(want) {
            return Err(violation(
                Invariant::Prefix,
                i,
                format!(
                    "{} appended a wrong bit at position {}",
                    party.party,
                    pos + 1
                ),
            ));
        }
    }
    Ok(())
}

struct Run<'a> {
    spec: &'a ProtocolSpec,
    reference: &'a Transcript,
    rounds: usize,
    monitors: bool,
    record_trace: bool,
}

impl Run<'_> {
    fn execute<F>(&self, x_a: &PartyInput, x_b: &PartyInput, mut channel: F) -> Result<SimResult>
    where
        F: FnMut(usize, bool, bool) -> ReceivedPair,
    {
        let n0 = self.spec.n0();
        let mut alice = PartyState::new(Party::Alice, x_a.clone());
        let mut bob = PartyState::new(Party::Bob, x_b.clone());
        let mut trace = Vec::with_capacity(if self.record_trace { self.rounds } else { 0 });
        let classify = self.monitors || self.record_trace;

        let mut state = classify_state(0, 0, 1)?;
        if self.monitors && chain_state(state) != ChainState::S1 {
            return Err(violation(
                Invariant::Chain,
                1,
                "chain does not start in s1".into(),
            ));
        }

        for i in 1..=self.rounds {
            if self.monitors {
                check_round_start(&alice, &bob, i)?;
            }
            let (len_a, len_b) = (alice.estimate.len(), bob.estimate.len());
            let sender = Party::speaker_at(i);
            let (tx, rx) = match sender {
                Party::Alice => (&mut alice, &mut bob),
                Party::Bob => (&mut bob, &mut alice),
            };
            let ((t, p), fresh) = tx.send(self.spec)?;
            let received = channel(i, t, p);
            let erased = received.unerased().is_none();
            let accepted = rx.receive(received);
            if self.monitors {
                if fresh {
                    check_appended(tx, self.reference, i)?;
                }
                if accepted {
                    check_appended(rx, self.reference, i)?;
                }
            }

            let (len_a2, len_b2) = (alice.estimate.len(), bob.estimate.len());
            let reward = (len_a2 + len_b2 - len_a - len_b) as u32;
            if classify {
                let next = classify_state(len_a2, len_b2, i + 1)?;
                if self.monitors {
                    let predicted = predicted_transition(state, erased);
                    if (next, reward) != predicted {
                        return Err(violation(
                            Invariant::Transition,
                            i,
                            format!(
                                "{state} with erased={erased} went to ({next}, {reward}), expected ({}, {})",
                                predicted.0, predicted.1
                            ),
                        ));
                    }
                    let (from, to) = (chain_state(state), chain_state(next));
                    if reward_chain::step(from, erased) != (to, reward) {
                        return Err(violation(
                            Invariant::Chain,
                            i,
                            format!("{from} -> {to} with reward {reward} is not a chain edge"),
                        ));
                    }
                }
                if self.record_trace {
                    trace.push(RoundRecord {
                        i,
                        sender,
                        fresh,
                        erased,
                        len_a_before: len_a,
                        len_a_after: len_a2,
                        len_b_before: len_b,
                        len_b_after: len_b2,
                        proto_state: state,
                        chain_state: chain_state(state),
                        reward,
                    });
                }
                state = next;
            }
        }

        let (len_a, len_b) = (alice.estimate.len(), bob.estimate.len());
        let total_reward = (len_a + len_b) as u64;
        let out_a = alice.estimate.truncated(n0);
        let out_b = bob.estimate.truncated(n0);
        let success = out_a == *self.reference && out_b == *self.reference;
        if self.monitors {
            let by_reward = total_reward >= 2 * n0 as u64;
            let by_length = len_a >= n0 && len_b >= n0;
            if success != by_reward || success != by_length {
                return Err(violation(
                    Invariant::SuccessEquivalence,
                    self.rounds,
                    format!(
                        "success = {success}, T = {total_reward}, |m_A| = {len_a}, |m_B| = {len_b}"
                    ),
                ));
            }
        }
        Ok(SimResult {
            out_a,
            out_b,
            success,
            total_reward,
            final_len_a: len_a,
            final_len_b: len_b,
            trace,
        })
    }
}

fn fixed_channel(pattern: &RoundPattern) -> impl FnMut(usize, bool, bool) -> ReceivedPair + '_ {
    move |i, t, p| {
        if pattern.erased[i - 1] {
            ReceivedPair::ERASED
        } else {
            ReceivedPair::clear(t, p)
        }
    }
}

fn run_sampled(
    run: &Run<'_>,
    config: &SimConfig,
    params: &ChannelParams,
    seed: u64,
) -> Result<SimResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run.execute(&config.x_a, &config.x_b, |_, t, p| {
        transmit(t, p, params, &mut rng)
    })
}

fn run_with_reference(
    config: &SimConfig,
    reference: &Transcript,
    params: &ChannelParams,
    noise: &Noise,
) -> Result<SimResult> {
    let run = Run {
        spec: &config.spec,
        reference,
        rounds: config.rounds,
        monitors: config.monitors,
        record_trace: config.record_trace,
    };
    match noise {
        Noise::Sampled { seed } => run_sampled(&run, config, params, *seed),
        Noise::Fixed(pattern) => run.execute(&config.x_a, &config.x_b, fixed_channel(pattern)),
    }
}

/// Runs the simulation once.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    let params = config.validate()?;
    let reference = config.spec.reference_transcript(&config.x_a, &config.x_b)?;
    run_with_reference(config, &reference, &params, &config.noise)
}

/// Exact error probability: the weighted sum over all round-erasure
/// patterns of the runs that fail.
pub fn exact_error_prob(
    spec: &ProtocolSpec,
    x_a: &PartyInput,
    x_b: &PartyInput,
    rounds: usize,
    epsilon: f64,
) -> Result<f64> {
    let p = round_erasure_prob(epsilon)?;
    let patterns = enumerate_round_patterns(rounds, p)?;
    let reference = spec.reference_transcript(x_a, x_b)?;
    let run = Run {
        spec,
        reference: &reference,
        rounds,
        monitors: false,
        record_trace: false,
    };
    let mut failed = 0.0;
    for pattern in patterns {
        if pattern.weight == 0.0 {
            continue;
        }
        if !run.execute(x_a, x_b, fixed_channel(&pattern))?.success {
            failed += pattern.weight;
        }
    }
    Ok(failed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub trials: u64,
    pub errors: u64,
    pub estimate: f64,
    /// `3 · sqrt(est (1 - est) / trials)`.
    pub ci_halfwidth: f64,
}

impl ErrorEstimate {
    pub fn from_counts(trials: u64, errors: u64) -> Self {
        let estimate = errors as f64 / trials as f64;
        Self {
            trials,
            errors,
            estimate,
            ci_halfwidth: 3.0 * (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        }
    }
}

/// Failure fraction over `trials` independent runs. Trial `j` draws its
/// erasures from the stream seeded with `trial_seed(seed, j)`, where `seed`
/// is the config's sampled-noise seed, so the count does not depend on how
/// trials are scheduled across threads.
pub fn monte_carlo_error(config: &SimConfig, trials: u64) -> Result<ErrorEstimate> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let Noise::Sampled { seed } = config.noise else {
        return Err(Error::InvalidConfig(
            "Monte-Carlo estimation needs sampled noise".into(),
        ));
    };
    let params = config.validate()?;
    let reference = config.spec.reference_transcript(&config.x_a, &config.x_b)?;
    let mut cfg = config.clone();
    cfg.record_trace = false;
    let errors = (0..trials)
        .into_par_iter()
        .map(|j| {
            let noise = Noise::Sampled {
                seed: trial_seed(seed, j),
            };
            run_with_reference(&cfg, &reference, &params, &noise).map(|r| (!r.success) as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(ErrorEstimate::from_counts(trials, errors))
}

/// Checks the simulator trace against the reward chain: it starts in `s1`,
/// every round is a chain edge with its reward, and rewards add up to the
/// final total.
pub fn trace_matches_chain(result: &SimResult) -> bool {
    let Some(first) = result.trace.first() else {
        return result.total_reward == 0;
    };
    if first.chain_state != ChainState::S1 {
        return false;
    }
    let mut total = 0u64;
    for (k, r) in result.trace.iter().enumerate() {
        let (to, reward) = reward_chain::step(r.chain_state, r.erased);
        if reward != r.reward {
            return false;
        }
        if let Some(next) = result.trace.get(k + 1) {
            if next.chain_state != to {
                return false;
            }
        }
        total += r.reward as u64;
    }
    total == result.total_reward
}
