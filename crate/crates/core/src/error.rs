use std::fmt;

use crate::protocol::Party;

/// Runtime invariant checked by the simulator monitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Invariant {
    /// Estimated transcript lengths never differ by more than one.
    LengthGap,
    /// Unequal lengths imply Alice's is odd and Bob's is even.
    OddEvenSplit,
    /// Equal even lengths only at odd rounds, equal odd lengths only at even rounds.
    EqualLengthRound,
    /// Parity bit is a function of the estimate length mod 4.
    ParityTable,
    /// Estimates are prefixes of the reference transcript.
    Prefix,
    /// Protocol-state transition and reward match the progress table.
    Transition,
    /// Chain-state transition is an edge of the reward chain with its reward.
    Chain,
    /// Success iff total reward reaches twice the protocol length.
    SuccessEquivalence,
}

impl Invariant {
    pub const ALL: [Invariant; 8] = [
        Invariant::LengthGap,
        Invariant::OddEvenSplit,
        Invariant::EqualLengthRound,
        Invariant::ParityTable,
        Invariant::Prefix,
        Invariant::Transition,
        Invariant::Chain,
        Invariant::SuccessEquivalence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Invariant::LengthGap => "length_gap",
            Invariant::OddEvenSplit => "odd_even_split",
            Invariant::EqualLengthRound => "equal_length_round",
            Invariant::ParityTable => "parity_table",
            Invariant::Prefix => "prefix",
            Invariant::Transition => "transition",
            Invariant::Chain => "chain",
            Invariant::SuccessEquivalence => "success_equivalence",
        }
    }
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("protocol length n0 must be at least 1")]
    EmptyProtocol,

    #[error("{party} cannot speak after a prefix of length {len}")]
    ParityMismatch { party: Party, len: usize },

    #[error("prefix length {len} is outside the protocol (n0 = {n0})")]
    OutOfRange { len: usize, n0: usize },

    #[error("protocol table has no entry for prefix {prefix:?}")]
    MissingEntry { prefix: String },

    #[error("invalid protocol spec: {0}")]
    InvalidSpec(String),

    #[error("{name} = {value} is outside {range}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("refusing to enumerate {rounds} rounds (limit is {limit})")]
    EnumerationGuard { rounds: usize, limit: usize },

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("invariant {invariant} violated at round {round}: {detail}")]
    InvariantViolation {
        invariant: Invariant,
        round: usize,
        detail: String,
    },

    #[error("k = {k} must exceed {threshold} for epsilon = {epsilon}")]
    BelowThreshold {
        k: f64,
        threshold: f64,
        epsilon: f64,
    },

    #[error("reward chain is not irreducible at p = {0}")]
    Reducible(f64),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfDomain {
            name,
            value,
            range: "[0, 1]",
        })
    }
}
