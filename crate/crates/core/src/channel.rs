//! BEC(ε) on the two-bit `(message, parity)` transmissions, sampled or
//! enumerated round by round.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::protocol::mix64;

/// Largest round count the exhaustive enumerators accept.
pub const MAX_ENUM_ROUNDS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    epsilon: f64,
}

impl ChannelParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        Ok(Self {
            epsilon: check_unit("epsilon", epsilon)?,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// What the receiver sees; `None` marks an erasure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceivedPair {
    pub t: Option<bool>,
    pub p: Option<bool>,
}

impl ReceivedPair {
    pub const ERASED: ReceivedPair = ReceivedPair { t: None, p: None };

    pub fn clear(t: bool, p: bool) -> Self {
        Self {
            t: Some(t),
            p: Some(p),
        }
    }

    /// Both bits arrived.
    pub fn unerased(&self) -> Option<(bool, bool)> {
        self.t.zip(self.p)
    }
}

/// Sends `(t, p)` through the channel, erasing each bit independently.
pub fn transmit<R: Rng + ?Sized>(
    t: bool,
    p: bool,
    params: &ChannelParams,
    rng: &mut R,
) -> ReceivedPair {
    let eps = params.epsilon;
    ReceivedPair {
        t: (!rng.random_bool(eps)).then_some(t),
        p: (!rng.random_bool(eps)).then_some(p),
    }
}

/// Probability that at least one bit of a round is erased: `1 - (1-ε)^2`.
pub fn round_erasure_prob(epsilon: f64) -> Result<f64> {
    let eps = check_unit("epsilon", epsilon)?;
    Ok(1.0 - (1.0 - eps) * (1.0 - eps))
}

/// Seed of trial `trial` under `master_seed`.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    mix64(mix64(master_seed ^ 0x7fb5_d329_728e_a185).wrapping_add(trial))
}

/// Independent RNG stream for one trial.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master_seed, trial))
}

/// One flag per round (true = at least one bit of the round erased).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundPattern {
    pub erased: Vec<bool>,
    pub weight: f64,
}

impl RoundPattern {
    /// Pattern with its probability under round-erasure probability `p`.
    pub fn new(erased: Vec<bool>, p: f64) -> Self {
        let e = erased.iter().filter(|&&x| x).count();
        let weight = p.powi(e as i32) * (1.0 - p).powi((erased.len() - e) as i32);
        Self { erased, weight }
    }

    pub fn rounds(&self) -> usize {
        self.erased.len()
    }

    pub fn erasures(&self) -> usize {
        self.erased.iter().filter(|&&x| x).count()
    }

    /// `[0,1,0,...]`, for debugging dumps.
    pub fn flags_json(&self) -> String {
        let flags: Vec<u8> = self.erased.iter().map(|&b| b as u8).collect();
        serde_json::to_string(&flags).expect("flags serialize")
    }
}

/// Iterator over all `2^rounds` round patterns. Pattern `m` erases round
/// `i` (1-based) iff bit `i-1` of `m` is set.
#[derive(Debug, Clone)]
pub struct RoundPatterns {
    rounds: usize,
    p: f64,
    next: u64,
    end: u64,
}

impl Iterator for RoundPatterns {
    type Item = RoundPattern;

    fn next(&mut self) -> Option<RoundPattern> {
        if self.next >= self.end {
            return None;
        }
        let m = self.next;
        self.next += 1;
        let erased = (0..self.rounds).map(|i| m >> i & 1 == 1).collect();
        Some(RoundPattern::new(erased, self.p))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for RoundPatterns {}

pub fn enumerate_round_patterns(rounds: usize, p: f64) -> Result<RoundPatterns> {
    if rounds == 0 {
        return Err(Error::InvalidConfig("rounds must be positive".into()));
    }
    if rounds > MAX_ENUM_ROUNDS {
        return Err(Error::EnumerationGuard {
            rounds,
            limit: MAX_ENUM_ROUNDS,
        });
    }
    let p = check_unit("p", p)?;
    Ok(RoundPatterns {
        rounds,
        p,
        next: 0,
        end: 1 << rounds,
    })
}
