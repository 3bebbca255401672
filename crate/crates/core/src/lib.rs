//! Simulation of alternating two-party protocols over the binary erasure
//! channel, with the reward-chain analysis of the simulator's progress and
//! the interactive-capacity lower bounds that follow from it.
//!
//! - [`protocol`]: noiseless protocols and reference transcripts
//! - [`channel`]: BEC(ε), sampled and enumerated
//! - [`simulator`]: the two-party simulation with invariant monitors
//! - [`reward_chain`]: the three-state reward process, expectations,
//!   hitting times and the error bound
//! - [`capacity`]: capacity lower bounds
//! - [`harness`]: the `bec-sim` experiment runner

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bits;
pub mod capacity;
pub mod channel;
pub mod error;
pub mod harness;
pub mod protocol;
pub mod reward_chain;
pub mod simulator;

pub use bits::{BitString, Transcript};
pub use error::{Error, Invariant, Result};
pub use protocol::{make_random_spec, Party, PartyInput, ProtocolSpec, TableBit};
pub use simulator::{Noise, SimConfig, SimResult};
