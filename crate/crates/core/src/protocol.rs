//! Noiseless alternating two-party protocols and their reference transcripts.
//!
//! Alice speaks at odd positions (after an even-length prefix) and Bob at
//! even positions. A protocol is either an explicit prefix table, used for
//! hand-built test protocols, or a keyed pseudorandom function that scales to
//! long transcripts without storing `2^n0` entries.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bits::{BitString, Transcript};
use crate::error::{Error, Result};

/// Tables without a default entry must list every prefix; beyond this many
/// bits that is not practical.
pub const MAX_COMPLETE_TABLE_N0: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    #[serde(rename = "A")]
    Alice,
    #[serde(rename = "B")]
    Bob,
}

impl Party {
    /// Who speaks at 1-based position `r` (of the transcript, or of the
    /// simulation round sequence).
    pub fn speaker_at(r: usize) -> Party {
        if r % 2 == 1 {
            Party::Alice
        } else {
            Party::Bob
        }
    }

    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "A",
            Party::Bob => "B",
        })
    }
}

/// A party's private input; opaque to everything but the protocol function.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct PartyInput(BitString);

impl PartyInput {
    pub fn new(bits: BitString) -> Self {
        Self(bits)
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }
}

impl FromStr for PartyInput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(PartyInput)
    }
}

/// Value stored in a table entry: a constant bit, or the `i`-th bit of the
/// speaking party's input (0 when the input is shorter).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableBit {
    Const(bool),
    InputBit(usize),
}

impl TableBit {
    fn eval(self, input: &PartyInput) -> bool {
        match self {
            TableBit::Const(b) => b,
            TableBit::InputBit(i) => input.bits().get(i).unwrap_or(false),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Backing {
    Table {
        entries: HashMap<BitString, TableBit>,
        default: Option<TableBit>,
    },
    Prf {
        seed: u64,
    },
}

/// Deterministic next-bit function of a noiseless alternating protocol of
/// length `n0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    n0: usize,
    backing: Backing,
}

impl ProtocolSpec {
    /// Keyed-PRF protocol; every prefix maps to a pseudorandom bit that also
    /// depends on the speaking party and its input.
    pub fn prf(n0: usize, seed: u64) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::EmptyProtocol);
        }
        Ok(Self {
            n0,
            backing: Backing::Prf { seed },
        })
    }

    /// Explicit prefix table. Without a `default`, every prefix of length
    /// below `n0` must be present.
    pub fn table<I>(n0: usize, entries: I, default: Option<TableBit>) -> Result<Self>
    where
        I: IntoIterator<Item = (BitString, TableBit)>,
    {
        if n0 == 0 {
            return Err(Error::EmptyProtocol);
        }
        let mut map = HashMap::new();
        for (prefix, bit) in entries {
            if prefix.len() >= n0 {
                return Err(Error::InvalidSpec(format!(
                    "table prefix {prefix} has length >= n0 = {n0}"
                )));
            }
            if map.insert(prefix.clone(), bit).is_some() {
                return Err(Error::InvalidSpec(format!(
                    "duplicate table prefix {prefix:?}"
                )));
            }
        }
        if default.is_none() {
            if n0 > MAX_COMPLETE_TABLE_N0 {
                return Err(Error::InvalidSpec(format!(
                    "a complete table needs 2^{n0} - 1 entries; give a default"
                )));
            }
            let needed = (1usize << n0) - 1;
            if map.len() != needed {
                return Err(Error::InvalidSpec(format!(
                    "table has {} entries, a complete table for n0 = {n0} needs {needed}",
                    map.len()
                )));
            }
        }
        Ok(Self {
            n0,
            backing: Backing::Table {
                entries: map,
                default,
            },
        })
    }

    /// Every bit of the transcript is `bit`.
    pub fn constant(n0: usize, bit: bool) -> Result<Self> {
        Self::table(n0, [], Some(TableBit::Const(bit)))
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    /// The bit `party` sends after `prefix`, given its private `input`.
    pub fn next_bit(&self, party: Party, input: &PartyInput, prefix: &Transcript) -> Result<bool> {
        let len = prefix.len();
        if len >= self.n0 {
            return Err(Error::OutOfRange { len, n0: self.n0 });
        }
        if Party::speaker_at(len + 1) != party {
            return Err(Error::ParityMismatch { party, len });
        }
        match &self.backing {
            Backing::Table { entries, default } => entries
                .get(prefix)
                .or(default.as_ref())
                .map(|bit| bit.eval(input))
                .ok_or_else(|| Error::MissingEntry {
                    prefix: prefix.to_string(),
                }),
            Backing::Prf { seed } => Ok(prf_bit(*seed, party, input, prefix)),
        }
    }

    /// The transcript of the protocol run without noise.
    pub fn reference_transcript(&self, alice: &PartyInput, bob: &PartyInput) -> Result<Transcript> {
        let mut transcript = Transcript::with_capacity(self.n0);
        for r in 1..=self.n0 {
            let party = Party::speaker_at(r);
            let input = match party {
                Party::Alice => alice,
                Party::Bob => bob,
            };
            let bit = self.next_bit(party, input, &transcript)?;
            transcript.push(bit);
        }
        Ok(transcript)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&SpecJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<SpecJson>(s)?.try_into()
    }
}

/// Random test protocol, reproducible from `(n0, seed)`.
pub fn make_random_spec(n0: usize, seed: u64) -> Result<ProtocolSpec> {
    ProtocolSpec::prf(n0, seed)
}

pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn absorb(h: u64, word: u64) -> u64 {
    mix64(h.rotate_left(23) ^ word ^ 0x9e37_79b9_7f4a_7c15)
}

fn absorb_bits(mut h: u64, bits: &BitString) -> u64 {
    h = absorb(h, bits.len() as u64);
    for &w in bits.words() {
        h = absorb(h, w);
    }
    h
}

fn prf_bit(seed: u64, party: Party, input: &PartyInput, prefix: &Transcript) -> bool {
    let mut h = mix64(seed ^ 0x5151_7a3c_0b1d_e11a);
    h = absorb(h, party as u64);
    h = absorb_bits(h, input.bits());
    h = absorb_bits(h, prefix);
    mix64(h) >> 63 == 1
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SpecKind {
    Table,
    Prf,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(untagged)]
enum EntryJson {
    Bit(u8),
    Input(InputRef),
}

/// `"x3"` = bit 3 of the speaker's input.
#[derive(Clone, Copy)]
struct InputRef(usize);

impl Serialize for InputRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("x{}", self.0))
    }
}

impl<'de> Deserialize<'de> for InputRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.strip_prefix('x')
            .and_then(|i| i.parse().ok())
            .map(InputRef)
            .ok_or_else(|| serde::de::Error::custom(format!("expected x<index>, got {s:?}")))
    }
}

impl From<TableBit> for EntryJson {
    fn from(b: TableBit) -> Self {
        match b {
            TableBit::Const(b) => EntryJson::Bit(b as u8),
            TableBit::InputBit(i) => EntryJson::Input(InputRef(i)),
        }
    }
}

impl TryFrom<EntryJson> for TableBit {
    type Error = Error;

    fn try_from(e: EntryJson) -> Result<Self> {
        match e {
            EntryJson::Bit(0) => Ok(TableBit::Const(false)),
            EntryJson::Bit(1) => Ok(TableBit::Const(true)),
            EntryJson::Bit(b) => Err(Error::InvalidSpec(format!("table bit {b} is not 0 or 1"))),
            EntryJson::Input(InputRef(i)) => Ok(TableBit::InputBit(i)),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    n0: usize,
    kind: SpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<(String, EntryJson)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<EntryJson>,
}

impl From<&ProtocolSpec> for SpecJson {
    fn from(spec: &ProtocolSpec) -> Self {
        match &spec.backing {
            Backing::Prf { seed } => SpecJson {
                n0: spec.n0,
                kind: SpecKind::Prf,
                seed: Some(*seed),
                entries: None,
                default: None,
            },
            Backing::Table { entries, default } => {
                let mut rows: Vec<_> = entries
                    .iter()
                    .map(|(k, v)| (k.to_string(), EntryJson::from(*v)))
                    .collect();
                rows.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
                SpecJson {
                    n0: spec.n0,
                    kind: SpecKind::Table,
                    seed: None,
                    entries: Some(rows),
                    default: default.map(EntryJson::from),
                }
            }
        }
    }
}

impl TryFrom<SpecJson> for ProtocolSpec {
    type Error = Error;

    fn try_from(j: SpecJson) -> Result<Self> {
        match j.kind {
            SpecKind::Prf => {
                let seed = j
                    .seed
                    .ok_or_else(|| Error::InvalidSpec("prf spec needs a seed".into()))?;
                ProtocolSpec::prf(j.n0, seed)
            }
            SpecKind::Table => {
                let entries = j
                    .entries
                    .unwrap_or_default()
                    .into_iter()
                    .map(|(k, v)| Ok((k.parse()?, v.try_into()?)))
                    .collect::<Result<Vec<_>>>()?;
                let default = j.default.map(TableBit::try_from).transpose()?;
                ProtocolSpec::table(j.n0, entries, default)
            }
        }
    }
}
