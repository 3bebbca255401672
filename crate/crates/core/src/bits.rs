//! Packed bit strings used for transcripts and private inputs.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Growable bit string packed into 64-bit words, LSB first.
///
/// Bits past `len` in the last word are always zero, so derived equality and
/// hashing agree with bitwise equality.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    words: Vec<u64>,
    len: usize,
}

/// A (possibly partial) transcript of the noiseless protocol.
pub type Transcript = BitString;

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = Self::new();
        for b in bits {
            out.push(b);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) {
        let (w, o) = (self.len / 64, self.len % 64);
        if o == 0 {
            self.words.push(0);
        }
        if bit {
            self.words[w] |= 1 << o;
        }
        self.len += 1;
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        (i < self.len).then(|| self.words[i / 64] >> (i % 64) & 1 == 1)
    }

    pub fn last(&self) -> Option<bool> {
        self.len.checked_sub(1).and_then(|i| self.get(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.words[i / 64] >> (i % 64) & 1 == 1)
    }

    /// The first `n` bits (or the whole string if it is shorter).
    pub fn truncated(&self, n: usize) -> Self {
        if n >= self.len {
            return self.clone();
        }
        let mut words = self.words[..n.div_ceil(64)].to_vec();
        if !n.is_multiple_of(64) {
            *words.last_mut().unwrap() &= (1u64 << (n % 64)) - 1;
        }
        Self { words, len: n }
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len <= other.len && other.truncated(self.len) == *self
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl FromStr for BitString {
    type Err = Error;

    /// Parses a string of `0`/`1` characters in transmission order.
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidSpec(format!(
                    "bit strings contain only 0 and 1, found {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString::from_bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_and_display() {
        let b: BitString = "0110".parse().unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b.get(1), Some(true));
        assert_eq!(b.get(4), None);
        assert_eq!(b.to_string(), "0110");
        assert!("01x".parse::<BitString>().is_err());
        assert!("".parse::<BitString>().unwrap().is_empty());
    }

    #[test]
    fn truncation_clears_tail_bits() {
        let b: BitString = "1111111".parse().unwrap();
        let t = b.truncated(3);
        assert_eq!(t, "111".parse().unwrap());
        assert!(t.is_prefix_of(&b));
        assert!(!b.is_prefix_of(&t));
    }

    proptest! {
        #[test]
        fn prefix_matches_vec_semantics(bits in proptest::collection::vec(any::<bool>(), 0..200), cut in 0usize..220) {
            let b = BitString::from_bits(bits.iter().copied());
            let t = b.truncated(cut);
            let expected: Vec<bool> = bits.iter().copied().take(cut).collect();
            prop_assert_eq!(t.iter().collect::<Vec<_>>(), expected.clone());
            prop_assert_eq!(t, BitString::from_bits(expected));
        }
    }
}
