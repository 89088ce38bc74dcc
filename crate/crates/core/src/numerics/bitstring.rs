use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;

use super::NumericsError;

/// A finite binary string.
///
/// Ordering is length first, then lexicographic within a fixed length. This is
/// the order used to enumerate programs and to scan the adversary's list.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self { bits: Vec::new() }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// `n` copies of `bit`.
    pub fn repeat(bit: bool, n: usize) -> Self {
        Self { bits: vec![bit; n] }
    }

    /// The string of length `len` whose bits spell `value` in big-endian order.
    /// Bits of `value` above `len` are ignored.
    pub fn from_u64(value: u64, len: usize) -> Self {
        let bits = (0..len)
            .rev()
            .map(|i| i < 64 && (value >> i) & 1 == 1)
            .collect();
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut bits = Vec::with_capacity(self.len() + other.len());
        bits.extend_from_slice(&self.bits);
        bits.extend_from_slice(&other.bits);
        Self { bits }
    }

    pub fn slice(&self, start: usize, end: usize) -> BitString {
        Self {
            bits: self.bits[start..end].to_vec(),
        }
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.bits.starts_with(&self.bits)
    }

    /// Rank of this string among strings of the same length (big-endian value).
    pub fn rank(&self) -> BigUint {
        let mut acc = BigUint::zero();
        for &b in &self.bits {
            acc <<= 1u32;
            if b {
                acc += 1u32;
            }
        }
        acc
    }

    /// Next string of the same length, or `None` after `1^n`.
    pub fn successor(&self) -> Option<BitString> {
        let mut bits = self.bits.clone();
        for i in (0..bits.len()).rev() {
            if bits[i] {
                bits[i] = false;
            } else {
                bits[i] = true;
                return Some(Self { bits });
            }
        }
        None
    }

    /// All strings of length exactly `n`, in lexicographic order.
    pub fn all_of_len(n: usize) -> impl Iterator<Item = BitString> {
        let mut next = Some(BitString::repeat(false, n));
        std::iter::from_fn(move || {
            let cur = next.take()?;
            next = cur.successor();
            Some(cur)
        })
    }

    /// All strings of length at most `n`, length-then-lexicographic.
    pub fn all_up_to(n: usize) -> impl Iterator<Item = BitString> {
        (0..=n).flat_map(BitString::all_of_len)
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bits
            .len()
            .cmp(&other.bits.len())
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(NumericsError::Parse(format!(
                    "invalid bit {other:?} in bitstring {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitString::from_bits)
    }
}

/// Shorthand for literal bitstrings in code and tests. Panics on non-binary text.
pub fn bits(s: &str) -> BitString {
    s.parse().expect("literal bitstring")
}
