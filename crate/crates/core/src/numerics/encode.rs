//! Numeral and pairing codes.

use serde::{Deserialize, Serialize};

use super::{BitString, NumericsError};

/// Bijective binary numeral: 0→"", 1→"0", 2→"1", 3→"00", ...
///
/// `n` maps to the binary expansion of `n + 1` with its leading one removed.
pub fn encode_num(n: u64) -> BitString {
    let v = n as u128 + 1;
    let width = 128 - v.leading_zeros() as usize - 1;
    let bits = (0..width).rev().map(|i| (v >> i) & 1 == 1).collect();
    BitString::from_bits(bits)
}

/// Inverse of [`encode_num`]. Fails for strings longer than 63 bits.
pub fn decode_num(s: &BitString) -> Result<u64, NumericsError> {
    if s.len() > 63 {
        return Err(NumericsError::OutOfRange(format!(
            "numeral of {} bits does not fit in u64",
            s.len()
        )));
    }
    let mut v: u64 = 1;
    for &b in s.bits() {
        v = (v << 1) | b as u64;
    }
    Ok(v - 1)
}

/// How stage numbers are written as strings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Numerals {
    /// Bijective binary, see [`encode_num`].
    #[default]
    Binary,
    /// `n` zeros.
    Unary,
}

impl Numerals {
    pub fn encode(self, n: u64) -> BitString {
        match self {
            Numerals::Binary => encode_num(n),
            Numerals::Unary => BitString::repeat(false, n as usize),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Numerals::Binary => "binary",
            Numerals::Unary => "unary",
        }
    }
}

impl std::str::FromStr for Numerals {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary" => Ok(Numerals::Binary),
            "unary" => Ok(Numerals::Unary),
            other => Err(NumericsError::Parse(format!(
                "unknown numeral convention {other:?}"
            ))),
        }
    }
}

/// Elias gamma code of `m >= 1`.
pub fn gamma_encode(m: u64) -> BitString {
    assert!(m >= 1, "gamma code is defined for positive integers");
    let width = 64 - m.leading_zeros() as usize;
    let mut out = BitString::repeat(false, width - 1);
    out.extend_from(&BitString::from_u64(m, width));
    out
}

/// Decode a gamma code at the start of `s`; returns the value and the
/// number of bits read.
pub fn gamma_decode(s: &BitString) -> Result<(u64, usize), NumericsError> {
    let zeros = s.bits().iter().take_while(|&&b| !b).count();
    if zeros >= 64 {
        return Err(NumericsError::Decode("gamma prefix too long".into()));
    }
    let end = 2 * zeros + 1;
    if s.len() < end {
        return Err(NumericsError::Decode(format!(
            "truncated gamma code in {s}"
        )));
    }
    let m = s.bits()[zeros..end]
        .iter()
        .fold(0u64, |acc, &b| (acc << 1) | b as u64);
    Ok((m, end))
}

/// `gamma(|x| + 1) ++ x ++ y`.
pub fn pair_encode(x: &BitString, y: &BitString) -> BitString {
    let mut out = gamma_encode(x.len() as u64 + 1);
    out.extend_from(x);
    out.extend_from(y);
    out
}

pub fn pair_decode(z: &BitString) -> Result<(BitString, BitString), NumericsError> {
    let (m, read) = gamma_decode(z)?;
    let xlen = (m - 1) as usize;
    if z.len() < read + xlen {
        return Err(NumericsError::Decode(format!(
            "pair code {z} declares a first component of {xlen} bits"
        )));
    }
    Ok((z.slice(read, read + xlen), z.slice(read + xlen, z.len())))
}
