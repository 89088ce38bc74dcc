//! Exact bitstring and dyadic/rational arithmetic plus the numeral and
//! pairing codes every other module computes over.
//!
//! Text forms are fixed: bitstrings are ASCII `0`/`1`, dyadics are
//! `mantissa/2^scale`, rationals are `num DIV den` with dyadic operands.

mod bitstring;
mod dyadic;
mod encode;
pub mod log2;
mod rational;

pub use bitstring::{bits, BitString};
pub use dyadic::{leftmost_diff_bit, Dyadic};
pub use encode::{
    decode_num, encode_num, gamma_decode, gamma_encode, pair_decode, pair_encode, Numerals,
};
pub use rational::{rational_sum, Rational};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("zero denominator")]
    ZeroDenominator,
}

/// Serde through the fixed text forms, so JSON cells match CSV cells.
macro_rules! serde_via_text {
    ($($ty:ty),*) => {$(
        impl serde::Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> serde::Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = <std::borrow::Cow<'de, str>>::deserialize(d)?;
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    )*};
}

serde_via_text!(BitString, Dyadic, Rational);
