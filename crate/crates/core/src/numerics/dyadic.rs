use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::NumericsError;

/// Exact nonnegative dyadic rational `mantissa / 2^scale`.
///
/// Always canonical: the mantissa is odd, or zero with scale zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mantissa: BigUint,
    scale: u64,
}

impl Dyadic {
    pub fn new(mantissa: BigUint, scale: u64) -> Self {
        let mut d = Self { mantissa, scale };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Self {
            mantissa: BigUint::zero(),
            scale: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            mantissa: BigUint::one(),
            scale: 0,
        }
    }

    pub fn from_u64(v: u64) -> Self {
        Self::new(BigUint::from(v), 0)
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u64) -> Self {
        Self {
            mantissa: BigUint::one(),
            scale: k,
        }
    }

    /// `2^k`.
    pub fn pow2(k: u64) -> Self {
        Self {
            mantissa: BigUint::one() << k,
            scale: 0,
        }
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    /// `self / 2^k`.
    pub fn shr(&self, k: u64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self {
            mantissa: self.mantissa.clone(),
            scale: self.scale + k,
        }
    }

    pub fn half(&self) -> Self {
        self.shr(1)
    }

    /// `self * 2^k`.
    pub fn shl(&self, k: u64) -> Self {
        let absorbed = k.min(self.scale);
        Self::new(&self.mantissa << (k - absorbed), self.scale - absorbed)
    }

    pub fn checked_sub(&self, other: &Dyadic) -> Option<Dyadic> {
        let (a, b, scale) = align(self, other);
        if a < b {
            None
        } else {
            Some(Self::new(a - b, scale))
        }
    }

    /// True iff the value lies in `[0, 1)`.
    pub fn is_unit_interval(&self) -> bool {
        self.mantissa.bits() <= self.scale
    }

    /// Bit `i >= 1` of the binary expansion, i.e. the coefficient of `2^-i`.
    pub fn fraction_bit(&self, i: u64) -> bool {
        if i > self.scale {
            return false;
        }
        self.mantissa.bit(self.scale - i)
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.mantissa.bits();
        if bits == 0 {
            return 0.0;
        }
        let drop = bits.saturating_sub(60);
        let top = (&self.mantissa >> drop)
            .iter_u64_digits()
            .next()
            .unwrap_or(0) as f64;
        top * 2f64.powi(drop as i32 - self.scale as i32)
    }

    /// Approximate `log2(self)`; `-inf` for zero. Reporting only.
    pub fn log2_f64(&self) -> f64 {
        let bits = self.mantissa.bits();
        if bits == 0 {
            return f64::NEG_INFINITY;
        }
        let drop = bits.saturating_sub(60);
        let top = (&self.mantissa >> drop)
            .iter_u64_digits()
            .next()
            .unwrap_or(0) as f64;
        top.log2() + drop as f64 - self.scale as f64
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.scale = 0;
            return;
        }
        let tz = self.mantissa.trailing_zeros().unwrap_or(0).min(self.scale);
        if tz > 0 {
            self.mantissa >>= tz;
            self.scale -= tz;
        }
    }
}

/// Both mantissas brought to the larger scale.
pub(crate) fn align(a: &Dyadic, b: &Dyadic) -> (BigUint, BigUint, u64) {
    let scale = a.scale.max(b.scale);
    (
        &a.mantissa << (scale - a.scale),
        &b.mantissa << (scale - b.scale),
        scale,
    )
}

/// Position of the leftmost differing bit of two values in `[0,1)`, counting
/// from 1 at the coefficient of `2^-1`. `None` iff the values are equal.
pub fn leftmost_diff_bit(a: &Dyadic, b: &Dyadic) -> Result<Option<u64>, NumericsError> {
    for v in [a, b] {
        if !v.is_unit_interval() {
            return Err(NumericsError::OutOfRange(format!("{v} is not in [0,1)")));
        }
    }
    let (x, y, scale) = align(a, b);
    let diff = x ^ y;
    if diff.is_zero() {
        return Ok(None);
    }
    Ok(Some(scale - (diff.bits() - 1)))
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.scale == other.scale {
            return self.mantissa.cmp(&other.mantissa);
        }
        let (a, b, _) = align(self, other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<&Dyadic> for &Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: &Dyadic) -> Dyadic {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        let (a, b, scale) = align(self, rhs);
        Dyadic::new(a + b, scale)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl AddAssign<&Dyadic> for Dyadic {
    fn add_assign(&mut self, rhs: &Dyadic) {
        *self = &*self + rhs;
    }
}

impl Mul<&Dyadic> for &Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mantissa * &rhs.mantissa, self.scale + rhs.scale)
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: Dyadic) -> Dyadic {
        &self * &rhs
    }
}

impl<'a> Sum<&'a Dyadic> for Dyadic {
    fn sum<I: Iterator<Item = &'a Dyadic>>(iter: I) -> Self {
        iter.fold(Dyadic::zero(), |acc, d| &acc + d)
    }
}

impl Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Self {
        iter.fold(Dyadic::zero(), |acc, d| &acc + &d)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.mantissa, self.scale)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Dyadic {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NumericsError::Parse(format!("expected mantissa/2^scale, got {s:?}"));
        let (m, e) = s.trim().split_once("/2^").ok_or_else(bad)?;
        let mantissa: BigUint = m.parse().map_err(|_| bad())?;
        let scale: u64 = e.parse().map_err(|_| bad())?;
        Ok(Dyadic::new(mantissa, scale))
    }
}
