use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{Dyadic, NumericsError};

/// Exact nonnegative ratio of two dyadics.
///
/// Stored in a unique reduced form `numerator / denominator` where the
/// denominator is an odd integer coprime to the numerator's mantissa, so
/// structural equality is value equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational {
    numerator: Dyadic,
    denominator: Dyadic,
}

impl Rational {
    pub fn new(numerator: Dyadic, denominator: Dyadic) -> Result<Self, NumericsError> {
        if denominator.is_zero() {
            return Err(NumericsError::ZeroDenominator);
        }
        let num = numerator.mantissa() << denominator.scale();
        let den = denominator.mantissa() << numerator.scale();
        Ok(Self::from_ratio(num, den))
    }

    /// `num / den` for integers; panics on a zero denominator.
    pub fn from_ratio(num: BigUint, den: BigUint) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Self::zero();
        }
        let twos = den.trailing_zeros().unwrap_or(0);
        let odd = den >> twos;
        let g = num.gcd(&odd);
        Self {
            numerator: Dyadic::new(num / &g, twos),
            denominator: Dyadic::new(odd / g, 0),
        }
    }

    pub fn from_integer(n: u64) -> Self {
        Self::from_dyadic(Dyadic::from_u64(n))
    }

    pub fn from_u64_ratio(num: u64, den: u64) -> Self {
        Self::from_ratio(BigUint::from(num), BigUint::from(den))
    }

    pub fn from_dyadic(d: Dyadic) -> Self {
        Self {
            numerator: d,
            denominator: Dyadic::one(),
        }
    }

    pub fn zero() -> Self {
        Self::from_dyadic(Dyadic::zero())
    }

    pub fn one() -> Self {
        Self::from_dyadic(Dyadic::one())
    }

    pub fn numerator(&self) -> &Dyadic {
        &self.numerator
    }

    pub fn denominator(&self) -> &Dyadic {
        &self.denominator
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// The value as a dyadic, if its reduced denominator is one.
    pub fn as_dyadic(&self) -> Option<&Dyadic> {
        (self.denominator.mantissa().is_one()).then_some(&self.numerator)
    }

    /// Integer pair `(p, q)` with value `p / q`.
    pub fn to_ratio(&self) -> (BigUint, BigUint) {
        (
            self.numerator.mantissa().clone(),
            self.denominator.mantissa() << self.numerator.scale(),
        )
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Rational, NumericsError> {
        if rhs.is_zero() {
            return Err(NumericsError::ZeroDenominator);
        }
        let (a, b) = self.to_ratio();
        let (c, d) = rhs.to_ratio();
        Ok(Self::from_ratio(a * d, b * c))
    }

    pub fn checked_sub(&self, rhs: &Rational) -> Option<Rational> {
        let (a, b) = self.to_ratio();
        let (c, d) = rhs.to_ratio();
        let (l, r) = (a * &d, c * &b);
        (l >= r).then(|| Self::from_ratio(l - r, b * d))
    }

    pub fn recip(&self) -> Result<Rational, NumericsError> {
        Rational::one().checked_div(self)
    }

    pub fn mul_dyadic(&self, d: &Dyadic) -> Rational {
        self * &Rational::from_dyadic(d.clone())
    }

    /// Largest `k` with `2^k <= self`; `None` for zero.
    pub fn floor_log2(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let (p, q) = self.to_ratio();
        let mut k = p.bits() as i64 - q.bits() as i64;
        // 2^k <= p/q  <=>  p >= q*2^k
        let le = |k: i64| {
            if k >= 0 {
                p >= (&q << k as u64)
            } else {
                (&p << (-k) as u64) >= q
            }
        };
        while !le(k) {
            k -= 1;
        }
        while le(k + 1) {
            k += 1;
        }
        Some(k)
    }

    /// Smallest `k` with `self <= 2^k`; `None` for zero.
    pub fn ceil_log2(&self) -> Option<i64> {
        let k = self.floor_log2()?;
        let exact = match k {
            k if k >= 0 => self == &Rational::from_dyadic(Dyadic::pow2(k as u64)),
            k => self == &Rational::from_dyadic(Dyadic::pow2_neg((-k) as u64)),
        };
        Some(if exact { k } else { k + 1 })
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator.to_f64() / self.denominator.to_f64()
    }

    pub fn log2_f64(&self) -> f64 {
        self.numerator.log2_f64() - self.denominator.log2_f64()
    }
}

/// Exact sum of nonnegative rationals.
pub fn rational_sum<'a, I>(values: I) -> Rational
where
    I: IntoIterator<Item = &'a Rational>,
{
    // Terms sharing a denominator add as dyadics; only distinct
    // denominators pay for cross-multiplication.
    let mut groups: std::collections::BTreeMap<&BigUint, Dyadic> = Default::default();
    for v in values {
        *groups
            .entry(v.denominator.mantissa())
            .or_insert_with(Dyadic::zero) += &v.numerator;
    }
    groups
        .into_iter()
        .map(|(den, num)| Rational::new(num, Dyadic::new(den.clone(), 0)).expect("nonzero"))
        .fold(Rational::zero(), |acc, v| &acc + &v)
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.denominator == other.denominator {
            return self.numerator.cmp(&other.numerator);
        }
        let (a, b) = self.to_ratio();
        let (c, d) = other.to_ratio();
        (a * d).cmp(&(c * b))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<&Rational> for &Rational {
    type Output = Rational;

    fn add(self, rhs: &Rational) -> Rational {
        if self.denominator == rhs.denominator {
            let den = self.denominator.mantissa().clone();
            let num = &self.numerator + &rhs.numerator;
            return Rational::new(num, Dyadic::new(den, 0)).expect("nonzero");
        }
        let (a, b) = self.to_ratio();
        let (c, d) = rhs.to_ratio();
        Rational::from_ratio(a * &d + c * &b, b * d)
    }
}

impl Add for Rational {
    type Output = Rational;

    fn add(self, rhs: Rational) -> Rational {
        &self + &rhs
    }
}

impl Mul<&Rational> for &Rational {
    type Output = Rational;

    fn mul(self, rhs: &Rational) -> Rational {
        let (a, b) = self.to_ratio();
        let (c, d) = rhs.to_ratio();
        Rational::from_ratio(a * c, b * d)
    }
}

impl Mul for Rational {
    type Output = Rational;

    fn mul(self, rhs: Rational) -> Rational {
        &self * &rhs
    }
}

impl From<Dyadic> for Rational {
    fn from(d: Dyadic) -> Self {
        Rational::from_dyadic(d)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} DIV {}", self.numerator, self.denominator)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = NumericsError;

    /// Accepts `num DIV den` in dyadic syntax, a bare dyadic, or a plain
    /// `p/q` / integer for command-line convenience.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once(" DIV ") {
            return Rational::new(n.parse()?, d.parse()?);
        }
        if s.contains("/2^") {
            return Ok(Rational::from_dyadic(s.parse()?));
        }
        let bad = || NumericsError::Parse(format!("cannot parse rational {s:?}"));
        match s.split_once('/') {
            Some((p, q)) => {
                let p: BigUint = p.trim().parse().map_err(|_| bad())?;
                let q: BigUint = q.trim().parse().map_err(|_| bad())?;
                if q.is_zero() {
                    return Err(NumericsError::ZeroDenominator);
                }
                Ok(Rational::from_ratio(p, q))
            }
            None => {
                let p: BigUint = s.parse().map_err(|_| bad())?;
                Ok(Rational::from_ratio(p, BigUint::one()))
            }
        }
    }
}
