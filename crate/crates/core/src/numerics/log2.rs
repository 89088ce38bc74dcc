//! Exact comparisons against rational multiples of powers of `log2 n`.
//!
//! `log2 n` is an integer when `n` is a power of two and irrational
//! otherwise, so every comparison below either resolves exactly or resolves
//! after finitely many refinements of a rigorous enclosing interval.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_traits::One;

use super::{Dyadic, Rational};

/// `Some(k)` iff `n == 2^k`.
pub fn exact_log2(n: u64) -> Option<u64> {
    (n != 0 && n.is_power_of_two()).then(|| n.trailing_zeros() as u64)
}

/// Dyadic bounds `lo <= log2 n <= hi` with `hi - lo <= 2^-frac_bits`
/// (tighter if the fixed-point iteration stays unambiguous, exact for powers
/// of two). Requires `n >= 1`.
pub fn log2_bounds(n: u64, frac_bits: u32) -> (Dyadic, Dyadic) {
    assert!(n >= 1, "log2 of zero");
    let int_part = 63 - n.leading_zeros() as u64;
    if n.is_power_of_two() {
        let v = Dyadic::from_u64(int_part);
        return (v.clone(), v);
    }
    // Fixed point with `prec` fractional bits; lo/hi bracket the true iterate.
    let prec = 2 * frac_bits as u64 + 64;
    let mut lo = BigUint::from(n) << (prec - int_part);
    let mut hi = lo.clone();
    let two = BigUint::one() << (prec + 1);
    let mut frac = BigUint::from(0u32);
    let mut determined = 0u64;
    for _ in 0..frac_bits {
        lo = (&lo * &lo) >> prec;
        let sq = &hi * &hi;
        hi = (&sq >> prec)
            + if sq.trailing_zeros().unwrap_or(0) >= prec {
                0u32
            } else {
                1u32
            };
        frac <<= 1u32;
        if lo >= two {
            frac += 1u32;
            lo >>= 1u32;
            hi = (&hi >> 1u32) + (&hi & BigUint::one());
        } else if hi >= two {
            frac >>= 1u32;
            break;
        }
        determined += 1;
    }
    let base = Dyadic::from_u64(int_part);
    let lo_frac = Dyadic::new(frac.clone(), determined);
    let hi_frac = Dyadic::new(frac + 1u32, determined);
    (&base + &lo_frac, &base + &hi_frac)
}

fn pow(d: &Dyadic, k: u32) -> Dyadic {
    (0..k).fold(Dyadic::one(), |acc, _| &acc * d)
}

/// Compare `lhs` with `coeff * (log2 n)^power`. Requires `n >= 1`.
pub fn cmp_log_power(lhs: &Rational, coeff: &Rational, n: u64, power: u32) -> Ordering {
    assert!(n >= 1, "log2 of zero");
    if coeff.is_zero() || power == 0 {
        let rhs = if power == 0 {
            coeff.clone()
        } else {
            Rational::zero()
        };
        return lhs.cmp(&rhs);
    }
    if let Some(k) = exact_log2(n) {
        let rhs = coeff.mul_dyadic(&pow(&Dyadic::from_u64(k), power));
        return lhs.cmp(&rhs);
    }
    let mut bits = 48u32;
    loop {
        let (lo, hi) = log2_bounds(n, bits);
        let low = coeff.mul_dyadic(&pow(&lo, power));
        let high = coeff.mul_dyadic(&pow(&hi, power));
        if lhs < &low {
            return Ordering::Less;
        }
        if lhs > &high {
            return Ordering::Greater;
        }
        bits *= 2;
    }
}

/// `(log2 n)^power` as a rational upper bound (exact for powers of two).
pub fn log_power_upper(n: u64, power: u32, frac_bits: u32) -> Rational {
    let (_, hi) = log2_bounds(n, frac_bits);
    Rational::from_dyadic(pow(&hi, power))
}

/// `log2 n` as `f64`, for reports.
pub fn log2_f64(n: u64) -> f64 {
    (n as f64).log2()
}
