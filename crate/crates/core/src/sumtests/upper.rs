use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;

use super::schedule::Schedule;
use super::uh::u_h_batch;
use crate::lab::Lab;
use crate::numerics::log2::{cmp_log_power, log2_bounds};
use crate::numerics::{BitString, Dyadic, Rational};
use crate::semimeasure::{base_mass, StagedSemimeasure};
use crate::{Error, Result};

/// `lhs <= max(1, (log i)^2)`.
fn within_log_sq(lhs: &Rational, i: u64) -> bool {
    if i <= 2 {
        return *lhs <= Rational::one();
    }
    cmp_log_power(lhs, &Rational::one(), i, 2) != Ordering::Greater
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DisjunctionRow {
    pub x: BitString,
    pub i: u64,
    pub t_i: u64,
    pub t_next: u64,
    pub ratio: Rational,
    pub doubled: bool,
    /// `u_h(x; T) < 2 c i (log i)^2`.
    pub u_small: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeSummary {
    pub x: BitString,
    pub u_h: Rational,
    pub telescoping_ok: bool,
    /// Doubling steps `i` in `[|x|, 4|x|)`.
    pub doublings: u64,
    /// `m_0(x) 2^doublings <= m_T(x) <= m_0(x) 2^{2|x|+2}`.
    pub doubling_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Truncation {
    pub i: u64,
    pub x: BitString,
    pub gap: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UpperTrace {
    pub horizon: u64,
    /// `stages[j]` is `t_{j+1}`.
    pub stages: Vec<u64>,
    pub truncated: Option<Truncation>,
    pub rows: Vec<DisjunctionRow>,
    pub probes: Vec<ProbeSummary>,
    pub pass: bool,
}

/// Next stage: the least `s` in `(t_i, T]` with
/// `m_{h(x,t_i)}(x|t_i) <= c i max(1,(log i)^2) m_s(x)` for every `|x| <= i`.
fn next_stage(
    lab: &Lab,
    h: &Schedule,
    c: &Rational,
    i: u64,
    t_i: u64,
    horizon: u64,
) -> std::result::Result<u64, Truncation> {
    let ci = c * &Rational::from_integer(i);
    let idx = lab.index(&lab.numeral(t_i));
    let len = i as usize;
    let xs: BTreeSet<&BitString> = lab
        .plain_index()
        .support_up_to(len)
        .chain(idx.support_up_to(len))
        .collect();
    let total = (1u128 << (len + 1)) - 1;
    let ok = |x: &BitString, lhs: &Dyadic, s: u64| {
        let rhs = ci.mul_dyadic(&lab.m_stage(x, s));
        !rhs.is_zero()
            && within_log_sq(
                &Rational::from_dyadic(lhs.clone())
                    .checked_div(&rhs)
                    .expect("nonzero"),
                i,
            )
    };
    let gap_at = |x: &BitString, lhs: &Dyadic| {
        let lo = if i <= 2 {
            Dyadic::one()
        } else {
            let l = log2_bounds(i, 64).0;
            &l * &l
        };
        let have = ci.mul_dyadic(&(&lab.m_stage(x, horizon) * &lo));
        Rational::from_dyadic(lhs.clone())
            .checked_sub(&have)
            .unwrap_or_else(Rational::zero)
    };
    if (xs.len() as u128) < total {
        // strings with neither mass keep the base on both sides
        let x = BitString::all_up_to(len).find(|x| !xs.contains(x)).unwrap();
        let lhs = base_mass(x.len());
        if !ok(&x, &lhs, horizon) {
            return Err(Truncation {
                i,
                gap: gap_at(&x, &lhs),
                x,
            });
        }
    }
    if t_i >= horizon {
        return Err(Truncation {
            i,
            x: BitString::new(),
            gap: Rational::zero(),
        });
    }
    let mut next = t_i + 1;
    for x in xs {
        let lhs = &idx.mass(x, h.eval(x, t_i)).half() + &base_mass(x.len());
        if !ok(x, &lhs, horizon) {
            return Err(Truncation {
                i,
                gap: gap_at(x, &lhs),
                x: x.clone(),
            });
        }
        if ok(x, &lhs, next) {
            continue;
        }
        let (mut lo, mut hi) = (next, horizon);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if ok(x, &lhs, mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        next = lo;
    }
    Ok(next)
}

pub fn upperbound_trace(
    lab: &Lab,
    h: &Schedule,
    c: &Rational,
    probe_len: usize,
    horizon: u64,
) -> Result<UpperTrace> {
    if c.is_zero() || horizon < 1 {
        return Err(Error::Config(
            "upperbound trace needs c > 0 and T >= 1".into(),
        ));
    }
    let i_max = 4 * probe_len.max(1) as u64;
    let mut stages = vec![1u64];
    let mut truncated = None;
    for i in 1..i_max {
        match next_stage(lab, h, c, i, stages[i as usize - 1], horizon) {
            Ok(t) => stages.push(t),
            Err(tr) => {
                truncated = Some(tr);
                break;
            }
        }
    }
    let t = |i: u64| stages[i as usize - 1];
    let last_i = stages.len() as u64 - 1;
    let probes: Vec<BitString> = BitString::all_up_to(probe_len).collect();
    let us = u_h_batch(lab, &probes, &StagedSemimeasure::MachineMix, h, horizon)?;
    let two_c = c * &Rational::from_integer(2);
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (x, u) in probes.iter().zip(&us) {
        let mass = |s: u64| lab.m_stage(x, s);
        let mut product = Rational::one();
        let mut doublings = 0u64;
        for i in 1..=last_i {
            let ratio = Rational::new(mass(t(i + 1)), mass(t(i))).expect("positive mass");
            product = &product * &ratio;
            let doubled = ratio >= Rational::from_integer(2);
            let len = x.len() as u64;
            if doubled && i >= len && i < 4 * len {
                doublings += 1;
            }
            if i >= len.max(2) {
                let scaled = u
                    .checked_div(&(&two_c * &Rational::from_integer(i)))
                    .expect("c > 0");
                let u_small = cmp_log_power(&scaled, &Rational::one(), i, 2) == Ordering::Less;
                rows.push(DisjunctionRow {
                    x: x.clone(),
                    i,
                    t_i: t(i),
                    t_next: t(i + 1),
                    ratio,
                    doubled,
                    u_small,
                    holds: doubled || u_small,
                });
            }
        }
        let telescoping_ok =
            product == Rational::new(mass(t(last_i + 1)), mass(t(1))).expect("positive mass");
        let (m0, m_t) = (mass(0), mass(horizon));
        let doubling_ok = m0.shl(doublings) <= m_t && m_t <= m0.shl(2 * x.len() as u64 + 2);
        summaries.push(ProbeSummary {
            x: x.clone(),
            u_h: u.clone(),
            telescoping_ok,
            doublings,
            doubling_ok,
        });
    }
    let pass =
        rows.iter().all(|r| r.holds) && summaries.iter().all(|p| p.telescoping_ok && p.doubling_ok);
    Ok(UpperTrace {
        horizon,
        stages,
        truncated,
        rows,
        probes: summaries,
        pass,
    })
}
