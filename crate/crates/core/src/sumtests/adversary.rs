//! The adversarial string builder and the synthesis of `g`.
//!
//! The list starts as every string of length `n` (optionally minus those the
//! initial filter rejects). Only strings with machine mass can ever cross a
//! removal threshold, so the list is held as the set of strings that left it.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use super::efg::flagged_stages;
use super::schedule::{Expr, Key, Schedule, ScheduleTable};
use crate::lab::Lab;
use crate::numerics::log2::{cmp_log_power, log2_f64};
use crate::numerics::{BitString, Dyadic, Rational};
use crate::semimeasure::base_mass;
use crate::{Error, Result};

fn big_text<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Start from `{x : m_{h(x,1)}(x|1) <= 2^-exponent}` instead of every string.
#[derive(Clone, Debug)]
pub struct InitialFilter {
    pub h: Schedule,
    pub exponent: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SurvivorStep {
    pub i: u64,
    pub t: u64,
    /// Removal threshold `n^{beta i} / 2^n`.
    pub threshold: Rational,
    pub removed: Vec<BitString>,
    #[serde(serialize_with = "big_text")]
    pub list_size: BigUint,
    /// Support size of the uniform distribution after this step.
    #[serde(serialize_with = "big_text")]
    pub dist_size: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SurvivorTrace {
    pub n: usize,
    pub beta: u32,
    pub horizon: u64,
    pub t_list: Vec<u64>,
    pub filtered: Vec<BitString>,
    pub steps: Vec<SurvivorStep>,
    pub survivor: BitString,
    pub removed_total: usize,
    /// `2^{n+1} / n^beta`.
    pub census_bound: Rational,
    /// `removed_total < census_bound`.
    pub census_ok: bool,
    /// `|t_list| <= n / (beta log n)`, the premise of the census bound.
    pub census_applies: bool,
}

fn n_pow(n: usize, k: u64) -> BigUint {
    BigUint::from(n).pow(k as u32)
}

/// Strings of length `n` that have left the list, in order.
#[derive(Clone, Debug, Default)]
struct Gone(BTreeSet<BitString>);

impl Gone {
    fn size(&self, n: usize) -> BigUint {
        (BigUint::one() << n) - BigUint::from(self.0.len())
    }

    /// Index of a list member among the members.
    fn position(&self, x: &BitString) -> BigUint {
        x.rank() - BigUint::from(self.0.range(..x).count())
    }

    fn first_member(&self, n: usize, also_skip: &BTreeSet<&BitString>) -> Option<BitString> {
        BitString::all_of_len(n).find(|x| !self.0.contains(x) && !also_skip.contains(x))
    }
}

/// `floor(2^{n+1} / n^{beta (i+1)})`, capped to the list and at least 1.
pub fn dist_size(n: usize, beta: u32, i: u64, list_size: &BigUint) -> BigUint {
    let raw = (BigUint::one() << (n + 1)) / n_pow(n, beta as u64 * (i + 1));
    raw.min(list_size.clone()).max(BigUint::one())
}

pub fn adversary_build(
    lab: &Lab,
    n: usize,
    f: &Schedule,
    horizon: u64,
    beta: u32,
    filter: Option<&InitialFilter>,
) -> Result<SurvivorTrace> {
    if n < 2 || horizon < 1 {
        return Err(Error::Config("adversary needs n >= 2 and T >= 1".into()));
    }
    let t_list = flagged_stages(lab, f, n as u64, beta, horizon);
    let mut gone = Gone::default();
    let mut filtered = Vec::new();
    if let Some(flt) = filter {
        let threshold = Dyadic::pow2_neg(flt.exponent);
        if base_mass(n) > threshold {
            return Err(Error::ListExhausted {
                removed: 0,
                filtered: 0,
            });
        }
        let idx = lab.index(&lab.numeral(1));
        for x in idx.support_of_len(n) {
            let m = &idx.mass(x, flt.h.eval(x, 1)).half() + &base_mass(n);
            if m > threshold {
                filtered.push(x.clone());
                gone.0.insert(x.clone());
            }
        }
    }
    let support = lab.plain_index().support_of_len(n);
    let two_n = Dyadic::pow2(n as u64);
    let mut steps = Vec::new();
    let mut removed_total = 0;
    for (i, &t) in (1u64..).zip(&t_list) {
        let need = Dyadic::new(n_pow(n, beta as u64 * i), 0);
        let removed: Vec<BitString> = support
            .iter()
            .filter(|x| !gone.0.contains(*x) && &lab.m_stage(x, t) * &two_n >= need)
            .cloned()
            .collect();
        removed_total += removed.len();
        gone.0.extend(removed.iter().cloned());
        let list_size = gone.size(n);
        if list_size.is_zero() {
            return Err(Error::ListExhausted {
                removed: removed_total,
                filtered: filtered.len(),
            });
        }
        steps.push(SurvivorStep {
            i,
            t,
            threshold: Rational::new(Dyadic::new(n_pow(n, beta as u64 * i), 0), two_n.clone())
                .expect("nonzero"),
            removed,
            dist_size: dist_size(n, beta, i, &list_size),
            list_size,
        });
    }
    let survivor = gone
        .first_member(n, &BTreeSet::new())
        .ok_or(Error::ListExhausted {
            removed: removed_total,
            filtered: filtered.len(),
        })?;
    let census_bound = Rational::new(
        Dyadic::pow2(n as u64 + 1),
        Dyadic::new(n_pow(n, beta as u64), 0),
    )
    .expect("n >= 2");
    let census_applies = t_list.is_empty()
        || cmp_log_power(
            &Rational::from_integer(n as u64),
            &Rational::from_integer(t_list.len() as u64 * beta as u64),
            n as u64,
            1,
        ) != Ordering::Less;
    Ok(SurvivorTrace {
        n,
        beta,
        horizon,
        census_ok: Rational::from_integer(removed_total as u64) < census_bound,
        census_applies,
        census_bound,
        t_list,
        filtered,
        steps,
        survivor,
        removed_total,
    })
}

impl SurvivorTrace {
    fn gone_after(&self, i: u64) -> Gone {
        let mut gone = Gone(self.filtered.iter().cloned().collect());
        for step in self.steps.iter().take(i as usize) {
            gone.0.extend(step.removed.iter().cloned());
        }
        gone
    }

    /// The strings `z` the step-`i` distribution constrains, as explicit
    /// strings, plus whether some member without machine mass is among them.
    pub fn constrained(&self, lab: &Lab, i: u64) -> (Vec<BitString>, bool) {
        let step = &self.steps[i as usize - 1];
        let gone = self.gone_after(i);
        let support = lab.plain_index().support_of_len(self.n);
        let explicit: Vec<BitString> = support
            .iter()
            .filter(|x| !gone.0.contains(*x) && gone.position(x) < step.dist_size)
            .cloned()
            .collect();
        let skip: BTreeSet<&BitString> = support.iter().collect();
        let base_member = gone
            .first_member(self.n, &skip)
            .is_some_and(|x| gone.position(&x) < step.dist_size);
        (explicit, base_member)
    }

    /// Step index governing stage `t`: the largest `i` with `t_i <= t`.
    pub fn step_at(&self, t: u64) -> Option<u64> {
        let k = self.t_list.partition_point(|&ti| ti <= t);
        (k > 0).then_some(k as u64)
    }
}

/// Dense replay over every string of length `n`; returns the survivor and
/// the per-step removal lists.
pub fn replay_dense(
    lab: &Lab,
    trace: &SurvivorTrace,
    filter: Option<&InitialFilter>,
) -> Option<(BitString, Vec<Vec<BitString>>)> {
    let n = trace.n;
    let mut list: Vec<BitString> = BitString::all_of_len(n)
        .filter(|x| match filter {
            None => true,
            Some(flt) => lab.m_cond_stage(x, 1, flt.h.eval(x, 1)) <= Dyadic::pow2_neg(flt.exponent),
        })
        .collect();
    let mut removals = Vec::new();
    for (i, &t) in (1u64..).zip(&trace.t_list) {
        let need = Rational::new(
            Dyadic::new(n_pow(n, trace.beta as u64 * i), 0),
            Dyadic::pow2(n as u64),
        )
        .ok()?;
        let (out, keep): (Vec<BitString>, Vec<BitString>) = list
            .into_iter()
            .partition(|x| Rational::from_dyadic(lab.m_stage(x, t)) >= need);
        removals.push(out);
        list = keep;
    }
    Some((list.first()?.clone(), removals))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GStep {
    pub i: u64,
    pub t: u64,
    pub stage: u64,
    pub constrained: usize,
    pub base_member: bool,
    /// `1 / (N_i i^2 n^2)`.
    pub bound: Rational,
    /// `log2 (1 / m_{g}(survivor))`.
    pub achieved: f64,
    /// `n - beta i log n - 2 log n`.
    pub target: f64,
    pub excess: f64,
    pub constraint_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GGap {
    pub i: u64,
    pub gap: Rational,
}

#[derive(Clone, Debug)]
pub struct GBuild {
    pub table: Schedule,
    pub c: Rational,
    pub steps: Vec<GStep>,
    pub failures: Vec<GGap>,
}

fn step_bound(trace: &SurvivorTrace, i: u64) -> Rational {
    let step = &trace.steps[i as usize - 1];
    let den = &step.dist_size * BigUint::from(i * i) * BigUint::from(trace.n * trace.n);
    Rational::from_ratio(BigUint::one(), den)
}

/// `g(y, t)`: for `t_i <= t`, the least stage `s <= S` with
/// `c m_s(z) >= P(z|i,n) / (i^2 n^2)` for every `z` the step-`i`
/// distribution charges; `0` before `t_1`. Without `c`, the least power of
/// two that succeeds within `S` is used.
pub fn g_build(
    lab: &Lab,
    trace: &SurvivorTrace,
    c: Option<&Rational>,
    horizon: u64,
) -> Result<GBuild> {
    if trace.t_list.last().is_some_and(|&t| t > horizon) {
        return Err(Error::Config(format!(
            "g_build needs S >= max t_i = {}",
            trace.t_list.last().unwrap()
        )));
    }
    let steps: Vec<(u64, Vec<BitString>, bool, Rational)> = (1..=trace.steps.len() as u64)
        .map(|i| {
            let (z, base) = trace.constrained(lab, i);
            (i, z, base, step_bound(trace, i))
        })
        .collect();
    let base = base_mass(trace.n);
    let c = match c {
        Some(c) => c.clone(),
        None => {
            let mut worst = Rational::zero();
            for (_, zs, has_base, bound) in &steps {
                let mut masses: Vec<Dyadic> = zs.iter().map(|z| lab.m_stage(z, horizon)).collect();
                if *has_base {
                    masses.push(base.clone());
                }
                for m in masses {
                    let r = bound.checked_div(&Rational::from_dyadic(m))?;
                    worst = worst.max(r);
                }
            }
            match worst.ceil_log2() {
                None => Rational::one(),
                Some(k) if k >= 0 => Rational::from_dyadic(Dyadic::pow2(k as u64)),
                Some(k) => Rational::from_dyadic(Dyadic::pow2_neg((-k) as u64)),
            }
        }
    };
    let meets = |m: &Dyadic, bound: &Rational| c.mul_dyadic(m) >= *bound;
    let mut failures = Vec::new();
    let mut stages = Vec::new();
    for (i, zs, has_base, bound) in &steps {
        let mut stage = 0;
        let mut gap: Option<Rational> = None;
        let mut shortfall = |m: &Dyadic| {
            let g = bound.checked_sub(&c.mul_dyadic(m)).expect("short");
            if gap.as_ref().is_none_or(|old| g > *old) {
                gap = Some(g);
            }
        };
        if *has_base && !meets(&base, bound) {
            shortfall(&base);
        }
        for z in zs {
            if !meets(&lab.m_stage(z, horizon), bound) {
                shortfall(&lab.m_stage(z, horizon));
                continue;
            }
            let (mut lo, mut hi) = (0, horizon);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if meets(&lab.m_stage(z, mid), bound) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            stage = stage.max(lo);
        }
        if let Some(gap) = gap {
            failures.push(GGap { i: *i, gap });
            stage = horizon;
        }
        stages.push(stage);
    }
    let mut table = ScheduleTable::new(Expr::Const(0));
    if let Some(&t1) = trace.t_list.first() {
        for t in t1..=trace.horizon {
            let i = trace.step_at(t).expect("t >= t_1");
            table.insert(Key::Any, t, stages[i as usize - 1]);
        }
    }
    let table = Schedule::Table(table);
    let n = trace.n as f64;
    let log_n = log2_f64(trace.n as u64);
    let out_steps = steps
        .iter()
        .map(|(i, zs, has_base, bound)| {
            let t = trace.t_list[*i as usize - 1];
            let stage = table.eval(&trace.survivor, t);
            let achieved = -lab.m_stage(&trace.survivor, stage).log2_f64();
            let target = n - trace.beta as f64 * *i as f64 * log_n - 2.0 * log_n;
            let constraint_ok = zs
                .iter()
                .all(|z| meets(&lab.m_stage(z, table.eval(z, t)), bound))
                && (!has_base || meets(&base, bound));
            GStep {
                i: *i,
                t,
                stage,
                constrained: zs.len() + usize::from(*has_base),
                base_member: *has_base,
                bound: bound.clone(),
                achieved,
                target,
                excess: achieved - target,
                constraint_ok,
            }
        })
        .collect();
    Ok(GBuild {
        table,
        c,
        steps: out_steps,
        failures,
    })
}
