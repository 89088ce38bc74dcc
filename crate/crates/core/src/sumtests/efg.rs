use std::cmp::Ordering;

use num_bigint::BigUint;
use serde::Serialize;

use super::schedule::{Expr, Key, Schedule, ScheduleTable};
use crate::lab::Lab;
use crate::numerics::log2::{cmp_log_power, exact_log2, log2_bounds};
use crate::numerics::{BitString, Dyadic, Rational};
use crate::semimeasure::{base_mass, f_lemma, omega_trace, OmegaTrace};
use crate::Result;

#[derive(Clone, Debug)]
pub struct EfgParams {
    pub f: Schedule,
    pub g: Schedule,
    pub alpha: u32,
    pub beta: u32,
}

impl EfgParams {
    pub fn value(&self, lab: &Lab, x: &BitString, horizon: u64) -> Rational {
        EfgContext::new(lab, self, x.len(), horizon).value(lab, x)
    }
}

/// `n / (log2 n)^alpha`, clamped to 1 when `n <= 2` or the value is at most 1.
/// Exact when `n` is a power of two; otherwise the log is replaced by a
/// 64-bit upper bound, giving a rational just below the true value.
pub fn v_value(n: u64, alpha: u32) -> Rational {
    if n <= 2 {
        return Rational::one();
    }
    let log = match exact_log2(n) {
        Some(k) => Dyadic::from_u64(k),
        None => log2_bounds(n, 64).1,
    };
    let den = (0..alpha).fold(Dyadic::one(), |acc, _| &acc * &log);
    let v = Rational::new(Dyadic::from_u64(n), den).expect("log n > 0");
    if v <= Rational::one() {
        Rational::one()
    } else {
        v
    }
}

/// Is `m_{f(t)}(numeral t) > beta log2(n) / n`?
pub fn stage_flagged(lab: &Lab, f: &Schedule, t: u64, n: u64, beta: u32) -> bool {
    let num = lab.numeral(t);
    let mass = lab.m_stage(&num, f.eval(&num, t));
    let lhs = Rational::from_dyadic(&mass * &Dyadic::from_u64(n));
    cmp_log_power(&lhs, &Rational::from_integer(beta as u64), n, 1) == Ordering::Greater
}

/// Every `1 <= t <= horizon` that is flagged for length `n`.
pub fn flagged_stages(lab: &Lab, f: &Schedule, n: u64, beta: u32, horizon: u64) -> Vec<u64> {
    (1..=horizon)
        .filter(|&t| stage_flagged(lab, f, t, n, beta))
        .collect()
}

/// `e_{f,g}` at one length and horizon: the flagged stages are shared by
/// every string of that length.
pub struct EfgContext<'a> {
    params: &'a EfgParams,
    pub n: usize,
    pub v: Rational,
    pub flagged: Vec<u64>,
}

impl<'a> EfgContext<'a> {
    pub fn new(lab: &Lab, params: &'a EfgParams, n: usize, horizon: u64) -> Self {
        let v = v_value(n as u64, params.alpha);
        let flagged = if v == Rational::one() {
            Vec::new()
        } else {
            flagged_stages(lab, &params.f, n as u64, params.beta, horizon)
        };
        Self {
            params,
            n,
            v,
            flagged,
        }
    }

    /// Did the mass of `x` double from stage `t` to stage `g(x,t)`?
    pub fn doubled(&self, lab: &Lab, x: &BitString, t: u64) -> bool {
        lab.m_stage(x, self.params.g.eval(x, t)) >= lab.m_stage(x, t).shl(1)
    }

    pub fn value(&self, lab: &Lab, x: &BitString) -> Rational {
        debug_assert_eq!(x.len(), self.n);
        if self.flagged.iter().all(|&t| self.doubled(lab, x, t)) {
            self.v.clone()
        } else {
            Rational::one()
        }
    }
}

pub fn e_fg(
    lab: &Lab,
    x: &BitString,
    f: &Schedule,
    g: &Schedule,
    horizon: u64,
    alpha: u32,
    beta: u32,
) -> Rational {
    let params = EfgParams {
        f: f.clone(),
        g: g.clone(),
        alpha,
        beta,
    };
    params.value(lab, x, horizon)
}

/// `e_{f,g}(x; T)` for `T = 0..=horizon`.
pub fn e_fg_by_horizon(
    lab: &Lab,
    params: &EfgParams,
    x: &BitString,
    horizon: u64,
) -> Vec<Rational> {
    let ctx = EfgContext::new(lab, params, x.len(), horizon);
    let first_violation = ctx
        .flagged
        .iter()
        .copied()
        .find(|&t| !ctx.doubled(lab, x, t));
    (0..=horizon)
        .map(|t| match first_violation {
            Some(bad) if t >= bad => Rational::one(),
            _ => ctx.v.clone(),
        })
        .collect()
}

/// Lemma 1's `f` as a table over `t <= horizon`; stages that never reach
/// the threshold wait until the horizon.
pub fn lemma_f_schedule(lab: &Lab, trace: &OmegaTrace) -> Schedule {
    let horizon = trace.horizon();
    let mut table = ScheduleTable::new(Expr::Const(horizon));
    for t in 0..=horizon {
        let s = f_lemma(lab, trace, t).unwrap_or(horizon);
        table.insert(Key::Any, t, s);
    }
    Schedule::Table(table)
}

/// `floor(log n - 3 log log n - 3)`; `None` when `n < 2`.
pub fn proposition_k(n: u64) -> Option<i64> {
    if n < 2 {
        return None;
    }
    let l = (n as f64).log2();
    Some((l - 3.0 * l.log2() - 3.0).floor() as i64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "lowercase")]
pub enum EfgCheck {
    Skipped {
        n: u64,
        k: Option<i64>,
        reason: String,
    },
    Checked {
        n: u64,
        k: u64,
        t_k: u64,
        flagged: usize,
        /// `sum { m_T(x) : |x| = n, e(x) > 1 }`.
        sum: Dyadic,
        bound: Dyadic,
        sum_ok: bool,
        /// `m_{f(t_k)}(numeral t_k) >= beta log n / n`.
        pivot_ok: bool,
    },
}

impl EfgCheck {
    pub fn passed(&self) -> bool {
        match self {
            EfgCheck::Skipped { .. } => true,
            EfgCheck::Checked { sum_ok, .. } => *sum_ok,
        }
    }
}

/// `sum { m_T(x) : |x| = n, e(x) > 1 }`, summing only the machine support.
pub fn event_mass(lab: &Lab, ctx: &EfgContext<'_>, horizon: u64) -> Dyadic {
    let mut sum = Dyadic::zero();
    if ctx.v == Rational::one() {
        return sum;
    }
    let support = lab.plain_index().support_of_len(ctx.n);
    for x in support {
        if ctx.value(lab, x) > Rational::one() {
            sum += &lab.m_stage(x, horizon);
        }
    }
    if ctx.flagged.is_empty() {
        let rest = (BigUint::from(1u32) << ctx.n) - BigUint::from(support.len());
        sum += &(&Dyadic::new(rest, 0) * &base_mass(ctx.n));
    }
    sum
}

/// Mass at the horizon of the length-`n` strings where `e_{f,g}` exceeds 1,
/// against `2^{-k+1}`. Strings outside the machine support keep their base
/// mass, never double, and so exceed 1 only when no stage is flagged.
pub fn efg_measure_check(lab: &Lab, params: &EfgParams, n: u64, horizon: u64) -> Result<EfgCheck> {
    let k = match proposition_k(n) {
        Some(k) if k >= 1 => k as u64,
        k => {
            return Ok(EfgCheck::Skipped {
                n,
                k,
                reason: "k nonpositive".into(),
            })
        }
    };
    let trace = omega_trace(lab, horizon);
    let t_k = trace.t_k(k)?;
    let ctx = EfgContext::new(lab, params, n as usize, horizon);
    let sum = event_mass(lab, &ctx, horizon);
    let bound = Dyadic::pow2(1).shr(k);
    let num = lab.numeral(t_k);
    let pivot = lab.m_stage(&num, params.f.eval(&num, t_k));
    let pivot_ok = cmp_log_power(
        &Rational::from_dyadic(&pivot * &Dyadic::from_u64(n)),
        &Rational::from_integer(params.beta as u64),
        n,
        1,
    ) != Ordering::Less;
    Ok(EfgCheck::Checked {
        n,
        k,
        t_k,
        flagged: ctx.flagged.len(),
        sum_ok: sum <= bound,
        sum,
        bound,
        pivot_ok,
    })
}
