use std::collections::BTreeMap;

use serde::Serialize;

use super::efg::{e_fg_by_horizon, EfgParams};
use super::schedule::{Expr, Key, Schedule, ScheduleTable};
use crate::lab::Lab;
use crate::numerics::{rational_sum, BitString, Dyadic, Rational};
use crate::semimeasure::{base_mass, StagedSemimeasure};
use crate::{Error, Result};

/// An upper-semicomputable test given by its horizon approximations.
#[derive(Clone, Debug)]
pub enum TestApprox {
    Constant(Rational),
    /// `u_h` against `p`; the horizon is the largest `s` in the infimum.
    Uh {
        p: StagedSemimeasure,
        h: Schedule,
    },
    Efg(EfgParams),
    Table {
        values: BTreeMap<BitString, Rational>,
        default: Rational,
    },
}

impl TestApprox {
    pub fn value(&self, lab: &Lab, x: &BitString, horizon: u64) -> Result<Rational> {
        Ok(self
            .values(lab, std::slice::from_ref(x), horizon)?
            .remove(0))
    }

    pub fn values(&self, lab: &Lab, xs: &[BitString], horizon: u64) -> Result<Vec<Rational>> {
        match self {
            TestApprox::Constant(c) => Ok(vec![c.clone(); xs.len()]),
            TestApprox::Uh { p, h } => u_h_batch(lab, xs, p, h, horizon),
            TestApprox::Efg(params) => {
                Ok(xs.iter().map(|x| params.value(lab, x, horizon)).collect())
            }
            TestApprox::Table { values, default } => Ok(xs
                .iter()
                .map(|x| values.get(x).unwrap_or(default).clone())
                .collect()),
        }
    }

    /// `out[s-1][j]` is the value of `xs[j]` at horizon `s`, for `s = 1..=horizon`.
    pub fn values_by_horizon(
        &self,
        lab: &Lab,
        xs: &[BitString],
        horizon: u64,
    ) -> Result<Vec<Vec<Rational>>> {
        match self {
            TestApprox::Uh { p, h } => {
                let mut out = Vec::with_capacity(horizon as usize);
                let mut best: Vec<Option<Rational>> = vec![None; xs.len()];
                for s in 1..=horizon {
                    for (b, term) in best.iter_mut().zip(uh_terms(lab, xs, p, h, s)?) {
                        if b.as_ref().is_none_or(|v| term < *v) {
                            *b = Some(term);
                        }
                    }
                    out.push(best.iter().map(|b| b.clone().unwrap()).collect());
                }
                Ok(out)
            }
            TestApprox::Efg(params) => {
                let per_x: Vec<Vec<Rational>> = xs
                    .iter()
                    .map(|x| e_fg_by_horizon(lab, params, x, horizon))
                    .collect();
                Ok((0..horizon as usize)
                    .map(|i| per_x.iter().map(|v| v[i + 1].clone()).collect())
                    .collect())
            }
            _ => {
                let row = self.values(lab, xs, horizon)?;
                Ok(vec![row; horizon as usize])
            }
        }
    }
}

fn m_cond_at(idx: &crate::machine::MassIndex, x: &BitString, stage: u64) -> Dyadic {
    &idx.mass(x, stage).half() + &base_mass(x.len())
}

/// `m_{h(x,s)}(x|s) / P_s(x)` for each `x` at one `s`.
fn uh_terms(
    lab: &Lab,
    xs: &[BitString],
    p: &StagedSemimeasure,
    h: &Schedule,
    s: u64,
) -> Result<Vec<Rational>> {
    let idx = lab.index(&lab.numeral(s));
    xs.iter()
        .map(|x| {
            let num = m_cond_at(&idx, x, h.eval(x, s));
            let den = p.mass(lab, x, s);
            Rational::new(num, den).map_err(|_| Error::ZeroDenominator {
                x: x.clone(),
                stage: s,
            })
        })
        .collect()
}

/// `u_h(x; S) = min_{1 <= s <= S} m_{h(x,s)}(x|s) / P_s(x)`.
pub fn u_h(
    lab: &Lab,
    x: &BitString,
    p: &StagedSemimeasure,
    h: &Schedule,
    horizon: u64,
) -> Result<Rational> {
    Ok(u_h_batch(lab, std::slice::from_ref(x), p, h, horizon)?.remove(0))
}

/// [`u_h`] for many strings; each conditional index is visited once.
pub fn u_h_batch(
    lab: &Lab,
    xs: &[BitString],
    p: &StagedSemimeasure,
    h: &Schedule,
    horizon: u64,
) -> Result<Vec<Rational>> {
    if horizon == 0 {
        return Err(Error::Config("u_h needs a horizon S >= 1".into()));
    }
    let mut best = uh_terms(lab, xs, p, h, 1)?;
    for s in 2..=horizon {
        for (b, term) in best.iter_mut().zip(uh_terms(lab, xs, p, h, s)?) {
            if term < *b {
                *b = term;
            }
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageRow {
    pub s: u64,
    pub sum: Rational,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageCheck {
    pub horizon: u64,
    pub support_size: usize,
    pub rows: Vec<StageRow>,
    pub pass: bool,
}

/// `sum_x test(x; S) P_s(x)` over `support` for every `s <= S`.
pub fn sumtest_stage_check(
    lab: &Lab,
    p: &StagedSemimeasure,
    test: &TestApprox,
    horizon: u64,
    support: &[BitString],
) -> Result<StageCheck> {
    let values = test.values(lab, support, horizon)?;
    let mut rows = Vec::new();
    for s in 0..=horizon {
        let terms: Vec<Rational> = support
            .iter()
            .zip(&values)
            .map(|(x, v)| v.mul_dyadic(&p.mass(lab, x, s)))
            .collect();
        let sum = rational_sum(&terms);
        let pass = sum <= Rational::one();
        rows.push(StageRow { s, sum, pass });
    }
    Ok(StageCheck {
        horizon,
        support_size: support.len(),
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DominationGap {
    pub x: BitString,
    pub s: u64,
    pub gap: Rational,
}

#[derive(Clone, Debug)]
pub struct Domination {
    pub table: Schedule,
    pub probes: Vec<BitString>,
    /// Entries with no stage `<= S` meeting the target; their table value is `S`.
    pub failures: Vec<DominationGap>,
    /// `e(x; S) <= c u_h(x; S)` on every probe, checked when nothing failed.
    pub verified: Option<bool>,
    pub max_stage: u64,
}

/// Wait-stage table `h(x,s)`: the least stage at which
/// `P_s(x) e_s(x) <= c m_stage(x|s)`, over the probes, for `1 <= s <= S`.
pub fn dominate_schedule(
    lab: &Lab,
    e: &TestApprox,
    p: &StagedSemimeasure,
    c: &Rational,
    horizon: u64,
    probes: &[BitString],
) -> Result<Domination> {
    if horizon == 0 {
        return Err(Error::Config("dominate_schedule needs S >= 1".into()));
    }
    let e_s = e.values_by_horizon(lab, probes, horizon)?;
    let mut needs: Vec<Vec<Rational>> = Vec::with_capacity(horizon as usize);
    for (s, row) in (1..=horizon).zip(&e_s) {
        let need: Vec<Rational> = probes
            .iter()
            .zip(row)
            .map(|(x, v)| v.mul_dyadic(&p.mass(lab, x, s)))
            .collect();
        let sum = rational_sum(&need);
        if sum > Rational::one() {
            return Err(Error::PreconditionViolated { stage: s, sum });
        }
        needs.push(need);
    }
    let mut table = ScheduleTable::new(Expr::Const(horizon));
    let mut failures = Vec::new();
    let mut max_stage = 0;
    for (s, need) in (1..=horizon).zip(&needs) {
        let idx = lab.index(&lab.numeral(s));
        for (x, need) in probes.iter().zip(need) {
            let ok = |st: u64| *need <= c.mul_dyadic(&m_cond_at(&idx, x, st));
            let stage = if ok(horizon) {
                let (mut lo, mut hi) = (0, horizon);
                while lo < hi {
                    let mid = lo + (hi - lo) / 2;
                    if ok(mid) {
                        hi = mid;
                    } else {
                        lo = mid + 1;
                    }
                }
                lo
            } else {
                let have = c.mul_dyadic(&m_cond_at(&idx, x, horizon));
                failures.push(DominationGap {
                    x: x.clone(),
                    s,
                    gap: need.checked_sub(&have).expect("need exceeds have"),
                });
                horizon
            };
            max_stage = max_stage.max(stage);
            table.insert(Key::Exact(x.clone()), s, stage);
        }
    }
    let table = Schedule::Table(table);
    let verified = if failures.is_empty() {
        let u = u_h_batch(lab, probes, p, &table, horizon)?;
        let last = e_s.last().expect("horizon >= 1");
        Some(last.iter().zip(&u).all(|(ev, uv)| *ev <= c * uv))
    } else {
        None
    };
    Ok(Domination {
        table,
        probes: probes.to_vec(),
        failures,
        verified,
        max_stage,
    })
}
