use std::io::Write;

use serde::Serialize;

use super::StagedSemimeasure;
use crate::lab::Lab;
use crate::numerics::{leftmost_diff_bit, BitString, Dyadic, Rational};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OmegaEntry {
    pub t: u64,
    pub omega: Dyadic,
    /// Leftmost changed bit against the previous stage; `None` if unchanged.
    pub k_t: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OmegaTrace {
    pub entries: Vec<OmegaEntry>,
}

/// `Omega_t = sum_{|x| <= t} P_t(x)` for `t = 0..=horizon`, with `Omega_{-1} = 0`.
pub fn omega_trace(lab: &Lab, horizon: u64) -> OmegaTrace {
    omega_trace_of(lab, &StagedSemimeasure::MachineMix, horizon)
        .expect("machine mixture has stage totals")
}

pub fn omega_trace_of(lab: &Lab, p: &StagedSemimeasure, horizon: u64) -> Result<OmegaTrace> {
    let mut entries = Vec::with_capacity(horizon as usize + 1);
    let mut prev = Dyadic::zero();
    for t in 0..=horizon {
        let omega = p.stage_total(lab, t)?;
        if !omega.is_unit_interval() {
            return Err(Error::Semimeasure(format!(
                "Omega_{t} = {omega} is not below 1"
            )));
        }
        let k_t = leftmost_diff_bit(&omega, &prev)?;
        prev = omega.clone();
        entries.push(OmegaEntry { t, omega, k_t });
    }
    Ok(OmegaTrace { entries })
}

impl OmegaTrace {
    pub fn horizon(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.t)
    }

    pub fn omega(&self, t: u64) -> Option<&Dyadic> {
        self.entries.get(t as usize).map(|e| &e.omega)
    }

    pub fn k(&self, t: u64) -> Option<u64> {
        self.entries.get(t as usize).and_then(|e| e.k_t)
    }

    /// Largest `t` in the trace whose change reaches bit `k` or higher.
    /// The true `t_k` is an unbounded max; this is its horizon truncation.
    pub fn t_k(&self, k: u64) -> Result<u64> {
        self.entries
            .iter()
            .rev()
            .find(|e| e.k_t.is_some_and(|kt| kt <= k))
            .map(|e| e.t)
            .ok_or(Error::NoSuchStage {
                k,
                horizon: self.horizon(),
            })
    }

    /// Largest finite `k_t` in the trace.
    pub fn max_k(&self) -> Option<u64> {
        self.entries.iter().filter_map(|e| e.k_t).max()
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Semimeasure(e.to_string());
        w.write_record(["t", "omega", "k_t"]).map_err(err)?;
        for e in &self.entries {
            let k = e.k_t.map_or_else(|| "inf".to_string(), |k| k.to_string());
            w.write_record([e.t.to_string(), e.omega.to_string(), k])
                .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn t_k(lab: &Lab, k: u64, horizon: u64) -> Result<u64> {
    omega_trace(lab, horizon).t_k(k)
}

/// `2^-k / k^2`.
pub fn lemma_threshold(k: u64) -> Rational {
    Rational::new(Dyadic::pow2_neg(k), Dyadic::from_u64(k * k)).expect("k >= 1")
}

/// Least stage `s <= horizon` at which the numeral of `t` has mixture mass at
/// least `2^-k_t / k_t^2`; zero when `k_t` is infinite.
pub fn f_lemma(lab: &Lab, trace: &OmegaTrace, t: u64) -> Result<u64> {
    let horizon = trace.horizon();
    if t > horizon {
        return Err(Error::Config(format!(
            "f_lemma: t = {t} beyond horizon {horizon}"
        )));
    }
    let Some(k) = trace.k(t) else { return Ok(0) };
    let x = lab.numeral(t);
    let need = lemma_threshold(k);
    let reaches = |s: u64| Rational::from_dyadic(lab.m_stage(&x, s)) >= need;
    if !reaches(horizon) {
        let gap = need
            .checked_sub(&Rational::from_dyadic(lab.m_stage(&x, horizon)))
            .expect("threshold above mass");
        return Err(Error::HorizonExceeded {
            what: format!("f({t})"),
            horizon,
            gap,
        });
    }
    let (mut lo, mut hi) = (0u64, horizon);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lemma1Row {
    pub k: u64,
    pub t_k: u64,
    pub sum: Dyadic,
    pub bound: Dyadic,
    pub holds: bool,
}

/// For every `k` with `t_k` defined in the trace, the mass at the horizon of
/// strings (length `<= max_x_len`) whose mass at least doubled after `t_k`,
/// against `2^{-k+1}`. Strings outside the machine support keep their base
/// mass and never double, so only the support is summed.
pub fn lemma1_finite(lab: &Lab, trace: &OmegaTrace, max_x_len: usize) -> Vec<Lemma1Row> {
    let horizon = trace.horizon();
    let support: Vec<BitString> = lab
        .plain_index()
        .support_up_to(max_x_len)
        .cloned()
        .collect();
    let at_horizon: Vec<Dyadic> = support.iter().map(|x| lab.m_stage(x, horizon)).collect();
    let last_k = trace.max_k().unwrap_or(0) + 1;
    let mut rows = Vec::new();
    for k in 1..=last_k {
        let Ok(tk) = trace.t_k(k) else { continue };
        let sum: Dyadic = support
            .iter()
            .zip(&at_horizon)
            .filter(|(x, m)| **m >= lab.m_stage(x, tk).shl(1))
            .map(|(_, m)| m.clone())
            .sum();
        let bound = Dyadic::pow2(1).shr(k);
        rows.push(Lemma1Row {
            k,
            t_k: tk,
            holds: sum <= bound,
            sum,
            bound,
        });
    }
    rows
}
