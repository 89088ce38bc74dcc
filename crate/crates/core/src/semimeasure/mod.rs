//! Stage-indexed lower approximations of semimeasures.
//!
//! The machine mixture is `m_t(x) = M_t(x)/2 + 2^{-2|x|-2}` where `M_t` is
//! the RPM-1 program mass appearing by stage `t`. The second term sums to
//! `1/2` over all strings and keeps every stage-0 mass positive. The
//! conditional variant swaps in the halting domain under a numeral
//! condition, and the product variant lives on pair codes `<x,y>`.

mod omega;
mod table;

pub use omega::{
    f_lemma, lemma1_finite, lemma_threshold, omega_trace, omega_trace_of, t_k, Lemma1Row,
    OmegaEntry, OmegaTrace,
};
pub use table::MassTable;

use crate::lab::Lab;
use crate::numerics::{pair_decode, pair_encode, BitString, Dyadic};
use crate::{Error, Result};

/// `2^{-2n-2}`, the base measure of a string of length `n`.
pub fn base_mass(len: usize) -> Dyadic {
    Dyadic::pow2_neg(2 * len as u64 + 2)
}

/// `sum_{n <= t} 2^n 2^{-2n-2} = 1/2 - 2^{-t-2}`.
pub fn base_total(t: u64) -> Dyadic {
    Dyadic::pow2_neg(1)
        .checked_sub(&Dyadic::pow2_neg(t + 2))
        .expect("positive")
}

impl Lab {
    /// `sum 2^{-|p|}` over halting programs for `x` under `condition` with
    /// `|p| <= stage` and at most `stage` steps.
    pub fn machine_mass(&self, x: &BitString, condition: &BitString, stage: u64) -> Dyadic {
        self.index(condition).mass(x, stage)
    }

    pub fn m_stage(&self, x: &BitString, stage: u64) -> Dyadic {
        &self.plain_index().mass(x, stage).half() + &base_mass(x.len())
    }

    /// Conditional mixture given the numeral of `s`.
    pub fn m_cond_stage(&self, x: &BitString, s: u64, stage: u64) -> Dyadic {
        let cond = self.numeral(s);
        &self.machine_mass(x, &cond, stage).half() + &base_mass(x.len())
    }

    pub fn product_stage(&self, x: &BitString, y: &BitString, stage: u64) -> Dyadic {
        &self.m_stage(x, stage) * &self.m_stage(y, stage)
    }
}

/// The semimeasures the lab can evaluate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StagedSemimeasure {
    MachineMix,
    Conditional(u64),
    /// `m_t(x) m_t(y)` on the pair code `<x,y>`; zero on non-pair strings.
    Product,
    Table(MassTable),
}

impl StagedSemimeasure {
    pub fn name(&self) -> &'static str {
        match self {
            StagedSemimeasure::MachineMix => "machine-mix",
            StagedSemimeasure::Conditional(_) => "conditional",
            StagedSemimeasure::Product => "product",
            StagedSemimeasure::Table(_) => "table",
        }
    }

    pub fn mass(&self, lab: &Lab, x: &BitString, stage: u64) -> Dyadic {
        match self {
            StagedSemimeasure::MachineMix => lab.m_stage(x, stage),
            StagedSemimeasure::Conditional(s) => lab.m_cond_stage(x, *s, stage),
            StagedSemimeasure::Product => match pair_decode(x) {
                Ok((a, b)) => lab.product_stage(&a, &b, stage),
                Err(_) => Dyadic::zero(),
            },
            StagedSemimeasure::Table(t) => t.mass(x, stage),
        }
    }

    /// Mass of a length-`len` string outside [`Self::sparse_support`]; it is
    /// the same at every stage.
    pub fn background(&self, len: usize) -> Result<Dyadic> {
        match self {
            StagedSemimeasure::MachineMix | StagedSemimeasure::Conditional(_) => Ok(base_mass(len)),
            StagedSemimeasure::Table(_) => Ok(Dyadic::zero()),
            StagedSemimeasure::Product => Err(Error::Semimeasure(
                "product semimeasure has no per-length background".into(),
            )),
        }
    }

    /// Strings of length `<= max_len` whose mass ever departs from the
    /// background, sorted.
    pub fn sparse_support(&self, lab: &Lab, max_len: usize) -> Result<Vec<BitString>> {
        Ok(match self {
            StagedSemimeasure::MachineMix => {
                lab.plain_index().support_up_to(max_len).cloned().collect()
            }
            StagedSemimeasure::Conditional(s) => lab
                .index(&lab.numeral(*s))
                .support_up_to(max_len)
                .cloned()
                .collect(),
            StagedSemimeasure::Table(t) => t
                .support()
                .filter(|x| x.len() <= max_len)
                .cloned()
                .collect(),
            StagedSemimeasure::Product => {
                return Err(Error::Semimeasure(
                    "product semimeasure has no sparse support".into(),
                ))
            }
        })
    }

    /// Finite carrier for stage sums: every string of length `<= max_len`
    /// (for products, every pair with both parts that short; for tables, the
    /// table's keys).
    pub fn stage_support(&self, max_len: usize) -> Vec<BitString> {
        match self {
            StagedSemimeasure::MachineMix | StagedSemimeasure::Conditional(_) => {
                BitString::all_up_to(max_len).collect()
            }
            StagedSemimeasure::Product => {
                let parts: Vec<BitString> = BitString::all_up_to(max_len).collect();
                let mut out: Vec<BitString> = parts
                    .iter()
                    .flat_map(|x| parts.iter().map(move |y| pair_encode(x, y)))
                    .collect();
                out.sort();
                out
            }
            StagedSemimeasure::Table(t) => t.support().cloned().collect(),
        }
    }

    /// `sum_{|x| <= t} P_t(x)`, the stage total used by the Omega trace.
    pub fn stage_total(&self, lab: &Lab, t: u64) -> Result<Dyadic> {
        match self {
            StagedSemimeasure::MachineMix => {
                // every output has length <= its step count <= t
                Ok(&base_total(t) + &lab.plain_index().total(t).half())
            }
            StagedSemimeasure::Conditional(s) => {
                Ok(&base_total(t) + &lab.index(&lab.numeral(*s)).total(t).half())
            }
            StagedSemimeasure::Table(table) => Ok(table
                .support()
                .filter(|x| x.len() as u64 <= t)
                .map(|x| table.mass(x, t))
                .sum()),
            StagedSemimeasure::Product => Err(Error::Semimeasure(
                "stage totals are defined for univariate semimeasures".into(),
            )),
        }
    }
}
