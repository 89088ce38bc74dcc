use std::collections::{BTreeMap, HashMap};

use super::rpm::HaltRecord;
use crate::numerics::{BitString, Dyadic};

#[derive(Clone, Debug, Default)]
struct OutputHistory {
    /// Appearance stages, ascending; parallel cumulative columns.
    stage: Vec<u64>,
    mass: Vec<Dyadic>,
    min_len: Vec<usize>,
}

impl OutputHistory {
    fn upto(&self, stage: u64) -> Option<usize> {
        let n = self.stage.partition_point(|&s| s <= stage);
        n.checked_sub(1)
    }
}

/// Stage-indexed view of one halting domain: for each output, how much
/// program mass has appeared by stage `t`, and how short its shortest
/// program is.
#[derive(Clone, Debug, Default)]
pub struct MassIndex {
    outputs: HashMap<BitString, OutputHistory>,
    by_len: BTreeMap<usize, Vec<BitString>>,
    total_stage: Vec<u64>,
    total_mass: Vec<Dyadic>,
    records: usize,
}

impl MassIndex {
    pub fn build(records: &[HaltRecord]) -> Self {
        let mut sorted: Vec<&HaltRecord> = records.iter().collect();
        sorted.sort_by(|a, b| {
            a.appearance()
                .cmp(&b.appearance())
                .then_with(|| a.program.cmp(&b.program))
        });
        let mut outputs: HashMap<BitString, OutputHistory> = HashMap::new();
        let mut total_stage = Vec::new();
        let mut total_mass: Vec<Dyadic> = Vec::new();
        for r in sorted {
            let stage = r.appearance();
            let weight = Dyadic::pow2_neg(r.program.len() as u64);
            let h = outputs.entry(r.output.clone()).or_default();
            let (mass, min_len) = match (h.mass.last(), h.min_len.last()) {
                (Some(m), Some(&l)) => (m + &weight, l.min(r.program.len())),
                _ => (weight.clone(), r.program.len()),
            };
            if h.stage.last() == Some(&stage) {
                *h.mass.last_mut().unwrap() = mass;
                *h.min_len.last_mut().unwrap() = min_len;
            } else {
                h.stage.push(stage);
                h.mass.push(mass);
                h.min_len.push(min_len);
            }
            let total = match total_mass.last() {
                Some(t) => t + &weight,
                None => weight,
            };
            if total_stage.last() == Some(&stage) {
                *total_mass.last_mut().unwrap() = total;
            } else {
                total_stage.push(stage);
                total_mass.push(total);
            }
        }
        let mut by_len: BTreeMap<usize, Vec<BitString>> = BTreeMap::new();
        for x in outputs.keys() {
            by_len.entry(x.len()).or_default().push(x.clone());
        }
        for v in by_len.values_mut() {
            v.sort();
        }
        Self {
            outputs,
            by_len,
            total_stage,
            total_mass,
            records: records.len(),
        }
    }

    /// Sum of `2^-|p|` over records with output `x` appearing by `stage`.
    pub fn mass(&self, x: &BitString, stage: u64) -> Dyadic {
        self.outputs
            .get(x)
            .and_then(|h| h.upto(stage).map(|i| h.mass[i].clone()))
            .unwrap_or_else(Dyadic::zero)
    }

    /// Length of the shortest program for `x` appearing by `stage`.
    pub fn shortest(&self, x: &BitString, stage: u64) -> Option<usize> {
        let h = self.outputs.get(x)?;
        h.upto(stage).map(|i| h.min_len[i])
    }

    /// Kraft sum of every record appearing by `stage`.
    pub fn total(&self, stage: u64) -> Dyadic {
        let n = self.total_stage.partition_point(|&s| s <= stage);
        n.checked_sub(1)
            .map(|i| self.total_mass[i].clone())
            .unwrap_or_else(Dyadic::zero)
    }

    pub fn first_appearance(&self, x: &BitString) -> Option<u64> {
        self.outputs.get(x).and_then(|h| h.stage.first().copied())
    }

    /// Outputs of length exactly `n`, sorted.
    pub fn support_of_len(&self, n: usize) -> &[BitString] {
        self.by_len.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Outputs of length at most `n`, length-then-lexicographic.
    pub fn support_up_to(&self, n: usize) -> impl Iterator<Item = &BitString> {
        self.by_len.range(..=n).flat_map(|(_, v)| v.iter())
    }

    pub fn contains(&self, x: &BitString) -> bool {
        self.outputs.contains_key(x)
    }

    pub fn record_count(&self) -> usize {
        self.records
    }

    /// Latest stage at which any mass appears.
    pub fn last_change(&self) -> u64 {
        self.total_stage.last().copied().unwrap_or(0)
    }
}
