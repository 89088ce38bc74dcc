use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::numerics::{BitString, Dyadic};
use crate::{Error, Result};

/// A user-supplied semimeasure given by finitely many `(x, stage, mass)`
/// breakpoints. The mass of `x` at stage `t` is the last breakpoint at or
/// before `t`, and zero before the first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MassTable {
    rows: BTreeMap<BitString, BTreeMap<u64, Dyadic>>,
}

impl MassTable {
    /// Build from breakpoints, checking monotonicity in the stage and that
    /// every stage total is at most one.
    pub fn new(entries: impl IntoIterator<Item = (BitString, u64, Dyadic)>) -> Result<Self> {
        let mut rows: BTreeMap<BitString, BTreeMap<u64, Dyadic>> = BTreeMap::new();
        for (x, stage, mass) in entries {
            rows.entry(x).or_default().insert(stage, mass);
        }
        for (x, hist) in &rows {
            let masses: Vec<&Dyadic> = hist.values().collect();
            if masses.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Semimeasure(format!("mass of {x} decreases")));
            }
        }
        let table = Self { rows };
        let stages: std::collections::BTreeSet<u64> = table
            .rows
            .values()
            .flat_map(|h| h.keys().copied())
            .collect();
        for &t in &stages {
            let total: Dyadic = table.rows.keys().map(|x| table.mass(x, t)).sum();
            if total > Dyadic::one() {
                return Err(Error::Semimeasure(format!(
                    "stage {t} total {total} exceeds 1"
                )));
            }
        }
        Ok(table)
    }

    pub fn mass(&self, x: &BitString, stage: u64) -> Dyadic {
        self.rows
            .get(x)
            .and_then(|h| h.range(..=stage).next_back().map(|(_, m)| m.clone()))
            .unwrap_or_else(Dyadic::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &BitString> {
        self.rows.keys()
    }

    /// CSV with header `x,stage,mass`; masses in dyadic text.
    pub fn read_csv(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut entries = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Semimeasure(e.to_string()))?;
            if rec.len() != 3 {
                return Err(Error::Semimeasure(format!(
                    "expected 3 columns, got {}",
                    rec.len()
                )));
            }
            let x: BitString = rec[0].parse()?;
            let stage: u64 = rec[1]
                .parse()
                .map_err(|_| Error::Semimeasure(format!("bad stage {:?}", &rec[1])))?;
            let mass: Dyadic = rec[2].parse()?;
            entries.push((x, stage, mass));
        }
        Self::new(entries)
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "stage", "mass"])
            .map_err(|e| Error::Semimeasure(e.to_string()))?;
        for (x, hist) in &self.rows {
            for (stage, mass) in hist {
                w.write_record([x.to_string(), stage.to_string(), mass.to_string()])
                    .map_err(|e| Error::Semimeasure(e.to_string()))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
