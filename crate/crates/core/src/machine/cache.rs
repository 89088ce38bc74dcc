//! Persistent, append-only enumeration cache.
//!
//! File layout: a header line `RPM-1 <format-version>`, then one record per
//! line with tab-separated fields `program, condition, status, output,
//! steps, consumed`. Status `H` is a halting record. Status `T` is a prefix
//! cut off by the budget, whose `steps` field holds the budget attempted.
//!
//! A `T` record with an empty program marks coverage: the whole program tree
//! for that condition was walked to depth `consumed` at budget `steps`. A
//! real cut-off prefix always holds at least one instruction, so the two
//! never collide.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::ThreadPool;
use serde::Serialize;
use thiserror::Error;

use super::enumerate::{enumerate_with, Enumeration, TimeoutRecord};
use super::rpm::{HaltRecord, VERSION_ID};
use crate::numerics::BitString;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache header {found:?} does not match {expected:?}")]
    VersionMismatch { found: String, expected: String },
    #[error("corrupt cache record at line {line}: {reason}")]
    CorruptRecord { line: usize, reason: String },
    #[error("cache I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, Default)]
struct ConditionEntry {
    /// `(max_len, budget)` pairs for which the walk is complete.
    coverage: Vec<(usize, u64)>,
    halts: BTreeMap<BitString, HaltRecord>,
    timeouts: BTreeMap<BitString, TimeoutRecord>,
}

impl ConditionEntry {
    fn covers(&self, max_len: usize, budget: u64) -> bool {
        self.coverage
            .iter()
            .any(|&(l, b)| l >= max_len && b >= budget)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub conditions: usize,
    pub halt_records: usize,
    pub timeout_records: usize,
    pub coverage_markers: usize,
    pub file_lines: usize,
}

#[derive(Debug)]
pub struct EnumerationCache {
    path: PathBuf,
    entries: BTreeMap<BitString, ConditionEntry>,
    file_lines: usize,
}

fn header() -> String {
    format!("{VERSION_ID} {FORMAT_VERSION}")
}

fn halt_line(r: &HaltRecord) -> String {
    format!(
        "{}\t{}\tH\t{}\t{}\t{}",
        r.program, r.condition, r.output, r.steps, r.consumed
    )
}

fn timeout_line(r: &TimeoutRecord) -> String {
    format!(
        "{}\t{}\tT\t{}\t{}\t{}",
        r.program, r.condition, r.output, r.budget, r.consumed
    )
}

fn coverage_line(condition: &BitString, max_len: usize, budget: u64) -> String {
    format!("\t{condition}\tT\t\t{budget}\t{max_len}")
}

impl EnumerationCache {
    /// Open a cache file, creating it with a fresh header if it is missing
    /// or empty.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CacheError> {
        let path = path.as_ref().to_path_buf();
        let mut cache = Self {
            path: path.clone(),
            entries: BTreeMap::new(),
            file_lines: 0,
        };
        let fresh = match fs::metadata(&path) {
            Ok(meta) => meta.len() == 0,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => true,
            Err(e) => return Err(e.into()),
        };
        if fresh {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(&path, format!("{}\n", header()))?;
            cache.file_lines = 1;
            return Ok(cache);
        }
        let reader = BufReader::new(File::open(&path)?);
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            cache.file_lines = lineno;
            if idx == 0 {
                if line.trim_end() != header() {
                    return Err(CacheError::VersionMismatch {
                        found: line,
                        expected: header(),
                    });
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            cache.ingest_line(&line, lineno)?;
        }
        Ok(cache)
    }

    fn ingest_line(&mut self, line: &str, lineno: usize) -> Result<(), CacheError> {
        let corrupt = |reason: String| CacheError::CorruptRecord {
            line: lineno,
            reason,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(corrupt(format!(
                "expected 6 fields, found {}",
                fields.len()
            )));
        }
        let bs = |s: &str| s.parse::<BitString>().map_err(|e| corrupt(e.to_string()));
        let program = bs(fields[0])?;
        let condition = bs(fields[1])?;
        let output = bs(fields[3])?;
        let steps: u64 = fields[4]
            .parse()
            .map_err(|_| corrupt(format!("bad steps field {:?}", fields[4])))?;
        let consumed: usize = fields[5]
            .parse()
            .map_err(|_| corrupt(format!("bad consumed field {:?}", fields[5])))?;
        let entry = self.entries.entry(condition.clone()).or_default();
        match fields[2] {
            "H" => {
                if consumed != program.len() {
                    return Err(corrupt("consumed differs from program length".into()));
                }
                entry.halts.insert(
                    program.clone(),
                    HaltRecord {
                        program,
                        condition,
                        output,
                        steps,
                        consumed,
                    },
                );
            }
            "T" if program.is_empty() => entry.coverage.push((consumed, steps)),
            "T" => {
                let keep = entry
                    .timeouts
                    .get(&program)
                    .is_none_or(|old| old.budget < steps);
                if keep {
                    entry.timeouts.insert(
                        program.clone(),
                        TimeoutRecord {
                            program,
                            condition,
                            output,
                            budget: steps,
                            consumed,
                        },
                    );
                }
            }
            other => return Err(corrupt(format!("unknown status {other:?}"))),
        }
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Records answered from the cache, if a stored walk covers the request.
    pub fn lookup(
        &self,
        max_len: usize,
        budget: u64,
        condition: &BitString,
    ) -> Option<Vec<HaltRecord>> {
        let entry = self.entries.get(condition)?;
        entry.covers(max_len, budget).then(|| {
            entry
                .halts
                .values()
                .filter(|r| r.program.len() <= max_len && r.steps <= budget)
                .cloned()
                .collect()
        })
    }

    /// Enumerate through the cache: answer from a covering walk, or walk
    /// cold and append what was found.
    pub fn enumerate(
        &mut self,
        max_len: usize,
        budget: u64,
        condition: &BitString,
        pool: Option<&ThreadPool>,
    ) -> Result<Vec<HaltRecord>, CacheError> {
        if let Some(hit) = self.lookup(max_len, budget, condition) {
            return Ok(hit);
        }
        let walk = enumerate_with(max_len, budget, condition, pool);
        self.append(&walk, max_len, budget, condition)?;
        Ok(walk.halts)
    }

    /// Append a complete walk. Records already present are not rewritten.
    pub fn append(
        &mut self,
        walk: &Enumeration,
        max_len: usize,
        budget: u64,
        condition: &BitString,
    ) -> Result<(), CacheError> {
        let file = OpenOptions::new().append(true).open(&self.path)?;
        let mut out = BufWriter::new(file);
        let entry = self.entries.entry(condition.clone()).or_default();
        let mut written = 0;
        for r in &walk.halts {
            if !entry.halts.contains_key(&r.program) {
                writeln!(out, "{}", halt_line(r))?;
                entry.halts.insert(r.program.clone(), r.clone());
                written += 1;
            }
        }
        for r in &walk.timeouts {
            let fresh = entry
                .timeouts
                .get(&r.program)
                .is_none_or(|old| old.budget < r.budget);
            if fresh {
                writeln!(out, "{}", timeout_line(r))?;
                entry.timeouts.insert(r.program.clone(), r.clone());
                written += 1;
            }
        }
        writeln!(out, "{}", coverage_line(condition, max_len, budget))?;
        entry.coverage.push((max_len, budget));
        out.flush()?;
        self.file_lines += written + 1;
        Ok(())
    }

    pub fn halt_records(&self) -> impl Iterator<Item = &HaltRecord> {
        self.entries.values().flat_map(|e| e.halts.values())
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            conditions: self.entries.len(),
            halt_records: self.entries.values().map(|e| e.halts.len()).sum(),
            timeout_records: self.entries.values().map(|e| e.timeouts.len()).sum(),
            coverage_markers: self.entries.values().map(|e| e.coverage.len()).sum(),
            file_lines: self.file_lines,
        }
    }

    /// Rewrite the file keeping one record per program, undominated coverage
    /// markers only, and cut-off prefixes only at the largest walked budget.
    pub fn compact(&mut self) -> Result<CacheStats, CacheError> {
        let mut lines = vec![header()];
        for (condition, entry) in self.entries.iter_mut() {
            let all = entry.coverage.clone();
            entry.coverage.retain(|&(l, b)| {
                !all.iter()
                    .any(|&(l2, b2)| (l2, b2) != (l, b) && l2 >= l && b2 >= b)
            });
            entry.coverage.sort();
            entry.coverage.dedup();
            let top_budget = entry.coverage.iter().map(|&(_, b)| b).max().unwrap_or(0);
            entry.timeouts.retain(|_, t| t.budget >= top_budget);
            lines.extend(entry.halts.values().map(halt_line));
            lines.extend(entry.timeouts.values().map(timeout_line));
            lines.extend(
                entry
                    .coverage
                    .iter()
                    .map(|&(l, b)| coverage_line(condition, l, b)),
            );
        }
        let tmp = self.path.with_extension("compact.tmp");
        fs::write(&tmp, lines.join("\n") + "\n")?;
        fs::rename(&tmp, &self.path)?;
        self.file_lines = lines.len();
        Ok(self.stats())
    }
}
