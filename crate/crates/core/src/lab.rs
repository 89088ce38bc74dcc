//! The shared evaluation context: one machine configuration, its halting
//! domains indexed by stage, and the optional persistent cache behind them.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use rayon::ThreadPool;

use crate::config::LabConfig;
use crate::machine::{enumerate_with, CacheError, EnumerationCache, HaltRecord, MassIndex};
use crate::numerics::BitString;
use crate::Error;

const MEMO_CAPACITY: usize = 1024;

#[derive(Default)]
struct Memo {
    map: HashMap<BitString, Arc<MassIndex>>,
    order: VecDeque<BitString>,
}

pub struct Lab {
    config: LabConfig,
    pool: Option<ThreadPool>,
    plain: Arc<MassIndex>,
    plain_records: Vec<HaltRecord>,
    memo: Mutex<Memo>,
    cache: Option<Mutex<EnumerationCache>>,
    cache_fault: Mutex<Option<String>>,
}

impl Lab {
    pub fn new(config: LabConfig) -> Result<Self, Error> {
        if config.machine != crate::machine::VERSION_ID {
            return Err(Error::Cache(CacheError::VersionMismatch {
                found: config.machine.clone(),
                expected: crate::machine::VERSION_ID.to_string(),
            }));
        }
        let pool = if config.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.workers)
                    .build()
                    .map_err(|e| Error::Config(e.to_string()))?,
            )
        } else {
            None
        };
        let cache = match &config.cache {
            Some(path) => Some(Mutex::new(EnumerationCache::load(path)?)),
            None => None,
        };
        let mut lab = Self {
            config,
            pool,
            plain: Arc::new(MassIndex::default()),
            plain_records: Vec::new(),
            memo: Mutex::new(Memo::default()),
            cache,
            cache_fault: Mutex::new(None),
        };
        lab.plain_records = lab.enumerate(&BitString::new());
        lab.plain = Arc::new(MassIndex::build(&lab.plain_records));
        Ok(lab)
    }

    /// Default configuration with the given program-length cap.
    pub fn with_max_len(max_len: usize) -> Self {
        Self::new(LabConfig::default().with_max_len(max_len)).expect("default lab")
    }

    pub fn config(&self) -> &LabConfig {
        &self.config
    }

    fn enumerate(&self, condition: &BitString) -> Vec<HaltRecord> {
        let (max_len, budget) = (self.config.max_len, self.config.budget);
        let Some(cache) = &self.cache else {
            return enumerate_with(max_len, budget, condition, self.pool.as_ref()).halts;
        };
        if let Some(hit) = cache.lock().unwrap().lookup(max_len, budget, condition) {
            return hit;
        }
        let walk = enumerate_with(max_len, budget, condition, self.pool.as_ref());
        if let Err(e) = cache
            .lock()
            .unwrap()
            .append(&walk, max_len, budget, condition)
        {
            self.cache_fault
                .lock()
                .unwrap()
                .get_or_insert(e.to_string());
        }
        walk.halts
    }

    /// Halting domain with the empty condition.
    pub fn plain_records(&self) -> &[HaltRecord] {
        &self.plain_records
    }

    pub fn plain_index(&self) -> &MassIndex {
        &self.plain
    }

    /// Stage index of the halting domain under `condition`.
    pub fn index(&self, condition: &BitString) -> Arc<MassIndex> {
        if condition.is_empty() {
            return self.plain.clone();
        }
        if let Some(hit) = self.memo.lock().unwrap().map.get(condition) {
            return hit.clone();
        }
        let built = Arc::new(MassIndex::build(&self.enumerate(condition)));
        let mut memo = self.memo.lock().unwrap();
        if !memo.map.contains_key(condition) {
            if memo.order.len() >= MEMO_CAPACITY {
                if let Some(old) = memo.order.pop_front() {
                    memo.map.remove(&old);
                }
            }
            memo.order.push_back(condition.clone());
            memo.map.insert(condition.clone(), built.clone());
        }
        built
    }

    /// Stage numeral under the configured convention.
    pub fn numeral(&self, n: u64) -> BitString {
        self.config.numerals.encode(n)
    }

    /// Time-bounded prefix complexity: the shortest program of length
    /// `<= stage` that outputs `x` within `stage` steps; `None` is infinity.
    pub fn ktime(&self, x: &BitString, condition: &BitString, stage: u64) -> Option<usize> {
        self.index(condition).shortest(x, stage)
    }

    /// Replay a deterministic sample of cached halting records.
    pub fn cache_spot_check(&self, sample: usize) -> Option<(usize, usize)> {
        let cache = self.cache.as_ref()?.lock().unwrap();
        let records: Vec<&HaltRecord> = cache.halt_records().collect();
        let stride = (records.len() / sample.max(1)).max(1);
        let checked: Vec<bool> = records
            .iter()
            .step_by(stride)
            .map(|r| r.replays())
            .collect();
        Some((checked.len(), checked.iter().filter(|&&ok| !ok).count()))
    }

    /// First cache write failure, if any occurred.
    pub fn cache_fault(&self) -> Option<String> {
        self.cache_fault.lock().unwrap().clone()
    }

    pub fn cache_stats(&self) -> Option<crate::machine::CacheStats> {
        Some(self.cache.as_ref()?.lock().unwrap().stats())
    }
}
