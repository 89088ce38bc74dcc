use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::machine::VERSION_ID;
use crate::numerics::Numerals;

/// Everything that determines a run's results, plus execution settings
/// (cache location, worker count) that must not change them.
///
/// Only the result-determining fields are serialized into reports, so a
/// report is byte-identical across worker counts and cache states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabConfig {
    pub machine: String,
    /// Horizon `T`: the largest stage any command looks at by default.
    pub horizon: u64,
    /// Longest program enumerated. Stage `t` admits programs of length
    /// `<= min(t, max_len)`.
    pub max_len: usize,
    /// Step budget of the enumeration walk.
    pub budget: u64,
    pub numerals: Numerals,
    pub alpha: u32,
    pub beta: u32,
    #[serde(skip)]
    pub cache: Option<PathBuf>,
    #[serde(skip)]
    pub workers: usize,
}

impl Default for LabConfig {
    fn default() -> Self {
        Self {
            machine: VERSION_ID.to_string(),
            horizon: 64,
            max_len: 16,
            budget: 1 << 20,
            numerals: Numerals::Binary,
            alpha: 5,
            beta: 6,
            cache: None,
            workers: 1,
        }
    }
}

impl LabConfig {
    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_cache(mut self, cache: Option<PathBuf>) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_numerals(mut self, numerals: Numerals) -> Self {
        self.numerals = numerals;
        self
    }
}
