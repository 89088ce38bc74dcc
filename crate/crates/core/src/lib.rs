//! Exact finite-stage laboratory for upper-semicomputable sumtests.
//!
//! A concrete step-bounded prefix machine ([`machine`]) supplies the stage
//! approximations of the universal semimeasure ([`semimeasure`]); the
//! sumtest constructions and the finite-stage inequalities they rest on live
//! in [`sumtests`]. All masses are exact dyadics and all test values exact
//! rationals ([`numerics`]), so every inequality is checked with zero slack.

pub mod config;
pub mod lab;
pub mod machine;
pub mod numerics;
pub mod report;
pub mod semimeasure;
pub mod sumtests;
pub mod verify;

pub use config::LabConfig;
pub use lab::Lab;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
    #[error(transparent)]
    Cache(#[from] machine::CacheError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no stage t <= {horizon} has k_t <= {k}")]
    NoSuchStage { k: u64, horizon: u64 },
    #[error("horizon {horizon} exceeded for {what}; residual gap {gap}")]
    HorizonExceeded {
        what: String,
        horizon: u64,
        gap: numerics::Rational,
    },
    #[error("zero denominator: P_{stage}({x}) = 0")]
    ZeroDenominator { x: numerics::BitString, stage: u64 },
    #[error("precondition violated at stage {stage}: sum P_s(x) e_s(x) = {sum} > 1")]
    PreconditionViolated { stage: u64, sum: numerics::Rational },
    #[error("adversary list exhausted: {removed} strings removed, {filtered} filtered")]
    ListExhausted { removed: usize, filtered: usize },
    #[error("undefined: {0}")]
    Undefined(String),
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("semimeasure error: {0}")]
    Semimeasure(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
