//! Sumtest constructions over the staged semimeasures: `u_h` and its
//! domination schedule, `e_{f,g}`, the adversarial string builder with the
//! synthesis of `g`, the upper-bound trace, and the halting-information proxy.

pub mod adversary;
pub mod efg;
pub mod oracle;
pub mod schedule;
pub mod uh;
pub mod upper;

pub use adversary::{
    adversary_build, g_build, replay_dense, GBuild, GStep, InitialFilter, SurvivorStep,
    SurvivorTrace,
};
pub use efg::{
    e_fg, e_fg_by_horizon, efg_measure_check, lemma_f_schedule, v_value, EfgCheck, EfgParams,
};
pub use oracle::{itime, oracle_estimate, OracleEstimate};
pub use schedule::{Expr, Key, Schedule, ScheduleTable};
pub use uh::{
    dominate_schedule, sumtest_stage_check, u_h, u_h_batch, Domination, StageCheck, TestApprox,
};
pub use upper::{upperbound_trace, UpperTrace};
