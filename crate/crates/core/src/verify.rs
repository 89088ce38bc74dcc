//! Invariant suite behind the `verify` command.
//!
//! Every check is sized from the lab's horizon and program-length cap and
//! draws its random samples from a fixed seed, so the report depends only on
//! the result-determining configuration.

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::lab::Lab;
use crate::machine::{enumerate_with, kraft_sum, prefix_violations, run, RunOutcome};
use crate::numerics::{
    decode_num, encode_num, leftmost_diff_bit, pair_decode, pair_encode, rational_sum, BitString,
    Dyadic, Rational,
};
use crate::report::{csv_text, Report, Status};
use crate::semimeasure::{f_lemma, lemma1_finite, lemma_threshold, omega_trace, StagedSemimeasure};
use crate::sumtests::{
    adversary_build, e_fg_by_horizon, g_build, replay_dense, sumtest_stage_check, u_h_batch,
    upperbound_trace, v_value, EfgParams, Schedule, TestApprox,
};
use crate::Result;

const SEED: u64 = 0x5eed_1ab0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Suite {
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

struct Recorder(Vec<Check>);

impl Recorder {
    fn add(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.0.push(Check {
            name: name.to_string(),
            pass,
            detail: detail.into(),
        });
    }

    fn add_result(&mut self, name: &str, r: Result<(bool, String)>) {
        match r {
            Ok((pass, detail)) => self.add(name, pass, detail),
            Err(e) => self.add(name, false, format!("error: {e}")),
        }
    }
}

fn random_bits(rng: &mut ChaCha8Rng, max_len: usize) -> BitString {
    let len = rng.gen_range(0..=max_len);
    BitString::from_bits((0..len).map(|_| rng.gen()).collect())
}

fn random_unit_dyadic(rng: &mut ChaCha8Rng) -> Dyadic {
    let scale = rng.gen_range(0..=40u64);
    let m = if scale == 0 {
        0
    } else {
        rng.gen::<u64>() >> (64 - scale)
    };
    Dyadic::new(BigUint::from(m), scale)
}

fn numerics_checks(out: &mut Recorder, rng: &mut ChaCha8Rng) {
    let mut bad = 0;
    for _ in 0..500 {
        let a = random_unit_dyadic(rng);
        let b = if rng.gen_bool(0.2) {
            a.clone()
        } else {
            random_unit_dyadic(rng)
        };
        match leftmost_diff_bit(&a, &b) {
            Ok(k) if k.is_none() == (a == b) => {}
            _ => bad += 1,
        }
    }
    out.add(
        "numerics.leftmost_diff_bit",
        bad == 0,
        format!("500 pairs, {bad} bad"),
    );

    let mut bad = 0;
    for _ in 0..50 {
        let mut terms: Vec<Rational> = (0..30)
            .map(|_| Rational::from_u64_ratio(rng.gen_range(0..1000), rng.gen_range(1..1000)))
            .collect();
        let before = rational_sum(&terms);
        terms.shuffle(rng);
        if rational_sum(&terms) != before {
            bad += 1;
        }
    }
    out.add(
        "numerics.sum_permutation",
        bad == 0,
        format!("50 shuffles, {bad} bad"),
    );

    let roundtrip = (0..=1_000_000u64).all(|n| decode_num(&encode_num(n)) == Ok(n));
    out.add("numerics.numeral_roundtrip", roundtrip, "n <= 1000000");

    let ordered = (0..100_000u64).all(|n| encode_num(n) < encode_num(n + 1));
    out.add("numerics.numeral_order", ordered, "n < 100000");

    let mut bad = 0;
    for _ in 0..200 {
        let (x, y) = (random_bits(rng, 64), random_bits(rng, 64));
        if pair_decode(&pair_encode(&x, &y)) != Ok((x, y)) {
            bad += 1;
        }
    }
    out.add(
        "numerics.pair_roundtrip",
        bad == 0,
        format!("200 pairs, {bad} bad"),
    );
}

fn machine_checks(lab: &Lab, out: &mut Recorder, rng: &mut ChaCha8Rng) {
    let cfg = lab.config();
    let records = lab.plain_records();
    let violations = prefix_violations(records);
    out.add(
        "machine.prefix_free",
        violations.is_empty(),
        format!("{} records, {} violations", records.len(), violations.len()),
    );
    let kraft = kraft_sum(records);
    out.add(
        "machine.kraft",
        kraft <= Dyadic::one(),
        format!("sum {kraft}"),
    );

    let mut bad = 0;
    let mut halted = 0;
    for i in 0..400 {
        let (program, budget) = if i % 2 == 0 {
            let r = &records[rng.gen_range(0..records.len())];
            (r.program.clone(), r.steps)
        } else {
            (random_bits(rng, cfg.max_len), rng.gen_range(1..=64))
        };
        let empty = BitString::new();
        let first = run(&program, &empty, budget);
        if let RunOutcome::Halted { .. } = first {
            halted += 1;
            if run(&program, &empty, budget + rng.gen_range(1..=1024)) != first {
                bad += 1;
            }
        }
    }
    out.add(
        "machine.budget_monotone",
        bad == 0,
        format!("400 candidates, {halted} halted, {bad} unstable"),
    );

    let sequential = enumerate_with(cfg.max_len, cfg.budget, &BitString::new(), None);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build();
    let same = match &pool {
        Ok(pool) => {
            let parallel = enumerate_with(cfg.max_len, cfg.budget, &BitString::new(), Some(pool));
            parallel == sequential && sequential.halts == records
        }
        Err(_) => false,
    };
    out.add(
        "machine.enumeration_determinism",
        same,
        "sequential, partitioned, loaded",
    );

    let mut bad = 0;
    for x in BitString::all_up_to(4) {
        let ks: Vec<Option<usize>> = (0..=cfg.horizon)
            .map(|t| lab.ktime(&x, &BitString::new(), t))
            .collect();
        // None is infinity, so it may only precede finite values
        if ks.windows(2).any(|w| {
            matches!((w[0], w[1]), (Some(a), Some(b)) if b > a)
                || (w[0].is_some() && w[1].is_none())
        }) {
            bad += 1;
        }
    }
    out.add(
        "machine.ktime_antitone",
        bad == 0,
        format!("|x| <= 4, {bad} bad"),
    );

    let stride = (records.len() / 64).max(1);
    let sample: Vec<bool> = records
        .iter()
        .step_by(stride)
        .map(|r| r.replays())
        .collect();
    let cache_ok = lab
        .cache_spot_check(64)
        .is_none_or(|(_, failed)| failed == 0);
    let failed = sample.iter().filter(|ok| !**ok).count();
    out.add(
        "machine.record_replay",
        failed == 0 && cache_ok,
        format!("{} sampled, {failed} failed", sample.len()),
    );
}

fn semimeasure_checks(lab: &Lab, out: &mut Recorder, rng: &mut ChaCha8Rng) {
    let horizon = lab.config().horizon;
    let mut bad = 0;
    for _ in 0..200 {
        let x = random_bits(rng, 6);
        let y = random_bits(rng, 3);
        let t = rng.gen_range(0..horizon.max(1));
        let s = rng.gen_range(0..=8);
        if lab.m_stage(&x, t) > lab.m_stage(&x, t + 1)
            || lab.m_cond_stage(&x, s, t) > lab.m_cond_stage(&x, s, t + 1)
            || lab.product_stage(&x, &y, t) > lab.product_stage(&x, &y, t + 1)
        {
            bad += 1;
        }
    }
    out.add(
        "semimeasure.monotone",
        bad == 0,
        format!("200 samples, {bad} bad"),
    );

    let trace = omega_trace(lab, horizon);
    let om: Vec<&Dyadic> = trace.entries.iter().map(|e| &e.omega).collect();
    let subnormal = om.iter().all(|o| **o <= Dyadic::one()) && om.windows(2).all(|w| w[0] <= w[1]);
    out.add(
        "semimeasure.omega_subnormal",
        subnormal,
        format!("t <= {horizon}, omega_T = {}", om[om.len() - 1]),
    );

    let mut prev = Dyadic::zero();
    let mut bad = 0;
    for e in &trace.entries {
        if leftmost_diff_bit(&prev, &e.omega).ok() != Some(e.k_t) {
            bad += 1;
        }
        prev = e.omega.clone();
    }
    out.add("semimeasure.k_trace", bad == 0, format!("{bad} mismatches"));

    let rows = lemma1_finite(lab, &trace, 8.min(horizon as usize));
    out.add(
        "semimeasure.lemma1_mass",
        rows.iter().all(|r| r.holds),
        format!("{} values of k", rows.len()),
    );

    let mut met = 0;
    let mut bad = 0;
    for t in 0..=horizon {
        if let Ok(stage) = f_lemma(lab, &trace, t) {
            met += 1;
            let need = trace.k(t).map_or(Rational::zero(), lemma_threshold);
            if Rational::from_dyadic(lab.m_stage(&lab.numeral(t), stage)) < need {
                bad += 1;
            }
        }
    }
    out.add(
        "semimeasure.lemma1_wait",
        bad == 0,
        format!("{met} stages resolved, {bad} below threshold"),
    );
}

fn uh_checks(lab: &Lab, out: &mut Recorder) -> Result<()> {
    let horizon = lab.config().horizon.clamp(1, 32);
    let mix = StagedSemimeasure::MachineMix;
    let probes: Vec<BitString> = BitString::all_up_to(3).collect();
    let h = Schedule::expr("s")?;
    let test = TestApprox::Uh {
        p: mix.clone(),
        h: h.clone(),
    };
    let by_s = test.values_by_horizon(lab, &probes, horizon)?;
    let antitone = by_s
        .windows(2)
        .all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| b <= a));
    out.add(
        "sumtests.uh_antitone",
        antitone,
        format!("|x| <= 3, S <= {horizon}"),
    );

    let last = &by_s[by_s.len() - 1];
    let mut bad = 0;
    for s in 1..=horizon {
        for (x, u) in probes.iter().zip(last) {
            let term = Rational::new(lab.m_cond_stage(x, s, h.eval(x, s)), lab.m_stage(x, s))?;
            if *u > term {
                bad += 1;
            }
        }
    }
    out.add(
        "sumtests.uh_infimum",
        bad == 0,
        format!("{bad} terms below u_h"),
    );

    let wider = u_h_batch(lab, &probes, &mix, &Schedule::expr("2*s")?, horizon)?;
    let monotone = last.iter().zip(&wider).all(|(a, b)| a <= b);
    out.add(
        "sumtests.uh_schedule_monotone",
        monotone,
        "h = s against h = 2*s",
    );

    for p in [mix, StagedSemimeasure::Product] {
        for h in ["s", "2*s", "s^2", "s+n"] {
            let name = format!("sumtests.stage_sumtest.{}.{h}", p.name());
            let r = (|| {
                let support = p.stage_support(if matches!(p, StagedSemimeasure::Product) {
                    3
                } else {
                    6
                });
                let test = TestApprox::Uh {
                    p: p.clone(),
                    h: Schedule::expr(h)?,
                };
                let check = sumtest_stage_check(lab, &p, &test, horizon, &support)?;
                Ok((
                    check.pass,
                    format!("{} strings, S = {horizon}", support.len()),
                ))
            })();
            out.add_result(&name, r);
        }
    }
    Ok(())
}

fn efg_checks(lab: &Lab, out: &mut Recorder) -> Result<()> {
    let horizon = lab.config().horizon;
    let mut bad = 0;
    for beta in [0, 1] {
        let params = EfgParams {
            f: Schedule::expr("s")?,
            g: Schedule::expr("2*s")?,
            alpha: 1,
            beta,
        };
        for n in 4..=6 {
            let v = v_value(n as u64, 1);
            for x in BitString::all_of_len(n) {
                let by_t = e_fg_by_horizon(lab, &params, &x, horizon);
                let in_range = by_t.iter().all(|e| *e == v || *e == Rational::one());
                if !in_range || by_t.windows(2).any(|w| w[1] > w[0]) {
                    bad += 1;
                }
            }
        }
    }
    out.add(
        "sumtests.efg_range",
        bad == 0,
        format!("4 <= n <= 6, T <= {horizon}, {bad} bad"),
    );
    out.add(
        "sumtests.efg_clamp",
        v_value(1024, 5) == Rational::one(),
        "n = 1024, alpha = 5",
    );
    Ok(())
}

fn adversary_checks(lab: &Lab, out: &mut Recorder) -> Result<()> {
    let horizon = lab.config().horizon.clamp(1, 16);
    let f = Schedule::expr("s")?;
    for n in [6usize, 8] {
        let trace = adversary_build(lab, n, &f, horizon, 0, None)?;
        let census = !trace.census_applies || trace.census_ok;
        out.add(
            &format!("sumtests.adversary_census.n{n}"),
            census,
            format!(
                "{} stages, {} removed",
                trace.t_list.len(),
                trace.removed_total
            ),
        );
        let replay = replay_dense(lab, &trace, None);
        let removed: Vec<Vec<BitString>> = trace.steps.iter().map(|s| s.removed.clone()).collect();
        let same = replay.is_some_and(|(survivor, r)| survivor == trace.survivor && r == removed);
        out.add(
            &format!("sumtests.adversary_replay.n{n}"),
            same,
            format!("survivor {}", trace.survivor),
        );
        let g = g_build(lab, &trace, None, horizon)?;
        let ok = g.failures.is_empty() && g.steps.iter().all(|s| s.constraint_ok);
        out.add(
            &format!("sumtests.g_constraint.n{n}"),
            ok,
            format!("{} steps, c = {}", g.steps.len(), g.c),
        );
    }
    Ok(())
}

fn upper_checks(lab: &Lab, out: &mut Recorder) -> Result<()> {
    let horizon = lab.config().horizon.clamp(1, 256);
    let tr = upperbound_trace(
        lab,
        &Schedule::expr("2*s")?,
        &Rational::from_integer(4),
        2,
        horizon,
    )?;
    out.add(
        "sumtests.upper_disjunction",
        tr.rows.iter().all(|r| r.holds),
        format!("{} stages, {} rows", tr.stages.len(), tr.rows.len()),
    );
    out.add(
        "sumtests.upper_telescoping",
        tr.probes.iter().all(|p| p.telescoping_ok),
        format!("{} probes", tr.probes.len()),
    );
    let bounded = tr
        .probes
        .iter()
        .all(|p| p.doubling_ok && p.doublings <= 2 * p.x.len() as u64 + 2);
    out.add("sumtests.upper_doublings", bounded, "doublings <= 2|x| + 2");
    Ok(())
}

/// Run every check; the report fails iff some check fails.
pub fn verify_suite(lab: &Lab) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out = Recorder(Vec::new());
    numerics_checks(&mut out, &mut rng);
    machine_checks(lab, &mut out, &mut rng);
    semimeasure_checks(lab, &mut out, &mut rng);
    for (name, r) in [
        ("sumtests.uh", uh_checks(lab, &mut out)),
        ("sumtests.efg", efg_checks(lab, &mut out)),
        ("sumtests.adversary", adversary_checks(lab, &mut out)),
        ("sumtests.upper", upper_checks(lab, &mut out)),
    ] {
        if let Err(e) = r {
            out.add(name, false, format!("error: {e}"));
        }
    }
    let checks = out.0;
    let failed = checks.iter().filter(|c| !c.pass).count();
    let rows: Vec<Vec<String>> = checks
        .iter()
        .map(|c| vec![c.name.clone(), c.pass.to_string(), c.detail.clone()])
        .collect();
    let table = csv_text(&["check", "pass", "detail"], &rows);
    let suite = Suite {
        passed: checks.len() - failed,
        failed,
        checks,
    };
    Report::new("verify", lab.config())
        .with_status(if failed == 0 {
            Status::Pass
        } else {
            Status::Fail
        })
        .with_summary(suite)
        .with_table("checks", table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::LabConfig;

    #[test]
    fn small_suite_passes() {
        let lab = Lab::new(LabConfig::default().with_max_len(10).with_horizon(16)).unwrap();
        let report = verify_suite(&lab);
        assert!(report.passed(), "{}", report.summary_json());
        let again = verify_suite(&lab);
        assert_eq!(report.summary_json(), again.summary_json());
        assert_eq!(report.tables, again.tables);
    }
}
