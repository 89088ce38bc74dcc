//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sumtest_lab::machine::{enumerate_halting, kraft_sum, prefix_violations};
use sumtest_lab::numerics::{bits, BitString, Dyadic, Rational};
use sumtest_lab::semimeasure::{lemma1_finite, omega_trace, StagedSemimeasure};
use sumtest_lab::sumtests::{
    adversary_build, dominate_schedule, e_fg, e_fg_by_horizon, g_build, lemma_f_schedule,
    sumtest_stage_check, u_h_batch, upperbound_trace, v_value, EfgParams, Schedule, SurvivorTrace,
    TestApprox,
};
use sumtest_lab::verify::verify_suite;
use sumtest_lab::{Lab, LabConfig};

use common::{bs, Masses};

type Outcome = Result<String, String>;

/// Name, check, and optional runtime limit.
type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn q(m: u64, s: u64) -> Dyadic {
    Dyadic::new(m.into(), s)
}

fn all_bits_up_to(n: usize) -> Vec<Vec<bool>> {
    BitString::all_up_to(n).map(|x| x.bits().to_vec()).collect()
}

fn lab(max_len: usize, horizon: u64) -> Lab {
    Lab::new(
        LabConfig::default()
            .with_max_len(max_len)
            .with_horizon(horizon),
    )
    .unwrap()
}

fn prefix_and_kraft() -> Outcome {
    let records = enumerate_halting(14, 1024, &BitString::new());
    let violations = prefix_violations(&records);
    ensure(violations.is_empty(), || {
        format!("prefix violations {:?}", &violations[..1])
    })?;
    let kraft = kraft_sum(&records);
    ensure(kraft <= Dyadic::one(), || format!("Kraft sum {kraft} > 1"))?;

    let reference = common::domain(14, 1024, &[]);
    let theirs: BTreeSet<Vec<bool>> = reference.iter().map(|h| h.program.clone()).collect();
    let ours: BTreeSet<Vec<bool>> = records.iter().map(|r| r.program.bits().to_vec()).collect();
    ensure(ours == theirs, || "domain differs from brute force".into())?;

    let small = kraft_sum(&enumerate_halting(6, 1024, &BitString::new()));
    let brute: Dyadic = common::domain(6, 1024, &[])
        .iter()
        .map(|h| Dyadic::pow2_neg(h.program.len() as u64))
        .sum();
    ensure(small == q(13, 6) && brute == small, || {
        format!("Kraft at max_len 6: {small}, brute force {brute}")
    })?;
    Ok(format!(
        "{} programs, Kraft {kraft}, max_len 6 gives {small}",
        records.len()
    ))
}

fn stage_monotonicity() -> Outcome {
    let lab = lab(16, 64);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let plain = Masses::new(&common::domain(16, 1 << 20, &[]));
    let mut conds = std::collections::HashMap::new();
    for _ in 0..200 {
        let x = BitString::from_bits((0..rng.gen_range(0..=6)).map(|_| rng.gen()).collect());
        let y = BitString::from_bits((0..rng.gen_range(0..=6)).map(|_| rng.gen()).collect());
        let t = rng.gen_range(0..64u64);
        let s = rng.gen_range(1..=12u64);
        for (a, b, what) in [
            (lab.m_stage(&x, t), lab.m_stage(&x, t + 1), "m_stage"),
            (
                lab.m_cond_stage(&x, s, t),
                lab.m_cond_stage(&x, s, t + 1),
                "m_cond_stage",
            ),
            (
                lab.product_stage(&x, &y, t),
                lab.product_stage(&x, &y, t + 1),
                "product_stage",
            ),
        ] {
            ensure(a <= b, || format!("{what}({x}, {t}) = {a} > {b} at t+1"))?;
        }
        ensure(lab.m_stage(&x, t) == plain.mix(x.bits(), t), || {
            format!("m_stage({x}, {t}) disagrees with brute force")
        })?;
        let cond = conds.entry(s).or_insert_with(|| {
            let c = common::numeral(s);
            assert_eq!(bs(&c), lab.numeral(s));
            Masses::new(&common::domain(16, 1 << 20, &c))
        });
        ensure(lab.m_cond_stage(&x, s, t) == cond.mix(x.bits(), t), || {
            format!("m_cond_stage({x}, {s}, {t}) disagrees with brute force")
        })?;
    }
    let (a, b) = (lab.m_stage(&bits(""), 3), lab.m_stage(&bits("1"), 5));
    ensure(a == q(5, 4) && b == q(5, 6), || {
        format!("pinned masses {a}, {b}")
    })?;
    ensure(plain.mix(&[], 3) == a && plain.mix(&[true], 5) == b, || {
        "pinned masses disagree with brute force".into()
    })?;
    Ok(
        "200 samples nondecreasing and equal to brute force; m(\"\",3) = 5/16, m(\"1\",5) = 5/64"
            .into(),
    )
}

fn omega_trace_values() -> Outcome {
    let lab = lab(16, 256);
    let trace = omega_trace(&lab, 256);
    let om = |t: u64| trace.omega(t).unwrap().clone();
    ensure(
        om(0) == q(1, 2) && om(2) == q(7, 4) && om(3) == q(17, 5),
        || format!("Omega_0,2,3 = {}, {}, {}", om(0), om(2), om(3)),
    )?;
    ensure(trace.k(3) == Some(1), || format!("k_3 = {:?}", trace.k(3)))?;
    let plain = Masses::new(&common::domain(16, 1 << 20, &[]));
    let mut prev = Dyadic::zero();
    for t in 0..=256 {
        let o = om(t);
        ensure(o <= Dyadic::one() && o >= prev, || {
            format!("Omega_{t} = {o} after {prev}")
        })?;
        if t <= 40 {
            ensure(o == plain.omega(t), || {
                format!("Omega_{t} disagrees with brute force")
            })?;
        }
        ensure(trace.k(t) == common::leftmost_diff(&prev, &o), || {
            format!("k_{t} = {:?} disagrees with bitwise comparison", trace.k(t))
        })?;
        prev = o;
    }
    Ok(format!(
        "Omega_0 = 1/4, Omega_2 = 7/16, Omega_3 = 17/32, k_3 = 1; Omega_256 = {}",
        om(256)
    ))
}

fn lemma_one() -> Outcome {
    let lab = lab(16, 256);
    let trace = omega_trace(&lab, 256);
    let rows = lemma1_finite(&lab, &trace, 8);
    ensure(!rows.is_empty(), || "no k with t_k defined".into())?;
    let plain = Masses::new(&common::domain(16, 1 << 20, &[]));
    let xs = all_bits_up_to(8);
    for r in &rows {
        let dense: Dyadic = xs
            .iter()
            .filter(|x| plain.mix(x, 256) >= plain.mix(x, r.t_k).shl(1))
            .map(|x| plain.mix(x, 256))
            .sum();
        ensure(dense == r.sum, || {
            format!("k = {}: sparse {} dense {dense}", r.k, r.sum)
        })?;
        ensure(r.holds && r.sum <= Dyadic::pow2(1).shr(r.k), || {
            format!("k = {}: {} > {}", r.k, r.sum, r.bound)
        })?;
    }
    Ok(format!("{} values of k, all within 2^(1-k)", rows.len()))
}

fn stage_inequality() -> Outcome {
    let lab = lab(16, 64);
    let hs = ["s", "2*s", "s^2", "s+n"];
    for p in [StagedSemimeasure::MachineMix, StagedSemimeasure::Product] {
        let support = p.stage_support(6);
        for h in hs {
            let test = TestApprox::Uh {
                p: p.clone(),
                h: Schedule::expr(h).unwrap(),
            };
            let check =
                sumtest_stage_check(&lab, &p, &test, 32, &support).map_err(|e| e.to_string())?;
            ensure(check.pass, || {
                let bad = check.rows.iter().find(|r| !r.pass).unwrap();
                format!("{} h = {h}: s = {} sum {}", p.name(), bad.s, bad.sum)
            })?;
        }
    }
    let mix = StagedSemimeasure::MachineMix;
    let probes: Vec<BitString> = BitString::all_up_to(6).collect();
    let mut us = Vec::new();
    for name in hs {
        let h = Schedule::expr(name).unwrap();
        let test = TestApprox::Uh {
            p: mix.clone(),
            h: h.clone(),
        };
        let by_s = test
            .values_by_horizon(&lab, &probes, 32)
            .map_err(|e| e.to_string())?;
        for w in by_s.windows(2) {
            ensure(w[0].iter().zip(&w[1]).all(|(a, b)| b <= a), || {
                format!("u_h not antitone for {name}")
            })?;
        }
        us.push((name, h, by_s.last().unwrap().clone()));
    }
    let mut ordered = 0;
    let points: Vec<(&BitString, u64)> = probes
        .iter()
        .flat_map(|x| (1..=32).map(move |s| (x, s)))
        .collect();
    for (na, ha, ua) in &us {
        for (nb, hb, ub) in &us {
            if ha.le_on(hb, points.iter().copied()) {
                ordered += 1;
                ensure(ua.iter().zip(ub).all(|(a, b)| a <= b), || {
                    format!("u_h not monotone: {na} <= {nb}")
                })?;
            }
        }
    }
    Ok(format!(
        "8 (h, P) pairs pass at S = 32; antitone; {ordered} ordered schedule pairs monotone"
    ))
}

fn domination() -> Outcome {
    let lab = lab(16, 512);
    let probes: Vec<BitString> = BitString::all_up_to(5).collect();
    let mix = StagedSemimeasure::MachineMix;
    let c = Rational::from_integer(4);
    let d = dominate_schedule(
        &lab,
        &TestApprox::Constant(Rational::one()),
        &mix,
        &c,
        512,
        &probes,
    )
    .map_err(|e| e.to_string())?;
    ensure(d.failures.is_empty(), || {
        format!("{} entries unmet", d.failures.len())
    })?;
    ensure(d.verified == Some(true), || {
        "domination not verified".into()
    })?;
    for x in &probes {
        for s in 1..=512 {
            let stage = d.table.eval(x, s);
            ensure(stage <= 512, || format!("h({x}, {s}) = {stage} beyond S"))?;
        }
    }
    let us = u_h_batch(&lab, &probes, &mix, &d.table, 512).map_err(|e| e.to_string())?;
    for (x, u) in probes.iter().zip(&us) {
        ensure(Rational::one() <= &c * u, || {
            format!("1 > 4 u_h({x}) = 4 * {u}")
        })?;
    }
    Ok(format!(
        "{} probes, max wait stage {}",
        probes.len(),
        d.max_stage
    ))
}

fn efg_semantics() -> Outcome {
    let lab = lab(16, 64);
    let mut checked = 0;
    for beta in [0, 1] {
        let params = EfgParams {
            f: Schedule::expr("s").unwrap(),
            g: Schedule::expr("2*s").unwrap(),
            alpha: 1,
            beta,
        };
        for n in 3..=8 {
            let v = v_value(n as u64, 1);
            for x in BitString::all_of_len(n) {
                let by_t = e_fg_by_horizon(&lab, &params, &x, 64);
                ensure(
                    by_t.iter().all(|e| *e == v || *e == Rational::one()),
                    || format!("e({x}) outside {{1, V}}"),
                )?;
                ensure(by_t.windows(2).all(|w| w[1] <= w[0]), || {
                    format!("e({x}) not antitone")
                })?;
                checked += 1;
            }
        }
    }
    let long = BitString::repeat(false, 1024);
    let s = Schedule::expr("s").unwrap();
    let clamp = e_fg(&lab, &long, &s, &s, 64, 5, 1);
    ensure(
        v_value(1024, 5) == Rational::one() && clamp == Rational::one(),
        || format!("clamp at n = 1024 gives {clamp}"),
    )?;
    Ok(format!(
        "{checked} strings over T <= 64; n = 1024, alpha = 5 clamps to 1"
    ))
}

/// Removal rules replayed over every string of length `n`, from scratch.
fn replay(
    lab: &Lab,
    n: usize,
    beta: u32,
    f: &Schedule,
    horizon: u64,
) -> (Vec<u64>, Vec<Vec<bool>>, usize) {
    let log_n = (n as f64).log2();
    let t_list: Vec<u64> = (1..=horizon)
        .filter(|&t| {
            let num = lab.numeral(t);
            let m = lab.m_stage(&num, f.eval(&num, t));
            // exact: m n > beta log n with n a power of two or beta = 0
            Rational::from_dyadic(&m * &Dyadic::from_u64(n as u64))
                > Rational::from_integer(beta as u64 * log_n as u64)
        })
        .collect();
    let mut list: Vec<Vec<bool>> = (0u64..1 << n)
        .map(|c| (0..n).rev().map(|i| c >> i & 1 == 1).collect())
        .collect();
    let mut removed = 0;
    for (i, &t) in (1u32..).zip(&t_list) {
        let need = BigUint::from(n).pow(beta * i);
        list.retain(|x| {
            let m = lab.m_stage(&bs(x), t);
            let keep = BigUint::from(2u32).pow(n as u32) * m.mantissa()
                < need.clone() << m.scale() as usize;
            removed += usize::from(!keep);
            keep
        });
    }
    (t_list, list, removed)
}

fn check_adversary(
    lab: &Lab,
    trace: &SurvivorTrace,
    f: &Schedule,
    horizon: u64,
) -> Result<String, String> {
    let (t_list, list, removed) = replay(lab, trace.n, trace.beta, f, horizon);
    ensure(t_list == trace.t_list, || {
        "stage list differs from replay".into()
    })?;
    ensure(removed == trace.removed_total, || {
        format!("replay removed {removed}")
    })?;
    ensure(
        list.first().map(|x| bs(x)) == Some(trace.survivor.clone()),
        || {
            format!(
                "replay survivor {:?} vs {}",
                list.first().map(|x| bs(x)),
                trace.survivor
            )
        },
    )?;
    let census = BigUint::from(removed) << trace.n.ilog2() as usize;
    ensure(census < BigUint::from(1u32) << (trace.n + 1), || {
        format!("census {removed}")
    })?;
    let g = g_build(lab, trace, None, horizon).map_err(|e| e.to_string())?;
    ensure(
        g.failures.is_empty() && g.steps.iter().all(|s| s.constraint_ok),
        || {
            format!(
                "g constraint unmet at {:?}",
                g.failures.first().map(|f| f.i)
            )
        },
    )?;
    let slack: Vec<String> = g
        .steps
        .iter()
        .take(4)
        .map(|s| format!("i={} {:.1}", s.i, s.excess))
        .collect();
    Ok(format!(
        "n = {}: {} stages, {removed} removed, survivor {}, c = {}, slack [{}]",
        trace.n,
        t_list.len(),
        trace.survivor,
        g.c,
        slack.join(", ")
    ))
}

fn adversary() -> Outcome {
    let long = Lab::new(LabConfig {
        alpha: 1,
        beta: 1,
        ..LabConfig::default().with_horizon(4096)
    })
    .unwrap();
    let f = lemma_f_schedule(&long, &omega_trace(&long, 4096));
    let trace = adversary_build(&long, 16, &f, 4096, 1, None).map_err(|e| e.to_string())?;
    ensure(trace.census_ok && trace.census_applies, || {
        "census bound fails".into()
    })?;
    let main = check_adversary(&long, &trace, &f, 4096)?;
    // a run where removals happen: beta = 0 and programs long enough to
    // print length-20 strings with mass above 2^-20
    let wide = lab(19, 64);
    let f = Schedule::expr("s").unwrap();
    let trace = adversary_build(&wide, 20, &f, 64, 0, None).map_err(|e| e.to_string())?;
    ensure(trace.removed_total > 0, || {
        "supplementary run removed nothing".into()
    })?;
    let extra = check_adversary(&wide, &trace, &f, 64)?;
    Ok(format!("{main}; beta = 0, {extra}"))
}

fn upper_trace() -> Outcome {
    let lab = lab(16, 4096);
    let tr = upperbound_trace(
        &lab,
        &Schedule::expr("2*s").unwrap(),
        &Rational::from_integer(4),
        4,
        4096,
    )
    .map_err(|e| e.to_string())?;
    let last_i = tr.stages.len() as u64 - 1;
    for p in &tr.probes {
        let first = (p.x.len() as u64).max(2);
        let rows = tr.rows.iter().filter(|r| r.x == p.x).count() as u64;
        ensure(rows == last_i.saturating_sub(first) + 1, || {
            format!("{} has {rows} rows", p.x)
        })?;
        ensure(p.telescoping_ok, || {
            format!("telescoping fails for {}", p.x)
        })?;
        ensure(
            p.doubling_ok && p.doublings <= 2 * p.x.len() as u64 + 2,
            || format!("{} doubled {} times", p.x, p.doublings),
        )?;
    }
    let bad = tr.rows.iter().find(|r| !r.holds);
    ensure(bad.is_none(), || {
        format!("disjunction fails at {:?}", bad.map(|r| (&r.x, r.i)))
    })?;
    Ok(format!(
        "stages {:?}, {} rows, {} doubled",
        tr.stages,
        tr.rows.len(),
        tr.rows.iter().filter(|r| r.doubled).count()
    ))
}

fn determinism() -> Outcome {
    let config = LabConfig::default().with_max_len(14).with_horizon(64);
    let render = |cfg: LabConfig| {
        let r = verify_suite(&Lab::new(cfg).unwrap());
        (r.passed(), r.summary_json(), r.tables)
    };
    let one = render(config.clone().with_workers(1));
    let eight = render(config.clone().with_workers(8));
    ensure(one.0, || "verify suite fails".into())?;
    ensure(one == eight, || "1 and 8 workers differ".into())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cache = Some(dir.path().join("rpm.cache"));
    let cold = render(config.clone().with_cache(cache.clone()));
    let warm = render(config.with_cache(cache));
    ensure(cold == one && warm == cold, || {
        "cache state changes the report".into()
    })?;
    Ok(format!(
        "{} bytes of summary identical across workers and cache states",
        one.1.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "prefix-freeness and Kraft",
            prefix_and_kraft,
            Some(Duration::from_secs(60)),
        ),
        ("stage monotonicity", stage_monotonicity, None),
        ("Omega trace", omega_trace_values, None),
        (
            "doubling mass after t_k",
            lemma_one,
            Some(Duration::from_secs(300)),
        ),
        ("stage sumtest inequality", stage_inequality, None),
        ("domination schedule", domination, None),
        ("e_fg semantics", efg_semantics, None),
        ("adversarial survivor and g", adversary, None),
        ("upper-bound trace", upper_trace, None),
        ("determinism", determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if took > limit => Err(format!("took {took:?}, limit {limit:?}")),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += usize::from(outcome.is_err());
        println!(
            "{tag} {:>2} {name} ({:.2}s): {detail}",
            i + 1,
            took.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
