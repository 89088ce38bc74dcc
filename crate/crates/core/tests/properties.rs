mod common;

use std::sync::OnceLock;

use num_bigint::BigUint;
use proptest::prelude::*;

use sumtest_lab::machine::{
    enumerate_halting, enumerate_with, kraft_sum, prefix_violations, run, RunOutcome,
};
use sumtest_lab::numerics::{leftmost_diff_bit, rational_sum, BitString, Dyadic, Rational};
use sumtest_lab::semimeasure::StagedSemimeasure;
use sumtest_lab::sumtests::{e_fg_by_horizon, v_value, EfgParams, Expr, Schedule, TestApprox};
use sumtest_lab::{Lab, LabConfig};

fn lab() -> &'static Lab {
    static LAB: OnceLock<Lab> = OnceLock::new();
    LAB.get_or_init(|| Lab::new(LabConfig::default().with_max_len(14)).unwrap())
}

fn arb_bits(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..=max).prop_map(BitString::from_bits)
}

fn arb_unit_dyadic() -> impl Strategy<Value = Dyadic> {
    (0u64..=48).prop_flat_map(|scale| {
        (0u64..(1u64 << scale)).prop_map(move |m| Dyadic::new(BigUint::from(m), scale))
    })
}

fn arb_rational() -> impl Strategy<Value = Rational> {
    (0u64..10_000, 1u64..10_000).prop_map(|(p, q)| Rational::from_u64_ratio(p, q))
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u64..20).prop_map(Expr::Const),
        Just(Expr::N),
        Just(Expr::S),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| Expr::Pow(Box::new(a), k)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Min(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Max(Box::new(a), Box::new(b))),
        ]
    })
}

proptest! {
    #[test]
    fn diff_bit_none_iff_equal(a in arb_unit_dyadic(), b in arb_unit_dyadic(), same in any::<bool>()) {
        let b = if same { a.clone() } else { b };
        let k = leftmost_diff_bit(&a, &b).unwrap();
        prop_assert_eq!(k.is_none(), a == b);
        prop_assert_eq!(k, common::leftmost_diff(&a, &b));
    }

    #[test]
    fn sum_is_permutation_invariant(
        (terms, shuffled) in prop::collection::vec(arb_rational(), 0..40)
            .prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle()))
    ) {
        prop_assert_eq!(rational_sum(&terms), rational_sum(&shuffled));
    }

    #[test]
    fn text_forms_round_trip(d in arb_unit_dyadic(), r in arb_rational(), x in arb_bits(40)) {
        prop_assert_eq!(d.to_string().parse::<Dyadic>().unwrap(), d);
        prop_assert_eq!(r.to_string().parse::<Rational>().unwrap(), r);
        prop_assert_eq!(x.to_string().parse::<BitString>().unwrap(), x);
    }

    #[test]
    fn interpreter_matches_reference(p in arb_bits(24), c in arb_bits(6), budget in 0u64..200) {
        let expected = common::run(p.bits(), c.bits(), budget);
        let got = match run(&p, &c, budget) {
            RunOutcome::Halted { output, consumed, steps } if consumed == p.len() => {
                Some((output.bits().to_vec(), steps))
            }
            _ => None,
        };
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn halting_is_stable_under_more_budget(p in arb_bits(24), c in arb_bits(6), budget in 0u64..200, extra in 1u64..1000) {
        let first = run(&p, &c, budget);
        if matches!(first, RunOutcome::Halted { .. }) {
            prop_assert_eq!(run(&p, &c, budget + extra), first);
        }
    }

    #[test]
    fn schedule_text_round_trips(e in arb_expr(), x in arb_bits(8), s in 0u64..50) {
        let back: Expr = e.to_string().parse().unwrap();
        prop_assert_eq!(back.eval(x.len() as u64, s), e.eval(x.len() as u64, s));
        let sched = Schedule::Expr(e);
        prop_assert_eq!(Schedule::parse(&sched.to_text()).unwrap().eval(&x, s), sched.eval(&x, s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn domains_are_prefix_free(c in arb_bits(5), max_len in 0usize..=12, budget in 1u64..400) {
        let records = enumerate_halting(max_len, budget, &c);
        prop_assert!(prefix_violations(&records).is_empty());
        prop_assert!(kraft_sum(&records) <= Dyadic::one());
    }

    #[test]
    fn partitioned_enumeration_is_identical(c in arb_bits(5), max_len in 0usize..=13, workers in 2usize..6) {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        let serial = enumerate_with(max_len, 1 << 12, &c, None);
        prop_assert_eq!(enumerate_with(max_len, 1 << 12, &c, Some(&pool)), serial);
    }

    #[test]
    fn stage_masses_are_monotone(x in arb_bits(6), y in arb_bits(4), s in 0u64..16, t in 0u64..40) {
        let lab = lab();
        prop_assert!(lab.m_stage(&x, t) <= lab.m_stage(&x, t + 1));
        prop_assert!(lab.m_cond_stage(&x, s, t) <= lab.m_cond_stage(&x, s, t + 1));
        prop_assert!(lab.product_stage(&x, &y, t) <= lab.product_stage(&x, &y, t + 1));
    }

    #[test]
    fn uh_is_antitone_and_below_each_term(x in arb_bits(4), k in 0u64..3) {
        let lab = lab();
        let h = Schedule::Expr(Expr::Add(Box::new(Expr::S), Box::new(Expr::Const(k))));
        let test = TestApprox::Uh { p: StagedSemimeasure::MachineMix, h: h.clone() };
        let by_s = test.values_by_horizon(lab, std::slice::from_ref(&x), 16).unwrap();
        for w in by_s.windows(2) {
            prop_assert!(w[1][0] <= w[0][0]);
        }
        for s in 1..=16 {
            let term = Rational::new(lab.m_cond_stage(&x, s, h.eval(&x, s)), lab.m_stage(&x, s)).unwrap();
            prop_assert!(by_s[by_s.len() - 1][0] <= term);
        }
    }

    #[test]
    fn efg_takes_two_values_and_never_recovers(x in arb_bits(7), beta in 0u32..2) {
        prop_assume!(x.len() >= 3);
        let params = EfgParams {
            f: Schedule::expr("s").unwrap(),
            g: Schedule::expr("s+3").unwrap(),
            alpha: 1,
            beta,
        };
        let v = v_value(x.len() as u64, 1);
        let by_t = e_fg_by_horizon(lab(), &params, &x, 40);
        let first_one = by_t.iter().position(|e| *e == Rational::one());
        for (t, e) in by_t.iter().enumerate() {
            prop_assert!(*e == v || *e == Rational::one());
            if first_one.is_some_and(|f| t >= f) {
                prop_assert_eq!(e, &Rational::one());
            }
        }
    }
}
