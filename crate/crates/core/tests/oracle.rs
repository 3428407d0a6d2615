use std::collections::BTreeMap;

use num_traits::{One, Zero};
use penwalk::exact::{half_pow, int, rat};
use penwalk::oracle::{
    absorbed_law, dp_joint_law, enumerate_expect, enumerate_law, penalized_expectation, penalized_ratio,
    penalty_normalizer, ruin_probability, AbsorbedSpec, ENUM_CAP,
};
use penwalk::{Error, EventSpec, Field, MartingaleFamily, PenaltyFunctional, PenaltyWeight, Rational, Step, WalkState};
use proptest::prelude::*;

const ALL_FIELDS: [Field; 10] =
    [Field::N, Field::X, Field::S, Field::I, Field::SStar, Field::SG, Field::SStarG, Field::Gamma, Field::G, Field::R];

fn indicator(b: bool) -> Rational {
    if b {
        Rational::one()
    } else {
        Rational::zero()
    }
}

#[test]
fn enumeration_examples() {
    let max_is = |k: i64| move |p: &penwalk::Path| indicator(WalkState::from_path(p).s == k);
    assert_eq!(enumerate_expect(2, 0, max_is(0)).unwrap(), rat(1, 2));
    assert_eq!(enumerate_expect(2, 0, max_is(1)).unwrap(), rat(1, 4));
    assert_eq!(enumerate_expect(0, 5, |p| int(p.end())).unwrap(), int(5));
    assert!(matches!(enumerate_expect(ENUM_CAP + 1, 0, |_| Rational::one()), Err(Error::HorizonTooLarge { .. })));
}

#[test]
fn dp_examples() {
    let d = dp_joint_law(2, 0, &[Field::S]).unwrap();
    assert_eq!(d.get(&[0]), rat(1, 2));
    assert_eq!(d.get(&[1]), rat(1, 4));
    assert_eq!(d.get(&[2]), rat(1, 4));
    let d = dp_joint_law(1, 0, &[Field::X]).unwrap();
    assert_eq!(d.get(&[-1]), rat(1, 2));
    assert_eq!(d.get(&[1]), rat(1, 2));

    let d = dp_joint_law(16, 0, &[Field::S, Field::X]).unwrap().marginal(1);
    let e = enumerate_law(16, 0, &[Field::X]).unwrap();
    assert_eq!(d, e);
    for k in -16..=16i64 {
        let expected = if (k + 16) % 2 == 0 {
            Rational::from_integer(penwalk::exact::binomial(16, (k + 16) / 2).into()) * half_pow(16)
        } else {
            Rational::zero()
        };
        assert_eq!(d.get(&[k]), expected);
    }
}

#[test]
fn dp_matches_enumeration_for_every_single_field() {
    for p in 0..=12u32 {
        for start in [-1i64, 0, 2] {
            for f in ALL_FIELDS {
                let dp = dp_joint_law(p, start, &[f]).unwrap();
                let en = enumerate_law(p, start, &[f]).unwrap();
                assert_eq!(dp, en, "p={p} start={start} field={}", f.name());
            }
        }
    }
}

#[test]
fn dp_matches_enumeration_for_joint_projections() {
    let projections: [&[Field]; 6] = [
        &[Field::S, Field::X],
        &[Field::S, Field::I, Field::X],
        &[Field::SG, Field::Gamma],
        &[Field::SStarG, Field::SStar, Field::X],
        &[Field::G, Field::R],
        &ALL_FIELDS,
    ];
    for p in 0..=12u32 {
        for proj in projections {
            assert_eq!(dp_joint_law(p, 0, proj).unwrap(), enumerate_law(p, 0, proj).unwrap(), "p={p}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn dp_matches_enumeration_sampled(p in 13u32..=20, start in -2i64..=2, mask in 1u16..1024) {
        let proj: Vec<Field> = ALL_FIELDS.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, f)| *f).collect();
        prop_assert_eq!(dp_joint_law(p, start, &proj).unwrap(), enumerate_law(p, start, &proj).unwrap());
    }
}

#[test]
fn laws_carry_unit_mass() {
    for p in [0u32, 5, 17, 40] {
        let d = dp_joint_law(p, 0, &[Field::S, Field::SG]).unwrap();
        assert!(d.is_consistent());
        assert_eq!(d.total() + &d.residual, Rational::one());
    }
    for spec in [
        AbsorbedSpec::TauMax { a: 3, k: 10 },
        AbsorbedSpec::TauBilateralMax { a: 3, k: 10 },
        AbsorbedSpec::GammaAtHit { c: 2, m: 10 },
        AbsorbedSpec::PreMaxAtHit { p: 4 },
        AbsorbedSpec::FirstPassageMax { start: 2, k: 10 },
        AbsorbedSpec::NextZeroMax { x: 2, s: 3, k: 10 },
        AbsorbedSpec::NextZeroBilateralMax { x: -2, s_star: 3, k: 10 },
    ] {
        let d = absorbed_law(&spec).unwrap();
        assert!(d.is_consistent(), "{spec:?}");
        assert_eq!(d.total() + &d.residual, Rational::one(), "{spec:?}");
    }
}

#[test]
fn ruin_is_a_over_k() {
    assert_eq!(ruin_probability(1, 2).unwrap(), rat(1, 2));
    assert_eq!(ruin_probability(3, 7).unwrap(), rat(3, 7));
    assert_eq!(ruin_probability(4, 4).unwrap(), Rational::one());
    for k in 1..=50 {
        for a in 1..=k {
            assert_eq!(ruin_probability(a, k).unwrap(), rat(a, k));
        }
    }
}

#[test]
fn absorbed_examples() {
    let d = absorbed_law(&AbsorbedSpec::TauMax { a: 2, k: 5 }).unwrap();
    assert_eq!(d.get(&[0]), rat(1, 2));
    assert_eq!(d.get(&[1]), rat(1, 4));
    let d = absorbed_law(&AbsorbedSpec::GammaAtHit { c: 1, m: 8 }).unwrap();
    for m in 1..=8 {
        assert_eq!(d.get(&[m]), half_pow(m as u32));
    }
    let d = absorbed_law(&AbsorbedSpec::TauBilateralMax { a: 3, k: 5 }).unwrap();
    assert_eq!(d.get(&[1]), rat(1, 4));
    let d = absorbed_law(&AbsorbedSpec::PreMaxAtHit { p: 4 }).unwrap();
    for k in 0..4 {
        assert_eq!(d.get(&[k]), rat(1, 4));
    }
}

fn functionals(w: &PenaltyWeight) -> Vec<PenaltyFunctional> {
    vec![
        PenaltyFunctional::MaxWeight(w.clone()),
        PenaltyFunctional::LastZeroMaxWeight(w.clone()),
        PenaltyFunctional::NextZeroMaxWeight(w.clone()),
        PenaltyFunctional::BilateralLastZeroWeight(w.clone()),
        PenaltyFunctional::BilateralIndicator(3),
        PenaltyFunctional::CorridorIndicator(2, 3),
    ]
}

#[test]
fn ratio_of_the_sure_event_is_one() {
    let w = PenaltyWeight::uniform(0, 3).unwrap();
    for g in functionals(&w) {
        for p in [1u32, 6, 15] {
            for n in [0, 1, p.min(4)] {
                assert_eq!(penalized_ratio(n, &EventSpec::All, &g, p).unwrap(), Rational::one(), "{} p={p}", g.name());
            }
        }
    }
}

#[test]
fn degenerate_denominator() {
    let err = penalized_ratio(1, &EventSpec::All, &PenaltyFunctional::CorridorIndicator(1, 1), 2).unwrap_err();
    assert!(matches!(err, Error::DegenerateDenominator));
}

#[test]
fn penalised_expectation_matches_enumeration() {
    let w = PenaltyWeight::uniform(0, 3).unwrap();
    let ev = EventSpec::parse("x >= 0 & s <= 2").unwrap();
    for g in functionals(&w) {
        if matches!(g, PenaltyFunctional::NextZeroMaxWeight(_)) {
            continue;
        }
        for p in [4u32, 9, 14] {
            let n = 3;
            let oracle = enumerate_expect(p, 0, |path| {
                let head = penwalk::Path::from_steps(0, path.steps[..n as usize].iter().copied());
                if ev.holds(&head.steps, &WalkState::from_path(&head)) {
                    g.value(&WalkState::from_path(path)).unwrap()
                } else {
                    Rational::zero()
                }
            })
            .unwrap();
            assert_eq!(penalized_expectation(n, &ev, &g, p).unwrap(), oracle, "{} p={p}", g.name());
        }
    }
}

#[test]
fn max_weight_ratio_approaches_the_martingale() {
    let w = PenaltyWeight::uniform(0, 3).unwrap();
    let g = PenaltyFunctional::MaxWeight(w.clone());
    let fam = MartingaleFamily::OneSidedMax(w);
    let ev = EventSpec::prefix(&[Step::Up]);
    let limit = fam.evaluate(&WalkState::initial(0).step(Step::Up)).unwrap().exact().unwrap().clone() * rat(1, 2);
    let mut last = Rational::zero();
    for p in (10..=24u32).step_by(2) {
        let scaled = penalized_expectation(1, &ev, &g, p).unwrap() / penalty_normalizer(&g, p - 1);
        assert!(scaled <= limit, "p={p}");
        assert!(scaled >= last, "p={p}");
        last = scaled;
    }
    let ratio = penalized_ratio(1, &ev, &g, 24).unwrap();
    assert!((penwalk::exact::to_f64(&ratio) - penwalk::exact::to_f64(&limit)).abs() < 0.05);
}

#[test]
fn exact_dist_serialisation() {
    let d = dp_joint_law(2, 0, &[Field::S, Field::X]).unwrap();
    let json = d.to_json();
    assert_eq!(json["entries"]["0,-2"], "1/4");
    assert_eq!(json["residual"], "0/1");
    let csv = d.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,x,numerator,denominator"));
    let rows: BTreeMap<&str, ()> = lines.map(|l| (l, ())).collect();
    assert!(rows.contains_key("1,0,1,4"));
}
