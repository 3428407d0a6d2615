use std::collections::BTreeMap;

use num_traits::{One, Zero};
use penwalk::exact::{half_pow, rat, to_f64};
use penwalk::martingales::{q_event_mass, q_hit_level_mass, verify_martingale, StoppingRule, VerifyRow};
use penwalk::qsim::bessel3_step_probs;
use penwalk::{Error, MartingaleFamily, MartingaleValue, PenaltyWeight, Rational, Step, WalkState};

fn weights() -> Vec<PenaltyWeight> {
    vec![
        PenaltyWeight::uniform(0, 3).unwrap(),
        PenaltyWeight::point(2),
        PenaltyWeight::truncated_geometric(rat(1, 2), 12).unwrap(),
    ]
}

fn weighted(w: &PenaltyWeight) -> [MartingaleFamily; 4] {
    [
        MartingaleFamily::OneSidedMax(w.clone()),
        MartingaleFamily::LastZeroMax(w.clone()),
        MartingaleFamily::NextZeroMax(w.clone()),
        MartingaleFamily::BilateralLastZero(w.clone()),
    ]
}

fn for_each_path(depth: u32, start: i64, mut visit: impl FnMut(&[Step], &WalkState)) {
    for bits in 0u32..1 << depth {
        let steps: Vec<Step> = (0..depth).map(|i| if bits >> i & 1 == 1 { Step::Up } else { Step::Down }).collect();
        let path = penwalk::Path::from_steps(start, steps.iter().copied());
        visit(&steps, &WalkState::from_path(&path));
    }
}

fn exact(v: MartingaleValue) -> Rational {
    v.exact().expect("exact family").clone()
}

#[test]
fn unit_at_the_origin() {
    let origin = WalkState::initial(0);
    for w in weights() {
        for f in weighted(&w) {
            assert_eq!(exact(f.evaluate(&origin).unwrap()), Rational::one(), "{}", f.name());
            assert_eq!(exact(f.one_step_mean(&origin).unwrap()), Rational::one());
        }
    }
    for f in [MartingaleFamily::CorridorTrig { a: 2, b: 3 }, MartingaleFamily::BarrierIndicator { a: 4 }] {
        assert!((f.evaluate(&origin).unwrap().to_f64() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn evaluate_examples() {
    let w = PenaltyWeight::uniform(0, 3).unwrap();
    let up = WalkState::initial(0).step(Step::Up);
    assert_eq!(exact(MartingaleFamily::LastZeroMax(w).evaluate(&up).unwrap()), rat(7, 8));
    let two = WalkState::initial(0).step(Step::Up).step(Step::Down);
    let v = MartingaleFamily::CorridorTrig { a: 2, b: 2 }.evaluate(&two).unwrap().to_f64();
    assert!((v - 2.0).abs() < 1e-12);
}

#[test]
fn weighted_families_need_a_zero() {
    let w = PenaltyWeight::uniform(0, 3).unwrap();
    let off = WalkState::initial(2);
    assert_eq!(MartingaleFamily::LastZeroMax(w.clone()).evaluate(&off).unwrap_err(), Error::UndefinedLastZero);
    assert_eq!(MartingaleFamily::BilateralLastZero(w).evaluate(&off).unwrap_err(), Error::UndefinedLastZero);
}

#[test]
fn martingale_identity_to_depth_18() {
    for w in weights() {
        for f in weighted(&w) {
            let r = verify_martingale(&f, 18, false).unwrap();
            assert!(r.pass, "{}: {:?}", f.name(), r.worst_exact_diff);
            assert_eq!(r.worst_exact_diff.as_deref(), Some("0/1"));
        }
    }
    for a in 1..=5 {
        for b in 1..=5 {
            if a + b > 2 {
                assert!(verify_martingale(&MartingaleFamily::CorridorTrig { a, b }, 18, false).unwrap().pass);
            }
        }
        if a > 1 {
            assert!(verify_martingale(&MartingaleFamily::BarrierIndicator { a }, 18, false).unwrap().pass);
        }
    }
}

#[test]
fn next_zero_matches_one_sided_pointwise() {
    let w = PenaltyWeight::uniform(0, 3).unwrap();
    let (a, b) = (MartingaleFamily::NextZeroMax(w.clone()), MartingaleFamily::OneSidedMax(w));
    for_each_path(12, 0, |_, st| {
        assert_eq!(a.evaluate(st).unwrap(), b.evaluate(st).unwrap());
    });
}

#[test]
fn corridor_kernel_examples() {
    let f = MartingaleFamily::CorridorTrig { a: 2, b: 2 };
    let (u, d) = f.q_kernel(&WalkState::initial(0)).unwrap();
    assert!((u.to_f64() - 0.5).abs() < 1e-12 && (d.to_f64() - 0.5).abs() < 1e-12);
    let (u, d) = f.q_kernel(&WalkState::initial(0).step(Step::Up)).unwrap();
    assert!(u.to_f64().abs() < 1e-12 && (d.to_f64() - 1.0).abs() < 1e-12);
    let outside = WalkState::initial(0).step(Step::Up).step(Step::Up);
    assert!(matches!(f.q_kernel(&outside), Err(Error::AbsorbedKernel(_))));
}

/// `Q(R_{n+1} = r+1 | R_0..R_n)` from the path masses `2^{-n} M_n`.
fn r_chain_check(w: &PenaltyWeight, depth: u32) {
    let f = MartingaleFamily::OneSidedMax(w.clone());
    let mut by_history: BTreeMap<Vec<i64>, (Rational, Rational)> = BTreeMap::new();
    let mut paths: Vec<(Vec<i64>, Rational)> = Vec::new();
    for_each_path(depth, 0, |steps, st| {
        let mut s = WalkState::initial(0);
        let mut r = vec![s.r()];
        for step in steps {
            s = s.step(*step);
            r.push(s.r());
        }
        paths.push((r, exact(f.evaluate(st).unwrap()) * half_pow(depth)));
    });
    for (r, mass) in &paths {
        for n in 0..depth as usize {
            let e = by_history.entry(r[..=n].to_vec()).or_insert((Rational::zero(), Rational::zero()));
            e.0 += mass;
            if r[n + 1] > r[n] {
                e.1 += mass;
            }
        }
    }
    for (hist, (total, up)) in by_history {
        if total.is_zero() {
            continue;
        }
        let x = *hist.last().unwrap();
        let (p, _) = bessel3_step_probs(x).unwrap();
        let q = up / total;
        assert!((to_f64(&q) - p).abs() < 1e-12, "history {hist:?}: {q} vs {p}");
        assert_eq!(q, rat(x + 2, 2 * x + 2), "history {hist:?}");
    }
}

#[test]
fn pitman_statistic_is_a_bessel_walk() {
    for w in [PenaltyWeight::uniform(0, 3).unwrap(), PenaltyWeight::point(4), PenaltyWeight::point(0)] {
        r_chain_check(&w, 10);
    }
    r_chain_check(&PenaltyWeight::geometric(rat(1, 3)).unwrap(), 8);
}

#[test]
fn stopped_values() {
    let w = PenaltyWeight::uniform(0, 3).unwrap();
    let lz = MartingaleFamily::LastZeroMax(w.clone());
    let bl = MartingaleFamily::BilateralLastZero(w.clone());
    assert_eq!(lz.stopped_value(StoppingRule::HitLevel { p: 5, pre_max: 2 }).unwrap(), rat(5, 8));
    assert_eq!(lz.stopped_value(StoppingRule::NextZero { max: 3 }).unwrap(), rat(1, 1));
    assert_eq!(bl.stopped_value(StoppingRule::BilateralHit { p: 2, pre_max: 1 }).unwrap(), rat(1, 1));
    assert!(matches!(
        MartingaleFamily::OneSidedMax(w).stopped_value(StoppingRule::NextZero { max: 1 }),
        Err(Error::UnsupportedStoppingRule(_))
    ));
}

#[test]
fn q_mass_of_an_infinite_maximum() {
    let w = PenaltyWeight::uniform(0, 3).unwrap();
    let f = MartingaleFamily::LastZeroMax(w.clone());
    for p in 4..=10 {
        assert_eq!(q_hit_level_mass(&f, p).unwrap(), rat(1, 2));
        assert_eq!(q_hit_level_mass(&f, p).unwrap(), penwalk::laws::q_max_tail(&w, p));
    }
    assert_eq!(q_hit_level_mass(&f, 1).unwrap(), penwalk::laws::q_max_tail(&w, 1));
}

#[test]
fn family_names_round_trip() {
    let w = PenaltyWeight::uniform(0, 3).unwrap();
    for f in weighted(&w)
        .into_iter()
        .chain([MartingaleFamily::CorridorTrig { a: 3, b: 2 }, MartingaleFamily::BarrierIndicator { a: 2 }])
    {
        let back = MartingaleFamily::parse(&f.name(), f.weight()).unwrap();
        assert_eq!(back, f);
    }
    assert!(MartingaleFamily::parse("corridor:1:1", None).is_err());
    assert!(MartingaleFamily::parse("last-zero-max", None).is_err());
}

#[test]
fn verify_rows_serialise() {
    let w = PenaltyWeight::point(1);
    let r = verify_martingale(&MartingaleFamily::LastZeroMax(w), 3, true).unwrap();
    assert_eq!(r.rows.len(), r.states_checked);
    let header_cols = VerifyRow::CSV_HEADER.split(',').count();
    for row in &r.rows {
        assert!(row.pass);
        assert!(row.to_csv().split(',').count() >= header_cols);
    }
}

#[test]
fn event_masses_under_q() {
    let w = PenaltyWeight::uniform(0, 3).unwrap();
    let all = penwalk::EventSpec::parse("all").unwrap();
    let up = penwalk::EventSpec::prefix(&[Step::Up]);
    for f in weighted(&w) {
        assert_eq!(exact(q_event_mass(&f, &all, 8).unwrap()), Rational::one(), "{}", f.name());
    }
    assert_eq!(exact(q_event_mass(&MartingaleFamily::LastZeroMax(w.clone()), &up, 5).unwrap()), rat(7, 16));
    assert_eq!(exact(q_event_mass(&MartingaleFamily::OneSidedMax(w), &up, 1).unwrap()), rat(3, 8));
    let corridor = q_event_mass(&MartingaleFamily::CorridorTrig { a: 3, b: 2 }, &all, 10).unwrap();
    assert!((corridor.to_f64() - 1.0).abs() < 1e-12);
}
