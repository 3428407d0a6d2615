use num_bigint::BigUint;
use num_traits::{One, Zero};
use penwalk::exact::{int, rat, to_f64};
use penwalk::laws::*;
use penwalk::oracle::{
    absorbed_law, dp_joint_law, enumerate_law, exit_time_law, first_passage_time_law, next_zero_expectation,
    penalized_ratio, AbsorbedSpec,
};
use penwalk::{EventSpec, Field, PenaltyFunctional, PenaltyWeight, Rational, Step, SupportFn};

fn uniform03() -> PenaltyWeight {
    PenaltyWeight::uniform(0, 3).unwrap()
}

#[test]
fn max_law_examples() {
    assert_eq!(srw_max_pmf(2, 0), rat(1, 2));
    assert_eq!(srw_max_pmf(0, 0), Rational::one());
    for n in 0..=20u32 {
        let d = enumerate_law(n, 0, &[Field::S]).unwrap();
        for k in 0..=i64::from(n) + 1 {
            assert_eq!(srw_max_pmf(n, k), d.get(&[k]), "n={n} k={k}");
        }
    }
    for n in (0..=28u32).step_by(2) {
        for k in (0..=i64::from(n)).step_by(2) {
            assert_eq!(srw_max_pmf(n, k) / srw_max_pmf(n, 0), max_ratio_product(n, k));
        }
    }
}

#[test]
fn joint_max_endpoint_examples() {
    assert_eq!(joint_max_endpoint_pmf(2, 1, 0).unwrap(), rat(1, 4));
    assert_eq!(joint_max_endpoint_pmf(1, 1, 1).unwrap(), rat(1, 2));
    assert_eq!(joint_max_endpoint_pmf(3, 1, 0).unwrap(), Rational::zero());
}

#[test]
fn first_passage_examples() {
    assert_eq!(first_passage_max_law(1, 1).unwrap(), rat(1, 2));
    assert_eq!(first_passage_max_law(2, 3).unwrap(), rat(1, 6));
    assert_eq!(first_passage_max_law(3, 2).unwrap(), Rational::zero());
    for a in 1..=6i64 {
        let partial: Rational = (a..=400).map(|k| first_passage_max_law(a, k).unwrap()).sum();
        assert_eq!(Rational::one() - partial, rat(a, 401));
    }
}

#[test]
fn next_zero_examples() {
    let w = uniform03();
    let psi = SupportFn::Weight(w.clone());
    for x in -3..=0 {
        assert_eq!(cond_next_zero_max(&psi, 0, x).unwrap(), w.phi(0));
    }
    for s in 1..=5 {
        assert_eq!(cond_next_zero_max(&psi, s, -2).unwrap(), w.phi(s));
    }
    assert_eq!(cond_next_zero_max(&psi, 2, 1).unwrap(), next_zero_expectation(&psi, 2, 1, false).unwrap());
    assert!(cond_next_zero_max(&psi, 1, 2).is_err());

    for s in 0..=4 {
        assert_eq!(bilateral_cond_next_zero(&psi, s, 0).unwrap(), w.phi(s));
    }
    for k in 1..=8u32 {
        let expected = rat(1, i64::from(k) * i64::from(k + 1));
        assert_eq!(bilateral_cond_next_zero(&SupportFn::Indicator(k), 1, 1).unwrap(), expected);
        assert_eq!(bilateral_cond_next_zero(&SupportFn::Indicator(k), 1, -1).unwrap(), expected);
    }
    assert_eq!(bilateral_cond_next_zero(&psi, 2, -1).unwrap(), next_zero_expectation(&psi, 2, -1, true).unwrap());
    assert!(bilateral_cond_next_zero(&psi, 1, -2).is_err());
}

#[test]
fn return_time_laws() {
    assert_eq!(tau_max_pmf(2, 0).unwrap(), rat(1, 2));
    assert_eq!(tau_max_pmf(2, 1).unwrap(), rat(1, 4));
    assert_eq!(tau_bimax_pmf(2, 1).unwrap(), rat(1, 2));
    for a in 2..=6 {
        assert_eq!(tau_bimax_pmf(a, 0).unwrap(), Rational::zero());
    }
    assert!(tau_bimax_pmf(1, 1).is_err());
    assert_eq!(gamma_hit_pmf(1, 1).unwrap(), rat(1, 2));
    assert_eq!(gamma_hit_pmf(2, 2).unwrap(), rat(3, 16));
}

#[test]
fn pre_max_is_uniform() {
    assert_eq!(uniform_pre_max_pmf(3, 1).unwrap(), rat(1, 3));
    assert_eq!(uniform_pre_max_pmf(3, 3).unwrap(), Rational::zero());
    for p in 1..=6u32 {
        let total: Rational = (0..i64::from(p)).map(|k| uniform_pre_max_pmf(p, k).unwrap()).sum();
        assert_eq!(total, Rational::one());
        let d = absorbed_law(&AbsorbedSpec::PreMaxAtHit { p }).unwrap();
        for k in 0..i64::from(p) {
            assert_eq!(d.get(&[k]), uniform_pre_max_pmf(p, k).unwrap(), "p={p} k={k}");
        }
    }
}

#[test]
fn corridor_examples() {
    assert_eq!(corridor_pmf(1, 2, 2, 1).unwrap(), rat(1, 2));
    assert_eq!(corridor_pmf(0, 3, 2, 0).unwrap(), Rational::one());
    assert!((corridor_pmf_trig(1, 2, 2, 1).unwrap() - 0.5).abs() <= 1e-12);
    for n in 0..=14u32 {
        for a in 1..=6u32 {
            for b in 1..=6u32 {
                for c in 1 - i64::from(b)..i64::from(a) {
                    let exact = to_f64(&corridor_pmf(n, a, b, c).unwrap());
                    let trig = corridor_pmf_trig(n, a, b, c).unwrap();
                    assert!((exact - trig).abs() <= 1e-10, "n={n} a={a} b={b} c={c}");
                }
            }
        }
    }
}

#[test]
fn corridor_survival_estimates() {
    for n in [50u32, 120, 200] {
        let a = corridor_survival_asym(n, 3, 3).unwrap();
        let b = corridor_survival_asym(n + 1, 3, 3).unwrap();
        assert!(a.value >= 0.0 && b.value >= 0.0);
    }
    let exact: Rational = (-2..=2).map(|c| corridor_pmf(200, 3, 3, c).unwrap()).sum();
    let ratio = to_f64(&exact) / corridor_survival_asym(200, 3, 3).unwrap().value;
    assert!((0.9..=1.1).contains(&ratio), "{ratio}");
    let est = corridor_survival_asym(2000, 4, 2).unwrap();
    let ratio = (corridor_survival_ln(2000, 4, 2).unwrap() - est.ln_value).exp();
    assert!((ratio - 1.0).abs() <= 0.02, "{ratio}");
}

#[test]
fn binomial_filter_examples() {
    let (left, right) = binomial_filter(4, 2, 0).unwrap();
    assert_eq!(left, BigUint::from(8u32));
    assert!((right - 8.0).abs() < 1e-9);
    let (left, right) = binomial_filter(5, 7, 3).unwrap();
    assert_eq!(left, BigUint::from(10u32));
    assert!((right - 10.0).abs() < 1e-9);
}

#[test]
fn cosh_pgf_against_exit_law() {
    for l in [0.0, 0.4, 1.3] {
        assert!((cosh_pgf(-1, 1, l).unwrap() - 1.0 / f64::cosh(l)).abs() < 1e-14);
    }
    assert!((cosh_pgf(-2, 3, 0.0).unwrap() - 1.0).abs() < 1e-14);
    let lambda: f64 = 0.3;
    let (law, alive) = exit_time_law(-2, 3, 600).unwrap();
    let series: f64 = law.iter().enumerate().map(|(i, p)| p * lambda.cosh().powi(-(i as i32 + 1))).sum();
    assert!(alive < 1e-12);
    assert!((series - cosh_pgf(-2, 3, lambda).unwrap()).abs() < 1e-12);
}

#[test]
fn geometric_time_pgf() {
    assert!((geometric_time_hit_pgf(1, 1e-12).unwrap() - 1.0).abs() < 1e-5);
    let (law, _) = first_passage_time_law(1, 200);
    let series: f64 = law.iter().enumerate().map(|(i, p)| p * 0.5f64.powi(i as i32 + 1)).sum();
    assert!((series - geometric_time_hit_pgf(1, 0.5).unwrap()).abs() < 1e-12);
    for beta in [0.1, 0.5, 0.9] {
        let one = geometric_time_hit_pgf(1, beta).unwrap();
        assert!((geometric_time_hit_pgf(2, beta).unwrap() - one * one).abs() < 1e-14);
    }
}

#[test]
fn bilateral_rate() {
    let one = bilateral_gzero_asym(1, 400).unwrap().value;
    assert!((bilateral_gzero_asym(2, 400).unwrap().value - 2.0 * one).abs() < 1e-15);
    let est = bilateral_gzero_asym(2, 10_000).unwrap().value;
    let dp = bilateral_gzero_float(2, 10_000).unwrap();
    assert!((dp - est).abs() / dp <= 0.1);
    let r = stay_nonpositive_rate(1_000_000).value;
    assert!((r - 1.0).abs() <= 0.02);
}

#[test]
fn next_zero_bound_chain() {
    // E[S_d φ(S_d)] ≤ E[S_a φ(S_a)] + E[Φ(S_a)] from the ψ(x) = xφ(x) law and Φ(n)/n
    let w = PenaltyWeight::truncated_geometric(rat(1, 2), 24).unwrap();
    let psi = SupportFn::TimesK(w.clone());
    for a in 1..=20u32 {
        let d = dp_joint_law(a, 0, &[Field::S, Field::X]).unwrap();
        let mut after = Rational::zero();
        let mut before = Rational::zero();
        for (k, p) in &d.entries {
            let (s, x) = (k[0], k[1]);
            let conditional = cond_next_zero_max(&psi, s, x).unwrap();
            if s <= 6 {
                assert_eq!(conditional, next_zero_expectation(&psi, s, x, false).unwrap());
            }
            after += conditional * p;
            before += (int(s) * w.phi(s) + w.tail(s)) * p;
        }
        assert!(after <= before, "a={a}");
    }
    for n in 1..=20 {
        assert_eq!(next_zero_series_lhs(&w, n).unwrap(), next_zero_series_rhs(&w, n));
    }
}

#[test]
fn max_ratio_remark() {
    for p in 0..=24u32 {
        for k in 0..=i64::from(p) {
            let r = srw_max_pmf(p, k) / srw_max_pmf(p, 0);
            assert!(r <= Rational::one(), "p={p} k={k}");
            if p + 2 <= 24 {
                let next = srw_max_pmf(p + 2, k) / srw_max_pmf(p + 2, 0);
                assert!(next >= r, "p={p} k={k}");
            }
        }
    }
}

#[test]
fn next_zero_and_max_ratios_share_a_limit() {
    let w = uniform03();
    let g_max = PenaltyFunctional::MaxWeight(w.clone());
    let g_next = PenaltyFunctional::NextZeroMaxWeight(w.clone());
    let ev = EventSpec::prefix(&[Step::Up, Step::Down]);
    let gap = |p: u32| {
        let d = penalized_ratio(2, &ev, &g_next, p).unwrap() - penalized_ratio(2, &ev, &g_max, p).unwrap();
        to_f64(&d).abs()
    };
    let gaps: Vec<f64> = [16u32, 20, 24].iter().map(|&p| gap(p)).collect();
    assert!(gaps.windows(2).all(|g| g[1] <= g[0]), "{gaps:?}");
}

#[test]
fn q_tail_limit_is_half() {
    let w = uniform03();
    assert_eq!(q_max_tail(&w, 0), Rational::one());
    for p in 4..10 {
        assert_eq!(q_max_tail(&w, p), rat(1, 2));
    }
    let mut total = Rational::zero();
    for a in 1..=200u32 {
        for k in 0..=3 {
            total += q_joint_gamma_sg(&w, a, k);
        }
    }
    assert!((to_f64(&total) - 1.0).abs() < 1e-6);
}

#[test]
fn identity_rows() {
    let row = IdentityRow::exact("first-passage", "a=1;k=1".into(), &rat(1, 2), &rat(1, 2));
    assert!(row.pass);
    assert_eq!(row.to_csv().split(',').count(), IdentityRow::CSV_HEADER.split(',').count());
}
