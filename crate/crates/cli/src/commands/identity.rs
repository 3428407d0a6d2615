use num_traits::Zero;
use penwalk::exact::{int, rat, to_f64};
use penwalk::laws::{self, IdentityRow};
use penwalk::oracle::{absorbed_law, dp_joint_law, enumerate_law, next_zero_expectation, AbsorbedSpec};
use penwalk::weight::SupportFn;
use penwalk::{Field, PenaltyWeight, Rational};

use super::weight;
use crate::output::Output;
use crate::{IdentityArgs, Usage};

const NAMES: &[&str] = &[
    "corridor",
    "binomial-filter",
    "next-zero-series",
    "first-passage",
    "tau-max",
    "tau-bimax",
    "gamma-hit",
    "joint-max-endpoint",
    "next-zero",
];

fn corridor(nmax: u32, abmax: u32, tol: f64) -> Result<Vec<IdentityRow>, Usage> {
    let mut rows = Vec::new();
    for n in 0..=nmax {
        let d = dp_joint_law(n, 0, &[Field::S, Field::I, Field::X])?;
        for a in 1..=abmax {
            for b in 1..=abmax {
                for c in -i64::from(b) + 1..i64::from(a) {
                    let params = format!("n={n} a={a} b={b} c={c}");
                    let oracle = d.restrict(|k| k[0] < i64::from(a) && k[1] > -i64::from(b) && k[2] == c).total();
                    let exact = laws::corridor_pmf(n, a, b, c)?;
                    let trig = laws::corridor_pmf_trig(n, a, b, c)?;
                    rows.push(IdentityRow::exact("corridor", params.clone(), &exact, &oracle));
                    rows.push(IdentityRow::float("corridor-trig", params, trig, to_f64(&exact), tol));
                }
            }
        }
    }
    Ok(rows)
}

fn binomial_filter(nmax: u32, pmax: u32, tol: f64) -> Result<Vec<IdentityRow>, Usage> {
    let mut rows = Vec::new();
    for n in 0..=nmax {
        for p in 1..=pmax {
            for u in 0..p {
                let (direct, filtered) = laws::binomial_filter(n, p, u)?;
                let direct = laws::big_to_f64(&direct);
                let scale = direct.abs().max(1.0);
                rows.push(IdentityRow::float(
                    "binomial-filter",
                    format!("n={n} p={p} u={u}"),
                    direct,
                    filtered,
                    tol * scale,
                ));
            }
        }
    }
    Ok(rows)
}

/// Left side from the first-passage oracle, right side `Φ(n)/n`.
fn next_zero_series(w: &PenaltyWeight, nmax: u32) -> Result<Vec<IdentityRow>, Usage> {
    let top = w.max_support().ok_or_else(|| Usage("next-zero-series needs a finite-support weight".into()))?;
    let k = top.max(nmax) + 1;
    let mut rows = Vec::new();
    for n in 1..=i64::from(nmax) {
        let d = absorbed_law(&AbsorbedSpec::FirstPassageMax { start: n as u32, k })?;
        let lhs = d.expect(|s| int(s[0]) * w.phi(s[0]) + w.tail(s[0])) / int(n);
        rows.push(IdentityRow::exact("next-zero-series", format!("n={n}"), &lhs, &laws::next_zero_series_rhs(w, n)));
    }
    Ok(rows)
}

fn next_zero(w: &PenaltyWeight, smax: u32) -> Result<Vec<IdentityRow>, Usage> {
    let mut rows = Vec::new();
    let psis = [("phi", SupportFn::Weight(w.clone())), ("k phi", SupportFn::TimesK(w.clone()))];
    for (label, psi) in &psis {
        for s in 0..=i64::from(smax) {
            for x in -i64::from(smax)..=s {
                if s > 0 || x <= 0 {
                    rows.push(IdentityRow::exact(
                        "next-zero",
                        format!("psi={label} s={s} x={x}"),
                        &laws::cond_next_zero_max(psi, s, x)?,
                        &next_zero_expectation(psi, s, x, false)?,
                    ));
                }
            }
            for x in -s..=s {
                rows.push(IdentityRow::exact(
                    "bilateral-next-zero",
                    format!("psi={label} s*={s} x={x}"),
                    &laws::bilateral_cond_next_zero(psi, s, x)?,
                    &next_zero_expectation(psi, s, x, true)?,
                ));
            }
        }
    }
    Ok(rows)
}

fn absorbed_rows(
    name: &str,
    outer: impl Iterator<Item = u32>,
    levels: impl Fn(u32) -> Vec<i64>,
    spec: impl Fn(u32) -> AbsorbedSpec,
    closed: impl Fn(u32, i64) -> penwalk::Result<Rational>,
) -> Result<Vec<IdentityRow>, Usage> {
    let mut rows = Vec::new();
    for a in outer {
        let d = absorbed_law(&spec(a))?;
        for k in levels(a) {
            rows.push(IdentityRow::exact(name, format!("a={a} k={k}"), &closed(a, k)?, &d.get(&[k])));
        }
    }
    Ok(rows)
}

pub fn run(args: &IdentityArgs, out: &Output) -> Result<bool, Usage> {
    let or = |v: Option<u32>, d: u32| v.unwrap_or(d);
    let rows = match args.name.as_str() {
        "corridor" => corridor(or(args.nmax, 14), or(args.abmax, 5), args.tol.unwrap_or(1e-10))?,
        "binomial-filter" => binomial_filter(or(args.nmax, 40), or(args.pmax, 10), args.tol.unwrap_or(1e-6))?,
        "next-zero-series" => {
            let w = weight(args.weight.as_deref())?.unwrap_or(PenaltyWeight::truncated_geometric(rat(1, 2), 24)?);
            next_zero_series(&w, or(args.nmax, 20))?
        }
        "next-zero" => {
            let w = weight(args.weight.as_deref())?.unwrap_or(PenaltyWeight::uniform(0, 3)?);
            next_zero(&w, or(args.abmax, 6))?
        }
        "first-passage" => {
            let kmax = or(args.kmax, 40);
            absorbed_rows(
                "first-passage",
                1..=or(args.amax, 5),
                |a| (i64::from(a)..=i64::from(kmax)).collect(),
                |a| AbsorbedSpec::FirstPassageMax { start: a, k: kmax },
                |a, k| laws::first_passage_max_law(a.into(), k),
            )?
        }
        "tau-max" => {
            let kmax = or(args.kmax, 30);
            absorbed_rows(
                "tau-max",
                1..=or(args.amax, 4),
                |_| (0..=i64::from(kmax)).collect(),
                |a| AbsorbedSpec::TauMax { a, k: kmax },
                laws::tau_max_pmf,
            )?
        }
        "tau-bimax" => {
            let kmax = or(args.kmax, 30);
            absorbed_rows(
                "tau-bimax",
                2..=or(args.amax, 4),
                |_| (0..=i64::from(kmax)).collect(),
                |a| AbsorbedSpec::TauBilateralMax { a, k: kmax },
                laws::tau_bimax_pmf,
            )?
        }
        "gamma-hit" => {
            let mmax = or(args.mmax, 30);
            absorbed_rows(
                "gamma-hit",
                1..=or(args.cmax, 3),
                |_| (1..=i64::from(mmax)).collect(),
                |c| AbsorbedSpec::GammaAtHit { c, m: mmax },
                |c, m| laws::gamma_hit_pmf(c, m as u32),
            )?
        }
        "joint-max-endpoint" => {
            let mut rows = Vec::new();
            for p in 0..=or(args.pmax, 14) {
                let d = enumerate_law(p, 0, &[Field::S, Field::X])?;
                for b in 0..=i64::from(p) {
                    for a in -i64::from(p)..=b {
                        rows.push(IdentityRow::exact(
                            "joint-max-endpoint",
                            format!("p={p} b={b} a={a}"),
                            &laws::joint_max_endpoint_pmf(p, b, a)?,
                            &d.get(&[b, a]),
                        ));
                    }
                }
            }
            rows
        }
        other => return Err(Usage(format!("unknown identity {other:?}; expected one of {}", NAMES.join(", ")))),
    };
    let failed = rows.iter().filter(|r| !r.pass).count();
    let pass = failed == 0 && !rows.is_empty();
    let csv_rows: Vec<String> = rows.iter().map(IdentityRow::to_csv).collect();
    let worst_float = rows
        .iter()
        .filter(|r| !r.abs_diff.contains('/'))
        .filter_map(|r| r.abs_diff.parse::<f64>().ok())
        .fold(0.0f64, f64::max);
    let exact_all = rows
        .iter()
        .filter(|r| r.abs_diff.contains('/'))
        .all(|r| penwalk::exact::parse_ratio(&r.abs_diff).is_some_and(|d: Rational| d.is_zero()));
    let extra = [
        ("identity", args.name.clone()),
        ("rows", rows.len().to_string()),
        ("failed", failed.to_string()),
        ("exact rows all identities", exact_all.to_string()),
        ("worst float diff", format!("{worst_float:.3e}")),
        ("verdict", if pass { "pass" } else { "fail" }.to_string()),
    ];
    let body = out.csv(IdentityRow::CSV_HEADER, &csv_rows, &extra);
    out.emit(&format!("identity-{}.csv", args.name), &body)?;
    if !pass {
        eprintln!("{failed} of {} rows failed", rows.len());
    }
    Ok(pass)
}
