mod identity;
mod law;
mod sim;

use penwalk::martingales::{q_event_mass, verify_martingale, VerifyRow};
use penwalk::oracle::penalized_ratio;
use penwalk::{EventSpec, MartingaleFamily, MartingaleValue, PenaltyWeight};

use crate::output::{float, Num, Output};
use crate::{Cmd, RatioArgs, Usage, VerifyArgs};

/// Runs a parsed command; `Ok(false)` means a verdict failed.
pub fn dispatch(cmd: &Cmd, out: &Output) -> Result<bool, Usage> {
    match cmd {
        Cmd::Law(a) => law::run(a, out),
        Cmd::Ratio(a) => ratio(a, out),
        Cmd::VerifyMartingale(a) => verify(a, out),
        Cmd::Identity(a) => identity::run(a, out),
        Cmd::Sample(a) => sim::sample(a, out),
        Cmd::Simtest(a) => sim::simtest(a, out),
        Cmd::Asym(a) => sim::asym(a, out),
    }
}

pub fn weight(spec: Option<&str>) -> Result<Option<PenaltyWeight>, Usage> {
    spec.map(|s| PenaltyWeight::parse(s).map_err(|e| Usage(format!("--weight: {e}")))).transpose()
}

pub fn family(name: &str, w: Option<&str>) -> Result<MartingaleFamily, Usage> {
    let w = weight(w)?;
    let f = MartingaleFamily::parse(name, w.as_ref()).map_err(|e| Usage(format!("--family: {e}")))?;
    f.validate().map_err(|e| Usage(format!("--family: {e}")))?;
    Ok(f)
}

fn ratio(a: &RatioArgs, out: &Output) -> Result<bool, Usage> {
    let f = family(&a.family, a.weight.as_deref())?;
    let event = EventSpec::parse(&a.event).map_err(|e| Usage(format!("--event: {e}")))?;
    if a.step == 0 {
        return Err(Usage("--step must be positive".into()));
    }
    let pmin = a.pmin.unwrap_or(a.n.max(1));
    if pmin < a.n || pmin > a.pmax {
        return Err(Usage(format!("need n ≤ pmin ≤ pmax (n={}, pmin={pmin}, pmax={})", a.n, a.pmax)));
    }
    let g = f.penalty();
    let limit = match q_event_mass(&f, &event, a.n)? {
        MartingaleValue::Exact(r) => Num::Exact(r),
        MartingaleValue::Float(x) => Num::Float(x),
    };
    let mut rows = Vec::new();
    for p in (pmin..=a.pmax).step_by(a.step as usize) {
        let r = penalized_ratio(a.n, &event, &g, p)?;
        let gap = match &limit {
            Num::Exact(l) => Num::Exact(num_traits::Signed::abs(&(&r - l))),
            Num::Float(l) => Num::Float((penwalk::exact::to_f64(&r) - l).abs()),
        };
        rows.push(format!("{p},{},{},{}", out.num(&Num::Exact(r)), out.num(&limit), out.num(&gap)));
    }
    let body = out.csv("p,ratio,limit,gap", &rows, &[("functional", g.name()), ("event", event.to_string())]);
    out.emit("ratio.csv", &body)?;
    Ok(true)
}

fn verify(a: &VerifyArgs, out: &Output) -> Result<bool, Usage> {
    let f = family(&a.family, a.weight.as_deref())?;
    let r = verify_martingale(&f, a.depth, a.rows)?;
    let verdict = if r.pass { "pass" } else { "fail" };
    let worst_exact = r.worst_exact_diff.clone().unwrap_or_default();
    let extra = [
        ("states checked", r.states_checked.to_string()),
        ("worst diff", float(r.worst_diff)),
        ("worst exact diff", if worst_exact.is_empty() { "n/a".into() } else { worst_exact.clone() }),
        ("verdict", verdict.to_string()),
    ];
    let body = if a.rows {
        let rows: Vec<String> = r.rows.iter().map(VerifyRow::to_csv).collect();
        out.csv(VerifyRow::CSV_HEADER, &rows, &extra)
    } else {
        let row = format!(
            "{},{},{},{},{},{},{},{}",
            r.family,
            r.depth,
            r.states_checked,
            float(r.worst_diff),
            worst_exact,
            r.all_positive,
            r.kernels_ok,
            verdict
        );
        out.csv(
            "family,depth,states_checked,worst_diff,worst_exact_diff,all_positive,kernels_ok,verdict",
            &[row],
            &extra[3..],
        )
    };
    out.emit("verify-martingale.csv", &body)?;
    if !r.pass {
        eprintln!("verification failed: worst diff {}", float(r.worst_diff));
    }
    Ok(r.pass)
}
