use penwalk::laws;
use penwalk::qsim::{self, ChainKernel, FloatMartingale, PreMaxMeasure, SimReport};

use super::{family, weight};
use crate::output::{float, Output};
use crate::{AsymArgs, SampleArgs, SimArgs, Usage};

fn kernel(name: &str, fam: Option<&str>, w: Option<&str>) -> Result<ChainKernel, Usage> {
    Ok(match name {
        "bessel3" => ChainKernel::Bessel3,
        "bessel3-star" => ChainKernel::Bessel3Star,
        "h-transform" => {
            let f = fam.ok_or_else(|| Usage("the h-transform kernel needs --family".into()))?;
            ChainKernel::HTransform(FloatMartingale::new(family(f, w)?)?)
        }
        other => return Err(Usage(format!("unknown kernel {other:?}; expected bessel3, bessel3-star or h-transform"))),
    })
}

pub fn sample(a: &SampleArgs, out: &Output) -> Result<bool, Usage> {
    let k = kernel(&a.kernel, a.family.as_deref(), a.weight.as_deref())?;
    let path = qsim::sample_chain(&k, a.start, a.steps, a.seed)?;
    let rows: Vec<String> = path.path.iter().enumerate().map(|(n, x)| format!("{n},{x}")).collect();
    let extra = [
        ("kernel", k.name()),
        ("generator", qsim::GENERATOR.to_string()),
        ("absorbed at", path.absorbed_at.map_or("never".into(), |n| n.to_string())),
        ("kernel deviation", float(path.kernel_deviation)),
    ];
    out.emit("sample.csv", &out.csv("n,x", &rows, &extra))?;
    Ok(true)
}

fn need_family(a: &SimArgs) -> Result<penwalk::MartingaleFamily, Usage> {
    let f = a.family.as_deref().ok_or_else(|| Usage(format!("simtest {} needs --family", a.test)))?;
    family(f, a.weight.as_deref())
}

pub fn simtest(a: &SimArgs, out: &Output) -> Result<bool, Usage> {
    let rep: SimReport = match a.test.as_str() {
        "sg-density" => qsim::estimate_sg_density(&need_family(a)?, a.horizon, a.n, a.seed)?,
        "sign-split" => qsim::estimate_sign_split(&need_family(a)?, a.horizon, a.n, a.seed)?,
        "post-g" => qsim::post_g_transition_test(&need_family(a)?, a.horizon, a.n, a.seed)?,
        "bridge" => qsim::pre_g_bridge_test(&need_family(a)?, a.horizon, a.n, a.seed, a.a, a.b)?,
        "pre-max" => {
            let measure = match a.measure.as_str() {
                "walk" => PreMaxMeasure::Walk,
                "walk-bilateral" => PreMaxMeasure::WalkBilateral,
                "bilateral" => PreMaxMeasure::Bilateral(
                    weight(a.weight.as_deref())?.ok_or_else(|| Usage("--measure bilateral needs --weight".into()))?,
                ),
                other => return Err(Usage(format!("unknown measure {other:?}"))),
            };
            qsim::uniform_pre_max_test(a.p, a.n, a.seed, &measure)?
        }
        "kernel-frequency" => {
            let k = kernel(&a.kernel, a.family.as_deref(), a.weight.as_deref())?;
            let steps = usize::try_from(a.horizon).map_err(|_| Usage("--horizon too large".into()))?;
            qsim::kernel_frequency_test(&k, a.start, steps, a.n, a.seed, a.min_visits)?
        }
        other => {
            return Err(Usage(format!(
                "unknown test {other:?}; expected sg-density, sign-split, post-g, pre-max, bridge or kernel-frequency"
            )))
        }
    };
    let verdict = if rep.pass { "pass" } else { "fail" };
    let stem = format!("simtest-{}", a.test);
    let mut csv = rep.histogram_csv();
    if !csv.ends_with('\n') {
        csv.push('\n');
    }
    let (header, rows) = csv.split_once('\n').unwrap_or((&csv, ""));
    let rows: Vec<String> = rows.lines().map(str::to_string).collect();
    let histogram = out.csv(header, &rows, &[("generator", rep.generator.clone()), ("verdict", verdict.into())]);
    match &out.dir {
        Some(_) => {
            out.emit(&format!("{stem}.json"), &format!("{}\n", rep.to_json()))?;
            out.emit(&format!("{stem}.csv"), &histogram)?;
        }
        None => println!("{}", rep.to_json()),
    }
    for c in rep.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} = {} outside [{}, {}]", c.name, c.value, c.lo, c.hi);
    }
    Ok(rep.pass)
}

pub fn asym(a: &AsymArgs, out: &Output) -> Result<bool, Usage> {
    let mut rows = Vec::new();
    let mut pass = true;
    let header;
    match a.name.as_str() {
        "central-binomial" => {
            let p = a.p.unwrap_or(1_000_000);
            let tol = a.tol.unwrap_or(0.02);
            let est = laws::stay_nonpositive_rate(p);
            let ok = (est.value - 1.0).abs() <= tol;
            pass &= ok;
            header = "p,rate,ln_rate,leading_term,verdict";
            rows.push(format!("{p},{},{},{},{}", float(est.value), float(est.ln_value), est.leading_term, verdict(ok)));
        }
        "corridor-survival" => {
            let n = a.n.unwrap_or(2000);
            let tol = a.tol.unwrap_or(0.02);
            header = "n,a,b,survival_ln,estimate_ln,ratio,verdict";
            for x in 1..=a.abmax.unwrap_or(4) {
                for y in 1..=a.abmax.unwrap_or(4) {
                    if x + y == 2 {
                        continue;
                    }
                    let est = laws::corridor_survival_asym(n, x, y)?;
                    let dp = laws::corridor_survival_ln(n, x, y)?;
                    let ratio = (dp - est.ln_value).exp();
                    let ok = (ratio - 1.0).abs() <= tol;
                    pass &= ok;
                    rows.push(format!(
                        "{n},{x},{y},{},{},{},{}",
                        float(dp),
                        float(est.ln_value),
                        float(ratio),
                        verdict(ok)
                    ));
                }
            }
        }
        "bilateral-rate" => {
            let p = a.p.unwrap_or(10_000);
            let pu = u32::try_from(p).map_err(|_| Usage("--p too large for the float DP".into()))?;
            let tol = a.tol.unwrap_or(0.10);
            header = "p,alpha,dp,estimate,relative_error,verdict";
            for alpha in 1..=a.alphamax.unwrap_or(3) {
                let est = laws::bilateral_gzero_asym(alpha, p)?.value;
                let dp = laws::bilateral_gzero_float(alpha, pu)?;
                let rel = (dp - est).abs() / dp;
                let ok = rel <= tol;
                pass &= ok;
                rows.push(format!("{p},{alpha},{},{},{},{}", float(dp), float(est), float(rel), verdict(ok)));
            }
        }
        other => {
            return Err(Usage(format!(
                "unknown asymptotic {other:?}; expected central-binomial, corridor-survival or bilateral-rate"
            )))
        }
    }
    let body = out.csv(header, &rows, &[("verdict", verdict(pass).into())]);
    out.emit(&format!("asym-{}.csv", a.name), &body)?;
    Ok(pass)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}
