use penwalk::laws;
use penwalk::weight::SupportFn;
use penwalk::{Error, PenaltyWeight};

use super::weight;
use crate::output::{Grid, Num, Output};
use crate::{LawArgs, Usage};

type Eval = fn(&[i64], Option<&PenaltyWeight>) -> penwalk::Result<Num>;

struct LawDef {
    name: &'static str,
    params: &'static [&'static str],
    weighted: bool,
    eval: Eval,
}

fn u(v: i64) -> penwalk::Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidParameter(format!("{v} must be a non-negative integer")))
}

fn w(w: Option<&PenaltyWeight>) -> &PenaltyWeight {
    w.expect("weighted laws are checked for --weight")
}

const LAWS: &[LawDef] = &[
    LawDef {
        name: "srw-endpoint",
        params: &["n", "k"],
        weighted: false,
        eval: |v, _| Ok(Num::Exact(laws::srw_endpoint_pmf(u(v[0])?, v[1]))),
    },
    LawDef {
        name: "srw-max",
        params: &["n", "k"],
        weighted: false,
        eval: |v, _| Ok(Num::Exact(laws::srw_max_pmf(u(v[0])?, v[1]))),
    },
    LawDef {
        name: "joint-max-endpoint",
        params: &["p", "b", "a"],
        weighted: false,
        eval: |v, _| laws::joint_max_endpoint_pmf(u(v[0])?, v[1], v[2]).map(Num::Exact),
    },
    LawDef {
        name: "max-ratio-product",
        params: &["n", "k"],
        weighted: false,
        eval: |v, _| Ok(Num::Exact(laws::max_ratio_product(u(v[0])?, v[1]))),
    },
    LawDef {
        name: "first-passage-max",
        params: &["a", "k"],
        weighted: false,
        eval: |v, _| laws::first_passage_max_law(v[0], v[1]).map(Num::Exact),
    },
    LawDef {
        name: "ruin",
        params: &["a", "k"],
        weighted: false,
        eval: |v, _| penwalk::oracle::ruin_probability(v[0], v[1]).map(Num::Exact),
    },
    LawDef {
        name: "tau-max",
        params: &["a", "c"],
        weighted: false,
        eval: |v, _| laws::tau_max_pmf(u(v[0])?, v[1]).map(Num::Exact),
    },
    LawDef {
        name: "tau-bimax",
        params: &["a", "k"],
        weighted: false,
        eval: |v, _| laws::tau_bimax_pmf(u(v[0])?, v[1]).map(Num::Exact),
    },
    LawDef {
        name: "gamma-hit",
        params: &["c", "m"],
        weighted: false,
        eval: |v, _| laws::gamma_hit_pmf(u(v[0])?, u(v[1])?).map(Num::Exact),
    },
    LawDef {
        name: "uniform-pre-max",
        params: &["p", "k"],
        weighted: false,
        eval: |v, _| laws::uniform_pre_max_pmf(u(v[0])?, v[1]).map(Num::Exact),
    },
    LawDef {
        name: "corridor",
        params: &["n", "a", "b", "c"],
        weighted: false,
        eval: |v, _| laws::corridor_pmf(u(v[0])?, u(v[1])?, u(v[2])?, v[3]).map(Num::Exact),
    },
    LawDef {
        name: "corridor-trig",
        params: &["n", "a", "b", "c"],
        weighted: false,
        eval: |v, _| laws::corridor_pmf_trig(u(v[0])?, u(v[1])?, u(v[2])?, v[3]).map(Num::Float),
    },
    LawDef {
        name: "next-zero-max",
        params: &["s", "x"],
        weighted: true,
        eval: |v, wt| laws::cond_next_zero_max(&SupportFn::Weight(w(wt).clone()), v[0], v[1]).map(Num::Exact),
    },
    LawDef {
        name: "bilateral-next-zero",
        params: &["s", "x"],
        weighted: true,
        eval: |v, wt| laws::bilateral_cond_next_zero(&SupportFn::Weight(w(wt).clone()), v[0], v[1]).map(Num::Exact),
    },
    LawDef {
        name: "q-joint",
        params: &["a", "k"],
        weighted: true,
        eval: |v, wt| Ok(Num::Exact(laws::q_joint_gamma_sg(w(wt), u(v[0])?, v[1]))),
    },
    LawDef {
        name: "qstar-joint",
        params: &["a", "k"],
        weighted: true,
        eval: |v, wt| {
            let a = u(v[0])?;
            Ok(Num::Exact(laws::qstar_joint_gamma_sg(w(wt), a, v[1], a.saturating_sub(1))))
        },
    },
    LawDef {
        name: "q-max-tail",
        params: &["p"],
        weighted: true,
        eval: |v, wt| Ok(Num::Exact(laws::q_max_tail(w(wt), v[0]))),
    },
];

const MAX_CELLS: u64 = 1_000_000;

pub fn run(args: &LawArgs, out: &Output) -> Result<bool, Usage> {
    let def = LAWS.iter().find(|d| d.name == args.name).ok_or_else(|| {
        let names: Vec<&str> = LAWS.iter().map(|d| d.name).collect();
        Usage(format!("unknown law {:?}; expected one of {}", args.name, names.join(", ")))
    })?;
    let k = match (args.k, args.kmax) {
        (Some(_), Some(_)) => return Err(Usage("give either --k or --kmax".into())),
        (None, Some(kmax)) => Some(Grid { lo: 0, hi: kmax }),
        (k, None) => k,
    };
    let given = [
        ("n", args.n),
        ("k", k),
        ("a", args.a),
        ("b", args.b),
        ("c", args.c),
        ("m", args.m),
        ("p", args.p),
        ("s", args.s),
        ("x", args.x),
    ];
    for (name, g) in &given {
        if g.is_some() && !def.params.contains(name) {
            return Err(Usage(format!(
                "law {} does not take --{name} (parameters: {})",
                def.name,
                def.params.join(", ")
            )));
        }
    }
    let grids: Vec<Grid> = def
        .params
        .iter()
        .map(|p| {
            given
                .iter()
                .find(|(n, _)| n == p)
                .and_then(|(_, g)| *g)
                .ok_or_else(|| Usage(format!("law {} needs --{p}", def.name)))
        })
        .collect::<Result<_, _>>()?;
    let wt = weight(args.weight.as_deref())?;
    match (def.weighted, &wt) {
        (true, None) => return Err(Usage(format!("law {} needs --weight", def.name))),
        (false, Some(_)) => return Err(Usage(format!("law {} does not take --weight", def.name))),
        _ => {}
    }
    let cells: u64 = grids.iter().map(Grid::len).product();
    if cells > MAX_CELLS {
        return Err(Usage(format!("grid has {cells} cells, more than {MAX_CELLS}")));
    }

    let mut rows = Vec::new();
    let mut skipped = 0u64;
    let mut first_err = None;
    let mut point = vec![0i64; grids.len()];
    for idx in 0..cells {
        let mut rem = idx;
        for (i, g) in grids.iter().enumerate().rev() {
            point[i] = g.lo + (rem % g.len()) as i64;
            rem /= g.len();
        }
        match (def.eval)(&point, wt.as_ref()) {
            Ok(v) => {
                let params: Vec<String> = point.iter().map(i64::to_string).collect();
                rows.push(format!("{},{}", params.join(","), out.num(&v)));
            }
            Err(e @ (Error::InvalidParameter(_) | Error::InconsistentState(_))) => {
                skipped += 1;
                first_err.get_or_insert(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if rows.is_empty() {
        return Err(first_err.map(Usage::from).unwrap_or_else(|| Usage("empty grid".into())));
    }
    let header = format!("{},value", def.params.join(","));
    let mut extra = vec![("law", def.name.to_string()), ("cells", rows.len().to_string())];
    if skipped > 0 {
        extra.push(("skipped cells (outside the law's domain)", skipped.to_string()));
    }
    let body = out.csv(&header, &rows, &extra);
    out.emit(&format!("law-{}.csv", def.name), &body)?;
    Ok(true)
}
