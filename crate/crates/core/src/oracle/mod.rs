//! Ground truth by brute force: path enumeration, exact state dynamic
//! programming, and absorbing-chain solves.

mod absorbing;
mod dist;
mod event;

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

pub use absorbing::{AbsorbingChain, Outcome};
pub use dist::ExactDist;
pub use event::{CmpOp, EventSpec};

use crate::error::{Error, Result};
use crate::exact::{half_pow, int, rat, Rational};
use crate::laws;
use crate::walk::{Field, FieldSet, Path, Step, WalkState};
use crate::weight::{PenaltyWeight, SupportFn};

/// Largest horizon accepted by [`enumerate_expect`].
pub const ENUM_CAP: u32 = 24;

/// Largest horizon of the counting DP (path counts are kept in `u128`).
pub const DP_CAP: u32 = 120;

/// Default truncation level for laws with unbounded support.
pub const DEFAULT_TRUNCATION: u32 = 200;

const MAX_CHAIN_STATES: usize = 200_000;

/// `Σ_paths 2^{-p} f(path)` over all `2^p` paths of length `p`.
pub fn enumerate_expect(p: u32, start: i64, f: impl Fn(&Path) -> Rational) -> Result<Rational> {
    enumerate_expect_capped(p, start, ENUM_CAP, f)
}

pub fn enumerate_expect_capped(p: u32, start: i64, cap: u32, f: impl Fn(&Path) -> Rational) -> Result<Rational> {
    if p > cap {
        return Err(Error::HorizonTooLarge { horizon: p, cap });
    }
    let mut sum = Rational::zero();
    for_each_path(p, start, |path| sum += f(path));
    Ok(sum * half_pow(p))
}

fn for_each_path(p: u32, start: i64, mut visit: impl FnMut(&Path)) {
    let mut path = Path { start, steps: Vec::with_capacity(p as usize) };
    fn rec(path: &mut Path, left: u32, visit: &mut impl FnMut(&Path)) {
        if left == 0 {
            visit(path);
            return;
        }
        for s in Step::BOTH {
            path.steps.push(s);
            rec(path, left - 1, visit);
            path.steps.pop();
        }
    }
    rec(&mut path, p, &mut visit);
}

/// Joint law of `fields` at time `p` by enumerating paths and recomputing
/// every statistic from scratch.
pub fn enumerate_law(p: u32, start: i64, fields: &[Field]) -> Result<ExactDist> {
    if p > ENUM_CAP {
        return Err(Error::HorizonTooLarge { horizon: p, cap: ENUM_CAP });
    }
    let mut counts: BTreeMap<Vec<i64>, u128> = BTreeMap::new();
    for_each_path(p, start, |path| {
        let st = WalkState::from_path(path);
        *counts.entry(fields.iter().map(|f| st.field(*f)).collect()).or_default() += 1;
    });
    Ok(ExactDist::from_counts(labels(fields), &counts, p))
}

fn labels(fields: &[Field]) -> Vec<String> {
    fields.iter().map(|f| f.name().to_string()).collect()
}

/// One DP layer: state → number of paths reaching it.
pub type Layer = HashMap<WalkState, u128>;

/// Advances a layer by one step, projecting onto `keep` and dropping states
/// for which `alive` is false.
pub fn step_layer(layer: &Layer, keep: FieldSet, alive: &(dyn Fn(&WalkState) -> bool + Sync)) -> Layer {
    let advance = |acc: &mut Layer, (st, c): (&WalkState, &u128)| {
        for s in Step::BOTH {
            let next = st.step(s).project(keep);
            if alive(&next) {
                *acc.entry(next).or_default() += c;
            }
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if layer.len() > 4096 {
            let items: Vec<(&WalkState, &u128)> = layer.iter().collect();
            return items
                .par_chunks(1024)
                .map(|chunk| {
                    let mut acc = Layer::new();
                    chunk.iter().for_each(|it| advance(&mut acc, *it));
                    acc
                })
                .reduce(Layer::new, |mut a, b| {
                    for (k, v) in b {
                        *a.entry(k).or_default() += v;
                    }
                    a
                });
        }
    }
    let mut acc = Layer::with_capacity(layer.len() * 2);
    layer.iter().for_each(|it| advance(&mut acc, it));
    acc
}

/// Runs `steps` layers from `init`.
pub fn propagate(init: Layer, steps: u32, keep: FieldSet, alive: &(dyn Fn(&WalkState) -> bool + Sync)) -> Layer {
    (0..steps).fold(init, |layer, _| step_layer(&layer, keep, alive))
}

/// Exact joint law of the projected statistics at time `p`.
pub fn dp_joint_law(p: u32, start: i64, projection: &[Field]) -> Result<ExactDist> {
    if p > DP_CAP {
        return Err(Error::HorizonTooLarge { horizon: p, cap: DP_CAP });
    }
    let keep = FieldSet::of(projection);
    let init = Layer::from([(WalkState::initial(start).project(keep), 1)]);
    let last = propagate(init, p, keep, &|_| true);
    let mut counts: BTreeMap<Vec<i64>, u128> = BTreeMap::new();
    for (st, c) in last {
        *counts.entry(projection.iter().map(|f| st.field(*f)).collect()).or_default() += c;
    }
    Ok(ExactDist::from_counts(labels(projection), &counts, p))
}

/// The penalising functionals `G_p`.
#[derive(Clone, Debug, PartialEq)]
pub enum PenaltyFunctional {
    /// `φ(S_p)`.
    MaxWeight(PenaltyWeight),
    /// `φ(S_{g_p})`.
    LastZeroMaxWeight(PenaltyWeight),
    /// `φ(S_{d_p})`, reduced to a function of `(S_p, X_p)`.
    NextZeroMaxWeight(PenaltyWeight),
    /// `φ(S*_{g_p})`.
    BilateralLastZeroWeight(PenaltyWeight),
    /// `1_{S*_p < a}`.
    BilateralIndicator(u32),
    /// `1_{S_p < a, I_p > -b}`.
    CorridorIndicator(u32, u32),
}

impl PenaltyFunctional {
    pub fn name(&self) -> String {
        match self {
            PenaltyFunctional::MaxWeight(_) => "max".into(),
            PenaltyFunctional::LastZeroMaxWeight(_) => "last-zero-max".into(),
            PenaltyFunctional::NextZeroMaxWeight(_) => "next-zero-max".into(),
            PenaltyFunctional::BilateralLastZeroWeight(_) => "bilateral-last-zero".into(),
            PenaltyFunctional::BilateralIndicator(a) => format!("bilateral-indicator({a})"),
            PenaltyFunctional::CorridorIndicator(a, b) => format!("corridor-indicator({a},{b})"),
        }
    }

    pub fn fields(&self) -> FieldSet {
        match self {
            PenaltyFunctional::MaxWeight(_) => FieldSet::of(&[Field::S]),
            PenaltyFunctional::LastZeroMaxWeight(_) => FieldSet::of(&[Field::SG]),
            PenaltyFunctional::NextZeroMaxWeight(_) => FieldSet::of(&[Field::S]),
            PenaltyFunctional::BilateralLastZeroWeight(_) => FieldSet::of(&[Field::SStarG]),
            PenaltyFunctional::BilateralIndicator(_) => FieldSet::of(&[Field::SStar]),
            PenaltyFunctional::CorridorIndicator(..) => FieldSet::of(&[Field::S, Field::I]),
        }
    }

    /// `G_p` as a function of the state at the horizon.
    pub fn value(&self, st: &WalkState) -> Result<Rational> {
        let ind = |b: bool| if b { Rational::one() } else { Rational::zero() };
        Ok(match self {
            PenaltyFunctional::MaxWeight(w) => w.phi(st.s),
            PenaltyFunctional::LastZeroMaxWeight(w) => w.phi(st.s_g.ok_or(Error::UndefinedLastZero)?),
            PenaltyFunctional::NextZeroMaxWeight(w) => {
                laws::cond_next_zero_max(&SupportFn::Weight(w.clone()), st.s, st.x)?
            }
            PenaltyFunctional::BilateralLastZeroWeight(w) => w.phi(st.s_star_g.ok_or(Error::UndefinedLastZero)?),
            PenaltyFunctional::BilateralIndicator(a) => ind(st.s_star < i64::from(*a)),
            PenaltyFunctional::CorridorIndicator(a, b) => ind(st.s < i64::from(*a) && st.i > -i64::from(*b)),
        })
    }

    /// False once the functional is certainly zero at every later horizon.
    fn alive(&self, st: &WalkState) -> bool {
        match self {
            PenaltyFunctional::BilateralIndicator(a) => st.s_star < i64::from(*a),
            PenaltyFunctional::CorridorIndicator(a, b) => st.s < i64::from(*a) && st.i > -i64::from(*b),
            PenaltyFunctional::MaxWeight(w) | PenaltyFunctional::NextZeroMaxWeight(w) => {
                w.max_support().is_none_or(|m| st.s <= i64::from(m))
            }
            _ => true,
        }
    }
}

/// Path counts of the states at time `n` on which `event` holds.
fn event_layer(n: u32, start: i64, event: &EventSpec, keep: FieldSet) -> Result<Layer> {
    let mut layer = Layer::new();
    if event.needs_path() {
        if n > ENUM_CAP {
            return Err(Error::HorizonTooLarge { horizon: n, cap: ENUM_CAP });
        }
        for_each_path(n, start, |path| {
            let st = path.steps.iter().fold(WalkState::initial(start), |s, x| s.step(*x));
            if event.holds(&path.steps, &st) {
                *layer.entry(st.project(keep)).or_default() += 1;
            }
        });
    } else {
        let full = keep.union(event.fields());
        let init = Layer::from([(WalkState::initial(start).project(full), 1)]);
        for (st, c) in propagate(init, n, full, &|_| true) {
            if event.holds(&[], &st) {
                *layer.entry(st.project(keep)).or_default() += c;
            }
        }
    }
    Ok(layer)
}

/// `E_0[1_Λ G_p]` for `Λ ∈ F_n`.
pub fn penalized_expectation(n: u32, event: &EventSpec, g: &PenaltyFunctional, p: u32) -> Result<Rational> {
    if n > p {
        return Err(Error::InvalidParameter(format!("n = {n} exceeds horizon p = {p}")));
    }
    if p > DP_CAP {
        return Err(Error::HorizonTooLarge { horizon: p, cap: DP_CAP });
    }
    let keep = g.fields();
    let layer: Layer = event_layer(n, 0, event, keep)?.into_iter().filter(|(st, _)| g.alive(st)).collect();
    let last = propagate(layer, p - n, keep, &|st| g.alive(st));
    let mut sum = Rational::zero();
    for (st, c) in last {
        let v = g.value(&st)?;
        if !v.is_zero() {
            sum += v * Rational::from_integer(c.into());
        }
    }
    Ok(sum * half_pow(p))
}

/// `E_0[1_Λ G_p] / E_0[G_p]`.
pub fn penalized_ratio(n: u32, event: &EventSpec, g: &PenaltyFunctional, p: u32) -> Result<Rational> {
    let den = penalized_expectation(0, &EventSpec::All, g, p)?;
    if den.is_zero() {
        return Err(Error::DegenerateDenominator);
    }
    Ok(penalized_expectation(n, event, g, p)? / den)
}

/// `P_a(T_k < T_0)` by solving the harmonic system on `{0..k}`.
pub fn ruin_probability(a: i64, k: i64) -> Result<Rational> {
    if !(0 <= a && a <= k && k >= 1) {
        return Err(Error::InvalidParameter(format!("need 0 ≤ a ≤ k, k ≥ 1 (a={a}, k={k})")));
    }
    if a == 0 || a == k {
        return Ok(if a == k { Rational::one() } else { Rational::zero() });
    }
    let chain = AbsorbingChain::explore(
        a,
        |&x| {
            let to = |y: i64| if y == 0 || y == k { Outcome::Absorb(y == k) } else { Outcome::Move(y) };
            vec![(rat(1, 2), to(x + 1)), (rat(1, 2), to(x - 1))]
        },
        MAX_CHAIN_STATES,
    )?;
    Ok(chain.absorption_from(&a)?.remove(&true).unwrap_or_else(Rational::zero))
}

/// Laws available through [`absorbed_law`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AbsorbedSpec {
    /// `S` at the time of the `a`-th visit to 0 (the time-0 visit counts), levels `0..=k`.
    TauMax { a: u32, k: u32 },
    /// `S*` at the same time.
    TauBilateralMax { a: u32, k: u32 },
    /// Zero count `γ` at the hitting time of `c`, values `1..=m`.
    GammaAtHit { c: u32, m: u32 },
    /// `S_{g_{T_p}}`: maximum before the last zero preceding the hitting time of `p`.
    PreMaxAtHit { p: u32 },
    /// `S_{T_0}` under `P_start`, levels `start..=k`.
    FirstPassageMax { start: u32, k: u32 },
    /// `S_{d}` for the walk started at `x` with running maximum `s`, run until it hits 0.
    NextZeroMax { x: i64, s: i64, k: u32 },
    /// `S*_{d}` for the walk started at `x` with running bilateral maximum `s_star`.
    NextZeroBilateralMax { x: i64, s_star: i64, k: u32 },
}

/// Exact law of a statistic at an (unbounded) stopping time, truncated at the
/// spec's level with the remaining mass reported as residual.
pub fn absorbed_law(spec: &AbsorbedSpec) -> Result<ExactDist> {
    match *spec {
        AbsorbedSpec::TauMax { a, k } => level_law("s", a, k, false),
        AbsorbedSpec::TauBilateralMax { a, k } => level_law("s_star", a, k, true),
        AbsorbedSpec::GammaAtHit { c, m } => gamma_at_hit(c, m),
        AbsorbedSpec::PreMaxAtHit { p } => pre_max_at_hit(p),
        AbsorbedSpec::FirstPassageMax { start, k } => {
            if start == 0 {
                return Err(Error::InvalidParameter("start must be ≥ 1".into()));
            }
            let mut d = ExactDist::new(vec!["s".into()]);
            let mut above = ruin_probability(i64::from(start), i64::from(start))?;
            for lvl in start..=k {
                let next = ruin_probability(i64::from(start), i64::from(lvl) + 1)?;
                d.add(vec![i64::from(lvl)], above - &next);
                above = next;
            }
            d.residual = above;
            Ok(d)
        }
        AbsorbedSpec::NextZeroMax { x, s, k } => next_zero_max_law(x, s, k, false),
        AbsorbedSpec::NextZeroBilateralMax { x, s_star, k } => next_zero_max_law(x, s_star, k, true),
    }
}

/// `P(max < c)` at the `a`-th zero visit, for each `c ≤ k + 1`, by solving the
/// chain `(zeros seen, position)` killed on reaching `c`.
fn level_law(label: &str, a: u32, k: u32, bilateral: bool) -> Result<ExactDist> {
    if a == 0 {
        return Err(Error::InvalidParameter("a ≥ 1 required".into()));
    }
    let below = |c: i64| -> Result<Rational> {
        if a == 1 {
            return Ok(if c >= 1 { Rational::one() } else { Rational::zero() });
        }
        if c <= 0 {
            return Ok(Rational::zero());
        }
        // state: (visits so far, y) with y = X (unilateral) or |X| (bilateral), 0 ≤ y < c
        let chain = AbsorbingChain::explore(
            (1u32, 0i64),
            |&(v, y)| {
                let visit = |v: u32| {
                    if v + 1 == a {
                        Outcome::Absorb(true)
                    } else {
                        Outcome::Move((v + 1, 0))
                    }
                };
                let up = |y: i64| if y + 1 >= c { Outcome::Absorb(false) } else { Outcome::Move((v, y + 1)) };
                if y == 0 {
                    if bilateral {
                        // |X| leaves 0 upward whichever way X moves
                        vec![(Rational::one(), up(0))]
                    } else {
                        // a negative excursion returns to 0 without touching the maximum
                        vec![(rat(1, 2), up(0)), (rat(1, 2), visit(v))]
                    }
                } else if y == 1 {
                    vec![(rat(1, 2), up(1)), (rat(1, 2), visit(v))]
                } else {
                    vec![(rat(1, 2), up(y)), (rat(1, 2), Outcome::Move((v, y - 1)))]
                }
            },
            MAX_CHAIN_STATES,
        )?;
        Ok(chain.absorption_from(&(1, 0))?.remove(&true).unwrap_or_else(Rational::zero))
    };
    let mut d = ExactDist::new(vec![label.into()]);
    let mut prev = Rational::zero();
    for c in 0..=i64::from(k) {
        let cur = below(c + 1)?;
        d.add(vec![c], &cur - &prev);
        prev = cur;
    }
    d.residual = Rational::one() - prev;
    Ok(d)
}

fn gamma_at_hit(c: u32, m: u32) -> Result<ExactDist> {
    if c == 0 || m == 0 {
        return Err(Error::InvalidParameter("c, m ≥ 1 required".into()));
    }
    let c = i64::from(c);
    // state: (zero visits so far, position in 0..c); overflow past m is residual
    let chain = AbsorbingChain::explore(
        (1u32, 0i64),
        |&(v, y)| {
            let at = |v: u32, y: i64| -> Outcome<(u32, i64), Option<u32>> {
                if y == c {
                    Outcome::Absorb(Some(v))
                } else if v > m {
                    Outcome::Absorb(None)
                } else {
                    Outcome::Move((v, y))
                }
            };
            if y == 0 {
                vec![(rat(1, 2), at(v, 1)), (rat(1, 2), at(v + 1, 0))]
            } else if y == 1 {
                vec![(rat(1, 2), at(v, 2)), (rat(1, 2), at(v + 1, 0))]
            } else {
                vec![(rat(1, 2), at(v, y + 1)), (rat(1, 2), at(v, y - 1))]
            }
        },
        MAX_CHAIN_STATES,
    )?;
    let law = chain.absorption_from(&(1, 0))?;
    let mut d = ExactDist::new(vec!["gamma".into()]);
    for (l, p) in law {
        match l {
            Some(v) => d.add(vec![i64::from(v)], p),
            None => d.residual += p,
        }
    }
    Ok(d)
}

fn pre_max_at_hit(p: u32) -> Result<ExactDist> {
    if p == 0 {
        return Err(Error::InvalidParameter("p ≥ 1 required".into()));
    }
    let p = i64::from(p);
    // state: (position ≥ 0, running max, max at last zero)
    let chain = AbsorbingChain::explore(
        (0i64, 0i64, 0i64),
        |&(y, s, sg)| {
            let up = if y + 1 == p { Outcome::Absorb(sg) } else { Outcome::Move((y + 1, s.max(y + 1), sg)) };
            let down = if y == 0 {
                // negative excursion: back at 0, maximum unchanged
                Outcome::Move((0, s, s))
            } else if y == 1 {
                Outcome::Move((0, s, s))
            } else {
                Outcome::Move((y - 1, s, sg))
            };
            vec![(rat(1, 2), up), (rat(1, 2), down)]
        },
        MAX_CHAIN_STATES,
    )?;
    let mut d = ExactDist::new(vec!["s_g".into()]);
    for (l, q) in chain.absorption_from(&(0, 0, 0))? {
        d.add(vec![l], q);
    }
    Ok(d)
}

/// Law of the running maximum (of `X` or `|X|`) at the next visit to 0.
fn next_zero_max_law(x: i64, s: i64, k: u32, bilateral: bool) -> Result<ExactDist> {
    let k = i64::from(k);
    let label = if bilateral { "s_star" } else { "s" };
    let mut d = ExactDist::new(vec![label.into()]);
    if bilateral && x.abs() > s || !bilateral && x > s || s < 0 {
        return Err(Error::InconsistentState(format!("x = {x} exceeds max {s}")));
    }
    if x == 0 {
        d.add(vec![s], Rational::one());
        return Ok(d);
    }
    if !bilateral && x < 0 {
        // below 0 the walk reaches 0 before any new maximum
        d.add(vec![s], Rational::one());
        return Ok(d);
    }
    // signed position, running max; positions beyond ±k (or max > k) are truncated
    let measure = move |y: i64| if bilateral { y.abs() } else { y };
    let chain = AbsorbingChain::explore(
        (s, x),
        |&(m, y)| {
            let to = |y: i64| -> Outcome<(i64, i64), Option<i64>> {
                let m = m.max(measure(y));
                if y == 0 {
                    Outcome::Absorb(Some(m))
                } else if m > k {
                    Outcome::Absorb(None)
                } else {
                    Outcome::Move((m, y))
                }
            };
            vec![(rat(1, 2), to(y + 1)), (rat(1, 2), to(y - 1))]
        },
        MAX_CHAIN_STATES,
    )?;
    for (l, q) in chain.absorption_from(&(s, x))? {
        match l {
            Some(m) => d.add(vec![m], q),
            None => d.residual += q,
        }
    }
    Ok(d)
}

/// `E[ψ(S_{d_p}) | S_p = s, X_p = x]` from the absorbed law, exact when ψ has
/// finite support.
pub fn next_zero_expectation(psi: &SupportFn, s: i64, x: i64, bilateral: bool) -> Result<Rational> {
    let top = psi.max_support().ok_or_else(|| Error::InfiniteSeries("ψ must have finite support".into()))?;
    let k = u32::try_from(s.max(i64::from(top))).unwrap_or(0) + 1;
    let spec = if bilateral {
        AbsorbedSpec::NextZeroBilateralMax { x, s_star: s, k }
    } else {
        AbsorbedSpec::NextZeroMax { x, s, k }
    };
    // mass past k only meets levels where ψ vanishes
    Ok(absorbed_law(&spec)?.expect(|key| psi.eval(key[0])))
}

/// `P(T_lo ∧ T_hi = m)` for `m = 1..=m_max` from 0 (`lo < 0 < hi`), plus the
/// mass still alive after `m_max`.
pub fn exit_time_law(lo: i64, hi: i64, m_max: u32) -> Result<(Vec<f64>, f64)> {
    if !(lo < 0 && hi > 0) {
        return Err(Error::InvalidParameter(format!("need lo < 0 < hi (lo={lo}, hi={hi})")));
    }
    let width = (hi - lo + 1) as usize;
    let mut mass = vec![0.0; width];
    mass[(-lo) as usize] = 1.0;
    let mut law = Vec::with_capacity(m_max as usize);
    for _ in 0..m_max {
        let mut next = vec![0.0; width];
        for (i, m) in mass.iter().enumerate() {
            if *m == 0.0 || i == 0 || i == width - 1 {
                continue;
            }
            next[i - 1] += 0.5 * m;
            next[i + 1] += 0.5 * m;
        }
        law.push(next[0] + next[width - 1]);
        next[0] = 0.0;
        next[width - 1] = 0.0;
        mass = next;
    }
    Ok((law, mass.iter().sum()))
}

/// `P_0(T_level = m)` for `m = 1..=m_max` with the level absorbing and the
/// walk otherwise free, plus the unabsorbed mass.
pub fn first_passage_time_law(level: u32, m_max: u32) -> (Vec<f64>, f64) {
    let level = level as i64;
    let lo = -(m_max as i64) - 1;
    let width = (level - lo + 1) as usize;
    let mut mass = vec![0.0; width];
    mass[(-lo) as usize] = 1.0;
    let mut law = Vec::with_capacity(m_max as usize);
    for _ in 0..m_max {
        let mut next = vec![0.0; width];
        for (i, m) in mass.iter().enumerate() {
            if *m == 0.0 || i == width - 1 {
                continue;
            }
            if i > 0 {
                next[i - 1] += 0.5 * m;
            }
            next[i + 1] += 0.5 * m;
        }
        law.push(next[width - 1]);
        next[width - 1] = 0.0;
        mass = next;
    }
    (law, mass.iter().sum())
}

/// `P(S_n = 0)` normaliser used with each weighted functional: once for
/// `φ(S_p)` and twice for `φ(S_{g_p})`.
pub fn penalty_normalizer(g: &PenaltyFunctional, m: u32) -> Rational {
    let base = laws::srw_max_pmf(m, 0);
    match g {
        PenaltyFunctional::LastZeroMaxWeight(_) | PenaltyFunctional::BilateralLastZeroWeight(_) => base * int(2),
        _ => base,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_step_enumeration() {
        let e = enumerate_expect(2, 0, |p| {
            let s = WalkState::from_path(p).s;
            if s == 0 {
                int(1)
            } else {
                int(0)
            }
        })
        .unwrap();
        assert_eq!(e, rat(1, 2));
        assert!(enumerate_expect(25, 0, |_| int(1)).is_err());
        assert_eq!(enumerate_expect(0, 3, |p| int(p.end())).unwrap(), int(3));
    }

    #[test]
    fn dp_small_laws() {
        let d = dp_joint_law(2, 0, &[Field::S]).unwrap();
        assert_eq!(d.get(&[0]), rat(1, 2));
        assert_eq!(d.get(&[1]), rat(1, 4));
        assert_eq!(d.get(&[2]), rat(1, 4));
        let d = dp_joint_law(1, 0, &[Field::X]).unwrap();
        assert_eq!(d.get(&[-1]), rat(1, 2));
        assert_eq!(d.get(&[1]), rat(1, 2));
    }

    #[test]
    fn ruin_small() {
        assert_eq!(ruin_probability(1, 2).unwrap(), rat(1, 2));
        assert_eq!(ruin_probability(3, 7).unwrap(), rat(3, 7));
        assert_eq!(ruin_probability(4, 4).unwrap(), int(1));
    }

    #[test]
    fn degenerate_corridor() {
        let g = PenaltyFunctional::CorridorIndicator(1, 1);
        assert_eq!(penalized_ratio(0, &EventSpec::All, &g, 2), Err(Error::DegenerateDenominator));
    }

    #[test]
    fn exit_time_forced_at_one_step() {
        let (law, rest) = exit_time_law(-1, 1, 5).unwrap();
        assert_eq!(law[0], 1.0);
        assert_eq!(rest, 0.0);
    }
}
