//! The penalisation martingales, their one-step check, stopped values and
//! the induced h-transform kernels.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{format_ratio, half_pow, int, rat, to_f64, Rational};
use crate::oracle::{EventSpec, PenaltyFunctional};
use crate::walk::{Field, FieldSet, Step, WalkState};
use crate::weight::PenaltyWeight;

#[derive(Clone, Debug, PartialEq)]
pub enum MartingaleFamily {
    /// `φ(S_n)(S_n - X_n) + Φ(S_n)`.
    OneSidedMax(PenaltyWeight),
    /// `½φ(S_{g_n})|X_n| + φ(S_n)(S_n - X_n⁺) + Φ(S_n)`.
    LastZeroMax(PenaltyWeight),
    /// Same process as `OneSidedMax`.
    NextZeroMax(PenaltyWeight),
    /// `φ(S*_{g_n})|X_n| + φ(S*_n)(S*_n - |X_n|) + Φ(S*_n)`.
    BilateralLastZero(PenaltyWeight),
    /// `cos(π/(a+b))^{-n} sin(π(a-X_n)/(a+b)) / sin(πa/(a+b))` while `-b < I_n, S_n < a`.
    CorridorTrig { a: u32, b: u32 },
    /// `cos(π/(2a))^{-n} sin(π(a-X_n)/(2a))` while `S*_n < a`.
    BarrierIndicator { a: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum MartingaleValue {
    Exact(Rational),
    Float(f64),
}

impl MartingaleValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            MartingaleValue::Exact(r) => to_f64(r),
            MartingaleValue::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            MartingaleValue::Exact(r) => Some(r),
            MartingaleValue::Float(_) => None,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            MartingaleValue::Exact(r) => r.is_positive(),
            MartingaleValue::Float(x) => *x > 0.0,
        }
    }

    fn mean(a: &MartingaleValue, b: &MartingaleValue) -> MartingaleValue {
        match (a, b) {
            (MartingaleValue::Exact(x), MartingaleValue::Exact(y)) => MartingaleValue::Exact((x + y) / int(2)),
            _ => MartingaleValue::Float(0.5 * (a.to_f64() + b.to_f64())),
        }
    }

    fn ratio_half(num: &MartingaleValue, den: &MartingaleValue) -> MartingaleValue {
        match (num, den) {
            (MartingaleValue::Exact(x), MartingaleValue::Exact(y)) => MartingaleValue::Exact(x / y / int(2)),
            _ => MartingaleValue::Float(0.5 * num.to_f64() / den.to_f64()),
        }
    }
}

impl fmt::Display for MartingaleValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MartingaleValue::Exact(r) => f.write_str(&format_ratio(r)),
            MartingaleValue::Float(x) => write!(f, "{x:.17e}"),
        }
    }
}

/// Stopping times with a closed-form stopped value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StoppingRule {
    /// `T_p`, with `S_{g_{T_p}} = pre_max`.
    HitLevel { p: i64, pre_max: i64 },
    /// `d_a`, with the relevant maximum at `d_a` equal to `max`.
    NextZero { max: i64 },
    /// `T*_p`, with `S*_{g_{T*_p}} = pre_max`.
    BilateralHit { p: i64, pre_max: i64 },
}

impl MartingaleFamily {
    /// The functional `G_p` whose penalisation produces this martingale.
    pub fn penalty(&self) -> PenaltyFunctional {
        match self {
            MartingaleFamily::OneSidedMax(w) => PenaltyFunctional::MaxWeight(w.clone()),
            MartingaleFamily::LastZeroMax(w) => PenaltyFunctional::LastZeroMaxWeight(w.clone()),
            MartingaleFamily::NextZeroMax(w) => PenaltyFunctional::NextZeroMaxWeight(w.clone()),
            MartingaleFamily::BilateralLastZero(w) => PenaltyFunctional::BilateralLastZeroWeight(w.clone()),
            MartingaleFamily::CorridorTrig { a, b } => PenaltyFunctional::CorridorIndicator(*a, *b),
            MartingaleFamily::BarrierIndicator { a } => PenaltyFunctional::BilateralIndicator(*a),
        }
    }

    pub fn name(&self) -> String {
        match self {
            MartingaleFamily::OneSidedMax(_) => "one-sided-max".into(),
            MartingaleFamily::LastZeroMax(_) => "last-zero-max".into(),
            MartingaleFamily::NextZeroMax(_) => "next-zero-max".into(),
            MartingaleFamily::BilateralLastZero(_) => "bilateral-last-zero".into(),
            MartingaleFamily::CorridorTrig { a, b } => format!("corridor:{a}:{b}"),
            MartingaleFamily::BarrierIndicator { a } => format!("barrier:{a}"),
        }
    }

    /// Parses `one-sided-max`, `last-zero-max`, `next-zero-max`,
    /// `bilateral-last-zero` (with `weight`), `corridor:A:B`, `barrier:A`.
    pub fn parse(name: &str, weight: Option<&PenaltyWeight>) -> Result<Self> {
        let need = || weight.cloned().ok_or_else(|| Error::InvalidParameter(format!("family {name} needs a weight")));
        let num =
            |t: &str| t.trim().parse::<u32>().map_err(|_| Error::InvalidParameter(format!("bad barrier in {name:?}")));
        let fam = match name {
            "one-sided-max" | "max" => MartingaleFamily::OneSidedMax(need()?),
            "last-zero-max" => MartingaleFamily::LastZeroMax(need()?),
            "next-zero-max" => MartingaleFamily::NextZeroMax(need()?),
            "bilateral-last-zero" => MartingaleFamily::BilateralLastZero(need()?),
            other => {
                if let Some(rest) = other.strip_prefix("corridor:") {
                    let (a, b) =
                        rest.split_once(':').ok_or_else(|| Error::InvalidParameter("expected corridor:A:B".into()))?;
                    MartingaleFamily::CorridorTrig { a: num(a)?, b: num(b)? }
                } else if let Some(rest) = other.strip_prefix("barrier:") {
                    MartingaleFamily::BarrierIndicator { a: num(rest)? }
                } else {
                    return Err(Error::InvalidParameter(format!("unknown family {other:?}")));
                }
            }
        };
        fam.validate()?;
        Ok(fam)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = match self {
            MartingaleFamily::CorridorTrig { a, b } => (*a, *b),
            MartingaleFamily::BarrierIndicator { a } => (*a, *a),
            _ => return Ok(()),
        };
        if a == 0 || b == 0 {
            return Err(Error::InvalidParameter("barriers must be ≥ 1".into()));
        }
        if a + b == 2 {
            // cos(π/2) = 0: the corridor {0} is left at the first step
            return Err(Error::InvalidParameter("corridor of width 2 has no surviving paths".into()));
        }
        Ok(())
    }

    pub fn weight(&self) -> Option<&PenaltyWeight> {
        match self {
            MartingaleFamily::OneSidedMax(w)
            | MartingaleFamily::LastZeroMax(w)
            | MartingaleFamily::NextZeroMax(w)
            | MartingaleFamily::BilateralLastZero(w) => Some(w),
            _ => None,
        }
    }

    /// Statistics the value depends on.
    pub fn fields(&self) -> FieldSet {
        match self {
            MartingaleFamily::OneSidedMax(_) | MartingaleFamily::NextZeroMax(_) => FieldSet::of(&[Field::S]),
            MartingaleFamily::LastZeroMax(_) => FieldSet::of(&[Field::SG]),
            MartingaleFamily::BilateralLastZero(_) => FieldSet::of(&[Field::SStarG]),
            MartingaleFamily::CorridorTrig { .. } => FieldSet::of(&[Field::N, Field::S, Field::I]),
            MartingaleFamily::BarrierIndicator { .. } => FieldSet::of(&[Field::N, Field::SStar]),
        }
        .closure()
    }

    /// Canonical representative of the states sharing this state's value
    /// and future.
    pub fn state_key(&self, st: &WalkState) -> WalkState {
        st.project(self.fields())
    }

    pub fn evaluate(&self, st: &WalkState) -> Result<MartingaleValue> {
        match self {
            MartingaleFamily::OneSidedMax(w) | MartingaleFamily::NextZeroMax(w) => {
                Ok(MartingaleValue::Exact(w.phi(st.s) * int(st.s - st.x) + w.tail(st.s)))
            }
            MartingaleFamily::LastZeroMax(w) => {
                let sg = st.s_g.ok_or(Error::UndefinedLastZero)?;
                let v = w.phi(sg) * int(st.x.abs()) / int(2) + w.phi(st.s) * int(st.s - st.x.max(0)) + w.tail(st.s);
                Ok(MartingaleValue::Exact(v))
            }
            MartingaleFamily::BilateralLastZero(w) => {
                let sg = st.s_star_g.ok_or(Error::UndefinedLastZero)?;
                let v =
                    w.phi(sg) * int(st.x.abs()) + w.phi(st.s_star) * int(st.s_star - st.x.abs()) + w.tail(st.s_star);
                Ok(MartingaleValue::Exact(v))
            }
            MartingaleFamily::CorridorTrig { a, b } => {
                self.validate()?;
                if st.s >= i64::from(*a) || st.i <= -i64::from(*b) {
                    return Ok(MartingaleValue::Float(0.0));
                }
                let w = f64::from(a + b);
                let af = f64::from(*a);
                let v = (PI / w).cos().powi(-(st.n as i32)) * (PI * (af - st.x as f64) / w).sin() / (PI * af / w).sin();
                Ok(MartingaleValue::Float(v))
            }
            MartingaleFamily::BarrierIndicator { a } => {
                self.validate()?;
                if st.s_star >= i64::from(*a) {
                    return Ok(MartingaleValue::Float(0.0));
                }
                let w = f64::from(2 * a);
                let v = (PI / w).cos().powi(-(st.n as i32)) * (PI * (f64::from(*a) - st.x as f64) / w).sin();
                Ok(MartingaleValue::Float(v))
            }
        }
    }

    pub fn one_step_mean(&self, st: &WalkState) -> Result<MartingaleValue> {
        let up = self.evaluate(&st.step(Step::Up))?;
        let down = self.evaluate(&st.step(Step::Down))?;
        Ok(MartingaleValue::mean(&up, &down))
    }

    /// `(p_up, p_down)` of the h-transform `p_± = ½ M(state±) / M(state)`.
    pub fn q_kernel(&self, st: &WalkState) -> Result<(MartingaleValue, MartingaleValue)> {
        let here = self.evaluate(st)?;
        if !here.is_positive() {
            return Err(Error::AbsorbedKernel(here.to_string()));
        }
        let up = self.evaluate(&st.step(Step::Up))?;
        let down = self.evaluate(&st.step(Step::Down))?;
        Ok((MartingaleValue::ratio_half(&up, &here), MartingaleValue::ratio_half(&down, &here)))
    }

    /// Value at a stopping time in the closed form obtained by substituting
    /// the state at that time.
    pub fn stopped_value(&self, rule: StoppingRule) -> Result<Rational> {
        let unsupported = || Error::UnsupportedStoppingRule(format!("{} at {rule:?}", self.name()));
        match (self, rule) {
            (MartingaleFamily::LastZeroMax(w), StoppingRule::HitLevel { p, pre_max }) => {
                Ok(w.phi(pre_max) * int(p) / int(2) + w.tail(p))
            }
            (
                MartingaleFamily::LastZeroMax(w) | MartingaleFamily::BilateralLastZero(w),
                StoppingRule::NextZero { max },
            ) => Ok(w.phi(max) * int(max) + w.tail(max)),
            (MartingaleFamily::BilateralLastZero(w), StoppingRule::BilateralHit { p, pre_max }) => {
                Ok(w.phi(pre_max) * int(p) + w.tail(p))
            }
            _ => Err(unsupported()),
        }
    }

    /// Deterministic factor `cos(π/w)^{-n}` of the trigonometric families,
    /// 1 for the others.
    pub fn time_scale(&self, n: u32) -> f64 {
        let w = match self {
            MartingaleFamily::CorridorTrig { a, b } => f64::from(a + b),
            MartingaleFamily::BarrierIndicator { a } => f64::from(2 * a),
            _ => return 1.0,
        };
        (PI / w).cos().powi(-(n as i32))
    }
}

/// Result of one state check in a martingale sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub family: String,
    pub n: u32,
    pub x: i64,
    pub s: i64,
    pub i: i64,
    pub s_star: i64,
    pub s_g: Option<i64>,
    pub s_star_g: Option<i64>,
    pub lhs: String,
    pub rhs: String,
    pub diff: f64,
    pub pass: bool,
}

impl VerifyRow {
    pub const CSV_HEADER: &'static str = "family,n,x,s,i,s_star,s_g,s_star_g,lhs,rhs,diff,verdict";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<i64>| v.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.3e},{}",
            self.family,
            self.n,
            self.x,
            self.s,
            self.i,
            self.s_star,
            opt(self.s_g),
            opt(self.s_star_g),
            self.lhs,
            self.rhs,
            self.diff,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

/// Summary of a martingale sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub family: String,
    pub depth: u32,
    pub states_checked: usize,
    /// Worst one-step discrepancy; for the trigonometric families it is
    /// measured after dividing out `cos^{-n}`.
    pub worst_diff: f64,
    /// `"0/1"` when every exact check is an identity.
    pub worst_exact_diff: Option<String>,
    pub all_positive: bool,
    pub kernels_ok: bool,
    pub pass: bool,
    #[serde(skip)]
    pub rows: Vec<VerifyRow>,
}

/// Tolerance for the trigonometric families on the `cos^{-n}`-free scale.
pub const TRIG_TOL: f64 = 1e-12;

/// Checks `one_step_mean = evaluate` and kernel normalisation on every
/// distinct state reachable from 0 in at most `depth` steps.
pub fn verify_martingale(family: &MartingaleFamily, depth: u32, keep_rows: bool) -> Result<VerifyReport> {
    family.validate()?;
    let mut layer: BTreeSet<WalkState> = BTreeSet::from([family.state_key(&WalkState::initial(0))]);
    let mut report = VerifyReport {
        family: family.name(),
        depth,
        states_checked: 0,
        worst_diff: 0.0,
        worst_exact_diff: None,
        all_positive: true,
        kernels_ok: true,
        pass: true,
        rows: Vec::new(),
    };
    let mut worst_exact = Rational::zero();
    let mut any_exact = false;
    for n in 0..=depth {
        let mut next = BTreeSet::new();
        for st in &layer {
            let here = family.evaluate(st)?;
            let mean = family.one_step_mean(st)?;
            let (diff, pass) = match (&here, &mean) {
                (MartingaleValue::Exact(h), MartingaleValue::Exact(m)) => {
                    any_exact = true;
                    let d = (h - m).abs();
                    let pass = d.is_zero();
                    if d > worst_exact {
                        worst_exact = d.clone();
                    }
                    (to_f64(&d), pass)
                }
                _ => {
                    let d = (here.to_f64() - mean.to_f64()).abs() / family.time_scale(n);
                    (d, d <= TRIG_TOL)
                }
            };
            let positive = match &here {
                MartingaleValue::Exact(r) => !r.is_negative(),
                MartingaleValue::Float(x) => *x >= -TRIG_TOL * family.time_scale(n),
            };
            report.all_positive &= positive;
            if here.is_positive() {
                let (pu, pd) = family.q_kernel(st)?;
                let ok = match (&pu, &pd) {
                    (MartingaleValue::Exact(u), MartingaleValue::Exact(d)) => {
                        (u + d).is_one() && !u.is_negative() && !d.is_negative()
                    }
                    _ => {
                        let (u, d) = (pu.to_f64(), pd.to_f64());
                        (u + d - 1.0).abs() <= TRIG_TOL && u >= -TRIG_TOL && d >= -TRIG_TOL
                    }
                };
                report.kernels_ok &= ok;
                for s in Step::BOTH {
                    next.insert(family.state_key(&st.step(s)));
                }
            } else if !matches!(here, MartingaleValue::Exact(_)) {
                // absorbed trigonometric state: nothing further to check
            } else {
                for s in Step::BOTH {
                    next.insert(family.state_key(&st.step(s)));
                }
            }
            report.states_checked += 1;
            report.worst_diff = report.worst_diff.max(diff);
            report.pass &= pass;
            if keep_rows {
                report.rows.push(VerifyRow {
                    family: family.name(),
                    n,
                    x: st.x,
                    s: st.s,
                    i: st.i,
                    s_star: st.s_star,
                    s_g: st.s_g,
                    s_star_g: st.s_star_g,
                    lhs: mean.to_string(),
                    rhs: here.to_string(),
                    diff,
                    pass,
                });
            }
        }
        layer = next;
    }
    if any_exact {
        report.worst_exact_diff = Some(format_ratio(&worst_exact));
    }
    report.pass &= report.all_positive && report.kernels_ok;
    Ok(report)
}

/// Paths of length `n` above which [`q_event_mass`] refuses to enumerate.
pub const EVENT_MASS_CAP: u32 = 22;

/// `Q(Λ) = E[1_Λ M_n]` for `Λ ∈ F_n`, over the `2^n` paths from 0; exact
/// for the weighted families.
pub fn q_event_mass(family: &MartingaleFamily, event: &EventSpec, n: u32) -> Result<MartingaleValue> {
    if n > EVENT_MASS_CAP {
        return Err(Error::HorizonTooLarge { horizon: n, cap: EVENT_MASS_CAP });
    }
    let mut exact = Rational::zero();
    let mut approx = 0.0f64;
    let mut all_exact = true;
    let mut steps = Vec::with_capacity(n as usize);
    for bits in 0u64..1 << n {
        steps.clear();
        steps.extend((0..n).map(|i| if bits >> i & 1 == 1 { Step::Up } else { Step::Down }));
        let st = steps.iter().fold(WalkState::initial(0), |s, x| s.step(*x));
        if !event.holds(&steps, &st) {
            continue;
        }
        let v = family.evaluate(&st)?;
        match v.exact() {
            Some(r) => exact += r,
            None => all_exact = false,
        }
        approx += v.to_f64();
    }
    Ok(if all_exact {
        MartingaleValue::Exact(exact * half_pow(n))
    } else {
        MartingaleValue::Float(approx * 0.5f64.powi(n as i32))
    })
}

/// `Q(S_∞ ≥ p)` by optional stopping at `T_p`, from the law of `S_{g_{T_p}}`
/// (uniform on `{0..p-1}`).
pub fn q_hit_level_mass(family: &MartingaleFamily, p: i64) -> Result<Rational> {
    let mut acc = Rational::zero();
    for k in 0..p {
        acc += family.stopped_value(StoppingRule::HitLevel { p, pre_max: k })? * rat(1, p);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni() -> PenaltyWeight {
        PenaltyWeight::uniform(0, 3).unwrap()
    }

    #[test]
    fn unit_at_origin() {
        let o = WalkState::initial(0);
        for f in [
            MartingaleFamily::OneSidedMax(uni()),
            MartingaleFamily::LastZeroMax(uni()),
            MartingaleFamily::NextZeroMax(uni()),
            MartingaleFamily::BilateralLastZero(uni()),
        ] {
            assert_eq!(f.evaluate(&o).unwrap(), MartingaleValue::Exact(Rational::one()));
        }
        let c = MartingaleFamily::CorridorTrig { a: 3, b: 2 };
        assert!((c.evaluate(&o).unwrap().to_f64() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn last_zero_after_one_step() {
        let f = MartingaleFamily::LastZeroMax(uni());
        let st = WalkState::initial(0).step(Step::Up);
        assert_eq!(f.evaluate(&st).unwrap(), MartingaleValue::Exact(rat(7, 8)));
        assert_eq!(f.one_step_mean(&WalkState::initial(0)).unwrap(), MartingaleValue::Exact(int(1)));
    }

    #[test]
    fn corridor_values_and_kernel() {
        let f = MartingaleFamily::CorridorTrig { a: 2, b: 2 };
        let st = WalkState::initial(0).step(Step::Up).step(Step::Down);
        assert!((f.evaluate(&st).unwrap().to_f64() - 2.0).abs() < 1e-12);
        let (u, _) = f.q_kernel(&WalkState::initial(0)).unwrap();
        assert!((u.to_f64() - 0.5).abs() < 1e-12);
        let (u, d) = f.q_kernel(&WalkState::initial(0).step(Step::Up)).unwrap();
        assert!(u.to_f64().abs() < 1e-12);
        assert!((d.to_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn width_two_corridor_rejected() {
        assert!(MartingaleFamily::CorridorTrig { a: 1, b: 1 }.validate().is_err());
        assert!(MartingaleFamily::BarrierIndicator { a: 1 }.validate().is_err());
    }

    #[test]
    fn stopped_values_match_evaluation() {
        let w = uni();
        let f = MartingaleFamily::LastZeroMax(w.clone());
        // a state at T_3 with S_{g} = 1: 0 + + - - + + +
        let path = [Step::Up, Step::Down, Step::Up, Step::Up, Step::Up];
        let st = path.iter().fold(WalkState::initial(0), |s, x| s.step(*x));
        assert_eq!((st.x, st.s_g), (3, Some(1)));
        let v = f.stopped_value(StoppingRule::HitLevel { p: 3, pre_max: 1 }).unwrap();
        assert_eq!(MartingaleValue::Exact(v), f.evaluate(&st).unwrap());
        assert!(MartingaleFamily::OneSidedMax(w).stopped_value(StoppingRule::NextZero { max: 1 }).is_err());
    }

    #[test]
    fn q_mass_of_infinite_max() {
        let w = uni();
        let f = MartingaleFamily::LastZeroMax(w.clone());
        for p in 1..8 {
            assert_eq!(q_hit_level_mass(&f, p).unwrap(), crate::laws::q_max_tail(&w, p));
        }
        assert_eq!(q_hit_level_mass(&f, 10).unwrap(), rat(1, 2));
    }
}
