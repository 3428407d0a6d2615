//! Probability weights φ on ℕ, their tails Φ and the series built from them.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{format_ratio, int, parse_ratio, pow, rat, Rational};

/// A probability weight on ℕ with exact rational masses.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PenaltyWeight {
    /// `masses[k] = φ(k)`; entries past the end are zero.
    Finite(Vec<Rational>),
    /// `φ(k) = (1-q) q^k`.
    Geometric { q: Rational },
}

/// Closed interval `[lo, hi]` known to contain a real value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl Enclosure {
    pub fn exact(v: Rational) -> Self {
        Enclosure { lo: v.clone(), hi: v }
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: &Rational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }
}

impl PenaltyWeight {
    pub fn finite(masses: Vec<Rational>) -> Result<Self> {
        if masses.iter().any(|m| m.is_negative()) {
            return Err(Error::InvalidWeight("negative mass".into()));
        }
        let total: Rational = masses.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidWeight(format!("masses sum to {}, not 1", format_ratio(&total))));
        }
        let mut masses = masses;
        while masses.last().is_some_and(|m| m.is_zero()) {
            masses.pop();
        }
        Ok(PenaltyWeight::Finite(masses))
    }

    pub fn geometric(q: Rational) -> Result<Self> {
        if !(q.is_positive() && q < Rational::one()) {
            return Err(Error::InvalidWeight(format!("geometric parameter {} outside (0,1)", format_ratio(&q))));
        }
        Ok(PenaltyWeight::Geometric { q })
    }

    /// Uniform on `{lo, ..., hi}`.
    pub fn uniform(lo: u32, hi: u32) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidWeight(format!("empty range {lo}..{hi}")));
        }
        let m = rat(1, i64::from(hi - lo + 1));
        let masses = (0..=hi).map(|k| if k >= lo { m.clone() } else { Rational::zero() }).collect();
        Self::finite(masses)
    }

    pub fn point(k: u32) -> Self {
        let mut masses = vec![Rational::zero(); k as usize + 1];
        masses[k as usize] = Rational::one();
        PenaltyWeight::Finite(masses)
    }

    /// Geometric weight restricted to `{0..=max}` and renormalised.
    pub fn truncated_geometric(q: Rational, max: u32) -> Result<Self> {
        Self::geometric(q.clone())?;
        let raw: Vec<Rational> = (0..=max).map(|k| pow(&q, k)).collect();
        let total: Rational = raw.iter().sum();
        Self::finite(raw.into_iter().map(|m| m / &total).collect())
    }

    /// Largest `k` with `φ(k) > 0`, `None` for unbounded support.
    pub fn max_support(&self) -> Option<u32> {
        match self {
            PenaltyWeight::Finite(m) => Some(m.len().saturating_sub(1) as u32),
            PenaltyWeight::Geometric { .. } => None,
        }
    }

    pub fn phi(&self, k: i64) -> Rational {
        if k < 0 {
            return Rational::zero();
        }
        match self {
            PenaltyWeight::Finite(m) => m.get(k as usize).cloned().unwrap_or_else(Rational::zero),
            PenaltyWeight::Geometric { q } => (Rational::one() - q) * pow(q, k as u32),
        }
    }

    /// `Φ(x) = Σ_{k ≥ x} φ(k)`.
    pub fn tail(&self, x: i64) -> Rational {
        if x <= 0 {
            return Rational::one();
        }
        match self {
            PenaltyWeight::Finite(m) => m.iter().skip(x as usize).sum(),
            PenaltyWeight::Geometric { q } => pow(q, x as u32),
        }
    }

    pub fn moment(&self, r: u32) -> Result<Rational> {
        if !(1..=2).contains(&r) {
            return Err(Error::InvalidParameter(format!("moment order {r} not in {{1,2}}")));
        }
        Ok(match self {
            PenaltyWeight::Finite(m) => m.iter().enumerate().map(|(k, p)| pow(&int(k as i64), r) * p).sum(),
            PenaltyWeight::Geometric { q } => {
                let one = Rational::one();
                if r == 1 {
                    q / (&one - q)
                } else {
                    q * (&one + q) / pow(&(&one - q), 2)
                }
            }
        })
    }

    /// `h(x) = Σ_{k ≥ x} φ(k)/k`, exact for finite support and enclosed to
    /// width ≤ 1e-15 for the geometric kind.
    pub fn aux_series_h(&self, x: i64) -> Result<Enclosure> {
        if x < 1 {
            return Err(Error::InvalidParameter(format!("h(x) needs x ≥ 1, got {x}")));
        }
        match self {
            PenaltyWeight::Finite(m) => {
                let v = (x as usize..m.len()).map(|k| &m[k] / int(k as i64)).sum();
                Ok(Enclosure::exact(v))
            }
            PenaltyWeight::Geometric { q } => {
                let tol = rat(1, 1_000_000_000_000_000);
                let one = Rational::one();
                let mut sum = Rational::zero();
                let mut qk = pow(q, x as u32);
                let mut k = x;
                loop {
                    sum += (&one - q) * &qk / int(k);
                    qk *= q;
                    // Σ_{j>k} (1-q) q^j / j ≤ q^{k+1} / (k+1)
                    let bound = &qk / int(k + 1);
                    if bound <= tol {
                        return Ok(Enclosure { hi: &sum + bound, lo: sum });
                    }
                    k += 1;
                }
            }
        }
    }

    pub fn phi_f64(&self, k: i64) -> f64 {
        crate::exact::to_f64(&self.phi(k))
    }

    pub fn tail_f64(&self, k: i64) -> f64 {
        crate::exact::to_f64(&self.tail(k))
    }

    /// Parses `k:p/q ...`, `geometric q=p/q`, or one of the shorthands
    /// `uniform:LO..HI`, `point:K`, `geometric:p/q`, `truncgeom:p/q:MAX`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: &str| Error::WeightParse(format!("{msg}: {s:?}"));
        let ratio = |t: &str| parse_ratio(t).ok_or_else(|| bad("expected an exact rational p/q"));
        let uint = |t: &str| t.trim().parse::<u32>().map_err(|_| bad("expected a non-negative integer"));

        if let Some(rest) = s.strip_prefix("geometric") {
            let rest = rest.trim_start_matches([':', ' ']).trim();
            let rest = rest.strip_prefix("q=").unwrap_or(rest);
            return Self::geometric(ratio(rest)?);
        }
        if let Some(rest) = s.strip_prefix("uniform:") {
            let (lo, hi) = rest.split_once("..").ok_or_else(|| bad("expected uniform:LO..HI"))?;
            return Self::uniform(uint(lo)?, uint(hi)?);
        }
        if let Some(rest) = s.strip_prefix("point:") {
            return Ok(Self::point(uint(rest)?));
        }
        if let Some(rest) = s.strip_prefix("truncgeom:") {
            let (q, max) = rest.rsplit_once(':').ok_or_else(|| bad("expected truncgeom:Q:MAX"))?;
            return Self::truncated_geometric(ratio(q)?, uint(max)?);
        }

        let mut masses: Vec<Rational> = Vec::new();
        for tok in s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let (k, p) = tok.split_once(':').ok_or_else(|| bad("expected k:p/q pairs"))?;
            let k = uint(k)? as usize;
            if masses.len() <= k {
                masses.resize(k + 1, Rational::zero());
            }
            if !masses[k].is_zero() {
                return Err(bad("repeated support point"));
            }
            masses[k] = ratio(p)?;
        }
        if masses.is_empty() {
            return Err(bad("empty weight"));
        }
        Self::finite(masses)
    }
}

impl fmt::Display for PenaltyWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyWeight::Geometric { q } => write!(f, "geometric q={}", format_ratio(q)),
            PenaltyWeight::Finite(m) => {
                let parts: Vec<String> = m
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(k, p)| format!("{k}:{}", format_ratio(p)))
                    .collect();
                f.write_str(&parts.join(" "))
            }
        }
    }
}

impl std::str::FromStr for PenaltyWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Non-negative test function ψ on ℕ used in next-zero conditional laws.
#[derive(Clone, Debug, PartialEq)]
pub enum SupportFn {
    /// ψ = φ.
    Weight(PenaltyWeight),
    /// ψ(k) = k φ(k).
    TimesK(PenaltyWeight),
    /// ψ = 1_{· = k}.
    Indicator(u32),
    /// `values[k] = ψ(k)`, zero past the end.
    Table(Vec<Rational>),
}

impl SupportFn {
    pub fn eval(&self, k: i64) -> Rational {
        if k < 0 {
            return Rational::zero();
        }
        match self {
            SupportFn::Weight(w) => w.phi(k),
            SupportFn::TimesK(w) => int(k) * w.phi(k),
            SupportFn::Indicator(j) => {
                if k == i64::from(*j) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            }
            SupportFn::Table(v) => v.get(k as usize).cloned().unwrap_or_else(Rational::zero),
        }
    }

    /// Largest `k` with possibly nonzero `ψ(k)`.
    pub fn max_support(&self) -> Option<u32> {
        match self {
            SupportFn::Weight(w) | SupportFn::TimesK(w) => w.max_support(),
            SupportFn::Indicator(j) => Some(*j),
            SupportFn::Table(v) => Some(v.len().saturating_sub(1) as u32),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::to_f64;

    fn uni() -> PenaltyWeight {
        PenaltyWeight::uniform(0, 3).unwrap()
    }

    #[test]
    fn tails() {
        assert_eq!(uni().tail(0), int(1));
        assert_eq!(uni().tail(2), rat(1, 2));
        assert_eq!(uni().tail(9), int(0));
        let g = PenaltyWeight::geometric(rat(1, 2)).unwrap();
        assert_eq!(g.tail(3), rat(1, 8));
    }

    #[test]
    fn tail_differences_are_masses() {
        for w in [uni(), PenaltyWeight::truncated_geometric(rat(1, 2), 6).unwrap()] {
            for x in 0..10 {
                assert_eq!(w.tail(x) - w.tail(x + 1), w.phi(x));
            }
        }
    }

    #[test]
    fn moments() {
        assert_eq!(uni().moment(1).unwrap(), rat(3, 2));
        assert_eq!(PenaltyWeight::point(0).moment(2).unwrap(), int(0));
        let g = PenaltyWeight::geometric(rat(1, 2)).unwrap();
        assert_eq!(g.moment(1).unwrap(), int(1));
        assert_eq!(g.moment(2).unwrap(), int(3));
        assert!(uni().moment(3).is_err());
    }

    #[test]
    fn geometric_moment_matches_partial_sums() {
        let q = rat(1, 2);
        let g = PenaltyWeight::geometric(q.clone()).unwrap();
        let mut partial = 0.0;
        for k in 0..200 {
            partial += k as f64 * g.phi_f64(k);
        }
        assert!((partial - to_f64(&g.moment(1).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn aux_series() {
        assert_eq!(PenaltyWeight::point(1).aux_series_h(1).unwrap(), Enclosure::exact(int(1)));
        assert_eq!(uni().aux_series_h(2).unwrap(), Enclosure::exact(rat(5, 24)));
        assert!(uni().aux_series_h(0).is_err());
        let g = PenaltyWeight::geometric(rat(1, 2)).unwrap();
        let e = g.aux_series_h(1).unwrap();
        assert!(e.width() <= rat(1, 1_000_000_000_000_000));
        // Σ_{k≥1} 2^{-k-1}/k = ln(2)/2
        let target = std::f64::consts::LN_2 / 2.0;
        assert!((to_f64(&e.lo) - target).abs() < 1e-14);
    }

    #[test]
    fn deficient_mass_rejected() {
        assert!(PenaltyWeight::finite(vec![rat(1, 2), rat(1, 4)]).is_err());
        assert!(PenaltyWeight::finite(vec![rat(3, 2), rat(-1, 2)]).is_err());
        assert!(PenaltyWeight::geometric(int(1)).is_err());
    }

    #[test]
    fn parse_forms() {
        assert_eq!(PenaltyWeight::parse("0:1/4 1:1/4 2:1/4 3:1/4").unwrap(), uni());
        assert_eq!(PenaltyWeight::parse("uniform:0..3").unwrap(), uni());
        assert_eq!(PenaltyWeight::parse("point:2").unwrap(), PenaltyWeight::point(2));
        assert_eq!(PenaltyWeight::parse("geometric q=1/2").unwrap(), PenaltyWeight::parse("geometric:1/2").unwrap());
        assert!(PenaltyWeight::parse("0:1/2 1:1/4").is_err());
        assert!(PenaltyWeight::parse("0:0.5 1:0.5").is_err());
        let w = PenaltyWeight::parse("truncgeom:1/2:4").unwrap();
        assert_eq!(PenaltyWeight::parse(&w.to_string()).unwrap(), w);
    }
}
