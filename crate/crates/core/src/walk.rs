//! Paths of the nearest-neighbour walk on ℤ and the running statistics every
//! martingale and penalty functional is built from.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    Up,
    Down,
}

impl Step {
    pub fn value(self) -> i64 {
        match self {
            Step::Up => 1,
            Step::Down => -1,
        }
    }

    pub const BOTH: [Step; 2] = [Step::Up, Step::Down];
}

impl TryFrom<i64> for Step {
    type Error = Error;

    fn try_from(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Step::Up),
            -1 => Ok(Step::Down),
            other => Err(Error::InvalidParameter(format!("step must be ±1, got {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Path {
    pub start: i64,
    pub steps: Vec<Step>,
}

impl Path {
    pub fn new(start: i64) -> Self {
        Path { start, steps: Vec::new() }
    }

    pub fn from_steps(start: i64, steps: impl IntoIterator<Item = Step>) -> Self {
        Path { start, steps: steps.into_iter().collect() }
    }

    /// Parses `+-+` style step strings.
    pub fn parse_steps(start: i64, s: &str) -> Result<Self> {
        let steps = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '+' | 'u' | 'U' => Ok(Step::Up),
                '-' | 'd' | 'D' => Ok(Step::Down),
                other => Err(Error::InvalidParameter(format!("bad step character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Path { start, steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `positions()[k] = start + (sum of the first k steps)`, length `len() + 1`.
    pub fn positions(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.steps.len() + 1);
        let mut x = self.start;
        out.push(x);
        for s in &self.steps {
            x += s.value();
            out.push(x);
        }
        out
    }

    pub fn end(&self) -> i64 {
        self.start + self.steps.iter().map(|s| s.value()).sum::<i64>()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.start)?;
        for s in &self.steps {
            f.write_str(if *s == Step::Up { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Sufficient statistics of a path prefix.
///
/// `s_g`, `s_star_g` and `g` refer to the last visit to 0 and are `None`
/// until the path has visited 0. A path started at 0 counts its time-0 visit,
/// so `gamma = 1` and `g = Some(0)` initially.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WalkState {
    pub n: u32,
    pub x: i64,
    pub s: i64,
    pub i: i64,
    pub s_star: i64,
    pub s_g: Option<i64>,
    pub s_star_g: Option<i64>,
    pub gamma: u32,
    pub g: Option<u32>,
}

impl WalkState {
    pub fn initial(start: i64) -> Self {
        let at_zero = start == 0;
        WalkState {
            n: 0,
            x: start,
            s: start,
            i: start,
            s_star: start.abs(),
            s_g: at_zero.then_some(start),
            s_star_g: at_zero.then_some(0),
            gamma: u32::from(at_zero),
            g: at_zero.then_some(0),
        }
    }

    /// Pitman statistic `2S - X`.
    pub fn r(&self) -> i64 {
        2 * self.s - self.x
    }

    pub fn step(&self, step: Step) -> Self {
        let x = self.x + step.value();
        let s = self.s.max(x);
        let s_star = self.s_star.max(x.abs());
        let mut next = WalkState { n: self.n + 1, x, s, i: self.i.min(x), s_star, ..*self };
        if x == 0 {
            next.g = Some(next.n);
            next.gamma += 1;
            next.s_g = Some(s);
            next.s_star_g = Some(s_star);
        }
        next
    }

    /// Recomputes every statistic from the raw positions, without going
    /// through [`WalkState::step`].
    pub fn from_path(path: &Path) -> Self {
        let pos = path.positions();
        let n = path.len();
        let x = pos[n];
        let s = *pos.iter().max().unwrap();
        let i = *pos.iter().min().unwrap();
        let s_star = pos.iter().map(|p| p.abs()).max().unwrap();
        let zeros: Vec<usize> = (0..=n).filter(|&k| pos[k] == 0).collect();
        let g = zeros.last().copied();
        let s_g = g.map(|g| *pos[..=g].iter().max().unwrap());
        let s_star_g = g.map(|g| pos[..=g].iter().map(|p| p.abs()).max().unwrap());
        WalkState { n: n as u32, x, s, i, s_star, s_g, s_star_g, gamma: zeros.len() as u32, g: g.map(|g| g as u32) }
    }

    pub fn field(&self, f: Field) -> i64 {
        let opt = |v: Option<i64>| v.unwrap_or(-1);
        match f {
            Field::N => self.n as i64,
            Field::X => self.x,
            Field::S => self.s,
            Field::I => self.i,
            Field::SStar => self.s_star,
            Field::SG => opt(self.s_g),
            Field::SStarG => opt(self.s_star_g),
            Field::Gamma => self.gamma as i64,
            Field::G => opt(self.g.map(|g| g as i64)),
            Field::R => self.r(),
        }
    }

    /// Keeps the fields of `keep` (closed under the update rule) and resets
    /// the others, so that states differing only in ignored statistics merge.
    pub fn project(&self, keep: FieldSet) -> Self {
        let keep = keep.closure();
        WalkState {
            n: if keep.contains(Field::N) { self.n } else { 0 },
            x: self.x,
            s: if keep.contains(Field::S) { self.s } else { 0 },
            i: if keep.contains(Field::I) { self.i } else { 0 },
            s_star: if keep.contains(Field::SStar) { self.s_star } else { 0 },
            s_g: if keep.contains(Field::SG) { self.s_g } else { None },
            s_star_g: if keep.contains(Field::SStarG) { self.s_star_g } else { None },
            gamma: if keep.contains(Field::Gamma) { self.gamma } else { 0 },
            g: if keep.contains(Field::G) { self.g } else { None },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    N,
    X,
    S,
    I,
    SStar,
    SG,
    SStarG,
    Gamma,
    G,
    R,
}

impl Field {
    pub const ALL: [Field; 10] = [
        Field::N,
        Field::X,
        Field::S,
        Field::I,
        Field::SStar,
        Field::SG,
        Field::SStarG,
        Field::Gamma,
        Field::G,
        Field::R,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Field::N => "n",
            Field::X => "x",
            Field::S => "s",
            Field::I => "i",
            Field::SStar => "s_star",
            Field::SG => "s_g",
            Field::SStarG => "s_star_g",
            Field::Gamma => "gamma",
            Field::G => "g",
            Field::R => "r",
        }
    }

    pub fn parse(s: &str) -> Option<Field> {
        let s = s.trim().to_ascii_lowercase();
        Field::ALL.into_iter().find(|f| f.name() == s).or(match s.as_str() {
            "sstar" | "s*" => Some(Field::SStar),
            "sg" => Some(Field::SG),
            "sstarg" | "s*g" => Some(Field::SStarG),
            _ => None,
        })
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }

    /// Fields whose update needs this one's previous value.
    fn depends_on(self) -> &'static [Field] {
        match self {
            Field::N | Field::X => &[],
            Field::S | Field::I | Field::SStar | Field::Gamma => &[],
            Field::SG => &[Field::S],
            Field::SStarG => &[Field::SStar],
            Field::G => &[Field::N],
            Field::R => &[Field::S],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct FieldSet(u16);

impl FieldSet {
    pub fn empty() -> Self {
        FieldSet(0)
    }

    pub fn of(fields: &[Field]) -> Self {
        fields.iter().fold(FieldSet(0), |acc, f| acc.with(*f))
    }

    pub fn with(self, f: Field) -> Self {
        FieldSet(self.0 | f.bit())
    }

    pub fn union(self, other: FieldSet) -> Self {
        FieldSet(self.0 | other.0)
    }

    pub fn contains(self, f: Field) -> bool {
        self.0 & f.bit() != 0
    }

    /// Smallest superset closed under the one-step update rule.
    pub fn closure(self) -> Self {
        let mut set = self.with(Field::X);
        loop {
            let next = Field::ALL
                .iter()
                .filter(|f| set.contains(**f))
                .fold(set, |acc, f| f.depends_on().iter().fold(acc, |a, d| a.with(*d)));
            if next == set {
                return set;
            }
            set = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_up_step_from_zero() {
        let st = WalkState::initial(0).step(Step::Up);
        assert_eq!((st.x, st.s, st.i, st.s_g, st.gamma), (1, 1, 0, Some(0), 1));
        assert_eq!(st.g, Some(0));
    }

    #[test]
    fn return_to_zero_updates_last_zero_fields() {
        let st = WalkState::initial(0).step(Step::Up).step(Step::Down);
        assert_eq!(st.x, 0);
        assert_eq!(st.gamma, 2);
        assert_eq!(st.g, Some(2));
        assert_eq!(st.s_g, Some(1));
        assert_eq!(st.s_star_g, Some(1));
    }

    #[test]
    fn off_zero_start_has_no_last_zero() {
        let st = WalkState::initial(3).step(Step::Down);
        assert_eq!(st.g, None);
        assert_eq!(st.s_g, None);
        assert_eq!(st.gamma, 0);
        assert_eq!((st.s, st.i, st.s_star), (3, 2, 3));
    }

    #[test]
    fn exhaustive_incremental_matches_recomputed() {
        for len in 0..=12u32 {
            for bits in 0u32..(1 << len) {
                let steps: Vec<Step> =
                    (0..len).map(|j| if bits >> j & 1 == 1 { Step::Up } else { Step::Down }).collect();
                let path = Path::from_steps(0, steps.iter().copied());
                let inc = steps.iter().fold(WalkState::initial(0), |st, s| st.step(*s));
                assert_eq!(inc, WalkState::from_path(&path), "path {path}");
            }
        }
    }

    #[test]
    fn closure_pulls_in_dependencies() {
        let c = FieldSet::of(&[Field::SG]).closure();
        assert!(c.contains(Field::S) && c.contains(Field::X));
        assert!(!c.contains(Field::I));
        let c = FieldSet::of(&[Field::G]).closure();
        assert!(c.contains(Field::N));
    }

    proptest! {
        #[test]
        fn random_paths_match_recomputation(start in -3i64..=3, steps in proptest::collection::vec(any::<bool>(), 0..40)) {
            let steps: Vec<Step> = steps.into_iter().map(|b| if b { Step::Up } else { Step::Down }).collect();
            let path = Path::from_steps(start, steps.iter().copied());
            let inc = steps.iter().fold(WalkState::initial(start), |st, s| st.step(*s));
            let rec = WalkState::from_path(&path);
            prop_assert_eq!(inc, rec);
            prop_assert!(inc.i <= inc.x && inc.x <= inc.s);
            prop_assert_eq!(inc.s_star, inc.s.max(-inc.i));
            if start >= 0 {
                prop_assert!(inc.r() >= inc.x.abs());
            }
            if let (Some(sg), Some(ssg)) = (inc.s_g, inc.s_star_g) {
                prop_assert!(sg <= inc.s && ssg <= inc.s_star);
            }
        }

        #[test]
        fn one_step_moves_at_most_one_extremum(steps in proptest::collection::vec(any::<bool>(), 1..30)) {
            let mut st = WalkState::initial(0);
            for b in steps {
                let next = st.step(if b { Step::Up } else { Step::Down });
                let ds = next.s - st.s;
                let di = st.i - next.i;
                prop_assert!(ds == 0 || di == 0);
                prop_assert!(ds <= 1 && di <= 1);
                st = next;
            }
        }

        #[test]
        fn projection_commutes_with_step(steps in proptest::collection::vec(any::<bool>(), 0..30)) {
            let keep = FieldSet::of(&[Field::SG]);
            let mut full = WalkState::initial(0);
            let mut proj = full.project(keep);
            for b in steps {
                let s = if b { Step::Up } else { Step::Down };
                full = full.step(s);
                proj = proj.step(s).project(keep);
                prop_assert_eq!(full.project(keep), proj);
            }
        }
    }
}
