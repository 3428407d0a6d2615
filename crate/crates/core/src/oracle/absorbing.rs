//! Exact absorption probabilities of finite Markov chains by sparse
//! Gaussian elimination over the rationals.

use std::collections::{BTreeMap, VecDeque};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::Rational;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome<S, L> {
    Move(S),
    Absorb(L),
}

/// One-step law of a transient state.
pub type StepLaw<S, L> = Vec<(Rational, Outcome<S, L>)>;

/// Transient part of an absorbing chain, discovered from a start state.
///
/// States are eliminated in their `Ord` order, so keys whose ordering follows
/// the chain's geometry keep the fill-in small.
pub struct AbsorbingChain<S: Ord + Clone, L: Ord + Clone> {
    states: Vec<S>,
    index: BTreeMap<S, usize>,
    rows: Vec<Vec<(Rational, Outcome<usize, L>)>>,
}

impl<S: Ord + Clone, L: Ord + Clone> AbsorbingChain<S, L> {
    /// Explores every state reachable from `start`. `kernel` returns the
    /// one-step law; missing mass is an error.
    pub fn explore(start: S, kernel: impl Fn(&S) -> StepLaw<S, L>, max_states: usize) -> Result<Self> {
        let mut seen: BTreeMap<S, StepLaw<S, L>> = BTreeMap::new();
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            if seen.contains_key(&s) {
                continue;
            }
            let out = kernel(&s);
            let mass: Rational = out.iter().map(|(p, _)| p).sum();
            if !mass.is_one() {
                return Err(Error::InconsistentState("kernel mass differs from 1".into()));
            }
            for (_, o) in &out {
                if let Outcome::Move(t) = o {
                    if !seen.contains_key(t) {
                        queue.push_back(t.clone());
                    }
                }
            }
            seen.insert(s, out);
            if seen.len() > max_states {
                return Err(Error::InvalidParameter(format!("absorbing chain exceeds {max_states} transient states")));
            }
        }
        let states: Vec<S> = seen.keys().cloned().collect();
        let index: BTreeMap<S, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let rows = seen
            .into_values()
            .map(|out| {
                out.into_iter()
                    .map(|(p, o)| {
                        let o = match o {
                            Outcome::Move(t) => Outcome::Move(index[&t]),
                            Outcome::Absorb(l) => Outcome::Absorb(l),
                        };
                        (p, o)
                    })
                    .collect()
            })
            .collect();
        Ok(AbsorbingChain { states, index, rows })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Absorption law from `start` (which must be a discovered state).
    pub fn absorption_from(&self, start: &S) -> Result<BTreeMap<L, Rational>> {
        let n = self.states.len();
        let target =
            *self.index.get(start).ok_or_else(|| Error::InvalidParameter("start state not in chain".into()))?;

        // (I - Q) h = R, one column of R per absorbing label.
        let mut a: Vec<BTreeMap<usize, Rational>> = vec![BTreeMap::new(); n];
        let mut rhs: Vec<BTreeMap<L, Rational>> = vec![BTreeMap::new(); n];
        for (i, row) in self.rows.iter().enumerate() {
            *a[i].entry(i).or_insert_with(Rational::zero) += Rational::one();
            for (p, o) in row {
                match o {
                    Outcome::Move(j) => *a[i].entry(*j).or_insert_with(Rational::zero) -= p,
                    Outcome::Absorb(l) => *rhs[i].entry(l.clone()).or_insert_with(Rational::zero) += p,
                }
            }
            a[i].retain(|_, v| !v.is_zero());
        }

        // Forward elimination without pivoting; I - Q is a nonsingular M-matrix.
        for i in 0..n {
            // fill-in lands right of j, so taking the smallest column each time clears it
            while let Some(j) = a[i].range(..i).next().map(|(j, _)| *j) {
                let factor = a[i].remove(&j).expect("column just found");
                let (head, tail) = a.split_at_mut(i);
                let pivot_row = &head[j];
                for (k, v) in pivot_row.range(j + 1..) {
                    let e = tail[0].entry(*k).or_insert_with(Rational::zero);
                    *e -= &factor * v;
                }
                tail[0].retain(|_, v| !v.is_zero());
                let (rh, rt) = rhs.split_at_mut(i);
                for (l, v) in &rh[j] {
                    let e = rt[0].entry(l.clone()).or_insert_with(Rational::zero);
                    *e -= &factor * v;
                }
            }
            let d = a[i].get(&i).cloned().ok_or(Error::SingularSystem)?;
            if d.is_zero() {
                return Err(Error::SingularSystem);
            }
            if !d.is_one() {
                for v in a[i].values_mut() {
                    *v /= &d;
                }
                for v in rhs[i].values_mut() {
                    *v /= &d;
                }
            }
        }

        // Back substitution, stopping once the start row is solved.
        let mut sol: Vec<Option<BTreeMap<L, Rational>>> = vec![None; n];
        for i in (target..n).rev() {
            let mut x = std::mem::take(&mut rhs[i]);
            for (k, v) in a[i].range(i + 1..) {
                let xk = sol[*k].as_ref().expect("upper entries are solved first");
                for (l, w) in xk {
                    let e = x.entry(l.clone()).or_insert_with(Rational::zero);
                    *e -= v * w;
                }
            }
            x.retain(|_, v| !v.is_zero());
            sol[i] = Some(x);
        }
        Ok(sol[target].take().unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn gamblers_ruin_on_small_interval() {
        // walk on {1..4}, absorbed at 0 or 5
        let chain = AbsorbingChain::explore(
            2i64,
            |&x| {
                let step = |y: i64| {
                    if y == 0 || y == 5 {
                        Outcome::Absorb(y)
                    } else {
                        Outcome::Move(y)
                    }
                };
                vec![(rat(1, 2), step(x + 1)), (rat(1, 2), step(x - 1))]
            },
            100,
        )
        .unwrap();
        let law = chain.absorption_from(&2).unwrap();
        assert_eq!(law[&5], rat(2, 5));
        assert_eq!(law[&0], rat(3, 5));
    }
}
