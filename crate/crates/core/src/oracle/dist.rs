use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

use crate::exact::{format_ratio, half_pow, Rational};

/// Finite law with exact rational masses. `residual` holds whatever mass is
/// not listed (truncated or killed), so `total() + residual = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDist {
    pub labels: Vec<String>,
    pub entries: BTreeMap<Vec<i64>, Rational>,
    pub residual: Rational,
}

impl ExactDist {
    pub fn new(labels: Vec<String>) -> Self {
        ExactDist { labels, entries: BTreeMap::new(), residual: Rational::zero() }
    }

    /// Law from path counts over `2^n` equally likely paths.
    pub fn from_counts(labels: Vec<String>, counts: &BTreeMap<Vec<i64>, u128>, n: u32) -> Self {
        let unit = half_pow(n);
        let mut d = ExactDist::new(labels);
        let mut total: u128 = 0;
        for (k, c) in counts {
            if *c > 0 {
                d.entries.insert(k.clone(), Rational::from_integer((*c).into()) * &unit);
                total += c;
            }
        }
        d.residual = Rational::one() - Rational::from_integer(total.into()) * unit;
        d
    }

    pub fn add(&mut self, key: Vec<i64>, mass: Rational) {
        if mass.is_zero() {
            return;
        }
        *self.entries.entry(key).or_insert_with(Rational::zero) += mass;
    }

    pub fn get(&self, key: &[i64]) -> Rational {
        self.entries.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total(&self) -> Rational {
        self.entries.values().sum()
    }

    /// Law of one coordinate.
    pub fn marginal(&self, idx: usize) -> ExactDist {
        let mut d = ExactDist::new(vec![self.labels[idx].clone()]);
        for (k, p) in &self.entries {
            d.add(vec![k[idx]], p.clone());
        }
        d.residual = self.residual.clone();
        d
    }

    /// Sub-law restricted to keys satisfying `keep`; the rest goes to the residual.
    pub fn restrict(&self, keep: impl Fn(&[i64]) -> bool) -> ExactDist {
        let mut d = ExactDist::new(self.labels.clone());
        d.residual = self.residual.clone();
        for (k, p) in &self.entries {
            if keep(k) {
                d.entries.insert(k.clone(), p.clone());
            } else {
                d.residual += p;
            }
        }
        d
    }

    pub fn expect(&self, f: impl Fn(&[i64]) -> Rational) -> Rational {
        self.entries.iter().map(|(k, p)| f(k) * p).sum()
    }

    pub fn is_consistent(&self) -> bool {
        self.entries.values().all(|p| *p >= Rational::zero())
            && self.residual >= Rational::zero()
            && self.total() + &self.residual == Rational::one()
    }

    fn key_text(k: &[i64]) -> String {
        k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    }

    /// `{"labels": [...], "entries": {"k1,k2": "num/den", ...}, "residual": "num/den"}`.
    pub fn to_json(&self) -> Value {
        let mut entries = Map::new();
        for (k, p) in &self.entries {
            entries.insert(Self::key_text(k), Value::String(format_ratio(p)));
        }
        json!({
            "labels": self.labels,
            "entries": entries,
            "residual": format_ratio(&self.residual),
        })
    }

    /// Columns: one per label, then numerator and denominator.
    pub fn to_csv(&self) -> String {
        let mut out = self.labels.join(",");
        out.push_str(",numerator,denominator\n");
        for (k, p) in &self.entries {
            out.push_str(&format!("{},{},{}\n", Self::key_text(k), p.numer(), p.denom()));
        }
        out
    }
}
