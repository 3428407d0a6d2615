use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use penwalk::exact::{format_ratio, to_f64};
use penwalk::Rational;

use crate::Usage;

/// Inclusive integer range `LO..HI`, or a single value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub lo: i64,
    pub hi: i64,
}

impl Grid {
    pub fn one(v: i64) -> Self {
        Grid { lo: v, hi: v }
    }

    pub fn values(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }

    pub fn len(&self) -> u64 {
        (self.hi - self.lo + 1).max(0) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let int = |t: &str| t.trim().parse::<i64>().map_err(|_| format!("expected an integer or LO..HI, got {s:?}"));
        let g = match s.split_once("..") {
            Some((lo, hi)) => Grid { lo: int(lo)?, hi: int(hi.trim_start_matches('='))? },
            None => Grid::one(int(s)?),
        };
        if g.lo > g.hi {
            return Err(format!("empty range {s:?}"));
        }
        Ok(g)
    }
}

/// Where and how a command writes its artifacts.
pub struct Output {
    pub dir: Option<PathBuf>,
    pub float: bool,
    pub meta: BTreeMap<String, String>,
}

/// A table cell that is either exact or a float.
#[derive(Clone, Debug)]
pub enum Num {
    Exact(Rational),
    Float(f64),
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Output {
    pub fn num(&self, v: &Num) -> String {
        match v {
            Num::Exact(r) if self.float => float(to_f64(r)),
            Num::Exact(r) => format_ratio(r),
            Num::Float(x) => float(*x),
        }
    }

    fn trailer(&self, extra: &[(&str, String)]) -> String {
        let mut s = format!("# penwalk {}\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.meta {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        let values = if self.float { "decimal, 17 significant digits" } else { "exact num/den" };
        s.push_str(&format!("# values = {values}\n"));
        for (k, v) in extra.iter().filter(|(k, v)| self.meta.get(*k) != Some(v)) {
            s.push_str(&format!("# {k} = {v}\n"));
        }
        s
    }

    /// CSV body: header, rows, then the `#` metadata block.
    pub fn csv(&self, header: &str, rows: &[String], extra: &[(&str, String)]) -> String {
        let mut s = String::with_capacity(rows.iter().map(|r| r.len() + 1).sum::<usize>() + 256);
        s.push_str(header);
        s.push('\n');
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s.push_str(&self.trailer(extra));
        s
    }

    /// Writes `body` to `DIR/file` when `--out` is set, else to stdout.
    pub fn emit(&self, file: &str, body: &str) -> Result<(), Usage> {
        match &self.dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(file);
                std::fs::write(&path, body)?;
                println!("{}", path.display());
            }
            None => print!("{body}"),
        }
        Ok(())
    }
}
