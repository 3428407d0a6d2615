//! Seeded simulation of the penalised measures through their h-transform
//! chains, Bessel walks, and goodness-of-fit reports.
//!
//! Every chain `i` of a run draws from `ChaCha20Rng::seed_from_u64(seed)` on
//! stream `i`, so reports do not depend on scheduling.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};
use crate::exact::to_f64;
use crate::laws;
use crate::martingales::MartingaleFamily;
use crate::walk::{Path, Step, WalkState};
use crate::weight::PenaltyWeight;

pub const GENERATOR: &str = "chacha20";

/// Binomial band half-width in standard deviations.
pub const SIGMA_BAND: f64 = 4.0;

/// Chi-square significance level.
pub const CHI_SQUARE_ALPHA: f64 = 0.001;

pub fn rng_for(seed: u64, chain: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// `π(x, x±1)` of the 3-Bessel walk on ℕ.
pub fn bessel3_step_probs(x: i64) -> Result<(f64, f64)> {
    if x < 0 {
        return Err(Error::InvalidParameter(format!("Bessel walk lives on ℕ, got {x}")));
    }
    let d = (2 * x + 2) as f64;
    Ok(((x + 2) as f64 / d, x as f64 / d))
}

/// `π*(x, x±1)` of the 3-Bessel* walk on ℕ*.
pub fn bessel3_star_step_probs(x: i64) -> Result<(f64, f64)> {
    if x < 1 {
        return Err(Error::InvalidParameter(format!("Bessel* walk lives on ℕ*, got {x}")));
    }
    let d = (2 * x) as f64;
    Ok(((x + 1) as f64 / d, (x - 1) as f64 / d))
}

/// Floating-point evaluation of a martingale family, with the trigonometric
/// time factor kept separate so long chains do not overflow.
#[derive(Clone, Debug)]
pub struct FloatMartingale {
    family: MartingaleFamily,
    phi: Vec<f64>,
    tail: Vec<f64>,
    geometric_q: Option<f64>,
}

impl FloatMartingale {
    pub fn new(family: MartingaleFamily) -> Result<Self> {
        family.validate()?;
        let (mut phi, mut tail, mut geometric_q) = (Vec::new(), Vec::new(), None);
        match family.weight() {
            Some(PenaltyWeight::Geometric { q }) => geometric_q = Some(to_f64(q)),
            Some(w) => {
                let top = w.max_support().unwrap_or(0) as i64;
                phi = (0..=top + 1).map(|k| w.phi_f64(k)).collect();
                tail = (0..=top + 1).map(|k| w.tail_f64(k)).collect();
            }
            None => {}
        }
        Ok(FloatMartingale { family, phi, tail, geometric_q })
    }

    pub fn family(&self) -> &MartingaleFamily {
        &self.family
    }

    fn phi(&self, k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        match self.geometric_q {
            Some(q) => (1.0 - q) * q.powi(k as i32),
            None => self.phi.get(k as usize).copied().unwrap_or(0.0),
        }
    }

    fn tail(&self, k: i64) -> f64 {
        if k <= 0 {
            return 1.0;
        }
        match self.geometric_q {
            Some(q) => q.powi(k as i32),
            None => self.tail.get(k as usize).copied().unwrap_or(0.0),
        }
    }

    /// Value up to the deterministic factor `cos(π/w)^{-n}` of the
    /// trigonometric families.
    pub fn scaled_value(&self, st: &WalkState) -> f64 {
        match &self.family {
            MartingaleFamily::OneSidedMax(_) | MartingaleFamily::NextZeroMax(_) => {
                self.phi(st.s) * (st.s - st.x) as f64 + self.tail(st.s)
            }
            MartingaleFamily::LastZeroMax(_) => {
                let sg = st.s_g.unwrap_or(-1);
                0.5 * self.phi(sg) * st.x.abs() as f64 + self.phi(st.s) * (st.s - st.x.max(0)) as f64 + self.tail(st.s)
            }
            MartingaleFamily::BilateralLastZero(_) => {
                let sg = st.s_star_g.unwrap_or(-1);
                self.phi(sg) * st.x.abs() as f64
                    + self.phi(st.s_star) * (st.s_star - st.x.abs()) as f64
                    + self.tail(st.s_star)
            }
            MartingaleFamily::CorridorTrig { a, b } => {
                if st.s >= i64::from(*a) || st.i <= -i64::from(*b) {
                    return 0.0;
                }
                let w = f64::from(a + b);
                (PI * (f64::from(*a) - st.x as f64) / w).sin() / (PI * f64::from(*a) / w).sin()
            }
            MartingaleFamily::BarrierIndicator { a } => {
                if st.s_star >= i64::from(*a) {
                    return 0.0;
                }
                (PI * (f64::from(*a) - st.x as f64) / f64::from(2 * a)).sin()
            }
        }
    }

    /// `cos(π/w)` for the trigonometric families, 1 otherwise.
    fn step_factor(&self) -> f64 {
        match &self.family {
            MartingaleFamily::CorridorTrig { a, b } => (PI / f64::from(a + b)).cos(),
            MartingaleFamily::BarrierIndicator { a } => (PI / f64::from(2 * a)).cos(),
            _ => 1.0,
        }
    }

    pub fn kernel(&self, st: &WalkState) -> Result<(f64, f64)> {
        let here = self.scaled_value(st);
        if here <= 0.0 {
            return Err(Error::AbsorbedKernel(format!("{here}")));
        }
        let c = 0.5 / (self.step_factor() * here);
        Ok((c * self.scaled_value(&st.step(Step::Up)), c * self.scaled_value(&st.step(Step::Down))))
    }

    /// Value of the weighted martingale at the state the chain would be in on
    /// its next visit to 0 with unchanged extrema; 0 means no further zero.
    pub fn zero_value(&self, st: &WalkState) -> f64 {
        match &self.family {
            MartingaleFamily::BilateralLastZero(_) => self.at_zero(st.s_star),
            _ => self.at_zero(st.s),
        }
    }

    /// Whether the chain can still visit 0 with positive probability. Extrema
    /// only grow, so a zero value is final.
    pub fn zero_reachable(&self, st: &WalkState) -> bool {
        self.zero_value(st) > 0.0
    }

    fn at_zero(&self, m: i64) -> f64 {
        self.phi(m) * m as f64 + self.tail(m)
    }

    /// Law of the running maximum (of `|X|` for the bilateral family) at the
    /// next visit to 0, as unnormalised masses whose total is
    /// `Q(the chain visits 0 again | F_n)`. Under the walk,
    /// `P_x(S_{T_0} ≥ m) = x/m`.
    pub fn return_law(&self, st: &WalkState) -> Vec<(i64, f64)> {
        let here = self.scaled_value(st);
        if here <= 0.0 || st.x == 0 {
            return Vec::new();
        }
        let (x, s) = match &self.family {
            MartingaleFamily::BilateralLastZero(_) => (st.x.abs(), st.s_star),
            _ => (st.x, st.s),
        };
        if x < 0 {
            return vec![(s, self.at_zero(s) / here)];
        }
        let top = match self.geometric_q {
            Some(_) => s + 2000,
            None => (self.phi.len() as i64).max(s + 1),
        };
        let mut law = vec![(s, (1.0 - x as f64 / (s + 1) as f64) * self.at_zero(s) / here)];
        for m in s + 1..=top {
            law.push((m, x as f64 / (m * (m + 1)) as f64 * self.at_zero(m) / here));
        }
        law
    }

    pub fn return_probability(&self, st: &WalkState) -> f64 {
        if st.x == 0 {
            return 1.0;
        }
        self.return_law(st).iter().map(|(_, p)| p).sum()
    }
}

/// One-step law driving [`sample_chain`].
#[derive(Clone, Debug)]
pub enum ChainKernel {
    Bessel3,
    Bessel3Star,
    HTransform(FloatMartingale),
}

impl ChainKernel {
    pub fn step_probs(&self, st: &WalkState) -> Result<(f64, f64)> {
        match self {
            ChainKernel::Bessel3 => bessel3_step_probs(st.x),
            ChainKernel::Bessel3Star => bessel3_star_step_probs(st.x),
            ChainKernel::HTransform(m) => m.kernel(st),
        }
    }

    pub fn name(&self) -> String {
        match self {
            ChainKernel::Bessel3 => "bessel3".into(),
            ChainKernel::Bessel3Star => "bessel3-star".into(),
            ChainKernel::HTransform(m) => format!("h-transform:{}", m.family().name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledPath {
    pub path: Vec<i64>,
    /// Step index at which the kernel became undefined, if it did.
    pub absorbed_at: Option<usize>,
    /// Largest `|p_up + p_down - 1|` met along the path.
    pub kernel_deviation: f64,
}

fn draw(rng: &mut ChaCha20Rng, p_up: f64) -> Step {
    if rng.random::<f64>() < p_up {
        Step::Up
    } else {
        Step::Down
    }
}

/// One trajectory of `n_steps` steps from `start` (chain 0 of `seed`).
pub fn sample_chain(kernel: &ChainKernel, start: i64, n_steps: usize, seed: u64) -> Result<SampledPath> {
    let mut st = WalkState::initial(start);
    kernel.step_probs(&st)?;
    let mut rng = rng_for(seed, 0);
    let mut out = SampledPath { path: vec![start], absorbed_at: None, kernel_deviation: 0.0 };
    for k in 0..n_steps {
        let (u, d) = match kernel.step_probs(&st) {
            Ok(p) => p,
            Err(Error::AbsorbedKernel(_)) => {
                out.absorbed_at = Some(k);
                break;
            }
            Err(e) => return Err(e),
        };
        out.kernel_deviation = out.kernel_deviation.max((u + d - 1.0).abs());
        st = st.step(draw(&mut rng, u));
        out.path.push(st.x);
    }
    Ok(out)
}

impl SampledPath {
    pub fn to_path(&self) -> Path {
        let steps = self.path.windows(2).map(|w| if w[1] > w[0] { Step::Up } else { Step::Down }).collect();
        Path { start: self.path[0], steps }
    }
}

/// A pass/fail criterion inside a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.into(), value, lo, hi, pass: value >= lo && value <= hi }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
    pub cells: usize,
}

/// Truncation at a finite horizon: chains whose last zero may still lie
/// ahead.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationBias {
    pub unsettled_fraction: f64,
    /// Mean over chains of `Q(another zero after H | F_H)`.
    pub return_probability_mean: f64,
    /// `sqrt(2/(πH))`, the order of magnitude of the above.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimReport {
    pub test: String,
    pub family: String,
    pub weight: Option<String>,
    pub n_samples: u64,
    pub seed: u64,
    pub generator: String,
    pub horizon: u64,
    pub empirical: BTreeMap<String, f64>,
    pub reference: BTreeMap<String, f64>,
    pub total_variation: Option<f64>,
    pub chi_square: Option<ChiSquare>,
    pub truncation: Option<TruncationBias>,
    pub kernel_deviation: f64,
    pub checks: Vec<Check>,
    /// Figures reported alongside the checks without gating `pass`.
    pub diagnostics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl SimReport {
    fn new(test: &str, family: String, weight: Option<&PenaltyWeight>, n: u64, seed: u64, horizon: u64) -> Self {
        SimReport {
            test: test.into(),
            family,
            weight: weight.map(|w| w.to_string()),
            n_samples: n,
            seed,
            generator: GENERATOR.into(),
            horizon,
            empirical: BTreeMap::new(),
            reference: BTreeMap::new(),
            total_variation: None,
            chi_square: None,
            truncation: None,
            kernel_deviation: 0.0,
            checks: Vec::new(),
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
            pass: true,
        }
    }

    fn check(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// `outcome,empirical,reference` rows.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("outcome,empirical,reference\n");
        let keys: std::collections::BTreeSet<&String> = self.empirical.keys().chain(self.reference.keys()).collect();
        for k in keys {
            let e = self.empirical.get(k).copied().unwrap_or(0.0);
            let r = self.reference.get(k).map(|v| format!("{v:.12}")).unwrap_or_default();
            out.push_str(&format!("\"{k}\",{e:.12},{r}\n"));
        }
        out
    }
}

fn total_variation(p: &BTreeMap<String, f64>, q: &BTreeMap<String, f64>) -> f64 {
    let keys: std::collections::BTreeSet<&String> = p.keys().chain(q.keys()).collect();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(k).copied().unwrap_or(0.0) - q.get(k).copied().unwrap_or(0.0)).abs())
        .sum::<f64>()
}

/// Pearson chi-square of `observed` counts against cell probabilities.
/// Cells expected below 5 are pooled together with everything unlisted;
/// an undersized pool is merged into the smallest listed cell.
pub fn chi_square_pooled<K: Ord + Clone>(
    observed: &BTreeMap<K, u64>,
    reference: &BTreeMap<K, f64>,
    n: u64,
) -> Result<ChiSquare> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let nf = n as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (k, p) in reference {
        let e = p * nf;
        let o = observed.get(k).copied().unwrap_or(0) as f64;
        if e >= 5.0 {
            cells.push((o, e));
        } else {
            pool_obs += o;
            pool_exp += e;
        }
    }
    let listed: f64 = reference.keys().map(|k| observed.get(k).copied().unwrap_or(0) as f64).sum();
    pool_obs += nf - listed;
    pool_exp = (nf - cells.iter().map(|c| c.1).sum::<f64>()).max(pool_exp);
    if pool_exp >= 5.0 {
        cells.push((pool_obs, pool_exp));
    } else if let Some(smallest) = cells.iter_mut().min_by(|a, b| a.1.total_cmp(&b.1)) {
        smallest.0 += pool_obs;
        smallest.1 += pool_exp;
    }
    if cells.len() < 2 {
        return Err(Error::InvalidParameter("fewer than two chi-square cells".into()));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = (cells.len() - 1) as u32;
    let p_value = gamma_ur(f64::from(dof) / 2.0, statistic / 2.0);
    Ok(ChiSquare { statistic, dof, p_value, cells: cells.len() })
}

fn parallel_map<T: Send>(n: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Largest `|X|` level whose post-last-zero transitions are tallied.
pub const POST_G_LEVELS: usize = 10;

/// Escape distance past which a chain with no reachable zero is stopped.
pub const SETTLE_DISTANCE: i64 = 12;

/// Outcome of one last-zero chain.
#[derive(Clone, Debug)]
struct LastZeroRun {
    gamma_g: u32,
    s_g: i64,
    x_end: i64,
    settled: bool,
    return_probability: f64,
    /// `(up, down)` moves of `|X|` at levels `1..=POST_G_LEVELS` since the last zero.
    post_g: [(u64, u64); POST_G_LEVELS + 1],
    kernel_deviation: f64,
    /// `(γ_g, S_g, X > 0 after g)` once an unsettled chain is continued past
    /// `H` by exact excursion draws.
    completed: (u32, i64, bool),
    first_up: bool,
}

/// Continues a chain past the horizon: each excursion away from 0 either
/// returns, with its maximum drawn from [`FloatMartingale::return_law`], or
/// never does, which fixes the last zero.
fn complete(m: &FloatMartingale, mut st: WalkState, rng: &mut ChaCha20Rng) -> Result<(u32, i64, bool)> {
    let bilateral = matches!(m.family(), MartingaleFamily::BilateralLastZero(_));
    loop {
        if st.x == 0 {
            let (u, _) = m.kernel(&st)?;
            st = st.step(draw(rng, u));
            continue;
        }
        let law = m.return_law(&st);
        let mut u = rng.random::<f64>();
        let mut back = None;
        for (level, p) in law {
            if u < p {
                back = Some(level);
                break;
            }
            u -= p;
        }
        let Some(level) = back else {
            let sg = if bilateral { st.s_star_g } else { st.s_g };
            return Ok((st.gamma, sg.unwrap_or(0), st.x > 0));
        };
        st.x = 0;
        st.gamma += 1;
        st.g = None;
        if bilateral {
            st.s_star = level;
            st.s_star_g = Some(level);
        } else {
            st.s = level;
            st.s_g = Some(level);
        }
    }
}

fn last_zero_family(family: &MartingaleFamily) -> Result<()> {
    match family {
        MartingaleFamily::LastZeroMax(_) | MartingaleFamily::BilateralLastZero(_) => Ok(()),
        other => Err(Error::InvalidParameter(format!("{} is not a last-zero family", other.name()))),
    }
}

fn run_last_zero_chain(m: &FloatMartingale, horizon: u64, seed: u64, chain: u64) -> Result<LastZeroRun> {
    let bilateral = matches!(m.family(), MartingaleFamily::BilateralLastZero(_));
    let mut rng = rng_for(seed, chain);
    let mut st = WalkState::initial(0);
    let mut post_g = [(0u64, 0u64); POST_G_LEVELS + 1];
    let mut dev: f64 = 0.0;
    let mut settled = false;
    let mut first_up = false;
    for k in 0..horizon {
        if !m.zero_reachable(&st) && st.x.abs() > SETTLE_DISTANCE {
            settled = true;
            break;
        }
        let (u, d) = m.kernel(&st)?;
        dev = dev.max((u + d - 1.0).abs());
        let step = draw(&mut rng, u);
        if k == 0 {
            first_up = step == Step::Up;
        }
        let level = st.x.unsigned_abs() as usize;
        let next = st.step(step);
        if next.x == 0 {
            post_g = [(0, 0); POST_G_LEVELS + 1];
        } else if (1..=POST_G_LEVELS).contains(&level) {
            if next.x.abs() > st.x.abs() {
                post_g[level].0 += 1;
            } else {
                post_g[level].1 += 1;
            }
        }
        st = next;
    }
    let (gamma_g, s_g) = (st.gamma, if bilateral { st.s_star_g } else { st.s_g }.unwrap_or(0));
    let completed = if settled { (gamma_g, s_g, st.x > 0) } else { complete(m, st, &mut rng)? };
    Ok(LastZeroRun {
        gamma_g,
        s_g,
        x_end: st.x,
        settled,
        return_probability: if settled { 0.0 } else { m.return_probability(&st) },
        post_g,
        kernel_deviation: dev,
        completed,
        first_up,
    })
}

fn last_zero_runs(family: &MartingaleFamily, horizon: u64, n: u64, seed: u64) -> Result<Vec<LastZeroRun>> {
    last_zero_family(family)?;
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if family.weight().and_then(|w| w.max_support()).is_none() {
        return Err(Error::InvalidParameter("simulation needs a finite-support weight".into()));
    }
    let m = FloatMartingale::new(family.clone())?;
    parallel_map(n, |i| run_last_zero_chain(&m, horizon, seed, i))
}

fn truncation_of(runs: &[LastZeroRun], horizon: u64) -> TruncationBias {
    let n = runs.len() as f64;
    TruncationBias {
        unsettled_fraction: runs.iter().filter(|r| !r.settled).count() as f64 / n,
        return_probability_mean: runs.iter().map(|r| r.return_probability).sum::<f64>() / n,
        rate: (2.0 / (PI * horizon as f64)).sqrt(),
    }
}

/// Empirical law of `S_{g_H}` (or `S*_{g_H}`) against `φ`, plus the joint
/// law of `(γ_g, S_g)` against its closed form.
pub fn estimate_sg_density(family: &MartingaleFamily, horizon: u64, n: u64, seed: u64) -> Result<SimReport> {
    estimate_sg_density_with(family, horizon, n, seed, 1)
}

/// As [`estimate_sg_density`]; for the bilateral family the joint reference
/// uses `exponent_shift = 1` for `a - 1` or `0` for `a` on the bracket.
pub fn estimate_sg_density_with(
    family: &MartingaleFamily,
    horizon: u64,
    n: u64,
    seed: u64,
    exponent_shift: u32,
) -> Result<SimReport> {
    let runs = last_zero_runs(family, horizon, n, seed)?;
    let w = family.weight().expect("weighted family");
    let bilateral = matches!(family, MartingaleFamily::BilateralLastZero(_));
    let mut rep = SimReport::new("sg-density", family.name(), Some(w), n, seed, horizon);
    let nf = n as f64;

    let mut marg: BTreeMap<i64, u64> = BTreeMap::new();
    let mut joint: BTreeMap<(u32, i64), u64> = BTreeMap::new();
    for r in &runs {
        *marg.entry(r.s_g).or_default() += 1;
        *joint.entry((r.gamma_g, r.s_g)).or_default() += 1;
    }
    for (k, c) in &marg {
        rep.empirical.insert(k.to_string(), *c as f64 / nf);
    }
    let top = w.max_support().unwrap_or(0) as i64;
    for k in 0..=top {
        let p = w.phi_f64(k);
        if p > 0.0 {
            rep.reference.insert(k.to_string(), p);
        }
    }
    let tv = total_variation(&rep.empirical, &rep.reference);
    rep.total_variation = Some(tv);
    rep.check(Check::within("total variation", tv, 0.0, 0.02));

    let mut joint_ref: BTreeMap<(u32, i64), f64> = BTreeMap::new();
    let max_gamma = runs.iter().map(|r| r.gamma_g).max().unwrap_or(1).max(1) + 50;
    for a in 1..=max_gamma {
        for k in 0..=top {
            let p = if bilateral {
                laws::qstar_joint_gamma_sg(w, a, k, a.saturating_sub(exponent_shift))
            } else {
                laws::q_joint_gamma_sg(w, a, k)
            };
            let p = to_f64(&p);
            if p > 0.0 {
                joint_ref.insert((a, k), p);
            }
        }
    }
    let chi = chi_square_pooled(&joint, &joint_ref, n)?;
    let mut done_marg: BTreeMap<String, f64> = BTreeMap::new();
    let mut done_joint: BTreeMap<(u32, i64), u64> = BTreeMap::new();
    for r in &runs {
        *done_marg.entry(r.completed.1.to_string()).or_default() += 1.0 / nf;
        *done_joint.entry((r.completed.0, r.completed.1)).or_default() += 1;
    }
    rep.diagnostics.insert("completed total variation".into(), total_variation(&done_marg, &rep.reference));
    rep.diagnostics
        .insert("completed joint chi-square p-value".into(), chi_square_pooled(&done_joint, &joint_ref, n)?.p_value);
    rep.check(Check::within("joint (gamma_g, S_g) chi-square p-value", chi.p_value, CHI_SQUARE_ALPHA, 1.0));
    rep.chi_square = Some(chi);
    rep.truncation = Some(truncation_of(&runs, horizon));
    rep.kernel_deviation = runs.iter().map(|r| r.kernel_deviation).fold(0.0, f64::max);
    rep.check(Check::within("kernel normalisation", rep.kernel_deviation, 0.0, 1e-12));
    if bilateral && exponent_shift == 0 {
        rep.notes.push("joint reference uses exponent a on the bracket".into());
    }
    Ok(rep)
}

/// Fraction of chains with `X_H > 0`, against ½.
pub fn estimate_sign_split(family: &MartingaleFamily, horizon: u64, n: u64, seed: u64) -> Result<SimReport> {
    let runs = last_zero_runs(family, horizon, n, seed)?;
    let w = family.weight().expect("weighted family");
    let mut rep = SimReport::new("sign-split", family.name(), Some(w), n, seed, horizon);
    let nf = n as f64;
    let pos = runs.iter().filter(|r| r.x_end > 0).count() as f64 / nf;
    rep.empirical.insert("X_H>0".into(), pos);
    rep.empirical.insert("X_H<=0".into(), 1.0 - pos);
    rep.reference.insert("X_H>0".into(), 0.5);
    rep.reference.insert("X_H<=0".into(), 0.5);
    let sigma = (0.25 / nf).sqrt();
    rep.check(Check::within("P(X_H > 0)", pos, 0.5 - SIGMA_BAND * sigma, 0.5 + SIGMA_BAND * sigma));
    let done = runs.iter().filter(|r| r.completed.2).count() as f64 / nf;
    rep.diagnostics.insert("completed P(X > 0 after g)".into(), done);
    rep.diagnostics.insert("completed deviation in sigmas".into(), (done - 0.5) / sigma);
    rep.truncation = Some(truncation_of(&runs, horizon));
    rep.kernel_deviation = runs.iter().map(|r| r.kernel_deviation).fold(0.0, f64::max);
    Ok(rep)
}

/// Minimum number of visits for a level to enter a transition test.
pub const MIN_LEVEL_VISITS: u64 = 100;

fn level_checks(
    rep: &mut SimReport,
    counts: &[(u64, u64)],
    levels: impl Iterator<Item = usize>,
    reference: impl Fn(i64) -> Result<(f64, f64)>,
) -> Result<()> {
    for x in levels {
        let (u, d) = counts[x];
        let visits = u + d;
        let (p, _) = reference(x as i64)?;
        rep.reference.insert(format!("level {x}"), p);
        if visits < MIN_LEVEL_VISITS {
            rep.notes.push(format!("level {x} skipped: {visits} visits"));
            continue;
        }
        let freq = u as f64 / visits as f64;
        rep.empirical.insert(format!("level {x}"), freq);
        let sigma = ((p * (1.0 - p)).max(0.0) / visits as f64).sqrt();
        // a degenerate reference must be matched up to rounding
        let band = (SIGMA_BAND * sigma).max(1e-12);
        rep.check(Check::within(format!("up-frequency at level {x}"), freq, p - band, p + band));
    }
    Ok(())
}

/// Transition frequencies of `|X|` after the last zero against the Bessel*
/// walk (last-zero families), or of `R = 2S - X` against the Bessel walk
/// (one-sided family).
pub fn post_g_transition_test(family: &MartingaleFamily, horizon: u64, n: u64, seed: u64) -> Result<SimReport> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let w = family.weight();
    let mut rep = SimReport::new("post-g-transitions", family.name(), w, n, seed, horizon);
    match family {
        MartingaleFamily::OneSidedMax(_) | MartingaleFamily::NextZeroMax(_) => {
            let m = FloatMartingale::new(family.clone())?;
            let per_chain = parallel_map(n, |i| {
                let mut rng = rng_for(seed, i);
                let mut st = WalkState::initial(0);
                let mut counts = vec![(0u64, 0u64); POST_G_LEVELS + 1];
                let mut dev: f64 = 0.0;
                for _ in 0..horizon {
                    let (u, d) = m.kernel(&st)?;
                    dev = dev.max((u + d - 1.0).abs());
                    let next = st.step(draw(&mut rng, u));
                    let r = st.r();
                    if (0..=POST_G_LEVELS as i64).contains(&r) {
                        if next.r() > r {
                            counts[r as usize].0 += 1;
                        } else {
                            counts[r as usize].1 += 1;
                        }
                    }
                    st = next;
                }
                Ok((counts, dev))
            })?;
            let mut counts = vec![(0u64, 0u64); POST_G_LEVELS + 1];
            for (c, dev) in &per_chain {
                for (acc, v) in counts.iter_mut().zip(c) {
                    acc.0 += v.0;
                    acc.1 += v.1;
                }
                rep.kernel_deviation = rep.kernel_deviation.max(*dev);
            }
            rep.notes.push("statistic: R = 2S - X, reference: Bessel walk".into());
            level_checks(&mut rep, &counts, 0..=POST_G_LEVELS, bessel3_step_probs)?;
        }
        _ => {
            let runs = last_zero_runs(family, horizon, n, seed)?;
            let mut counts = [(0u64, 0u64); POST_G_LEVELS + 1];
            for r in &runs {
                for (acc, v) in counts.iter_mut().zip(&r.post_g) {
                    acc.0 += v.0;
                    acc.1 += v.1;
                }
                rep.kernel_deviation = rep.kernel_deviation.max(r.kernel_deviation);
            }
            rep.truncation = Some(truncation_of(&runs, horizon));
            rep.notes.push("statistic: |X| after the last zero, reference: Bessel* walk".into());
            level_checks(&mut rep, &counts, 1..=POST_G_LEVELS, bessel3_star_step_probs)?;
        }
    }
    rep.check(Check::within("kernel normalisation", rep.kernel_deviation, 0.0, 1e-12));
    Ok(rep)
}

/// Which measure drives [`uniform_pre_max_test`].
#[derive(Clone, Debug, PartialEq)]
pub enum PreMaxMeasure {
    /// The simple walk, `S_{g_{T_p}}`.
    Walk,
    /// The simple walk, `S*_{g_{T*_p}}`.
    WalkBilateral,
    /// The bilateral last-zero transform, `S*_{g_{T*_p}}`.
    Bilateral(PenaltyWeight),
}

impl PreMaxMeasure {
    pub fn name(&self) -> String {
        match self {
            PreMaxMeasure::Walk => "walk".into(),
            PreMaxMeasure::WalkBilateral => "walk-bilateral".into(),
            PreMaxMeasure::Bilateral(_) => "bilateral-last-zero".into(),
        }
    }
}

/// Law of `S*_{g_{T*_p}}` under the bilateral transform implied by optional
/// stopping: the walk's uniform law reweighted by `M*_{T*_p} = pφ(k) + Φ(p)`.
pub fn bilateral_pre_max_law(w: &PenaltyWeight, p: u32) -> Vec<f64> {
    let pf = f64::from(p);
    (0..i64::from(p)).map(|k| (pf * w.phi_f64(k) + w.tail_f64(i64::from(p))) / pf).collect()
}

/// Law of the maximum before the last zero preceding the hitting time of `p`
/// (of `|X|` for the bilateral measures), against uniform on `{0..p-1}`.
pub fn uniform_pre_max_test(p: u32, n: u64, seed: u64, measure: &PreMaxMeasure) -> Result<SimReport> {
    if p == 0 {
        return Err(Error::InvalidParameter("p ≥ 1 required".into()));
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let target = i64::from(p);
    let (hm, weight) = match measure {
        PreMaxMeasure::Bilateral(w) => {
            (Some(FloatMartingale::new(MartingaleFamily::BilateralLastZero(w.clone()))?), Some(w))
        }
        _ => (None, None),
    };
    let mut rep = SimReport::new("uniform-pre-max", measure.name(), weight, n, seed, u64::from(p));
    let outcomes = parallel_map(n, |i| {
        let mut rng = rng_for(seed, i);
        let mut st = WalkState::initial(0);
        let mut dev: f64 = 0.0;
        match (measure, &hm) {
            (PreMaxMeasure::Walk, _) => {
                // excursions below 0 return to 0 without changing S or S_g: skip them
                while st.x < target {
                    let step = if st.x == 0 { Step::Up } else { draw(&mut rng, 0.5) };
                    st = st.step(step);
                }
                Ok((st.s_g.unwrap_or(0), dev))
            }
            (_, None) => {
                while st.x.abs() < target {
                    st = st.step(draw(&mut rng, 0.5));
                }
                Ok((st.s_star_g.unwrap_or(0), dev))
            }
            (_, Some(m)) => {
                while st.x.abs() < target {
                    let (u, d) = m.kernel(&st)?;
                    dev = dev.max((u + d - 1.0).abs());
                    st = st.step(draw(&mut rng, u));
                }
                Ok((st.s_star_g.unwrap_or(0), dev))
            }
        }
    })?;
    let mut counts: BTreeMap<i64, u64> = BTreeMap::new();
    for (k, dev) in &outcomes {
        *counts.entry(*k).or_default() += 1;
        rep.kernel_deviation = rep.kernel_deviation.max(*dev);
    }
    let nf = n as f64;
    for (k, c) in &counts {
        rep.empirical.insert(k.to_string(), *c as f64 / nf);
    }
    let mut reference = BTreeMap::new();
    for k in 0..target {
        reference.insert(k, 1.0 / f64::from(p));
        rep.reference.insert(k.to_string(), 1.0 / f64::from(p));
    }
    rep.total_variation = Some(total_variation(&rep.empirical, &rep.reference));
    if p == 1 {
        rep.check(Check::within("mass at 0", rep.empirical.get("0").copied().unwrap_or(0.0), 1.0, 1.0));
    } else {
        let chi = chi_square_pooled(&counts, &reference, n)?;
        rep.check(Check::within("chi-square p-value", chi.p_value, CHI_SQUARE_ALPHA, 1.0));
        rep.chi_square = Some(chi);
        if let Some(w) = weight {
            let alt: BTreeMap<i64, f64> =
                bilateral_pre_max_law(w, p).into_iter().zip(0..).map(|(q, k)| (k, q)).collect();
            rep.diagnostics.insert(
                "chi-square p-value against the reweighted law".into(),
                chi_square_pooled(&counts, &alt, n).map(|c| c.p_value).unwrap_or(f64::NAN),
            );
        }
    }
    rep.check(Check::within("kernel normalisation", rep.kernel_deviation, 0.0, 1e-12));
    Ok(rep)
}

/// Walk stopped at its `a`-th visit to 0 (the time-0 visit counts) and
/// conditioned on `S_{τ_a} = b`, by rejection. Attempts longer than
/// `max_steps` are rejected as well; `None` when no attempt is accepted.
pub fn sample_pre_g_bridge(a: u32, b: i64, seed: u64, max_steps: usize, max_tries: u64) -> Result<Option<Path>> {
    if a == 0 || b < 0 {
        return Err(Error::InvalidParameter(format!("need a ≥ 1 and b ≥ 0 (a={a}, b={b})")));
    }
    if a == 1 {
        return Ok((b == 0).then(|| Path::new(0)));
    }
    let mut rng = rng_for(seed, 0);
    for _ in 0..max_tries {
        let mut st = WalkState::initial(0);
        let mut steps = Vec::new();
        while st.gamma < a && st.s <= b && steps.len() < max_steps {
            let step = draw(&mut rng, 0.5);
            steps.push(step);
            st = st.step(step);
        }
        if st.gamma == a && st.s == b {
            return Ok(Some(Path { start: 0, steps }));
        }
    }
    Ok(None)
}

/// First-step direction of the pre-`g` path under a last-zero measure given
/// `(γ_g, S_g) = (a, b)`, against the rejection bridge of the walk stopped
/// at `τ_a` given `S_{τ_a} = b`.
pub fn pre_g_bridge_test(
    family: &MartingaleFamily,
    horizon: u64,
    n: u64,
    seed: u64,
    a: u32,
    b: i64,
) -> Result<SimReport> {
    if !matches!(family, MartingaleFamily::LastZeroMax(_)) {
        return Err(Error::InvalidParameter("the bridge comparison uses the last-zero maximum family".into()));
    }
    let runs = last_zero_runs(family, horizon, n, seed)?;
    let mut rep = SimReport::new("pre-g-bridge", family.name(), family.weight(), n, seed, horizon);
    let hits: Vec<&LastZeroRun> = runs.iter().filter(|r| r.completed.0 == a && r.completed.1 == b).collect();
    if hits.is_empty() {
        return Err(Error::EmptySample);
    }
    let q_up = hits.iter().filter(|r| r.first_up).count() as f64 / hits.len() as f64;
    let bridges = parallel_map(hits.len() as u64, |i| {
        sample_pre_g_bridge(a, b, seed.wrapping_add(i).wrapping_mul(0x9e37_79b9_7f4a_7c15), 1 << 20, 1 << 16)
    })?;
    let accepted: Vec<&Path> = bridges.iter().flatten().collect();
    if accepted.is_empty() {
        return Err(Error::EmptySample);
    }
    let p_up = accepted.iter().filter(|p| p.steps.first() == Some(&Step::Up)).count() as f64 / accepted.len() as f64;
    rep.empirical.insert("first step up".into(), q_up);
    rep.reference.insert("first step up".into(), p_up);
    let pooled = (q_up * hits.len() as f64 + p_up * accepted.len() as f64) / (hits.len() + accepted.len()) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / hits.len() as f64 + 1.0 / accepted.len() as f64)).sqrt();
    rep.check(Check::within("first-step difference", q_up - p_up, -SIGMA_BAND * se, SIGMA_BAND * se));
    rep.diagnostics.insert("conditioned chains".into(), hits.len() as f64);
    rep.diagnostics.insert("accepted bridges".into(), accepted.len() as f64);
    rep.notes.push("chains are classified after exact completion past the horizon".into());
    Ok(rep)
}

/// Empirical one-step frequencies of a chain against its own kernel at every
/// position visited at least `min_visits` times. Valid for kernels that
/// depend on the position only once the state is fixed (Bessel walks and the
/// trigonometric transforms).
pub fn kernel_frequency_test(
    kernel: &ChainKernel,
    start: i64,
    n_steps: usize,
    n: u64,
    seed: u64,
    min_visits: u64,
) -> Result<SimReport> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let per_chain = parallel_map(n, |i| {
        let mut rng = rng_for(seed, i);
        let mut st = WalkState::initial(start);
        let mut tally: BTreeMap<i64, (u64, u64, f64)> = BTreeMap::new();
        for _ in 0..n_steps {
            let (u, _) = match kernel.step_probs(&st) {
                Ok(p) => p,
                Err(Error::AbsorbedKernel(_)) => break,
                Err(e) => return Err(e),
            };
            let next = st.step(draw(&mut rng, u));
            let e = tally.entry(st.x).or_insert((0, 0, u));
            if next.x > st.x {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
            st = next;
        }
        Ok(tally)
    })?;
    let mut tally: BTreeMap<i64, (u64, u64, f64)> = BTreeMap::new();
    for t in per_chain {
        for (x, (u, d, p)) in t {
            let e = tally.entry(x).or_insert((0, 0, p));
            e.0 += u;
            e.1 += d;
        }
    }
    let mut rep = SimReport::new("kernel-frequencies", kernel.name(), None, n, seed, n_steps as u64);
    for (x, (u, d, p)) in tally {
        let visits = u + d;
        rep.reference.insert(format!("x={x}"), p);
        if visits < min_visits {
            continue;
        }
        let freq = u as f64 / visits as f64;
        rep.empirical.insert(format!("x={x}"), freq);
        let band = (SIGMA_BAND * ((p * (1.0 - p)).max(0.0) / visits as f64).sqrt()).max(1e-12);
        rep.check(Check::within(format!("up-frequency at x={x}"), freq, p - band, p + band));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_tables() {
        assert_eq!(bessel3_step_probs(0).unwrap(), (1.0, 0.0));
        assert_eq!(bessel3_step_probs(2).unwrap(), (2.0 / 3.0, 1.0 / 3.0));
        assert_eq!(bessel3_star_step_probs(1).unwrap(), (1.0, 0.0));
        assert_eq!(bessel3_star_step_probs(3).unwrap(), (2.0 / 3.0, 1.0 / 3.0));
        assert!(bessel3_step_probs(-1).is_err());
        assert!(bessel3_star_step_probs(0).is_err());
        for x in 0..=50 {
            assert_eq!(bessel3_star_step_probs(x + 1).unwrap(), bessel3_step_probs(x).unwrap());
        }
    }

    #[test]
    fn chains_are_reproducible() {
        let k = ChainKernel::Bessel3;
        let a = sample_chain(&k, 0, 200, 7).unwrap();
        let b = sample_chain(&k, 0, 200, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.path[1], 1);
    }

    #[test]
    fn corridor_chain_stays_inside() {
        let m = FloatMartingale::new(MartingaleFamily::CorridorTrig { a: 2, b: 2 }).unwrap();
        let p = sample_chain(&ChainKernel::HTransform(m), 0, 5000, 3).unwrap();
        assert!(p.path.iter().all(|x| x.abs() <= 1));
        assert!(p.absorbed_at.is_none());
        assert!(p.kernel_deviation < 1e-12);
    }

    #[test]
    fn empty_sample_rejected() {
        let f = MartingaleFamily::BilateralLastZero(PenaltyWeight::uniform(0, 3).unwrap());
        assert_eq!(estimate_sign_split(&f, 100, 0, 1).unwrap_err(), Error::EmptySample);
    }
}
