//! Closed-form laws, identities, generating functions and asymptotic rates.

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::exact::{binomial, format_ratio, from_biguint, half_pow, int, pow, rat, to_f64, Rational};
use crate::weight::{PenaltyWeight, SupportFn};

/// `P(X_n = k)` for the walk started at 0.
pub fn srw_endpoint_pmf(n: u32, k: i64) -> Rational {
    let n64 = i64::from(n);
    if k.abs() > n64 || (n64 + k) % 2 != 0 {
        return Rational::zero();
    }
    from_biguint(binomial(u64::from(n), (n64 + k) / 2)) * half_pow(n)
}

/// `P(S_n = k) = P(X_n = k) + P(X_n = k + 1)`.
pub fn srw_max_pmf(n: u32, k: i64) -> Rational {
    if k < 0 {
        return Rational::zero();
    }
    srw_endpoint_pmf(n, k) + srw_endpoint_pmf(n, k + 1)
}

/// `P(S_p = b, X_p = a) = P(X_p = 2b - a) - P(X_p = 2b + 2 - a)`.
pub fn joint_max_endpoint_pmf(p: u32, b: i64, a: i64) -> Result<Rational> {
    if b < 0 || a > b {
        return Err(Error::InvalidParameter(format!("need 0 ≤ b and a ≤ b (b={b}, a={a})")));
    }
    Ok(srw_endpoint_pmf(p, 2 * b - a) - srw_endpoint_pmf(p, 2 * b + 2 - a))
}

/// `P(S_n = k) / P(S_n = 0)` as the finite product
/// `((n-k+2)/(n+2)) ((n-k+4)/(n+4)) ... ` (even `n`) or its odd analogue.
/// A `k` of the other parity shares the value of `k + 1`.
pub fn max_ratio_product(n: u32, k: i64) -> Rational {
    let n = i64::from(n);
    if k < 0 {
        return Rational::zero();
    }
    let k = if (k - n) % 2 == 0 { k } else { k + 1 };
    if k > n + 1 {
        return Rational::zero();
    }
    let mut acc = Rational::one();
    let terms = if n % 2 == 0 { k / 2 } else { (k + 1) / 2 };
    let shift = if n % 2 == 0 { 0 } else { 1 };
    for j in 1..=terms {
        acc *= rat(n - k + 2 * j, n + 2 * j - shift);
    }
    acc
}

/// `P_a(S_{T_0} = k) = a / (k(k+1))`, zero for `k < a`.
pub fn first_passage_max_law(a: i64, k: i64) -> Result<Rational> {
    if a <= 0 {
        return Err(Error::InvalidParameter(format!("start a = {a} must be positive")));
    }
    if k < a {
        return Ok(Rational::zero());
    }
    Ok(rat(a, k * (k + 1)))
}

/// `Σ_{k ≥ s} ψ(k) / (k(k+1))` for `s ≥ 1`; needs finite support.
fn tail_series(psi: &SupportFn, s: i64) -> Result<Rational> {
    let top =
        psi.max_support().ok_or_else(|| Error::InfiniteSeries("Σ ψ(k)/(k(k+1)) over unbounded support".into()))?;
    Ok((s..=i64::from(top)).map(|k| psi.eval(k) / int(k * (k + 1))).sum())
}

/// `E[ψ(S_{d_p}) | S_p = s, X_p = x]` where `d_p` is the first zero after `p`.
pub fn cond_next_zero_max(psi: &SupportFn, s: i64, x: i64) -> Result<Rational> {
    let xp = x.max(0);
    if s < 0 || xp > s {
        return Err(Error::InconsistentState(format!("S = {s}, X = {x}")));
    }
    if s == 0 || xp == 0 {
        return Ok(psi.eval(s));
    }
    Ok(psi.eval(s) * (Rational::one() - rat(xp, s)) + int(xp) * tail_series(psi, s)?)
}

/// `E[ψ(S*_{d_a}) | S*_a = s_star, X_a = x]`.
pub fn bilateral_cond_next_zero(psi: &SupportFn, s_star: i64, x: i64) -> Result<Rational> {
    let ax = x.abs();
    if ax > s_star {
        return Err(Error::InconsistentState(format!("S* = {s_star}, X = {x}")));
    }
    if ax == 0 {
        return Ok(psi.eval(s_star));
    }
    Ok(psi.eval(s_star) * (Rational::one() - rat(ax, s_star)) + int(ax) * tail_series(psi, s_star)?)
}

/// `P(S_{τ_a} = c)` where `τ_a` is the `a`-th visit to 0 (time 0 included).
pub fn tau_max_pmf(a: u32, c: i64) -> Result<Rational> {
    if a == 0 {
        return Err(Error::InvalidParameter("a ≥ 1 required".into()));
    }
    if c < 0 {
        return Ok(Rational::zero());
    }
    let e = a - 1;
    if c == 0 {
        return Ok(half_pow(e));
    }
    let one = Rational::one();
    Ok(pow(&(&one - rat(1, 2 * (c + 1))), e) - pow(&(&one - rat(1, 2 * c)), e))
}

/// `P(S*_{τ_a} = k)`, `a > 1`.
pub fn tau_bimax_pmf(a: u32, k: i64) -> Result<Rational> {
    if a <= 1 {
        return Err(Error::InvalidParameter("a > 1 required".into()));
    }
    if k <= 0 {
        return Ok(Rational::zero());
    }
    let one = Rational::one();
    Ok(pow(&(&one - rat(1, k + 1)), a - 1) - pow(&(&one - rat(1, k)), a - 1))
}

/// `P(γ_{T_c} = m)`: geometric with parameter `1/(2c)`.
pub fn gamma_hit_pmf(c: u32, m: u32) -> Result<Rational> {
    if c == 0 || m == 0 {
        return Err(Error::InvalidParameter("c, m ≥ 1 required".into()));
    }
    let q = rat(1, 2 * i64::from(c));
    Ok(pow(&(Rational::one() - &q), m - 1) * q)
}

/// `P(S_{g_{T_p}} = k) = 1/p` on `{0, ..., p-1}`.
pub fn uniform_pre_max_pmf(p: u32, k: i64) -> Result<Rational> {
    if p == 0 {
        return Err(Error::InvalidParameter("p ≥ 1 required".into()));
    }
    Ok(if (0..i64::from(p)).contains(&k) { rat(1, i64::from(p)) } else { Rational::zero() })
}

fn check_corridor(a: u32, b: u32) -> Result<()> {
    if a == 0 || b == 0 {
        return Err(Error::InvalidParameter(format!("barriers must be ≥ 1 (a={a}, b={b})")));
    }
    Ok(())
}

/// `P(S_n < a, I_n > -b, X_n = c)` by the two-sided reflection sum.
pub fn corridor_pmf(n: u32, a: u32, b: u32, c: i64) -> Result<Rational> {
    check_corridor(a, b)?;
    let (n64, a64, w) = (i64::from(n), i64::from(a), i64::from(a + b));
    if !(-i64::from(b) < c && c < a64) || (n64 + c) % 2 != 0 {
        return Ok(Rational::zero());
    }
    let reach = n64 / w + 2;
    let mut pos = BigUint::zero();
    let mut neg = BigUint::zero();
    for k in -reach..=reach {
        pos += binomial(u64::from(n), (n64 + c) / 2 + k * w);
        neg += binomial(u64::from(n), (n64 - c) / 2 + k * w + a64);
    }
    let diff = Rational::from_integer(pos.into()) - Rational::from_integer(neg.into());
    Ok(diff * half_pow(n))
}

/// The same probability from its finite Fourier expansion.
pub fn corridor_pmf_trig(n: u32, a: u32, b: u32, c: i64) -> Result<f64> {
    check_corridor(a, b)?;
    if !(-i64::from(b) < c && c < i64::from(a)) {
        return Ok(0.0);
    }
    let w = f64::from(a + b);
    let af = f64::from(a);
    let cf = c as f64;
    let sum: f64 = (1..a + b)
        .map(|l| {
            let t = PI * f64::from(l) / w;
            t.cos().powi(n as i32) * (t * af).sin() * (t * (af - cf)).sin()
        })
        .sum();
    Ok(2.0 / w * sum)
}

/// An asymptotic approximation, kept in log form as well since the values
/// underflow quickly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticEstimate {
    pub value: f64,
    pub ln_value: f64,
    pub leading_term: String,
    pub n: u64,
}

/// Leading term of `P(S_n < a, I_n > -b)`:
/// `4/(a+b) cos^n(π/(a+b)) sin(aπ/(a+b)) Σ_{c ≡ n mod 2} sin(π(a-c)/(a+b))`.
pub fn corridor_survival_asym(n: u32, a: u32, b: u32) -> Result<AsymptoticEstimate> {
    check_corridor(a, b)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n ≥ 1 required".into()));
    }
    let w = f64::from(a + b);
    let af = f64::from(a);
    let sine_sum: f64 = (-i64::from(b) + 1..i64::from(a))
        .filter(|c| (i64::from(n) + c) % 2 == 0)
        .map(|c| (PI * (af - c as f64) / w).sin())
        .sum();
    let ln_value = (4.0 / w).ln() + f64::from(n) * (PI / w).cos().ln() + (af * PI / w).sin().ln() + sine_sum.ln();
    Ok(AsymptoticEstimate {
        value: ln_value.exp(),
        ln_value,
        leading_term: "4/(a+b) cos^n(pi/(a+b)) sin(a pi/(a+b)) sum_c sin(pi(a-c)/(a+b))".into(),
        n: u64::from(n),
    })
}

/// `ln P(S_n < a, I_n > -b)` by a renormalised float DP on the corridor.
pub fn corridor_survival_ln(n: u32, a: u32, b: u32) -> Result<f64> {
    check_corridor(a, b)?;
    let width = (a + b - 1) as usize;
    let origin = (b - 1) as usize;
    let mut mass = vec![0.0f64; width];
    mass[origin] = 1.0;
    let mut ln_scale = 0.0;
    for _ in 0..n {
        let mut next = vec![0.0f64; width];
        for (i, m) in mass.iter().enumerate() {
            if i > 0 {
                next[i - 1] += 0.5 * m;
            }
            if i + 1 < width {
                next[i + 1] += 0.5 * m;
            }
        }
        let total: f64 = next.iter().sum();
        if total == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        next.iter_mut().for_each(|m| *m /= total);
        ln_scale += total.ln();
        mass = next;
    }
    Ok(ln_scale)
}

/// `Σ_{k ≥ 0} C(n, kp + u)` directly and through the roots-of-unity filter
/// `(1/p) Σ_ℓ (2cos(πℓ/p))^n cos(nπℓ/p - 2πℓu/p)`.
pub fn binomial_filter(n: u32, p: u32, u: u32) -> Result<(BigUint, f64)> {
    if p == 0 || u >= p {
        return Err(Error::InvalidParameter(format!("need 0 ≤ u < p (p={p}, u={u})")));
    }
    let mut direct = BigUint::zero();
    let mut j = u64::from(u);
    while j <= u64::from(n) {
        direct += binomial(u64::from(n), j as i64);
        j += u64::from(p);
    }
    let (nf, pf, uf) = (f64::from(n), f64::from(p), f64::from(u));
    let filtered: f64 = (0..p)
        .map(|l| {
            let l = f64::from(l);
            (2.0 * (PI * l / pf).cos()).powi(n as i32) * (nf * PI * l / pf - 2.0 * PI * l * uf / pf).cos()
        })
        .sum::<f64>()
        / pf;
    Ok((direct, filtered))
}

/// `E[(cosh λ)^{-(T_a ∧ T_b)}] = cosh(λ(a+b)/2) / cosh(λ(a-b)/2)` for `a < 0 < b`.
pub fn cosh_pgf(a: i64, b: i64, lambda: f64) -> Result<f64> {
    if !(a < 0 && b > 0) {
        return Err(Error::InvalidParameter(format!("need a < 0 < b (a={a}, b={b})")));
    }
    Ok((lambda * (a + b) as f64 / 2.0).cosh() / (lambda * (a - b) as f64 / 2.0).cosh())
}

/// `E[(1-β)^{T_α}] = ((1 + √(2β - β²)) / (1 - β))^{-α}`.
pub fn geometric_time_hit_pgf(alpha: u32, beta: f64) -> Result<f64> {
    if alpha == 0 || !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!("need α ≥ 1, β ∈ (0,1) (α={alpha}, β={beta})")));
    }
    let base = (1.0 + (2.0 * beta - beta * beta).sqrt()) / (1.0 - beta);
    Ok(base.powf(-f64::from(alpha)))
}

/// `α √(2/(πp))`, the rate of `P(S*_{g_p} < α)`.
pub fn bilateral_gzero_asym(alpha: u32, p: u64) -> Result<AsymptoticEstimate> {
    if alpha == 0 || p == 0 {
        return Err(Error::InvalidParameter("α, p ≥ 1 required".into()));
    }
    let value = f64::from(alpha) * (2.0 / (PI * p as f64)).sqrt();
    Ok(AsymptoticEstimate { value, ln_value: value.ln(), leading_term: "alpha sqrt(2/(pi p))".into(), n: p })
}

/// `P(S*_{g_p} < α)` from 0 by a float DP: the last zero before `p` must
/// precede the first time `|X|` reaches `α`.
pub fn bilateral_gzero_float(alpha: u32, p: u32) -> Result<f64> {
    if alpha == 0 {
        return Err(Error::InvalidParameter("α ≥ 1 required".into()));
    }
    let alpha = alpha as usize;
    let p = p as usize;
    let off = p + 1;
    let width = 2 * p + 3;
    // before reaching ±α
    let mut inside = vec![0.0f64; width];
    // after reaching ±α and not yet back at 0 (killed there)
    let mut outside = vec![0.0f64; width];
    inside[off] = 1.0;
    for _ in 0..p {
        let mut ni = vec![0.0f64; width];
        let mut no = vec![0.0f64; width];
        for i in 1..width - 1 {
            let m = inside[i];
            if m != 0.0 {
                for j in [i - 1, i + 1] {
                    if j.abs_diff(off) >= alpha {
                        no[j] += 0.5 * m;
                    } else {
                        ni[j] += 0.5 * m;
                    }
                }
            }
            let m = outside[i];
            if m != 0.0 {
                for j in [i - 1, i + 1] {
                    if j != off {
                        no[j] += 0.5 * m;
                    }
                }
            }
        }
        inside = ni;
        outside = no;
    }
    Ok(inside.iter().sum::<f64>() + outside.iter().sum::<f64>())
}

/// `ln P(S_p = 0)` through `ln Γ`.
pub fn srw_max_zero_ln(p: u64) -> f64 {
    let pf = p as f64;
    // P(S_p = 0) = P(X_p = 0) for even p, P(X_p = 1) for odd p
    let j = (p / 2) as f64;
    let k = pf - j;
    ln_gamma(pf + 1.0) - ln_gamma(j + 1.0) - ln_gamma(k + 1.0) - pf * std::f64::consts::LN_2
}

/// `P(S_p = 0) √(πp/2)`, which tends to 1.
pub fn stay_nonpositive_rate(p: u64) -> AsymptoticEstimate {
    let ln_value = srw_max_zero_ln(p) + 0.5 * (PI * p as f64 / 2.0).ln();
    AsymptoticEstimate { value: ln_value.exp(), ln_value, leading_term: "P(S_p=0) sqrt(pi p/2)".into(), n: p }
}

/// `Σ_{k ≥ n} [kφ(k) + Φ(k)] / (k(k+1))` for finite-support weights.
pub fn next_zero_series_lhs(w: &PenaltyWeight, n: i64) -> Result<Rational> {
    if n < 1 {
        return Err(Error::InvalidParameter("n ≥ 1 required".into()));
    }
    let top = w.max_support().ok_or_else(|| Error::InfiniteSeries("weight with unbounded support".into()))?;
    Ok((n..=i64::from(top)).map(|k| (int(k) * w.phi(k) + w.tail(k)) / int(k * (k + 1))).sum())
}

/// Right side `Φ(n)/n`.
pub fn next_zero_series_rhs(w: &PenaltyWeight, n: i64) -> Rational {
    w.tail(n) / int(n)
}

/// The alternative right side `(1 - Φ(n))/n`.
pub fn next_zero_series_rhs_alt(w: &PenaltyWeight, n: i64) -> Rational {
    (Rational::one() - w.tail(n)) / int(n)
}

/// `Q(γ_g = a, S_g = k)` under the last-zero maximum penalisation.
pub fn q_joint_gamma_sg(w: &PenaltyWeight, a: u32, k: i64) -> Rational {
    if a == 0 || k < 0 {
        return Rational::zero();
    }
    if k == 0 {
        return half_pow(a) * w.phi(0);
    }
    let one = Rational::one();
    let diff = pow(&(&one - rat(1, 2 * (k + 1))), a - 1) - pow(&(&one - rat(1, 2 * k)), a - 1);
    diff * w.phi(k) / int(2)
}

/// `Q*(γ_g = a, S*_g = k)` under the bilateral last-zero penalisation, with
/// the exponent on the bracket given explicitly (`a - 1` or `a`).
pub fn qstar_joint_gamma_sg(w: &PenaltyWeight, a: u32, k: i64, exponent: u32) -> Rational {
    if a == 0 || k < 0 {
        return Rational::zero();
    }
    if k == 0 {
        return if a == 1 { w.phi(0) } else { Rational::zero() };
    }
    let one = Rational::one();
    (pow(&(&one - rat(1, k + 1)), exponent) - pow(&(&one - rat(1, k)), exponent)) * w.phi(k)
}

/// `Q(S_∞ ≥ p) = ½ Σ_{k<p} φ(k) + Φ(p)`, whose limit is `Q(S_∞ = ∞) = ½`.
pub fn q_max_tail(w: &PenaltyWeight, p: i64) -> Rational {
    (Rational::one() - w.tail(p)) / int(2) + w.tail(p)
}

/// One row of an identity report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityRow {
    pub name: String,
    pub params: String,
    pub lhs: String,
    pub rhs: String,
    pub abs_diff: String,
    pub pass: bool,
}

impl IdentityRow {
    pub fn exact(name: &str, params: String, lhs: &Rational, rhs: &Rational) -> Self {
        let d = crate::exact::abs_diff(lhs, rhs);
        IdentityRow {
            name: name.into(),
            params,
            lhs: format_ratio(lhs),
            rhs: format_ratio(rhs),
            pass: d.is_zero(),
            abs_diff: format_ratio(&d),
        }
    }

    pub fn float(name: &str, params: String, lhs: f64, rhs: f64, tol: f64) -> Self {
        let d = (lhs - rhs).abs();
        IdentityRow {
            name: name.into(),
            params,
            lhs: format!("{lhs:.17e}"),
            rhs: format!("{rhs:.17e}"),
            abs_diff: format!("{d:.3e}"),
            pass: d <= tol,
        }
    }

    pub const CSV_HEADER: &'static str = "identity,params,lhs,rhs,abs_diff,verdict";

    pub fn to_csv(&self) -> String {
        format!(
            "{},\"{}\",{},{},{},{}",
            self.name,
            self.params,
            self.lhs,
            self.rhs,
            self.abs_diff,
            if self.pass { "pass" } else { "fail" }
        )
    }
}

/// Exact value as f64 with the error reported as NaN on overflow.
pub fn approx(x: &Rational) -> f64 {
    to_f64(x)
}

/// Big integer as f64.
pub fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}
