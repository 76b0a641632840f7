//! Student t with real-valued degrees of freedom, and noncentral t power.
//!
//! Degrees of freedom are never rounded. The t distribution function goes
//! through the regularized incomplete beta function; the noncentral t uses
//! the Poisson-mixture expansion in incomplete beta ratios, summed outward
//! from the largest Poisson weight so that large noncentralities do not
//! underflow.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Smallest degrees of freedom accepted anywhere in the crate.
pub const MIN_DF: f64 = 0.01;

const CF_MAX_ITER: usize = 20_000;
const CF_EPS: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TailSide {
    #[serde(rename = "lower")]
    Lower,
    #[serde(rename = "upper")]
    Upper,
    #[serde(rename = "two")]
    TwoSided,
}

impl TailSide {
    pub fn as_str(self) -> &'static str {
        match self {
            TailSide::Lower => "lower",
            TailSide::Upper => "upper",
            TailSide::TwoSided => "two",
        }
    }

    /// p-value of an observed t statistic.
    pub fn p_value(self, t: f64, df: f64) -> Result<f64> {
        Ok(match self {
            TailSide::Lower => t_cdf(t, df)?,
            TailSide::Upper => t_cdf(-t, df)?,
            TailSide::TwoSided => t_two_tail(t, df)?,
        })
    }
}

impl fmt::Display for TailSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TailSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(TailSide::Lower),
            "upper" => Ok(TailSide::Upper),
            "two" | "two-sided" => Ok(TailSide::TwoSided),
            _ => Err(Error::Invalid(format!(
                "unknown side '{s}' (expected lower, upper or two)"
            ))),
        }
    }
}

fn check_df(df: f64) -> Result<()> {
    if df.is_nan() || df < MIN_DF {
        return Err(Error::domain(format!(
            "degrees of freedom must be >= {MIN_DF}, got {df}"
        )));
    }
    Ok(())
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
///
/// `y` must equal `1 - x`; passing it separately lets callers supply it
/// without cancellation.
pub fn beta_reg(a: f64, b: f64, x: f64, y: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    if x < (a + 1.0) / (a + b + 2.0) {
        beta_prefactor(a, b, x, y) * beta_cf(a, b, x) / a
    } else {
        1.0 - beta_prefactor(b, a, y, x) * beta_cf(b, a, y) / b
    }
}

/// `x^a y^b / B(a, b)`
fn beta_prefactor(a: f64, b: f64, x: f64, y: f64) -> f64 {
    (a * x.ln() + b * y.ln() - ln_beta(a, b)).exp()
}

/// Continued fraction for the incomplete beta, modified Lentz evaluation.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= CF_EPS {
            break;
        }
    }
    h
}

/// `P(|T| > |t|)` for `T ~ t_df`.
fn t_two_tail(t: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if t.is_nan() {
        return Err(Error::domain("t statistic is NaN"));
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    let t2 = t * t;
    let denom = df + t2;
    Ok(beta_reg(0.5 * df, 0.5, df / denom, t2 / denom))
}

/// `P(T <= t)` for `T ~ t_df`, `df >= MIN_DF` real.
pub fn t_cdf(t: f64, df: f64) -> Result<f64> {
    let tail = t_two_tail(t, df)?;
    Ok(if t > 0.0 { 1.0 - 0.5 * tail } else { 0.5 * tail })
}

/// Upper tail `P(T > t)`.
pub fn t_sf(t: f64, df: f64) -> Result<f64> {
    t_cdf(-t, df)
}

/// Inverse of [`t_cdf`].
pub fn t_quantile(prob: f64, df: f64) -> Result<f64> {
    check_df(df)?;
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::domain(format!("probability must lie in (0, 1), got {prob}")));
    }
    if prob == 0.5 {
        return Ok(0.0);
    }
    if prob < 0.5 {
        Ok(-upper_quantile(prob, df)?)
    } else {
        upper_quantile(1.0 - prob, df)
    }
}

/// Positive `t` with `P(T > t) = tail`, `tail < 0.5`.
fn upper_quantile(tail: f64, df: f64) -> Result<f64> {
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while t_sf(hi, df)? > tail {
        lo = hi;
        hi *= 2.0;
        // Past this point t^2 overflows and the tail can no longer be resolved.
        if !(hi * hi).is_finite() {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..2000 {
        let mid = if lo > 0.0 && hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if t_sf(mid, df)? > tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `x^a y^b / (a B(a, b))`, the step between `I_x(a, b)` and `I_x(a + 1, b)`.
fn beta_step(a: f64, b: f64, x: f64, y: f64) -> f64 {
    (a * x.ln() + b * y.ln() - ln_beta(a, b) - a.ln()).exp()
}

/// Distribution function of the noncentral t with `df` degrees of freedom
/// and noncentrality `delta`.
pub fn nct_cdf(t: f64, df: f64, delta: f64) -> Result<f64> {
    check_df(df)?;
    if t.is_nan() || !delta.is_finite() {
        return Err(Error::domain("noncentral t arguments must be finite"));
    }
    if t < 0.0 {
        return Ok(1.0 - nct_cdf_nonneg(-t, df, -delta));
    }
    Ok(nct_cdf_nonneg(t, df, delta))
}

fn nct_cdf_nonneg(t: f64, df: f64, delta: f64) -> f64 {
    let base = normal_cdf(-delta);
    if t == 0.0 {
        return base;
    }
    if t.is_infinite() {
        return 1.0;
    }
    let t2 = t * t;
    let x = t2 / (t2 + df);
    let y = df / (t2 + df);
    let b = 0.5 * df;
    let half_l = 0.5 * delta * delta;
    if half_l == 0.0 {
        return (base + 0.5 * beta_reg(0.5, b, x, y)).clamp(0.0, 1.0);
    }
    let scale = delta / SQRT_2;
    let k = half_l.floor();
    let ln_hl = half_l.ln();
    // Poisson weight P_k and its half-integer companion Q_k at the mode.
    let p_mode = (-half_l + k * ln_hl - ln_gamma(k + 1.0)).exp();
    let q_mode = (-half_l + k * ln_hl - ln_gamma(k + 1.5)).exp();
    let (ap, aq) = (k + 0.5, k + 1.0);
    let ip_mode = beta_reg(ap, b, x, y);
    let iq_mode = beta_reg(aq, b, x, y);
    let gp_mode = beta_step(ap, b, x, y);
    let gq_mode = beta_step(aq, b, x, y);

    let mut sum = p_mode * ip_mode + scale * q_mode * iq_mode;

    // Outward from the mode: I_x(a + 1, b) = I_x(a, b) - step(a, b).
    let (mut pw, mut qw) = (p_mode, q_mode);
    let (mut ip, mut iq) = (ip_mode, iq_mode);
    let (mut gp, mut gq) = (gp_mode, gq_mode);
    for i in 1..=SERIES_MAX_TERMS {
        let j = k + i as f64;
        let (a_p, a_q) = (j - 0.5, j);
        ip -= gp;
        iq -= gq;
        gp *= x * (a_p + b) / (a_p + 1.0);
        gq *= x * (a_q + b) / (a_q + 1.0);
        pw *= half_l / j;
        qw *= half_l / (j + 0.5);
        sum += pw * ip.max(0.0) + scale * qw * iq.max(0.0);
        if j > half_l && (pw + scale.abs() * qw) < 1e-18 {
            break;
        }
        if ip <= 0.0 && iq <= 0.0 {
            break;
        }
    }

    // Inward towards zero: I_x(a - 1, b) = I_x(a, b) + step(a - 1, b).
    let (mut pw, mut qw) = (p_mode, q_mode);
    let (mut ip, mut iq) = (ip_mode, iq_mode);
    let (mut gp, mut gq) = (gp_mode, gq_mode);
    let mut j = k;
    while j >= 1.0 {
        let (a_p, a_q) = (j + 0.5, j + 1.0);
        j -= 1.0;
        pw *= (j + 1.0) / half_l;
        qw *= (j + 1.5) / half_l;
        if ip == 0.0 || iq == 0.0 || gp == 0.0 || gq == 0.0 {
            // The recurrences carry no information once the ratios underflow.
            ip = beta_reg(j + 0.5, b, x, y);
            iq = beta_reg(j + 1.0, b, x, y);
            gp = beta_step(j + 0.5, b, x, y);
            gq = beta_step(j + 1.0, b, x, y);
        } else {
            gp *= a_p / (x * (a_p + b - 1.0));
            gq *= a_q / (x * (a_q + b - 1.0));
            ip += gp;
            iq += gq;
        }
        sum += pw * ip.min(1.0) + scale * qw * iq.min(1.0);
        if (pw + scale.abs() * qw) < 1e-18 {
            break;
        }
    }
    (base + 0.5 * sum).clamp(0.0, 1.0)
}

/// Critical value(s) for a level-`alpha` t test. Two-sided tests return the
/// positive critical value.
pub fn critical_value(alpha: f64, df: f64, side: TailSide) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    match side {
        TailSide::Upper => t_quantile(1.0 - alpha, df),
        TailSide::Lower => t_quantile(alpha, df),
        TailSide::TwoSided => t_quantile(1.0 - 0.5 * alpha, df),
    }
}

/// Rejection probability of a t test with known critical value when the
/// statistic follows a noncentral t.
pub fn power_at(df: f64, lambda: f64, critical: f64, side: TailSide) -> Result<f64> {
    Ok(match side {
        TailSide::Upper => 1.0 - nct_cdf(critical, df, lambda)?,
        TailSide::Lower => nct_cdf(critical, df, lambda)?,
        TailSide::TwoSided => {
            let upper = 1.0 - nct_cdf(critical, df, lambda)?;
            let lower = nct_cdf(-critical, df, lambda)?;
            (upper + lower).min(1.0)
        }
    })
}

/// Power of a level-`alpha` t test whose statistic is noncentral t with
/// noncentrality `lambda`. Both tails are used for two-sided tests.
pub fn nct_power(df: f64, lambda: f64, alpha: f64, side: TailSide) -> Result<f64> {
    check_df(df)?;
    let crit = critical_value(alpha, df, side)?;
    power_at(df, lambda, crit, side)
}
