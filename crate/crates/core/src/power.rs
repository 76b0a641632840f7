//! Theoretical power and detectable effect sizes.
//!
//! Effects are in units of sigma, the innovation-scale standard deviation of
//! the analysed series (the difference series for paired kinds). The
//! correlation is treated as known, so sampling variability of `r` is not
//! reflected; simulated power falls short of these values at small `m`.

use serde::{Deserialize, Serialize};

use crate::ar1::TestKind;
use crate::dist::{nct_power, TailSide};
use crate::error::{Error, Result};
use crate::ttest::Method;

/// Upper end of the bisection bracket for effects, in sigma units.
pub const MAX_EFFECT: f64 = 100.0;
const POWER_TOL: f64 = 1e-6;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerQuery {
    pub kind: TestKind,
    /// Series length; for two-sample kinds, the first series.
    pub m: usize,
    /// Second series length for two-sample kinds; defaults to `m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_b: Option<usize>,
    pub rho: f64,
    pub alpha: f64,
    pub side: TailSide,
    pub target_power: f64,
    /// `Usual` assumes independence whatever `rho` is.
    pub method: Method,
}

impl PowerQuery {
    /// One-sided upper test at 5% with 80% target power.
    pub fn new(kind: TestKind, m: usize, rho: f64) -> Self {
        PowerQuery {
            kind,
            m,
            m_b: None,
            rho,
            alpha: 0.05,
            side: TailSide::Upper,
            target_power: 0.8,
            method: Method::Serial,
        }
    }

    pub fn sizes(&self) -> (usize, Option<usize>) {
        if self.kind.is_paired() {
            (self.m, None)
        } else {
            (self.m, Some(self.m_b.unwrap_or(self.m)))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(Error::domain(format!("alpha must lie in (0, 0.5], got {}", self.alpha)));
        }
        if !(self.target_power > 0.0 && self.target_power < 1.0) {
            return Err(Error::domain(format!(
                "target power must lie in (0, 1), got {}",
                self.target_power
            )));
        }
        if !self.rho.is_finite() || self.rho.abs() >= 1.0 {
            return Err(Error::domain(format!("rho must lie in (-1, 1), got {}", self.rho)));
        }
        if self.kind.is_paired() && self.m_b.is_some() {
            return Err(Error::Invalid(format!("{} takes a single series length", self.kind)));
        }
        let (m_a, m_b) = self.sizes();
        self.kind.check_sizes(m_a, m_b)
    }

    /// Correlation entering the standard error and df.
    fn effective_rho(&self) -> f64 {
        match self.method {
            Method::Serial => self.rho,
            Method::Usual => 0.0,
        }
    }

    /// Standard error of the effect estimate in sigma units, with the
    /// variance estimate replaced by its expectation, and the test's df.
    pub fn se_and_df(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let design = self.kind.design();
        let rho = self.effective_rho();
        let (m_a, m_b) = self.sizes();
        let fa = design.factors(m_a, rho)?;
        match m_b {
            None => Ok((fa.c.sqrt(), fa.df())),
            Some(m_b) => {
                let fb = design.factors(m_b, rho)?;
                let p = design.params() as f64;
                let (na, nb) = (m_a as f64 - p, m_b as f64 - p);
                let b_pooled = (fa.b * na + fb.b * nb) / (na + nb);
                let se = ((fa.scaled_variance() + fb.scaled_variance()) * b_pooled).sqrt();
                Ok((se, fa.m_eff + fb.m_eff - 2.0 * p))
            }
        }
    }
}

/// Power of the test at a true effect of `delta` sigma.
///
/// A `Lower` test is taken to target a negative effect of size `delta`.
pub fn theoretical_power(q: &PowerQuery, delta: f64) -> Result<f64> {
    if !delta.is_finite() {
        return Err(Error::domain(format!("effect must be finite, got {delta}")));
    }
    let (se, df) = q.se_and_df()?;
    let lambda = match q.side {
        TailSide::Lower => -delta / se,
        _ => delta / se,
    };
    nct_power(df, lambda, q.alpha, q.side)
}

/// Smallest effect (sigma units) reaching the target power, by bisection
/// on `[0, MAX_EFFECT]`.
pub fn detectable_effect(q: &PowerQuery) -> Result<f64> {
    let power = |d: f64| theoretical_power(q, d);
    let (mut lo, mut hi) = (0.0, MAX_EFFECT);
    if power(hi)? < q.target_power {
        return Err(Error::NoConvergence(format!(
            "target power {} not reached at effect {MAX_EFFECT}",
            q.target_power
        )));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let pw = power(mid)?;
        if (pw - q.target_power).abs() <= POWER_TOL {
            return Ok(mid);
        }
        if pw < q.target_power {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Err(Error::NoConvergence(format!(
        "bisection for effect stalled in [{lo}, {hi}]"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub query: PowerQuery,
    pub se: f64,
    pub df: f64,
    pub detectable_effect: f64,
}

pub fn power_report(q: &PowerQuery) -> Result<PowerReport> {
    let (se, df) = q.se_and_df()?;
    Ok(PowerReport {
        query: *q,
        se,
        df,
        detectable_effect: detectable_effect(q)?,
    })
}
