//! AR(1) correction factors for ordinary-least-squares location estimates.
//!
//! For a single series of `m` observations with AR(1) errors, the OLS estimate
//! of the parameter of interest has variance `c(rho) * sigma^2`, the OLS
//! residual variance has expectation `b(rho) * sigma^2`, and `m_eff` is the
//! effective sample size tied to `b` through
//! `b = m (m_eff - p) / (m_eff (m - p))`.
//!
//! Two designs are covered: a constant mean (level, `p = 1`) and a straight
//! line in the centred index (rate, `p = 2`). The closed forms are checked
//! against [`oracle_factors`], which builds the design and correlation
//! matrices explicitly.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible `|rho|`. Estimates beyond it are clamped.
pub const RHO_BOUND: f64 = 0.99;

/// Largest series length accepted by the dense matrix oracle.
pub const ORACLE_MAX_LEN: usize = 2000;

/// Mean model fitted to one series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Design {
    /// Constant mean.
    Level,
    /// Intercept plus slope on the centred index.
    Rate,
}

impl Design {
    /// Number of location parameters estimated per series.
    pub fn params(self) -> usize {
        match self {
            Design::Level => 1,
            Design::Rate => 2,
        }
    }

    pub fn factors(self, m: usize, rho: f64) -> Result<CorrectionFactors> {
        match self {
            Design::Level => level_factors(m, rho),
            Design::Rate => rate_factors(m, rho),
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Design::Level => "level",
            Design::Rate => "rate",
        })
    }
}

/// The four test layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    PairedLevel,
    TwoSampleLevel,
    PairedRate,
    TwoSampleRate,
}

impl TestKind {
    pub const ALL: [TestKind; 4] = [
        TestKind::PairedLevel,
        TestKind::TwoSampleLevel,
        TestKind::PairedRate,
        TestKind::TwoSampleRate,
    ];

    pub fn design(self) -> Design {
        match self {
            TestKind::PairedLevel | TestKind::TwoSampleLevel => Design::Level,
            TestKind::PairedRate | TestKind::TwoSampleRate => Design::Rate,
        }
    }

    pub fn is_paired(self) -> bool {
        matches!(self, TestKind::PairedLevel | TestKind::PairedRate)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TestKind::PairedLevel => "paired-level",
            TestKind::TwoSampleLevel => "two-sample-level",
            TestKind::PairedRate => "paired-rate",
            TestKind::TwoSampleRate => "two-sample-rate",
        }
    }

    /// Smallest per-series length for the serial test of this kind.
    pub fn min_len(self) -> usize {
        match self {
            TestKind::PairedLevel => 4,
            TestKind::TwoSampleLevel => 3,
            TestKind::PairedRate => 5,
            TestKind::TwoSampleRate => 4,
        }
    }

    /// Smallest combined length for the two-sample kinds.
    fn min_total(self) -> usize {
        match self {
            TestKind::TwoSampleLevel => 7,
            TestKind::TwoSampleRate => 9,
            k => k.min_len(),
        }
    }

    /// Validates series lengths for the serial test of this kind.
    ///
    /// Paired kinds take one length (the difference series); two-sample kinds
    /// take both.
    pub fn check_sizes(self, m_a: usize, m_b: Option<usize>) -> Result<()> {
        let fail = |requirement, got| Error::MinimumSize {
            kind: self,
            requirement,
            got,
        };
        match (self.is_paired(), m_b) {
            (true, None) => {
                if m_a < self.min_len() {
                    let req = if self == TestKind::PairedLevel {
                        "m >= 4"
                    } else {
                        "m >= 5"
                    };
                    return Err(fail(req, format!("m = {m_a}")));
                }
                Ok(())
            }
            (false, Some(m_b)) => {
                let req = if self == TestKind::TwoSampleLevel {
                    "m_a >= 3, m_b >= 3 and m_a + m_b >= 7"
                } else {
                    "m_a >= 4, m_b >= 4 and m_a + m_b >= 9"
                };
                if m_a < self.min_len() || m_b < self.min_len() || m_a + m_b < self.min_total() {
                    return Err(fail(req, format!("m_a = {m_a}, m_b = {m_b}")));
                }
                Ok(())
            }
            (true, Some(_)) => Err(Error::Invalid(format!("{self} takes a single difference series"))),
            (false, None) => Err(Error::Invalid(format!("{self} takes two series"))),
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TestKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "unknown test kind '{s}' (expected one of paired-level, two-sample-level, paired-rate, two-sample-rate)"
                ))
            })
    }
}

/// `c`, `b` and effective sample size for one series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionFactors {
    pub design: Design,
    /// Variance factor: `Var(estimate) = c * sigma^2`.
    pub c: f64,
    /// Bias factor: `E(s^2) = b * sigma^2`.
    pub b: f64,
    pub m_eff: f64,
    pub m: usize,
    pub rho: f64,
}

impl CorrectionFactors {
    /// `c / b`, the multiplier on `s^2` in the squared standard error.
    pub fn scaled_variance(&self) -> f64 {
        self.c / self.b
    }

    /// Degrees of freedom contributed by this series, `m_eff - p`.
    pub fn df(&self) -> f64 {
        self.m_eff - self.design.params() as f64
    }
}

/// Clamps a correlation into `[-RHO_BOUND, RHO_BOUND]`; the flag reports
/// whether the bound was hit.
pub fn clamp_rho(rho: f64) -> (f64, bool) {
    if rho > RHO_BOUND {
        (RHO_BOUND, true)
    } else if rho < -RHO_BOUND {
        (-RHO_BOUND, true)
    } else {
        (rho, false)
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !rho.is_finite() || rho.abs() > RHO_BOUND {
        return Err(Error::domain(format!("|rho| must be <= {RHO_BOUND}, got {rho}")));
    }
    Ok(())
}

/// `(1 - rho^m) / (1 - rho)`, evaluated without forming `1 - rho^m` by
/// subtraction when `rho` is close to one.
fn geometric_sum(rho: f64, m: usize) -> f64 {
    let q = 1.0 - rho;
    let one_minus_pow = if rho > 0.0 {
        -(m as f64 * rho.ln()).exp_m1()
    } else {
        1.0 - rho.powi(m as i32)
    };
    one_minus_pow / q
}

/// Level-change factors for a series of length `m >= 2`.
pub fn level_factors(m: usize, rho: f64) -> Result<CorrectionFactors> {
    if m < 2 {
        return Err(Error::domain(format!("level factors need m >= 2, got {m}")));
    }
    check_rho(rho)?;
    let mf = m as f64;
    if rho == 0.0 {
        return Ok(CorrectionFactors {
            design: Design::Level,
            c: 1.0 / mf,
            b: 1.0,
            m_eff: mf,
            m,
            rho,
        });
    }
    // Numerator m(1 - rho^2) - 2 rho (1 - rho^m) with one factor of (1 - rho)
    // cancelled against the squared denominator.
    let q = 1.0 - rho;
    let c = (mf * (1.0 + rho) - 2.0 * rho * geometric_sum(rho, m)) / (mf * mf * q);
    let b = mf * (1.0 - c) / (mf - 1.0);
    // m - (m - 1) b equals m c exactly, so m_eff = 1 / c.
    let m_eff = 1.0 / c;
    Ok(CorrectionFactors {
        design: Design::Level,
        c,
        b,
        m_eff,
        m,
        rho,
    })
}

/// Rate-change factors (slope on the centred index) for `m >= 3`.
pub fn rate_factors(m: usize, rho: f64) -> Result<CorrectionFactors> {
    if m < 3 {
        return Err(Error::domain(format!("rate factors need m >= 3, got {m}")));
    }
    check_rho(rho)?;
    let mf = m as f64;
    let sxx_scale = mf * (mf * mf - 1.0) / 12.0;
    if rho == 0.0 {
        return Ok(CorrectionFactors {
            design: Design::Rate,
            c: 1.0 / sxx_scale,
            b: 1.0,
            m_eff: mf,
            m,
            rho,
        });
    }
    let q = 1.0 - rho;
    let q2 = q * q;
    let q3 = q2 * q;
    let pow_m = rho.powi(m as i32);
    let g = geometric_sum(rho, m);

    // Bracketed sum of the closed form, written with q = 1 - rho so that every
    // denominator is positive.
    let t1 = 6.0 * rho * (1.0 + rho).powi(2) * g / (mf * mf * q3);
    let t2 = -2.0 * rho * (6.0 * pow_m * (1.0 + rho) + q2) / (mf * q3);
    let t3 = -6.0 * rho * (pow_m + 1.0) / q2;
    let t4 = 2.0 * mf * rho / q;
    let t5 = (mf * mf - 1.0) / mf;
    let c = 12.0 / (mf * mf - 1.0).powi(2) * (t1 + t2 + t3 + t4 + t5);

    // rho^m - m rho + m - 1 = (1 - rho)(m - g).
    let trace_term = 2.0 * rho * (mf - g) / (mf * q);
    let b = (mf - 1.0 - trace_term - sxx_scale * c) / (mf - 2.0);
    let m_eff = 2.0 * mf / (mf - (mf - 2.0) * b);
    Ok(CorrectionFactors {
        design: Design::Rate,
        c,
        b,
        m_eff,
        m,
        rho,
    })
}

/// Factors computed directly from the design matrix `X` and the AR(1)
/// correlation matrix `R`:
///
/// * `c` is the last diagonal entry of `(X'X)^-1 X'RX (X'X)^-1`;
/// * `b = (m - tr(P_X R)) / (m - p)`;
/// * `m_eff` solves `b = m (m_eff - p) / (m_eff (m - p))`.
pub fn oracle_factors(design: Design, m: usize, rho: f64) -> Result<CorrectionFactors> {
    let p = design.params();
    if m <= p {
        return Err(Error::domain(format!("oracle needs m > {p}, got {m}")));
    }
    if m > ORACLE_MAX_LEN {
        return Err(Error::domain(format!(
            "oracle limited to m <= {ORACLE_MAX_LEN}, got {m}"
        )));
    }
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::domain(format!("correlation matrix is singular for rho = {rho}")));
    }
    let x = design_matrix(design, m);
    let r = ar1_correlation(m, rho);
    let xtx_inv = (x.transpose() * &x)
        .try_inverse()
        .ok_or_else(|| Error::domain("design matrix is rank deficient"))?;
    let xtrx = x.transpose() * &r * &x;
    let var = &xtx_inv * &xtrx * &xtx_inv;
    let c = var[(p - 1, p - 1)];
    // tr(P_X R) = tr((X'X)^-1 X'RX)
    let trace = (&xtx_inv * &xtrx).trace();
    let (mf, pf) = (m as f64, p as f64);
    let b = (mf - trace) / (mf - pf);
    let m_eff = mf * pf / (mf - b * (mf - pf));
    Ok(CorrectionFactors {
        design,
        c,
        b,
        m_eff,
        m,
        rho,
    })
}

/// Centred index `x_j = j - (m + 1) / 2` for `j = 1..=m`.
pub fn centred_index(m: usize) -> Vec<f64> {
    let mid = (m as f64 + 1.0) / 2.0;
    (1..=m).map(|j| j as f64 - mid).collect()
}

/// Columns: intercept, then the centred index for the rate design.
pub fn design_matrix(design: Design, m: usize) -> DMatrix<f64> {
    match design {
        Design::Level => DMatrix::from_element(m, 1, 1.0),
        Design::Rate => {
            let x = centred_index(m);
            DMatrix::from_fn(m, 2, |i, j| if j == 0 { 1.0 } else { x[i] })
        }
    }
}

/// `R[j, k] = rho^|j - k|`.
pub fn ar1_correlation(m: usize, rho: f64) -> DMatrix<f64> {
    let powers: Vec<f64> = std::iter::successors(Some(1.0), |p| Some(p * rho)).take(m).collect();
    DMatrix::from_fn(m, m, |j, k| powers[j.abs_diff(k)])
}
