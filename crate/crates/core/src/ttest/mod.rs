//! Serial t-tests and their usual (independence-assuming) analogues.
//!
//! Every test is a [`TestProcedure`]; the eight built-in procedures live in a
//! [`Registry`] keyed by `"<method>:<kind>"`, e.g. `"serial:paired-rate"`.
//! The free functions below are shorthands for the registered procedures.

mod registry;
mod serial;
mod usual;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use registry::{registry, Registry};
pub use serial::{SerialPaired, SerialTwoSample};
pub use usual::{UsualPaired, UsualTwoSample};

use crate::ar1::TestKind;
use crate::dist::TailSide;
use crate::error::{Error, Result};
use crate::estimate::{ModelFit, SerialCorrEstimate, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Serial,
    Usual,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Serial => "serial",
            Method::Usual => "usual",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "serial" => Ok(Method::Serial),
            "usual" => Ok(Method::Usual),
            _ => Err(Error::Invalid(format!(
                "unknown method '{s}' (expected serial or usual)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    /// The correlation hit the clamp bound.
    CorrelationClamped,
    /// Degrees of freedom below one.
    LowDf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub method: Method,
    pub side: TailSide,
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    /// Mean difference (level) or slope difference (rate), response units.
    pub effect: f64,
    pub se: f64,
    pub rho_used: f64,
    pub flags: Vec<Flag>,
}

impl TestResult {
    pub fn has_flag(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }
}

/// Per-series estimates behind a test result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEstimate {
    pub label: String,
    pub m: usize,
    pub mu_hat: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_hat: Option<f64>,
    /// OLS residual standard deviation of this series alone.
    pub s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub clamped: bool,
}

impl SeriesEstimate {
    fn new(label: &str, fit: &ModelFit, corr: Option<&SerialCorrEstimate>) -> Self {
        SeriesEstimate {
            label: label.to_string(),
            m: fit.m(),
            mu_hat: fit.mu_hat,
            beta_hat: fit.beta_hat,
            s: fit.s2.sqrt(),
            rho_hat: corr.map(|c| c.rho_hat),
            r: corr.map(|c| c.r),
            clamped: corr.is_some_and(|c| c.clamped),
        }
    }
}

/// A test result together with the estimates it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub result: TestResult,
    pub series: Vec<SeriesEstimate>,
    /// Standard deviation entering the statistic (pooled for two-sample tests).
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOptions {
    pub side: TailSide,
    /// Use this correlation instead of estimating one. Ignored by usual tests.
    pub rho_override: Option<f64>,
}

impl TestOptions {
    pub fn new(side: TailSide) -> Self {
        TestOptions {
            side,
            rho_override: None,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho_override = Some(rho);
        self
    }
}

/// Input data for a test.
#[derive(Debug, Clone, Copy)]
pub enum Sample<'a> {
    /// One series: the A - B differences for paired kinds.
    Single(&'a Series),
    /// Two series. Paired kinds difference them (first minus second).
    Pair(&'a Series, &'a Series),
}

pub trait TestProcedure: Send + Sync {
    fn kind(&self) -> TestKind;

    fn method(&self) -> Method;

    fn name(&self) -> String {
        format!("{}:{}", self.method(), self.kind())
    }

    fn run(&self, sample: Sample<'_>, opts: &TestOptions) -> Result<Analysis>;
}

/// The pieces every procedure computes before a p-value.
pub(crate) struct Computed {
    pub effect: f64,
    pub se: f64,
    pub df: f64,
    pub rho_used: f64,
    pub clamped: bool,
}

pub(crate) fn finish(kind: TestKind, method: Method, opts: &TestOptions, c: Computed) -> Result<TestResult> {
    let Computed {
        effect,
        se,
        df,
        rho_used,
        clamped,
    } = c;
    if !(se > 0.0 && se.is_finite()) {
        return Err(Error::Degenerate(format!("standard error is {se}")));
    }
    let statistic = effect / se;
    let p_value = opts.side.p_value(statistic, df)?;
    let mut flags = Vec::new();
    if clamped {
        flags.push(Flag::CorrelationClamped);
    }
    if df < 1.0 {
        flags.push(Flag::LowDf);
    }
    Ok(TestResult {
        kind,
        method,
        side: opts.side,
        statistic,
        df,
        p_value,
        effect,
        se,
        rho_used,
        flags,
    })
}

fn run_named(kind: TestKind, method: Method, sample: Sample<'_>, opts: &TestOptions) -> Result<Analysis> {
    registry().procedure(kind, method)?.run(sample, opts)
}

pub fn paired_serial_level(diffs: &Series, opts: &TestOptions) -> Result<Analysis> {
    run_named(TestKind::PairedLevel, Method::Serial, Sample::Single(diffs), opts)
}

pub fn two_sample_serial_level(a: &Series, b: &Series, opts: &TestOptions) -> Result<Analysis> {
    run_named(TestKind::TwoSampleLevel, Method::Serial, Sample::Pair(a, b), opts)
}

pub fn paired_serial_rate(diffs: &Series, opts: &TestOptions) -> Result<Analysis> {
    run_named(TestKind::PairedRate, Method::Serial, Sample::Single(diffs), opts)
}

pub fn two_sample_serial_rate(a: &Series, b: &Series, opts: &TestOptions) -> Result<Analysis> {
    run_named(TestKind::TwoSampleRate, Method::Serial, Sample::Pair(a, b), opts)
}

/// One-sample t test on the differences.
pub fn usual_paired_t(diffs: &Series, side: TailSide) -> Result<Analysis> {
    run_named(
        TestKind::PairedLevel,
        Method::Usual,
        Sample::Single(diffs),
        &TestOptions::new(side),
    )
}

/// Pooled-variance two-sample t test.
pub fn usual_two_sample_t(a: &Series, b: &Series, side: TailSide) -> Result<Analysis> {
    run_named(
        TestKind::TwoSampleLevel,
        Method::Usual,
        Sample::Pair(a, b),
        &TestOptions::new(side),
    )
}

/// Slope t test from simple linear regression.
pub fn usual_slope_t(series: &Series, side: TailSide) -> Result<Analysis> {
    run_named(
        TestKind::PairedRate,
        Method::Usual,
        Sample::Single(series),
        &TestOptions::new(side),
    )
}

/// Difference-of-slopes t test with pooled residual variance.
pub fn usual_slope_diff_t(a: &Series, b: &Series, side: TailSide) -> Result<Analysis> {
    run_named(
        TestKind::TwoSampleRate,
        Method::Usual,
        Sample::Pair(a, b),
        &TestOptions::new(side),
    )
}
