use std::borrow::Cow;

use super::{finish, Analysis, Computed, Method, Sample, SeriesEstimate, TestOptions, TestProcedure};
use crate::ar1::{clamp_rho, Design, TestKind};
use crate::error::{Error, Result};
use crate::estimate::{fit, pooled_corr, serial_corr, Series};

fn kind_for(design: Design, paired: bool) -> TestKind {
    match (design, paired) {
        (Design::Level, true) => TestKind::PairedLevel,
        (Design::Level, false) => TestKind::TwoSampleLevel,
        (Design::Rate, true) => TestKind::PairedRate,
        (Design::Rate, false) => TestKind::TwoSampleRate,
    }
}

pub(super) fn differences<'a>(sample: Sample<'a>) -> Result<Cow<'a, Series>> {
    match sample {
        Sample::Single(d) => Ok(Cow::Borrowed(d)),
        Sample::Pair(a, b) => Ok(Cow::Owned(Series::difference(a, b)?)),
    }
}

pub(super) fn two_series<'a>(kind: TestKind, sample: Sample<'a>) -> Result<(&'a Series, &'a Series)> {
    match sample {
        Sample::Pair(a, b) => Ok((a, b)),
        Sample::Single(_) => Err(Error::Invalid(format!("{kind} needs two series"))),
    }
}

/// An explicit correlation replaces the estimate; it must lie in (-1, 1)
/// and is clamped like an estimate would be.
fn override_rho(rho: f64) -> Result<(f64, bool)> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::domain(format!(
            "correlation override must lie in (-1, 1), got {rho}"
        )));
    }
    Ok(clamp_rho(rho))
}

/// Serial test on a single difference series.
#[derive(Debug, Clone, Copy)]
pub struct SerialPaired {
    pub design: Design,
}

impl TestProcedure for SerialPaired {
    fn kind(&self) -> TestKind {
        kind_for(self.design, true)
    }

    fn method(&self) -> Method {
        Method::Serial
    }

    fn run(&self, sample: Sample<'_>, opts: &TestOptions) -> Result<Analysis> {
        let kind = self.kind();
        let diffs = differences(sample)?;
        kind.check_sizes(diffs.len(), None)?;
        let fit = fit(self.design, &diffs)?;
        let est = serial_corr(&fit)?;
        let (rho, clamped) = match opts.rho_override {
            Some(rho) => override_rho(rho)?,
            None => (est.r, est.clamped),
        };
        let f = self.design.factors(diffs.len(), rho)?;
        let result = finish(
            kind,
            Method::Serial,
            opts,
            Computed {
                effect: fit.estimate(),
                se: (f.scaled_variance() * fit.s2).sqrt(),
                df: f.df(),
                rho_used: rho,
                clamped,
            },
        )?;
        Ok(Analysis {
            result,
            series: vec![SeriesEstimate::new(
                diffs.label().unwrap_or("difference"),
                &fit,
                Some(&est),
            )],
            s: fit.s2.sqrt(),
        })
    }
}

/// Serial test on two independent series sharing sigma and rho.
#[derive(Debug, Clone, Copy)]
pub struct SerialTwoSample {
    pub design: Design,
}

impl TestProcedure for SerialTwoSample {
    fn kind(&self) -> TestKind {
        kind_for(self.design, false)
    }

    fn method(&self) -> Method {
        Method::Serial
    }

    fn run(&self, sample: Sample<'_>, opts: &TestOptions) -> Result<Analysis> {
        let kind = self.kind();
        let (a, b) = two_series(kind, sample)?;
        kind.check_sizes(a.len(), Some(b.len()))?;
        let fit_a = fit(self.design, a)?;
        let fit_b = fit(self.design, b)?;
        let est_a = serial_corr(&fit_a)?;
        let est_b = serial_corr(&fit_b)?;
        let (rho, clamped) = match opts.rho_override {
            Some(rho) => override_rho(rho)?,
            None => (pooled_corr(&est_a, &est_b), est_a.clamped || est_b.clamped),
        };
        let p = self.design.params();
        let s2 = (fit_a.sse + fit_b.sse) / (a.len() + b.len() - 2 * p) as f64;
        let fa = self.design.factors(a.len(), rho)?;
        let fb = self.design.factors(b.len(), rho)?;
        let result = finish(
            kind,
            Method::Serial,
            opts,
            Computed {
                effect: fit_a.estimate() - fit_b.estimate(),
                se: ((fa.scaled_variance() + fb.scaled_variance()) * s2).sqrt(),
                df: fa.m_eff + fb.m_eff - 2.0 * p as f64,
                rho_used: rho,
                clamped,
            },
        )?;
        Ok(Analysis {
            result,
            series: vec![
                SeriesEstimate::new(a.label().unwrap_or("a"), &fit_a, Some(&est_a)),
                SeriesEstimate::new(b.label().unwrap_or("b"), &fit_b, Some(&est_b)),
            ],
            s: s2.sqrt(),
        })
    }
}
