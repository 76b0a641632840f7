use super::serial::{differences, two_series};
use super::{finish, Analysis, Computed, Method, Sample, SeriesEstimate, TestOptions, TestProcedure};
use crate::ar1::{Design, TestKind};
use crate::error::{Error, Result};
use crate::estimate::{is_degenerate, ols};

/// Sum of squares of the centred index, `m (m^2 - 1) / 12`.
fn sxx(m: usize) -> f64 {
    let m = m as f64;
    m * (m * m - 1.0) / 12.0
}

fn check_len(kind: TestKind, m: usize, min: usize) -> Result<()> {
    if m < min {
        return Err(Error::MinimumSize {
            kind,
            requirement: if min == 2 { "m >= 2" } else { "m >= 3" },
            got: format!("m = {m}"),
        });
    }
    Ok(())
}

/// One-sample t on the differences (level) or the simple-regression slope
/// t (rate). Serial correlation is ignored.
#[derive(Debug, Clone, Copy)]
pub struct UsualPaired {
    pub design: Design,
}

impl TestProcedure for UsualPaired {
    fn kind(&self) -> TestKind {
        match self.design {
            Design::Level => TestKind::PairedLevel,
            Design::Rate => TestKind::PairedRate,
        }
    }

    fn method(&self) -> Method {
        Method::Usual
    }

    fn run(&self, sample: Sample<'_>, opts: &TestOptions) -> Result<Analysis> {
        let kind = self.kind();
        let diffs = differences(sample)?;
        let m = diffs.len();
        check_len(kind, m, self.design.params() + 1)?;
        let fit = ols(self.design, diffs.values());
        if is_degenerate(&fit, diffs.values()) {
            return Err(Error::Degenerate("difference series has zero residual variance".into()));
        }
        let (se, df) = match self.design {
            Design::Level => ((fit.s2 / m as f64).sqrt(), m as f64 - 1.0),
            Design::Rate => ((fit.s2 / sxx(m)).sqrt(), m as f64 - 2.0),
        };
        let result = finish(
            kind,
            Method::Usual,
            opts,
            Computed {
                effect: fit.estimate(),
                se,
                df,
                rho_used: 0.0,
                clamped: false,
            },
        )?;
        Ok(Analysis {
            result,
            series: vec![SeriesEstimate::new(diffs.label().unwrap_or("difference"), &fit, None)],
            s: fit.s2.sqrt(),
        })
    }
}

/// Pooled-variance two-sample t (level) or difference-of-slopes t (rate).
#[derive(Debug, Clone, Copy)]
pub struct UsualTwoSample {
    pub design: Design,
}

impl TestProcedure for UsualTwoSample {
    fn kind(&self) -> TestKind {
        match self.design {
            Design::Level => TestKind::TwoSampleLevel,
            Design::Rate => TestKind::TwoSampleRate,
        }
    }

    fn method(&self) -> Method {
        Method::Usual
    }

    fn run(&self, sample: Sample<'_>, opts: &TestOptions) -> Result<Analysis> {
        let kind = self.kind();
        let (a, b) = two_series(kind, sample)?;
        let min = self.design.params() + 1;
        check_len(kind, a.len(), min)?;
        check_len(kind, b.len(), min)?;
        let fit_a = ols(self.design, a.values());
        let fit_b = ols(self.design, b.values());
        if is_degenerate(&fit_a, a.values()) && is_degenerate(&fit_b, b.values()) {
            return Err(Error::Degenerate("both series have zero residual variance".into()));
        }
        let (ma, mb) = (a.len(), b.len());
        let p = self.design.params();
        let df = (ma + mb - 2 * p) as f64;
        let s2 = (fit_a.sse + fit_b.sse) / df;
        let weight = match self.design {
            Design::Level => 1.0 / ma as f64 + 1.0 / mb as f64,
            Design::Rate => 1.0 / sxx(ma) + 1.0 / sxx(mb),
        };
        let result = finish(
            kind,
            Method::Usual,
            opts,
            Computed {
                effect: fit_a.estimate() - fit_b.estimate(),
                se: (s2 * weight).sqrt(),
                df,
                rho_used: 0.0,
                clamped: false,
            },
        )?;
        Ok(Analysis {
            result,
            series: vec![
                SeriesEstimate::new(a.label().unwrap_or("a"), &fit_a, None),
                SeriesEstimate::new(b.label().unwrap_or("b"), &fit_b, None),
            ],
            s: s2.sqrt(),
        })
    }
}
