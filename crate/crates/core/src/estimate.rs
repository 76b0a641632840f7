//! OLS fits, residual-based lag-one correlation and its small-sample
//! correction.

use serde::{Deserialize, Serialize};

use crate::ar1::{centred_index, clamp_rho, CorrectionFactors, Design};
use crate::error::{Error, Result};

/// Ordered observations from one individual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl Series {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Invalid(format!(
                "a series needs at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("observation {} is not finite", pos + 1)));
        }
        Ok(Series { values, label: None })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Element-wise `a - b` of two equally long series.
    pub fn difference(a: &Series, b: &Series) -> Result<Series> {
        if a.len() != b.len() {
            return Err(Error::Invalid(format!(
                "paired series differ in length ({} vs {})",
                a.len(),
                b.len()
            )));
        }
        let values = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
        Ok(Series::new(values)?.with_label("difference"))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Result of an OLS fit of one design to one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub design: Design,
    pub mu_hat: f64,
    /// Slope per index step; `None` for level fits.
    pub beta_hat: Option<f64>,
    /// Residual variance `sum(e^2) / (m - p)`.
    pub s2: f64,
    pub sse: f64,
    pub residuals: Vec<f64>,
}

impl ModelFit {
    pub fn m(&self) -> usize {
        self.residuals.len()
    }

    pub fn p(&self) -> usize {
        self.design.params()
    }

    /// The parameter the tests are about: the mean for level fits, the
    /// slope for rate fits.
    pub fn estimate(&self) -> f64 {
        self.beta_hat.unwrap_or(self.mu_hat)
    }
}

/// Lag-one correlation estimate for one residual series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerialCorrEstimate {
    /// Maximum-likelihood estimate from mean-zero residuals.
    pub rho_hat: f64,
    /// Bias-corrected estimate after clamping.
    pub r: f64,
    pub m: usize,
    pub clamped: bool,
}

/// Fit without the degeneracy check; usual tests pool variances and can
/// tolerate one flat series.
pub(crate) fn ols(design: Design, values: &[f64]) -> ModelFit {
    let m = values.len();
    let mean = values.iter().sum::<f64>() / m as f64;
    let (beta_hat, residuals): (Option<f64>, Vec<f64>) = match design {
        Design::Level => (None, values.iter().map(|y| y - mean).collect()),
        Design::Rate => {
            let x = centred_index(m);
            let sxx: f64 = x.iter().map(|v| v * v).sum();
            let sxy: f64 = x.iter().zip(values).map(|(xi, yi)| xi * yi).sum();
            let beta = sxy / sxx;
            let e = values.iter().zip(&x).map(|(y, xi)| y - mean - beta * xi).collect();
            (Some(beta), e)
        }
    };
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    ModelFit {
        design,
        mu_hat: mean,
        beta_hat,
        s2: sse / (m - design.params()) as f64,
        sse,
        residuals,
    }
}

/// Whether the residual sum of squares is zero to rounding.
pub(crate) fn is_degenerate(fit: &ModelFit, values: &[f64]) -> bool {
    let scale = values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    scale == 0.0 || fit.sse <= values.len() as f64 * (1e-12 * scale).powi(2)
}

pub fn fit(design: Design, series: &Series) -> Result<ModelFit> {
    let min = design.params() + 1;
    if series.len() < min {
        return Err(Error::domain(format!(
            "{design} fit needs at least {min} observations, got {}",
            series.len()
        )));
    }
    let fit = ols(design, series.values());
    if is_degenerate(&fit, series.values()) {
        return Err(Error::Degenerate(format!(
            "{} series has zero residual variance under the {design} model",
            series.label().unwrap_or("input")
        )));
    }
    Ok(fit)
}

/// Sample mean, mean-centred residuals and `s^2 = sum(e^2) / (m - 1)`.
pub fn fit_level(series: &Series) -> Result<ModelFit> {
    fit(Design::Level, series)
}

/// Straight-line fit on the centred index `j - (m + 1) / 2`.
pub fn fit_rate(series: &Series) -> Result<ModelFit> {
    fit(Design::Rate, series)
}

/// `rho_hat = sum_{j>=2} e_j e_{j-1} / sum_j e_j^2`, then
/// `r = rho_hat + (1 - rho_hat^2) / (m - 1)`, clamped.
pub fn serial_corr(fit: &ModelFit) -> Result<SerialCorrEstimate> {
    let e = &fit.residuals;
    let m = e.len();
    if m < 3 {
        return Err(Error::domain(format!("serial correlation needs m >= 3, got {m}")));
    }
    let ss: f64 = e.iter().map(|v| v * v).sum();
    if ss == 0.0 {
        return Err(Error::Degenerate("residual sum of squares is zero".into()));
    }
    let lag: f64 = e.windows(2).map(|w| w[0] * w[1]).sum();
    let rho_hat = lag / ss;
    let corrected = fuller_correction(rho_hat, m);
    let (r, clamped) = clamp_rho(corrected);
    Ok(SerialCorrEstimate { rho_hat, r, m, clamped })
}

/// Small-sample bias correction of the lag-one estimate.
pub fn fuller_correction(rho_hat: f64, m: usize) -> f64 {
    rho_hat + (1.0 - rho_hat * rho_hat) / (m as f64 - 1.0)
}

/// Length-weighted average of two corrected estimates.
pub fn pooled_corr(a: &SerialCorrEstimate, b: &SerialCorrEstimate) -> f64 {
    let (ma, mb) = (a.m as f64, b.m as f64);
    clamp_rho((ma * a.r + mb * b.r) / (ma + mb)).0
}

/// `s^2 / b`, unbiased for `sigma^2` under the AR(1) model.
pub fn unbiased_variance(s2: f64, factors: &CorrectionFactors) -> f64 {
    s2 / factors.b
}
