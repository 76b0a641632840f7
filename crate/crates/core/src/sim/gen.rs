//! Stationary AR(1) generators.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimate::Series;

fn check_rho(rho: f64) -> Result<()> {
    if !rho.is_finite() || rho.abs() >= 1.0 {
        return Err(Error::domain(format!("rho must lie in (-1, 1), got {rho}")));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    Ok(())
}

/// Fills `out` with a zero-mean stationary AR(1) path of marginal standard
/// deviation `sigma`, using `noise()` as the standard normal source.
fn ar1_path(out: &mut [f64], rho: f64, sigma: f64, mut noise: impl FnMut() -> f64) {
    let innov = sigma * (1.0 - rho * rho).sqrt();
    let mut z = sigma * noise();
    for (j, slot) in out.iter_mut().enumerate() {
        if j > 0 {
            z = rho * z + innov * noise();
        }
        *slot = z;
    }
}

/// `y_j = mean_j + z_j` with `z` stationary AR(1): every `y_j` has variance
/// `sigma^2` and `corr(y_j, y_k) = rho^|j-k|`.
pub fn gen_ar1<R: Rng + ?Sized>(rho: f64, sigma: f64, mean: &[f64], rng: &mut R) -> Result<Series> {
    check_rho(rho)?;
    check_sigma(sigma)?;
    let mut y = vec![0.0; mean.len()];
    ar1_path(&mut y, rho, sigma, || rng.sample(StandardNormal));
    for (v, mu) in y.iter_mut().zip(mean) {
        *v += mu;
    }
    Series::new(y)
}

/// Two AR(1) series with common `rho` whose innovations (and starting
/// values) have correlation `rho_pair`. Then `corr(y_Aj, y_Bj) = rho_pair`
/// and `y_A - y_B` is AR(1) with variance `2 sigma^2 (1 - rho_pair)`.
pub fn gen_paired<R: Rng + ?Sized>(
    rho: f64,
    rho_pair: f64,
    sigma: f64,
    mean_a: &[f64],
    mean_b: &[f64],
    rng: &mut R,
) -> Result<(Series, Series)> {
    check_rho(rho)?;
    check_sigma(sigma)?;
    if !(0.0..1.0).contains(&rho_pair) {
        return Err(Error::domain(format!("rho_pair must lie in [0, 1), got {rho_pair}")));
    }
    if mean_a.len() != mean_b.len() {
        return Err(Error::Invalid("paired mean sequences differ in length".into()));
    }
    let m = mean_a.len();
    let orth = (1.0 - rho_pair * rho_pair).sqrt();
    let pairs: Vec<(f64, f64)> = (0..m)
        .map(|_| {
            let u: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            (u, rho_pair * u + orth * v)
        })
        .collect();
    let mut a = vec![0.0; m];
    let mut b = vec![0.0; m];
    let mut ia = pairs.iter().map(|p| p.0);
    ar1_path(&mut a, rho, sigma, || ia.next().unwrap_or_default());
    let mut ib = pairs.iter().map(|p| p.1);
    ar1_path(&mut b, rho, sigma, || ib.next().unwrap_or_default());
    for (v, mu) in a.iter_mut().zip(mean_a) {
        *v += mu;
    }
    for (v, mu) in b.iter_mut().zip(mean_b) {
        *v += mu;
    }
    Ok((Series::new(a)?, Series::new(b)?))
}
