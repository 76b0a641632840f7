//! Moments of the AR(1) generators from 10^6 draws.

use nof1_serial::sim::{gen_ar1, gen_paired};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const N: usize = 1_000_000;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn cov(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64
}

fn corr(x: &[f64], y: &[f64]) -> f64 {
    cov(x, y) / (cov(x, x) * cov(y, y)).sqrt()
}

fn lag_corr(x: &[f64], lag: usize) -> f64 {
    corr(&x[..x.len() - lag], &x[lag..])
}

#[test]
fn long_ar1_path_has_the_target_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (rho, sigma) in [(-0.6, 1.0), (0.0, 2.0), (0.33, 0.5), (0.9, 1.0)] {
        let y = gen_ar1(rho, sigma, &vec![3.0; N], &mut rng).unwrap();
        let y = y.values();
        // Standard errors shrink like 1/sqrt(effective size), worst at rho = 0.9.
        let ess = N as f64 * (1.0 - rho) / (1.0 + rho);
        assert!(
            (mean(y) - 3.0).abs() < 5.0 * sigma / ess.sqrt(),
            "rho {rho}: mean {}",
            mean(y)
        );
        assert!(
            (cov(y, y) / (sigma * sigma) - 1.0).abs() < 0.02,
            "rho {rho}: var {}",
            cov(y, y)
        );
        assert!(
            (lag_corr(y, 1) - rho).abs() < 0.005,
            "rho {rho}: lag 1 {}",
            lag_corr(y, 1)
        );
        assert!(
            (lag_corr(y, 2) - rho * rho).abs() < 0.006,
            "rho {rho}: lag 2 {}",
            lag_corr(y, 2)
        );
    }
}

#[test]
fn short_paths_start_stationary() {
    // Across many short paths every position has variance sigma^2 and
    // neighbouring positions have correlation rho.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (rho, reps, m) = (0.67, N / 5, 5);
    let mut cols = vec![Vec::with_capacity(reps); m];
    for _ in 0..reps {
        let y = gen_ar1(rho, 1.0, &[0.0; 5], &mut rng).unwrap();
        for (col, v) in cols.iter_mut().zip(y.values()) {
            col.push(*v);
        }
    }
    for (j, col) in cols.iter().enumerate() {
        assert!((cov(col, col) - 1.0).abs() < 0.01, "position {j}");
    }
    for (j, pair) in cols.windows(2).enumerate() {
        assert!(
            (corr(&pair[0], &pair[1]) - rho).abs() < 0.005,
            "positions {j}, {}",
            j + 1
        );
    }
    assert!((corr(&cols[0], &cols[4]) - rho.powi(4)).abs() < 0.005);
}

#[test]
fn paired_series_have_the_target_cross_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (rho, rho_pair) in [(0.0, 0.33), (0.5, 0.67), (-0.33, 0.0)] {
        let (a, b) = gen_paired(rho, rho_pair, 1.0, &vec![1.0; N], &vec![0.0; N], &mut rng).unwrap();
        let (a, b) = (a.values(), b.values());
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        assert!(
            (corr(a, b) - rho_pair).abs() < 0.005,
            "rho_pair {rho_pair}: {}",
            corr(a, b)
        );
        assert!((lag_corr(a, 1) - rho).abs() < 0.005 && (lag_corr(b, 1) - rho).abs() < 0.005);
        assert!(
            (lag_corr(&d, 1) - rho).abs() < 0.005,
            "differences lag 1 {}",
            lag_corr(&d, 1)
        );
        let var_d = 2.0 * (1.0 - rho_pair);
        assert!(
            (cov(&d, &d) / var_d - 1.0).abs() < 0.02,
            "differences var {}",
            cov(&d, &d)
        );
        assert!((mean(&d) - 1.0).abs() < 0.01);
    }
}

#[test]
fn generators_validate_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(gen_ar1(1.0, 1.0, &[0.0; 4], &mut rng).is_err());
    assert!(gen_ar1(0.5, 0.0, &[0.0; 4], &mut rng).is_err());
    assert!(gen_paired(0.5, 1.0, 1.0, &[0.0; 4], &[0.0; 4], &mut rng).is_err());
    assert!(gen_paired(0.5, 0.3, 1.0, &[0.0; 4], &[0.0; 3], &mut rng).is_err());
}
