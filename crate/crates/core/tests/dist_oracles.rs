//! Student t and noncentral t against independent oracles: numerical
//! quadrature of the density, and direct simulation.

use nof1_serial::dist::{critical_value, nct_cdf, nct_power, t_cdf, t_quantile, TailSide};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

fn t_density(x: f64, df: f64) -> f64 {
    let ln_norm = ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * std::f64::consts::PI).ln();
    (ln_norm - 0.5 * (df + 1.0) * (x * x / df).ln_1p()).exp()
}

/// Composite Gauss-Legendre (5 points per panel) over `[a, b]`.
fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const NODES: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const WEIGHTS: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let mid = a + (i as f64 + 0.5) * h;
            NODES
                .iter()
                .zip(WEIGHTS)
                .map(|(x, w)| w * f(mid + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

#[test]
fn t_cdf_matches_quadrature() {
    for df in [0.5, 1.3, 2.29, 3.98, 7.0, 30.0, 250.0] {
        for t in [0.05, 0.4, 1.0, 1.833, 3.0, 6.5] {
            let q = 0.5 + integrate(|x| t_density(x, df), 0.0, t, 2000);
            let got = t_cdf(t, df).unwrap();
            assert!((got - q).abs() < 1e-10, "df {df} t {t}: {got} vs {q}");
            assert!((t_cdf(-t, df).unwrap() - (1.0 - q)).abs() < 1e-10);
        }
    }
}

#[test]
fn quantile_inverts_cdf() {
    for df in [0.3, 1.0, 2.5, 9.0, 120.0] {
        for p in [0.001, 0.025, 0.3, 0.5, 0.8, 0.975] {
            let t = t_quantile(p, df).unwrap();
            assert!((t_cdf(t, df).unwrap() - p).abs() < 1e-11, "df {df} p {p}");
        }
    }
}

/// The noncentral t density, integrated numerically over the normal
/// mixture: `P(T <= t) = E_V[Phi(t sqrt(V/df) - delta)]`, `V ~ chi2_df`.
fn nct_cdf_quadrature(t: f64, df: f64, delta: f64) -> f64 {
    let half = 0.5 * df;
    let ln_norm = -ln_gamma(half) - half * 2f64.ln();
    let chi2_density = |v: f64| {
        if v <= 0.0 {
            0.0
        } else {
            (ln_norm + (half - 1.0) * v.ln() - 0.5 * v).exp()
        }
    };
    let phi = |x: f64| 0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2);
    // Substitute v = u^2 to remove the singularity at zero for df < 2.
    let upper = (df + 40.0 * (2.0 * df).sqrt() + 200.0).sqrt();
    integrate(
        |u| 2.0 * u * chi2_density(u * u) * phi(t * u / df.sqrt() - delta),
        0.0,
        upper,
        20_000,
    )
}

#[test]
fn nct_cdf_matches_quadrature() {
    for (t, df, delta) in [
        (1.833, 9.0, 2.6),
        (-0.7, 2.29, 1.5),
        (2.0, 3.98, 0.8),
        (0.4, 30.0, -1.1),
        (4.0, 2.5, 3.5),
    ] {
        let q = nct_cdf_quadrature(t, df, delta);
        let got = nct_cdf(t, df, delta).unwrap();
        assert!((got - q).abs() < 1e-8, "({t}, {df}, {delta}): {got} vs {q}");
    }
}

#[test]
fn nct_power_matches_simulation() {
    let n = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for (df, lambda, side) in [
        (4.0, 1.5, TailSide::Upper),
        (2.29, 2.0, TailSide::TwoSided),
        (11.5, -1.0, TailSide::Lower),
    ] {
        let chi = ChiSquared::new(df).unwrap();
        let crit = critical_value(0.05, df, side).unwrap();
        let hits = (0..n)
            .filter(|_| {
                let z: f64 = rng.sample(StandardNormal);
                let t = (z + lambda) / (chi.sample(&mut rng) / df).sqrt();
                match side {
                    TailSide::Upper => t > crit,
                    TailSide::Lower => t < crit,
                    TailSide::TwoSided => t.abs() > crit,
                }
            })
            .count();
        let sim = hits as f64 / n as f64;
        let exact = nct_power(df, lambda, 0.05, side).unwrap();
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!(
            (sim - exact).abs() < 4.0 * se,
            "df {df} lambda {lambda}: {sim} vs {exact}"
        );
    }
}
