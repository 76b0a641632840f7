//! Invariants of the tests under transformations of the data.

use nof1_serial::ar1::TestKind;
use nof1_serial::dist::TailSide;
use nof1_serial::estimate::Series;
use nof1_serial::ttest::{registry, Method, Sample, TestOptions, TestResult};
use proptest::prelude::*;

fn run(kind: TestKind, method: Method, sample: Sample<'_>, opts: &TestOptions) -> TestResult {
    registry()
        .procedure(kind, method)
        .unwrap()
        .run(sample, opts)
        .unwrap()
        .result
}

fn series(values: &[f64]) -> Series {
    Series::new(values.to_vec()).unwrap()
}

fn map(values: &[f64], f: impl Fn(usize, f64) -> f64) -> Vec<f64> {
    values.iter().enumerate().map(|(j, &v)| f(j, v)).collect()
}

fn values(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, len)
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1.0)
}

fn same_inference(a: &TestResult, b: &TestResult) -> bool {
    near(a.statistic, b.statistic) && near(a.df, b.df) && near(a.p_value, b.p_value)
}

const SIDES: [TailSide; 3] = [TailSide::Lower, TailSide::Upper, TailSide::TwoSided];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn zero_correlation_reduces_to_usual(a in values(5..25), b in values(5..25), side in 0..3usize) {
        let (sa, sb) = (series(&a), series(&b));
        for kind in TestKind::ALL {
            let sample = if kind.is_paired() { Sample::Single(&sa) } else { Sample::Pair(&sa, &sb) };
            let opts = TestOptions::new(SIDES[side]);
            let s = run(kind, Method::Serial, sample, &opts.with_rho(0.0));
            let u = run(kind, Method::Usual, sample, &opts);
            prop_assert!(same_inference(&s, &u), "{kind}: {s:?} vs {u:?}");
        }
    }

    #[test]
    fn scale_equivariance(a in values(6..20), b in values(6..20), k in 0.01..100.0f64) {
        let (sa, sb) = (series(&a), series(&b));
        let (ka, kb) = (series(&map(&a, |_, v| k * v)), series(&map(&b, |_, v| k * v)));
        for kind in TestKind::ALL {
            for method in [Method::Serial, Method::Usual] {
                let (orig, scaled) = if kind.is_paired() {
                    (Sample::Single(&sa), Sample::Single(&ka))
                } else {
                    (Sample::Pair(&sa, &sb), Sample::Pair(&ka, &kb))
                };
                let opts = TestOptions::new(TailSide::TwoSided);
                let (x, y) = (run(kind, method, orig, &opts), run(kind, method, scaled, &opts));
                prop_assert!(same_inference(&x, &y), "{kind} {method}");
                prop_assert!(near(k * x.effect, y.effect) && near(k * x.se, y.se));
                prop_assert!(near(x.rho_used, y.rho_used));
            }
        }
    }

    #[test]
    fn location_invariance(a in values(6..20), b in values(6..20), shift in -1e3..1e3f64, slope in -10.0..10.0f64) {
        let (sa, sb) = (series(&a), series(&b));
        let opts = TestOptions::new(TailSide::Upper);
        // A common level shift leaves two-sample level tests unchanged.
        let (la, lb) = (series(&map(&a, |_, v| v + shift)), series(&map(&b, |_, v| v + shift)));
        // A common trend leaves two-sample rate tests unchanged; a level shift
        // of the differences leaves the paired rate test unchanged.
        let (ta, tb) = (
            series(&map(&a, |j, v| v + shift + slope * j as f64)),
            series(&map(&b, |j, v| v + shift + slope * j as f64)),
        );
        let da = series(&map(&a, |_, v| v + shift));
        for method in [Method::Serial, Method::Usual] {
            let cases = [
                (TestKind::TwoSampleLevel, Sample::Pair(&sa, &sb), Sample::Pair(&la, &lb)),
                (TestKind::TwoSampleRate, Sample::Pair(&sa, &sb), Sample::Pair(&ta, &tb)),
                (TestKind::PairedRate, Sample::Single(&sa), Sample::Single(&da)),
            ];
            for (kind, x, y) in cases {
                let (x, y) = (run(kind, method, x, &opts), run(kind, method, y, &opts));
                prop_assert!(same_inference(&x, &y), "{kind} {method}: {x:?} vs {y:?}");
            }
        }
    }

    #[test]
    fn order_matters_only_through_the_correlation(d in values(5..20)) {
        let forward = series(&d);
        let mut rev = d.clone();
        rev.reverse();
        let backward = series(&rev);
        let opts = TestOptions::new(TailSide::TwoSided);
        // Lag-one correlation is symmetric in time, so reversal leaves the
        // level test unchanged and negates the slope.
        for method in [Method::Serial, Method::Usual] {
            let x = run(TestKind::PairedLevel, method, Sample::Single(&forward), &opts);
            let y = run(TestKind::PairedLevel, method, Sample::Single(&backward), &opts);
            prop_assert!(same_inference(&x, &y));
            let x = run(TestKind::PairedRate, method, Sample::Single(&forward), &opts);
            let y = run(TestKind::PairedRate, method, Sample::Single(&backward), &opts);
            prop_assert!(near(x.statistic, -y.statistic) && near(x.p_value, y.p_value));
        }
    }

    #[test]
    fn sides_are_consistent(a in values(5..20), b in values(5..20)) {
        let (sa, sb) = (series(&a), series(&b));
        for kind in TestKind::ALL {
            let sample = if kind.is_paired() { Sample::Single(&sa) } else { Sample::Pair(&sa, &sb) };
            let p = |side| run(kind, Method::Serial, sample, &TestOptions::new(side)).p_value;
            let (lo, up, two) = (p(TailSide::Lower), p(TailSide::Upper), p(TailSide::TwoSided));
            prop_assert!((lo + up - 1.0).abs() < 1e-12, "{kind}: {lo} + {up}");
            prop_assert!((two - (2.0 * lo.min(up)).min(1.0)).abs() < 1e-12);
        }
    }
}

#[test]
fn serial_test_is_order_sensitive() {
    // Same values, different order: the usual test cannot tell them apart.
    let smooth = series(&[0.1, 0.3, 0.6, 0.9, 1.2, 1.1, 0.8, 0.5]);
    let jagged = series(&[0.1, 1.2, 0.3, 1.1, 0.6, 0.8, 0.9, 0.5]);
    let opts = TestOptions::new(TailSide::Upper);
    let usual = |s| run(TestKind::PairedLevel, Method::Usual, Sample::Single(s), &opts);
    let serial = |s| run(TestKind::PairedLevel, Method::Serial, Sample::Single(s), &opts);
    assert!(same_inference(&usual(&smooth), &usual(&jagged)));
    let (s, j) = (serial(&smooth), serial(&jagged));
    assert!(s.rho_used > 0.0 && j.rho_used < 0.0);
    assert!(s.p_value > j.p_value);
}
