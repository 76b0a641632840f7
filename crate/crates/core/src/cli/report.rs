//! Report types, the reference-table reproductions, and their text, CSV
//! and JSON renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::datasets::{dataset, TABLE1_PATIENTS};
use super::ingest::Table;
use crate::ar1::{Design, TestKind};
use crate::dist::TailSide;
use crate::error::{Error, Result};
use crate::estimate::{fit, pooled_corr, serial_corr, Series};
use crate::power::PowerReport;
use crate::sim::{FigureData, McSummary};
use crate::ttest::{registry, Analysis, Flag, Method, Sample, TestOptions, TestResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRequest {
    pub kind: TestKind,
    pub method: Method,
    pub side: TailSide,
    pub alpha: f64,
    /// File path or bundled dataset name.
    pub input: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_override: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub request: AnalysisRequest,
    pub analysis: Analysis,
    /// `p_value <= alpha`.
    pub reject: bool,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    #[serde(flatten)]
    pub report: PowerReport,
    /// Power at the requested effect, if one was given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub patient: u32,
    pub m: usize,
    pub mean: f64,
    pub sd: f64,
    pub r: f64,
    pub usual_p: f64,
    pub serial_p: f64,
    pub serial_t: f64,
    pub serial_df: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub side: TailSide,
    pub rows: Vec<Table1Row>,
}

/// Residual SD and corrected correlation of one series (or pooled pair)
/// under one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Estimate {
    pub series: String,
    pub design: Design,
    pub s: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Report {
    pub side: TailSide,
    pub estimates: Vec<Table2Estimate>,
    pub tests: Vec<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "kebab-case")]
pub enum Report {
    Analyze(AnalyzeReport),
    Power { rows: Vec<PowerRow> },
    Simulate(McSummary),
    Table1(Table1Report),
    Table2(Table2Report),
    FigureData(FigureData),
}

pub fn analyze(request: AnalysisRequest, table: &Table) -> Result<AnalyzeReport> {
    if !(request.alpha > 0.0 && request.alpha <= 0.5) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 0.5], got {}",
            request.alpha
        )));
    }
    let sample = match (table, request.kind.is_paired()) {
        (Table::Single(s), true) => Sample::Single(s),
        (Table::Pair(a, b), _) => Sample::Pair(a, b),
        (Table::Single(_), false) => {
            return Err(Error::Invalid(format!("{} needs an 'index,a,b' input", request.kind)))
        }
    };
    let opts = TestOptions {
        side: request.side,
        rho_override: request.rho_override,
    };
    let analysis = registry().procedure(request.kind, request.method)?.run(sample, &opts)?;
    let warnings = analysis
        .result
        .flags
        .iter()
        .map(|f| match f {
            Flag::CorrelationClamped => "correlation estimate clamped to +-0.99".to_string(),
            Flag::LowDf => format!("degrees of freedom {:.3} below 1", analysis.result.df),
        })
        .collect();
    let reject = analysis.result.p_value <= request.alpha;
    Ok(AnalyzeReport {
        request,
        analysis,
        reject,
        warnings,
    })
}

fn bundled_single(name: &str) -> Result<Series> {
    match dataset(name)?.table()? {
        Table::Single(s) => Ok(s),
        Table::Pair(..) => Err(Error::Invalid(format!("dataset '{name}' has two columns"))),
    }
}

fn run(kind: TestKind, method: Method, sample: Sample<'_>, side: TailSide) -> Result<TestResult> {
    Ok(registry()
        .procedure(kind, method)?
        .run(sample, &TestOptions::new(side))?
        .result)
}

pub fn table1(side: TailSide) -> Result<Table1Report> {
    let rows = TABLE1_PATIENTS
        .iter()
        .map(|&(patient, name)| {
            let d = bundled_single(name)?;
            let level = fit(Design::Level, &d)?;
            let serial = run(TestKind::PairedLevel, Method::Serial, Sample::Single(&d), side)?;
            let usual = run(TestKind::PairedLevel, Method::Usual, Sample::Single(&d), side)?;
            Ok(Table1Row {
                patient,
                m: d.len(),
                mean: level.mu_hat,
                sd: level.s2.sqrt(),
                r: serial_corr(&level)?.r,
                usual_p: usual.p_value,
                serial_p: serial.p_value,
                serial_t: serial.statistic,
                serial_df: serial.df,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Table1Report { side, rows })
}

pub fn table2(side: TailSide) -> Result<Table2Report> {
    let (pre, post) = match dataset("table2-pre-post")?.table()? {
        Table::Pair(a, b) => (a, b),
        Table::Single(_) => return Err(Error::Invalid("table2-pre-post must have two columns".into())),
    };
    let diff = bundled_single("table2-difference")?;
    let mut estimates = Vec::new();
    for design in [Design::Level, Design::Rate] {
        let fits = [fit(design, &pre)?, fit(design, &post)?, fit(design, &diff)?];
        let corr = fits.iter().map(serial_corr).collect::<Result<Vec<_>>>()?;
        for (name, f, c) in [
            ("pre", &fits[0], &corr[0]),
            ("post", &fits[1], &corr[1]),
            ("difference", &fits[2], &corr[2]),
        ] {
            estimates.push(Table2Estimate {
                series: name.into(),
                design,
                s: f.s2.sqrt(),
                r: c.r,
            });
        }
        let dof = (pre.len() + post.len() - 2 * design.params()) as f64;
        estimates.push(Table2Estimate {
            series: "pooled".into(),
            design,
            s: ((fits[0].sse + fits[1].sse) / dof).sqrt(),
            r: pooled_corr(&corr[0], &corr[1]),
        });
    }
    let tests = vec![
        run(
            TestKind::TwoSampleLevel,
            Method::Serial,
            Sample::Pair(&pre, &post),
            side,
        )?,
        run(TestKind::TwoSampleRate, Method::Serial, Sample::Pair(&pre, &post), side)?,
        run(TestKind::PairedLevel, Method::Serial, Sample::Single(&diff), side)?,
        run(TestKind::PairedRate, Method::Serial, Sample::Single(&diff), side)?,
    ];
    Ok(Table2Report { side, estimates, tests })
}

/// `x` to 4 significant digits.
pub fn sig4(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.3e}");
    }
    format!("{:.*}", (3 - mag).max(0) as usize, x)
}

fn opt4(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), sig4)
}

fn test_line(out: &mut String, r: &TestResult) {
    let _ = writeln!(
        out,
        "{:<17} {:<7} t = {:>9}  df = {:>8}  p({}) = {:>9}  effect = {:>9}  se = {:>9}  rho = {}",
        r.kind.as_str(),
        r.method.as_str(),
        sig4(r.statistic),
        sig4(r.df),
        r.side,
        sig4(r.p_value),
        sig4(r.effect),
        sig4(r.se),
        sig4(r.rho_used),
    );
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| Error::Invalid(format!("json: {e}")))
    }

    /// CSV tables, each with a file stem.
    pub fn csv_tables(&self) -> Result<Vec<(&'static str, String)>> {
        fn table<T: Serialize>(rows: &[T]) -> Result<String> {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in rows {
                w.serialize(row).map_err(|e| Error::Invalid(format!("csv: {e}")))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
            String::from_utf8(bytes).map_err(|e| Error::Invalid(format!("csv: {e}")))
        }
        Ok(match self {
            Report::Analyze(a) => vec![("analysis", table(&[flat_result(&a.analysis.result)])?)],
            Report::Power { rows } => {
                let flat: Vec<_> = rows.iter().map(FlatPower::from).collect();
                vec![("power", table(&flat)?)]
            }
            Report::Simulate(s) => vec![("simulation", table(&s.cells)?)],
            Report::Table1(t) => vec![("table1", table(&t.rows)?)],
            Report::Table2(t) => vec![
                ("table2_estimates", table(&t.estimates)?),
                (
                    "table2_tests",
                    table(&t.tests.iter().map(flat_result).collect::<Vec<_>>())?,
                ),
            ],
            Report::FigureData(f) => vec![("type_one", table(&f.type_one)?), ("effects", table(&f.effects)?)],
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self {
            Report::Analyze(a) => {
                let q = &a.request;
                let _ = writeln!(out, "{} {} test on {}", q.method, q.kind, q.input);
                for s in &a.analysis.series {
                    let _ = writeln!(
                        out,
                        "  {:<12} m = {:<4} mean = {:>9}  slope = {:>9}  s = {:>9}  r = {}",
                        s.label,
                        s.m,
                        sig4(s.mu_hat),
                        opt4(s.beta_hat),
                        sig4(s.s),
                        opt4(s.r),
                    );
                }
                test_line(&mut out, &a.analysis.result);
                let verdict = if a.reject { "reject" } else { "do not reject" };
                let _ = writeln!(out, "{verdict} at alpha = {}", q.alpha);
                for w in &a.warnings {
                    let _ = writeln!(out, "warning: {w}");
                }
            }
            Report::Power { rows } => {
                let _ = writeln!(
                    out,
                    "{:<17} {:<7} {:>5} {:>5} {:>8} {:>8} {:>9} {:>9}",
                    "kind", "method", "m", "m_b", "rho", "df", "delta80", "power"
                );
                for r in rows {
                    let q = &r.report.query;
                    let _ = writeln!(
                        out,
                        "{:<17} {:<7} {:>5} {:>5} {:>8} {:>8} {:>9} {:>9}",
                        q.kind.as_str(),
                        q.method.as_str(),
                        q.m,
                        q.sizes().1.map_or("-".into(), |m| m.to_string()),
                        sig4(q.rho),
                        sig4(r.report.df),
                        sig4(r.report.detectable_effect),
                        opt4(r.power),
                    );
                }
            }
            Report::Simulate(s) => {
                let st = &s.config.settings;
                let _ = writeln!(
                    out,
                    "{} seed {} replicates {} alpha {} side {} effect {}",
                    s.config.kind,
                    st.seed,
                    st.replicates,
                    st.alpha,
                    st.side,
                    opt4(s.config.effect),
                );
                let _ = writeln!(
                    out,
                    "{:>5} {:>7} {:>8} {:>9} {:>9} {:>9} {:>8}",
                    "m", "rho", "rho_pair", "serial", "usual", "mean_r", "excluded"
                );
                for c in &s.cells {
                    let _ = writeln!(
                        out,
                        "{:>5} {:>7} {:>8} {:>9} {:>9} {:>9} {:>8}",
                        c.m,
                        sig4(c.rho),
                        sig4(c.rho_pair),
                        sig4(c.serial_rate),
                        sig4(c.usual_rate),
                        sig4(c.mean_r),
                        c.excluded
                    );
                }
            }
            Report::Table1(t) => {
                let _ = writeln!(out, "paired level-change tests, {} p-values", t.side);
                let _ = writeln!(
                    out,
                    "{:>7} {:>3} {:>8} {:>8} {:>8} {:>9} {:>9}",
                    "patient", "m", "mean", "sd", "r", "usual_p", "serial_p"
                );
                for r in &t.rows {
                    let _ = writeln!(
                        out,
                        "{:>7} {:>3} {:>8} {:>8} {:>8} {:>9} {:>9}",
                        r.patient,
                        r.m,
                        sig4(r.mean),
                        sig4(r.sd),
                        sig4(r.r),
                        sig4(r.usual_p),
                        sig4(r.serial_p)
                    );
                }
            }
            Report::Table2(t) => {
                let _ = writeln!(out, "{:<11} {:<6} {:>8} {:>8}", "series", "model", "s", "r");
                for e in &t.estimates {
                    let model = match e.design {
                        Design::Level => "level",
                        Design::Rate => "rate",
                    };
                    let _ = writeln!(out, "{:<11} {:<6} {:>8} {:>8}", e.series, model, sig4(e.s), sig4(e.r));
                }
                for r in &t.tests {
                    test_line(&mut out, r);
                }
            }
            Report::FigureData(f) => {
                let _ = writeln!(
                    out,
                    "{} Type I cells, {} effect-ratio cells",
                    f.type_one.len(),
                    f.effects.len()
                );
                let _ = writeln!(
                    out,
                    "{:<17} {:>4} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8}",
                    "kind", "m", "rho", "rho_p", "theory", "serial", "ratio_s", "ratio_u"
                );
                for e in &f.effects {
                    let _ = writeln!(
                        out,
                        "{:<17} {:>4} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8}",
                        e.kind.as_str(),
                        e.m,
                        sig4(e.rho),
                        sig4(e.rho_pair),
                        sig4(e.theoretical),
                        sig4(e.serial),
                        sig4(e.serial_ratio),
                        sig4(e.usual_ratio)
                    );
                }
            }
        }
        out
    }
}

/// Test result without the flag list, for CSV.
#[derive(Serialize)]
struct FlatResult {
    kind: TestKind,
    method: Method,
    side: TailSide,
    statistic: f64,
    df: f64,
    p_value: f64,
    effect: f64,
    se: f64,
    rho_used: f64,
    flags: String,
}

fn flat_result(r: &TestResult) -> FlatResult {
    let flags = r
        .flags
        .iter()
        .map(|f| match f {
            Flag::CorrelationClamped => "correlation-clamped",
            Flag::LowDf => "low-df",
        })
        .collect::<Vec<_>>()
        .join(";");
    FlatResult {
        kind: r.kind,
        method: r.method,
        side: r.side,
        statistic: r.statistic,
        df: r.df,
        p_value: r.p_value,
        effect: r.effect,
        se: r.se,
        rho_used: r.rho_used,
        flags,
    }
}

#[derive(Serialize)]
struct FlatPower {
    kind: TestKind,
    method: Method,
    m: usize,
    m_b: Option<usize>,
    rho: f64,
    alpha: f64,
    side: TailSide,
    target_power: f64,
    se: f64,
    df: f64,
    detectable_effect: f64,
    delta: Option<f64>,
    power: Option<f64>,
}

impl From<&PowerRow> for FlatPower {
    fn from(r: &PowerRow) -> Self {
        let q = &r.report.query;
        FlatPower {
            kind: q.kind,
            method: q.method,
            m: q.m,
            m_b: q.sizes().1,
            rho: q.rho,
            alpha: q.alpha,
            side: q.side,
            target_power: q.target_power,
            se: r.report.se,
            df: r.report.df,
            detectable_effect: r.report.detectable_effect,
            delta: r.delta,
            power: r.power,
        }
    }
}
