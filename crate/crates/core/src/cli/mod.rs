//! The `nof1` command line.

pub mod datasets;
pub mod ingest;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use ingest::{parse_series, Table};
pub use report::{AnalysisRequest, AnalyzeReport, PowerRow, Report};

use crate::ar1::TestKind;
use crate::dist::TailSide;
use crate::error::{Error, Result};
use crate::power::{power_report, theoretical_power, PowerQuery};
use crate::sim::{default_m, figure_data, run_monte_carlo, with_threads, McConfig, DEFAULT_REPLICATES};
use crate::ttest::Method;

#[derive(Debug, Parser)]
#[command(
    name = "nof1",
    version,
    about = "Serial-correlation-corrected t-tests for N-of-1 trials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a test on a CSV series or a bundled dataset.
    Analyze(AnalyzeArgs),
    /// Theoretical power and the effect detectable at a target power.
    Power(PowerArgs),
    /// Monte Carlo Type I error or power from a TOML config.
    Simulate(SimulateArgs),
    /// Recompute the reference tables or the figure grids.
    Reproduce(ReproduceArgs),
    /// Bundled datasets.
    Datasets {
        #[command(subcommand)]
        action: DatasetsAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum DatasetsAction {
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Lower,
    Upper,
    #[value(alias = "two-sided")]
    Two,
}

impl From<Side> for TailSide {
    fn from(s: Side) -> Self {
        match s {
            Side::Lower => TailSide::Lower,
            Side::Upper => TailSide::Upper,
            Side::Two => TailSide::TwoSided,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Serial,
    Usual,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Serial => Method::Serial,
            MethodArg::Usual => Method::Usual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    Table1,
    Table2,
    #[value(alias = "figure_data")]
    FigureData,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    /// Write files into this directory instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// paired-level, two-sample-level, paired-rate or two-sample-rate.
    pub kind: TestKind,
    /// CSV file (`-` for stdin); `index,value` or `index,a,b`.
    #[arg(required_unless_present = "dataset", conflicts_with = "dataset")]
    pub input: Option<PathBuf>,
    /// Bundled dataset name instead of a file.
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long, value_enum, default_value = "two")]
    pub side: Side,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "serial")]
    pub method: MethodArg,
    /// Use this correlation instead of the estimate.
    #[arg(long, allow_negative_numbers = true)]
    pub rho_override: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[arg(long)]
    pub kind: TestKind,
    /// Series length(s), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<usize>,
    /// Second series length for two-sample kinds (default: same as m).
    #[arg(long)]
    pub m_b: Option<usize>,
    /// Assumed correlation(s), comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
    pub rho: Vec<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "upper")]
    pub side: Side,
    #[arg(long, default_value_t = 0.8)]
    pub target_power: f64,
    #[arg(long, value_enum, default_value = "serial")]
    pub method: MethodArg,
    /// Also report the power at this effect (sigma units).
    #[arg(long)]
    pub delta: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML file with one key per configuration field.
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's replicate count.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    pub target: Target,
    /// Default: upper for table1, two for table2 and upper for figure-data.
    #[arg(long, value_enum)]
    pub side: Option<Side>,
    /// Required for figure-data.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Restrict figure-data to these kinds.
    #[arg(long, value_delimiter = ',')]
    pub kind: Vec<TestKind>,
    /// Restrict figure-data to these m values.
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn read_input(path: &Path) -> Result<String> {
    let io = |e: std::io::Error| Error::Invalid(format!("{}: {e}", path.display()));
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(io)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(io)
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<Report> {
    let (input, table) = match (&args.dataset, &args.input) {
        (Some(name), _) => (name.clone(), datasets::dataset(name)?.table()?),
        (None, Some(path)) => (path.display().to_string(), parse_series(&read_input(path)?)?),
        (None, None) => return Err(Error::Invalid("an input file or --dataset is required".into())),
    };
    let request = AnalysisRequest {
        kind: args.kind,
        method: args.method.into(),
        side: args.side.into(),
        alpha: args.alpha,
        input,
        rho_override: args.rho_override,
    };
    Ok(Report::Analyze(report::analyze(request, &table)?))
}

fn cmd_power(args: &PowerArgs) -> Result<Report> {
    let mut rows = Vec::new();
    for &m in &args.m {
        for &rho in &args.rho {
            let q = PowerQuery {
                kind: args.kind,
                m,
                m_b: args.m_b,
                rho,
                alpha: args.alpha,
                side: args.side.into(),
                target_power: args.target_power,
                method: args.method.into(),
            };
            let power = args.delta.map(|d| theoretical_power(&q, d)).transpose()?;
            rows.push(PowerRow {
                report: power_report(&q)?,
                delta: args.delta,
                power,
            });
        }
    }
    Ok(Report::Power { rows })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Report> {
    let text = read_input(&args.config)?;
    let mut config = McConfig::from_toml_with_seed(&text, args.seed)?;
    if let Some(n) = args.replicates {
        config.settings.replicates = n;
        config.validate()?;
    }
    let summary = with_threads(args.threads, || run_monte_carlo(&config))??;
    Ok(Report::Simulate(summary))
}

fn cmd_reproduce(args: &ReproduceArgs) -> Result<Report> {
    match args.target {
        Target::Table1 => Ok(Report::Table1(report::table1(
            args.side.map_or(TailSide::Upper, Into::into),
        )?)),
        Target::Table2 => Ok(Report::Table2(report::table2(
            args.side.map_or(TailSide::TwoSided, Into::into),
        )?)),
        Target::FigureData => {
            let seed = args
                .seed
                .ok_or_else(|| Error::Invalid("figure-data needs an explicit --seed".into()))?;
            let kinds = if args.kind.is_empty() {
                TestKind::ALL.to_vec()
            } else {
                args.kind.clone()
            };
            let configs = kinds
                .into_iter()
                .map(|kind| {
                    let mut cfg = McConfig::new(kind, seed);
                    cfg.settings.replicates = args.replicates;
                    cfg.settings.side = args.side.map_or(TailSide::Upper, Into::into);
                    if !args.m.is_empty() {
                        let allowed = default_m(kind);
                        cfg.m = args.m.iter().copied().filter(|m| *m >= allowed[0]).collect();
                    }
                    cfg.validate()?;
                    Ok(cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            let data = with_threads(args.threads, || figure_data(&configs, 0.8))??;
            Ok(Report::FigureData(data))
        }
    }
}

fn emit(report: &Report, output: &OutputArgs, stdout: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| Error::Invalid(format!("write: {e}"));
    match &output.out {
        None => {
            let text = match output.format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json()?,
                Format::Csv => {
                    let mut tables = report.csv_tables()?;
                    if tables.len() != 1 {
                        return Err(Error::Invalid(
                            "this report has several CSV tables; use --out <dir>".into(),
                        ));
                    }
                    tables.remove(0).1
                }
            };
            stdout.write_all(text.as_bytes()).map_err(io)
        }
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io)?;
            let files = match output.format {
                Format::Json => vec![("report.json".to_string(), report.to_json()?)],
                Format::Csv => report
                    .csv_tables()?
                    .into_iter()
                    .map(|(stem, body)| (format!("{stem}.csv"), body))
                    .collect(),
                Format::Text => vec![("report.txt".to_string(), report.to_text())],
            };
            for (name, body) in files {
                let path = dir.join(&name);
                fs::write(&path, body).map_err(io)?;
                writeln!(stdout, "wrote {}", path.display()).map_err(io)?;
            }
            Ok(())
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let (report, output) = match &cli.command {
        Command::Analyze(a) => (cmd_analyze(a)?, &a.output),
        Command::Power(a) => (cmd_power(a)?, &a.output),
        Command::Simulate(a) => (cmd_simulate(a)?, &a.output),
        Command::Reproduce(a) => (cmd_reproduce(a)?, &a.output),
        Command::Datasets {
            action: DatasetsAction::List,
        } => {
            let io = |e: std::io::Error| Error::Invalid(format!("write: {e}"));
            for d in datasets::list()? {
                writeln!(stdout, "{:<20} {} x {:<3} {}", d.name, d.columns, d.length, d.source).map_err(io)?;
            }
            return Ok(());
        }
    };
    emit(&report, output, stdout)
}

/// Parses `args` and runs the command, returning the process exit code:
/// 0 success, 2 usage or validation error, 3 degenerate data, 4 no
/// convergence.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(stderr, "{}", e.render());
            return 2;
        }
        Err(e) => {
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
