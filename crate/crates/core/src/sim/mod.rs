//! Monte Carlo harness: Type I error, empirical power and empirical
//! detectable effects for each serial test and its usual analogue.
//!
//! Every replicate draws from its own ChaCha stream keyed by
//! `(seed, cell, probe, replicate)`. Replicates are mapped in parallel and
//! reduced in index order, so results do not depend on the thread count.

mod gen;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use gen::{gen_ar1, gen_paired};

use crate::ar1::TestKind;
use crate::dist::TailSide;
use crate::error::{Error, Result};
use crate::estimate::Series;
use crate::power::{detectable_effect, PowerQuery, MAX_EFFECT};
use crate::ttest::{registry, Method, Sample, TestOptions};

pub const DEFAULT_RHO: [f64; 4] = [-0.33, 0.0, 0.33, 0.67];
pub const DEFAULT_RHO_PAIR: [f64; 2] = [0.33, 0.67];
pub const DEFAULT_LARGE_M: [usize; 3] = [30, 50, 100];
pub const DEFAULT_REPLICATES: usize = 10_000;
/// Largest `m` in the default contiguous range.
pub const DEFAULT_MAX_SMALL_M: usize = 12;

/// Stop the effect search once simulated power is this close to target.
pub const POWER_TOL: f64 = 0.005;
/// Or once the bracket is narrower than this fraction of the theoretical
/// effect. Rate effects are slopes per index step, so an absolute width
/// would swamp them at large `m`.
pub const EFFECT_REL_TOL: f64 = 0.005;
const MAX_PROBES: u64 = 64;

/// Smallest usable `m` for a kind when both two-sample series share it.
pub fn min_equal_m(kind: TestKind) -> usize {
    (kind.min_len()..)
        .find(|&m| kind.check_sizes(m, (!kind.is_paired()).then_some(m)).is_ok())
        .unwrap_or(usize::MAX)
}

pub fn default_m(kind: TestKind) -> Vec<usize> {
    (min_equal_m(kind)..=DEFAULT_MAX_SMALL_M)
        .chain(DEFAULT_LARGE_M)
        .collect()
}

pub fn default_rho_pair(kind: TestKind) -> Vec<f64> {
    if kind.is_paired() {
        DEFAULT_RHO_PAIR.to_vec()
    } else {
        vec![0.0]
    }
}

/// Settings shared by every cell of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub seed: u64,
    pub replicates: usize,
    pub sigma2: f64,
    pub alpha: f64,
    pub side: TailSide,
}

impl SimSettings {
    pub fn new(seed: u64) -> Self {
        SimSettings {
            seed,
            replicates: DEFAULT_REPLICATES,
            sigma2: 1.0,
            alpha: 0.05,
            side: TailSide::Upper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Invalid("replicates must be at least 1".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::domain(format!("sigma2 must be positive, got {}", self.sigma2)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(Error::domain(format!("alpha must lie in (0, 0.5], got {}", self.alpha)));
        }
        Ok(())
    }
}

/// A Monte Carlo run over a grid of cells for one test kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub kind: TestKind,
    pub m: Vec<usize>,
    pub rho: Vec<f64>,
    pub rho_pair: Vec<f64>,
    #[serde(flatten)]
    pub settings: SimSettings,
    /// True effect in sigma units of the analysed series; `None` is the null.
    pub effect: Option<f64>,
}

/// File form of [`McConfig`]: everything but `kind` and `seed` may be
/// omitted. Unknown keys are rejected.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct McConfigFile {
    kind: TestKind,
    seed: Option<u64>,
    m: Option<Vec<usize>>,
    rho: Option<Vec<f64>>,
    rho_pair: Option<Vec<f64>>,
    sigma2: Option<f64>,
    replicates: Option<usize>,
    alpha: Option<f64>,
    side: Option<TailSide>,
    effect: Option<f64>,
}

impl McConfig {
    /// The default grid for `kind`, null effect.
    pub fn new(kind: TestKind, seed: u64) -> Self {
        McConfig {
            kind,
            m: default_m(kind),
            rho: DEFAULT_RHO.to_vec(),
            rho_pair: default_rho_pair(kind),
            settings: SimSettings::new(seed),
            effect: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_seed(text, None)
    }

    /// As [`McConfig::from_toml`], with `seed` taking precedence over the
    /// file's. One of the two must be present.
    pub fn from_toml_with_seed(text: &str, seed: Option<u64>) -> Result<Self> {
        let file: McConfigFile = toml::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))?;
        let seed = seed
            .or(file.seed)
            .ok_or_else(|| Error::Invalid("config: a seed is required (set `seed` or pass --seed)".into()))?;
        let mut cfg = McConfig::new(file.kind, seed);
        if let Some(m) = file.m {
            cfg.m = m;
        }
        if let Some(rho) = file.rho {
            cfg.rho = rho;
        }
        if let Some(rho_pair) = file.rho_pair {
            cfg.rho_pair = rho_pair;
        }
        let s = &mut cfg.settings;
        s.sigma2 = file.sigma2.unwrap_or(s.sigma2);
        s.replicates = file.replicates.unwrap_or(s.replicates);
        s.alpha = file.alpha.unwrap_or(s.alpha);
        s.side = file.side.unwrap_or(s.side);
        cfg.effect = file.effect;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.settings.validate()?;
        if self.m.is_empty() || self.rho.is_empty() || self.rho_pair.is_empty() {
            return Err(Error::Invalid("m, rho and rho_pair must be non-empty".into()));
        }
        for &m in &self.m {
            self.kind.check_sizes(m, (!self.kind.is_paired()).then_some(m))?;
        }
        for &rho in &self.rho {
            if !rho.is_finite() || rho.abs() >= 1.0 {
                return Err(Error::domain(format!("rho must lie in (-1, 1), got {rho}")));
            }
        }
        for &rp in &self.rho_pair {
            if !(0.0..1.0).contains(&rp) {
                return Err(Error::domain(format!("rho_pair must lie in [0, 1), got {rp}")));
            }
            if !self.kind.is_paired() && rp != 0.0 {
                return Err(Error::Invalid(format!(
                    "{} series are independent; rho_pair must be 0",
                    self.kind
                )));
            }
        }
        if let Some(e) = self.effect {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::domain(format!(
                    "effect must be a finite non-negative number, got {e}"
                )));
            }
        }
        Ok(())
    }

    /// Cells in grid order: m outermost, then rho, then rho_pair.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &m in &self.m {
            for &rho in &self.rho {
                for &rho_pair in &self.rho_pair {
                    out.push(Cell {
                        kind: self.kind,
                        m,
                        rho,
                        rho_pair,
                    });
                }
            }
        }
        out
    }
}

/// One simulation configuration; two-sample cells use `m` for both series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub kind: TestKind,
    pub m: usize,
    pub rho: f64,
    pub rho_pair: f64,
}

impl Cell {
    /// Stream key derived from the cell's content, so adding or reordering
    /// grid values leaves other cells' draws unchanged.
    fn key(&self) -> u64 {
        let kind = TestKind::ALL.iter().position(|&k| k == self.kind).unwrap_or(0) as u64;
        [kind, self.m as u64, self.rho.to_bits(), self.rho_pair.to_bits()]
            .into_iter()
            .fold(0x6a09_e667_f3bc_c908, |h, w| splitmix(h ^ w))
    }

    /// Standard deviation of the series the test analyses.
    fn analysed_sigma(&self, sigma: f64) -> f64 {
        if self.kind.is_paired() {
            sigma * (2.0 * (1.0 - self.rho_pair)).sqrt()
        } else {
            sigma
        }
    }

    /// Mean sequences for treatments A and B. Level: `E(Y) = 1` with A
    /// shifted by `shift`. Rate: intercept 0 and slope 1 at `j = 1..m`, with
    /// A's slope raised by `shift`.
    fn means(&self, shift: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.m;
        match self.kind.design() {
            crate::ar1::Design::Level => (vec![1.0 + shift; m], vec![1.0; m]),
            crate::ar1::Design::Rate => {
                let a = (1..=m).map(|j| (1.0 + shift) * j as f64).collect();
                let b = (1..=m).map(|j| j as f64).collect();
                (a, b)
            }
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream per `(seed, cell, probe, replicate)`; the four words
/// form the ChaCha key directly.
fn stream(seed: u64, cell: u64, probe: u64, replicate: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, cell, probe, replicate]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Simulated data for one replicate in the layout the tests expect.
enum Draw {
    Paired(Series),
    TwoSample(Series, Series),
}

impl Draw {
    fn sample(&self) -> Sample<'_> {
        match self {
            Draw::Paired(d) => Sample::Single(d),
            Draw::TwoSample(a, b) => Sample::Pair(a, b),
        }
    }
}

fn draw(cell: &Cell, sigma: f64, means: &(Vec<f64>, Vec<f64>), rng: &mut ChaCha8Rng) -> Result<Draw> {
    if cell.kind.is_paired() {
        let (a, b) = gen_paired(cell.rho, cell.rho_pair, sigma, &means.0, &means.1, rng)?;
        Ok(Draw::Paired(Series::difference(&a, &b)?))
    } else {
        let a = gen_ar1(cell.rho, sigma, &means.0, rng)?;
        let b = gen_ar1(cell.rho, sigma, &means.1, rng)?;
        Ok(Draw::TwoSample(a, b))
    }
}

/// Per-replicate outcome: rejections per method and the correlation used
/// by the serial test. `None` marks a degenerate replicate.
type Outcome = Option<([bool; 2], f64)>;

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    used: usize,
    excluded: usize,
    rejections: [usize; 2],
    sum_r: f64,
}

impl Counts {
    fn rate(&self, i: usize) -> f64 {
        if self.used == 0 {
            f64::NAN
        } else {
            self.rejections[i] as f64 / self.used as f64
        }
    }
}

/// Runs `methods` on `replicates` draws of `cell` with the A-minus-B effect
/// `delta` (sigma units, signed toward the tested tail).
fn simulate(cell: &Cell, settings: &SimSettings, delta: f64, probe: u64, methods: &[Method]) -> Result<Counts> {
    let sigma = settings.sigma2.sqrt();
    let signed = if settings.side == TailSide::Lower {
        -delta
    } else {
        delta
    };
    let means = cell.means(signed * cell.analysed_sigma(sigma));
    let procs = methods
        .iter()
        .map(|&method| registry().procedure(cell.kind, method))
        .collect::<Result<Vec<_>>>()?;
    let opts = TestOptions::new(settings.side);
    let key = cell.key();
    let outcomes: Vec<Outcome> = (0..settings.replicates)
        .into_par_iter()
        .map(|rep| -> Result<Outcome> {
            let mut rng = stream(settings.seed, key, probe, rep as u64);
            let data = draw(cell, sigma, &means, &mut rng)?;
            let mut reject = [false; 2];
            let mut r = 0.0;
            for (i, proc) in procs.iter().enumerate() {
                match proc.run(data.sample(), &opts) {
                    Ok(a) => {
                        reject[i] = a.result.p_value <= settings.alpha;
                        if proc.method() == Method::Serial {
                            r = a.result.rho_used;
                        }
                    }
                    Err(Error::Degenerate(_)) => return Ok(None),
                    Err(e) => return Err(e),
                }
            }
            Ok(Some((reject, r)))
        })
        .collect::<Result<_>>()?;
    let mut counts = Counts::default();
    for outcome in outcomes {
        match outcome {
            Some((reject, r)) => {
                counts.used += 1;
                counts.sum_r += r;
                for (n, hit) in counts.rejections.iter_mut().zip(reject) {
                    *n += hit as usize;
                }
            }
            None => counts.excluded += 1,
        }
    }
    Ok(counts)
}

/// Rejection rates of the serial test and its usual analogue in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub kind: TestKind,
    pub m: usize,
    pub rho: f64,
    pub rho_pair: f64,
    /// Replicates analysed (excluding degenerate ones).
    pub replicates: usize,
    pub excluded: usize,
    pub serial_rate: f64,
    pub serial_mcse: f64,
    pub usual_rate: f64,
    pub usual_mcse: f64,
    /// Mean correlation used by the serial test (pooled for two-sample).
    pub mean_r: f64,
}

fn mcse(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub config: McConfig,
    pub cells: Vec<CellSummary>,
}

/// Runs both tests on every cell of `config`.
pub fn run_monte_carlo(config: &McConfig) -> Result<McSummary> {
    config.validate()?;
    let delta = config.effect.unwrap_or(0.0);
    let cells = config
        .cells()
        .iter()
        .map(|cell| {
            let c = simulate(cell, &config.settings, delta, 0, &[Method::Serial, Method::Usual])?;
            let (serial_rate, usual_rate) = (c.rate(0), c.rate(1));
            Ok(CellSummary {
                kind: cell.kind,
                m: cell.m,
                rho: cell.rho,
                rho_pair: cell.rho_pair,
                replicates: c.used,
                excluded: c.excluded,
                serial_rate,
                serial_mcse: mcse(serial_rate, c.used),
                usual_rate,
                usual_mcse: mcse(usual_rate, c.used),
                mean_r: c.sum_r / c.used as f64,
            })
        })
        .collect::<Result<_>>()?;
    Ok(McSummary {
        config: config.clone(),
        cells,
    })
}

/// Runs `f` on a pool of `threads` workers, or the global pool if `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Invalid("thread count must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::Invalid(format!("thread pool: {e}"))),
    }
}

/// Outcome of a simulated search for the effect reaching a target power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSearch {
    pub delta: f64,
    /// Simulated power at `delta`.
    pub power: f64,
    pub probes: u64,
}

/// Bisection for the effect at which `method` reaches `target_power` in
/// simulation. Probe `k` draws from streams keyed by `k`.
pub fn empirical_detectable_effect(
    cell: &Cell,
    settings: &SimSettings,
    method: Method,
    target_power: f64,
) -> Result<EffectSearch> {
    settings.validate()?;
    if !(target_power > 0.0 && target_power < 1.0) {
        return Err(Error::domain(format!(
            "target power must lie in (0, 1), got {target_power}"
        )));
    }
    let theory = detectable_effect(&theory_query(cell, settings, target_power))?;
    let start = 2.0 * theory;
    let mut probes = 0u64;
    let mut power_at = |delta: f64| -> Result<f64> {
        probes += 1;
        if probes > MAX_PROBES {
            return Err(Error::NoConvergence(format!(
                "effect search exceeded {MAX_PROBES} probes"
            )));
        }
        Ok(simulate(cell, settings, delta, probes, &[method])?.rate(0))
    };
    let (mut lo, mut hi) = (0.0, start.min(MAX_EFFECT));
    let mut p_hi = power_at(hi)?;
    while p_hi < target_power {
        if hi >= MAX_EFFECT {
            return Err(Error::NoConvergence(format!(
                "target power not reached at effect {MAX_EFFECT}"
            )));
        }
        lo = hi;
        hi = (2.0 * hi).min(MAX_EFFECT);
        p_hi = power_at(hi)?;
    }
    if (p_hi - target_power).abs() <= POWER_TOL {
        return Ok(EffectSearch {
            delta: hi,
            power: p_hi,
            probes,
        });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let p = power_at(mid)?;
        if (p - target_power).abs() <= POWER_TOL || hi - lo < EFFECT_REL_TOL * theory {
            return Ok(EffectSearch {
                delta: mid,
                power: p,
                probes,
            });
        }
        if p < target_power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Theoretical query matching a cell: serial test at the cell's true rho.
fn theory_query(cell: &Cell, settings: &SimSettings, target_power: f64) -> PowerQuery {
    PowerQuery {
        alpha: settings.alpha,
        side: settings.side,
        target_power,
        ..PowerQuery::new(cell.kind, cell.m, cell.rho)
    }
}

/// Empirical and theoretical detectable effects in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectRatio {
    pub kind: TestKind,
    pub m: usize,
    pub rho: f64,
    pub rho_pair: f64,
    pub theoretical: f64,
    pub serial: f64,
    pub usual: f64,
    pub serial_ratio: f64,
    pub usual_ratio: f64,
}

/// Serial and usual empirical effects against the serial theoretical
/// effect at the cell's true correlation.
pub fn effect_ratio(cell: &Cell, settings: &SimSettings, target_power: f64) -> Result<EffectRatio> {
    let theoretical = detectable_effect(&theory_query(cell, settings, target_power))?;
    let serial = empirical_detectable_effect(cell, settings, Method::Serial, target_power)?.delta;
    let usual = empirical_detectable_effect(cell, settings, Method::Usual, target_power)?.delta;
    Ok(EffectRatio {
        kind: cell.kind,
        m: cell.m,
        rho: cell.rho,
        rho_pair: cell.rho_pair,
        theoretical,
        serial,
        usual,
        serial_ratio: serial / theoretical,
        usual_ratio: usual / theoretical,
    })
}

/// Type I error and effect-ratio grids over the simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureData {
    pub type_one: Vec<CellSummary>,
    pub effects: Vec<EffectRatio>,
}

/// Runs each null config and, on the same cells, the effect-ratio search.
pub fn figure_data(configs: &[McConfig], target_power: f64) -> Result<FigureData> {
    let mut out = FigureData {
        type_one: Vec::new(),
        effects: Vec::new(),
    };
    for cfg in configs {
        out.type_one.extend(run_monte_carlo(cfg)?.cells);
        for cell in cfg.cells() {
            out.effects.push(effect_ratio(&cell, &cfg.settings, target_power)?);
        }
    }
    Ok(out)
}
