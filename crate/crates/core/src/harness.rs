//! Point samplers, the experiment runner, a two-squares conjecture
//! scanner, and the CSV/SVG artifact writers.
//!
//! The pipeline samples points on the mod-`q` sphere under one of five
//! coordinate-size regimes, computes the lattice height invariant `eta`
//! and the minimal denominator exponent `h_min` for each, and emits one
//! row per point relating the measured exponent `w_p` to the predicted
//! line `w = ((d-1)/d)(1 + eta)`.
//!
//! Artifacts are deterministic: the same specs, seed, and budgets always
//! produce byte-identical CSV and SVG output (elapsed-time cells are
//! fixed at zero for exactly this reason).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lattice::{eta, LatticeError, ModPoint};
use crate::lifting::{minimal_lift, wp_exponent, Budgets, LiftError, SearchMode};
use crate::numeric::ln_biguint;
use crate::numtheory::{is_probable_prime, sqrt_mod_p, two_squares, TwoSquaresOutcome};

/// Attempts allowed to complete a drawn point to unit norm before the
/// sampler gives up.
const RESAMPLE_LIMIT: usize = 1000;

/// Errors from sampling, experiment plumbing, and file handling.
#[derive(Debug)]
pub enum HarnessError {
    /// The residue completion failed [`RESAMPLE_LIMIT`] times in a row.
    ResampleLimit,
    /// An artifact or input file could not be read or written.
    Io(std::io::Error),
    /// A prime-list line failed to parse or failed the primality test.
    BadPrimeFile {
        /// 1-based line number of the offending entry.
        line: usize,
    },
    /// A sampled point violated a lattice-side invariant.
    Lattice(LatticeError),
    /// The lift search failed for a reason other than budget or range.
    Lift(LiftError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::ResampleLimit => write!(
                f,
                "gave up after {RESAMPLE_LIMIT} attempts to complete a point to unit norm"
            ),
            HarnessError::Io(e) => write!(f, "io error: {e}"),
            HarnessError::BadPrimeFile { line } => {
                write!(f, "prime file line {line}: not a prime decimal integer")
            }
            HarnessError::Lattice(e) => write!(f, "lattice error: {e}"),
            HarnessError::Lift(e) => write!(f, "lift error: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::Io(e) => Some(e),
            HarnessError::Lattice(e) => Some(e),
            HarnessError::Lift(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

impl From<LatticeError> for HarnessError {
    fn from(e: LatticeError) -> Self {
        HarnessError::Lattice(e)
    }
}

impl From<LiftError> for HarnessError {
    fn from(e: LiftError) -> Self {
        HarnessError::Lift(e)
    }
}

/// The coordinate-size regime a sampler draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Each free coordinate gets its own exponent `r` uniform in
    /// [`SamplerSpec::r_range`], then a value uniform in `[0, q / 10^r]`.
    RandomLog,
    /// Free coordinates uniform in `[0, q)`.
    Generic,
    /// Every free coordinate drawn uniform in `[0, 10^k)` — where
    /// `k = max(1, floor(0.04 D))` and `D` is the decimal digit count of
    /// `q`, so the window keeps the same few-digit share of the modulus
    /// at every scale — then the whole vector is multiplied by the
    /// reciprocal square root of its norm mod `q` to land on the sphere.
    /// The scalar keeps the orthogonality lattice of the tiny draw, which
    /// is what pushes the height invariant toward 1: completing a
    /// coordinate instead would make it full-size and cap the invariant
    /// near 1/2.
    Small,
    /// Leading coordinate pinned to 1; the rest drawn as [`RandomLog`].
    ///
    /// [`RandomLog`]: SampleMode::RandomLog
    FixedOne,
    /// Two leading coordinates pinned to 1 (needs `d >= 4`); the rest
    /// drawn as [`RandomLog`].
    ///
    /// [`RandomLog`]: SampleMode::RandomLog
    FixedTwo,
}

impl fmt::Display for SampleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SampleMode::RandomLog => "random-log",
            SampleMode::Generic => "generic",
            SampleMode::Small => "small",
            SampleMode::FixedOne => "fixed1",
            SampleMode::FixedTwo => "fixed2",
        };
        write!(f, "{name}")
    }
}

impl FromStr for SampleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random-log" => Ok(SampleMode::RandomLog),
            "generic" => Ok(SampleMode::Generic),
            "small" => Ok(SampleMode::Small),
            "fixed1" => Ok(SampleMode::FixedOne),
            "fixed2" => Ok(SampleMode::FixedTwo),
            other => Err(format!(
                "unknown sample mode `{other}` (expected random-log, generic, small, fixed1 or fixed2)"
            )),
        }
    }
}

/// Everything needed to draw one point on the mod-`q` sphere.
#[derive(Debug, Clone)]
pub struct SamplerSpec {
    /// Coordinate-size regime.
    pub mode: SampleMode,
    /// The (odd prime) modulus.
    pub q: BigUint,
    /// Sphere dimension; the point has `d + 1` coordinates, `d - 1` of
    /// them free.
    pub d: usize,
    /// RNG seed; identical specs always produce identical points.
    pub seed: u64,
    /// Inclusive window `(r_lo, r_hi)` of log-scale exponents for the
    /// [`SampleMode::RandomLog`] regime; `r_lo <= r_hi`.
    pub r_range: (u32, u32),
}

/// One log-scale draw: exponent `r` uniform in `r_range`, then a value
/// uniform on the inclusive range `[0, q / 10^r]`.
fn log_draw(rng: &mut ChaCha8Rng, q: &BigUint, r_range: (u32, u32)) -> BigUint {
    let r = rng.gen_range(r_range.0..=r_range.1);
    let bound = q / BigUint::from(10u32).pow(r);
    rng.gen_biguint_below(&(bound + 1u32))
}

/// Draws a point on the sphere mod `q` under the regime in `spec`.
///
/// For every regime except [`SampleMode::Small`], the first `d - 2` free
/// coordinates are drawn per the mode; the last free coordinate is then
/// solved from `sum a_i^2 = 1 (mod q)` via a modular square root, and
/// the whole draw is repeated when the residual is a non-residue. This
/// keeps the drawn coordinates exactly on the prescribed distribution.
///
/// [`SampleMode::Small`] instead draws *all* free coordinates in its
/// tiny window and normalizes the vector by the reciprocal square root
/// of its norm (redrawing when the norm is a non-residue, when it is
/// zero mod `q`, or when the draw lies on a coordinate axis and would
/// collapse to a trivial vertex): a sqrt-completed coordinate would be
/// full-size, while the unit scalar preserves the tiny draw's
/// orthogonality lattice and with it the near-1 height invariant the
/// regime exists to exercise.
///
/// Fails with [`HarnessError::ResampleLimit`] after [`RESAMPLE_LIMIT`]
/// non-residues in a row — which is certain for regimes whose drawn
/// coordinates are all pinned (e.g. [`SampleMode::FixedTwo`] at `d = 4`
/// with `-1` a non-residue mod `q`).
pub fn sample_point(spec: &SamplerSpec) -> Result<ModPoint, HarnessError> {
    assert!(
        spec.r_range.0 <= spec.r_range.1,
        "r_range must be ordered (lo <= hi)"
    );
    if spec.d < 3 {
        return Err(HarnessError::Lattice(LatticeError::BadDimension));
    }
    let free = spec.d - 1;
    if spec.mode == SampleMode::FixedTwo && free < 3 {
        return Err(HarnessError::Lattice(LatticeError::BadDimension));
    }
    let digits = spec.q.to_str_radix(10).len() as u32;
    let small_window = BigUint::from(10u32)
        .pow((digits * 4 / 100).max(1))
        .min(spec.q.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..RESAMPLE_LIMIT {
        if spec.mode == SampleMode::Small {
            let tiny: Vec<BigUint> = (0..free)
                .map(|_| rng.gen_biguint_below(&small_window))
                .collect();
            // A draw on a coordinate axis would scale to a trivial vertex
            // (lift height 0); at full scale the window is wide enough
            // that this never occurs, so redraw rather than distort the
            // regime's statistics here.
            if tiny.iter().filter(|c| !c.is_zero()).count() < 2 {
                continue;
            }
            let sum = tiny.iter().map(|c| c * c).sum::<BigUint>() % &spec.q;
            if sum.is_zero() {
                continue;
            }
            if let Some(root) = sqrt_mod_p(&sum, &spec.q) {
                // a = tiny / root, so sum a_i^2 = sum / root^2 = 1 mod q.
                let inv = root.modpow(&(&spec.q - 2u32), &spec.q);
                let mut coords: Vec<BigUint> =
                    tiny.iter().map(|c| (c * &inv) % &spec.q).collect();
                coords.push(BigUint::zero());
                coords.push(BigUint::zero());
                let signed = coords.into_iter().map(BigInt::from).collect();
                return Ok(ModPoint::new(spec.q.clone(), signed)?);
            }
            continue;
        }
        let mut coords: Vec<BigUint> = Vec::with_capacity(spec.d + 1);
        let pinned = match spec.mode {
            SampleMode::FixedOne => 1,
            SampleMode::FixedTwo => 2,
            _ => 0,
        };
        for _ in 0..pinned {
            coords.push(BigUint::one());
        }
        for _ in pinned..free - 1 {
            coords.push(match spec.mode {
                SampleMode::Generic => rng.gen_biguint_below(&spec.q),
                _ => log_draw(&mut rng, &spec.q, spec.r_range),
            });
        }
        let sum = coords.iter().map(|c| c * c).sum::<BigUint>() % &spec.q;
        let residual = (&spec.q + 1u32 - sum) % &spec.q;
        if let Some(root) = sqrt_mod_p(&residual, &spec.q) {
            coords.push(root);
            coords.push(BigUint::zero());
            coords.push(BigUint::zero());
            let signed = coords.into_iter().map(BigInt::from).collect();
            return Ok(ModPoint::new(spec.q.clone(), signed)?);
        }
    }
    Err(HarnessError::ResampleLimit)
}

/// Knobs shared by every sample of an experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Lifting prime; `None` selects [`default_p_for`] per modulus.
    pub p: Option<BigUint>,
    /// Search discipline for the height scan; experiments default to the
    /// heuristic one because certified lower bounds are unaffordable at
    /// large scales.
    pub mode: SearchMode,
    /// Per-height work limits.
    pub budgets: Budgets,
    /// Height-scan cap factor, in units of `ln q / ln p`.
    pub h_max_factor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            p: None,
            mode: SearchMode::Heuristic,
            budgets: Budgets::default(),
            h_max_factor: 4.0,
        }
    }
}

/// How one experiment row ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowStatus {
    /// Both the invariant and the minimal lift were computed.
    Ok,
    /// The height scan hit its budget before deciding a height.
    Undecided,
    /// No lift was found up to the height cap.
    NotFound,
    /// The sampler could not complete a point at all.
    SampleFailed,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            RowStatus::Ok => "ok",
            RowStatus::Undecided => "undecided",
            RowStatus::NotFound => "not-found",
            RowStatus::SampleFailed => "sample-failed",
        };
        write!(f, "{name}")
    }
}

/// One measured (`eta`, `w_p`) pair with its provenance.
#[derive(Debug, Clone)]
pub struct ExperimentRecord {
    /// Modulus the point lives over.
    pub q: BigUint,
    /// Sphere dimension.
    pub d: usize,
    /// Lifting prime used for the height scan.
    pub p: BigUint,
    /// All `d + 1` canonical coordinates of the point; empty when the
    /// sample itself failed.
    pub coords: Vec<BigUint>,
    /// Lattice height invariant of the point.
    pub eta_value: Option<f64>,
    /// Minimal denominator exponent found.
    pub h_min: Option<u32>,
    /// Measured exponent `((d-1)/d) h_min ln p / ln q`.
    pub w_p: Option<f64>,
    /// The predicted value `((d-1)/d)(1 + eta)`.
    pub predicted_w_p: Option<f64>,
    /// Sampler regime the point was drawn from.
    pub mode: SampleMode,
    /// Residual values handed to the two-square test across all heights.
    pub candidates: Option<u64>,
    /// Always zero: wall-clock timings would break the byte-for-byte
    /// reproducibility of the artifacts.
    pub elapsed_ms: u64,
    /// Row outcome.
    pub status: RowStatus,
}

/// Runs one experiment: draws a point per spec, measures `eta` and
/// `h_min`, and streams rows to the optional CSV/SVG paths.
///
/// Sample `i` uses the derived seed `spec.seed ^ i`, so a list of
/// identical specs yields independent points and reruns are exactly
/// reproducible. Per-row failures (sampler gave up, height scan ran out
/// of budget or range) are recorded in the row's status and the run
/// continues; structural errors abort.
pub fn run_experiment(
    specs: &[SamplerSpec],
    config: &ExperimentConfig,
    csv_path: Option<&Path>,
    svg_path: Option<&Path>,
) -> Result<Vec<ExperimentRecord>, HarnessError> {
    let mut records = Vec::with_capacity(specs.len());
    for (index, spec) in specs.iter().enumerate() {
        let derived = SamplerSpec {
            seed: spec.seed ^ index as u64,
            ..spec.clone()
        };
        let p = match &config.p {
            Some(p) => p.clone(),
            None => default_p_for(&spec.q),
        };
        let mut record = ExperimentRecord {
            q: spec.q.clone(),
            d: spec.d,
            p: p.clone(),
            coords: Vec::new(),
            eta_value: None,
            h_min: None,
            w_p: None,
            predicted_w_p: None,
            mode: spec.mode,
            candidates: None,
            elapsed_ms: 0,
            status: RowStatus::SampleFailed,
        };
        let a = match sample_point(&derived) {
            Ok(a) => a,
            Err(HarnessError::ResampleLimit) => {
                records.push(record);
                continue;
            }
            Err(e) => return Err(e),
        };
        record.coords = a.coords().to_vec();
        let invariant = eta(&a);
        let ratio = (spec.d - 1) as f64 / spec.d as f64;
        record.eta_value = Some(invariant.value);
        record.predicted_w_p = Some(ratio * (1.0 + invariant.value));
        match minimal_lift(&a, &p, config.mode, &config.budgets, config.h_max_factor) {
            Ok(found) => {
                record.h_min = Some(found.h_min);
                record.w_p = Some(wp_exponent(&found.lift, &spec.q, spec.d));
                record.candidates = Some(found.candidates_tested);
                record.status = RowStatus::Ok;
            }
            Err(LiftError::Undecided { .. }) => record.status = RowStatus::Undecided,
            Err(LiftError::NotFound { .. }) => record.status = RowStatus::NotFound,
            Err(e) => return Err(HarnessError::Lift(e)),
        }
        records.push(record);
    }
    if let Some(path) = csv_path {
        write_csv(&records, path)?;
    }
    if let Some(path) = svg_path {
        write_svg_scatter(&records, path)?;
    }
    Ok(records)
}

/// The fixed CSV header; every emitter and consumer agrees on it.
pub const CSV_HEADER: &str = "q,d,p,coords,eta,h_min,w_p,predicted_w_p,mode,candidates,elapsed_ms,status";

fn fmt_opt_f64(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// Renders records as CSV text: the fixed header, one row per record,
/// `;`-joined coordinates, floats with six fractional digits, `\n` line
/// endings, empty cells for fields a failed row never produced.
pub fn csv_string(records: &[ExperimentRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let coords = r
            .coords
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(";");
        let h_min = r.h_min.map(|h| h.to_string()).unwrap_or_default();
        let candidates = r.candidates.map(|c| c.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.q,
            r.d,
            r.p,
            coords,
            fmt_opt_f64(r.eta_value),
            h_min,
            fmt_opt_f64(r.w_p),
            fmt_opt_f64(r.predicted_w_p),
            r.mode,
            candidates,
            r.elapsed_ms,
            r.status,
        ));
    }
    out
}

/// Persists [`csv_string`] at `path`.
pub fn write_csv(records: &[ExperimentRecord], path: &Path) -> Result<(), HarnessError> {
    fs::write(path, csv_string(records))?;
    Ok(())
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 600.0;
const SVG_LEFT: f64 = 60.0;
const SVG_RIGHT: f64 = 20.0;
const SVG_TOP: f64 = 20.0;
const SVG_BOTTOM: f64 = 50.0;

/// Writes a self-contained 800x600 scatter of (`eta`, `w_p`) with the
/// predicted line `w = ((d-1)/d)(1 + eta)` dashed in, one line per
/// dimension present. Rows without both values are skipped; an empty
/// input produces an axes-only figure.
pub fn write_svg_scatter(records: &[ExperimentRecord], path: &Path) -> Result<(), HarnessError> {
    let plotted: Vec<(f64, f64, usize)> = records
        .iter()
        .filter_map(|r| match (r.eta_value, r.w_p) {
            (Some(x), Some(y)) => Some((x, y, r.d)),
            _ => None,
        })
        .collect();
    let x_max = plotted
        .iter()
        .map(|&(x, _, _)| x)
        .fold(1.1, f64::max)
        * 1.05;
    let y_max = plotted
        .iter()
        .map(|&(_, y, _)| y)
        .fold(1.7, f64::max)
        * 1.05;
    let plot_w = SVG_W - SVG_LEFT - SVG_RIGHT;
    let plot_h = SVG_H - SVG_TOP - SVG_BOTTOM;
    let px = |x: f64| SVG_LEFT + x / x_max * plot_w;
    let py = |y: f64| SVG_H - SVG_BOTTOM - y / y_max * plot_h;

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        SVG_LEFT,
        SVG_H - SVG_BOTTOM,
        SVG_W - SVG_RIGHT,
        SVG_H - SVG_BOTTOM
    ));
    svg.push_str(&format!(
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
        SVG_LEFT,
        SVG_TOP,
        SVG_LEFT,
        SVG_H - SVG_BOTTOM
    ));
    // Ticks and numeric labels.
    for i in 0..=5u32 {
        let xv = x_max * f64::from(i) / 5.0;
        let yv = y_max * f64::from(i) / 5.0;
        svg.push_str(&format!(
            "<line x1=\"{0:.2}\" y1=\"{1:.2}\" x2=\"{0:.2}\" y2=\"{2:.2}\" stroke=\"black\"/>\n",
            px(xv),
            SVG_H - SVG_BOTTOM,
            SVG_H - SVG_BOTTOM + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{:.2}</text>\n",
            px(xv),
            SVG_H - SVG_BOTTOM + 18.0,
            xv
        ));
        svg.push_str(&format!(
            "<line x1=\"{1:.2}\" y1=\"{0:.2}\" x2=\"{2:.2}\" y2=\"{0:.2}\" stroke=\"black\"/>\n",
            py(yv),
            SVG_LEFT - 5.0,
            SVG_LEFT
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"end\">{:.2}</text>\n",
            SVG_LEFT - 8.0,
            py(yv) + 4.0,
            yv
        ));
    }
    // Axis titles.
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"14\" text-anchor=\"middle\">eta</text>\n",
        SVG_LEFT + plot_w / 2.0,
        SVG_H - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"15\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 15 {:.2})\">w_p</text>\n",
        SVG_TOP + plot_h / 2.0,
        SVG_TOP + plot_h / 2.0
    ));
    // One predicted line per dimension present, clipped to the viewport.
    let mut dims: Vec<usize> = plotted.iter().map(|&(_, _, d)| d).collect();
    dims.sort_unstable();
    dims.dedup();
    for d in dims {
        let c = (d - 1) as f64 / d as f64;
        let x_end = x_max.min(y_max / c - 1.0);
        if x_end <= 0.0 {
            continue;
        }
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#d62728\" stroke-dasharray=\"6,4\"/>\n",
            px(0.0),
            py(c),
            px(x_end),
            py(c * (1.0 + x_end))
        ));
    }
    for (x, y, _) in &plotted {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2\" fill=\"#1f77b4\"/>\n",
            px(*x),
            py(*y)
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg)?;
    Ok(())
}

/// One scanned instance of the bounded-window representability test.
#[derive(Debug, Clone)]
pub struct ConjectureTrial {
    /// The target norm.
    pub n: BigUint,
    /// The modulus defining the residual form.
    pub q: BigUint,
    /// Number of window members, i.e. integer `t` with `|t| < r` whose
    /// residual value is a non-negative integer.
    pub set_size: u64,
    /// Whether some member's residual value is a sum of two squares.
    pub representable: bool,
}

/// Aggregate over [`ConjectureTrial`]s.
#[derive(Debug, Clone)]
pub struct ConjectureReport {
    /// Every scanned instance, in draw order.
    pub trials: Vec<ConjectureTrial>,
    /// Smallest window size among non-representable instances; `None`
    /// when every instance was representable (an empty minimum).
    pub min_set_size_among_failures: Option<u64>,
}

/// Exhaustively tests one instance: counts the members of the window
/// `{t : |t| < r, (n - |q t + b|^2) / q^2 a non-negative integer}` and
/// reports whether any member's value is a (certified) sum of two
/// squares. Values whose representability cannot be certified within the
/// factor budget count as non-representable, so reported failures at
/// tiny budgets may be false alarms.
pub fn scan_window(
    q: &BigUint,
    b: &[BigInt],
    n: &BigUint,
    r: u32,
    budgets: &Budgets,
) -> (u64, bool) {
    struct Ctx<'a> {
        qi: BigInt,
        q_sq: BigInt,
        n: BigInt,
        b: &'a [BigInt],
        r_sq: u64,
        limit: i64,
        factor_budget: u64,
    }
    fn walk(ctx: &Ctx<'_>, t: &mut Vec<i64>, norm: u64, size: &mut u64, any: &mut bool) {
        if t.len() == ctx.b.len() {
            let value: BigInt = ctx.n.clone()
                - t.iter()
                    .zip(ctx.b)
                    .map(|(ti, bi)| {
                        let c = &ctx.qi * BigInt::from(*ti) + bi;
                        &c * &c
                    })
                    .sum::<BigInt>();
            if value.is_negative() || !value.mod_floor(&ctx.q_sq).is_zero() {
                return;
            }
            *size += 1;
            if !*any {
                let residual = (value / &ctx.q_sq).to_biguint().expect("non-negative");
                if let TwoSquaresOutcome::Representable(_) =
                    two_squares(&residual, ctx.factor_budget)
                {
                    *any = true;
                }
            }
            return;
        }
        for ti in -ctx.limit..=ctx.limit {
            let step = norm + (ti * ti) as u64;
            if step >= ctx.r_sq {
                continue;
            }
            t.push(ti);
            walk(ctx, t, step, size, any);
            t.pop();
        }
    }
    let ctx = Ctx {
        qi: BigInt::from(q.clone()),
        q_sq: BigInt::from(q * q),
        n: BigInt::from(n.clone()),
        b,
        r_sq: u64::from(r) * u64::from(r),
        limit: i64::from(r) - 1,
        factor_budget: budgets.factor_budget,
    };
    let mut size = 0;
    let mut any = false;
    let mut t = Vec::with_capacity(b.len());
    walk(&ctx, &mut t, 0, &mut size, &mut any);
    (size, any)
}

/// Scans random admissible instances for the bounded-window two-squares
/// property.
///
/// Each trial draws `b` uniform in `[0, q)^(d-1)` until `sum b_i^2 != 0
/// (mod q)`, then sets `n = (sum b_i^2 mod q) + q u` with `u` uniform in
/// `[1, q r^2]` — a window that keeps the admissible norms within reach
/// of the radius-`r` enumeration. Membership is tested by exhaustive
/// enumeration over `|t| < r`.
pub fn conjecture_scan(
    q: &BigUint,
    d: usize,
    samples: usize,
    r: u32,
    budgets: &Budgets,
    seed: u64,
) -> Result<ConjectureReport, HarnessError> {
    if !is_probable_prime(q) {
        return Err(HarnessError::Lattice(LatticeError::NotPrime));
    }
    if d < 3 {
        return Err(HarnessError::Lattice(LatticeError::BadDimension));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut b_sum = BigUint::zero();
        let mut b: Vec<BigInt> = Vec::new();
        let mut drawn = false;
        for _ in 0..RESAMPLE_LIMIT {
            let raw: Vec<BigUint> = (0..d - 1).map(|_| rng.gen_biguint_below(q)).collect();
            b_sum = raw.iter().map(|x| x * x).sum::<BigUint>() % q;
            if !b_sum.is_zero() {
                b = raw.into_iter().map(BigInt::from).collect();
                drawn = true;
                break;
            }
        }
        if !drawn {
            return Err(HarnessError::ResampleLimit);
        }
        let u_bound = q * u64::from(r) * u64::from(r);
        let u = rng.gen_biguint_below(&u_bound) + 1u32;
        let n = &b_sum + q * u;
        let (set_size, representable) = scan_window(q, &b, &n, r, budgets);
        trials.push(ConjectureTrial {
            n,
            q: q.clone(),
            set_size,
            representable,
        });
    }
    let min_set_size_among_failures = trials
        .iter()
        .filter(|t| !t.representable)
        .map(|t| t.set_size)
        .min();
    Ok(ConjectureReport {
        trials,
        min_set_size_among_failures,
    })
}

/// Reads a prime list: one decimal integer per line, `#` starts a
/// comment, blank lines ignored. Every parsed value must pass the
/// primality test.
pub fn read_prime_file(path: &Path) -> Result<Vec<BigUint>, HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (index, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let n: BigUint = line
            .parse()
            .map_err(|_| HarnessError::BadPrimeFile { line: index + 1 })?;
        if !is_probable_prime(&n) {
            return Err(HarnessError::BadPrimeFile { line: index + 1 });
        }
        out.push(n);
    }
    Ok(out)
}

/// Default lifting prime for a modulus: the smallest prime within the
/// `ln q` window, skipping `q` itself, i.e. 2 for every modulus of
/// interest (with 2 also serving as the fallback for the few `q < e^2`).
pub fn default_p_for(q: &BigUint) -> BigUint {
    let cap = ln_biguint(q);
    for p in [2u32, 3, 5, 7] {
        if f64::from(p) <= cap && BigUint::from(p) != *q {
            return BigUint::from(p);
        }
    }
    if *q == BigUint::from(2u32) {
        BigUint::from(3u32)
    } else {
        BigUint::from(2u32)
    }
}

/// Default log-scale exponent window for a modulus with `D` decimal
/// digits: `(ceil(0.46 D), ceil(0.96 D))`, which spreads coordinate
/// sizes from a few digits up to roughly half the digits of `q`.
pub fn default_r_range(q: &BigUint) -> (u32, u32) {
    let digits = q.to_str_radix(10).len() as u32;
    ((46 * digits).div_ceil(100), (96 * digits).div_ceil(100))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Num;

    fn spec(mode: SampleMode, q: u64, d: usize, seed: u64) -> SamplerSpec {
        let q = BigUint::from(q);
        let r_range = default_r_range(&q);
        SamplerSpec {
            mode,
            q,
            d,
            seed,
            r_range,
        }
    }

    #[test]
    fn sampler_is_deterministic_and_valid() {
        for mode in [SampleMode::RandomLog, SampleMode::Generic, SampleMode::Small] {
            let a = sample_point(&spec(mode, 101, 4, 7)).unwrap();
            let b = sample_point(&spec(mode, 101, 4, 7)).unwrap();
            assert_eq!(a.coords(), b.coords());
            assert_eq!(a.d(), 4);
        }
        let a = sample_point(&spec(SampleMode::Generic, 101, 4, 7)).unwrap();
        let c = sample_point(&spec(SampleMode::Generic, 101, 4, 8)).unwrap();
        assert_ne!(a.coords(), c.coords());
    }

    #[test]
    fn small_mode_scales_a_tiny_vector_onto_the_sphere() {
        // 99991 has five digits, so the tiny window is [0, 99991 / 10^4] = [0, 9].
        // The point itself is full-size (a unit multiple of the tiny draw),
        // so the invariant to check is proportionality: all 2x2 minors of
        // (a, v) vanish mod q for some nonzero v in the window.
        let q = BigUint::from(99991u32);
        let mut scaled = 0;
        for seed in 0..5 {
            let a = sample_point(&spec(SampleMode::Small, 99991, 4, seed)).unwrap();
            let active = &a.coords()[..3];
            if active.iter().any(|c| c > &BigUint::from(9u32)) {
                scaled += 1;
            }
            let witness = (1..1000u32)
                .map(|n| [n / 100, (n / 10) % 10, n % 10])
                .find(|v| {
                    (0..3).all(|i| {
                        (0..3).all(|j| {
                            (&active[i] * v[j]) % &q == (&active[j] * v[i]) % &q
                        })
                    })
                });
            assert!(
                witness.is_some(),
                "no tiny vector is unit-proportional to {active:?}"
            );
        }
        assert!(scaled > 0, "every draw stayed tiny; scaling never happened");
    }

    #[test]
    fn fixed_modes_pin_leading_coordinates() {
        let one = sample_point(&spec(SampleMode::FixedOne, 101, 4, 3)).unwrap();
        assert_eq!(one.coords()[0], BigUint::one());

        let two = sample_point(&spec(SampleMode::FixedTwo, 13, 4, 3)).unwrap();
        assert_eq!(two.coords()[0], BigUint::one());
        assert_eq!(two.coords()[1], BigUint::one());

        match sample_point(&spec(SampleMode::FixedTwo, 13, 3, 3)) {
            Err(HarnessError::Lattice(LatticeError::BadDimension)) => {}
            other => panic!("expected BadDimension, got {other:?}"),
        }
    }

    #[test]
    fn fixed_two_hits_resample_limit_on_nonresidue() {
        // d = 4 leaves no drawn coordinates, so the completion needs
        // -1 to be a square mod q; it is not mod 7.
        match sample_point(&spec(SampleMode::FixedTwo, 7, 4, 0)) {
            Err(HarnessError::ResampleLimit) => {}
            other => panic!("expected ResampleLimit, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_window_forces_zero_coordinates() {
        let mut s = spec(SampleMode::RandomLog, 13, 3, 5);
        s.r_range = (60, 60);
        let a = sample_point(&s).unwrap();
        assert_eq!(a.coords()[0], BigUint::zero());
        assert_eq!(a.coords()[1], BigUint::one());
    }

    #[test]
    fn experiment_on_unit_point_and_csv_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("rows.csv");
        let mut s = spec(SampleMode::RandomLog, 13, 3, 5);
        s.r_range = (60, 60);
        let specs = vec![s];
        let cfg = ExperimentConfig::default();
        let records = run_experiment(&specs, &cfg, Some(&csv), None).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.status, RowStatus::Ok);
        assert!((r.eta_value.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.h_min, Some(0));
        assert_eq!(r.w_p, Some(0.0));
        assert_eq!(r.p, BigUint::from(2u32));

        let first = fs::read(&csv).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let row = lines.next().unwrap();
        assert!(row.starts_with("13,3,2,0;1;0;0,1.000000,0,0.000000,1.333333,random-log,"));
        assert!(row.ends_with(",0,ok"));

        run_experiment(&specs, &cfg, Some(&csv), None).unwrap();
        assert_eq!(fs::read(&csv).unwrap(), first, "rerun must be byte-identical");
    }

    #[test]
    fn experiment_records_failed_samples_and_continues() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("rows.csv");
        let bad = spec(SampleMode::FixedTwo, 7, 4, 0);
        let good = spec(SampleMode::Generic, 13, 3, 0);
        // p = 3: four-coordinate points rarely have 2-adic lifts at all.
        let cfg = ExperimentConfig {
            p: Some(BigUint::from(3u32)),
            ..ExperimentConfig::default()
        };
        let records = run_experiment(&[bad, good], &cfg, Some(&csv), None).unwrap();
        assert_eq!(records[0].status, RowStatus::SampleFailed);
        assert!(records[0].coords.is_empty());
        assert_eq!(records[1].status, RowStatus::Ok);
        let text = fs::read_to_string(&csv).unwrap();
        assert!(text.contains("7,4,3,,,,,,fixed2,,0,sample-failed\n"));
    }

    #[test]
    fn csv_empty_and_worked_example_formatting() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("rows.csv");
        write_csv(&[], &csv).unwrap();
        assert_eq!(fs::read_to_string(&csv).unwrap(), format!("{CSV_HEADER}\n"));

        // h_min = 2 at q = 7, p = 3, d = 3: the measured exponent is
        // (2/3) * 2 * ln 3 / ln 7 = 0.752766..., printed to six places.
        let eta_value = (5.0f64).ln() / (7.0f64).ln();
        let rec = ExperimentRecord {
            q: BigUint::from(7u32),
            d: 3,
            p: BigUint::from(3u32),
            coords: vec![2u32, 2, 0, 0].into_iter().map(BigUint::from).collect(),
            eta_value: Some(eta_value),
            h_min: Some(2),
            w_p: Some(2.0 / 3.0 * 2.0 * (3.0f64).ln() / (7.0f64).ln()),
            predicted_w_p: Some(2.0 / 3.0 * (1.0 + eta_value)),
            mode: SampleMode::Generic,
            candidates: Some(4),
            elapsed_ms: 0,
            status: RowStatus::Ok,
        };
        write_csv(&[rec], &csv).unwrap();
        let text = fs::read_to_string(&csv).unwrap();
        assert!(text.contains("7,3,3,2;2;0;0,"), "coords cell wrong: {text}");
        assert!(text.contains(",2,0.752767,"), "w_p cell wrong: {text}");
    }

    #[test]
    fn svg_scatter_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let svg = dir.path().join("plot.svg");
        write_svg_scatter(&[], &svg).unwrap();
        let empty = fs::read_to_string(&svg).unwrap();
        assert!(empty.starts_with("<?xml"));
        assert!(empty.contains("<svg xmlns"));
        assert!(empty.trim_end().ends_with("</svg>"));
        assert!(!empty.contains("<circle"));

        let rec = ExperimentRecord {
            q: BigUint::from(7u32),
            d: 4,
            p: BigUint::from(2u32),
            coords: Vec::new(),
            eta_value: Some(1.0),
            h_min: Some(3),
            w_p: Some(1.5),
            predicted_w_p: Some(1.5),
            mode: SampleMode::RandomLog,
            candidates: None,
            elapsed_ms: 0,
            status: RowStatus::Ok,
        };
        write_svg_scatter(&[rec], &svg).unwrap();
        let text = fs::read_to_string(&svg).unwrap();
        assert_eq!(text.matches("<circle").count(), 1);
        assert!(text.contains("stroke-dasharray"));
    }

    #[test]
    fn scan_window_counts_the_window_exactly() {
        // n = 17, q = 5, b = (1, 1), r = 3: the window members are
        // t = (-1, 0) and (0, -1), both with residual value 0 = 0^2 + 0^2.
        let q = BigUint::from(5u32);
        let b = vec![BigInt::from(1), BigInt::from(1)];
        let n = BigUint::from(17u32);
        let (size, representable) = scan_window(&q, &b, &n, 3, &Budgets::default());
        assert_eq!(size, 2);
        assert!(representable);

        // Radius 1 only reaches t = (0, 0), whose value 17 - 2 is not
        // divisible by 25: an empty window is vacuously unrepresentable.
        let (size, representable) = scan_window(&q, &b, &n, 1, &Budgets::default());
        assert_eq!(size, 0);
        assert!(!representable);
    }

    #[test]
    fn conjecture_scan_reports_are_deterministic() {
        let q = BigUint::from(13u32);
        let a = conjecture_scan(&q, 3, 5, 4, &Budgets::default(), 11).unwrap();
        let b = conjecture_scan(&q, 3, 5, 4, &Budgets::default(), 11).unwrap();
        assert_eq!(a.trials.len(), 5);
        for (x, y) in a.trials.iter().zip(&b.trials) {
            assert_eq!(x.n, y.n);
            assert_eq!(x.set_size, y.set_size);
            assert_eq!(x.representable, y.representable);
        }
        let failures: Vec<_> = a.trials.iter().filter(|t| !t.representable).collect();
        match a.min_set_size_among_failures {
            Some(m) => assert_eq!(m, failures.iter().map(|t| t.set_size).min().unwrap()),
            None => assert!(failures.is_empty()),
        }
    }

    #[test]
    fn prime_file_round_trip_and_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("primes.txt");
        fs::write(&path, "# header\n\n7\n11 # inline note\n").unwrap();
        let primes = read_prime_file(&path).unwrap();
        assert_eq!(primes, vec![BigUint::from(7u32), BigUint::from(11u32)]);

        fs::write(&path, "7\nnot-a-number\n").unwrap();
        match read_prime_file(&path) {
            Err(HarnessError::BadPrimeFile { line: 2 }) => {}
            other => panic!("expected BadPrimeFile at line 2, got {other:?}"),
        }

        fs::write(&path, "9\n").unwrap();
        match read_prime_file(&path) {
            Err(HarnessError::BadPrimeFile { line: 1 }) => {}
            other => panic!("expected BadPrimeFile at line 1, got {other:?}"),
        }
    }

    #[test]
    fn default_windows_scale_with_digit_count() {
        let d130 = BigUint::from_str_radix(&format!("1{}", "0".repeat(129)), 10).unwrap();
        assert_eq!(default_r_range(&d130), (60, 125));
        let d40 = BigUint::from_str_radix(&format!("1{}", "0".repeat(39)), 10).unwrap();
        assert_eq!(default_r_range(&d40), (19, 39));

        assert_eq!(default_p_for(&BigUint::from(10007u32)), BigUint::from(2u32));
        assert_eq!(default_p_for(&BigUint::from(3u32)), BigUint::from(2u32));
        assert_eq!(default_p_for(&BigUint::from(5u32)), BigUint::from(2u32));
    }
}
