//! Ensemble verification suites and their JSON reports.
//!
//! A suite draws `n_paths` paths from a [`GeneratorSpec`], path `i` from the
//! seed `derive_seed(master_seed, i)`, computes one record per path (in
//! parallel, order preserved), and folds the records into [`Check`]s
//! sequentially. Reports contain no timings or thread counts, so they are
//! byte-identical across reruns and worker counts.
//!
//! Each check declares its tier. `exact` checks hold path by path up to
//! rounding; `statistical` checks compare an ensemble estimate against a
//! target with an explicit standard-error multiplier or an explicit band;
//! `informational` checks only record statistics and always pass.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{jump_integral, quadratic_variation};
use crate::error::HarnessError;
use crate::exp_log::{
    classify_tail, is_killing_jump, jump_measure_pushforward, reciprocal_companion, stoch_exp_formula,
    stoch_exp_recursive, stoch_log, TailThresholds, TailVerdict,
};
use crate::generators::{generate, GeneratorKind, GeneratorSpec, QvChannel};
use crate::path_model::{CadlagPath, HitKind, Mode};
use crate::seed::derive_seed;
use crate::stats::{first_passage_probability, mean_se, median, quantile_sorted};

pub const SCHEMA_VERSION: u32 = 1;

/// At most this many failing seeds are listed per check.
const MAX_FAILING_SEEDS: usize = 16;

/// A terminal value of `E(X)` below this counts as "tends to zero".
pub const ZERO_LEVEL: f64 = 1e-3;

/// `½·log(3/4)`, the mean of `log(1 + Θ)` for `Θ = ±½`.
pub const HALF_LOG_THREE_QUARTERS: f64 = -0.143_841_036_225_890_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteKind {
    Roundtrip,
    Reciprocal,
    Convergence,
    Supermartingale,
    Rate,
    Maximality,
    Announcing,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 7] = [
        SuiteKind::Roundtrip,
        SuiteKind::Reciprocal,
        SuiteKind::Convergence,
        SuiteKind::Supermartingale,
        SuiteKind::Rate,
        SuiteKind::Maximality,
        SuiteKind::Announcing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Roundtrip => "roundtrip",
            SuiteKind::Reciprocal => "reciprocal",
            SuiteKind::Convergence => "convergence",
            SuiteKind::Supermartingale => "supermartingale",
            SuiteKind::Rate => "rate",
            SuiteKind::Maximality => "maximality",
            SuiteKind::Announcing => "announcing",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

/// Everything a suite run depends on. Echoed verbatim into the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite: SuiteKind,
    pub spec: GeneratorSpec,
    pub n_paths: usize,
    pub master_seed: u64,
    /// Overrides the suite's default per-path tolerance.
    pub tolerance: Option<f64>,
    pub ci_multiplier: f64,
    /// Rate suite: grid steps per unit time, e.g. `[64, 256, 1024]`.
    pub meshes: Vec<usize>,
    /// Supermartingale suite: observation times. Empty means five evenly
    /// spaced times up to the horizon.
    pub checkpoints: Vec<f64>,
    /// Announcing suite: the `n` at which `σ_n` is evaluated.
    pub ladder: Vec<u32>,
    /// Zero threshold for hit detection. Defaults to `1e-9` on grid paths
    /// and `1e-3` on exact pure-jump exponentials, which never reach an
    /// exact zero without a −1 jump.
    pub zero_threshold: Option<f64>,
    /// Maximality suite: required agreement fraction.
    pub maximality_bar: f64,
    /// Maximality suite: allowed distance of the absorbed fraction from the
    /// first-passage probability.
    pub absorption_band: f64,
    pub tail: TailThresholds,
}

impl SuiteConfig {
    pub fn new(suite: SuiteKind, spec: GeneratorSpec, n_paths: usize, master_seed: u64) -> Self {
        Self {
            suite,
            spec,
            n_paths,
            master_seed,
            tolerance: None,
            ci_multiplier: 3.0,
            meshes: vec![64, 256, 1024],
            checkpoints: Vec::new(),
            ladder: (1..=10).map(|p| 1u32 << p).collect(),
            zero_threshold: None,
            maximality_bar: 0.95,
            absorption_band: 0.03,
            tail: TailThresholds::default(),
        }
    }

    fn zero_threshold_for(&self, z: &CadlagPath) -> f64 {
        self.zero_threshold.unwrap_or(match z.mode() {
            Mode::PureJumpExact => 1e-3,
            Mode::GridApprox => 1e-9,
        })
    }

    fn validate(&self) -> Result<(), HarnessError> {
        self.spec.validate()?;
        if self.n_paths == 0 {
            return Err(HarnessError::Config("n_paths must be at least 1".into()));
        }
        if !(self.ci_multiplier.is_finite() && self.ci_multiplier > 0.0) {
            return Err(HarnessError::Config("ci_multiplier must be positive".into()));
        }
        if let Some(t) = self.tolerance {
            if !(t >= 0.0) {
                return Err(HarnessError::Config("tolerance must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Exact,
    Statistical,
    Informational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p50: f64,
    pub p95: f64,
    pub p100: f64,
}

impl Quantiles {
    fn of(errors: &[f64]) -> Option<Self> {
        if errors.is_empty() {
            return None;
        }
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            p50: quantile_sorted(&sorted, 0.5),
            p95: quantile_sorted(&sorted, 0.95),
            p100: quantile_sorted(&sorted, 1.0),
        })
    }
}

/// `estimate ± multiplier·standard_error` against `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    pub standard_error: f64,
    pub multiplier: f64,
    pub lower: f64,
    pub upper: f64,
    pub target: f64,
}

impl ConfidenceInterval {
    pub fn new(estimate: f64, standard_error: f64, multiplier: f64, target: f64) -> Self {
        let half = multiplier * standard_error;
        Self { estimate, standard_error, multiplier, lower: estimate - half, upper: estimate + half, target }
    }

    pub fn covers_target(&self) -> bool {
        self.lower <= self.target && self.target <= self.upper
    }

    /// One-sided: the target is not below the interval.
    pub fn target_not_below(&self) -> bool {
        self.lower <= self.target
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub tier: Tier,
    pub samples: usize,
    pub passed: usize,
    pub max_error: Option<f64>,
    pub error_quantiles: Option<Quantiles>,
    pub tolerance: Option<f64>,
    pub interval: Option<ConfidenceInterval>,
    pub metrics: BTreeMap<String, f64>,
    pub failing_seeds: Vec<u64>,
    pub verdict: Verdict,
}

impl Check {
    fn new(name: impl Into<String>, tier: Tier) -> Self {
        Self {
            name: name.into(),
            tier,
            samples: 0,
            passed: 0,
            max_error: None,
            error_quantiles: None,
            tolerance: None,
            interval: None,
            metrics: BTreeMap::new(),
            failing_seeds: Vec::new(),
            verdict: Verdict::Pass,
        }
    }

    /// Per-path errors against a tolerance; passes iff every error is
    /// within it. NaN errors fail.
    fn from_errors(name: impl Into<String>, errors: &[(u64, f64)], tolerance: f64) -> Self {
        let mut check = Self::new(name, Tier::Exact);
        let values: Vec<f64> = errors.iter().map(|e| e.1).collect();
        check.samples = errors.len();
        check.passed = values.iter().filter(|&&e| e <= tolerance).count();
        check.max_error = values.iter().copied().reduce(|a, b| if b.total_cmp(&a).is_gt() { b } else { a });
        check.error_quantiles = Quantiles::of(&values);
        check.tolerance = Some(tolerance);
        check.failing_seeds = errors.iter().filter(|e| !(e.1 <= tolerance)).map(|e| e.0).take(MAX_FAILING_SEEDS).collect();
        check.verdict = Verdict::from_bool(check.passed == check.samples);
        check
    }

    /// Per-path booleans; passes iff all hold.
    fn from_flags(name: impl Into<String>, flags: &[(u64, bool)]) -> Self {
        let mut check = Self::new(name, Tier::Exact);
        check.samples = flags.len();
        check.passed = flags.iter().filter(|f| f.1).count();
        check.failing_seeds = flags.iter().filter(|f| !f.1).map(|f| f.0).take(MAX_FAILING_SEEDS).collect();
        check.verdict = Verdict::from_bool(check.passed == check.samples);
        check
    }

    fn statistical(name: impl Into<String>, samples: usize, interval: ConfidenceInterval, ok: bool) -> Self {
        let mut check = Self::new(name, Tier::Statistical);
        check.samples = samples;
        check.passed = if ok { samples } else { 0 };
        check.interval = Some(interval);
        check.verdict = Verdict::from_bool(ok);
        check
    }

    /// A fraction compared against a minimum.
    fn fraction_at_least(name: impl Into<String>, flags: &[(u64, bool)], bar: f64) -> Self {
        let mut check = Self::new(name, Tier::Statistical);
        check.samples = flags.len();
        check.passed = flags.iter().filter(|f| f.1).count();
        let fraction = if flags.is_empty() { 1.0 } else { check.passed as f64 / flags.len() as f64 };
        check.metrics.insert("fraction".into(), fraction);
        check.metrics.insert("required-fraction".into(), bar);
        check.failing_seeds = flags.iter().filter(|f| !f.1).map(|f| f.0).take(MAX_FAILING_SEEDS).collect();
        check.verdict = Verdict::from_bool(fraction >= bar);
        check
    }

    fn with_metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_owned(), value);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub suite: SuiteKind,
    pub master_seed: u64,
    pub config: SuiteConfig,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
}

impl SuiteReport {
    fn new(config: &SuiteConfig, checks: Vec<Check>) -> Self {
        let verdict = Verdict::from_bool(checks.iter().all(|c| c.verdict == Verdict::Pass));
        Self {
            schema_version: SCHEMA_VERSION,
            suite: config.suite,
            master_seed: config.master_seed,
            config: config.clone(),
            checks,
            verdict,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Runs the configured suite. `workers` pins the size of the thread pool;
/// `None` uses the global pool. The report does not depend on it.
pub fn run_suite(config: &SuiteConfig, workers: Option<usize>) -> Result<SuiteReport, HarnessError> {
    config.validate()?;
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            pool.install(|| dispatch(config))
        }
        None => dispatch(config),
    }
}

fn dispatch(config: &SuiteConfig) -> Result<SuiteReport, HarnessError> {
    let checks = match config.suite {
        SuiteKind::Roundtrip => roundtrip_suite(config),
        SuiteKind::Reciprocal => reciprocal_suite(config),
        SuiteKind::Convergence => convergence_suite(config),
        SuiteKind::Supermartingale => supermartingale_suite(config),
        SuiteKind::Rate => rate_suite(config)?,
        SuiteKind::Maximality => maximality_suite(config)?,
        SuiteKind::Announcing => announcing_suite(config)?,
    };
    Ok(SuiteReport::new(config, checks))
}

/// Generates path `i` of the ensemble and applies `f`; returns
/// `(per-path seed, record)` in index order.
fn per_path<T, F>(config: &SuiteConfig, spec: &GeneratorSpec, f: F) -> Vec<(u64, T)>
where
    T: Send,
    F: Fn(&CadlagPath) -> T + Sync,
{
    (0..config.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(config.master_seed, i);
            let path = generate(&spec.with_seed(seed)).expect("spec validated");
            (seed, f(&path))
        })
        .collect()
}

fn kill_threshold(path: &CadlagPath) -> f64 {
    path.mode().default_zero_threshold()
}

// ---------------------------------------------------------------- roundtrip

/// Channel-wise distance `|a − b| / max(1, |b|)` over the in-interval
/// steps; infinite if the paths live on different grids or intervals.
pub fn channel_error(a: &CadlagPath, b: &CadlagPath) -> f64 {
    if a.times() != b.times() || a.interval_end() != b.interval_end() {
        return f64::INFINITY;
    }
    let rel = |x: f64, y: f64| if x == y { 0.0 } else { (x - y).abs() / y.abs().max(1.0) };
    let mut worst = rel(a.initial_value(), b.initial_value());
    for k in 1..=a.last_index() {
        worst = worst
            .max(rel(a.cont_increment(k), b.cont_increment(k)))
            .max(rel(a.jump(k), b.jump(k)))
            .max(rel(a.cont_qv_increment(k), b.cont_qv_increment(k)));
        if worst.is_nan() {
            return f64::INFINITY;
        }
    }
    worst
}

/// `X` started at 0 and stopped after its first jump of −1: the member of
/// the logarithm class that `L(E(X))` recovers.
pub fn log_class_projection(x: &CadlagPath) -> CadlagPath {
    let theta = kill_threshold(x);
    let shifted = CadlagPath::new(
        0.0,
        x.times().to_vec(),
        x.cont_increments().to_vec(),
        x.jumps().to_vec(),
        x.cont_qv_increments().to_vec(),
        x.interval_end(),
        x.mode(),
    )
    .expect("channels of a valid path");
    match (1..=x.last_index()).find(|&k| is_killing_jump(x.jump(k), theta)) {
        Some(k) => {
            let mut stopped = shifted.stop_at(k);
            // A near −1 jump on a grid path is a −1 jump of the class member.
            if x.jump(k) != -1.0 {
                let mut jumps = stopped.jumps().to_vec();
                jumps[k - 1] = -1.0;
                stopped = CadlagPath::new(
                    0.0,
                    stopped.times().to_vec(),
                    stopped.cont_increments().to_vec(),
                    jumps,
                    stopped.cont_qv_increments().to_vec(),
                    stopped.interval_end(),
                    stopped.mode(),
                )
                .expect("channels of a valid path");
            }
            stopped
        }
        None => shifted,
    }
}

/// Errors of both roundtrips for one exponential evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundtripErrors {
    /// `X^ρ` against `L(E(X))`.
    pub log_of_exp: f64,
    /// `Z = E(X)` against `E(L(Z))`.
    pub exp_of_log: f64,
}

impl RoundtripErrors {
    pub fn max(&self) -> f64 {
        self.log_of_exp.max(self.exp_of_log)
    }
}

pub fn roundtrip_errors(x: &CadlagPath, exp: fn(&CadlagPath) -> CadlagPath) -> RoundtripErrors {
    let member = log_class_projection(x);
    let z = exp(&member);
    let report = z.detect_zero_hit(kill_threshold(&z));
    match stoch_log(&z, &report) {
        Ok(back) => RoundtripErrors { log_of_exp: channel_error(&back, &member), exp_of_log: channel_error(&exp(&back), &z) },
        Err(_) => RoundtripErrors { log_of_exp: f64::INFINITY, exp_of_log: f64::INFINITY },
    }
}

fn roundtrip_suite(config: &SuiteConfig) -> Vec<Check> {
    let exact = config.spec.effective_mode() == Mode::PureJumpExact;
    let tolerance = config.tolerance.unwrap_or(if exact { 1e-12 } else { 1e-10 });
    let records = per_path(config, &config.spec, |x| {
        let recursive = roundtrip_errors(x, stoch_exp_recursive);
        let formula = exact.then(|| roundtrip_errors(x, stoch_exp_formula));
        (recursive, formula)
    });
    let mut checks = Vec::new();
    let pick = |f: &dyn Fn(&RoundtripErrors) -> f64, formula: bool| -> Vec<(u64, f64)> {
        records
            .iter()
            .filter_map(|(s, (r, fm))| if formula { fm.as_ref().map(|e| (*s, f(e))) } else { Some((*s, f(r))) })
            .collect()
    };
    checks.push(Check::from_errors("log-of-exp/recursive", &pick(&|e| e.log_of_exp, false), tolerance));
    checks.push(Check::from_errors("exp-of-log/recursive", &pick(&|e| e.exp_of_log, false), tolerance));
    if exact {
        checks.push(Check::from_errors("log-of-exp/formula", &pick(&|e| e.log_of_exp, true), tolerance));
        checks.push(Check::from_errors("exp-of-log/formula", &pick(&|e| e.exp_of_log, true), tolerance));
    }
    checks
}

// --------------------------------------------------------------- reciprocal

/// `sup |E(X)·E(Y) − 1|` over the companion's interval, both exponentials
/// from the closed form.
pub fn reciprocal_product_error(x: &CadlagPath) -> f64 {
    let y = reciprocal_companion(x);
    let ex = stoch_exp_formula(x);
    let ey = stoch_exp_formula(&y);
    (0..=y.last_index())
        .map(|k| (ex.values()[k] * ey.values()[k] - 1.0).abs())
        .fold(0.0, |a, b| if b.is_nan() { f64::INFINITY } else { a.max(b) })
}

/// A deterministic jump functional `G(t, y)`.
pub type PlainFunctional = fn(f64, f64) -> f64;

/// The test functions `G` of the jump-transport check.
pub fn transport_functions() -> [(&'static str, PlainFunctional); 3] {
    fn square(_t: f64, y: f64) -> f64 {
        y * y
    }
    fn entropy(_t: f64, y: f64) -> f64 {
        y - (1.0 + y).abs().ln()
    }
    fn indicator(_t: f64, y: f64) -> f64 {
        if y.abs() > 0.5 {
            1.0
        } else {
            0.0
        }
    }
    [("square", square), ("y-minus-log", entropy), ("indicator", indicator)]
}

fn relative_gap(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter()
        .zip(rhs)
        .map(|(&a, &b)| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()).max(1.0) })
        .fold(0.0, |acc, e| if e.is_nan() { f64::INFINITY } else { acc.max(e) })
}

/// Largest `1/|1 + ΔX|` over the in-interval jumps that are not −1: the
/// amplification of rounding by `φ`, which blows up near −1.
pub fn phi_condition(x: &CadlagPath) -> f64 {
    let theta = kill_threshold(x);
    (1..=x.last_index())
        .map(|k| x.jump(k))
        .filter(|&j| j != 0.0 && !is_killing_jump(j, theta))
        .map(|j| 1.0 / (1.0 + j).abs())
        .fold(1.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocalRecord {
    pub product: f64,
    /// Relative gap of `G*μ^Y = (G∘φ)*μ^X`, one per transport function.
    pub transport: [f64; 3],
    /// Relative gap of the swapped form `F*μ^X = (F∘φ)*μ^Y`.
    pub swapped: [f64; 3],
    pub condition: f64,
}

pub fn reciprocal_record(x: &CadlagPath) -> ReciprocalRecord {
    let y = reciprocal_companion(x);
    let fns = transport_functions();
    let mut transport = [0.0; 3];
    let mut swapped = [0.0; 3];
    for (i, (_, g)) in fns.iter().enumerate() {
        let pf = jump_measure_pushforward(g, x, &y).expect("same grid");
        transport[i] = relative_gap(&pf.lhs, &pf.rhs);
        let back = jump_measure_pushforward(g, &y, x).expect("same grid");
        swapped[i] = relative_gap(&back.lhs, &back.rhs);
    }
    ReciprocalRecord { product: reciprocal_product_error(x), transport, swapped, condition: phi_condition(x) }
}

fn reciprocal_suite(config: &SuiteConfig) -> Vec<Check> {
    let product_tol = config.tolerance.unwrap_or(1e-10);
    let transport_tol = 1e-12;
    let records = per_path(config, &config.spec, reciprocal_record);
    let mut checks = vec![Check::from_errors(
        "product-equals-one",
        &records.iter().map(|(s, r)| (*s, r.product)).collect::<Vec<_>>(),
        product_tol,
    )];
    for (i, (name, _)) in transport_functions().iter().enumerate() {
        let errs: Vec<(u64, f64)> = records.iter().map(|(s, r)| (*s, r.transport[i])).collect();
        checks.push(Check::from_errors(format!("transport/{name}"), &errs, transport_tol));
    }
    for (i, (name, _)) in transport_functions().iter().enumerate() {
        // Rounding in φ∘φ grows like 1/|1+ΔX|, so each path is judged
        // against the tolerance scaled by its own conditioning.
        let errs: Vec<(u64, f64)> = records.iter().map(|(s, r)| (*s, r.swapped[i] / r.condition)).collect();
        let worst = records.iter().map(|(_, r)| r.condition).fold(1.0, f64::max);
        checks.push(
            Check::from_errors(format!("transport-swapped/{name}"), &errs, transport_tol)
                .with_metric("max-phi-condition", worst),
        );
    }
    checks
}

// -------------------------------------------------------------- convergence

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub verdict: TailVerdict,
    pub final_exponential: f64,
    /// `(1/n)·Σ log(1 + ΔX)` over the jumps, when every jump is above −1.
    pub mean_log_factor: Option<f64>,
}

pub fn convergence_record(x: &CadlagPath, thresholds: &TailThresholds) -> ConvergenceRecord {
    let z = stoch_exp_formula(x);
    let tail = classify_tail(x, thresholds);
    let jumps: Vec<f64> = (1..=x.last_index()).map(|k| x.jump(k)).filter(|&j| j != 0.0).collect();
    let mean_log_factor = (!jumps.is_empty() && jumps.iter().all(|&j| j > -1.0))
        .then(|| jumps.iter().map(|j| j.ln_1p()).sum::<f64>() / jumps.len() as f64);
    ConvergenceRecord { verdict: tail.verdict, final_exponential: *z.values().last().expect("nonempty"), mean_log_factor }
}

fn verdict_key(v: TailVerdict) -> &'static str {
    match v {
        TailVerdict::ConvergesFinite => "converges-finite",
        TailVerdict::DivergesToMinusInf => "diverges-to-minus-inf",
        TailVerdict::InfiniteQV => "infinite-qv",
        TailVerdict::AbsorbedByJump => "absorbed-by-jump",
        TailVerdict::Indeterminate => "indeterminate",
    }
}

fn verdict_fractions(check: &mut Check, verdicts: impl Iterator<Item = TailVerdict> + Clone, total: usize) {
    for v in [
        TailVerdict::ConvergesFinite,
        TailVerdict::DivergesToMinusInf,
        TailVerdict::InfiniteQV,
        TailVerdict::AbsorbedByJump,
        TailVerdict::Indeterminate,
    ] {
        let count = verdicts.clone().filter(|&w| w == v).count();
        let fraction = if total == 0 { 0.0 } else { count as f64 / total as f64 };
        check.metrics.insert(format!("fraction-{}", verdict_key(v)), fraction);
    }
}

/// Folds convergence records into checks. `time_changed_walk` adds the
/// two statistics of the `±½` example.
pub fn convergence_checks(
    records: &[(u64, ConvergenceRecord)],
    ci_multiplier: f64,
    time_changed_walk: bool,
) -> Vec<Check> {
    let n = records.len();
    let mut tails = Check::new("tail-classification", Tier::Informational);
    tails.samples = n;
    tails.passed = n;
    verdict_fractions(&mut tails, records.iter().map(|r| r.1.verdict), n);

    // {E(X) → 0} should sit inside {−1 jump} ∪ {X → −∞} ∪ {[X,X] = ∞}.
    let violations: Vec<u64> = records
        .iter()
        .filter(|(_, r)| {
            r.final_exponential.abs() < ZERO_LEVEL
                && !matches!(
                    r.verdict,
                    TailVerdict::AbsorbedByJump | TailVerdict::DivergesToMinusInf | TailVerdict::InfiniteQV
                )
        })
        .map(|(s, _)| *s)
        .collect();
    let mut inclusion = Check::new("zero-limit-inclusion", Tier::Informational);
    inclusion.samples = n;
    inclusion.passed = n - violations.len();
    inclusion.metrics.insert("violation-fraction".into(), violations.len() as f64 / n.max(1) as f64);
    inclusion.metrics.insert("zero-level".into(), ZERO_LEVEL);
    inclusion.failing_seeds = violations.into_iter().take(MAX_FAILING_SEEDS).collect();

    // The part of the inclusion that survives finite thresholds: a path
    // whose exponential tends to zero must not look settled.
    let settled: Vec<(u64, bool)> = records
        .iter()
        .map(|(s, r)| {
            (*s, !(r.final_exponential.abs() < ZERO_LEVEL && r.verdict == TailVerdict::ConvergesFinite))
        })
        .collect();
    let zero_not_finite = Check::from_flags("zero-limit-not-settled", &settled);

    let mut checks = vec![tails, inclusion, zero_not_finite];
    if time_changed_walk {
        let small: Vec<(u64, bool)> =
            records.iter().map(|(s, r)| (*s, r.final_exponential < ZERO_LEVEL)).collect();
        checks.push(
            Check::fraction_at_least("terminal-below-zero-level", &small, 0.98).with_metric("zero-level", ZERO_LEVEL),
        );
        let stats: Vec<f64> = records.iter().filter_map(|(_, r)| r.mean_log_factor).collect();
        let (mean, se) = mean_se(&stats);
        let ci = ConfidenceInterval::new(mean, se, ci_multiplier, HALF_LOG_THREE_QUARTERS);
        checks.push(Check::statistical("law-of-large-numbers", stats.len(), ci, ci.covers_target()));
    }
    checks
}

fn convergence_suite(config: &SuiteConfig) -> Vec<Check> {
    let records = per_path(config, &config.spec, |x| convergence_record(x, &config.tail));
    let tcw = matches!(config.spec.kind, GeneratorKind::TimeChangedWalk { .. });
    convergence_checks(&records, config.ci_multiplier, tcw)
}

// ---------------------------------------------------------- supermartingale

/// The nonnegative process the supermartingale suite observes: the path
/// itself for stopped Brownian motion plus one, `E(X)` otherwise.
pub fn observed_supermartingale(spec: &GeneratorSpec, x: &CadlagPath) -> CadlagPath {
    match spec.kind {
        GeneratorKind::StoppedBrownian => x.clone(),
        _ => stoch_exp_formula(x),
    }
}

/// Right-continuous value at time `t` (the initial value before `t_1`).
pub fn value_at_time(path: &CadlagPath, t: f64) -> f64 {
    let k = path.times().partition_point(|&s| s <= t);
    path.all_values()[k]
}

/// Kinds whose observed process is a true martingale.
pub fn is_martingale_fixture(spec: &GeneratorSpec) -> bool {
    match spec.kind {
        GeneratorKind::OneJump
        | GeneratorKind::StoppedBrownian
        | GeneratorKind::Walk { .. }
        | GeneratorKind::TimeChangedWalk { .. } => true,
        GeneratorKind::Brownian => spec.qv_channel == QvChannel::Exact,
        GeneratorKind::RandomL { kill_probability } => kill_probability == 0.0,
        GeneratorKind::CompoundPoisson { .. } => false,
    }
}

fn default_checkpoints(spec: &GeneratorSpec) -> Vec<f64> {
    let horizon = match spec.kind {
        GeneratorKind::TimeChangedWalk { .. } => 1.0,
        _ => spec.horizon,
    };
    (1..=5).map(|i| horizon * i as f64 / 5.0).collect()
}

/// Folds per-path observations (`samples[p][c]` = path `p` at checkpoint
/// `c`) into the mean checks.
pub fn supermartingale_checks(
    samples: &[Vec<f64>],
    checkpoints: &[f64],
    ci_multiplier: f64,
    martingale: bool,
) -> Vec<Check> {
    let column = |c: usize| samples.iter().map(|row| row[c]).collect::<Vec<f64>>();
    let n = samples.len();
    let mut checks = Vec::new();
    for (c, &t) in checkpoints.iter().enumerate() {
        let (mean, se) = mean_se(&column(c));
        let ci = ConfidenceInterval::new(mean, se, ci_multiplier, 1.0);
        let ok = if martingale { ci.covers_target() } else { ci.target_not_below() };
        let name = if martingale { format!("mean-equals-one@t={t}") } else { format!("mean-at-most-one@t={t}") };
        checks.push(Check::statistical(name, n, ci, ok));
    }
    for c in 1..checkpoints.len() {
        let diffs: Vec<f64> = samples.iter().map(|row| row[c] - row[c - 1]).collect();
        let (mean, se) = mean_se(&diffs);
        let ci = ConfidenceInterval::new(mean, se, ci_multiplier, 0.0);
        checks.push(Check::statistical(
            format!("nonincreasing@t={}..{}", checkpoints[c - 1], checkpoints[c]),
            n,
            ci,
            ci.target_not_below(),
        ));
    }
    checks
}

fn supermartingale_suite(config: &SuiteConfig) -> Vec<Check> {
    let checkpoints =
        if config.checkpoints.is_empty() { default_checkpoints(&config.spec) } else { config.checkpoints.clone() };
    let records = per_path(config, &config.spec, |x| {
        let z = observed_supermartingale(&config.spec, x);
        checkpoints.iter().map(|&t| value_at_time(&z, t)).collect::<Vec<f64>>()
    });
    let samples: Vec<Vec<f64>> = records.into_iter().map(|r| r.1).collect();
    supermartingale_checks(&samples, &checkpoints, config.ci_multiplier, is_martingale_fixture(&config.spec))
}

// --------------------------------------------------------------------- rate

/// `sup_k |E_formula(X)_k − E_recursive(X)_k|`.
pub fn evaluator_gap(x: &CadlagPath) -> f64 {
    let f = stoch_exp_formula(x);
    let r = stoch_exp_recursive(x);
    f.values()
        .iter()
        .zip(r.values())
        .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
        .fold(0.0, |acc, e| if e.is_nan() { f64::INFINITY } else { acc.max(e) })
}

fn rate_suite(config: &SuiteConfig) -> Result<Vec<Check>, HarnessError> {
    if config.meshes.len() < 2 {
        return Err(HarnessError::TooFewMeshLevels(config.meshes.len()));
    }
    if config.meshes.windows(2).any(|w| w[1] <= w[0]) || config.meshes[0] == 0 {
        return Err(HarnessError::Config("meshes must be strictly increasing steps per unit time".into()));
    }
    let pure_jump = config.spec.effective_mode() == Mode::PureJumpExact;
    let mut medians = Vec::new();
    let mut all_gaps = Vec::new();
    for &per_unit in &config.meshes {
        let steps = ((config.spec.horizon * per_unit as f64).round() as usize).max(1);
        let spec = GeneratorSpec { steps, ..config.spec };
        let gaps = per_path(config, &spec, evaluator_gap);
        medians.push(median(&gaps.iter().map(|g| g.1).collect::<Vec<_>>()));
        all_gaps.extend(gaps);
    }

    let mut check = if pure_jump {
        let mut c = Check::from_errors("evaluators-coincide", &all_gaps, config.tolerance.unwrap_or(1e-12));
        c.tier = Tier::Exact;
        c
    } else {
        let mut c = Check::new("median-gap-order-half", Tier::Statistical);
        c.samples = all_gaps.len();
        let mut ok = true;
        for i in 1..medians.len() {
            let ratio = medians[i] / medians[i - 1];
            c.metrics.insert(format!("ratio-{}-{}", config.meshes[i - 1], config.meshes[i]), ratio);
            if !(medians[i] < medians[i - 1]) {
                ok = false;
            }
            if config.meshes[i] == 4 * config.meshes[i - 1] && !(0.3..=0.7).contains(&ratio) {
                ok = false;
            }
        }
        c.passed = if ok { c.samples } else { 0 };
        c.verdict = Verdict::from_bool(ok);
        c
    };
    for (m, med) in config.meshes.iter().zip(&medians) {
        check.metrics.insert(format!("median-gap-{m}"), *med);
    }
    Ok(vec![check])
}

// --------------------------------------------------------------- maximality

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximalityRecord {
    /// `Z` reached zero within the horizon.
    pub hit: bool,
    pub kind: HitKind,
    pub verdict: Option<TailVerdict>,
    pub log_final_value: Option<f64>,
}

/// The process whose zero hits the maximality suite inspects.
fn maximality_process(spec: &GeneratorSpec, x: &CadlagPath) -> CadlagPath {
    match spec.kind {
        GeneratorKind::StoppedBrownian => x.clone(),
        _ => stoch_exp_formula(x),
    }
}

pub fn maximality_record(z: &CadlagPath, zero_threshold: f64, thresholds: &TailThresholds) -> MaximalityRecord {
    let report = z.detect_zero_hit(zero_threshold);
    if report.tau0_index.is_none() {
        return MaximalityRecord { hit: false, kind: HitKind::NoHit, verdict: None, log_final_value: None };
    }
    let (verdict, final_value) = match stoch_log(z, &report) {
        Ok(x) => {
            let tail = classify_tail(&x, thresholds);
            (Some(tail.verdict), Some(tail.final_value))
        }
        Err(_) => (None, None),
    };
    MaximalityRecord { hit: true, kind: report.kind, verdict, log_final_value: final_value }
}

fn maximality_suite(config: &SuiteConfig) -> Result<Vec<Check>, HarnessError> {
    let stopped_bm = match config.spec.kind {
        GeneratorKind::StoppedBrownian => true,
        GeneratorKind::TimeChangedWalk { .. } => false,
        other => return Err(HarnessError::UnsupportedKind { suite: "maximality", kind: other.name() }),
    };
    let records = per_path(config, &config.spec, |x| {
        let z = maximality_process(&config.spec, x);
        maximality_record(&z, config.zero_threshold_for(&z), &config.tail)
    });
    let hits: Vec<&(u64, MaximalityRecord)> = records.iter().filter(|r| r.1.hit).collect();
    let mut checks = Vec::new();

    if stopped_bm {
        let p = hits.len() as f64 / records.len() as f64;
        let target = first_passage_probability(1.0, config.spec.horizon);
        let se = (p * (1.0 - p) / records.len() as f64).sqrt();
        let mut ci = ConfidenceInterval::new(p, se, config.ci_multiplier, target);
        // Grid absorption is biased low, so the band is explicit rather than
        // a multiple of the standard error.
        ci.lower = p - config.absorption_band;
        ci.upper = p + config.absorption_band;
        let mut check = Check::statistical("absorbed-fraction", records.len(), ci, ci.covers_target());
        check.tolerance = Some(config.absorption_band);
        checks.push(check);
    }

    let kinds: Vec<(u64, bool)> = hits.iter().map(|(s, r)| (*s, r.kind == HitKind::Continuous)).collect();
    checks.push(Check::from_flags("hit-kind-continuous", &kinds));

    let maximal = |r: &MaximalityRecord| {
        r.kind == HitKind::Continuous
            && matches!(r.verdict, Some(TailVerdict::DivergesToMinusInf | TailVerdict::InfiniteQV))
    };
    let agree: Vec<(u64, bool)> = hits.iter().map(|(s, r)| (*s, maximal(r))).collect();
    let mut check = Check::fraction_at_least("maximal-tail", &agree, config.maximality_bar);
    verdict_fractions(&mut check, hits.iter().filter_map(|r| r.1.verdict), hits.len());
    let finals: Vec<f64> = hits.iter().filter_map(|r| r.1.log_final_value).collect();
    check.metrics.insert("median-final-log-value".into(), median(&finals));
    let below = finals.iter().filter(|&&v| v < -5.0).count() as f64 / finals.len().max(1) as f64;
    check.metrics.insert("fraction-final-below-minus-5".into(), below);
    checks.push(check);
    Ok(checks)
}

// --------------------------------------------------------------- announcing

#[derive(Debug, Clone, PartialEq)]
pub struct AnnouncingRecord {
    pub hit: bool,
    pub below: bool,
    pub nondecreasing: bool,
    pub converges: bool,
    /// `τ_C − σ_n` at the last rung of the ladder.
    pub final_gap: f64,
}

/// Evaluates `σ_n` along `ladder` for one exponential `z`.
pub fn announcing_record(z: &CadlagPath, zero_threshold: f64, ladder: &[u32]) -> AnnouncingRecord {
    let report = z.detect_zero_hit(zero_threshold);
    let sigmas: Vec<f64> = ladder.iter().map(|&n| z.announcing_sequence(&report, n)).collect();
    let nondecreasing = sigmas.windows(2).all(|w| w[0] <= w[1]);
    match report.continuous_hit() {
        Some(k0) => {
            let tau = z.time_at(k0);
            let step = tau - z.time_at(k0 - 1);
            let last = *sigmas.last().unwrap_or(&0.0);
            let converges = ladder.iter().zip(&sigmas).filter(|(&n, _)| n >= 1024).all(|(_, &s)| tau - s <= step)
                && tau - last <= step;
            AnnouncingRecord {
                hit: true,
                below: sigmas.iter().all(|&s| s < tau),
                nondecreasing,
                converges,
                final_gap: tau - last,
            }
        }
        None => {
            let capped = ladder.iter().zip(&sigmas).all(|(&n, &s)| s <= f64::from(n).min(z.horizon()));
            AnnouncingRecord { hit: false, below: capped, nondecreasing, converges: true, final_gap: 0.0 }
        }
    }
}

fn announcing_suite(config: &SuiteConfig) -> Result<Vec<Check>, HarnessError> {
    if !matches!(config.spec.kind, GeneratorKind::TimeChangedWalk { .. }) {
        return Err(HarnessError::UnsupportedKind { suite: "announcing", kind: config.spec.kind.name() });
    }
    if config.ladder.is_empty() || config.ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HarnessError::Config("ladder must be a nonempty increasing sequence".into()));
    }
    let records = per_path(config, &config.spec, |x| {
        let z = stoch_exp_formula(x);
        announcing_record(&z, config.zero_threshold_for(&z), &config.ladder)
    });
    let flags = |f: fn(&AnnouncingRecord) -> bool| records.iter().map(|(s, r)| (*s, f(r))).collect::<Vec<_>>();
    let hit_fraction = records.iter().filter(|r| r.1.hit).count() as f64 / records.len() as f64;
    let gaps: Vec<f64> = records.iter().filter(|r| r.1.hit).map(|r| r.1.final_gap).collect();
    Ok(vec![
        Check::from_flags("sigma-below-tau", &flags(|r| r.below)).with_metric("hit-fraction", hit_fraction),
        Check::from_flags("sigma-nondecreasing", &flags(|r| r.nondecreasing)),
        Check::from_flags("sigma-converges", &flags(|r| r.converges))
            .with_metric("max-final-gap", gaps.iter().copied().fold(0.0, f64::max)),
    ])
}

/// `[X,X]` at the last in-interval index, for reports and tests.
pub fn total_qv(x: &CadlagPath) -> f64 {
    quadratic_variation(x).final_total()
}

/// `Σ G(ΔX)` over the in-interval jumps.
pub fn jump_sum(g: fn(f64, f64) -> f64, x: &CadlagPath) -> f64 {
    *jump_integral(&g, x).last().expect("nonempty")
}
