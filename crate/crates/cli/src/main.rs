//! `doleans`: generate sample paths, transform path CSVs and run the
//! verification suites.
//!
//! Exit codes: 0 success, 1 a suite failed, 2 usage or configuration error,
//! 3 I/O error.

mod scenario;

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use doleans::csv_io::{read_path, write_path};
use doleans::generators::generate_member;
use doleans::harness::SCHEMA_VERSION;
use doleans::{
    generate, reciprocal_companion, run_suite, stoch_exp_formula, stoch_exp_recursive, stoch_log, CadlagPath,
    CsvError, HittingReport, SuiteReport, Verdict,
};
use serde::Serialize;

use scenario::{parse_ini, Op, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl CliError {
    fn io(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    fn csv(context: &str, e: CsvError) -> CliError {
        match e {
            CsvError::Io(source) => CliError::Io { context: context.to_string(), source },
            other => CliError::Config(format!("{context}: {other}")),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "doleans", version, about = "Stochastic exponentials and logarithms of sampled paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write sampled paths as CSV.
    Generate(Common),
    /// Apply a chain of operations to a path CSV.
    Transform(TransformArgs),
    /// Run verification suites and write a JSON report.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// INI-style scenario file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// Path seed, or master seed of an ensemble. Defaults to `DOLEANS_SEED`.
    #[arg(long)]
    seed: Option<String>,
    /// Paths to generate, or ensemble size of each suite.
    #[arg(long)]
    paths: Option<String>,
    #[arg(long, value_parser = ["exact", "realized"])]
    qv: Option<String>,
    #[arg(long, value_parser = ["purejump", "grid"])]
    mode: Option<String>,
    #[arg(long)]
    tolerance: Option<String>,
    /// Comma-separated suite names.
    #[arg(long)]
    suite: Option<String>,
    /// Comma-separated steps per unit time for the rate suite.
    #[arg(long)]
    meshes: Option<String>,
    #[arg(long)]
    nmax: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated chain, applied left to right.
    #[arg(long)]
    op: Option<String>,
    /// Input CSV; standard input when absent.
    #[arg(long)]
    input: Option<PathBuf>,
}

impl Common {
    fn flags(&self, paths_key: &str) -> BTreeMap<String, String> {
        let pairs = [
            ("generator.kind", self.kind.clone()),
            ("generator.horizon", self.horizon.clone()),
            ("generator.steps", self.steps.clone()),
            ("generator.seed", self.seed.clone()),
            (paths_key, self.paths.clone()),
            ("generator.qv", self.qv.clone()),
            ("generator.mode", self.mode.clone()),
            ("verify.tolerance", self.tolerance.clone()),
            ("verify.suite", self.suite.clone()),
            ("verify.meshes", self.meshes.clone()),
            ("generator.nmax", self.nmax.clone()),
            ("output.out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        pairs.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))).collect()
    }

    fn scenario(&self, paths_key: &str, extra: BTreeMap<String, String>) -> Result<Scenario, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))?;
                parse_ini(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => BTreeMap::new(),
        };
        let mut flags = self.flags(paths_key);
        flags.extend(extra);
        Scenario::resolve(file, flags, std::env::var("DOLEANS_SEED").ok())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Generate(common) => cmd_generate(&common.scenario("generator.paths", BTreeMap::new())?).map(|_| true),
        Command::Transform(args) => {
            let mut extra = BTreeMap::new();
            if let Some(op) = args.op {
                extra.insert("transform.op".to_string(), op);
            }
            if let Some(input) = args.input {
                extra.insert("transform.input".to_string(), input.display().to_string());
            }
            cmd_transform(&args.common.scenario("generator.paths", extra)?).map(|_| true)
        }
        Command::Verify(common) => cmd_verify(&common.scenario("verify.paths", BTreeMap::new())?),
    }
}

/// The effective configuration as CSV comment lines.
fn preamble(scenario: &Scenario, extra: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in scenario.values() {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    for (k, v) in extra {
        s.push_str(&format!("# {k} = {v}\n"));
    }
    s
}

fn csv_bytes(path: &CadlagPath, preamble: &str) -> Vec<u8> {
    let mut buf = preamble.as_bytes().to_vec();
    write_path(path, &mut buf).expect("writing to memory");
    buf
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(CliError::io(format!("writing {}", path.display()))),
        None => io::stdout().lock().write_all(bytes).map_err(CliError::io("writing standard output")),
    }
}

fn cmd_generate(scenario: &Scenario) -> Result<(), CliError> {
    let spec = scenario.spec()?;
    let paths = scenario.paths()?;
    if paths == 0 {
        return Err(CliError::Config("generator.paths must be at least 1".into()));
    }
    if paths == 1 {
        let path = generate(&spec).map_err(|e| CliError::Config(e.to_string()))?;
        return emit(scenario.out().as_deref(), &csv_bytes(&path, &preamble(scenario, &[])));
    }
    let dir = scenario
        .out()
        .ok_or_else(|| CliError::Config("generating several paths needs --out naming a directory".into()))?;
    fs::create_dir_all(&dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    for i in 0..paths {
        let path = generate_member(&spec, spec.seed, i as u64).map_err(|e| CliError::Config(e.to_string()))?;
        let text = csv_bytes(&path, &preamble(scenario, &[("member", i.to_string())]));
        emit(Some(&dir.join(format!("path-{i:05}.csv"))), &text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct HittingRecord {
    step: usize,
    report: HittingReport,
}

#[derive(Serialize)]
struct HittingOutput<'a> {
    schema_version: u32,
    scenario: &'a BTreeMap<String, String>,
    logarithms: Vec<HittingRecord>,
}

fn cmd_transform(scenario: &Scenario) -> Result<(), CliError> {
    let ops = scenario.ops()?;
    let mut path = match scenario.input() {
        Some(file) => {
            let f = fs::File::open(&file).map_err(CliError::io(format!("opening {}", file.display())))?;
            read_path(io::BufReader::new(f)).map_err(|e| CliError::csv(&file.display().to_string(), e))?
        }
        None => {
            let mut buf = Vec::new();
            io::stdin().read_to_end(&mut buf).map_err(CliError::io("reading standard input"))?;
            read_path(buf.as_slice()).map_err(|e| CliError::csv("standard input", e))?
        }
    };
    let mut hits = Vec::new();
    for (step, op) in ops.iter().enumerate() {
        path = match op {
            Op::ExpFormula => stoch_exp_formula(&path),
            Op::ExpRecursive => stoch_exp_recursive(&path),
            Op::Reciprocal => reciprocal_companion(&path),
            Op::Log => {
                let theta = scenario.log_threshold()?.unwrap_or(path.mode().default_zero_threshold());
                let report = path.detect_zero_hit(theta);
                if let Some(k) = report.continuous_hit().filter(|&k| k > 0) {
                    eprintln!(
                        "warning: step {step}: the input reaches zero continuously at t = {}; \
                         the logarithm lives on [0, {})",
                        path.time_at(k),
                        path.time_at(k)
                    );
                }
                let x = stoch_log(&path, &report).map_err(|e| CliError::Config(format!("step {step}: {e}")))?;
                hits.push(HittingRecord { step, report });
                x
            }
        };
    }
    let out = scenario.out();
    emit(out.as_deref(), &csv_bytes(&path, &preamble(scenario, &[])))?;
    if !hits.is_empty() {
        let json = serde_json::to_string_pretty(&HittingOutput {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.values(),
            logarithms: hits,
        })
        .expect("hitting reports serialize");
        match out {
            Some(file) => emit(Some(&hitting_path(&file)), format!("{json}\n").as_bytes())?,
            None => eprintln!("{json}"),
        }
    }
    Ok(())
}

/// `out.csv` → `out.hitting.json`.
fn hitting_path(out: &Path) -> PathBuf {
    out.with_extension("hitting.json")
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    schema_version: u32,
    scenario: &'a BTreeMap<String, String>,
    reports: Vec<SuiteReport>,
    verdict: Verdict,
}

fn cmd_verify(scenario: &Scenario) -> Result<bool, CliError> {
    let configs = scenario.suites()?;
    let mut reports = Vec::with_capacity(configs.len());
    for config in &configs {
        let report = run_suite(config, None).map_err(|e| CliError::Config(format!("{}: {e}", config.suite.name())))?;
        eprintln!("{}: {}", config.suite.name(), if report.passed() { "PASS" } else { "FAIL" });
        for check in report.checks.iter().filter(|c| c.verdict == Verdict::Fail) {
            eprintln!("  failed check {}", check.name);
        }
        reports.push(report);
    }
    let passed = reports.iter().all(SuiteReport::passed);
    let output = VerifyOutput {
        schema_version: SCHEMA_VERSION,
        scenario: scenario.values(),
        reports,
        verdict: Verdict::from_bool(passed),
    };
    let json = serde_json::to_string_pretty(&output).expect("reports serialize");
    emit(scenario.out().as_deref(), format!("{json}\n").as_bytes())?;
    Ok(passed)
}
