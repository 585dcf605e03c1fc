//! Scenario configuration: an INI-style file merged with command-line flags.
//!
//! Every setting has a qualified name `section.key`. Resolution order is
//! flag, then config file, then default (for `generator.seed` the
//! `DOLEANS_SEED` environment variable sits between file and default). The
//! resolved map is what gets echoed into output artifacts.

use std::collections::BTreeMap;
use std::path::PathBuf;

use doleans::{GeneratorKind, GeneratorSpec, JumpLaw, Mode, QvChannel, SuiteConfig, SuiteKind, TailThresholds};

use crate::CliError;

/// `(qualified key, default, description)`. An empty default means unset.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("generator.kind", "brownian", "brownian | stopped-bm | one-jump | walk | timechanged-walk | compound-poisson | random-l"),
    ("generator.horizon", "1", "time horizon T"),
    ("generator.steps", "1000", "grid steps on [0, T] for grid-based kinds"),
    ("generator.seed", "0", "seed of a single path, master seed of an ensemble"),
    ("generator.qv", "exact", "continuous QV channel: exact | realized"),
    ("generator.mode", "", "purejump | grid; empty keeps the kind's natural mode"),
    ("generator.nmax", "200", "last index of the time-changed walk"),
    ("generator.stopped", "false", "walk: stop after the first -1 step"),
    ("generator.rate", "5", "compound Poisson jump intensity"),
    ("generator.law", "uniform", "compound Poisson jump law: uniform | two-point | shifted-exponential"),
    ("generator.low", "-0.5", "uniform law: lower end"),
    ("generator.high", "0.5", "uniform law: upper end"),
    ("generator.a", "-1", "two-point law: first atom"),
    ("generator.b", "0.5", "two-point law: second atom"),
    ("generator.p_a", "0.1", "two-point law: probability of the first atom"),
    ("generator.shift", "-0.5", "shifted exponential law: shift"),
    ("generator.law_rate", "2", "shifted exponential law: rate"),
    ("generator.kill_probability", "0.05", "random-l: probability of a -1 jump per step"),
    ("generator.paths", "1", "number of paths written by generate"),
    ("transform.op", "", "comma-separated chain of exp-formula | exp-recursive | log | reciprocal"),
    ("transform.input", "", "input path CSV; empty reads standard input"),
    ("transform.zero_threshold", "", "zero threshold of log; empty uses the mode default"),
    ("verify.suite", "roundtrip", "comma-separated suites"),
    ("verify.paths", "1000", "ensemble size per suite"),
    ("verify.tolerance", "", "per-path tolerance override"),
    ("verify.ci_multiplier", "3", "confidence interval half-width in standard errors"),
    ("verify.meshes", "64,256,1024", "rate suite: steps per unit time"),
    ("verify.checkpoints", "", "supermartingale suite: observation times"),
    ("verify.ladder", "2,4,8,16,32,64,128,256,512,1024", "announcing suite: values of n"),
    ("verify.zero_threshold", "", "hit detection threshold override"),
    ("verify.maximality_bar", "0.95", "maximality suite: required fraction"),
    ("verify.absorption_band", "0.03", "maximality suite: absorbed fraction tolerance"),
    ("verify.tail_divergence_level", "-20", "tail classification: divergence level"),
    ("verify.tail_qv_level", "1000", "tail classification: infinite QV level"),
    ("verify.tail_settle_fraction", "0.1", "tail classification: fraction of indices in the settle window"),
    ("verify.tail_settle_oscillation", "0.001", "tail classification: largest oscillation in the settle window for a finite limit"),
    ("output.out", "", "output file (directory when generating several paths); empty writes standard output"),
];

pub fn is_known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

/// Parses `key = value` lines under `[section]` headers. `#` and `;` start
/// comment lines.
pub fn parse_ini(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut section = String::new();
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let at = n + 1;
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::Config(format!("line {at}: unterminated section header")))?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| CliError::Config(format!("line {at}: expected key = value")))?;
        if section.is_empty() {
            return Err(CliError::Config(format!("line {at}: key outside of a section")));
        }
        let key = format!("{section}.{}", key.trim());
        if !is_known(&key) {
            return Err(CliError::Config(format!("line {at}: unknown key {key}")));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {at}: duplicate key {key}")));
        }
    }
    Ok(out)
}

/// The resolved settings.
#[derive(Debug, Clone)]
pub struct Scenario {
    values: BTreeMap<String, String>,
}

impl Scenario {
    /// Layers `flags` over `file` over the environment seed over defaults.
    pub fn resolve(
        file: BTreeMap<String, String>,
        flags: BTreeMap<String, String>,
        env_seed: Option<String>,
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, String> =
            KEYS.iter().map(|(k, d, _)| (k.to_string(), d.to_string())).collect();
        if let Some(seed) = env_seed {
            values.insert("generator.seed".into(), seed);
        }
        for (k, v) in file.into_iter().chain(flags) {
            if !is_known(&k) {
                return Err(CliError::Config(format!("unknown key {k}")));
            }
            values.insert(k, v);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_default()
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        let raw = self.raw(key);
        raw.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse {raw:?}")))
    }

    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.parse(key).map(Some)
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>, CliError> {
        let raw = self.raw(key);
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse {s:?}"))))
            .collect()
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.parse("generator.seed")
    }

    pub fn paths(&self) -> Result<usize, CliError> {
        self.parse("generator.paths")
    }

    pub fn out(&self) -> Option<PathBuf> {
        let raw = self.raw("output.out");
        (!raw.is_empty()).then(|| PathBuf::from(raw))
    }

    pub fn input(&self) -> Option<PathBuf> {
        let raw = self.raw("transform.input");
        (!raw.is_empty()).then(|| PathBuf::from(raw))
    }

    pub fn ops(&self) -> Result<Vec<Op>, CliError> {
        let ops: Vec<Op> = self.list::<String>("transform.op")?.iter().map(|s| Op::from_name(s)).collect::<Result<_, _>>()?;
        if ops.is_empty() {
            return Err(CliError::Config("transform.op: at least one operation is required".into()));
        }
        Ok(ops)
    }

    pub fn log_threshold(&self) -> Result<Option<f64>, CliError> {
        self.optional("transform.zero_threshold")
    }

    fn law(&self) -> Result<JumpLaw, CliError> {
        Ok(match self.raw("generator.law") {
            "uniform" => JumpLaw::Uniform { low: self.parse("generator.low")?, high: self.parse("generator.high")? },
            "two-point" => JumpLaw::TwoPoint {
                a: self.parse("generator.a")?,
                b: self.parse("generator.b")?,
                p_a: self.parse("generator.p_a")?,
            },
            "shifted-exponential" => JumpLaw::ShiftedExponential {
                shift: self.parse("generator.shift")?,
                rate: self.parse("generator.law_rate")?,
            },
            other => return Err(CliError::Config(format!("generator.law: unknown law {other:?}"))),
        })
    }

    pub fn spec(&self) -> Result<GeneratorSpec, CliError> {
        let kind = match self.raw("generator.kind") {
            "brownian" => GeneratorKind::Brownian,
            "stopped-bm" => GeneratorKind::StoppedBrownian,
            "one-jump" => GeneratorKind::OneJump,
            "walk" => GeneratorKind::Walk { stopped: self.parse("generator.stopped")? },
            "timechanged-walk" => GeneratorKind::TimeChangedWalk { n_max: self.parse("generator.nmax")? },
            "compound-poisson" => GeneratorKind::CompoundPoisson { rate: self.parse("generator.rate")?, law: self.law()? },
            "random-l" => GeneratorKind::RandomL { kill_probability: self.parse("generator.kill_probability")? },
            other => return Err(CliError::Config(format!("generator.kind: unknown kind {other:?}"))),
        };
        let mut spec = GeneratorSpec::new(kind, self.parse("generator.horizon")?, self.parse("generator.steps")?)
            .with_seed(self.seed()?);
        spec = match self.raw("generator.qv") {
            "exact" => spec.with_qv(QvChannel::Exact),
            "realized" => spec.with_qv(QvChannel::Realized),
            other => return Err(CliError::Config(format!("generator.qv: expected exact or realized, got {other:?}"))),
        };
        spec = match self.raw("generator.mode") {
            "" => spec,
            "purejump" => spec.with_mode(Mode::PureJumpExact),
            "grid" => spec.with_mode(Mode::GridApprox),
            other => return Err(CliError::Config(format!("generator.mode: expected purejump or grid, got {other:?}"))),
        };
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn suites(&self) -> Result<Vec<SuiteConfig>, CliError> {
        let spec = self.spec()?;
        let names: Vec<String> = self.list("verify.suite")?;
        if names.is_empty() {
            return Err(CliError::Config("verify.suite: name at least one suite".into()));
        }
        names
            .iter()
            .map(|name| {
                let kind = SuiteKind::from_name(name)
                    .ok_or_else(|| CliError::Config(format!("verify.suite: unknown suite {name:?}")))?;
                let mut config = SuiteConfig::new(kind, spec, self.parse("verify.paths")?, self.seed()?);
                config.tolerance = self.optional("verify.tolerance")?;
                config.ci_multiplier = self.parse("verify.ci_multiplier")?;
                config.meshes = self.list("verify.meshes")?;
                config.checkpoints = self.list("verify.checkpoints")?;
                config.ladder = self.list("verify.ladder")?;
                config.zero_threshold = self.optional("verify.zero_threshold")?;
                config.maximality_bar = self.parse("verify.maximality_bar")?;
                config.absorption_band = self.parse("verify.absorption_band")?;
                config.tail = TailThresholds {
                    divergence_level: self.parse("verify.tail_divergence_level")?,
                    qv_level: self.parse("verify.tail_qv_level")?,
                    settle_fraction: self.parse("verify.tail_settle_fraction")?,
                    settle_oscillation: self.parse("verify.tail_settle_oscillation")?,
                };
                Ok(config)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    ExpFormula,
    ExpRecursive,
    Log,
    Reciprocal,
}

impl Op {
    pub fn from_name(name: &str) -> Result<Self, CliError> {
        Ok(match name {
            "exp-formula" => Op::ExpFormula,
            "exp-recursive" => Op::ExpRecursive,
            "log" => Op::Log,
            "reciprocal" => Op::Reciprocal,
            other => return Err(CliError::Config(format!("transform.op: unknown operation {other:?}"))),
        })
    }
}
