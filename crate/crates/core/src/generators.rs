//! Seeded example processes and randomized test families.
//!
//! Every generator is a pure function of its [`GeneratorSpec`]; the seed
//! feeds a ChaCha8 stream (see [`crate::seed`]). Ensembles derive one seed
//! per path index, so a path never depends on which worker produced it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::GeneratorError;
use crate::path_model::{CadlagPath, IntervalEnd, Mode};
use crate::seed::{derive_seed, path_rng};

/// Whether Brownian-type kinds record `q_k = Δt` or `q_k = c_k²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QvChannel {
    #[default]
    Exact,
    Realized,
}

/// Jump-size law of the compound Poisson family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "law")]
pub enum JumpLaw {
    /// Uniform on `[low, high)`; must stay away from −1.
    Uniform { low: f64, high: f64 },
    /// `a` with probability `p_a`, otherwise `b`. The only law allowed to
    /// put mass on −1.
    TwoPoint { a: f64, b: f64, p_a: f64 },
    /// `shift + Exp(rate)`, with `shift > −1`.
    ShiftedExponential { shift: f64, rate: f64 },
}

impl JumpLaw {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |msg: String| Err(GeneratorError::JumpLaw(msg));
        match *self {
            JumpLaw::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return bad(format!("uniform needs finite low < high, got [{low}, {high})"));
                }
                if low <= -1.0 && -1.0 <= high {
                    return bad(format!("uniform [{low}, {high}) contains -1; use the two-point law for atoms at -1"));
                }
            }
            JumpLaw::TwoPoint { a, b, p_a } => {
                if !(a.is_finite() && b.is_finite() && (0.0..=1.0).contains(&p_a)) {
                    return bad(format!("two-point needs finite atoms and p in [0, 1], got ({a}, {b}, {p_a})"));
                }
            }
            JumpLaw::ShiftedExponential { shift, rate } => {
                if !(shift.is_finite() && rate.is_finite() && rate > 0.0) {
                    return bad(format!("shifted exponential needs finite shift and rate > 0, got ({shift}, {rate})"));
                }
                if shift <= -1.0 {
                    return bad(format!("shifted exponential with shift {shift} reaches -1"));
                }
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            JumpLaw::Uniform { low, high } => rng.random_range(low..high),
            JumpLaw::TwoPoint { a, b, p_a } => {
                if rng.random::<f64>() < p_a {
                    a
                } else {
                    b
                }
            }
            JumpLaw::ShiftedExponential { shift, rate } => {
                shift + Exp::new(rate).expect("validated rate").sample(rng)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GeneratorKind {
    /// Brownian motion `B` on a uniform grid.
    Brownian,
    /// `1 + B` absorbed at the first grid index where it is `≤ 0`.
    StoppedBrownian,
    /// `X_t = t ∧ E − 1{E ≤ t}` with `E ~ Exp(1)` aligned to the grid.
    OneJump,
    /// `±1` steps at the integer times `1..=⌊horizon⌋`, optionally stopped
    /// after the first −1 step.
    Walk { stopped: bool },
    /// `±½` steps at `t_n = 1 − 1/n`, `n = 2..=n_max`.
    TimeChangedWalk { n_max: usize },
    CompoundPoisson { rate: f64, law: JumpLaw },
    /// One jump per grid step, uniform on `(−1, 1]`, replaced by an exact −1
    /// with probability `kill_probability`; constant after a −1 jump.
    RandomL { kill_probability: f64 },
}

impl GeneratorKind {
    /// Short name used in configs and reports.
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Brownian => "brownian",
            GeneratorKind::StoppedBrownian => "stopped-bm",
            GeneratorKind::OneJump => "one-jump",
            GeneratorKind::Walk { .. } => "walk",
            GeneratorKind::TimeChangedWalk { .. } => "timechanged-walk",
            GeneratorKind::CompoundPoisson { .. } => "compound-poisson",
            GeneratorKind::RandomL { .. } => "random-l",
        }
    }

    /// Kinds whose samples carry no continuous part.
    pub fn is_pure_jump(&self) -> bool {
        !matches!(self, GeneratorKind::Brownian | GeneratorKind::StoppedBrownian | GeneratorKind::OneJump)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub horizon: f64,
    /// Grid steps for grid-based kinds. Ignored by kinds with their own time
    /// set (walks and compound Poisson).
    pub steps: usize,
    pub seed: u64,
    pub qv_channel: QvChannel,
    /// Overrides the kind's natural mode. Only pure-jump kinds may be
    /// switched, and only to [`Mode::GridApprox`].
    pub mode: Option<Mode>,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, horizon: f64, steps: usize) -> Self {
        Self { kind, horizon, steps, seed: 0, qv_channel: QvChannel::Exact, mode: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_qv(mut self, qv: QvChannel) -> Self {
        self.qv_channel = qv;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = Some(mode);
        self
    }

    pub fn effective_mode(&self) -> Mode {
        self.mode.unwrap_or(if self.kind.is_pure_jump() { Mode::PureJumpExact } else { Mode::GridApprox })
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(GeneratorError::Horizon(self.horizon));
        }
        if self.steps == 0 {
            return Err(GeneratorError::Steps);
        }
        if self.mode == Some(Mode::PureJumpExact) && !self.kind.is_pure_jump() {
            return Err(GeneratorError::ModeUnsupported { kind: self.kind.name() });
        }
        match self.kind {
            GeneratorKind::CompoundPoisson { rate, law } => {
                if !(rate.is_finite() && rate > 0.0) {
                    return Err(GeneratorError::Parameter(format!("rate must be positive, got {rate}")));
                }
                law.validate()?;
            }
            GeneratorKind::RandomL { kill_probability } => {
                if !(0.0..=1.0).contains(&kill_probability) {
                    return Err(GeneratorError::Parameter(format!(
                        "kill probability must lie in [0, 1], got {kill_probability}"
                    )));
                }
            }
            GeneratorKind::Walk { .. } if self.horizon < 1.0 => {
                return Err(GeneratorError::Parameter("walk horizon must be at least 1".into()));
            }
            GeneratorKind::TimeChangedWalk { n_max: 0 } => {
                return Err(GeneratorError::Parameter("n_max must be at least 1".into()));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Draws one path.
pub fn generate(spec: &GeneratorSpec) -> Result<CadlagPath, GeneratorError> {
    spec.validate()?;
    let mut rng = path_rng(spec.seed);
    let mode = spec.effective_mode();
    let path = match spec.kind {
        GeneratorKind::Brownian => brownian(spec, &mut rng),
        GeneratorKind::StoppedBrownian => stopped_brownian(spec, &mut rng),
        GeneratorKind::OneJump => one_jump(spec, &mut rng),
        GeneratorKind::Walk { stopped } => {
            let n = spec.horizon.floor() as usize;
            walk_path(&signs(n, 1.0, &mut rng), stopped)
        }
        GeneratorKind::TimeChangedWalk { n_max } => {
            time_changed_walk_path(&signs(n_max.saturating_sub(1), 0.5, &mut rng))
        }
        GeneratorKind::CompoundPoisson { rate, law } => compound_poisson(spec.horizon, rate, &law, &mut rng),
        GeneratorKind::RandomL { kill_probability } => random_l(spec, kill_probability, &mut rng),
    };
    Ok(if mode == path.mode() { path } else { regrade(path, mode) })
}

/// Path `index` of the ensemble with master seed `master`.
pub fn generate_member(spec: &GeneratorSpec, master: u64, index: u64) -> Result<CadlagPath, GeneratorError> {
    generate(&spec.with_seed(derive_seed(master, index)))
}

fn regrade(path: CadlagPath, mode: Mode) -> CadlagPath {
    CadlagPath::new(
        path.initial_value(),
        path.times().to_vec(),
        path.cont_increments().to_vec(),
        path.jumps().to_vec(),
        path.cont_qv_increments().to_vec(),
        path.interval_end(),
        mode,
    )
    .expect("channels of a valid path")
}

fn uniform_times(horizon: f64, steps: usize) -> Vec<f64> {
    (1..=steps).map(|k| horizon * k as f64 / steps as f64).collect()
}

fn signs(n: usize, size: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| if rng.random::<bool>() { size } else { -size }).collect()
}

fn brownian(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> CadlagPath {
    let times = uniform_times(spec.horizon, spec.steps);
    let dts = increments(&times);
    let c: Vec<f64> = dts
        .iter()
        .map(|dt| {
            let z: f64 = StandardNormal.sample(rng);
            z * dt.sqrt()
        })
        .collect();
    let q = match spec.qv_channel {
        QvChannel::Exact => dts,
        QvChannel::Realized => c.iter().map(|x| x * x).collect(),
    };
    let n = times.len();
    CadlagPath::new(0.0, times, c, vec![0.0; n], q, IntervalEnd::Unbounded, Mode::GridApprox)
        .expect("brownian channels are finite")
}

fn increments(times: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    times
        .iter()
        .map(|&t| {
            let dt = t - prev;
            prev = t;
            dt
        })
        .collect()
}

fn stopped_brownian(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> CadlagPath {
    let times = uniform_times(spec.horizon, spec.steps);
    let dts = increments(&times);
    let n = times.len();
    let mut c = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut value = 1.0;
    for (k, dt) in dts.iter().enumerate() {
        let z: f64 = StandardNormal.sample(rng);
        let mut dx = z * dt.sqrt();
        let absorbed = value + dx <= 0.0;
        if absorbed {
            dx = -value;
        }
        c[k] = dx;
        q[k] = match spec.qv_channel {
            QvChannel::Exact => *dt,
            QvChannel::Realized => dx * dx,
        };
        value += dx;
        if absorbed {
            break;
        }
    }
    // value + (-value) is an exact zero, so the running sums end on 0.
    CadlagPath::new(1.0, times, c, vec![0.0; n], q, IntervalEnd::Unbounded, Mode::GridApprox)
        .expect("stopped brownian channels are finite")
}

fn one_jump(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> CadlagPath {
    let times = uniform_times(spec.horizon, spec.steps);
    let dts = increments(&times);
    let e: f64 = Exp::new(1.0).expect("unit rate").sample(rng);
    let n = times.len();
    let jump_at = times.iter().position(|&t| t >= e);
    let mut c = vec![0.0; n];
    let mut j = vec![0.0; n];
    let last = jump_at.unwrap_or(n - 1);
    c[..=last].copy_from_slice(&dts[..=last]);
    if let Some(k) = jump_at {
        j[k] = -1.0;
    }
    CadlagPath::new(0.0, times, c, j, vec![0.0; n], IntervalEnd::Unbounded, Mode::GridApprox)
        .expect("one-jump channels are finite")
}

/// The walk with steps `thetas` at times `1, 2, …`, stopped after the
/// first −1 step when `stopped` is set.
pub fn walk_path(thetas: &[f64], stopped: bool) -> CadlagPath {
    let mut jumps = thetas.to_vec();
    if stopped {
        if let Some(k) = jumps.iter().position(|&t| t == -1.0) {
            jumps[k + 1..].iter_mut().for_each(|j| *j = 0.0);
        }
    }
    let times = (1..=jumps.len()).map(|k| k as f64).collect();
    CadlagPath::pure_jump(0.0, times, jumps).expect("walk jumps are finite")
}

/// Jumps `thetas[i]` at `t = 1 − 1/(i + 2)`.
pub fn time_changed_walk_path(thetas: &[f64]) -> CadlagPath {
    let times = (2..thetas.len() + 2).map(|n| 1.0 - 1.0 / n as f64).collect();
    CadlagPath::pure_jump(0.0, times, thetas.to_vec()).expect("time-changed walk jumps are finite")
}

fn compound_poisson(horizon: f64, rate: f64, law: &JumpLaw, rng: &mut ChaCha8Rng) -> CadlagPath {
    let count = Poisson::new(rate * horizon).expect("positive intensity").sample(rng) as usize;
    // (0, horizon], so no jump lands on t = 0.
    let mut times: Vec<f64> = (0..count).map(|_| horizon * (1.0 - rng.random::<f64>())).collect();
    times.sort_by(f64::total_cmp);
    for k in 1..times.len() {
        if times[k] <= times[k - 1] {
            times[k] = f64::from_bits(times[k - 1].to_bits() + 1);
        }
    }
    let jumps = (0..count).map(|_| law.sample(rng)).collect();
    CadlagPath::pure_jump(0.0, times, jumps).expect("compound Poisson jumps are finite")
}

fn random_l(spec: &GeneratorSpec, kill_probability: f64, rng: &mut ChaCha8Rng) -> CadlagPath {
    let times = uniform_times(spec.horizon, spec.steps);
    let mut jumps = vec![0.0; times.len()];
    for j in jumps.iter_mut() {
        if rng.random::<f64>() < kill_probability {
            *j = -1.0;
            break;
        }
        *j = 1.0 - 2.0 * rng.random::<f64>();
    }
    CadlagPath::pure_jump(0.0, times, jumps).expect("random L jumps are finite")
}
