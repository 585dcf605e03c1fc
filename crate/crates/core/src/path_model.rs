//! Discrete càdlàg paths on stochastic intervals.
//!
//! A [`CadlagPath`] is a sampled semimartingale trajectory on a strictly
//! increasing grid `0 = t_0 < t_1 < … < t_N`. Each step `k` (grid index
//! `1..=N`) carries three channels:
//!
//! * `c_k`, the change of the continuous part over `(t_{k-1}, t_k]`,
//! * `J_k`, the jump at `t_k`,
//! * `q_k ≥ 0`, the increment of the continuous quadratic variation `[X,X]^c`.
//!
//! Values and left limits are stored next to the channels. For paths built
//! from channels they are running sums; transforms that know them in closed
//! form (the exponential evaluators) store them directly, so a long product
//! that decays to `1e-12` keeps full relative precision instead of being the
//! residue of a cancelling sum.
//!
//! The path can live on a stochastic interval `[[0, τ[[` with `τ = t_m`
//! ([`IntervalEnd::AtIndex`]); grid indices `≥ m` are then outside the path
//! and ignored by every consumer.

use serde::{Deserialize, Serialize};

use crate::error::PathError;

/// How "exactly zero" and "jump of exactly −1" are decided on a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// No continuous part; all comparisons are exact.
    PureJumpExact,
    /// Sampled continuous part; comparisons use a zero threshold.
    GridApprox,
}

impl Mode {
    /// Default zero threshold: `0` for exact pure-jump paths, `1e-9` on grids.
    pub fn default_zero_threshold(self) -> f64 {
        match self {
            Mode::PureJumpExact => 0.0,
            Mode::GridApprox => 1e-9,
        }
    }
}

/// Right end of the stochastic interval the path is defined on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalEnd {
    Unbounded,
    /// Defined on `[0, t_m)`; `1 ≤ m ≤ N`.
    AtIndex(usize),
}

/// A sampled càdlàg semimartingale trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct CadlagPath {
    initial_value: f64,
    times: Vec<f64>,
    cont_increments: Vec<f64>,
    jumps: Vec<f64>,
    cont_qv_increments: Vec<f64>,
    // Both of length N + 1, indexed by grid index.
    values: Vec<f64>,
    left_limits: Vec<f64>,
    interval_end: IntervalEnd,
    mode: Mode,
}

/// Relative slack allowed between stored values and channel sums.
const CONSISTENCY_TOL: f64 = 1e-9;

impl CadlagPath {
    /// Builds a path from its channels; values are running sums.
    pub fn new(
        initial_value: f64,
        times: Vec<f64>,
        cont_increments: Vec<f64>,
        jumps: Vec<f64>,
        cont_qv_increments: Vec<f64>,
        interval_end: IntervalEnd,
        mode: Mode,
    ) -> Result<Self, PathError> {
        let n = times.len();
        check_lengths(n, &cont_increments, &jumps, &cont_qv_increments)?;
        let mut values = Vec::with_capacity(n + 1);
        let mut left_limits = Vec::with_capacity(n + 1);
        values.push(initial_value);
        left_limits.push(initial_value);
        let mut current = initial_value;
        for k in 0..n {
            let left = current + cont_increments[k];
            current = left + jumps[k];
            left_limits.push(left);
            values.push(current);
        }
        let path = Self {
            initial_value,
            times,
            cont_increments,
            jumps,
            cont_qv_increments,
            values,
            left_limits,
            interval_end,
            mode,
        };
        path.validate(false)?;
        Ok(path)
    }

    /// Builds a path whose values and left limits are already known.
    ///
    /// The stored sequences must agree with the channels up to a relative
    /// slack of `1e-9` at every in-interval index.
    #[allow(clippy::too_many_arguments)]
    pub fn with_values(
        initial_value: f64,
        times: Vec<f64>,
        cont_increments: Vec<f64>,
        jumps: Vec<f64>,
        cont_qv_increments: Vec<f64>,
        values: Vec<f64>,
        left_limits: Vec<f64>,
        interval_end: IntervalEnd,
        mode: Mode,
    ) -> Result<Self, PathError> {
        let n = times.len();
        check_lengths(n, &cont_increments, &jumps, &cont_qv_increments)?;
        if values.len() != n + 1 || left_limits.len() != n + 1 {
            return Err(PathError::LengthMismatch {
                expected: n + 1,
                found: values.len().min(left_limits.len()),
            });
        }
        let path = Self {
            initial_value,
            times,
            cont_increments,
            jumps,
            cont_qv_increments,
            values,
            left_limits,
            interval_end,
            mode,
        };
        path.validate(true)?;
        Ok(path)
    }

    /// Pure-jump path with the given jump times and sizes.
    pub fn pure_jump(initial_value: f64, times: Vec<f64>, jumps: Vec<f64>) -> Result<Self, PathError> {
        let n = times.len();
        Self::new(
            initial_value,
            times,
            vec![0.0; n],
            jumps,
            vec![0.0; n],
            IntervalEnd::Unbounded,
            Mode::PureJumpExact,
        )
    }

    /// Constant path observed on the given grid.
    pub fn constant(value: f64, times: Vec<f64>, mode: Mode) -> Result<Self, PathError> {
        let n = times.len();
        Self::new(value, times, vec![0.0; n], vec![0.0; n], vec![0.0; n], IntervalEnd::Unbounded, mode)
    }

    /// Assembles a path from parts produced by trusted transforms.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        initial_value: f64,
        times: Vec<f64>,
        cont_increments: Vec<f64>,
        jumps: Vec<f64>,
        cont_qv_increments: Vec<f64>,
        values: Vec<f64>,
        left_limits: Vec<f64>,
        interval_end: IntervalEnd,
        mode: Mode,
    ) -> Self {
        debug_assert_eq!(values.len(), times.len() + 1);
        debug_assert_eq!(left_limits.len(), times.len() + 1);
        Self {
            initial_value,
            times,
            cont_increments,
            jumps,
            cont_qv_increments,
            values,
            left_limits,
            interval_end,
            mode,
        }
    }

    fn validate(&self, check_values: bool) -> Result<(), PathError> {
        if !self.initial_value.is_finite() {
            return Err(PathError::NonFinite { what: "initial value", index: 0 });
        }
        let mut prev = 0.0;
        for (i, &t) in self.times.iter().enumerate() {
            if !t.is_finite() {
                return Err(PathError::NonFinite { what: "time", index: i + 1 });
            }
            if t <= prev {
                return Err(PathError::NonIncreasingTimes { index: i + 1 });
            }
            prev = t;
        }
        for k in 0..self.times.len() {
            let (c, j, q) = (self.cont_increments[k], self.jumps[k], self.cont_qv_increments[k]);
            if !c.is_finite() || !j.is_finite() || !q.is_finite() {
                return Err(PathError::NonFinite { what: "channel", index: k + 1 });
            }
            if q < 0.0 {
                return Err(PathError::NegativeQv { index: k + 1 });
            }
            if self.mode == Mode::PureJumpExact && (c != 0.0 || q != 0.0) {
                return Err(PathError::ContinuousPartInPureJump { index: k + 1 });
            }
        }
        if let IntervalEnd::AtIndex(m) = self.interval_end {
            if m == 0 || m > self.times.len() {
                return Err(PathError::IntervalEndOutOfRange { end: m, steps: self.times.len() });
            }
        }
        if check_values {
            if self.values[0] != self.initial_value || self.left_limits[0] != self.initial_value {
                return Err(PathError::InconsistentValues { index: 0 });
            }
            for k in 1..=self.last_index() {
                let left = self.left_limits[k];
                let value = self.values[k];
                let prev = self.values[k - 1];
                let scale = 1.0_f64.max(prev.abs()).max(left.abs()).max(value.abs());
                let drift = (left - prev - self.cont_increments[k - 1]).abs();
                let jump = (value - left - self.jumps[k - 1]).abs();
                if !(drift <= CONSISTENCY_TOL * scale && jump <= CONSISTENCY_TOL * scale) {
                    return Err(PathError::InconsistentValues { index: k });
                }
            }
        }
        Ok(())
    }

    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.times.len()
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    /// Grid times `t_1..t_N` (time 0 is implicit).
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn cont_increments(&self) -> &[f64] {
        &self.cont_increments
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn cont_qv_increments(&self) -> &[f64] {
        &self.cont_qv_increments
    }

    pub fn interval_end(&self) -> IntervalEnd {
        self.interval_end
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Time of grid index `k`; `t_0 = 0`.
    pub fn time_at(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.times[k - 1]
        }
    }

    /// Continuous increment of step `k ≥ 1`.
    pub fn cont_increment(&self, k: usize) -> f64 {
        self.cont_increments[k - 1]
    }

    /// Jump at grid index `k`; there is no jump at time 0.
    pub fn jump(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.jumps[k - 1]
        }
    }

    /// Continuous QV increment of step `k ≥ 1`.
    pub fn cont_qv_increment(&self, k: usize) -> f64 {
        self.cont_qv_increments[k - 1]
    }

    /// Last grid index inside the stochastic interval.
    pub fn last_index(&self) -> usize {
        match self.interval_end {
            IntervalEnd::Unbounded => self.times.len(),
            IntervalEnd::AtIndex(m) => m - 1,
        }
    }

    pub fn in_interval(&self, k: usize) -> bool {
        k <= self.last_index()
    }

    /// Time of the last in-interval grid point.
    pub fn horizon(&self) -> f64 {
        self.time_at(self.last_index())
    }

    /// `X_{t_k}`.
    pub fn value_at(&self, k: usize) -> Result<f64, PathError> {
        self.check_index(k)?;
        Ok(self.values[k])
    }

    /// `X_{t_k-}`, with `X_{0-} = X_0`.
    pub fn left_limit_at(&self, k: usize) -> Result<f64, PathError> {
        self.check_index(k)?;
        Ok(self.left_limits[k])
    }

    fn check_index(&self, k: usize) -> Result<(), PathError> {
        if k > self.times.len() {
            return Err(PathError::IndexOutOfRange { index: k, steps: self.times.len() });
        }
        if let IntervalEnd::AtIndex(m) = self.interval_end {
            if k >= m {
                return Err(PathError::OutOfInterval { index: k, end: m });
            }
        }
        Ok(())
    }

    /// Values at in-interval grid indices `0..=last_index()`.
    pub fn values(&self) -> &[f64] {
        &self.values[..=self.last_index()]
    }

    /// Left limits at in-interval grid indices `0..=last_index()`.
    pub fn left_limits(&self) -> &[f64] {
        &self.left_limits[..=self.last_index()]
    }

    /// Values on the whole grid, including indices outside the interval.
    pub(crate) fn all_values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn all_left_limits(&self) -> &[f64] {
        &self.left_limits
    }

    /// Running infimum of `|Z|` over values and left limits up to each
    /// in-interval grid index. Nonincreasing.
    pub fn running_infimum_abs(&self) -> Vec<f64> {
        let mut inf = f64::INFINITY;
        self.values()
            .iter()
            .zip(self.left_limits())
            .map(|(v, l)| {
                inf = inf.min(l.abs()).min(v.abs());
                inf
            })
            .collect()
    }

    /// Locates the first time the running infimum of `|Z|` reaches
    /// `zero_threshold` and classifies how zero was reached.
    ///
    /// A hit counts as a jump to zero only when the jump is killing: the
    /// left limit is above the threshold and the value is within the
    /// threshold *relative to the left limit* (exactly zero when the
    /// threshold is 0). A threshold crossing by a non-killing jump, such as a
    /// product of `1 ± 1/2` factors drifting to zero, is the grid trace of a
    /// continuous approach and is reported as [`HitKind::Continuous`].
    pub fn detect_zero_hit(&self, zero_threshold: f64) -> HittingReport {
        let theta = zero_threshold.max(0.0);
        let mut inf = f64::INFINITY;
        for (k, (v, l)) in self.values().iter().zip(self.left_limits()).enumerate() {
            let (v, l) = (v.abs(), l.abs());
            inf = inf.min(l).min(v);
            if inf <= theta {
                let kind = if l <= theta || v > theta * l {
                    HitKind::Continuous
                } else {
                    HitKind::Jump
                };
                return HittingReport { tau0_index: Some(k), kind, zero_threshold: theta };
            }
        }
        HittingReport { tau0_index: None, kind: HitKind::NoHit, zero_threshold: theta }
    }

    /// The `n`-th member of the announcing sequence of `τ_C`,
    /// `σ_n = n ∧ σ'_n(A_n)` with `σ'_n = n ∧ inf{t : Z̲_t ≤ 1/n}` and
    /// `A_n = {Z̲_{σ'_n} > 0}`, evaluated on the grid. "Zero" means the
    /// report's threshold, and times are capped at the path horizon.
    ///
    /// When `A_n` fails because the `1/n` level is first seen at the
    /// continuous hit itself, the crossing lies inside the unobserved final
    /// step. The result is then the larger of the last grid time before
    /// `τ_C` and the largest integer `m < n` below `τ_C`, so it stays below
    /// `τ_C` and above every earlier member of the sequence.
    pub fn announcing_sequence(&self, report: &HittingReport, n: u32) -> f64 {
        let n_time = f64::from(n.max(1));
        let level = 1.0 / n_time;
        let cap = n_time.min(self.horizon());
        let inf = self.running_infimum_abs();
        let theta = report.zero_threshold;

        let crossing = inf.iter().position(|&z| z <= level).filter(|&k| self.time_at(k) <= n_time);
        let (sigma_prime, at) = match crossing {
            Some(k) => (self.time_at(k), k),
            None => (cap, self.index_at_or_before(cap)),
        };
        if inf[at] > theta {
            return sigma_prime;
        }
        match (report.kind, report.tau0_index) {
            (HitKind::Continuous, Some(0)) => 0.0,
            (HitKind::Continuous, Some(k0)) => {
                let below_hit = (self.time_at(k0).ceil() - 1.0).min(n_time - 1.0);
                self.time_at(k0 - 1).max(below_hit)
            }
            _ => cap,
        }
    }

    /// Last in-interval grid index with time `≤ t`.
    pub fn index_at_or_before(&self, t: f64) -> usize {
        let last = self.last_index();
        self.times[..last].partition_point(|&s| s <= t)
    }

    /// `X^{t_k}`: the path with every channel after index `k` zeroed.
    /// Stopping beyond the last grid index is a no-op.
    pub fn stop_at(&self, k: usize) -> CadlagPath {
        let n = self.steps();
        let k = k.min(n);
        let mut stopped = self.clone();
        for i in k..n {
            stopped.cont_increments[i] = 0.0;
            stopped.jumps[i] = 0.0;
            stopped.cont_qv_increments[i] = 0.0;
        }
        let frozen = stopped.values[k];
        for i in k + 1..=n {
            stopped.values[i] = frozen;
            stopped.left_limits[i] = frozen;
        }
        stopped
    }
}

fn check_lengths(n: usize, c: &[f64], j: &[f64], q: &[f64]) -> Result<(), PathError> {
    for len in [c.len(), j.len(), q.len()] {
        if len != n {
            return Err(PathError::LengthMismatch { expected: n, found: len });
        }
    }
    Ok(())
}

/// How the running infimum of `|Z|` reached zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HitKind {
    /// `τ_C` is finite.
    Continuous,
    /// `τ_J` is finite.
    Jump,
    NoHit,
}

/// Location and kind of the first zero hit `τ_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingReport {
    pub tau0_index: Option<usize>,
    pub kind: HitKind,
    pub zero_threshold: f64,
}

impl HittingReport {
    /// `τ_C` as a grid index, if the hit was continuous.
    pub fn continuous_hit(&self) -> Option<usize> {
        match self.kind {
            HitKind::Continuous => self.tau0_index,
            _ => None,
        }
    }

    /// `τ_J` as a grid index, if zero was reached by a jump.
    pub fn jump_hit(&self) -> Option<usize> {
        match self.kind {
            HitKind::Jump => self.tau0_index,
            _ => None,
        }
    }
}
