//! Stochastic exponential and logarithm, the reciprocal companion, class
//! membership, and tail classification.
//!
//! Two exponential evaluators are provided. [`stoch_exp_formula`] evaluates
//! the closed form `exp(X − ½[X,X]^c)·∏(1+ΔX)e^{−ΔX}` in log-magnitude and
//! sign, with an exact absorbing zero. [`stoch_exp_recursive`] runs the
//! left-point recursion of `Z = e^{X_0} + Z_-·X`, which [`stoch_log`]
//! inverts step for step. On pure-jump paths the two agree to rounding; on
//! grids their gap is the discretization error of the recursion.
//!
//! Exponentials are defined on the whole grid: they are zero from the
//! input's interval end on. The drop to zero at the interval end is recorded
//! in the continuous channel, since the end of a stochastic interval is
//! approached from below rather than jumped to.

use serde::{Deserialize, Serialize};

use crate::calculus::{self, jump_integral_upto, quadratic_variation, JumpFunctional};
use crate::error::ExpLogError;
use crate::path_model::{CadlagPath, HittingReport, IntervalEnd, Mode};

/// The involution `φ(x) = −1 + 1/(1+x)` mapping jumps of `X` to jumps of the
/// reciprocal companion.
pub fn phi(x: f64) -> Result<f64, ExpLogError> {
    if x == -1.0 {
        Err(ExpLogError::PhiDomain)
    } else {
        Ok(phi_unchecked(x))
    }
}

// −x/(1+x) is the same function with one rounding fewer near 0.
#[inline]
fn phi_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x / (1.0 + x)
    }
}

/// Whether `jump` counts as a jump of exactly −1 under `theta`.
#[inline]
pub fn is_killing_jump(jump: f64, theta: f64) -> bool {
    if theta == 0.0 {
        jump == -1.0
    } else {
        (1.0 + jump).abs() <= theta
    }
}

fn kill_threshold(path: &CadlagPath) -> f64 {
    path.mode().default_zero_threshold()
}

/// Stochastic exponential from the closed-form definition.
pub fn stoch_exp_formula(x: &CadlagPath) -> CadlagPath {
    let theta = kill_threshold(x);
    let n = x.steps();
    let last = x.last_index();
    let z0 = x.initial_value().exp();

    let mut values = Vec::with_capacity(n + 1);
    let mut lefts = Vec::with_capacity(n + 1);
    let mut c = vec![0.0; n];
    let mut jumps = vec![0.0; n];
    let mut q = vec![0.0; n];
    values.push(z0);
    lefts.push(z0);

    let mut log_mag = x.initial_value();
    let mut negative = false;
    let mut dead = false;
    let signed = |log_mag: f64, negative: bool| {
        let m = log_mag.exp();
        if negative {
            -m
        } else {
            m
        }
    };

    for k in 1..=last {
        let prev = values[k - 1];
        if dead {
            values.push(0.0);
            lefts.push(0.0);
            continue;
        }
        log_mag += x.cont_increment(k) - 0.5 * x.cont_qv_increment(k);
        let left = signed(log_mag, negative);
        let j = x.jump(k);
        let value = if is_killing_jump(j, theta) {
            dead = true;
            0.0
        } else {
            let factor = 1.0 + j;
            log_mag += factor.abs().ln();
            if factor < 0.0 {
                negative = !negative;
            }
            signed(log_mag, negative)
        };
        c[k - 1] = left - prev;
        jumps[k - 1] = value - left;
        q[k - 1] = prev * prev * x.cont_qv_increment(k);
        values.push(value);
        lefts.push(left);
    }
    finish_exponential(x, values, lefts, c, jumps, q)
}

/// Stochastic exponential from the left-point recursion
/// `Z_k = Z_{k-1}·(1 + c_k)·(1 + J_k)`.
pub fn stoch_exp_recursive(x: &CadlagPath) -> CadlagPath {
    let theta = kill_threshold(x);
    let n = x.steps();
    let last = x.last_index();
    let z0 = x.initial_value().exp();

    let mut values = Vec::with_capacity(n + 1);
    let mut lefts = Vec::with_capacity(n + 1);
    let mut c = vec![0.0; n];
    let mut jumps = vec![0.0; n];
    let mut q = vec![0.0; n];
    values.push(z0);
    lefts.push(z0);

    for k in 1..=last {
        let prev = values[k - 1];
        if prev == 0.0 {
            values.push(0.0);
            lefts.push(0.0);
            continue;
        }
        let ck = x.cont_increment(k);
        let left = prev * (1.0 + ck);
        let j = x.jump(k);
        let (dz, value) = if is_killing_jump(j, theta) {
            (-left, 0.0)
        } else {
            (left * j, left * (1.0 + j))
        };
        c[k - 1] = prev * ck;
        jumps[k - 1] = dz;
        q[k - 1] = prev * prev * x.cont_qv_increment(k);
        values.push(value);
        lefts.push(left);
    }
    finish_exponential(x, values, lefts, c, jumps, q)
}

/// Appends the zero tail after the interval end and wraps up the path.
fn finish_exponential(
    x: &CadlagPath,
    mut values: Vec<f64>,
    mut lefts: Vec<f64>,
    mut c: Vec<f64>,
    jumps: Vec<f64>,
    q: Vec<f64>,
) -> CadlagPath {
    let n = x.steps();
    let mut mode = x.mode();
    if let IntervalEnd::AtIndex(m) = x.interval_end() {
        let prev = values[m - 1];
        if prev != 0.0 {
            c[m - 1] = -prev;
            mode = Mode::GridApprox;
        }
    }
    values.resize(n + 1, 0.0);
    lefts.resize(n + 1, 0.0);
    CadlagPath::from_parts(
        values[0],
        x.times().to_vec(),
        c,
        jumps,
        q,
        values,
        lefts,
        IntervalEnd::Unbounded,
        mode,
    )
}

/// Stochastic logarithm `(1/Z_-)·1{Z_- ≠ 0}·Z` on `[[0, τ_C ∧ horizon[[`.
///
/// `report` must come from [`CadlagPath::detect_zero_hit`] on `z`. A
/// continuous hit shortens the interval to end at the hit; a jump to zero
/// becomes a jump of exactly −1 followed by a constant path.
pub fn stoch_log(z: &CadlagPath, report: &HittingReport) -> Result<CadlagPath, ExpLogError> {
    let n = z.steps();
    let mut end = z.interval_end();
    if let Some(k0) = report.continuous_hit() {
        if k0 == 0 {
            return Err(ExpLogError::EmptyInterval);
        }
        end = match end {
            IntervalEnd::AtIndex(m) if m <= k0 => end,
            _ => IntervalEnd::AtIndex(k0),
        };
    }
    let last = match end {
        IntervalEnd::Unbounded => n,
        IntervalEnd::AtIndex(m) => m - 1,
    };
    let jump_hit = report.jump_hit().filter(|&k| k <= last);

    let values = z.all_values();
    let lefts = z.all_left_limits();
    let mut c = vec![0.0; n];
    let mut jumps = vec![0.0; n];
    let mut q = vec![0.0; n];
    let stop = jump_hit.unwrap_or(last);
    for k in 1..=stop {
        let prev = values[k - 1];
        if prev != 0.0 {
            c[k - 1] = z.cont_increment(k) / prev;
            q[k - 1] = z.cont_qv_increment(k) / (prev * prev);
        }
        let left = lefts[k];
        let j = z.jump(k);
        if Some(k) == jump_hit {
            jumps[k - 1] = -1.0;
        } else if left != 0.0 && j != 0.0 {
            jumps[k - 1] = j / left;
        }
    }
    Ok(calculus::assemble(0.0, z, c, jumps, q, end))
}

/// The reciprocal companion `Y = −X + [X,X]^c + (x²/(1+x))1{x≠−1}*μ^X`,
/// restricted to `[[0, τ ∧ τ_J[[` with `τ_J` the first jump of −1.
///
/// Channels: `c^Y = −c + q`, `q^Y = q`, `J^Y = φ(J)`, `Y_0 = −X_0`.
pub fn reciprocal_companion(x: &CadlagPath) -> CadlagPath {
    let theta = kill_threshold(x);
    let n = x.steps();
    let mut last = x.last_index();
    let mut end = x.interval_end();
    if let Some(k) = (1..=last).find(|&k| is_killing_jump(x.jump(k), theta)) {
        end = IntervalEnd::AtIndex(k);
        last = k - 1;
    }
    let mut c = vec![0.0; n];
    let mut jumps = vec![0.0; n];
    let mut q = vec![0.0; n];
    for k in 1..=last {
        let qk = x.cont_qv_increment(k);
        c[k - 1] = -x.cont_increment(k) + qk;
        q[k - 1] = qk;
        jumps[k - 1] = phi_unchecked(x.jump(k));
    }
    calculus::assemble(-x.initial_value(), x, c, jumps, q, end)
}

/// Both sides of `G*μ^Y = (G∘φ)*μ^X` on the common interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Pushforward {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl Pushforward {
    pub fn max_abs_gap(&self) -> f64 {
        self.lhs
            .iter()
            .zip(&self.rhs)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }
}

/// Jump transport by `φ`: `lhs = G*μ^Y`, `rhs = (G∘φ)*μ^X`.
pub fn jump_measure_pushforward<G: JumpFunctional + ?Sized>(
    g: &G,
    x: &CadlagPath,
    y: &CadlagPath,
) -> Result<Pushforward, ExpLogError> {
    if x.times() != y.times() {
        return Err(ExpLogError::GridMismatch);
    }
    let last = x.last_index().min(y.last_index());
    let transported = |t: f64, j: f64| g.eval(t, phi_unchecked(j));
    Ok(Pushforward {
        lhs: jump_integral_upto(g, y, last),
        rhs: jump_integral_upto(&transported, x, last),
    })
}

/// Finite-horizon verdict about `lim_{t↑τ} X_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailVerdict {
    ConvergesFinite,
    DivergesToMinusInf,
    InfiniteQV,
    AbsorbedByJump,
    Indeterminate,
}

/// Knobs turning the asymptotic sets into finite-path tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailThresholds {
    /// Terminal value below which (and trending down) the path diverges.
    pub divergence_level: f64,
    /// Total QV above which the QV is declared infinite.
    pub qv_level: f64,
    /// Fraction of the in-interval indices forming the settle window.
    pub settle_fraction: f64,
    /// Maximal oscillation over the settle window for a finite limit.
    pub settle_oscillation: f64,
}

impl Default for TailThresholds {
    fn default() -> Self {
        Self { divergence_level: -20.0, qv_level: 1e3, settle_fraction: 0.1, settle_oscillation: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailClassification {
    pub verdict: TailVerdict,
    pub final_value: f64,
    pub final_qv: f64,
    /// `max − min` of the values over the settle window.
    pub oscillation: f64,
}

pub fn classify_tail(x: &CadlagPath, thresholds: &TailThresholds) -> TailClassification {
    let values = x.values();
    let last = values.len() - 1;
    let final_value = values[last];
    let final_qv = quadratic_variation(x).final_total();
    let window = ((thresholds.settle_fraction * (last + 1) as f64).ceil() as usize).clamp(1, last + 1);
    let start = last + 1 - window;
    let (lo, hi) = values[start..]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let oscillation = hi - lo;

    let theta = kill_threshold(x);
    let verdict = if (1..=last).any(|k| is_killing_jump(x.jump(k), theta)) {
        TailVerdict::AbsorbedByJump
    } else if final_value < thresholds.divergence_level && final_value <= values[start] {
        TailVerdict::DivergesToMinusInf
    } else if final_qv > thresholds.qv_level {
        TailVerdict::InfiniteQV
    } else if oscillation < thresholds.settle_oscillation {
        TailVerdict::ConvergesFinite
    } else {
        TailVerdict::Indeterminate
    };
    TailClassification { verdict, final_value, final_qv, oscillation }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MembershipClass {
    /// Logarithm side: `X_0 = 0`, jumps `≥ −1`, constant after a −1 jump.
    L,
    /// Exponential side: `Z_0 = 1`, `Z ≥ 0`, zero after reaching zero.
    Z,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "reason")]
pub enum MembershipViolation {
    InitialValueNotZero { value: f64 },
    InitialValueNotOne { value: f64 },
    JumpBelowMinusOne { index: usize, jump: f64 },
    MovesAfterAbsorption { index: usize },
    Negative { index: usize, value: f64 },
    LeavesZero { index: usize },
}

/// Structural membership verdict; supermartingale and maximality
/// properties are ensemble-level and not decided here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMembership {
    pub class: MembershipClass,
    pub member: bool,
    pub reasons: Vec<MembershipViolation>,
}

pub fn check_membership(p: &CadlagPath, class: MembershipClass) -> ClassMembership {
    let theta = kill_threshold(p);
    let last = p.last_index();
    let mut reasons = Vec::new();
    match class {
        MembershipClass::L => {
            if p.initial_value() != 0.0 {
                reasons.push(MembershipViolation::InitialValueNotZero { value: p.initial_value() });
            }
            let mut absorbed = false;
            for k in 1..=last {
                let j = p.jump(k);
                if absorbed {
                    if j != 0.0 || p.cont_increment(k) != 0.0 || p.cont_qv_increment(k) != 0.0 {
                        reasons.push(MembershipViolation::MovesAfterAbsorption { index: k });
                        break;
                    }
                } else if is_killing_jump(j, theta) {
                    absorbed = true;
                } else if j < -1.0 {
                    reasons.push(MembershipViolation::JumpBelowMinusOne { index: k, jump: j });
                }
            }
        }
        MembershipClass::Z => {
            if p.initial_value() != 1.0 {
                reasons.push(MembershipViolation::InitialValueNotOne { value: p.initial_value() });
            }
            let mut at_zero = false;
            for (k, (&v, &l)) in p.values().iter().zip(p.left_limits()).enumerate() {
                if v < 0.0 || l < 0.0 {
                    reasons.push(MembershipViolation::Negative { index: k, value: v.min(l) });
                    break;
                }
                if at_zero && (v != 0.0 || l != 0.0) {
                    reasons.push(MembershipViolation::LeavesZero { index: k });
                    break;
                }
                at_zero = v == 0.0;
            }
        }
    }
    ClassMembership { class, member: reasons.is_empty(), reasons }
}

/// Sign of a path's values as `±1` (0 for exact zeros).
pub fn signs(path: &CadlagPath) -> Vec<i8> {
    path.values()
        .iter()
        .map(|&v| if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 })
        .collect()
}
