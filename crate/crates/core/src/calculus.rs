//! Quadratic variation, jump-measure integrals `F*μ^X` and left-point
//! stochastic integrals `H·X` on discrete paths.

use crate::error::CalculusError;
use crate::path_model::{CadlagPath, IntervalEnd};

/// A function `F(t, x)` of jump time and jump size, integrated against the
/// jump measure. Only evaluated at nonzero jumps. `+∞` is absorbing.
pub trait JumpFunctional {
    fn eval(&self, time: f64, jump: f64) -> f64;
}

impl<F> JumpFunctional for F
where
    F: Fn(f64, f64) -> f64,
{
    fn eval(&self, time: f64, jump: f64) -> f64 {
        self(time, jump)
    }
}

/// A predictable integrand sampled on the grid of the integrator.
///
/// Step `k` (1-based) integrates the continuous channels against
/// `H(t_{k-1})` and the jump against `H(t_k-)`; neither sees the jump at
/// `t_k` itself.
pub trait Integrand {
    /// `H(t_{k-1})`, used for `c_k` and `q_k`.
    fn left_point(&self, k: usize) -> f64;
    /// `H(t_k-)`, used for `J_k`.
    fn left_limit(&self, k: usize) -> f64;
}

impl Integrand for f64 {
    fn left_point(&self, _k: usize) -> f64 {
        *self
    }

    fn left_limit(&self, _k: usize) -> f64 {
        *self
    }
}

/// Integrand stored as two per-step sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledIntegrand {
    left_points: Vec<f64>,
    left_limits: Vec<f64>,
}

impl SampledIntegrand {
    /// `left_points[k-1] = H(t_{k-1})`, `left_limits[k-1] = H(t_k-)`.
    pub fn new(left_points: Vec<f64>, left_limits: Vec<f64>) -> Result<Self, CalculusError> {
        if left_points.len() != left_limits.len() {
            return Err(CalculusError::IntegrandLength { expected: left_points.len(), found: left_limits.len() });
        }
        Ok(Self { left_points, left_limits })
    }

    /// `H = f(Z)` for a process `Z` on the same grid.
    pub fn of_path(path: &CadlagPath, f: impl Fn(f64) -> f64) -> Self {
        let values = path.all_values();
        let lefts = path.all_left_limits();
        let n = path.steps();
        Self {
            left_points: (1..=n).map(|k| f(values[k - 1])).collect(),
            left_limits: (1..=n).map(|k| f(lefts[k])).collect(),
        }
    }

    /// `a·self + b·other`, step by step.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(x, y)| a * x + b * y).collect();
        Self {
            left_points: mix(&self.left_points, &other.left_points),
            left_limits: mix(&self.left_limits, &other.left_limits),
        }
    }

    pub fn steps(&self) -> usize {
        self.left_points.len()
    }
}

impl Integrand for SampledIntegrand {
    fn left_point(&self, k: usize) -> f64 {
        self.left_points[k - 1]
    }

    fn left_limit(&self, k: usize) -> f64 {
        self.left_limits[k - 1]
    }
}

/// Running `[X,X]` and `[X,X]^c` at in-interval grid indices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticVariation {
    pub total: Vec<f64>,
    pub continuous: Vec<f64>,
}

impl QuadraticVariation {
    pub fn final_total(&self) -> f64 {
        *self.total.last().expect("index 0 is always present")
    }

    pub fn final_continuous(&self) -> f64 {
        *self.continuous.last().expect("index 0 is always present")
    }
}

pub fn quadratic_variation(path: &CadlagPath) -> QuadraticVariation {
    let last = path.last_index();
    let mut total = Vec::with_capacity(last + 1);
    let mut continuous = Vec::with_capacity(last + 1);
    let (mut qc, mut qd) = (0.0, 0.0);
    total.push(0.0);
    continuous.push(0.0);
    for k in 1..=last {
        let j = path.jump(k);
        qc += path.cont_qv_increment(k);
        qd += j * j;
        continuous.push(qc);
        total.push(qc + qd);
    }
    QuadraticVariation { total, continuous }
}

/// `F*μ^X` at every in-interval grid index.
pub fn jump_integral<F: JumpFunctional + ?Sized>(f: &F, path: &CadlagPath) -> Vec<f64> {
    jump_integral_upto(f, path, path.last_index())
}

pub(crate) fn jump_integral_upto<F: JumpFunctional + ?Sized>(f: &F, path: &CadlagPath, last: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(last + 1);
    let mut acc = 0.0;
    out.push(acc);
    for k in 1..=last {
        let j = path.jump(k);
        if acc != f64::INFINITY && j != 0.0 {
            let term = f.eval(path.time_at(k), j);
            acc = if term == f64::INFINITY { f64::INFINITY } else { acc + term };
        }
        out.push(acc);
    }
    out
}

/// Left-point stochastic integral `H·X`, started at 0.
///
/// Output channels are `H(t_{k-1})·c_k`, `H(t_k-)·J_k` and
/// `H(t_{k-1})²·q_k`; the interval end is inherited. A step whose channels
/// are all zero never evaluates the integrand, so `H` may be infinite there.
pub fn stochastic_integral<H: Integrand + ?Sized>(h: &H, path: &CadlagPath) -> Result<CadlagPath, CalculusError> {
    let n = path.steps();
    let last = path.last_index();
    let mut c = vec![0.0; n];
    let mut jumps = vec![0.0; n];
    let mut q = vec![0.0; n];
    for k in 1..=last {
        let (ck, jk, qk) = (path.cont_increment(k), path.jump(k), path.cont_qv_increment(k));
        if ck != 0.0 || qk != 0.0 {
            let hl = h.left_point(k);
            if !hl.is_finite() {
                return Err(CalculusError::NotIntegrable { index: k });
            }
            c[k - 1] = hl * ck;
            q[k - 1] = hl * hl * qk;
        }
        if jk != 0.0 {
            let hj = h.left_limit(k);
            if !hj.is_finite() {
                return Err(CalculusError::NotIntegrable { index: k });
            }
            jumps[k - 1] = hj * jk;
        }
    }
    Ok(assemble(0.0, path, c, jumps, q, path.interval_end()))
}

/// Builds a path on `like`'s grid with values accumulated from channels.
pub(crate) fn assemble(
    initial_value: f64,
    like: &CadlagPath,
    c: Vec<f64>,
    jumps: Vec<f64>,
    q: Vec<f64>,
    interval_end: IntervalEnd,
) -> CadlagPath {
    let n = like.steps();
    let mut values = Vec::with_capacity(n + 1);
    let mut lefts = Vec::with_capacity(n + 1);
    values.push(initial_value);
    lefts.push(initial_value);
    let mut x = initial_value;
    for k in 0..n {
        let l = x + c[k];
        x = l + jumps[k];
        lefts.push(l);
        values.push(x);
    }
    CadlagPath::from_parts(
        initial_value,
        like.times().to_vec(),
        c,
        jumps,
        q,
        values,
        lefts,
        interval_end,
        like.mode(),
    )
}

/// Running count of in-interval jumps strictly below −1.
pub fn sign_change_count(path: &CadlagPath) -> Vec<usize> {
    let mut count = 0;
    (0..=path.last_index())
        .map(|k| {
            if path.jump(k) < -1.0 {
                count += 1;
            }
            count
        })
        .collect()
}
