//! Shared numerical plumbing: seeded sampling, central differences, and the
//! fixed-step integrators used by both the full and the reduced dynamics.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::heisenberg::{AlgebraElement, CoAlgebraElement, GroupElement};

/// Step used for finite-difference gradients of scalar functions.
pub const GRADIENT_STEP: f64 = 1e-6;

/// Step used for finite-difference tangent maps and exterior derivatives.
pub const TANGENT_STEP: f64 = 1e-5;

/// Seeded generator used by every randomized sweep (ChaCha8, stream 0).
pub type SweepRng = ChaCha8Rng;

pub fn sweep_rng(seed: u64) -> SweepRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut SweepRng, half_width: f64) -> f64 {
    rng.gen_range(-half_width..=half_width)
}

pub fn random_vector3(rng: &mut SweepRng, half_width: f64) -> Vector3<f64> {
    Vector3::new(
        uniform(rng, half_width),
        uniform(rng, half_width),
        uniform(rng, half_width),
    )
}

pub fn random_dvector(rng: &mut SweepRng, n: usize, half_width: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| uniform(rng, half_width))
}

pub fn random_group(rng: &mut SweepRng, half_width: f64) -> GroupElement {
    GroupElement::from_vector(&random_vector3(rng, half_width))
}

pub fn random_algebra(rng: &mut SweepRng, half_width: f64) -> AlgebraElement {
    AlgebraElement::from_vector(&random_vector3(rng, half_width))
}

pub fn random_coalgebra(rng: &mut SweepRng, half_width: f64) -> CoAlgebraElement {
    CoAlgebraElement::from_vector(&random_vector3(rng, half_width))
}

/// Central-difference gradient of a scalar function on `Rⁿ`.
pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, step: f64) -> DVector<f64> {
    let mut grad = DVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + step;
        let fp = f(&probe);
        probe[i] = xi - step;
        let fm = f(&probe);
        probe[i] = xi;
        grad[i] = (fp - fm) / (2.0 * step);
    }
    grad
}

/// Central-difference directional derivative of a vector map along `v`.
pub fn fd_directional(
    f: impl Fn(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    v: &DVector<f64>,
    step: f64,
) -> DVector<f64> {
    let plus = f(&(x + v * step));
    let minus = f(&(x - v * step));
    (plus - minus) / (2.0 * step)
}

/// Central-difference Jacobian of a vector map, column by column.
pub fn fd_jacobian(f: impl Fn(&DVector<f64>) -> DVector<f64>, x: &DVector<f64>, step: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        cols.push(fd_directional(&f, x, &e, step));
    }
    DMatrix::from_columns(&cols)
}

/// Exterior derivative of a one-form, extending `v`, `w` as constant vector
/// fields in the chart: `dα(v, w) = v[α(w)] - w[α(v)]`.
pub fn fd_exterior_derivative_1form(
    alpha: impl Fn(&DVector<f64>, &DVector<f64>) -> f64,
    x: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
    step: f64,
) -> f64 {
    let v_of_alpha_w = (alpha(&(x + v * step), w) - alpha(&(x - v * step), w)) / (2.0 * step);
    let w_of_alpha_v = (alpha(&(x + w * step), v) - alpha(&(x - w * step), v)) / (2.0 * step);
    v_of_alpha_w - w_of_alpha_v
}

/// Exterior derivative of a two-form on constant vector fields:
/// `dβ(u, v, w) = u[β(v, w)] - v[β(u, w)] + w[β(u, v)]`.
pub fn fd_exterior_derivative_2form(
    beta: impl Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> f64,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
    step: f64,
) -> f64 {
    let d = |dir: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>| {
        (beta(&(x + dir * step), a, b) - beta(&(x - dir * step), a, b)) / (2.0 * step)
    };
    d(u, v, w) - d(v, u, w) + d(w, u, v)
}

/// Fixed-step time discretizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Implicit midpoint rule solved by fixed-point iteration.
    Midpoint,
    /// Classical explicit Runge–Kutta of order four.
    Rk4,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "midpoint" => Ok(Method::Midpoint),
            "rk4" => Ok(Method::Rk4),
            other => Err(format!("unknown method `{other}` (expected midpoint or rk4)")),
        }
    }
}

pub const MIDPOINT_TOL: f64 = 1e-12;
pub const MIDPOINT_MAX_ITER: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error(
        "midpoint fixed-point iteration did not converge after {iterations} iterations (last update {last_update:e})"
    )]
    NonConvergence { iterations: usize, last_update: f64 },
    #[error("vector field evaluation failed: {0}")]
    Field(String),
    #[error("state became non-finite")]
    NonFinite,
}

/// One implicit midpoint step: `x₁ = x₀ + h f((x₀ + x₁)/2)`.
pub fn midpoint_step<F>(f: &F, x0: &DVector<f64>, h: f64) -> Result<DVector<f64>, StepError>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>, StepError>,
{
    let mut x1 = x0 + f(x0)? * h;
    let mut last_update = f64::INFINITY;
    for iteration in 1..=MIDPOINT_MAX_ITER {
        let mid = (x0 + &x1) * 0.5;
        let next = x0 + f(&mid)? * h;
        if !next.iter().all(|v| v.is_finite()) {
            // A diverging iteration, not a genuinely non-finite state.
            return Err(StepError::NonConvergence {
                iterations: iteration,
                last_update: f64::INFINITY,
            });
        }
        last_update = (&next - &x1).amax();
        let scale = next.amax().max(1.0);
        x1 = next;
        if last_update <= MIDPOINT_TOL * scale {
            return Ok(x1);
        }
    }
    Err(StepError::NonConvergence {
        iterations: MIDPOINT_MAX_ITER,
        last_update,
    })
}

pub fn rk4_step<F>(f: &F, x0: &DVector<f64>, h: f64) -> Result<DVector<f64>, StepError>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>, StepError>,
{
    let k1 = f(x0)?;
    let k2 = f(&(x0 + &k1 * (0.5 * h)))?;
    let k3 = f(&(x0 + &k2 * (0.5 * h)))?;
    let k4 = f(&(x0 + &k3 * h))?;
    Ok(x0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

/// Step sizes covering `[0, t_end]` with steps of `h`, the last one shortened
/// when `t_end` is not a multiple of `h`.
pub fn step_schedule(t_end: f64, h: f64) -> Vec<f64> {
    let ratio = t_end / h;
    let n_full = (ratio + 1e-9).floor() as usize;
    let mut steps = vec![h; n_full];
    let covered = n_full as f64 * h;
    let rest = t_end - covered;
    if rest > 1e-9 * h {
        steps.push(rest);
    }
    steps
}

/// Failure of a flow integration, carrying the index of the failing step.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("step {step}: {source}")]
pub struct FlowError {
    pub step: usize,
    pub source: StepError,
}

/// Integrates `ẋ = f(x)` from `x0` over `[0, t_end]`, returning the time
/// grid and all states (initial state included).
pub fn integrate_flow<F>(
    f: &F,
    x0: &DVector<f64>,
    t_end: f64,
    h: f64,
    method: Method,
) -> Result<(Vec<f64>, Vec<DVector<f64>>), FlowError>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>, StepError>,
{
    let steps = step_schedule(t_end, h);
    let mut times = Vec::with_capacity(steps.len() + 1);
    let mut states = Vec::with_capacity(steps.len() + 1);
    let n = steps.len();
    let mut x = x0.clone();
    times.push(0.0);
    states.push(x.clone());
    for (i, dt) in steps.into_iter().enumerate() {
        let next = match method {
            Method::Midpoint => midpoint_step(f, &x, dt),
            Method::Rk4 => rk4_step(f, &x, dt),
        }
        .map_err(|source| FlowError { step: i + 1, source })?;
        if next.iter().any(|v| !v.is_finite()) {
            return Err(FlowError {
                step: i + 1,
                source: StepError::NonFinite,
            });
        }
        x = next;
        // Grid times are computed, not accumulated, so the last one is exactly `t_end`.
        times.push(if i + 1 == n { t_end } else { (i + 1) as f64 * h });
        states.push(x.clone());
    }
    Ok((times, states))
}
