//! Accelerated proximal-point iteration over a ball oracle, and the plain
//! iterated-ball baseline it is compared against.

use log::{debug, warn};
use nalgebra::DVector;
use serde::Serialize;

use crate::ball_oracle::BallOracle;
use crate::config::Constants;
use crate::error::{check_dim, invalid, Error, Result};
use crate::objectives::ComposedObjective;

/// `a = (λ + sqrt(λ² + 4λA)) / 2`, the root of `a² = λ(A + a)`.
pub fn compute_a_lambda(lambda: f64, a: f64) -> f64 {
    0.5 * (lambda + (lambda * lambda + 4.0 * lambda * a).sqrt())
}

/// Accelerated loop state `(A_k, x_k, v_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MSState {
    pub a: f64,
    pub x: DVector<f64>,
    pub v: DVector<f64>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MSOracleResult {
    pub lambda: f64,
    pub a_lambda: f64,
    pub y: DVector<f64>,
    pub z: DVector<f64>,
    /// `Some(z)` when `z` already certifies `ε`-optimality.
    pub early_solution: Option<DVector<f64>>,
    pub oracle_calls: usize,
    pub solves: usize,
    /// `‖∇f(z)‖_{M†}`.
    pub grad_dual_norm: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LineSearchParams {
    /// Bound on `‖x − x*‖_M` and `‖v − x*‖_M`.
    pub diameter: f64,
    pub smoothness: f64,
    pub eps: f64,
    pub bisection_budget: usize,
}

/// Binary search for `λ` with `λ‖∇f(z_λ)‖_{M†} ≈ r`, where `z_λ` is the ball
/// oracle's answer at `y_λ`.
pub fn ms_linesearch<O: BallOracle + ?Sized>(
    obj: &ComposedObjective,
    oracle: &O,
    a: f64,
    x: &DVector<f64>,
    v: &DVector<f64>,
    params: &LineSearchParams,
) -> Result<MSOracleResult> {
    let LineSearchParams {
        diameter: d,
        smoothness: l,
        eps,
        bisection_budget,
    } = *params;
    let r = oracle.radius();
    let delta = oracle.accuracy();
    if !(eps > 0.0 && d > 0.0 && l > 0.0 && a >= 0.0) {
        return Err(invalid("line search needs ε, D, L > 0 and A ≥ 0"));
    }
    if eps >= 2.0 * l * d * d {
        return Err(invalid("ε ≥ 2LD²: every point is ε-optimal"));
    }
    let mut hi = 2.0 * (d + r) * r / eps;
    let mut lo = r / (2.0 * l * d);
    let required = r / (12.0 * (1.0 + l * hi));
    if delta > required * (1.0 + 1e-12) {
        warn!("ball oracle accuracy {delta:.3e} exceeds line-search requirement {required:.3e}");
    }

    let metric = obj.metric();
    let mut calls = 0;
    let mut solves = 0;
    let mut probe = |lambda: f64| -> Result<(DVector<f64>, DVector<f64>, f64, f64)> {
        let a_lambda = compute_a_lambda(lambda, a);
        let t = a / (a + a_lambda);
        let y = x * t + v * (1.0 - t);
        let out = oracle.query(obj, &y)?;
        calls += 1;
        solves += out.solves;
        let gnorm = metric.dual_seminorm(&obj.gradient(&out.point)?)?;
        Ok((y, out.point, gnorm, a_lambda))
    };

    let mut lambda = hi;
    let (mut y, mut z, mut gnorm, mut a_lambda) = probe(lambda)?;
    if hi * gnorm <= r + hi * l * delta {
        debug!("line search: early exit at λ = {hi:.3e}");
        return Ok(MSOracleResult {
            lambda,
            a_lambda,
            y,
            early_solution: Some(z.clone()),
            z,
            oracle_calls: calls,
            solves,
            grad_dual_norm: gnorm,
        });
    }
    let mut iterations = 0;
    let mut lo_checked = false;
    while (lambda * gnorm - r).abs() > r / 6.0 {
        if iterations >= bisection_budget {
            return Err(Error::BudgetExceeded {
                routine: "ms_linesearch",
                iterations,
            });
        }
        iterations += 1;
        if hi - lo <= 4.0 * f64::EPSILON * hi && !lo_checked {
            // the bracket collapsed onto ℓ: verify g(ℓ) ≤ r and widen if not
            lambda = lo;
            (y, z, gnorm, a_lambda) = probe(lambda)?;
            if lambda * gnorm > r {
                warn!("line search: g(ℓ) > r at ℓ = {lo:.3e}, halving ℓ");
                hi = lo;
                lo *= 0.5;
            } else {
                lo_checked = true;
            }
            continue;
        }
        lambda = 0.5 * (lo + hi);
        (y, z, gnorm, a_lambda) = probe(lambda)?;
        if lambda * gnorm >= r {
            hi = lambda;
        } else {
            lo = lambda;
        }
    }
    Ok(MSOracleResult {
        lambda,
        a_lambda,
        y,
        z,
        early_solution: None,
        oracle_calls: calls,
        solves,
        grad_dual_norm: gnorm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// The line search certified an `ε`-optimal point.
    EarlySolution,
    /// The caller's objective target was reached.
    TargetReached,
    /// The gradient bound certified `ε`-optimality (baseline only).
    Converged,
    /// An oracle step failed to decrease `f` (baseline only).
    Stagnated,
    IterationLimit,
    /// `ε ≥ 2LD²`, so the starting point is already `ε`-optimal.
    TrivialAccuracy,
    /// `ε₀ ≤ ε`.
    AlreadyOptimal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `f(x_k)` after the step.
    pub f: f64,
    /// `‖x_k − y_{k−1}‖_M`.
    pub movement: f64,
    pub lambda: f64,
    pub a: f64,
    pub oracle_calls: usize,
    pub solves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverTrace {
    pub f0: f64,
    pub records: Vec<TraceRecord>,
    pub status: Status,
}

impl SolverTrace {
    fn new(f0: f64) -> Self {
        Self {
            f0,
            records: Vec::new(),
            status: Status::IterationLimit,
        }
    }

    pub fn oracle_calls(&self) -> usize {
        self.records.iter().map(|r| r.oracle_calls).sum()
    }

    pub fn solves(&self) -> usize {
        self.records.iter().map(|r| r.solves).sum()
    }

    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x: DVector<f64>,
    pub f: f64,
    pub trace: SolverTrace,
}

#[derive(Debug, Clone, Copy)]
pub struct AccelParams {
    /// `‖x₀ − x*‖_M ≤ R`.
    pub radius_bound: f64,
    /// `f(x₀) − f* ≤ ε₀`.
    pub eps0: f64,
    pub eps: f64,
    pub smoothness: f64,
    /// Stop as soon as `f(x_k) ≤ target`.
    pub f_target: Option<f64>,
}

/// `⌈C (R/r)^{2/3} ln(ε₀/ε)⌉`.
pub fn ms_iteration_cap(factor: f64, radius_bound: f64, r: f64, eps0: f64, eps: f64) -> usize {
    let logs = (eps0 / eps).ln().max(1.0);
    (factor * (radius_bound / r).powf(2.0 / 3.0) * logs).ceil() as usize
}

/// `⌈C (R/r) ln(ε₀/ε)⌉`.
pub fn baseline_iteration_cap(factor: f64, radius_bound: f64, r: f64, eps0: f64, eps: f64) -> usize {
    let logs = (eps0 / eps).ln().max(1.0);
    (factor * (radius_bound / r) * logs).ceil() as usize
}

pub fn ms_accelerate<O: BallOracle + ?Sized>(
    obj: &ComposedObjective,
    oracle: &O,
    x0: &DVector<f64>,
    params: &AccelParams,
    constants: &Constants,
) -> Result<SolveOutcome> {
    ms_accelerate_with(obj, oracle, x0, params, constants, |_, _| {})
}

/// [`ms_accelerate`] with a callback invoked after every step with the new
/// state and the line-search result that produced it.
pub fn ms_accelerate_with<O, F>(
    obj: &ComposedObjective,
    oracle: &O,
    x0: &DVector<f64>,
    params: &AccelParams,
    constants: &Constants,
    mut observe: F,
) -> Result<SolveOutcome>
where
    O: BallOracle + ?Sized,
    F: FnMut(&MSState, &MSOracleResult),
{
    check_dim(obj.dim(), x0.len())?;
    let AccelParams {
        radius_bound,
        eps0,
        eps,
        smoothness,
        f_target,
    } = *params;
    if !(radius_bound > 0.0 && eps0 > 0.0 && eps > 0.0 && smoothness > 0.0) {
        return Err(invalid("acceleration needs R, ε₀, ε, L > 0"));
    }
    let f0 = obj.value(x0)?;
    let mut trace = SolverTrace::new(f0);
    let finish = |trace: SolverTrace, x: DVector<f64>, f: f64| SolveOutcome { x, f, trace };
    if eps0 <= eps {
        trace.status = Status::AlreadyOptimal;
        return Ok(finish(trace, x0.clone(), f0));
    }
    let d = constants.ms_diameter_factor * radius_bound;
    if eps >= 2.0 * smoothness * d * d {
        trace.status = Status::TrivialAccuracy;
        return Ok(finish(trace, x0.clone(), f0));
    }
    if f_target.is_some_and(|t| f0 <= t) {
        trace.status = Status::TargetReached;
        return Ok(finish(trace, x0.clone(), f0));
    }

    let r = oracle.radius();
    let ls = LineSearchParams {
        diameter: d,
        smoothness,
        eps,
        bisection_budget: constants.bisection_budget,
    };
    let cap = ms_iteration_cap(constants.ms_iteration_factor, radius_bound, r, eps0, eps);
    let metric = obj.metric();
    let mut state = MSState {
        a: radius_bound * radius_bound / (2.0 * eps0),
        x: x0.clone(),
        v: x0.clone(),
        k: 0,
    };
    let mut best = (x0.clone(), f0);
    while state.k < cap {
        let res = ms_linesearch(obj, oracle, state.a, &state.x, &state.v, &ls)?;
        let z = res.z.clone();
        let fz = obj.value(&z)?;
        let movement = metric.seminorm(&(&z - &res.y))?;
        let step = metric.pinv_apply(&obj.gradient(&z)?)?;
        state.v -= step * res.a_lambda;
        state.a += res.a_lambda;
        state.x = z;
        state.k += 1;
        trace.records.push(TraceRecord {
            k: state.k,
            f: fz,
            movement,
            lambda: res.lambda,
            a: state.a,
            oracle_calls: res.oracle_calls,
            solves: res.solves,
        });
        observe(&state, &res);
        if fz < best.1 {
            best = (state.x.clone(), fz);
        }
        if res.early_solution.is_some() {
            trace.status = Status::EarlySolution;
            break;
        }
        if f_target.is_some_and(|t| fz <= t) {
            trace.status = Status::TargetReached;
            break;
        }
    }
    debug!(
        "ms_accelerate: {} iterations, {} oracle calls, status {:?}",
        trace.iterations(),
        trace.oracle_calls(),
        trace.status
    );
    Ok(finish(trace, best.0, best.1))
}

#[derive(Debug, Clone, Copy)]
pub struct BaselineParams {
    pub radius_bound: f64,
    pub eps0: f64,
    pub eps: f64,
    pub f_target: Option<f64>,
}

/// `x_{k+1} = oracle(x_k)` until the gradient bound
/// `‖∇f(x_k)‖_{M†}(R + r) ≤ ε` holds, `f` stops decreasing, or the cap.
pub fn iterate_ball_baseline<O: BallOracle + ?Sized>(
    obj: &ComposedObjective,
    oracle: &O,
    x0: &DVector<f64>,
    params: &BaselineParams,
    constants: &Constants,
) -> Result<SolveOutcome> {
    check_dim(obj.dim(), x0.len())?;
    let BaselineParams {
        radius_bound,
        eps0,
        eps,
        f_target,
    } = *params;
    if !(radius_bound > 0.0 && eps0 > 0.0 && eps > 0.0) {
        return Err(invalid("baseline needs R, ε₀, ε > 0"));
    }
    let r = oracle.radius();
    let metric = obj.metric();
    let f0 = obj.value(x0)?;
    let mut trace = SolverTrace::new(f0);
    let certified = |x: &DVector<f64>| -> Result<bool> {
        let g = metric.dual_seminorm(&obj.gradient(x)?)?;
        Ok(g * (radius_bound + r) <= eps)
    };
    if eps0 <= eps {
        trace.status = Status::AlreadyOptimal;
        return Ok(SolveOutcome {
            x: x0.clone(),
            f: f0,
            trace,
        });
    }
    let cap = baseline_iteration_cap(constants.baseline_iteration_factor, radius_bound, r, eps0, eps);
    let mut x = x0.clone();
    let mut fx = f0;
    for k in 1..=cap {
        if f_target.is_some_and(|t| fx <= t) {
            trace.status = Status::TargetReached;
            break;
        }
        if f_target.is_none() && certified(&x)? {
            trace.status = Status::Converged;
            break;
        }
        let out = oracle.query(obj, &x)?;
        let fy = obj.value(&out.point)?;
        let movement = metric.seminorm(&(&out.point - &x))?;
        trace.records.push(TraceRecord {
            k,
            f: fy,
            movement,
            lambda: 0.0,
            a: 0.0,
            oracle_calls: 1,
            solves: out.solves,
        });
        if fy >= fx {
            trace.status = Status::Stagnated;
            break;
        }
        x = out.point;
        fx = fy;
        if k == cap {
            trace.status = Status::IterationLimit;
        }
    }
    if f_target.is_some_and(|t| fx <= t) {
        trace.status = Status::TargetReached;
    }
    Ok(SolveOutcome { x, f: fx, trace })
}
