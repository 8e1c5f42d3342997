//! End-to-end drivers: MS-BACON and the logistic, `ℓ∞` and `ℓp`
//! regression solvers built on it.

use log::{info, warn};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::ball_oracle::{AccelNewtonOracle, BallOracleSpec};
use crate::config::Constants;
use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::SeminormOperator;
use crate::ms_accel::{ms_accelerate, AccelParams, SolverTrace, Status};
use crate::objectives::ComposedObjective;

#[derive(Debug, Clone)]
pub struct BaconConfig {
    pub eps: f64,
    pub x0: DVector<f64>,
    /// `f(x₀) − f* ≤ ε₀`.
    pub eps0: f64,
    /// `‖x₀ − x*‖_M ≤ R`.
    pub radius_bound: f64,
    /// QSC constant of the regularized objective; derived from it when absent.
    pub qsc: Option<f64>,
    /// Smoothness of the unregularized objective.
    pub smoothness: f64,
    /// Replaces the ball radius `1/M`.
    pub ball_radius: Option<f64>,
    /// Stop once the regularized objective reaches this value.
    pub f_target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaconOutcome {
    pub x: DVector<f64>,
    /// Unregularized objective at `x`.
    pub f: f64,
    /// Trace over the regularized objective.
    pub trace: SolverTrace,
    pub ball_radius: f64,
    pub oracle: Option<BallOracleSpec>,
    pub regularizer_weight: f64,
}

/// The regularized objective `f + ε/(divisor·R²)·‖x − x₀‖²_M`.
pub fn bacon_objective(
    obj: &ComposedObjective,
    x0: &DVector<f64>,
    eps: f64,
    radius_bound: f64,
    constants: &Constants,
) -> Result<ComposedObjective> {
    let weight = eps / (constants.regularizer_divisor * radius_bound * radius_bound);
    obj.with_quad_reg(weight, x0.clone())
}

pub fn ms_bacon(obj: &ComposedObjective, cfg: &BaconConfig, constants: &Constants) -> Result<BaconOutcome> {
    constants.validate()?;
    check_dim(obj.dim(), cfg.x0.len())?;
    let BaconConfig {
        eps,
        eps0,
        radius_bound,
        smoothness,
        ..
    } = *cfg;
    if !(eps > 0.0 && eps0 >= 0.0 && radius_bound > 0.0 && smoothness > 0.0) {
        return Err(invalid("MS-BACON needs ε, R, L > 0 and ε₀ ≥ 0"));
    }
    let reg = bacon_objective(obj, &cfg.x0, eps, radius_bound, constants)?;
    let weight = reg.quad_reg().map_or(0.0, |q| q.weight);
    let f0 = obj.value(&cfg.x0)?;
    if eps0 <= eps {
        let trace = SolverTrace {
            f0,
            records: Vec::new(),
            status: Status::AlreadyOptimal,
        };
        return Ok(BaconOutcome {
            x: cfg.x0.clone(),
            f: f0,
            trace,
            ball_radius: 0.0,
            oracle: None,
            regularizer_weight: weight,
        });
    }

    let qsc = match cfg.qsc {
        Some(m) => m,
        None => reg.qsc_constant().ok_or(Error::NoQscConstant)?,
    };
    let l = smoothness + 2.0 * weight;
    let r = match cfg.ball_radius {
        Some(r) => r,
        None if qsc > 0.0 => 1.0 / qsc,
        None => constants.oracle_diameter_factor * radius_bound,
    };
    let inner_eps = 0.5 * eps;
    let spec = bacon_oracle_spec(qsc, r, l, weight, radius_bound, inner_eps, constants)?;
    info!(
        "MS-BACON: r = {r:.3e}, δ = {:.3e}, c = {:.3}, K = {}",
        spec.delta,
        spec.stability,
        spec.iteration_count()
    );
    let oracle = AccelNewtonOracle::new(spec);
    let params = AccelParams {
        radius_bound,
        eps0,
        eps: inner_eps,
        smoothness: l,
        f_target: cfg.f_target,
    };
    let out = ms_accelerate(&reg, &oracle, &cfg.x0, &params, constants)?;
    let f = obj.value(&out.x)?;
    Ok(BaconOutcome {
        x: out.x,
        f,
        trace: out.trace,
        ball_radius: r,
        oracle: Some(spec),
        regularizer_weight: weight,
    })
}

/// Accelerated Newton oracle contract for the regularized objective.
///
/// `smoothness` already includes the regularizer; `eps` is the accuracy the
/// outer loop targets. The accuracy `δ` is the smaller of the acceleration
/// theorem's choice and the line search's own requirement.
pub fn bacon_oracle_spec(
    qsc: f64,
    ball_radius: f64,
    smoothness: f64,
    weight: f64,
    radius_bound: f64,
    eps: f64,
    constants: &Constants,
) -> Result<BallOracleSpec> {
    let r = ball_radius;
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("ball radius must be positive and finite"));
    }
    let l = smoothness;
    let d = constants.ms_diameter_factor * radius_bound;
    let u = 2.0 * (d + r) * r / eps;
    let delta = (r / (constants.oracle_accuracy_offset
        + constants.oracle_accuracy_slope * l * radius_bound * r / eps))
        .min(r / (12.0 * (1.0 + l * u)));
    BallOracleSpec::new(
        delta,
        r,
        (qsc * r).exp(),
        2.0 * weight,
        l,
        Some(constants.oracle_diameter_factor * radius_bound),
    )
}

/// Minimum-norm least-squares solution `A†b`.
pub fn least_squares_init(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(a.nrows(), b.len())?;
    let metric = SeminormOperator::from_factor(a.clone())?;
    metric.pinv_apply(&a.tr_mul(b))
}

/// How the distance bound `R` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum RadiusChoice {
    Given(f64),
    /// Factor times the Newton step length at `x₀`. Not certified.
    /// [`solve_linf`] substitutes [`linf_radius_bound`], which is.
    Heuristic,
}

fn resolve_radius(
    obj: &ComposedObjective,
    x0: &DVector<f64>,
    choice: RadiusChoice,
    constants: &Constants,
) -> Result<(f64, bool)> {
    match choice {
        RadiusChoice::Given(r) if r > 0.0 && r.is_finite() => Ok((r, true)),
        RadiusChoice::Given(_) => Err(invalid("radius bound must be positive")),
        RadiusChoice::Heuristic => {
            let h = obj.hessian(x0)?;
            let g = obj.gradient(x0)?;
            let pencil = crate::linalg::PencilDecomposition::new(&h, obj.metric())?;
            let coords = pencil.coordinates(&g);
            let floor = 1e-12 * pencil.max_eigenvalue().max(1.0);
            let step = pencil.solution_seminorm(&coords, floor);
            let r = (constants.radius_heuristic_factor * step).max(f64::MIN_POSITIVE);
            warn!("using uncertified radius estimate R = {r:.3e}");
            Ok((r, false))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpPhase {
    pub k: usize,
    pub eps: f64,
    pub radius_bound: f64,
    pub qsc: f64,
    pub regularizer_weight: f64,
    pub smoothness: f64,
    pub f: f64,
    pub oracle_calls: usize,
    pub solves: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub task: &'static str,
    pub status: Status,
    pub x: Vec<f64>,
    /// Final objective in the task's own terms (`‖Ax − b‖∞` for `ℓ∞`).
    pub objective: f64,
    pub initial_objective: f64,
    pub eps: f64,
    pub radius_bound: f64,
    pub radius_certified: bool,
    pub ball_radius: f64,
    pub oracle_accuracy: f64,
    pub oracle_calls: usize,
    pub solves: usize,
    pub iterations: usize,
    /// Per-iteration records over the regularized objective.
    pub trace: SolverTrace,
    pub phases: Vec<LpPhase>,
}

impl SolveReport {
    fn from_bacon(
        task: &'static str,
        out: BaconOutcome,
        objective: f64,
        initial_objective: f64,
        eps: f64,
        radius_bound: f64,
        radius_certified: bool,
    ) -> Self {
        Self {
            task,
            status: out.trace.status,
            x: out.x.iter().copied().collect(),
            objective,
            initial_objective,
            eps,
            radius_bound,
            radius_certified,
            ball_radius: out.ball_radius,
            oracle_accuracy: out.oracle.map_or(0.0, |s| s.delta),
            oracle_calls: out.trace.oracle_calls(),
            solves: out.trace.solves(),
            iterations: out.trace.iterations(),
            trace: out.trace,
            phases: Vec::new(),
        }
    }
}

pub fn solve_logistic(
    a: &DMatrix<f64>,
    labels: &DVector<f64>,
    x0: &DVector<f64>,
    eps: f64,
    radius: RadiusChoice,
    constants: &Constants,
) -> Result<SolveReport> {
    if !(eps > 0.0) {
        return Err(invalid("ε must be positive"));
    }
    let obj = ComposedObjective::logistic(a.clone(), labels.clone())?;
    let (big_r, certified) = resolve_radius(&obj, x0, radius, constants)?;
    // f ≥ 0
    let f0 = obj.value(x0)?;
    let cfg = BaconConfig {
        eps,
        x0: x0.clone(),
        eps0: f0,
        radius_bound: big_r,
        qsc: obj.qsc_constant(),
        smoothness: obj.smoothness().expect("logistic loss is smooth"),
        ball_radius: None,
        f_target: None,
    };
    let out = ms_bacon(&obj, &cfg, constants)?;
    let f = out.f;
    Ok(SolveReport::from_bacon("logistic", out, f, f0, eps, big_r, certified))
}

/// `‖Ax − b‖∞`.
pub fn linf_residual(a: &DMatrix<f64>, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    (a * x - b).amax()
}

/// The softmax surrogate over `[A; −A]`, `[b; −b]` at temperature
/// `ε / (divisor · log 2n)`.
pub fn linf_objective(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    eps: f64,
    constants: &Constants,
) -> Result<ComposedObjective> {
    check_dim(a.nrows(), b.len())?;
    if !(eps > 0.0) {
        return Err(invalid("ε must be positive"));
    }
    let n = a.nrows();
    let mut a_hat = DMatrix::zeros(2 * n, a.ncols());
    a_hat.rows_mut(0, n).copy_from(a);
    a_hat.rows_mut(n, n).copy_from(&(-a));
    let mut b_hat = DVector::zeros(2 * n);
    b_hat.rows_mut(0, n).copy_from(b);
    b_hat.rows_mut(n, n).copy_from(&(-b));
    ComposedObjective::log_sum_exp(a_hat, b_hat, linf_temperature(n, eps, constants))
}

fn linf_temperature(n: usize, eps: f64, constants: &Constants) -> f64 {
    eps / (constants.linf_temperature_divisor * ((2 * n) as f64).ln().max(f64::MIN_POSITIVE))
}

/// Certified distance bound for the smoothed problem. The smoothed minimizer
/// has residual at most `‖Ax₀ − b‖∞ + t ln 2n`, and `‖u‖_M = √2‖Au‖₂ ≤ √(2n)‖Au‖∞`.
pub fn linf_radius_bound(a: &DMatrix<f64>, b: &DVector<f64>, x0: &DVector<f64>, eps: f64, constants: &Constants) -> f64 {
    let n = a.nrows();
    let t = linf_temperature(n, eps, constants);
    (2.0 * n as f64).sqrt() * (2.0 * linf_residual(a, b, x0) + t * (2.0 * n as f64).ln())
}

pub fn solve_linf(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    x0: &DVector<f64>,
    eps: f64,
    radius: RadiusChoice,
    constants: &Constants,
) -> Result<SolveReport> {
    let obj = linf_objective(a, b, eps, constants)?;
    // the Newton step at x₀ is meaningless for a nearly flat softmax
    let (big_r, certified) = match radius {
        RadiusChoice::Heuristic => (linf_radius_bound(a, b, x0, eps, constants).max(f64::MIN_POSITIVE), true),
        given => resolve_radius(&obj, x0, given, constants)?,
    };
    // lse_t(z) ≥ max z ≥ 0 over the symmetrized residual
    let f0 = obj.value(x0)?;
    let cfg = BaconConfig {
        eps: 0.5 * eps,
        x0: x0.clone(),
        eps0: f0,
        radius_bound: big_r,
        qsc: obj.qsc_constant(),
        smoothness: obj.smoothness().expect("softmax is smooth"),
        ball_radius: None,
        f_target: None,
    };
    let out = ms_bacon(&obj, &cfg, constants)?;
    let objective = linf_residual(a, b, &out.x);
    let initial = linf_residual(a, b, x0);
    Ok(SolveReport::from_bacon("linf", out, objective, initial, eps, big_r, certified))
}

/// Phase count `⌈log₂(n / δ^{1/p})⌉`.
pub fn lp_phase_count(n: usize, p: f64, delta: f64) -> usize {
    ((n as f64) / delta.powf(1.0 / p)).log2().ceil().max(1.0) as usize
}

pub fn solve_lp(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    p: f64,
    delta: f64,
    constants: &Constants,
) -> Result<SolveReport> {
    constants.validate()?;
    if !(p > 3.0 && p.is_finite()) {
        return Err(invalid("ℓp regression needs p > 3"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("δ must lie in (0, 1)"));
    }
    let obj = ComposedObjective::power(a.clone(), b.clone(), p)?;
    let n = a.nrows();
    let x0 = least_squares_init(a, b)?;
    let eps0 = obj.value(&x0)?;
    let phases = lp_phase_count(n, p, delta);
    let floor = constants.lp_relative_floor * eps0;
    let diameter_factor = 1.0 + constants.oracle_diameter_factor;

    let mut x = x0.clone();
    let mut fx = eps0;
    let mut eps_prev = eps0;
    let mut records = Vec::new();
    let mut phase_log = Vec::new();
    let mut status = Status::Converged;
    let mut last_spec = None;
    for k in 1..=phases {
        if eps_prev <= floor || fx == 0.0 {
            info!("ℓp: stopping at absolute floor before phase {k}");
            break;
        }
        let eps_k = 2f64.powf(-p) * eps_prev;
        let big_r = (2f64.powf(p + constants.lp_radius_exponent_offset)
            * (n as f64).powf((p - 2.0) / 2.0)
            * eps_prev)
            .powf(1.0 / p);
        let z_inf = (a * &x - b).amax();
        let smoothness = p * (p - 1.0) * (z_inf + diameter_factor * big_r).powf(p - 2.0);
        let reg = bacon_objective(&obj, &x, eps_k, big_r, constants)?;
        let qsc = constants.lp_qsc_scale * reg.qsc_constant().ok_or(Error::NoQscConstant)?;
        let cfg = BaconConfig {
            eps: eps_k,
            x0: x.clone(),
            eps0: eps_prev,
            radius_bound: big_r,
            qsc: Some(qsc),
            smoothness,
            ball_radius: None,
            f_target: None,
        };
        let out = ms_bacon(&obj, &cfg, constants)?;
        if out.f <= fx {
            x = out.x.clone();
            fx = out.f;
        }
        phase_log.push(LpPhase {
            k,
            eps: eps_k,
            radius_bound: big_r,
            qsc,
            regularizer_weight: out.regularizer_weight,
            smoothness,
            f: fx,
            oracle_calls: out.trace.oracle_calls(),
            solves: out.trace.solves(),
            iterations: out.trace.iterations(),
        });
        if matches!(out.trace.status, Status::IterationLimit) {
            status = Status::IterationLimit;
        }
        records.extend(out.trace.records.iter().cloned());
        last_spec = out.oracle.or(last_spec);
        eps_prev = eps_k;
    }
    for (i, rec) in records.iter_mut().enumerate() {
        rec.k = i + 1;
    }
    let trace = SolverTrace {
        f0: eps0,
        records,
        status,
    };
    Ok(SolveReport {
        task: "lp",
        status,
        x: x.iter().copied().collect(),
        objective: fx,
        initial_objective: eps0,
        eps: delta,
        radius_bound: phase_log.first().map_or(0.0, |ph| ph.radius_bound),
        radius_certified: true,
        ball_radius: last_spec.map_or(0.0, |s| s.radius),
        oracle_accuracy: last_spec.map_or(0.0, |s| s.delta),
        oracle_calls: trace.oracle_calls(),
        solves: trace.solves(),
        iterations: trace.iterations(),
        trace,
        phases: phase_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn least_squares_examples() {
        let b = dv(&[1.0, -2.0, 3.0]);
        assert!((least_squares_init(&DMatrix::identity(3, 3), &b).unwrap() - &b).norm() < 1e-12);
        let a = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
        let x = least_squares_init(&a, &dv(&[0.0, 2.0])).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_normal_equations() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 1.0, 0.0, -2.0]);
        let b = dv(&[1.0, 0.0, -1.0, 2.0]);
        let x = least_squares_init(&a, &b).unwrap();
        let normal = a.tr_mul(&(&a * &x - &b));
        assert!(normal.norm() <= 1e-10 * a.tr_mul(&b).norm());
    }

    #[test]
    fn phase_count() {
        assert_eq!(lp_phase_count(6, 4.0, 1e-3), 6);
        assert_eq!(lp_phase_count(1, 4.0, 0.5), 1);
    }

    #[test]
    fn bacon_returns_start_when_already_optimal() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let obj = ComposedObjective::logistic(a, dv(&[1.0, -1.0, 1.0])).unwrap();
        let x0 = dv(&[0.2, 0.1]);
        let cfg = BaconConfig {
            eps: 1e-3,
            x0: x0.clone(),
            eps0: 1e-4,
            radius_bound: 1.0,
            qsc: Some(1.0),
            smoothness: 1.0,
            ball_radius: None,
            f_target: None,
        };
        let out = ms_bacon(&obj, &cfg, &Constants::default()).unwrap();
        assert_eq!(out.x, x0);
        assert_eq!(out.trace.iterations(), 0);
    }

    #[test]
    fn linf_objective_symmetrizes() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let b = dv(&[0.5, -1.0]);
        let obj = linf_objective(&a, &b, 0.1, &Constants::default()).unwrap();
        assert_eq!(obj.rows(), 4);
        let x = dv(&[0.3]);
        let f = obj.value(&x).unwrap();
        let exact = linf_residual(&a, &b, &x);
        assert!(f >= exact && f - exact <= 0.05 + 1e-12);
    }

    #[test]
    fn lp_rejects_small_p() {
        let a = DMatrix::identity(2, 2);
        let b = dv(&[1.0, 1.0]);
        assert!(solve_lp(&a, &b, 3.0, 1e-3, &Constants::default()).is_err());
        assert!(solve_lp(&a, &b, 4.0, 1.5, &Constants::default()).is_err());
    }
}
