//! Three interactive operations for the browser page in `www/`. Each
//! exported function returns a JSON string; the plain Rust functions behind
//! them are what the native tests exercise.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use ball_accel::ball_oracle::AccelNewtonOracle;
use ball_accel::bench::newton_minimize;
use ball_accel::config::Constants;
use ball_accel::linalg::SeminormOperator;
use ball_accel::lower_bound::{
    radius_for_chain, run_progress_experiment, GreedyStrategy, ChainInstance, QueryStrategy,
    RandomSearchStrategy, SubgradientStrategy,
};
use ball_accel::ms_accel::{iterate_ball_baseline, ms_accelerate, AccelParams, BaselineParams, SolverTrace};
use ball_accel::objectives::ComposedObjective;
use ball_accel::solvers::{bacon_objective, bacon_oracle_spec};
use ball_accel::synthetic::{gaussian_vector, logistic_instance, rng};
use ball_accel::trust_region::TrustRegionSolver;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Curve {
    /// Cumulative ball-oracle calls after each iteration.
    pub calls: Vec<usize>,
    pub gap: Vec<f64>,
    pub status: String,
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub ratio: f64,
    pub radius_bound: f64,
    pub ball_radius: f64,
    pub accelerated: Curve,
    pub baseline: Curve,
}

fn curve(trace: &SolverTrace, f_star: f64) -> Curve {
    let mut total = 0;
    let mut calls = vec![0];
    let mut gap = vec![(trace.f0 - f_star).max(0.0)];
    for rec in &trace.records {
        total += rec.oracle_calls;
        calls.push(total);
        gap.push((rec.f - f_star).max(0.0));
    }
    let status = serde_json::to_value(trace.status)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    Curve { calls, gap, status }
}

/// Logistic instance (60 × 6) started at `M`-distance 8 from its optimum,
/// minimized to `f* + 1e-6` by both loops with `r = 8 / ratio`.
pub fn compare(ratio: f64, seed: u64) -> ball_accel::Result<Comparison> {
    if !(1.0..=256.0).contains(&ratio) {
        return Err(ball_accel::Error::InvalidParameter("ratio must lie in [1, 256]".into()));
    }
    let (big_r, eps) = (8.0, 1e-6);
    let r = big_r / ratio;
    let constants = Constants::default();
    let inst = logistic_instance(60, 6, 0.25, seed);
    let base = ComposedObjective::logistic(inst.a, inst.labels)?;
    let x_star = newton_minimize(&base, &DVector::zeros(6), 200)?;
    let dir = gaussian_vector(6, &mut rng(seed ^ 0x5eed));
    let dir = &dir / base.metric().seminorm(&dir)?;
    let x0 = &x_star + dir * big_r;
    let reg = bacon_objective(&base, &x0, eps, big_r, &constants)?;
    let weight = reg.quad_reg().map_or(0.0, |q| q.weight);
    let f_star = reg.value(&newton_minimize(&reg, &x_star, 200)?)?;
    let l = base.smoothness().unwrap_or(1.0) + 2.0 * weight;
    let spec = bacon_oracle_spec(1.0, r, l, weight, big_r, eps, &constants)?;
    let oracle = AccelNewtonOracle::new(spec);
    let eps0 = reg.value(&x0)?;
    let target = Some(f_star + eps);
    let ms = ms_accelerate(
        &reg,
        &oracle,
        &x0,
        &AccelParams {
            radius_bound: big_r,
            eps0,
            eps,
            smoothness: l,
            f_target: target,
        },
        &constants,
    )?;
    let bl = iterate_ball_baseline(
        &reg,
        &oracle,
        &x0,
        &BaselineParams {
            radius_bound: big_r,
            eps0,
            eps,
            f_target: target,
        },
        &constants,
    )?;
    Ok(Comparison {
        ratio,
        radius_bound: big_r,
        ball_radius: r,
        accelerated: curve(&ms.trace, f_star),
        baseline: curve(&bl.trace, f_star),
    })
}

#[derive(Debug, Serialize)]
pub struct LambdaPath {
    /// `(x, y, λ)` along a log-spaced multiplier grid.
    pub path: Vec<[f64; 3]>,
    pub solution: [f64; 2],
    pub lambda: f64,
    pub interior: bool,
    pub iterations: usize,
    /// Unconstrained minimizer `H⁻¹g`.
    pub newton: [f64; 2],
}

/// `min −gᵀx + ½xᵀHx` over the Euclidean disc of radius `radius` at the
/// origin, with `H = [[h11, h12], [h12, h22]]` positive definite.
pub fn lambda_path(h11: f64, h12: f64, h22: f64, g1: f64, g2: f64, radius: f64) -> ball_accel::Result<LambdaPath> {
    let h = DMatrix::from_row_slice(2, 2, &[h11, h12, h12, h22]);
    let mu = h.symmetric_eigenvalues().min();
    if !(mu > 0.0) {
        return Err(ball_accel::Error::NotPsd(mu));
    }
    let metric = SeminormOperator::identity(2);
    let solver = TrustRegionSolver::new(&h, &metric)?;
    let g = DVector::from_column_slice(&[g1, g2]);
    let center = DVector::zeros(2);
    let sol = solver.solve(&center, radius, &g, 1e-9 * radius, mu)?;
    let path = (0..=80)
        .map(|i| {
            let lambda = 10f64.powf(-3.0 + 6.0 * i as f64 / 80.0);
            let p = solver.point_at(&center, &g, lambda)?;
            Ok([p[0], p[1], lambda])
        })
        .collect::<ball_accel::Result<Vec<_>>>()?;
    let newton = solver.point_at(&center, &g, 0.0)?;
    Ok(LambdaPath {
        path,
        solution: [sol.point[0], sol.point[1]],
        lambda: sol.lambda,
        interior: sol.interior,
        iterations: sol.iterations,
        newton: [newton[0], newton[1]],
    })
}

#[derive(Debug, Serialize)]
pub struct Progress {
    pub chain: usize,
    pub dim: usize,
    pub r: f64,
    pub progress: Vec<usize>,
    pub suboptimality: Vec<f64>,
    /// `R/√N − 4Nr` with `R = 1`.
    pub floor: f64,
}

/// One run of `chain` queries on a desk-scale hard instance with `R = 1`.
pub fn progress(chain: usize, strategy: &str, seed: u64) -> ball_accel::Result<Progress> {
    if !(1..=64).contains(&chain) {
        return Err(ball_accel::Error::InvalidParameter("chain must lie in [1, 64]".into()));
    }
    let r = radius_for_chain(chain, 1.0);
    let inst = ChainInstance::desk_scale(chain, r, 1.0, 0.1, seed)?;
    let mut s: Box<dyn QueryStrategy> = match strategy {
        "subgradient" => Box::new(SubgradientStrategy {
            step: 1.0 / (chain as f64).sqrt(),
        }),
        "greedy" => Box::new(GreedyStrategy::default()),
        "random" => Box::new(RandomSearchStrategy::new(0.1 * r * (inst.dim as f64).sqrt(), seed)),
        other => return Err(ball_accel::Error::InvalidParameter(format!("unknown strategy {other:?}"))),
    };
    let trace = run_progress_experiment(s.as_mut(), &inst, chain)?;
    Ok(Progress {
        chain,
        dim: inst.dim,
        r,
        progress: trace.records.iter().map(|rec| rec.max_progress).collect(),
        suboptimality: trace.records.iter().map(|rec| rec.suboptimality).collect(),
        floor: 1.0 / (chain as f64).sqrt() - 4.0 * chain as f64 * r,
    })
}

fn json<T: Serialize>(v: ball_accel::Result<T>) -> Result<String, JsError> {
    let v = v.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = compareLoops)]
pub fn compare_loops(ratio: f64, seed: u32) -> Result<String, JsError> {
    json(compare(ratio, seed as u64))
}

#[wasm_bindgen(js_name = trustRegionPath)]
pub fn trust_region_path(h11: f64, h12: f64, h22: f64, g1: f64, g2: f64, radius: f64) -> Result<String, JsError> {
    json(lambda_path(h11, h12, h22, g1, g2, radius))
}

#[wasm_bindgen(js_name = lowerBoundProgress)]
pub fn lower_bound_progress(chain: u32, strategy: &str, seed: u32) -> Result<String, JsError> {
    json(progress(chain as usize, strategy, seed as u64))
}
