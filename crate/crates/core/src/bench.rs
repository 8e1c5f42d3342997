//! Oracle-call scaling experiments.
//!
//! For each seed and each `(R, r)` pair, a logistic instance is started at
//! exactly `M`-distance `R` from its minimizer, the lightly regularized
//! objective is minimized to a fixed target with both the accelerated loop
//! and the plain iterated-ball baseline, and the ball-oracle calls are
//! recorded. Slopes are least-squares fits of `log(calls)` against
//! `log(R/r)`, on calls summed over seeds.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ball_oracle::AccelNewtonOracle;
use crate::config::Constants;
use crate::error::{invalid, Result};
use crate::linalg::PencilDecomposition;
use crate::ms_accel::{iterate_ball_baseline, ms_accelerate, AccelParams, BaselineParams, Status};
use crate::objectives::ComposedObjective;
use crate::solvers::{bacon_objective, bacon_oracle_spec};
use crate::synthetic::{gaussian_vector, logistic_instance, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub rows: usize,
    pub dim: usize,
    /// Fraction of flipped labels.
    pub flip: f64,
    pub seeds: Vec<u64>,
    /// `(R, r)` pairs.
    pub points: Vec<(f64, f64)>,
    pub eps: f64,
}

impl ScalingConfig {
    /// `R = 8` with `r` swept so that `R/r ∈ {8, 16, 32, 64}`.
    pub fn radius_sweep() -> Self {
        Self {
            rows: 100,
            dim: 10,
            flip: 0.25,
            seeds: vec![1, 2, 3, 4],
            points: [8.0, 16.0, 32.0, 64.0].iter().map(|q| (8.0, 8.0 / q)).collect(),
            eps: 1e-6,
        }
    }

    /// `r = 1` with the given distances `R`.
    pub fn distance_sweep(radii: &[f64]) -> Self {
        Self {
            points: radii.iter().map(|&big_r| (big_r, 1.0)).collect(),
            ..Self::radius_sweep()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunCounts {
    pub oracle_calls: usize,
    pub iterations: usize,
    pub solves: usize,
    /// Final gap on the regularized objective.
    pub gap: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub seed: u64,
    pub radius_bound: f64,
    pub ball_radius: f64,
    pub ratio: f64,
    pub accelerated: RunCounts,
    pub baseline: RunCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub config: ScalingConfig,
    pub points: Vec<ScalingPoint>,
    pub accelerated_slope: f64,
    pub baseline_slope: f64,
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid("slope fit needs at least two paired points"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(invalid("slope fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("slope fit needs distinct abscissae"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Damped Newton with backtracking; used to locate reference optima.
pub fn newton_minimize(obj: &ComposedObjective, x0: &DVector<f64>, max_iterations: usize) -> Result<DVector<f64>> {
    let mut x = x0.clone();
    for _ in 0..max_iterations {
        let g = obj.gradient(&x)?;
        let h = obj.hessian(&x)?;
        let pencil = PencilDecomposition::new(&h, obj.metric())?;
        let shift = 1e-14 * pencil.max_eigenvalue().max(1e-300);
        let step = pencil.solve(&g, shift);
        let decrement = g.dot(&step);
        if !(decrement > 1e-28) {
            break;
        }
        let f = obj.value(&x)?;
        let mut t = 1.0;
        loop {
            let cand = &x - &step * t;
            if obj.value(&cand)? <= f - 0.25 * t * decrement {
                x = cand;
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                return Ok(x);
            }
        }
    }
    Ok(x)
}

pub fn run_scaling(cfg: &ScalingConfig, constants: &Constants) -> Result<ScalingReport> {
    if cfg.points.len() < 2 || cfg.seeds.is_empty() {
        return Err(invalid("scaling needs two or more points and at least one seed"));
    }
    if !(cfg.eps > 0.0) {
        return Err(invalid("ε must be positive"));
    }
    let mut points = Vec::new();
    for &seed in &cfg.seeds {
        let inst = logistic_instance(cfg.rows, cfg.dim, cfg.flip, seed);
        let base = ComposedObjective::logistic(inst.a, inst.labels)?;
        let x_star = newton_minimize(&base, &DVector::zeros(cfg.dim), 200)?;
        let dir = base.metric().project_image(&gaussian_vector(cfg.dim, &mut rng(seed ^ 0x5eed)))?;
        let dir = &dir / base.metric().seminorm(&dir)?;
        for &(big_r, r) in &cfg.points {
            if !(big_r > 0.0 && r > 0.0) {
                return Err(invalid("radii must be positive"));
            }
            let x0 = &x_star + &dir * big_r;
            let reg = bacon_objective(&base, &x0, cfg.eps, big_r, constants)?;
            let weight = reg.quad_reg().map_or(0.0, |q| q.weight);
            let x_reg = newton_minimize(&reg, &x_star, 200)?;
            let f_star = reg.value(&x_reg)?;
            let target = f_star + cfg.eps;
            let l = base.smoothness().unwrap_or(1.0) + 2.0 * weight;
            let spec = bacon_oracle_spec(
                base.qsc_constant().unwrap_or(1.0),
                r,
                l,
                weight,
                big_r,
                cfg.eps,
                constants,
            )?;
            let oracle = AccelNewtonOracle::new(spec);
            // f ≥ 0 bounds the initial gap
            let eps0 = reg.value(&x0)?;
            let ms = ms_accelerate(
                &reg,
                &oracle,
                &x0,
                &AccelParams {
                    radius_bound: big_r,
                    eps0,
                    eps: cfg.eps,
                    smoothness: l,
                    f_target: Some(target),
                },
                constants,
            )?;
            let bl = iterate_ball_baseline(
                &reg,
                &oracle,
                &x0,
                &BaselineParams {
                    radius_bound: big_r,
                    eps0,
                    eps: cfg.eps,
                    f_target: Some(target),
                },
                constants,
            )?;
            let counts = |trace: &crate::ms_accel::SolverTrace, f: f64| RunCounts {
                oracle_calls: trace.oracle_calls(),
                iterations: trace.iterations(),
                solves: trace.solves(),
                gap: f - f_star,
                status: trace.status,
            };
            points.push(ScalingPoint {
                seed,
                radius_bound: big_r,
                ball_radius: r,
                ratio: big_r / r,
                accelerated: counts(&ms.trace, ms.f),
                baseline: counts(&bl.trace, bl.f),
            });
        }
    }
    let ratios: Vec<f64> = cfg.points.iter().map(|(big_r, r)| big_r / r).collect();
    let pooled = |pick: &dyn Fn(&ScalingPoint) -> usize| -> Vec<f64> {
        cfg.points
            .iter()
            .map(|&(big_r, r)| {
                points
                    .iter()
                    .filter(|p| p.radius_bound == big_r && p.ball_radius == r)
                    .map(pick)
                    .sum::<usize>() as f64
            })
            .collect()
    };
    let accelerated_slope = fit_loglog_slope(&ratios, &pooled(&|p| p.accelerated.oracle_calls))?;
    let baseline_slope = fit_loglog_slope(&ratios, &pooled(&|p| p.baseline.oracle_calls))?;
    Ok(ScalingReport {
        config: cfg.clone(),
        points,
        accelerated_slope,
        baseline_slope,
    })
}
