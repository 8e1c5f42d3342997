//! Dispatch from a validated [`RunConfig`] to the solvers and experiments.

use std::time::Instant;

use ball_accel::bench::{fit_loglog_slope, run_scaling, ScalingConfig};
use ball_accel::config::Constants;
use ball_accel::lower_bound::{
    lower_bound_scaling, radius_for_chain, run_progress_experiment, GreedyStrategy, ChainInstance,
    ProgressRecord, QueryStrategy, RandomSearchStrategy, ScalingRow, SubgradientStrategy,
};
use ball_accel::solvers::{solve_linf, solve_logistic, solve_lp, RadiusChoice, SolveReport};
use ball_accel::synthetic::{logistic_instance, regression_instance};
use log::info;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::Value;

use crate::config::{RunConfig, StrategyKind, Task};
use crate::data::load_dense_csv;
use crate::error::{config, CliError, Result};
use crate::report::{Report, SCHEMA_VERSION};

/// Runs the task and builds its report. Writes nothing.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let constants = cfg.load_constants()?;
    let start = Instant::now();
    let mut report = match cfg.task {
        Task::Logistic | Task::Linf | Task::Lp => solve(cfg, &constants)?,
        Task::BenchScaling => bench(cfg, &constants)?,
        Task::Lowerbound => lowerbound(cfg)?,
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| CliError::Serialize(e.to_string()))
}

fn status_name<T: Serialize>(s: &T) -> String {
    serde_json::to_value(s)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn data_or_synthetic(cfg: &RunConfig) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if let Some(path) = &cfg.data {
        let d = load_dense_csv(path)?;
        return Ok((d.a, d.target));
    }
    info!("no data given, generating a {}×{} instance with seed {}", cfg.rows, cfg.cols, cfg.seed);
    Ok(match cfg.task {
        Task::Logistic => {
            let inst = logistic_instance(cfg.rows, cfg.cols, 0.2, cfg.seed);
            (inst.a, inst.labels)
        }
        _ => {
            let inst = regression_instance(cfg.rows, cfg.cols, 0.5, cfg.seed);
            (inst.a, inst.b)
        }
    })
}

fn solve(cfg: &RunConfig, constants: &Constants) -> Result<Report> {
    let (a, target) = data_or_synthetic(cfg)?;
    let radius = cfg.radius.map_or(RadiusChoice::Heuristic, RadiusChoice::Given);
    let x0 = DVector::zeros(a.ncols());
    let rep: SolveReport = match cfg.task {
        Task::Logistic => solve_logistic(&a, &target, &x0, cfg.eps(), radius, constants)?,
        Task::Linf => solve_linf(&a, &target, &x0, cfg.eps(), radius, constants)?,
        Task::Lp => {
            if cfg.radius.is_some() {
                return Err(config("lp derives its radii per phase; drop radius"));
            }
            solve_lp(&a, &target, cfg.p(), cfg.delta(), constants)?
        }
        _ => unreachable!("solve handles the regression tasks only"),
    };
    let mut result = to_value(&rep)?;
    if let Value::Object(map) = &mut result {
        // the trace is reported once, at the top level
        map.remove("trace");
    }
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        task: cfg.task.name(),
        config: cfg.clone(),
        status: status_name(&rep.status),
        objective: Some(rep.objective),
        oracle_calls: rep.oracle_calls,
        solves: rep.solves,
        iterations: rep.iterations,
        trace: rep.trace.records,
        result,
        wall_time_s: 0.0,
    })
}

fn bench(cfg: &RunConfig, constants: &Constants) -> Result<Report> {
    let mut sc = match &cfg.radii {
        Some(radii) => ScalingConfig::distance_sweep(radii),
        None => {
            let mut sc = ScalingConfig::radius_sweep();
            if let Some(ratios) = &cfg.ratios {
                sc.points = ratios.iter().map(|q| (8.0, 8.0 / q)).collect();
            }
            sc
        }
    };
    sc.rows = cfg.rows;
    sc.dim = cfg.cols;
    if let Some(seeds) = &cfg.seeds {
        sc.seeds = seeds.clone();
    }
    if let Some(eps) = cfg.eps {
        sc.eps = eps;
    }
    let rep = run_scaling(&sc, constants)?;
    let total = |f: &dyn Fn(&ball_accel::bench::ScalingPoint) -> usize| rep.points.iter().map(f).sum::<usize>();
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        task: cfg.task.name(),
        config: cfg.clone(),
        status: "completed".into(),
        objective: None,
        oracle_calls: total(&|p| p.accelerated.oracle_calls + p.baseline.oracle_calls),
        solves: total(&|p| p.accelerated.solves + p.baseline.solves),
        iterations: total(&|p| p.accelerated.iterations + p.baseline.iterations),
        trace: Vec::new(),
        result: to_value(&rep)?,
        wall_time_s: 0.0,
    })
}

#[derive(Debug, Serialize)]
struct Trial {
    seed: u64,
    dim: usize,
    meets_theorem: bool,
    within_chain: bool,
    records: Vec<ProgressRecord>,
}

#[derive(Debug, Serialize)]
struct LowerBoundResult {
    chain: usize,
    r: f64,
    domain_radius: f64,
    strategy: StrategyKind,
    /// `R/√N − 4Nr`, the suboptimality every query before `N` must keep.
    suboptimality_floor: f64,
    within_chain: usize,
    trials: Vec<Trial>,
    scaling: Option<Vec<ScalingRow>>,
    scaling_slope: Option<f64>,
}

fn lowerbound(cfg: &RunConfig) -> Result<Report> {
    let big_r = cfg.radius.unwrap_or(1.0);
    let n = cfg.chain;
    let r = radius_for_chain(n, big_r);
    let mut trials = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials as u64 {
        let seed = cfg.seed.wrapping_add(t);
        let inst = ChainInstance::desk_scale(n, r, big_r, 0.1, seed)?;
        let mut strategy: Box<dyn QueryStrategy> = match cfg.strategy {
            StrategyKind::Subgradient => Box::new(SubgradientStrategy {
                step: big_r / (n as f64).sqrt(),
            }),
            StrategyKind::Greedy => Box::new(GreedyStrategy::default()),
            // steps below r·√d/10 keep every rotated coordinate under r
            StrategyKind::Random => Box::new(RandomSearchStrategy::new(0.1 * r * (inst.dim as f64).sqrt(), seed)),
        };
        let trace = run_progress_experiment(strategy.as_mut(), &inst, n)?;
        trials.push(Trial {
            seed,
            dim: inst.dim,
            meets_theorem: inst.meets_theorem,
            within_chain: trace.within_chain(),
            records: trace.records,
        });
    }
    let (scaling, scaling_slope) = match &cfg.ratios {
        Some(ratios) => {
            let rows = lower_bound_scaling(big_r, ratios, 0.1, cfg.seed)?;
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|row| row.queries.map(|q| (row.ratio, q as f64)))
                .collect();
            let slope = if pts.len() >= 2 {
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                Some(fit_loglog_slope(&xs, &ys)?)
            } else {
                None
            };
            (Some(rows), slope)
        }
        None => (None, None),
    };
    let within = trials.iter().filter(|t| t.within_chain).count();
    let queries = trials.iter().map(|t| t.records.len()).sum();
    let result = LowerBoundResult {
        chain: n,
        r,
        domain_radius: big_r,
        strategy: cfg.strategy,
        suboptimality_floor: big_r / (n as f64).sqrt() - 4.0 * n as f64 * r,
        within_chain: within,
        trials,
        scaling,
        scaling_slope,
    };
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        task: cfg.task.name(),
        config: cfg.clone(),
        status: "completed".into(),
        objective: None,
        oracle_calls: queries,
        solves: 0,
        iterations: queries,
        trace: Vec::new(),
        result: to_value(&result)?,
        wall_time_s: 0.0,
    })
}
