//! Hard instances for algorithms that only see `r`-balls.
//!
//! The chain `f(x) = max_{i ≤ N} (x_i − 4r·i)` is queried through a random
//! rotation `U`. A query at `x̄` reveals only the columns `u_1, …, u_q` with
//! `q` the progress index of `Uᵀx̄`, and the returned [`LocalFunction`]
//! agrees with `f(Uᵀ·)` on the whole `r`-ball around `x̄`. Progress past the
//! revealed columns needs a large inner product with an unseen random
//! direction, so any local method advances about one link per query.

use log::debug;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::synthetic::{gaussian_matrix, rng};

/// `max_{i ≤ N} (x_i − 4r·i)` with 1-based `i`.
///
/// # Panics
///
/// If `x` has fewer than `n` entries.
pub fn nemirovski_value(n: usize, r: f64, x: &DVector<f64>) -> f64 {
    assert!(n >= 1 && x.len() >= n, "chain needs 1 ≤ N ≤ dim(x)");
    (0..n)
        .map(|i| x[i] - 4.0 * r * (i + 1) as f64)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// One past the last entry with `|x_j| > r`, so 1 when every entry is small
/// and `d + 1` when the last one is large.
pub fn progress_index(x: &DVector<f64>, r: f64) -> usize {
    x.iter().rposition(|v| v.abs() > r).map_or(1, |j| j + 2)
}

/// Haar-distributed orthogonal matrix from the QR factorization of a seeded
/// Gaussian matrix, with column signs fixed by `diag(R) > 0`.
pub fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
    assert!(d >= 1);
    let g = gaussian_matrix(d, d, &mut rng(seed));
    let qr = g.qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..d {
        if rr[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Dimension under which the high-probability progress bound is proved,
/// `⌈60 (R/r)² ln(R/(δr))⌉`. Kept as a float; it overflows `usize` quickly.
pub fn theorem_dimension(domain_radius: f64, r: f64, delta: f64) -> f64 {
    let q = domain_radius / r;
    (60.0 * q * q * (q / delta).ln()).ceil()
}

/// `⌊(R/r)^{2/3} / 10⌋`, the number of queries the bound covers.
pub fn chain_length(domain_radius: f64, r: f64) -> usize {
    // tolerate round-off when r came from radius_for_chain
    ((domain_radius / r).powf(2.0 / 3.0) / 10.0 * (1.0 + 1e-12)).floor() as usize
}

/// The `r` for which [`chain_length`] equals `n`.
pub fn radius_for_chain(n: usize, domain_radius: f64) -> f64 {
    domain_radius / (10.0 * n as f64).powf(1.5)
}

#[derive(Debug, Clone)]
pub struct ChainInstance {
    pub chain: usize,
    pub r: f64,
    pub domain_radius: f64,
    pub dim: usize,
    pub rotation: DMatrix<f64>,
    pub seed: u64,
    pub theorem_dim: f64,
    /// Whether `dim` reaches [`theorem_dimension`].
    pub meets_theorem: bool,
}

impl ChainInstance {
    pub fn new(chain: usize, r: f64, domain_radius: f64, dim: usize, delta: f64, seed: u64) -> Result<Self> {
        if chain == 0 || chain > dim {
            return Err(invalid(format!("chain length {chain} must lie in [1, {dim}]")));
        }
        if !(r > 0.0 && domain_radius > r) {
            return Err(invalid("need 0 < r < R"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("δ must lie in (0, 1)"));
        }
        let theorem_dim = theorem_dimension(domain_radius, r, delta);
        Ok(Self {
            chain,
            r,
            domain_radius,
            dim,
            rotation: random_orthogonal(dim, seed),
            seed,
            theorem_dim,
            meets_theorem: dim as f64 >= theorem_dim,
        })
    }

    /// `d = min(theorem dimension, 4N + 256)`.
    pub fn desk_scale(chain: usize, r: f64, domain_radius: f64, delta: f64, seed: u64) -> Result<Self> {
        let cap = 4 * chain + 256;
        let theorem = theorem_dimension(domain_radius, r, delta);
        let dim = if theorem < cap as f64 { (theorem as usize).max(chain) } else { cap };
        Self::new(chain, r, domain_radius, dim, delta, seed)
    }

    /// `f(Uᵀx)`. Instrumentation only; algorithms go through [`Self::respond`].
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        nemirovski_value(self.chain, self.r, &self.rotation.tr_mul(x))
    }

    pub fn progress(&self, x: &DVector<f64>) -> usize {
        progress_index(&self.rotation.tr_mul(x), self.r)
    }

    /// Upper bound on `inf f` over the domain ball, attained at
    /// `−(R/√N)` on the first `N` rotated coordinates.
    pub fn inf_upper_bound(&self) -> f64 {
        -self.domain_radius / (self.chain as f64).sqrt() - 4.0 * self.r
    }

    /// The `r`-local answer at `x̄`.
    pub fn respond(&self, center: &DVector<f64>) -> Result<LocalFunction> {
        if center.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: center.len(),
            });
        }
        let norm = center.norm();
        if norm > self.domain_radius * (1.0 + 1e-12) {
            return Err(Error::OutsideDomain {
                norm,
                radius: self.domain_radius,
            });
        }
        let progress = self.progress(center);
        let q = progress.min(self.dim);
        Ok(LocalFunction {
            center: center.clone(),
            columns: self.rotation.columns(0, q).into_owned(),
            chain: self.chain,
            r: self.r,
            progress,
        })
    }
}

/// `x ↦ f(⟨u₁,x⟩, …, ⟨u_q,x⟩, 0, …, 0)`: the only information a query gets.
#[derive(Debug, Clone)]
pub struct LocalFunction {
    pub center: DVector<f64>,
    columns: DMatrix<f64>,
    chain: usize,
    r: f64,
    progress: usize,
}

impl LocalFunction {
    /// Number of rotation columns this answer exposes.
    pub fn revealed(&self) -> usize {
        self.columns.ncols()
    }

    /// Progress index of the query point.
    pub fn progress(&self) -> usize {
        self.progress
    }

    pub fn column(&self, j: usize) -> Option<DVector<f64>> {
        (j < self.revealed()).then(|| self.columns.column(j).into_owned())
    }

    /// Value and the index of the active link, lowest index on ties.
    fn active(&self, x: &DVector<f64>) -> (f64, usize) {
        let coords = self.columns.tr_mul(x);
        let mut best = (f64::NEG_INFINITY, 0);
        for i in 0..self.chain {
            let c = if i < coords.len() { coords[i] } else { 0.0 };
            let v = c - 4.0 * self.r * (i + 1) as f64;
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.active(x).0
    }

    /// `u_i` for the active link `i`, or zero if an unrevealed link is active.
    pub fn subgradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let (_, i) = self.active(x);
        self.column(i).unwrap_or_else(|| DVector::zeros(x.len()))
    }
}

/// An algorithm that sees the problem only through [`LocalFunction`]s.
pub trait QueryStrategy {
    fn start(&mut self, dim: usize, domain_radius: f64) -> DVector<f64>;
    /// Next query from the previous one and the answer there.
    fn step(&mut self, query: &DVector<f64>, answer: &LocalFunction, domain_radius: f64) -> DVector<f64>;
}

fn project_ball(x: DVector<f64>, radius: f64) -> DVector<f64> {
    let n = x.norm();
    if n > radius {
        x * (radius / n)
    } else {
        x
    }
}

/// Projected subgradient descent from the origin with a fixed step.
#[derive(Debug, Clone)]
pub struct SubgradientStrategy {
    pub step: f64,
}

impl QueryStrategy for SubgradientStrategy {
    fn start(&mut self, dim: usize, _: f64) -> DVector<f64> {
        DVector::zeros(dim)
    }

    fn step(&mut self, query: &DVector<f64>, answer: &LocalFunction, domain_radius: f64) -> DVector<f64> {
        let g = answer.subgradient(query);
        let n = g.norm();
        if n == 0.0 {
            return query.clone();
        }
        project_ball(query - g * (self.step / n), domain_radius)
    }
}

/// Queries `R·u_p` with `p` the highest progress seen, gaining one link per query.
#[derive(Debug, Clone, Default)]
pub struct GreedyStrategy {
    best: usize,
}

impl QueryStrategy for GreedyStrategy {
    fn start(&mut self, dim: usize, _: f64) -> DVector<f64> {
        self.best = 0;
        DVector::zeros(dim)
    }

    fn step(&mut self, query: &DVector<f64>, answer: &LocalFunction, domain_radius: f64) -> DVector<f64> {
        self.best = self.best.max(answer.progress());
        match answer.column(self.best - 1) {
            Some(u) => u * domain_radius,
            None => query.clone(),
        }
    }
}

/// Zeroth-order search: perturb the best point seen by a random direction.
#[derive(Debug, Clone)]
pub struct RandomSearchStrategy {
    pub step: f64,
    rng: rand_chacha::ChaCha8Rng,
    best: Option<(DVector<f64>, f64)>,
}

impl RandomSearchStrategy {
    pub fn new(step: f64, seed: u64) -> Self {
        Self {
            step,
            rng: rng(seed),
            best: None,
        }
    }
}

impl QueryStrategy for RandomSearchStrategy {
    fn start(&mut self, dim: usize, _: f64) -> DVector<f64> {
        self.best = None;
        DVector::zeros(dim)
    }

    fn step(&mut self, query: &DVector<f64>, answer: &LocalFunction, domain_radius: f64) -> DVector<f64> {
        let v = answer.value(query);
        if self.best.as_ref().is_none_or(|(_, b)| v < *b) {
            self.best = Some((query.clone(), v));
        }
        let base = &self.best.as_ref().expect("set above").0;
        let dir = DVector::from_fn(query.len(), |_, _| self.rng.sample::<f64, _>(StandardNormal));
        let n = dir.norm().max(f64::MIN_POSITIVE);
        project_ball(base + dir * (self.step / n), domain_radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressRecord {
    /// 1-based query index.
    pub i: usize,
    /// Progress index of `Uᵀx_i`.
    pub progress: usize,
    /// Running maximum of `progress`.
    pub max_progress: usize,
    pub revealed: usize,
    pub value: f64,
    /// `f(x_i)` minus [`ChainInstance::inf_upper_bound`].
    pub suboptimality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProgressTrace {
    pub records: Vec<ProgressRecord>,
    pub inf_bound: f64,
}

impl ProgressTrace {
    /// `progress_i ≤ i` for every recorded query.
    pub fn within_chain(&self) -> bool {
        self.records.iter().all(|r| r.max_progress <= r.i)
    }
}

fn drive<S, F>(strategy: &mut S, inst: &ChainInstance, max_queries: usize, mut stop: F) -> Result<ProgressTrace>
where
    S: QueryStrategy + ?Sized,
    F: FnMut(&ProgressRecord) -> bool,
{
    let inf_bound = inst.inf_upper_bound();
    let mut records = Vec::with_capacity(max_queries);
    let mut x = strategy.start(inst.dim, inst.domain_radius);
    let mut max_progress = 0;
    for i in 1..=max_queries {
        let answer = inst.respond(&x)?;
        let value = inst.value(&x);
        max_progress = max_progress.max(answer.progress());
        let rec = ProgressRecord {
            i,
            progress: answer.progress(),
            max_progress,
            revealed: answer.revealed(),
            value,
            suboptimality: value - inf_bound,
        };
        let done = stop(&rec);
        records.push(rec);
        if done {
            break;
        }
        x = strategy.step(&x, &answer, inst.domain_radius);
    }
    Ok(ProgressTrace { records, inf_bound })
}

/// Runs `budget ≤ N` queries and records progress and suboptimality.
pub fn run_progress_experiment<S: QueryStrategy + ?Sized>(
    strategy: &mut S,
    inst: &ChainInstance,
    budget: usize,
) -> Result<ProgressTrace> {
    if budget > inst.chain {
        return Err(invalid(format!("budget {budget} exceeds chain length {}", inst.chain)));
    }
    drive(strategy, inst, budget, |_| false)
}

/// First query index whose suboptimality drops below `threshold`.
pub fn queries_to_reach<S: QueryStrategy + ?Sized>(
    strategy: &mut S,
    inst: &ChainInstance,
    threshold: f64,
    max_queries: usize,
) -> Result<Option<usize>> {
    let trace = drive(strategy, inst, max_queries, |r| r.suboptimality < threshold)?;
    Ok(trace
        .records
        .last()
        .filter(|r| r.suboptimality < threshold)
        .map(|r| r.i))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub ratio: f64,
    pub r: f64,
    pub chain: usize,
    pub dim: usize,
    pub threshold: f64,
    /// `None` when the query cap was hit first.
    pub queries: Option<usize>,
}

/// For each `R/r`, the number of subgradient queries needed to get below
/// `(R²r)^{1/3}` on a desk-scale instance with `N = ⌊(R/r)^{2/3}/10⌋`. The
/// step equals the threshold, for which the usual subgradient bound gives
/// `O(R²/threshold²)` queries.
pub fn lower_bound_scaling(domain_radius: f64, ratios: &[f64], delta: f64, seed: u64) -> Result<Vec<ScalingRow>> {
    ratios
        .iter()
        .map(|&ratio| {
            let r = domain_radius / ratio;
            let chain = chain_length(domain_radius, r);
            if chain == 0 {
                return Err(invalid(format!("R/r = {ratio} gives an empty chain; need R/r ≥ 10^1.5")));
            }
            let inst = ChainInstance::desk_scale(chain, r, domain_radius, delta, seed)?;
            let threshold = (domain_radius * domain_radius * r).cbrt();
            let cap = (100.0 * (domain_radius / threshold).powi(2)).ceil() as usize + 10 * chain;
            let queries = queries_to_reach(&mut SubgradientStrategy { step: threshold }, &inst, threshold, cap)?;
            debug!("lower bound: R/r = {ratio}, N = {chain}, d = {}, queries = {queries:?}", inst.dim);
            Ok(ScalingRow {
                ratio,
                r,
                chain,
                dim: inst.dim,
                threshold,
                queries,
            })
        })
        .collect()
}
