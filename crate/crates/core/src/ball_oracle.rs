//! Ball optimization oracles.
//!
//! A `(δ, r)`-ball oracle returns a point within `δ` (in `‖·‖_M`) of the
//! minimizer of `f` over `{x : ‖x − x̄‖_M ≤ r}`. [`AccelNewtonOracle`] does
//! this for Hessian-stable objectives with a handful of trust-region solves
//! against the frozen Hessian `∇²f(x̄)`. [`BruteForceOracle`] is a slow
//! projected-gradient reference for tiny dimensions.

use log::warn;
use nalgebra::DVector;

use crate::error::{check_dim, invalid, Error, Result};
use crate::objectives::ComposedObjective;
use crate::trust_region::TrustRegionSolver;

/// Result of one ball-oracle query.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleOutput {
    pub point: DVector<f64>,
    /// Linear systems `(H + λM)†` solved.
    pub solves: usize,
    pub iterations: usize,
}

pub trait BallOracle {
    fn radius(&self) -> f64;
    fn accuracy(&self) -> f64;
    fn query(&self, obj: &ComposedObjective, center: &DVector<f64>) -> Result<OracleOutput>;
}

/// `(δ, r)` contract plus the constants the accelerated Newton method needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallOracleSpec {
    pub delta: f64,
    pub radius: f64,
    /// Hessian stability factor `c ≥ 1`.
    pub stability: f64,
    pub mu: f64,
    pub smoothness: f64,
    /// Bound on `‖x̄ − x*‖_M`.
    pub diameter: f64,
}

impl BallOracleSpec {
    /// Validates the contract. Without a diameter bound `10·r` is used.
    pub fn new(
        delta: f64,
        radius: f64,
        stability: f64,
        mu: f64,
        smoothness: f64,
        diameter: Option<f64>,
    ) -> Result<Self> {
        if !(delta > 0.0 && radius >= delta && radius.is_finite()) {
            return Err(invalid("ball oracle needs r ≥ δ > 0"));
        }
        if !(stability >= 1.0 && stability.is_finite()) {
            return Err(invalid("stability factor must be at least 1"));
        }
        if !(mu > 0.0 && mu <= smoothness && smoothness.is_finite()) {
            return Err(invalid("ball oracle needs 0 < μ ≤ L"));
        }
        let diameter = match diameter {
            Some(d) if d >= 0.0 && d.is_finite() => d,
            Some(_) => return Err(invalid("diameter bound must be finite and nonnegative")),
            None => {
                warn!("no diameter bound for ball oracle, using 10·r");
                10.0 * radius
            }
        };
        Ok(Self {
            delta,
            radius,
            stability,
            mu,
            smoothness,
            diameter,
        })
    }

    /// Trust-region accuracy `Δ = μδ² / (4Lc(5r + D))`.
    pub fn tr_accuracy(&self) -> f64 {
        self.mu * self.delta * self.delta
            / (4.0 * self.smoothness * self.stability * (5.0 * self.radius + self.diameter))
    }

    /// `K = ⌈c · ln(2c·L(Dr + cr²) / (μδ²))⌉`.
    pub fn iteration_count(&self) -> usize {
        let (c, r) = (self.stability, self.radius);
        let ratio = 2.0 * c * self.smoothness * (self.diameter * r + c * r * r)
            / (self.mu * self.delta * self.delta);
        (c * ratio.max(1.0).ln()).ceil().max(1.0) as usize
    }
}

/// Accelerated Newton method inside the ball.
#[derive(Debug, Clone)]
pub struct AccelNewtonOracle {
    spec: BallOracleSpec,
}

impl AccelNewtonOracle {
    pub fn new(spec: BallOracleSpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &BallOracleSpec {
        &self.spec
    }
}

impl BallOracle for AccelNewtonOracle {
    fn radius(&self) -> f64 {
        self.spec.radius
    }

    fn accuracy(&self) -> f64 {
        self.spec.delta
    }

    fn query(&self, obj: &ComposedObjective, center: &DVector<f64>) -> Result<OracleOutput> {
        check_dim(obj.dim(), center.len())?;
        let spec = &self.spec;
        let metric = obj.metric();
        let h = obj.hessian(center)?;
        let solver = TrustRegionSolver::new(&h, metric)?;
        let alpha = 1.0 / spec.stability;
        let tr_accuracy = spec.tr_accuracy();
        let iterations = spec.iteration_count();

        let mut x = center.clone();
        let mut z = center.clone();
        let mut solves = 0;
        for _ in 0..iterations {
            let y = (&x + &z * alpha) / (1.0 + alpha);
            let anchor = &y * alpha + &z * (1.0 - alpha);
            let g = &h * anchor - obj.gradient(&y)?;
            let sol = solver.solve(center, spec.radius, &g, tr_accuracy, spec.mu)?;
            solves += sol.solves;
            z = sol.point;
            x = &z * alpha + &x * (1.0 - alpha);
        }
        let point = clip_to_ball(obj, center, z, spec.radius)?;
        Ok(OracleOutput {
            point,
            solves,
            iterations,
        })
    }
}

fn clip_to_ball(
    obj: &ComposedObjective,
    center: &DVector<f64>,
    point: DVector<f64>,
    radius: f64,
) -> Result<DVector<f64>> {
    let step = &point - center;
    let dist = obj.metric().seminorm(&step)?;
    if dist > radius {
        Ok(center + step * (radius / dist))
    } else {
        Ok(point)
    }
}

/// Projected gradient over the `M`-ball for `d ≤ 3`.
///
/// Works in whitened coordinates `x = x̄ + Wc`, where the ball becomes the
/// Euclidean ball `‖c‖₂ ≤ r`. Uses backtracking and Nesterov momentum with
/// function-value restarts.
#[derive(Debug, Clone, Copy)]
pub struct BruteForceOracle {
    pub radius: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl BruteForceOracle {
    pub fn new(radius: f64, tol: f64) -> Self {
        Self {
            radius,
            tol,
            max_iterations: 2_000_000,
        }
    }
}

impl BallOracle for BruteForceOracle {
    fn radius(&self) -> f64 {
        self.radius
    }

    fn accuracy(&self) -> f64 {
        self.tol
    }

    fn query(&self, obj: &ComposedObjective, center: &DVector<f64>) -> Result<OracleOutput> {
        brute_force_ball(obj, center, self.radius, self.tol, self.max_iterations)
    }
}

pub fn brute_force_ball(
    obj: &ComposedObjective,
    center: &DVector<f64>,
    radius: f64,
    tol: f64,
    max_iterations: usize,
) -> Result<OracleOutput> {
    let d = obj.dim();
    if d > 3 {
        return Err(Error::ReferenceTooLarge(d));
    }
    check_dim(d, center.len())?;
    if !(radius > 0.0 && tol > 0.0) {
        return Err(invalid("brute-force oracle needs positive radius and tolerance"));
    }
    let w = obj.metric().whitening();
    let k = w.ncols();
    let project = |c: DVector<f64>| {
        let n = c.norm();
        if n > radius {
            c * (radius / n)
        } else {
            c
        }
    };
    let lift = |c: &DVector<f64>| center + &w * c;
    let value = |c: &DVector<f64>| obj.value(&lift(c));
    let grad = |c: &DVector<f64>| obj.gradient(&lift(c)).map(|g| w.tr_mul(&g));

    let mut c = DVector::zeros(k);
    let mut prev = c.clone();
    let mut momentum = 1.0f64;
    let mut step = 1.0f64;
    let mut f_c = value(&c)?;
    for it in 0..max_iterations {
        let beta = (momentum - 1.0) / (momentum + 1.0);
        let y = &c + (&c - &prev) * beta;
        let f_y = value(&y)?;
        let g_y = grad(&y)?;
        let next = loop {
            let cand = project(&y - &g_y * step);
            let diff = &cand - &y;
            let f_cand = value(&cand)?;
            if f_cand <= f_y + g_y.dot(&diff) + diff.norm_squared() / (2.0 * step) {
                break cand;
            }
            step *= 0.5;
            if step < 1e-300 {
                return Err(Error::BudgetExceeded {
                    routine: "brute_force_ball",
                    iterations: it,
                });
            }
        };
        let f_next = value(&next)?;
        let moved = (&next - &c).norm();
        if f_next > f_c {
            // value comparisons stop resolving progress near √ε; finish with
            // plain projected gradient, which contracts without them
            if moved < 1e-6 * (1.0 + c.norm()) {
                for polish in it..max_iterations {
                    let next = project(&c - grad(&c)? * step);
                    let moved = (&next - &c).norm();
                    c = next;
                    if moved < tol {
                        return Ok(OracleOutput {
                            point: lift(&c),
                            solves: 0,
                            iterations: polish + 1,
                        });
                    }
                }
                break;
            }
            momentum = 1.0;
            prev = c.clone();
            continue;
        }
        prev = std::mem::replace(&mut c, next);
        f_c = f_next;
        momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        step *= 1.25;
        if moved < tol && step * projected_step(&c, &grad(&c)?, step, radius) < 1e-2 * tol {
            return Ok(OracleOutput {
                point: lift(&c),
                solves: 0,
                iterations: it + 1,
            });
        }
    }
    Err(Error::BudgetExceeded {
        routine: "brute_force_ball",
        iterations: max_iterations,
    })
}

fn projected_step(c: &DVector<f64>, g: &DVector<f64>, step: f64, radius: f64) -> f64 {
    let mut cand = c - g * step;
    let n = cand.norm();
    if n > radius {
        cand *= radius / n;
    }
    (cand - c).norm() / step
}
