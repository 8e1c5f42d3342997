//! Ball-constrained quadratic minimization.
//!
//! Minimizes `Q(x) = −gᵀx + ½xᵀHx` over `‖x − x̄‖_M ≤ r` by bisection on the
//! Lagrange multiplier `λ`, using the fact that `λ ↦ ‖(H + λM)†ĝ‖_M` is
//! nonincreasing.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{PencilDecomposition, SeminormOperator, SYMMETRY_TOLERANCE};

/// Relative slack on the boundary test `‖y‖_M ≤ r`.
pub const BOUNDARY_SLACK: f64 = 1e-12;

/// Smallest multiplier resolution, in units of `u·ε_mach`.
const RESOLUTION_FLOOR: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct TrustRegionProblem<'a> {
    pub center: DVector<f64>,
    pub radius: f64,
    pub linear: DVector<f64>,
    pub hessian: &'a DMatrix<f64>,
    pub metric: &'a SeminormOperator,
    pub accuracy: f64,
    pub mu: f64,
    pub smoothness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionSolution {
    pub point: DVector<f64>,
    pub lambda: f64,
    pub interior: bool,
    /// Linear systems `(H + λM)†` solved, one per multiplier probe.
    pub solves: usize,
    pub iterations: usize,
}

/// One-shot solve.
pub fn solve_tr(prob: &TrustRegionProblem<'_>) -> Result<TrustRegionSolution> {
    if !(prob.mu <= prob.smoothness) {
        return Err(invalid("strong convexity must not exceed smoothness"));
    }
    TrustRegionSolver::new(prob.hessian, prob.metric)?.solve(
        &prob.center,
        prob.radius,
        &prob.linear,
        prob.accuracy,
        prob.mu,
    )
}

/// Reusable solver for a fixed `(H, M)` pair.
///
/// The pencil decomposition is computed once, so every multiplier probe
/// afterwards costs `O(d)` on precomputed coordinates.
#[derive(Debug, Clone)]
pub struct TrustRegionSolver<'a> {
    hessian: &'a DMatrix<f64>,
    metric: &'a SeminormOperator,
    pencil: PencilDecomposition,
}

impl<'a> TrustRegionSolver<'a> {
    pub fn new(hessian: &'a DMatrix<f64>, metric: &'a SeminormOperator) -> Result<Self> {
        check_dim(metric.dim(), hessian.nrows())?;
        check_dim(metric.dim(), hessian.ncols())?;
        let scale = hessian.amax().max(f64::MIN_POSITIVE);
        let asym = (hessian - hessian.transpose()).amax() / scale;
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric(asym));
        }
        let pencil = PencilDecomposition::new(hessian, metric)?;
        let floor = -metric.rank_tolerance() * pencil.max_eigenvalue().abs().max(1.0);
        if pencil.min_eigenvalue() < floor {
            return Err(Error::NotPsd(pencil.min_eigenvalue()));
        }
        Ok(Self {
            hessian,
            metric,
            pencil,
        })
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        self.hessian
    }

    pub fn metric(&self) -> &SeminormOperator {
        self.metric
    }

    pub fn pencil(&self) -> &PencilDecomposition {
        &self.pencil
    }

    /// `x̄ + (H + λM)†(g − Hx̄)`.
    pub fn point_at(
        &self,
        center: &DVector<f64>,
        linear: &DVector<f64>,
        lambda: f64,
    ) -> Result<DVector<f64>> {
        let shifted = self.shifted(center, linear)?;
        Ok(center + self.pencil.solve(&shifted, lambda))
    }

    fn shifted(&self, center: &DVector<f64>, linear: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.metric.dim(), center.len())?;
        check_dim(self.metric.dim(), linear.len())?;
        let shifted = linear - self.hessian * center;
        self.metric.ensure_in_image(&shifted)?;
        Ok(shifted)
    }

    pub fn solve(
        &self,
        center: &DVector<f64>,
        radius: f64,
        linear: &DVector<f64>,
        accuracy: f64,
        mu: f64,
    ) -> Result<TrustRegionSolution> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("trust-region radius must be positive"));
        }
        if !(accuracy > 0.0) {
            return Err(invalid("trust-region accuracy must be positive"));
        }
        if !(mu > 0.0) {
            return Err(invalid("trust-region strong convexity must be positive"));
        }
        if radius <= accuracy {
            warn!("trust-region radius {radius:.3e} does not exceed accuracy {accuracy:.3e}");
        }
        let shifted = self.shifted(center, linear)?;
        let coords = self.pencil.coordinates(&shifted);
        let gnorm = coords.norm();
        if gnorm == 0.0 {
            return Ok(TrustRegionSolution {
                point: center.clone(),
                lambda: 0.0,
                interior: true,
                solves: 1,
                iterations: 0,
            });
        }
        let inside = |lambda: f64| {
            self.pencil.solution_seminorm(&coords, lambda) <= radius * (1.0 + BOUNDARY_SLACK)
        };
        if inside(0.0) {
            return Ok(TrustRegionSolution {
                point: center + self.pencil.solve_coordinates(&coords, 0.0),
                lambda: 0.0,
                interior: true,
                solves: 1,
                iterations: 0,
            });
        }

        // ‖(H + λM)†ĝ‖_M ≤ ‖ĝ‖_{M†}/λ, so u is feasible.
        let mut lo = 0.0;
        let mut hi = gnorm / radius;
        let iota = (accuracy * mu * mu / gnorm).max(RESOLUTION_FLOOR * f64::EPSILON * hi);
        let budget = ((hi - lo) / iota).log2().ceil().max(0.0) as usize + 5;
        let mut iterations = 0;
        while hi - lo > iota {
            if iterations >= budget {
                return Err(Error::BudgetExceeded {
                    routine: "solve_tr",
                    iterations,
                });
            }
            let mid = 0.5 * (lo + hi);
            if inside(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            iterations += 1;
        }
        Ok(TrustRegionSolution {
            point: center + self.pencil.solve_coordinates(&coords, hi),
            lambda: hi,
            interior: false,
            solves: iterations + 2,
            iterations,
        })
    }
}

/// `Q(x) = −gᵀx + ½xᵀHx`.
pub fn quadratic_value(hessian: &DMatrix<f64>, linear: &DVector<f64>, x: &DVector<f64>) -> f64 {
    -linear.dot(x) + 0.5 * x.dot(&(hessian * x))
}
