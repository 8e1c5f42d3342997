//! Tunable constants shared by the solvers.
//!
//! Every hidden constant of the algorithms lives here so experiments can
//! override them from one file. Unknown keys are rejected on load.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    /// `C` in the accelerated iteration cap `⌈C (R/r)^{2/3} ln(ε₀/ε)⌉`.
    pub ms_iteration_factor: f64,
    /// `C` in the baseline iteration cap `⌈C (R/r) ln(ε₀/ε)⌉`.
    pub baseline_iteration_factor: f64,
    /// Oracle calls allowed in one multiplier bisection.
    pub bisection_budget: usize,
    /// Distance bound for the accelerated loop, as a multiple of `R`.
    pub ms_diameter_factor: f64,
    /// Distance bound handed to the ball oracle, as a multiple of `R`.
    pub oracle_diameter_factor: f64,
    /// `δ = r / (offset + slope · L R r / ε)`.
    pub oracle_accuracy_offset: f64,
    pub oracle_accuracy_slope: f64,
    /// Regularizer weight `ε / (divisor · R²)`.
    pub regularizer_divisor: f64,
    /// Softmax temperature `t = ε / (divisor · log(2n))`.
    pub linf_temperature_divisor: f64,
    /// `R_k^p = 2^{p + offset} n^{(p−2)/2} ε_{k−1}`.
    pub lp_radius_exponent_offset: f64,
    /// Multiplier on the exact QSC constant of the regularized power loss.
    pub lp_qsc_scale: f64,
    /// Stop the `ℓp` schedule once `ε_k ≤ floor · ε₀`.
    pub lp_relative_floor: f64,
    /// Uncertified radius estimate: factor times one Newton step.
    pub radius_heuristic_factor: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            ms_iteration_factor: 8.0,
            baseline_iteration_factor: 8.0,
            bisection_budget: 200,
            ms_diameter_factor: 18f64.sqrt(),
            oracle_diameter_factor: 3.0 * std::f64::consts::SQRT_2,
            oracle_accuracy_offset: 12.0,
            oracle_accuracy_slope: 126.0,
            regularizer_divisor: 55.0,
            linf_temperature_divisor: 2.0,
            lp_radius_exponent_offset: 1.0,
            lp_qsc_scale: 1.0,
            lp_relative_floor: 1e-13,
            radius_heuristic_factor: 16.0,
        }
    }
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ms_iteration_factor", self.ms_iteration_factor),
            ("baseline_iteration_factor", self.baseline_iteration_factor),
            ("ms_diameter_factor", self.ms_diameter_factor),
            ("oracle_diameter_factor", self.oracle_diameter_factor),
            ("oracle_accuracy_offset", self.oracle_accuracy_offset),
            ("regularizer_divisor", self.regularizer_divisor),
            ("linf_temperature_divisor", self.linf_temperature_divisor),
            ("lp_qsc_scale", self.lp_qsc_scale),
            ("lp_relative_floor", self.lp_relative_floor),
            ("radius_heuristic_factor", self.radius_heuristic_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive and finite")));
            }
        }
        if !(self.oracle_accuracy_slope >= 0.0 && self.oracle_accuracy_slope.is_finite()) {
            return Err(invalid("oracle_accuracy_slope must be nonnegative"));
        }
        if !self.lp_radius_exponent_offset.is_finite() {
            return Err(invalid("lp_radius_exponent_offset must be finite"));
        }
        if self.bisection_budget == 0 {
            return Err(invalid("bisection_budget must be positive"));
        }
        Ok(())
    }
}
