//! Objectives of the form `f(x) = g(Ax − b) [+ w‖x − c‖²_M]`.
//!
//! `g` is one of the separable-or-softmax losses below. Each loss carries
//! its smoothness and quasi-self-concordance (QSC) certificates in `ℓ₂` over
//! the residual space; since `‖h‖_{AᵀA} = ‖Ah‖₂` those certificates carry
//! over to `x`-space in the `M = AᵀA` seminorm with no extra factor.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::SeminormOperator;

/// Inner loss `g` applied to the residual `z = Ax − b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InnerLoss {
    /// `Σ log(1 + exp(−yᵢ zᵢ))` with labels `yᵢ ∈ {−1, +1}`.
    Logistic {
        #[serde(skip)]
        labels: DVector<f64>,
    },
    /// `t · log Σ exp(zᵢ / t)`.
    LogSumExp { t: f64 },
    /// `Σ |zᵢ|^p`.
    Power { p: f64 },
}

impl InnerLoss {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            InnerLoss::Logistic { labels } => {
                check_dim(n, labels.len())?;
                if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
                    return Err(invalid("logistic labels must be -1 or +1"));
                }
            }
            InnerLoss::LogSumExp { t } => {
                if !(*t > 0.0 && t.is_finite()) {
                    return Err(invalid("log-sum-exp temperature must be positive"));
                }
            }
            InnerLoss::Power { p } => {
                if !(*p == 2.0 || (*p > 3.0 && p.is_finite())) {
                    return Err(invalid("power loss needs p = 2 or p > 3"));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        match self {
            InnerLoss::Logistic { labels } => z
                .iter()
                .zip(labels.iter())
                .map(|(&zi, &yi)| softplus(-yi * zi))
                .sum(),
            InnerLoss::LogSumExp { t } => scaled_lse(z, *t),
            InnerLoss::Power { p } => z.iter().map(|zi| zi.abs().powf(*p)).sum(),
        }
    }

    pub fn gradient(&self, z: &DVector<f64>) -> DVector<f64> {
        match self {
            InnerLoss::Logistic { labels } => DVector::from_iterator(
                z.len(),
                z.iter()
                    .zip(labels.iter())
                    .map(|(&zi, &yi)| -yi * sigmoid(-yi * zi)),
            ),
            InnerLoss::LogSumExp { t } => softmax(z, *t),
            InnerLoss::Power { p } => z.map(|zi| p * zi.abs().powf(p - 1.0) * zi.signum()),
        }
    }

    pub fn hessian(&self, z: &DVector<f64>) -> HessianInner {
        match self {
            InnerLoss::Logistic { labels } => HessianInner {
                diagonal: DVector::from_iterator(
                    z.len(),
                    z.iter().zip(labels.iter()).map(|(&zi, &yi)| {
                        let s = sigmoid(yi * zi);
                        s * (1.0 - s)
                    }),
                ),
                rank_one: None,
            },
            InnerLoss::LogSumExp { t } => {
                let s = softmax(z, *t);
                HessianInner {
                    diagonal: &s / *t,
                    rank_one: Some(&s / t.sqrt()),
                }
            }
            InnerLoss::Power { p } => HessianInner {
                // |z|^{p-2} taken as 0 at z = 0 (p > 3 makes it continuous)
                diagonal: z.map(|zi| {
                    if *p == 2.0 {
                        2.0
                    } else if zi == 0.0 {
                        0.0
                    } else {
                        p * (p - 1.0) * zi.abs().powf(p - 2.0)
                    }
                }),
                rank_one: None,
            },
        }
    }

    /// Global smoothness in `ℓ₂`, if one exists.
    pub fn smoothness(&self, n: usize) -> Option<f64> {
        match self {
            InnerLoss::Logistic { .. } => Some(1.0),
            InnerLoss::LogSumExp { t } => Some(n as f64 / t),
            InnerLoss::Power { p } if *p == 2.0 => Some(2.0),
            InnerLoss::Power { .. } => None,
        }
    }

    /// QSC constant in `ℓ₂`, if one exists without regularization.
    pub fn qsc(&self) -> Option<f64> {
        match self {
            InnerLoss::Logistic { .. } => Some(1.0),
            InnerLoss::LogSumExp { t } => Some(2.0 / t),
            InnerLoss::Power { p } if *p == 2.0 => Some(0.0),
            InnerLoss::Power { .. } => None,
        }
    }
}

/// `∇²g = diag(d) − u uᵀ`.
///
/// When present, `u = d / sqrt(Σ d)` (the softmax structure), so the form
/// equals the weighted variance `Σ dᵢ (wᵢ − w̄)²`. Everything below is
/// evaluated in that centered form, which stays accurate when one weight
/// dominates and `diag(d) − uuᵀ` would cancel.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianInner {
    pub diagonal: DVector<f64>,
    pub rank_one: Option<DVector<f64>>,
}

impl HessianInner {
    fn weighted_mean(&self, w: &DVector<f64>) -> f64 {
        let total = self.diagonal.sum();
        if total > 0.0 {
            self.diagonal.dot(w) / total
        } else {
            0.0
        }
    }

    pub fn quad_form(&self, w: &DVector<f64>) -> f64 {
        let m = match self.rank_one {
            Some(_) => self.weighted_mean(w),
            None => 0.0,
        };
        w.iter()
            .zip(self.diagonal.iter())
            .map(|(wi, di)| di * (wi - m) * (wi - m))
            .sum()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let d = &self.diagonal;
        if self.rank_one.is_none() {
            return DMatrix::from_diagonal(d);
        }
        let total = d.sum();
        if total <= 0.0 {
            return DMatrix::zeros(d.len(), d.len());
        }
        DMatrix::from_fn(d.len(), d.len(), |i, j| {
            if i == j {
                // d_i (1 − d_i/S) with the complement summed directly
                let rest: f64 = d.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, v)| v).sum();
                d[i] * rest / total
            } else {
                -d[i] * d[j] / total
            }
        })
    }
}

/// Quadratic regularizer `weight · ‖x − center‖²_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadReg {
    pub weight: f64,
    pub center: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct ComposedObjective {
    a: DMatrix<f64>,
    b: DVector<f64>,
    inner: InnerLoss,
    metric: SeminormOperator,
    quad_reg: Option<QuadReg>,
}

impl ComposedObjective {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, inner: InnerLoss) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        inner.validate(a.nrows())?;
        let metric = SeminormOperator::from_factor(a.clone())?;
        Ok(Self {
            a,
            b,
            inner,
            metric,
            quad_reg: None,
        })
    }

    pub fn logistic(a: DMatrix<f64>, labels: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, DVector::zeros(n), InnerLoss::Logistic { labels })
    }

    pub fn log_sum_exp(a: DMatrix<f64>, b: DVector<f64>, t: f64) -> Result<Self> {
        Self::new(a, b, InnerLoss::LogSumExp { t })
    }

    pub fn power(a: DMatrix<f64>, b: DVector<f64>, p: f64) -> Result<Self> {
        Self::new(a, b, InnerLoss::Power { p })
    }

    /// Same objective plus `weight · ‖x − center‖²_M` (replacing any
    /// existing regularizer).
    pub fn with_quad_reg(&self, weight: f64, center: DVector<f64>) -> Result<Self> {
        check_dim(self.dim(), center.len())?;
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(invalid("regularizer weight must be finite and nonnegative"));
        }
        let mut out = self.clone();
        out.quad_reg = Some(QuadReg { weight, center });
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn inner(&self) -> &InnerLoss {
        &self.inner
    }

    pub fn metric(&self) -> &SeminormOperator {
        &self.metric
    }

    pub fn quad_reg(&self) -> Option<&QuadReg> {
        self.quad_reg.as_ref()
    }

    fn reg_weight(&self) -> f64 {
        self.quad_reg.as_ref().map_or(0.0, |q| q.weight)
    }

    fn checked_residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(&self.a * x - &self.b)
    }

    pub fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.checked_residual(x)
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let z = self.checked_residual(x)?;
        let mut v = self.inner.value(&z);
        if let Some(q) = &self.quad_reg {
            v += q.weight * self.metric.quad_form(&(x - &q.center))?;
        }
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Value of the loss without the regularizer.
    pub fn unregularized_value(&self, x: &DVector<f64>) -> Result<f64> {
        let z = self.checked_residual(x)?;
        Ok(self.inner.value(&z))
    }

    /// `Aᵀ∇g(Ax − b) + 2w·M(x − c)`; always in `Im(M)`.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let z = self.checked_residual(x)?;
        let mut g = self.a.tr_mul(&self.inner.gradient(&z));
        if let Some(q) = &self.quad_reg {
            let dz = &self.a * (x - &q.center);
            g += self.a.tr_mul(&dz) * (2.0 * q.weight);
        }
        Ok(g)
    }

    pub fn hessian_inner(&self, x: &DVector<f64>) -> Result<HessianInner> {
        let z = self.checked_residual(x)?;
        Ok(self.inner.hessian(&z))
    }

    /// `Aᵀ(∇²g + 2w I)A`, so every linear system downstream has the form
    /// `Aᵀ(D − uuᵀ + λI)A`.
    pub fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let inner = self.hessian_inner(x)?;
        let d = &inner.diagonal;
        // rows recentered at the d-weighted mean row for the softmax structure
        let mut centered = self.a.clone();
        if inner.rank_one.is_some() {
            let total = d.sum();
            if total > 0.0 {
                let mean = self.a.tr_mul(d) / total;
                for mut row in centered.row_iter_mut() {
                    row -= mean.transpose();
                }
            }
        }
        let mut scaled = centered.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= d[i];
        }
        let mut h = centered.tr_mul(&scaled);
        let w = self.reg_weight();
        if w > 0.0 {
            h += self.a.tr_mul(&self.a) * (2.0 * w);
        }
        Ok((&h + h.transpose()) * 0.5)
    }

    /// `uᵀ∇²f(x)u`.
    pub fn hessian_quad_form(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), u.len())?;
        let inner = self.hessian_inner(x)?;
        let au = &self.a * u;
        Ok(inner.quad_form(&au) + 2.0 * self.reg_weight() * au.norm_squared())
    }

    /// Smoothness `L` in `‖·‖_M`, when the loss has a global certificate.
    pub fn smoothness(&self) -> Option<f64> {
        self.inner
            .smoothness(self.rows())
            .map(|l| l + 2.0 * self.reg_weight())
    }

    /// Certified strong convexity in `‖·‖_M` (from the regularizer only).
    pub fn strong_convexity(&self) -> f64 {
        2.0 * self.reg_weight()
    }

    /// QSC constant in `‖·‖_M`.
    pub fn qsc_constant(&self) -> Option<f64> {
        match (&self.inner, self.reg_weight()) {
            (InnerLoss::Power { p }, w) if *p != 2.0 && w > 0.0 => {
                Some(regularized_power_qsc(*p, w))
            }
            (inner, _) => inner.qsc(),
        }
    }

    /// `1 / M_qsc`: the radius within which Hessians agree up to a factor e.
    pub fn qsc_radius(&self) -> Result<f64> {
        match self.qsc_constant() {
            Some(m) if m > 0.0 => Ok(1.0 / m),
            Some(_) => Ok(f64::INFINITY),
            None => Err(Error::NoQscConstant),
        }
    }
}

/// Exact QSC constant of `|s|^p + w·s²` per coordinate, `p > 3`.
///
/// The ratio `p(p−1)(p−2)s^{p−3} / (p(p−1)s^{p−2} + 2w)` peaks at
/// `s* = (2w(p−3) / (p(p−1)))^{1/(p−2)}` with value `p(p−1)s*^{p−3} / (2w)`.
/// This scales as `p · w^{−1/(p−2)}`.
pub fn regularized_power_qsc(p: f64, weight: f64) -> f64 {
    let a = p * (p - 1.0);
    let s_star = (2.0 * weight * (p - 3.0) / a).powf(1.0 / (p - 2.0));
    a * s_star.powf(p - 3.0) / (2.0 * weight)
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

/// `t · log Σ exp(zᵢ / t)` with the max shifted out.
pub fn scaled_lse(z: &DVector<f64>, t: f64) -> f64 {
    let m = z.max();
    m + t * z.iter().map(|zi| ((zi - m) / t).exp()).sum::<f64>().ln()
}

fn softmax(z: &DVector<f64>, t: f64) -> DVector<f64> {
    let m = z.max();
    let e = z.map(|zi| ((zi - m) / t).exp());
    let s = e.sum();
    e / s
}
