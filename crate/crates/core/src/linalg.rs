//! Seminorm arithmetic and pseudoinverse solves.
//!
//! Everything downstream measures distances in `‖x‖_M = sqrt(xᵀMx)` for a
//! symmetric PSD matrix `M` (in the regression drivers `M = AᵀA`) and
//! gradients in the dual seminorm `sqrt(gᵀM†g)`. The pseudoinverse is taken
//! from a symmetric eigendecomposition with a relative eigenvalue cutoff.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, invalid, Error, Result};

/// Relative eigenvalue cutoff below which a direction counts as kernel.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Relative size of the out-of-image component tolerated before a vector is
/// rejected as "not in the image".
pub const IMAGE_TOLERANCE: f64 = 1e-8;

pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// A symmetric PSD matrix `M` together with the eigendecomposition used for
/// its pseudoinverse.
#[derive(Debug, Clone)]
pub struct SeminormOperator {
    matrix: DMatrix<f64>,
    factor: Option<DMatrix<f64>>,
    rank_tol: f64,
    image_eigenvalues: DVector<f64>,
    image_vectors: DMatrix<f64>,
    kernel_vectors: DMatrix<f64>,
}

impl SeminormOperator {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        Self::build(matrix, None, RANK_TOLERANCE)
    }

    pub fn from_matrix_with_tolerance(matrix: DMatrix<f64>, rank_tol: f64) -> Result<Self> {
        if !(rank_tol > 0.0 && rank_tol < 1.0) {
            return Err(invalid("rank tolerance must lie in (0, 1)"));
        }
        Self::build(matrix, None, rank_tol)
    }

    /// Builds `M = AᵀA` and keeps `A` around so that `‖x‖_M` is evaluated
    /// as `‖Ax‖₂`.
    pub fn from_factor(factor: DMatrix<f64>) -> Result<Self> {
        let matrix = factor.transpose() * &factor;
        Self::build(matrix, Some(factor), RANK_TOLERANCE)
    }

    pub fn identity(dim: usize) -> Self {
        Self::build(DMatrix::identity(dim, dim), None, RANK_TOLERANCE)
            .expect("identity is a valid seminorm")
    }

    fn build(
        matrix: DMatrix<f64>,
        factor: Option<DMatrix<f64>>,
        rank_tol: f64,
    ) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = matrix.norm();
        let asym = (&matrix - matrix.transpose()).norm();
        if scale > 0.0 && asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::NotSymmetric(asym / scale));
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        if let Some(a) = &factor {
            let err = (&sym - a.transpose() * a).norm();
            if scale > 0.0 && err > 1e-10 * scale {
                return Err(Error::FactorMismatch(err / scale));
            }
        }

        let d = sym.nrows();
        let eig = sym.clone().symmetric_eigen();
        let max_eig = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
        let cutoff = rank_tol * max_eig;
        let min_eig = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.min(v));
        // Negative eigenvalues within the cutoff are round-off, clamped to zero.
        if min_eig < -cutoff || (max_eig == 0.0 && min_eig < 0.0) {
            return Err(Error::NotPsd(min_eig));
        }

        let image: Vec<usize> = (0..d)
            .filter(|&i| max_eig > 0.0 && eig.eigenvalues[i] > cutoff)
            .collect();
        let kernel: Vec<usize> = (0..d).filter(|i| !image.contains(i)).collect();
        let image_vectors = eig.eigenvectors.select_columns(image.iter());
        let kernel_vectors = eig.eigenvectors.select_columns(kernel.iter());
        let image_eigenvalues =
            DVector::from_iterator(image.len(), image.iter().map(|&i| eig.eigenvalues[i]));

        Ok(Self {
            matrix: sym,
            factor,
            rank_tol,
            image_eigenvalues,
            image_vectors,
            kernel_vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.image_eigenvalues.len()
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tol
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn factor(&self) -> Option<&DMatrix<f64>> {
        self.factor.as_ref()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.image_eigenvalues.iter().fold(0.0, |m, &v| m.max(v))
    }

    /// Orthonormal basis (columns) of `Im(M)`.
    pub fn image_basis(&self) -> &DMatrix<f64> {
        &self.image_vectors
    }

    /// Orthonormal basis (columns) of `ker(M)`.
    pub fn kernel_basis(&self) -> &DMatrix<f64> {
        &self.kernel_vectors
    }

    pub fn image_eigenvalues(&self) -> &DVector<f64> {
        &self.image_eigenvalues
    }

    /// `W = V₊ diag(m₊^{-1/2})`, so that `WᵀMW = I` on the image.
    pub fn whitening(&self) -> DMatrix<f64> {
        let mut w = self.image_vectors.clone();
        for (j, mut col) in w.column_iter_mut().enumerate() {
            col /= self.image_eigenvalues[j].sqrt();
        }
        w
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(&self.matrix * x)
    }

    /// `xᵀMx`, clamped at zero.
    pub fn quad_form(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let q = match &self.factor {
            Some(a) => (a * x).norm_squared(),
            None => x.dot(&(&self.matrix * x)),
        };
        Ok(q.max(0.0))
    }

    pub fn seminorm(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.quad_form(x)?.sqrt())
    }

    /// Orthogonal projection onto `Im(M)`.
    pub fn project_image(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), g.len())?;
        let coords = self.image_vectors.tr_mul(g);
        Ok(&self.image_vectors * coords)
    }

    /// Relative size of the component of `g` outside `Im(M)`.
    pub fn image_residual(&self, g: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), g.len())?;
        let gn = g.norm();
        if gn == 0.0 {
            return Ok(0.0);
        }
        let outside = self.kernel_vectors.tr_mul(g).norm();
        Ok(outside / gn)
    }

    pub(crate) fn ensure_in_image(&self, g: &DVector<f64>) -> Result<()> {
        let res = self.image_residual(g)?;
        if res > IMAGE_TOLERANCE {
            Err(Error::NotInImage(res))
        } else {
            Ok(())
        }
    }

    /// `M†g` for `g ∈ Im(M)`; the small out-of-image part is projected away.
    pub fn pinv_apply(&self, g: &DVector<f64>) -> Result<DVector<f64>> {
        self.ensure_in_image(g)?;
        let mut coords = self.image_vectors.tr_mul(g);
        coords.component_div_assign(&self.image_eigenvalues);
        Ok(&self.image_vectors * coords)
    }

    /// `sqrt(gᵀM†g)`.
    pub fn dual_seminorm(&self, g: &DVector<f64>) -> Result<f64> {
        self.ensure_in_image(g)?;
        let coords = self.image_vectors.tr_mul(g);
        let q: f64 = coords
            .iter()
            .zip(self.image_eigenvalues.iter())
            .map(|(c, m)| c * c / m)
            .sum();
        Ok(q.max(0.0).sqrt())
    }

    /// Largest `‖Hv‖ / ‖H‖` over the kernel basis of `M`.
    pub fn kernel_leak(&self, h: &DMatrix<f64>) -> Result<f64> {
        check_dim(self.dim(), h.nrows())?;
        check_dim(self.dim(), h.ncols())?;
        let scale = h.norm();
        if scale == 0.0 || self.kernel_vectors.ncols() == 0 {
            return Ok(0.0);
        }
        let leak = (h * &self.kernel_vectors)
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        Ok(leak / scale)
    }
}

/// The system `(H + λM) x = rhs`, solved in the pseudoinverse sense.
#[derive(Debug, Clone)]
pub struct RegularizedSystem<'a> {
    h: DMatrix<f64>,
    metric: &'a SeminormOperator,
    lambda: f64,
}

impl<'a> RegularizedSystem<'a> {
    pub fn new(h: DMatrix<f64>, metric: &'a SeminormOperator, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid("regularization weight must be finite and nonnegative"));
        }
        check_dim(metric.dim(), h.nrows())?;
        check_dim(metric.dim(), h.ncols())?;
        let scale = h.norm();
        let asym = (&h - h.transpose()).norm();
        if scale > 0.0 && asym > SYMMETRY_TOLERANCE * scale {
            return Err(Error::NotSymmetric(asym / scale));
        }
        let leak = metric.kernel_leak(&h)?;
        if leak > IMAGE_TOLERANCE {
            return Err(Error::KernelMismatch(leak));
        }
        Ok(Self {
            h: (&h + h.transpose()) * 0.5,
            metric,
            lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        &self.h + self.metric.matrix() * self.lambda
    }

    /// Minimum-norm solution of `(H + λM)x = rhs`.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.metric.dim(), rhs.len())?;
        let eig = self.matrix().symmetric_eigen();
        let max_eig = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let cutoff = RANK_TOLERANCE * max_eig;
        let rn = rhs.norm();
        let mut x = DVector::zeros(rhs.len());
        let mut outside = 0.0;
        for (i, v) in eig.eigenvectors.column_iter().enumerate() {
            let c = v.dot(rhs);
            let s = eig.eigenvalues[i];
            if max_eig > 0.0 && s > cutoff {
                x.axpy(c / s, &v, 1.0);
            } else {
                outside += c * c;
            }
        }
        if rn > 0.0 && outside.sqrt() > IMAGE_TOLERANCE * rn {
            return Err(Error::NotInImage(outside.sqrt() / rn));
        }
        Ok(x)
    }
}

/// Simultaneous diagonalization of `H` and `M` on `Im(M)`.
///
/// With `B = W Q` where `W` whitens `M` and `Q` diagonalizes `WᵀHW`, we have
/// `BᵀMB = I`, `BᵀHB = diag(h)`, and for `g ∈ Im(M)`
/// `(H + λM)†g = B diag(1/(h + λ)) Bᵀg` and `‖B c‖_M = ‖c‖₂`.
/// Requires `H` and `M` to share a kernel.
#[derive(Debug, Clone)]
pub struct PencilDecomposition {
    basis: DMatrix<f64>,
    eigenvalues: DVector<f64>,
}

impl PencilDecomposition {
    pub fn new(h: &DMatrix<f64>, metric: &SeminormOperator) -> Result<Self> {
        check_dim(metric.dim(), h.nrows())?;
        check_dim(metric.dim(), h.ncols())?;
        let leak = metric.kernel_leak(h)?;
        if leak > IMAGE_TOLERANCE {
            return Err(Error::KernelMismatch(leak));
        }
        let w = metric.whitening();
        let reduced = w.tr_mul(&(h * &w));
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        let eig = reduced.symmetric_eigen();
        Ok(Self {
            basis: w * eig.eigenvectors,
            eigenvalues: eig.eigenvalues,
        })
    }

    /// Generalized eigenvalues of `(H, M)` on `Im(M)`.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// `Bᵀg`; its Euclidean norm equals `‖g‖_{M†}` when `g ∈ Im(M)`.
    pub fn coordinates(&self, g: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(g)
    }

    /// `‖(H + λM)†g‖_M` from precomputed coordinates.
    pub fn solution_seminorm(&self, coords: &DVector<f64>, lambda: f64) -> f64 {
        coords
            .iter()
            .zip(self.eigenvalues.iter())
            .map(|(c, h)| {
                let s = h + lambda;
                if s > 0.0 {
                    (c / s).powi(2)
                } else if *c == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `(H + λM)†g` from precomputed coordinates.
    pub fn solve_coordinates(&self, coords: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let scaled = DVector::from_iterator(
            coords.len(),
            coords
                .iter()
                .zip(self.eigenvalues.iter())
                .map(|(c, h)| if h + lambda > 0.0 { c / (h + lambda) } else { 0.0 }),
        );
        &self.basis * scaled
    }

    pub fn solve(&self, g: &DVector<f64>, lambda: f64) -> DVector<f64> {
        self.solve_coordinates(&self.coordinates(g), lambda)
    }
}
