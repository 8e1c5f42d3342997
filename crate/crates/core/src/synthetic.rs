//! Seeded synthetic instances.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(len: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Logistic data with labels from a planted direction, a fraction of them
/// flipped so the data is not separable.
#[derive(Debug, Clone)]
pub struct LogisticInstance {
    pub a: DMatrix<f64>,
    pub labels: DVector<f64>,
    pub planted: DVector<f64>,
}

pub fn logistic_instance(n: usize, d: usize, flip: f64, seed: u64) -> LogisticInstance {
    let mut rng = rng(seed);
    let a = gaussian_matrix(n, d, &mut rng) / (d as f64).sqrt();
    let planted = gaussian_vector(d, &mut rng);
    let margins = &a * &planted;
    let labels = margins.map(|m| {
        let y = if m >= 0.0 { 1.0 } else { -1.0 };
        if rng.random::<f64>() < flip {
            -y
        } else {
            y
        }
    });
    LogisticInstance { a, labels, planted }
}

/// Regression data `b = A x̂ + noise·g`.
#[derive(Debug, Clone)]
pub struct RegressionInstance {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub planted: DVector<f64>,
}

pub fn regression_instance(n: usize, d: usize, noise: f64, seed: u64) -> RegressionInstance {
    let mut rng = rng(seed);
    let a = gaussian_matrix(n, d, &mut rng);
    let planted = gaussian_vector(d, &mut rng);
    let b = &a * &planted + gaussian_vector(n, &mut rng) * noise;
    RegressionInstance { a, b, planted }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_deterministic() {
        let a = logistic_instance(10, 3, 0.1, 7);
        let b = logistic_instance(10, 3, 0.1, 7);
        assert_eq!(a.a, b.a);
        assert_eq!(a.labels, b.labels);
        assert!(a.labels.iter().all(|&y| y == 1.0 || y == -1.0));
        let c = regression_instance(5, 2, 0.0, 1);
        assert!((&c.a * &c.planted - &c.b).norm() < 1e-12);
    }
}
