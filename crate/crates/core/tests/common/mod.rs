//! Independent reference solvers for the integration and acceptance tests.
#![allow(dead_code)]

use ball_accel::objectives::ComposedObjective;
use nalgebra::{DMatrix, DVector};

/// Damped Newton with backtracking, using a dense pseudoinverse of the
/// Hessian. Runs until the Newton decrement is at round-off level.
pub fn damped_newton(obj: &ComposedObjective, x0: &DVector<f64>, iters: usize) -> DVector<f64> {
    let mut x = x0.clone();
    for _ in 0..iters {
        let g = obj.gradient(&x).unwrap();
        let h = obj.hessian(&x).unwrap();
        let scale = h.amax().max(1e-300);
        let step = (h.clone() + DMatrix::identity(h.nrows(), h.nrows()) * (1e-14 * scale))
            .pseudo_inverse(1e-14 * scale)
            .unwrap()
            * &g;
        let decrement = g.dot(&step);
        if decrement.is_nan() || decrement <= 1e-30 {
            break;
        }
        let f = obj.value(&x).unwrap();
        let mut t = 1.0;
        loop {
            let cand = &x - &step * t;
            if let Ok(fc) = obj.value(&cand) {
                if fc <= f - 0.25 * t * decrement {
                    x = cand;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-20 {
                return x;
            }
        }
    }
    x
}

/// `min_x ‖Ax − b‖∞` by enumerating vertices of the epigraph LP
/// `min t s.t. ±(Ax − b) ≤ t`. Desk scale only.
pub fn chebyshev_reference(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let (n, d) = a.shape();
    // constraint rows: s·(a_i x − b_i) − t ≤ 0 for s = ±1
    let mut rows = Vec::new();
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut coef = DVector::zeros(d + 1);
            for j in 0..d {
                coef[j] = s * a[(i, j)];
            }
            coef[d] = -1.0;
            rows.push((coef, s * b[i]));
        }
    }
    let m = rows.len();
    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut idx: Vec<usize> = (0..=d).collect();
    loop {
        let mut sys = DMatrix::zeros(d + 1, d + 1);
        let mut rhs = DVector::zeros(d + 1);
        for (r, &k) in idx.iter().enumerate() {
            sys.set_row(r, &rows[k].0.transpose());
            rhs[r] = rows[k].1;
        }
        if let Some(sol) = sys.lu().solve(&rhs) {
            let x = sol.rows(0, d).into_owned();
            let val = (a * &x - b).amax();
            if best.as_ref().is_none_or(|(_, v)| val < *v) {
                best = Some((x, val));
            }
        }
        // next combination
        let mut i = d as isize;
        while i >= 0 && idx[i as usize] == m - (d + 1) + i as usize {
            i -= 1;
        }
        if i < 0 {
            break;
        }
        idx[i as usize] += 1;
        for j in (i as usize + 1)..=d {
            idx[j] = idx[j - 1] + 1;
        }
    }
    best.unwrap()
}

/// Grid refinement around a center, used to cross-check the LP reference.
pub fn grid_minimum<F: Fn(&DVector<f64>) -> f64>(
    f: F,
    center: &DVector<f64>,
    half_width: f64,
    levels: usize,
) -> (DVector<f64>, f64) {
    let d = center.len();
    let mut c = center.clone();
    let mut w = half_width;
    let steps = 20i32;
    let mut best_val = f(&c);
    for _ in 0..levels {
        let total = (2 * steps + 1).pow(d as u32);
        let mut best = c.clone();
        for idx in 0..total {
            let mut rem = idx;
            let mut x = c.clone();
            for j in 0..d {
                let k = rem % (2 * steps + 1);
                rem /= 2 * steps + 1;
                x[j] += w * (k - steps) as f64 / steps as f64;
            }
            let v = f(&x);
            if v < best_val {
                best_val = v;
                best = x;
            }
        }
        c = best;
        w *= 2.0 / steps as f64;
    }
    (c, best_val)
}

/// Minimizer of `−gᵀx + ½xᵀHx` over `‖x − x̄‖_M ≤ r` by projected gradient
/// in whitened coordinates, for `d ≤ 3`. `w` whitens `M`.
pub fn brute_force_tr(
    center: &DVector<f64>,
    radius: f64,
    g: &DVector<f64>,
    h: &DMatrix<f64>,
    w: &DMatrix<f64>,
) -> DVector<f64> {
    // y = x − x̄ = W c; objective in c: −(g − Hx̄)ᵀWc + ½cᵀWᵀHWc
    let gh = w.tr_mul(&(g - h * center));
    let hh = w.tr_mul(&(h * w));
    let lmax = hh.symmetric_eigenvalues().amax().max(1e-300);
    let step = 1.0 / lmax;
    let proj = |c: DVector<f64>| {
        let n = c.norm();
        if n > radius {
            c * (radius / n)
        } else {
            c
        }
    };
    // start from the best of a coarse sphere/interior sample
    let k = gh.len();
    let mut c = DVector::zeros(k);
    let q = |c: &DVector<f64>| -gh.dot(c) + 0.5 * c.dot(&(&hh * c));
    let mut best = q(&c);
    let samples = 4000;
    for s in 0..samples {
        let mut v = DVector::from_fn(k, |j, _| ((s * (j + 3) * 7919 + j * 104729) % 2001) as f64 / 1000.0 - 1.0);
        let n = v.norm();
        if n > 0.0 {
            v *= radius / n;
        }
        let val = q(&v);
        if val < best {
            best = val;
            c = v;
        }
    }
    let mut prev = c.clone();
    let mut mom = 1.0f64;
    for _ in 0..200_000 {
        let beta = (mom - 1.0) / (mom + 1.0);
        let y = &c + (&c - &prev) * beta;
        let grad = &hh * &y - &gh;
        let next = proj(&y - grad * step);
        if q(&next) > q(&c) {
            mom = 1.0;
            prev = c.clone();
            continue;
        }
        let moved = (&next - &c).norm();
        prev = std::mem::replace(&mut c, next);
        mom = 0.5 * (1.0 + (1.0 + 4.0 * mom * mom).sqrt());
        if moved < 1e-15 * (1.0 + radius) {
            break;
        }
    }
    center + w * c
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// `(H, M)` sharing a kernel of dimension `d − rank`: both are
/// `Q S Qᵀ` for a common orthonormal `Q` and random positive-definite `S`.
pub fn shared_kernel_pair<R: rand::Rng>(d: usize, rank: usize, rng: &mut R) -> (DMatrix<f64>, DMatrix<f64>) {
    let g = ball_accel::synthetic::gaussian_matrix(d, d, rng);
    let q = g.qr().q().columns(0, rank).into_owned();
    let pd = |rng: &mut R| {
        let b = ball_accel::synthetic::gaussian_matrix(rank, rank, rng);
        &b * b.transpose() + DMatrix::identity(rank, rank) * 0.1
    };
    let h = &q * pd(rng) * q.transpose();
    let m = &q * pd(rng) * q.transpose();
    let sym = |a: DMatrix<f64>| (&a + a.transpose()) * 0.5;
    (sym(h), sym(m))
}

/// Central-difference gradient.
pub fn fd_gradient<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// Every objective family on a small random instance, with and without the
/// quadratic regularizer.
pub fn objective_catalog(seed: u64) -> Vec<(String, ComposedObjective)> {
    use ball_accel::synthetic::{gaussian_matrix, gaussian_vector, logistic_instance, rng};
    let mut g = rng(seed);
    let (n, d) = (7, 3);
    let a = gaussian_matrix(n, d, &mut g) * 0.7;
    let b = gaussian_vector(n, &mut g);
    let center = gaussian_vector(d, &mut g);
    let inst = logistic_instance(n, d, 0.2, seed);
    let mut out = vec![
        ("logistic".to_string(), ComposedObjective::logistic(inst.a, inst.labels).unwrap()),
        ("lse t=0.1".to_string(), ComposedObjective::log_sum_exp(a.clone(), b.clone(), 0.1).unwrap()),
        ("lse t=1".to_string(), ComposedObjective::log_sum_exp(a.clone(), b.clone(), 1.0).unwrap()),
    ];
    for p in [2.0, 4.0, 6.0] {
        out.push((format!("power p={p}"), ComposedObjective::power(a.clone(), b.clone(), p).unwrap()));
    }
    let regularized: Vec<_> = out
        .iter()
        .map(|(name, f)| (format!("{name} + reg"), f.with_quad_reg(0.3, center.clone()).unwrap()))
        .collect();
    out.extend(regularized);
    out
}

/// Generalized eigenvalues of `(P, Q)` restricted to the image of `Q`.
pub fn generalized_eigenvalues(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Vec<f64> {
    let eig = q.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let keep: Vec<usize> = (0..q.nrows()).filter(|&i| eig.eigenvalues[i] > 1e-10 * top).collect();
    let k = keep.len();
    // Q = V Λ Vᵀ on its image; whiten with Λ^{-1/2}
    let w = DMatrix::from_fn(q.nrows(), k, |r, c| eig.eigenvectors[(r, keep[c])] / eig.eigenvalues[keep[c]].sqrt());
    let mut s = w.tr_mul(&(p * &w));
    s = (&s + s.transpose()) * 0.5;
    s.symmetric_eigenvalues().iter().copied().collect()
}

/// `W` with `WᵀMW = I` spanning the image of `M`.
pub fn whitening_of(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax().max(1e-300);
    let keep: Vec<usize> = (0..m.nrows()).filter(|&i| eig.eigenvalues[i] > 1e-10 * top).collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |r, c| {
        eig.eigenvectors[(r, keep[c])] / eig.eigenvalues[keep[c]].sqrt()
    })
}

/// `‖x‖_M` straight from the matrix.
pub fn m_norm(m: &DMatrix<f64>, x: &DVector<f64>) -> f64 {
    x.dot(&(m * x)).max(0.0).sqrt()
}

/// A random trust-region instance of dimension `d ≤ 3`: `(H, M, x̄, g, r)`
/// with `g − Hx̄` in the image of `M`.
pub fn random_tr_instance<R: rand::Rng>(
    rng: &mut R,
) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>, DVector<f64>, f64) {
    use ball_accel::synthetic::gaussian_vector;
    let d = rng.random_range(1..=3usize);
    let rank = rng.random_range(1..=d);
    let (h, m) = shared_kernel_pair(d, rank, rng);
    let center = &m * gaussian_vector(d, rng) * 0.5;
    let scale = 10f64.powf(rng.random_range(-1.0..1.5));
    let g = &h * &center + &m * gaussian_vector(d, rng) * scale;
    let r = 10f64.powf(rng.random_range(-1.0..0.5));
    (h, m, center, g, r)
}

/// A regularized logistic instance started at `M`-distance `R` from the
/// unregularized optimum, with the oracle contract the accelerated loop uses.
pub struct LogisticRun {
    pub reg: ComposedObjective,
    /// Minimizer and minimum of `reg`, by reference Newton.
    pub x_star: DVector<f64>,
    pub f_star: f64,
    pub x0: DVector<f64>,
    pub radius_bound: f64,
    pub eps0: f64,
    pub eps: f64,
    pub smoothness: f64,
    pub oracle: ball_accel::ball_oracle::AccelNewtonOracle,
}

pub fn logistic_run(n: usize, d: usize, seed: u64, big_r: f64, r: f64, eps: f64) -> LogisticRun {
    use ball_accel::config::Constants;
    use ball_accel::solvers::{bacon_objective, bacon_oracle_spec};
    use ball_accel::synthetic::{gaussian_vector, logistic_instance, rng};
    let constants = Constants::default();
    let inst = logistic_instance(n, d, 0.2, seed);
    let base = ComposedObjective::logistic(inst.a, inst.labels).unwrap();
    let opt = damped_newton(&base, &DVector::zeros(d), 200);
    let dir = gaussian_vector(d, &mut rng(seed + 1000));
    let dir = &dir / base.metric().seminorm(&dir).unwrap();
    let x0 = &opt + dir * big_r;
    let reg = bacon_objective(&base, &x0, eps, big_r, &constants).unwrap();
    let weight = reg.quad_reg().unwrap().weight;
    let x_star = damped_newton(&reg, &opt, 200);
    let f_star = reg.value(&x_star).unwrap();
    let smoothness = base.smoothness().unwrap() + 2.0 * weight;
    let spec = bacon_oracle_spec(1.0, r, smoothness, weight, big_r, eps, &constants).unwrap();
    LogisticRun {
        eps0: reg.value(&x0).unwrap(),
        reg,
        x_star,
        f_star,
        x0,
        radius_bound: big_r,
        eps,
        smoothness,
        oracle: ball_accel::ball_oracle::AccelNewtonOracle::new(spec),
    }
}

impl LogisticRun {
    pub fn params(&self, f_target: Option<f64>) -> ball_accel::ms_accel::AccelParams {
        ball_accel::ms_accel::AccelParams {
            radius_bound: self.radius_bound,
            eps0: self.eps0,
            eps: self.eps,
            smoothness: self.smoothness,
            f_target,
        }
    }
}
