//! Small dense optimizers: Levenberg-Marquardt for nonlinear least squares
//! and Nelder-Mead for low-dimensional polishing.

use nalgebra::{DMatrix, DVector};

/// Outcome of a minimization run.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: DVector<f64>,
    /// Objective value (for least squares, the sum of squared residuals).
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop once the sum of squares drops below this value.
    pub target: f64,
    /// Central-difference step for the Jacobian.
    pub fd_step: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iter: 400, target: 1e-26, fd_step: 1e-6, initial_damping: 1e-3 }
    }
}

fn jacobian<F>(f: &F, x: &DVector<f64>, m: usize, h: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.clone();
    for j in 0..n {
        let x0 = xp[j];
        xp[j] = x0 + h;
        let fp = f(&xp);
        xp[j] = x0 - h;
        let fm = f(&xp);
        xp[j] = x0;
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    jac
}

/// Minimizes `|f(x)|^2` with Levenberg-Marquardt steps, using a central
/// difference Jacobian (exact up to rounding for quadratic residuals).
pub fn levenberg_marquardt<F>(f: F, x0: DVector<f64>, opts: &LmOptions) -> Minimum
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut x = x0;
    let mut r = f(&x);
    let mut cost = r.norm_squared();
    let mut mu = opts.initial_damping;
    let n = x.len();
    for iter in 0..opts.max_iter {
        if cost < opts.target || !cost.is_finite() {
            return Minimum { x, value: cost, iterations: iter, converged: cost < opts.target };
        }
        let jac = jacobian(&f, &x, r.len(), opts.fd_step);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        if grad.norm() < 1e-300 {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            let scale = (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-30);
            for i in 0..n {
                a[(i, i)] += mu * (jtj[(i, i)] + 1e-12 * scale);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let xn = &x + &step;
            let rn = f(&xn);
            let cn = rn.norm_squared();
            if cn.is_finite() && cn < cost {
                x = xn;
                r = rn;
                cost = cn;
                mu = (mu / 3.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            return Minimum { x, value: cost, iterations: iter, converged: cost < opts.target };
        }
    }
    let converged = cost < opts.target;
    Minimum { x, value: cost, iterations: opts.max_iter, converged }
}

/// Nelder-Mead simplex minimization started from a regular simplex of
/// edge `step` around `x0`.
pub fn nelder_mead<F>(f: F, x0: &DVector<f64>, step: f64, tol: f64, max_iter: usize) -> Minimum
where
    F: Fn(&DVector<f64>) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.clone(), f(x0)));
    for i in 0..n {
        let mut p = x0.clone();
        p[i] += step;
        let v = f(&p);
        simplex.push((p, v));
    }
    let order = |s: &mut Vec<(DVector<f64>, f64)>| {
        s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
    };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        order(&mut simplex);
        let spread = simplex[n].1 - simplex[0].1;
        let size = simplex.iter().skip(1).map(|(p, _)| (p - &simplex[0].0).norm()).fold(0.0, f64::max);
        if spread.abs() <= tol && size <= tol.sqrt() {
            converged = true;
            break;
        }
        let centroid = simplex[..n].iter().fold(DVector::zeros(n), |acc, (p, _)| acc + p) / n as f64;
        let worst = simplex[n].clone();
        let reflect = &centroid + (&centroid - &worst.0);
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand = &centroid + 2.0 * (&centroid - &worst.0);
            let fe = f(&expand);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let (target, ft) = if fr < worst.1 { (reflect, fr) } else { (worst.0.clone(), worst.1) };
            let contract = &centroid + 0.5 * (&target - &centroid);
            let fc = f(&contract);
            if fc < ft {
                simplex[n] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let p = &best + 0.5 * (&entry.0 - &best);
                    let v = f(&p);
                    *entry = (p, v);
                }
            }
        }
    }
    order(&mut simplex);
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, iterations, converged }
}
