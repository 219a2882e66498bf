//! Small Levenberg-Marquardt driver over real parameter vectors with
//! central finite-difference Jacobians. Shared by the instance generator
//! (projection onto quadratic constraint sets) and the metric search.

use nalgebra::{DMatrix, DVector};

pub struct LmOptions {
    pub max_iters: usize,
    /// Stop when the squared residual norm falls below this.
    pub cost_tol: f64,
    /// Stop when the accepted step is shorter than this.
    pub step_tol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iters: 200, cost_tol: 1e-26, step_tol: 1e-13, fd_step: 1e-6 }
    }
}

pub struct LmOutcome {
    pub params: DVector<f64>,
    pub cost: f64,
    pub iterations: usize,
}

/// Central finite-difference Jacobian of `residual` at `x`.
pub fn fd_jacobian<F>(residual: &F, x: &DVector<f64>, fd_step: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let m = residual(x).len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.clone();
    for j in 0..n {
        let h = fd_step * (1.0 + x[j].abs());
        xp[j] = x[j] + h;
        let rp = residual(&xp);
        xp[j] = x[j] - h;
        let rm = residual(&xp);
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    jac
}

/// Gradient of the squared-norm objective via the FD Jacobian: `2 J^T r`.
pub fn objective_gradient<F>(residual: &F, x: &DVector<f64>, fd_step: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let jac = fd_jacobian(residual, x, fd_step);
    let r = residual(x);
    2.0 * jac.transpose() * r
}

pub fn minimize<F>(residual: F, x0: DVector<f64>, opts: &LmOptions) -> LmOutcome
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut x = x0;
    let mut r = residual(&x);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    let mut iters = 0;

    for _ in 0..opts.max_iters {
        iters += 1;
        if cost < opts.cost_tol {
            break;
        }
        let jac = fd_jacobian(&residual, &x, opts.fd_step);
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        if jtr.norm() < 1e-14 * (1.0 + cost) {
            break;
        }

        let mut stepped = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * (jtj[(i, i)].abs() + 1e-12);
            }
            let Some(delta) = a.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let xc = &x + &delta;
            let rc = residual(&xc);
            let cc = rc.norm_squared();
            if cc < cost {
                let step = delta.norm();
                x = xc;
                r = rc;
                cost = cc;
                lambda = (lambda * 0.35).max(1e-12);
                stepped = true;
                if step < opts.step_tol * (1.0 + x.norm()) {
                    return LmOutcome { params: x, cost, iterations: iters };
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !stepped {
            break;
        }
    }
    LmOutcome { params: x, cost, iterations: iters }
}
