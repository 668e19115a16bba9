//! Dense Levenberg-Marquardt over a flat parameter vector with
//! finite-difference Jacobians.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error("residual or Jacobian produced a non-finite value")]
    JacobianNaN,
    #[error("normal equations singular at iteration {iteration}")]
    SingularNormalEquations { iteration: usize },
    #[error("residual evaluation failed: {0}")]
    Residual(String),
}

/// Stopping settings; defaults follow the reference optimizer options
/// (TolX 1e-5, TolFun 1e-5, MaxIter 120, MaxFunEvals 8000).
#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub param_tol: f64,
    pub fn_tol: f64,
    pub max_iters: usize,
    pub max_fn_evals: usize,
    pub initial_lambda: f64,
    pub lambda_up: f64,
    pub lambda_down: f64,
    /// Relative forward-difference step.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            param_tol: 1e-5,
            fn_tol: 1e-5,
            max_iters: 120,
            max_fn_evals: 8000,
            initial_lambda: 1e-3,
            lambda_up: 10.0,
            lambda_down: 0.1,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    StepTolerance,
    CostTolerance,
    MaxIterations,
    MaxFnEvals,
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub params: DVector<f64>,
    pub final_cost: f64,
    pub iterations: usize,
    pub fn_evals: usize,
    pub termination: Termination,
    /// Cost after each accepted step, with the initial cost first;
    /// strictly decreasing by construction.
    pub cost_trace: Vec<f64>,
}

/// Forward differences with per-coordinate step `step * max(1, |x_i|)`.
pub fn numeric_jacobian<F>(
    residual_fn: &mut F,
    x: &DVector<f64>,
    r0: &DVector<f64>,
    step: f64,
) -> Result<DMatrix<f64>, OptimizerError>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>, String>,
{
    let m = r0.len();
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.clone();
    for j in 0..n {
        let h = step * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let rp = residual_fn(&xp).map_err(OptimizerError::Residual)?;
        xp[j] = x[j];
        if rp.iter().any(|v| !v.is_finite()) {
            return Err(OptimizerError::JacobianNaN);
        }
        for i in 0..m {
            jac[(i, j)] = (rp[i] - r0[i]) / h;
        }
    }
    Ok(jac)
}

/// Minimize the sum of squared residuals. A step is accepted only when the
/// cost decreases, so the accepted-cost sequence is strictly decreasing.
pub fn minimize<F>(
    mut residual_fn: F,
    x0: DVector<f64>,
    opts: &LmOptions,
) -> Result<LmResult, OptimizerError>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>, String>,
{
    fn eval_checked<F>(f: &mut F, x: &DVector<f64>, evals: &mut usize) -> Result<DVector<f64>, OptimizerError>
    where
        F: FnMut(&DVector<f64>) -> Result<DVector<f64>, String>,
    {
        *evals += 1;
        let r = f(x).map_err(OptimizerError::Residual)?;
        if r.iter().any(|v| !v.is_finite()) {
            return Err(OptimizerError::JacobianNaN);
        }
        Ok(r)
    }

    let mut x = x0;
    let mut fn_evals = 0usize;
    let mut r = eval_checked(&mut residual_fn, &x, &mut fn_evals)?;
    let mut cost = r.norm_squared();
    let mut cost_trace = vec![cost];
    let mut lambda = opts.initial_lambda;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;

    'outer: for iter in 0..opts.max_iters {
        iterations = iter + 1;
        let jac =
            numeric_jacobian_counted(&mut |xx| residual_fn(xx), &x, &r, opts.fd_step, &mut fn_evals)?;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;

        loop {
            if fn_evals >= opts.max_fn_evals {
                termination = Termination::MaxFnEvals;
                break 'outer;
            }
            let mut damped = jtj.clone();
            for i in 0..damped.nrows() {
                // Marquardt scaling on the diagonal
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let step = damped
                .lu()
                .solve(&(-&jtr))
                .ok_or(OptimizerError::SingularNormalEquations { iteration: iter })?;

            let x_new = &x + &step;
            let r_new = eval_checked(&mut residual_fn, &x_new, &mut fn_evals)?;
            let cost_new = r_new.norm_squared();

            if cost_new < cost {
                let rel_drop = (cost - cost_new) / cost.max(1e-300);
                let step_norm = step.norm();
                x = x_new;
                r = r_new;
                cost = cost_new;
                cost_trace.push(cost);
                lambda = (lambda * opts.lambda_down).max(1e-12);
                if step_norm < opts.param_tol {
                    termination = Termination::StepTolerance;
                    break 'outer;
                }
                if rel_drop < opts.fn_tol {
                    termination = Termination::CostTolerance;
                    break 'outer;
                }
                break;
            }
            lambda *= opts.lambda_up;
            if lambda > 1e12 {
                // no descent direction left at this point
                termination = Termination::StepTolerance;
                break 'outer;
            }
        }
    }

    Ok(LmResult {
        params: x,
        final_cost: cost,
        iterations,
        fn_evals,
        termination,
        cost_trace,
    })
}

fn numeric_jacobian_counted<F>(
    residual_fn: &mut F,
    x: &DVector<f64>,
    r0: &DVector<f64>,
    step: f64,
    fn_evals: &mut usize,
) -> Result<DMatrix<f64>, OptimizerError>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>, String>,
{
    *fn_evals += x.len();
    numeric_jacobian(residual_fn, x, r0, step)
}
