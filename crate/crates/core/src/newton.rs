//! Damped Newton root-finding with a central finite-difference Jacobian.
//!
//! Shared by the braking-burn and flat-planet guidance solvers. Residual
//! evaluations may fail (e.g. a trial burn longer than the propellant
//! allows); failed trials are treated as infinitely bad and absorbed by the
//! step damping.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the scaled residual norm.
    pub tolerance: f64,
    /// Maximum number of step halvings per iteration.
    pub max_halvings: usize,
    /// Relative perturbation per parameter for the Jacobian.
    pub fd_relative_step: f64,
    /// Absolute floor on the perturbation.
    pub fd_min_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            tolerance: 1e-8,
            max_halvings: 5,
            fd_relative_step: 1e-6,
            fd_min_step: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub y: DVector<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
    pub residual_history: Vec<f64>,
}

/// Central-difference Jacobian of `residual` at `y`.
pub fn fd_jacobian<F>(residual: &F, y: &DVector<f64>, options: &NewtonOptions) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = y.len();
    let probe = residual(y)?;
    let m = probe.len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let h = (options.fd_relative_step * y[j].abs()).max(options.fd_min_step);
        let mut y_hi = y.clone();
        let mut y_lo = y.clone();
        y_hi[j] += h;
        y_lo[j] -= h;
        let r_hi = residual(&y_hi)?;
        let r_lo = residual(&y_lo)?;
        for i in 0..m {
            jac[(i, j)] = (r_hi[i] - r_lo[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Solves `residual(y) = 0` starting from `y0`.
pub fn solve<F>(residual: F, y0: DVector<f64>, options: &NewtonOptions) -> Result<NewtonSolution>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut y = y0;
    let mut r = residual(&y)?;
    let mut norm = r.norm();
    let mut history = vec![norm];

    for iteration in 0..options.max_iterations {
        if norm < options.tolerance {
            return Ok(NewtonSolution {
                y,
                iterations: iteration,
                residual_norm: norm,
                residual_history: history,
            });
        }
        let jac = fd_jacobian(&residual, &y, options)?;
        let lu = jac.full_piv_lu();
        let step = lu
            .solve(&r)
            .ok_or(Error::SingularJacobian { iteration })?;

        // damped line search: keep the best trial among halved steps
        let mut best: Option<(DVector<f64>, DVector<f64>, f64)> = None;
        let mut lambda = 1.0;
        for _ in 0..=options.max_halvings {
            let y_trial = &y - &step * lambda;
            if let Ok(r_trial) = residual(&y_trial) {
                let n_trial = r_trial.norm();
                if n_trial.is_finite() {
                    let better = best.as_ref().map_or(true, |(_, _, bn)| n_trial < *bn);
                    if better {
                        best = Some((y_trial, r_trial, n_trial));
                    }
                    if n_trial < norm {
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match best {
            Some((y_new, r_new, n_new)) => {
                y = y_new;
                r = r_new;
                norm = n_new;
                history.push(norm);
            }
            None => {
                return Err(Error::NewtonNonConvergence {
                    iterations: iteration + 1,
                    last_residual: norm,
                    residual_history: history,
                })
            }
        }
    }

    if norm < options.tolerance {
        return Ok(NewtonSolution {
            y,
            iterations: options.max_iterations,
            residual_norm: norm,
            residual_history: history,
        });
    }
    Err(Error::NewtonNonConvergence {
        iterations: options.max_iterations,
        last_residual: norm,
        residual_history: history,
    })
}
