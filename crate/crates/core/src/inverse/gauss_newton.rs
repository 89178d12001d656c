use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussNewtonOptions {
    /// Tikhonov weight on `‖c‖²`.
    pub lambda: f64,
    pub max_iter: usize,
    /// Relative objective decrease below which the iteration stops.
    pub tol: f64,
    /// Central-difference step of the Jacobian.
    pub fd_step: f64,
}

impl Default for GaussNewtonOptions {
    fn default() -> Self {
        GaussNewtonOptions { lambda: 1e-8, max_iter: 20, tol: 1e-13, fd_step: 1e-4 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussNewtonOutcome {
    pub coefficients: Vec<f64>,
    /// `‖r‖² + λ‖c‖²` before the first and after every step.
    pub history: Vec<f64>,
    /// `‖r‖` at the returned coefficients.
    pub residual_norm: f64,
    pub iterations: usize,
}

fn objective(r: &[f64], c: &[f64], lambda: f64) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>() + lambda * c.iter().map(|v| v * v).sum::<f64>()
}

/// Jacobian by central differences, one column per coefficient.
pub fn jacobian<F>(residual: &F, c: &[f64], step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let cols: Vec<Vec<f64>> = (0..c.len())
        .into_par_iter()
        .map(|k| {
            let mut p = c.to_vec();
            let mut m = c.to_vec();
            p[k] += step;
            m[k] -= step;
            let (rp, rm) = (residual(&p)?, residual(&m)?);
            Ok(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * step)).collect())
        })
        .collect::<Result<_>>()?;
    let rows = cols.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows, c.len(), |i, k| cols[k][i]))
}

/// Tikhonov-regularised Gauss–Newton for `min ‖r(c)‖² + λ‖c‖²`.
///
/// Fails with [`Error::GaussNewtonDivergence`] when the objective rises on
/// two steps.
pub fn gauss_newton<F>(residual: F, c0: &[f64], opts: &GaussNewtonOptions) -> Result<GaussNewtonOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let mut c = c0.to_vec();
    let mut r = residual(&c)?;
    let mut phi = objective(&r, &c, opts.lambda);
    let mut history = vec![phi];
    let mut rises = 0;
    let mut iterations = 0;
    while iterations < opts.max_iter && phi > 0.0 {
        let j = jacobian(&residual, &c, opts.fd_step)?;
        let rv = DVector::from_vec(r.clone());
        let cv = DVector::from_vec(c.clone());
        let n = c.len();
        let a = j.transpose() * &j + DMatrix::identity(n, n) * opts.lambda;
        let b = -(j.transpose() * rv + cv * opts.lambda);
        let delta = match a.clone().cholesky() {
            Some(ch) => ch.solve(&b),
            None => a
                .lu()
                .solve(&b)
                .ok_or_else(|| Error::Degenerate("singular Gauss-Newton system".into()))?,
        };
        let next: Vec<f64> = c.iter().zip(delta.iter()).map(|(x, d)| x + d).collect();
        let r_next = residual(&next)?;
        let phi_next = objective(&r_next, &next, opts.lambda);
        iterations += 1;
        history.push(phi_next);
        if phi_next > phi * (1.0 + 1e-12) {
            rises += 1;
            if rises >= 2 {
                return Err(Error::GaussNewtonDivergence(history));
            }
        }
        let decrease = (phi - phi_next) / phi;
        c = next;
        r = r_next;
        phi = phi_next;
        if decrease.abs() < opts.tol {
            break;
        }
    }
    let residual_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(GaussNewtonOutcome { coefficients: c, history, residual_norm, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_quadratic_least_squares_problem() {
        // r(c) = (c0 + c1² - 1.25, c1 - 0.5, c0 c1 - 0.5)
        let res = |c: &[f64]| Ok(vec![c[0] + c[1] * c[1] - 1.25, c[1] - 0.5, c[0] * c[1] - 0.5]);
        let out = gauss_newton(res, &[0.0, 0.0], &GaussNewtonOptions { lambda: 0.0, ..Default::default() }).unwrap();
        assert!((out.coefficients[0] - 1.0).abs() < 1e-10 && (out.coefficients[1] - 0.5).abs() < 1e-10);
        assert!(out.residual_norm < 1e-10);
    }

    #[test]
    fn regularisation_pulls_to_zero_when_data_vanish() {
        let res = |c: &[f64]| Ok(vec![c[0], 2.0 * c[1]]);
        let out = gauss_newton(res, &[0.0, 0.0], &GaussNewtonOptions::default()).unwrap();
        assert_eq!(out.coefficients, vec![0.0, 0.0]);
    }

    #[test]
    fn rising_objective_aborts() {
        // the Jacobian is taken on a smooth model but the true residual jumps
        let res = |c: &[f64]| {
            let k = c[0].abs() > 1e-4;
            Ok(vec![if k { 10.0 + c[0].abs() * 1e3 } else { 1.0 + c[0] * 1e3 }])
        };
        let err = gauss_newton(res, &[0.0], &GaussNewtonOptions { fd_step: 1e-5, lambda: 0.0, ..Default::default() });
        assert!(matches!(err, Err(Error::GaussNewtonDivergence(_))));
    }
}
