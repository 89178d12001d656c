use rayon::prelude::*;

use crate::forward::WaveField;
use crate::geometry::{Cylinder, Grid3D, TwistProfile};
use crate::operator::DiscreteOperator;
use crate::{Error, Result, C64};

/// Source `(α((θ̇+θ̃̇)∂_φ + 2∂₃) + α̇) ∂_φ u` for one full-grid field, where
/// `α = θ̇ - θ̃̇`. Derivatives of `∂_φ u` are expanded into second
/// differences of `u` so the Dirichlet values are used directly.
pub fn source_level(theta: &TwistProfile, theta_ref: &TwistProfile, grid: &Grid3D, u: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); grid.num_nodes()];
    for &id in grid.interior_nodes() {
        out[id] = source_at(theta, theta_ref, grid, u, id);
    }
    out
}

/// [`source_level`] on the listed nodes only.
pub fn source_on(theta: &TwistProfile, theta_ref: &TwistProfile, grid: &Grid3D, u: &[C64], nodes: &[usize]) -> Vec<C64> {
    nodes.iter().map(|&id| source_at(theta, theta_ref, grid, u, id)).collect()
}

fn source_at(theta: &TwistProfile, theta_ref: &TwistProfile, grid: &Grid3D, u: &[C64], id: usize) -> C64 {
    let x = grid.coords(id);
    let (t, tt) = theta.rate_and_curvature(x[2]);
    let (r, rr) = theta_ref.rate_and_curvature(x[2]);
    let (alpha, dalpha) = (t - r, tt - rr);
    if alpha == 0.0 && dalpha == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let (x1, x2) = (x[0], x[1]);
    let u1 = grid.centred_diff(u, id, 0);
    let u2 = grid.centred_diff(u, id, 1);
    let phi = x1 * u2 - x2 * u1;
    let u11 = grid.second_diff(u, id, 0, 0);
    let u22 = grid.second_diff(u, id, 1, 1);
    let u12 = grid.second_diff(u, id, 0, 1);
    let phi_phi = x1 * x1 * u22 + x2 * x2 * u11 - 2.0 * x1 * x2 * u12 - x1 * u1 - x2 * u2;
    let phi_3 = x1 * grid.second_diff(u, id, 1, 2) - x2 * grid.second_diff(u, id, 0, 2);
    alpha * (t + r) * phi_phi + 2.0 * alpha * phi_3 + dalpha * phi
}

/// Source of the linearized system at every level of `field`. Passing the
/// time derivative of the reference field gives the differentiated source.
pub fn linearized_source(theta: &TwistProfile, theta_ref: &TwistProfile, field: &WaveField, grid: &Grid3D) -> WaveField {
    let levels = field
        .levels
        .par_iter()
        .map(|l| grid.gather(&source_level(theta, theta_ref, grid, &grid.scatter(l))))
        .collect();
    WaveField { t0: field.t0, dt: field.dt, levels }
}

/// Centred time differences, second-order one-sided at both ends.
pub fn time_derivative(y: &WaveField) -> Result<WaveField> {
    let n = y.num_levels();
    if n < 3 {
        return Err(Error::TimeGrid(format!("time derivative needs at least 3 levels, got {n}")));
    }
    let dt = y.dt;
    let combine = |w: [(usize, f64); 3]| -> Vec<C64> {
        (0..y.levels[0].len())
            .map(|i| w.iter().map(|&(k, c)| c * y.levels[k][i]).sum::<C64>() / dt)
            .collect()
    };
    let mut levels = Vec::with_capacity(n);
    levels.push(combine([(0, -1.5), (1, 2.0), (2, -0.5)]));
    for k in 1..n - 1 {
        levels.push(combine([(k - 1, -0.5), (k, 0.0), (k + 1, 0.5)]));
    }
    levels.push(combine([(n - 3, 0.5), (n - 2, -2.0), (n - 1, 1.5)]));
    Ok(WaveField { t0: y.t0, dt, levels })
}

/// Relative L2 defect of `z(0) = i(R(0) - H y(0))`.
pub fn initial_velocity_defect(z: &WaveField, y: &WaveField, r: &WaveField, op: &DiscreteOperator) -> Result<f64> {
    let k = z.index_of(0.0).ok_or_else(|| Error::TimeGrid("t = 0 is not a time level".into()))?;
    let ky = y.index_of(0.0).ok_or_else(|| Error::TimeGrid("t = 0 is not a time level".into()))?;
    let kr = r.index_of(0.0).ok_or_else(|| Error::TimeGrid("t = 0 is not a time level".into()))?;
    let hy = op.apply(&y.levels[ky]);
    let i = C64::new(0.0, 1.0);
    let mut num = 0.0;
    let mut den = 0.0;
    for u in 0..hy.len() {
        let want = i * (r.levels[kr][u] - hy[u]);
        num += (z.levels[k][u] - want).norm_sqr();
        den += want.norm_sqr();
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

/// Max over midpoints and `core` nodes of
/// `|-i (y⁺ - y)/dt + H (y⁺ + y)/2 - (R⁺ + R)/2|`.
pub fn twin_residual(y: &WaveField, r: &WaveField, op: &DiscreteOperator, grid: &Grid3D, core: &Cylinder) -> Result<f64> {
    y.check_matching(r)?;
    let nodes: Vec<usize> = core.nodes(grid).iter().map(|&id| grid.unknown(id).expect("interior node")).collect();
    let i = C64::new(0.0, 1.0);
    let worst = (0..y.num_levels() - 1)
        .into_par_iter()
        .map(|n| {
            let mid: Vec<C64> = y.levels[n].iter().zip(&y.levels[n + 1]).map(|(a, b)| 0.5 * (a + b)).collect();
            let hm = op.apply(&mid);
            nodes
                .iter()
                .map(|&u| {
                    let dy = (y.levels[n + 1][u] - y.levels[n][u]) / y.dt;
                    let rm = 0.5 * (r.levels[n][u] + r.levels[n + 1][u]);
                    (-i * dy + hm[u] - rm).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}
