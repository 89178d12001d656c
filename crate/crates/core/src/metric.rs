//! Twist metric, its inverse and the metric gradient.
//!
//! The guide coordinates are the pull-back of the Euclidean coordinates of
//! the twisted tube. The covariant metric is
//!
//! ```text
//!       | 1        0         θ̇ x2          |
//!   g = | 0        1        -θ̇ x1          |
//!       | θ̇ x2    -θ̇ x1     1 + θ̇²|x_τ|²   |
//! ```
//!
//! and its inverse is the coefficient matrix of the Hamiltonian in
//! divergence form, `g⁻¹ = diag(1,1,0) + V Vᵀ` with `V = (-θ̇ x2, θ̇ x1, 1)`.
//! Both have unit determinant.

use nalgebra::Matrix3;

use crate::geometry::{Grid3D, TwistProfile};
use crate::{Error, Result, C64};

pub type Mat3 = [[f64; 3]; 3];

/// Tolerance on `|det g - 1|` before assembly is declared broken.
pub const DET_TOLERANCE: f64 = 1e-10;

/// Covariant metric at `x` for twist rate `rate`.
pub fn covariant_metric(rate: f64, x: [f64; 3]) -> Mat3 {
    let (a, b) = (rate * x[1], -rate * x[0]);
    [[1.0, 0.0, a], [0.0, 1.0, b], [a, b, 1.0 + a * a + b * b]]
}

/// Closed-form inverse metric (the Hamiltonian's coefficient matrix).
pub fn inverse_metric(rate: f64, x: [f64; 3]) -> Mat3 {
    let v = [-rate * x[1], rate * x[0], 1.0];
    let mut m = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            m[j][k] = v[j] * v[k];
        }
    }
    m[0][0] += 1.0;
    m[1][1] += 1.0;
    m
}

/// `d_l g_jk` indexed `[l][j][k]`, from the analytic rate and curvature.
pub fn metric_derivatives(rate: f64, curvature: f64, x: [f64; 3]) -> [Mat3; 3] {
    let mut d = [[[0.0; 3]; 3]; 3];
    let r2 = x[0] * x[0] + x[1] * x[1];
    // l = 0
    d[0][1][2] = -rate;
    d[0][2][1] = -rate;
    d[0][2][2] = 2.0 * rate * rate * x[0];
    // l = 1
    d[1][0][2] = rate;
    d[1][2][0] = rate;
    d[1][2][2] = 2.0 * rate * rate * x[1];
    // l = 2
    d[2][0][2] = curvature * x[1];
    d[2][2][0] = curvature * x[1];
    d[2][1][2] = -curvature * x[0];
    d[2][2][1] = -curvature * x[0];
    d[2][2][2] = 2.0 * rate * curvature * r2;
    d
}

/// Christoffel symbols `Γ^m_jk` indexed `[m][j][k]`.
pub fn christoffel(rate: f64, curvature: f64, x: [f64; 3]) -> [Mat3; 3] {
    let ginv = inverse_metric(rate, x);
    let d = metric_derivatives(rate, curvature, x);
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for m in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    s += ginv[m][l] * (d[j][l][k] + d[k][l][j] - d[l][j][k]);
                }
                gamma[m][j][k] = 0.5 * s;
            }
        }
    }
    gamma
}

pub fn mat_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn quad_form(m: &Mat3, a: [f64; 3], b: [f64; 3]) -> f64 {
    let mb = mat_vec(m, b);
    a[0] * mb[0] + a[1] * mb[1] + a[2] * mb[2]
}

/// Nodewise metric, inverse and determinant on the full grid.
#[derive(Clone, Debug)]
pub struct MetricField {
    pub profile: TwistProfile,
    pub g: Vec<Mat3>,
    pub g_inv: Vec<Mat3>,
    pub det: Vec<f64>,
}

impl MetricField {
    /// Inner product `<X, Y>_g = sum g_jk X_j Y_k` at node `id`.
    pub fn inner(&self, id: usize, a: [f64; 3], b: [f64; 3]) -> f64 {
        quad_form(&self.g[id], a, b)
    }

    /// `|grad_g u|_g^2 = grad(u)^H g^{-1} grad(u)` for a complex gradient.
    pub fn grad_norm_sq(&self, id: usize, grad: &[C64; 3]) -> f64 {
        let m = &self.g_inv[id];
        let mut s = 0.0;
        for j in 0..3 {
            for k in 0..3 {
                s += m[j][k] * (grad[j].conj() * grad[k]).re;
            }
        }
        s
    }
}

/// Assembles the metric with a numerically computed inverse and determinant.
pub fn assemble_metric(theta: &TwistProfile, grid: &Grid3D) -> Result<MetricField> {
    theta.check_admissible(crate::geometry::ADMISSIBILITY_SAMPLES)?;
    assemble_metric_unchecked(theta, grid)
}

pub(crate) fn assemble_metric_unchecked(theta: &TwistProfile, grid: &Grid3D) -> Result<MetricField> {
    let n = grid.num_nodes();
    let mut g = Vec::with_capacity(n);
    let mut g_inv = Vec::with_capacity(n);
    let mut det = Vec::with_capacity(n);
    for id in 0..n {
        let x = grid.coords(id);
        let m = covariant_metric(theta.rate(x[2]), x);
        let mm = Matrix3::from_fn(|i, j| m[i][j]);
        let d = mm.determinant();
        if (d - 1.0).abs() > DET_TOLERANCE {
            return Err(Error::MetricDeterminant { node: id, det: d });
        }
        let inv = mm.try_inverse().ok_or(Error::MetricDeterminant { node: id, det: d })?;
        g.push(m);
        g_inv.push([
            [inv[(0, 0)], inv[(0, 1)], inv[(0, 2)]],
            [inv[(1, 0)], inv[(1, 1)], inv[(1, 2)]],
            [inv[(2, 0)], inv[(2, 1)], inv[(2, 2)]],
        ]);
        det.push(d);
    }
    Ok(MetricField { profile: theta.clone(), g, g_inv, det })
}

/// Metric gradient `g^{-1} grad u` at every interior node (zero elsewhere).
pub fn gradient_g(u: &[C64], m: &MetricField, grid: &Grid3D) -> Vec<[C64; 3]> {
    let zero = [C64::new(0.0, 0.0); 3];
    let mut out = vec![zero; grid.num_nodes()];
    for &id in grid.interior_nodes() {
        let grad = grid.gradient(u, id);
        let gi = &m.g_inv[id];
        let mut v = zero;
        for j in 0..3 {
            for k in 0..3 {
                v[j] += gi[j][k] * grad[k];
            }
        }
        out[id] = v;
    }
    out
}
