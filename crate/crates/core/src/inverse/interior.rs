use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::forward::{source_on, ObservationKind, ObservationSet};
use crate::geometry::{Cylinder, Grid3D, TwistProfile};
use crate::inverse::basis::{relative_error, SplineBasis};
use crate::inverse::gauss_newton::{gauss_newton, GaussNewtonOptions, GaussNewtonOutcome};
use crate::inverse::state::validate_initial_state;
use crate::operator::assemble_h_unchecked;
use crate::{Error, Result, C64};

/// Floor for the Tikhonov weight in noiseless runs.
pub const LAMBDA_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReconstructionConfig {
    /// Number of spline functions for `α`.
    pub dim: usize,
    /// Tikhonov weight; ignored when `sigma > 0` (discrepancy principle).
    pub lambda: f64,
    pub max_iter: usize,
    /// Standard deviation of the additive data noise (real and imaginary parts).
    pub sigma: f64,
    /// Required non-degeneracy margin `min |∂_φ q̃₀|`.
    pub q_min: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig { dim: 6, lambda: LAMBDA_FLOOR, max_iter: 20, sigma: 0.0, q_min: 1e-3 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionResult {
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub residual_history: Vec<f64>,
    pub residual_norm: f64,
    /// Relative `L²(I_ℓ)` error of `α̇` when the truth is known.
    pub relative_error: Option<f64>,
    /// Measured non-degeneracy margin.
    pub q_measured: f64,
    /// `(x3, α̇_true, α̇_est)` samples; the middle entry is NaN without truth.
    pub samples: Vec<[f64; 3]>,
}

impl ReconstructionResult {
    pub fn samples_csv(&self) -> String {
        let mut s = String::from("x3,alpha_dot_true,alpha_dot_est\n");
        for p in &self.samples {
            s.push_str(&format!("{:.12e},{:.12e},{:.12e}\n", p[0], p[1], p[2]));
        }
        s
    }
}

/// Known quantities of the interior data equation
/// `-i z(0) + H_θ y(0) = (α((θ̇+θ̃̇)∂_φ + 2∂₃) + α̇) ∂_φ q̃₀` on `Ω₀(ℓ)`.
pub struct InteriorData<'a> {
    pub grid: &'a Grid3D,
    pub theta_ref: &'a TwistProfile,
    /// `q̃₀` on the full grid.
    pub q_ref0: &'a [C64],
    /// `y(0) = q₀ - q̃₀` on the full grid.
    pub gap0: &'a [C64],
    /// Nodes of `Ω₀(ℓ)`.
    pub nodes: Vec<usize>,
    /// Measured `z(0)` on `nodes`.
    pub z0: Vec<C64>,
}

impl<'a> InteriorData<'a> {
    /// Pulls `z(0)` for `region` out of an interior observation set.
    pub fn from_observations(
        obs: &ObservationSet,
        region: &Cylinder,
        grid: &'a Grid3D,
        theta_ref: &'a TwistProfile,
        q_ref0: &'a [C64],
        gap0: &'a [C64],
    ) -> Result<Self> {
        if obs.kind != ObservationKind::Interior {
            return Err(Error::Region("interior reconstruction needs volume observations".into()));
        }
        if obs.times.first().is_none_or(|t| t.abs() > 1e-12) {
            return Err(Error::TimeGrid("observations must start at t = 0".into()));
        }
        let mut slot = vec![usize::MAX; grid.num_nodes()];
        for (j, &id) in obs.nodes.iter().enumerate() {
            slot[id] = j;
        }
        let nodes = region.nodes(grid);
        if nodes.is_empty() {
            return Err(Error::Region("reconstruction region has no node".into()));
        }
        let z0 = nodes
            .iter()
            .map(|&id| match slot[id] {
                usize::MAX => Err(Error::Region("observations do not cover the reconstruction region".into())),
                j => Ok(obs.data[0][j]),
            })
            .collect::<Result<_>>()?;
        Ok(InteriorData { grid, theta_ref, q_ref0, gap0, nodes, z0 })
    }

    /// Synthetic `z(0) = i(R_h(0) - H_h y(0))` for a known `θ`, the exact
    /// discrete data of the equation above.
    pub fn synthetic(
        theta: &TwistProfile,
        region: &Cylinder,
        grid: &'a Grid3D,
        theta_ref: &'a TwistProfile,
        q_ref0: &'a [C64],
        gap0: &'a [C64],
    ) -> Self {
        let nodes = region.nodes(grid);
        let mut d = InteriorData { grid, theta_ref, q_ref0, gap0, nodes, z0: Vec::new() };
        let model = d.model(theta);
        let i = C64::new(0.0, 1.0);
        d.z0 = model.iter().map(|m| i * m).collect();
        d
    }

    /// `R(0) - H_θ y(0)` on the nodes.
    fn model(&self, theta: &TwistProfile) -> Vec<C64> {
        let src = source_on(theta, self.theta_ref, self.grid, self.q_ref0, &self.nodes);
        if self.gap0.iter().all(|v| *v == C64::new(0.0, 0.0)) {
            return src;
        }
        let hy = assemble_h_unchecked(theta, self.grid).apply_full(self.grid, self.gap0);
        src.iter().zip(&self.nodes).map(|(r, &id)| r - hy[id]).collect()
    }

    /// Stacked real residual of the data equation, scaled by `√(cell volume)`.
    pub fn residual(&self, basis: &SplineBasis, c: &[f64]) -> Vec<f64> {
        let theta = basis.profile(self.theta_ref, c);
        let model = self.model(&theta);
        let i = C64::new(0.0, 1.0);
        let w = self.grid.cell_volume().sqrt();
        let mut out = Vec::with_capacity(2 * model.len());
        for (m, z) in model.iter().zip(&self.z0) {
            // -i z + H y - R
            let r = (-i * z - m) * w;
            out.push(r.re);
            out.push(r.im);
        }
        out
    }
}

/// Adds independent `N(0, σ²)` noise to the real and imaginary part of
/// every observed value.
pub fn add_noise<R: Rng>(obs: &mut ObservationSet, sigma: f64, rng: &mut R) {
    for level in &mut obs.data {
        for v in level.iter_mut() {
            let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            *v += C64::new(sigma * a, sigma * b);
        }
    }
}

pub(crate) fn samples(basis: &SplineBasis, c: &[f64], truth: Option<(&TwistProfile, &TwistProfile)>) -> Vec<[f64; 3]> {
    let n = 200;
    (0..=n)
        .map(|k| {
            let x = -basis.ell + 2.0 * basis.ell * k as f64 / n as f64;
            let t = truth.map_or(f64::NAN, |(th, r)| th.curvature(x) - r.curvature(x));
            [x, t, basis.eval(c, x).1]
        })
        .collect()
}

/// Runs Gauss–Newton with `λ` from the configuration, or by the discrepancy
/// principle over `1, 10⁻¹, …, 10⁻⁸` when `σ > 0` (largest `λ` whose
/// residual is below `1.1 σ √(2m·vol)`).
pub(crate) fn solve_with_lambda<F>(residual: F, dim: usize, cfg: &ReconstructionConfig, noise_norm: f64) -> Result<(GaussNewtonOutcome, f64)>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let c0 = vec![0.0; dim];
    let opts = |lambda: f64| GaussNewtonOptions { lambda, max_iter: cfg.max_iter, ..Default::default() };
    if cfg.sigma > 0.0 {
        let mut last = None;
        for e in 0..=8 {
            let lambda = 10f64.powi(-e);
            let out = gauss_newton(&residual, &c0, &opts(lambda))?;
            let ok = out.residual_norm <= 1.1 * noise_norm;
            last = Some((out, lambda));
            if ok {
                break;
            }
        }
        Ok(last.expect("at least one candidate"))
    } else {
        let lambda = cfg.lambda.max(LAMBDA_FLOOR);
        Ok((gauss_newton(&residual, &c0, &opts(lambda))?, lambda))
    }
}

/// Recovers `α̇ = θ̈ - θ̃̈` on `I_ℓ` from the interior data equation.
///
/// `truth`, when given, is the true `θ` and enables the error report.
pub fn reconstruct_interior(
    data: &InteriorData,
    region: &Cylinder,
    cfg: &ReconstructionConfig,
    truth: Option<&TwistProfile>,
) -> Result<ReconstructionResult> {
    let q_measured = validate_initial_state(data.q_ref0, data.grid, region, cfg.q_min)?;
    let basis = SplineBasis::new(cfg.dim, data.theta_ref.support);
    let noise_norm = cfg.sigma * (2.0 * data.nodes.len() as f64 * data.grid.cell_volume()).sqrt();
    let (out, lambda) = solve_with_lambda(|c: &[f64]| Ok(data.residual(&basis, c)), cfg.dim, cfg, noise_norm)?;
    let c = out.coefficients;
    let relative_error = truth.map(|th| {
        relative_error(|x| basis.eval(&c, x).1, |x| th.curvature(x) - data.theta_ref.curvature(x), basis.ell)
    });
    Ok(ReconstructionResult {
        samples: samples(&basis, &c, truth.map(|t| (t, data.theta_ref))),
        coefficients: c,
        lambda,
        residual_history: out.history,
        residual_norm: out.residual_norm,
        relative_error,
        q_measured,
    })
}
