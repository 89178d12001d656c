use crate::carleman::{check_lemma3, WeightPoint};
use crate::forward::{crank_nicolson_solve, extract_observations, ObservationKind, ObservationRegion, ObservationSet, WaveField};
use crate::geometry::{Cylinder, Grid3D, TwistProfile};
use crate::inverse::basis::{relative_error, SplineBasis};
use crate::inverse::interior::{samples, solve_with_lambda, ReconstructionConfig, ReconstructionResult};
use crate::inverse::state::validate_initial_state;
use crate::metric::{assemble_metric, MetricField};
use crate::operator::{assemble_h, assemble_h_unchecked};
use crate::{Error, Result, C64};

/// Known inputs of the boundary twin: `θ̃`, `q̃₀`, the initial gap and the
/// time grid shared by the measured and the predicted data.
pub struct BoundaryTwin<'a> {
    pub grid: &'a Grid3D,
    pub theta_ref: &'a TwistProfile,
    pub q_ref0: &'a [C64],
    pub gap0: &'a [C64],
    pub region: ObservationRegion,
    pub t_final: f64,
    pub dt: f64,
    q_ref: WaveField,
    metric_ref: MetricField,
}

impl<'a> BoundaryTwin<'a> {
    /// Solves the reference system once. `region` must be a lateral
    /// boundary region.
    pub fn new(
        grid: &'a Grid3D,
        theta_ref: &'a TwistProfile,
        q_ref0: &'a [C64],
        gap0: &'a [C64],
        region: ObservationRegion,
        t_final: f64,
        dt: f64,
    ) -> Result<Self> {
        match &region {
            ObservationRegion::Boundary { nodes, .. } if !nodes.is_empty() => {}
            _ => return Err(Error::Region("boundary reconstruction needs a non-empty lateral region".into())),
        }
        let op = assemble_h(theta_ref, grid)?;
        let q_ref = crank_nicolson_solve(&op, grid, q_ref0, None, t_final, dt)?;
        let metric_ref = assemble_metric(theta_ref, grid)?;
        Ok(BoundaryTwin { grid, theta_ref, q_ref0, gap0, region, t_final, dt, q_ref, metric_ref })
    }

    /// Boundary data `∂_ν(q' - q̃')` on `[0, T]` for a candidate `θ`, the
    /// normal taken in the metric of `θ̃`.
    pub fn predict(&self, theta: &TwistProfile) -> Result<ObservationSet> {
        let q0: Vec<C64> = self.q_ref0.iter().zip(self.gap0).map(|(a, b)| a + b).collect();
        let op = assemble_h_unchecked(theta, self.grid);
        let q = crank_nicolson_solve(&op, self.grid, &q0, None, self.t_final, self.dt)?;
        extract_observations(&q, &self.q_ref, &self.region, &self.metric_ref, self.grid)
    }

    fn misfit(&self, pred: &ObservationSet, obs: &ObservationSet) -> Vec<f64> {
        let dt = pred.times.get(1).map_or(1.0, |t| t - pred.times[0]);
        let mut out = Vec::with_capacity(2 * pred.nodes.len() * pred.times.len());
        for (lp, lo) in pred.data.iter().zip(&obs.data) {
            for ((p, o), w) in lp.iter().zip(lo).zip(&pred.weights) {
                let r = (p - o) * (w * dt).sqrt();
                out.push(r.re);
                out.push(r.im);
            }
        }
        out
    }

    fn check_compatible(&self, obs: &ObservationSet) -> Result<()> {
        if obs.kind != ObservationKind::Boundary {
            return Err(Error::Region("boundary reconstruction needs lateral observations".into()));
        }
        let ObservationRegion::Boundary { nodes, .. } = &self.region else { unreachable!() };
        let steps = crate::forward::step_count(self.t_final, self.dt);
        if obs.nodes != *nodes || obs.times.len() != steps + 1 {
            return Err(Error::TimeGrid("observations do not match the twin's nodes or time grid".into()));
        }
        Ok(())
    }
}

/// Recovers `α̇` on `I_ℓ` from lateral data by full twin solves.
///
/// The weight point fixes `ω₀` through the far-from construction; the
/// non-degeneracy margin is measured on `ω₀ × (-ℓ, ℓ)`.
pub fn reconstruct_boundary(
    twin: &BoundaryTwin,
    obs: &ObservationSet,
    wp: &WeightPoint,
    cfg: &ReconstructionConfig,
    truth: Option<&TwistProfile>,
) -> Result<ReconstructionResult> {
    twin.check_compatible(obs)?;
    let l3 = check_lemma3(wp, twin.grid, twin.t_final)?;
    let ell = twin.theta_ref.support;
    let q_measured = validate_initial_state(twin.q_ref0, twin.grid, &Cylinder::new(l3.omega0, ell), cfg.q_min)?;
    let basis = SplineBasis::new(cfg.dim, ell);
    let total_weight: f64 = obs.weights.iter().sum::<f64>() * obs.times.len() as f64 * twin.t_final / (obs.times.len() - 1) as f64;
    let noise_norm = cfg.sigma * (2.0 * total_weight).sqrt();
    let residual = |c: &[f64]| -> Result<Vec<f64>> {
        let pred = twin.predict(&basis.profile(twin.theta_ref, c))?;
        Ok(twin.misfit(&pred, obs))
    };
    let (out, lambda) = solve_with_lambda(residual, cfg.dim, cfg, noise_norm)?;
    let c = out.coefficients;
    let relative_error = truth.map(|th| {
        relative_error(|x| basis.eval(&c, x).1, |x| th.curvature(x) - twin.theta_ref.curvature(x), ell)
    });
    Ok(ReconstructionResult {
        samples: samples(&basis, &c, truth.map(|t| (t, twin.theta_ref))),
        coefficients: c,
        lambda,
        residual_history: out.history,
        residual_norm: out.residual_norm,
        relative_error,
        q_measured,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::{select_weight_point, WeightMode};
    use crate::forward::lateral_boundary_nodes;
    use crate::geometry::{CrossSection, SectionShape};
    use crate::inverse::state::vortex_state;

    const ELL: f64 = 0.4;
    const T: f64 = 0.05;

    // on the disk every far-from ω₀ with non-empty ω₁ contains the axis,
    // where ∂_φ q̃₀ = 0; an elongated rectangle leaves room for both
    fn grid() -> Grid3D {
        let s = CrossSection::new(SectionShape::Rectangle { half_widths: [1.0, 2.0] }, [8, 16]).unwrap();
        Grid3D::new(s, 1.0, 32).unwrap()
    }

    fn weight_point(g: &Grid3D) -> WeightPoint {
        let mode = WeightMode::Boundary { direction: [1.0, 0.0], d_tau: 1.0, max_iter: 0 };
        select_weight_point(g, 0.6, ELL, 0.25, 1.0, mode).unwrap()
    }

    /// Lateral nodes with `(x - a)·ν >= 0`, `|x₃| < L`.
    fn gamma0(g: &Grid3D, wp: &WeightPoint) -> ObservationRegion {
        let a = wp.a;
        lateral_boundary_nodes(g, wp.big_l, |x, n| (x[0] - a[0]) * n[0] + (x[1] - a[1]) * n[1] >= 0.0)
    }

    #[test]
    fn in_span_profile_is_recovered_and_identical_profiles_give_zero() {
        let g = grid();
        let wp = weight_point(&g);
        let theta_ref = TwistProfile::zero(ELL, 0.5);
        let q0 = vortex_state(&g, 1.0);
        let gap = vec![C64::new(0.0, 0.0); g.num_nodes()];
        let twin = BoundaryTwin::new(&g, &theta_ref, &q0, &gap, gamma0(&g, &wp), T, T / 64.0).unwrap();
        let cfg = ReconstructionConfig { dim: 3, q_min: 1e-4, max_iter: 8, ..Default::default() };

        let same = twin.predict(&theta_ref).unwrap();
        assert!(same.data.iter().flatten().all(|v| v.norm() == 0.0));
        let r = reconstruct_boundary(&twin, &same, &wp, &cfg, Some(&theta_ref)).unwrap();
        assert!(r.coefficients.iter().all(|c| *c == 0.0));

        let truth_c = [0.03, -0.02, 0.04];
        let theta = theta_ref.plus_spline(&truth_c);
        let obs = twin.predict(&theta).unwrap();
        let r = reconstruct_boundary(&twin, &obs, &wp, &cfg, Some(&theta)).unwrap();
        for (a, b) in r.coefficients.iter().zip(&truth_c) {
            assert!((a - b).abs() < 1e-4, "{:?}", r.coefficients);
        }
        assert!(r.relative_error.unwrap() < 1e-3);
    }

    #[test]
    fn weight_point_too_close_is_rejected() {
        let g = grid();
        let theta_ref = TwistProfile::zero(ELL, 0.5);
        let q0 = vortex_state(&g, 1.0);
        let gap = vec![C64::new(0.0, 0.0); g.num_nodes()];
        let mut wp = weight_point(&g);
        let twin = BoundaryTwin::new(&g, &theta_ref, &q0, &gap, gamma0(&g, &wp), T, T / 64.0).unwrap();
        let obs = twin.predict(&theta_ref).unwrap();
        wp.d_tau = 0.2;
        wp.a = [1.2, 0.0, wp.a[2]];
        let e = reconstruct_boundary(&twin, &obs, &wp, &ReconstructionConfig::default(), None).unwrap_err();
        assert!(matches!(e, Error::LemmaPrecondition(_)), "{e}");
    }

    #[test]
    fn interior_observations_are_refused() {
        let g = grid();
        let theta_ref = TwistProfile::zero(ELL, 0.5);
        let q0 = vortex_state(&g, 1.0);
        let gap = vec![C64::new(0.0, 0.0); g.num_nodes()];
        let region = ObservationRegion::Interior(Cylinder::new(crate::geometry::SubSection::Whole, 0.6));
        assert!(BoundaryTwin::new(&g, &theta_ref, &q0, &gap, region, T, T / 64.0).is_err());
    }
}
