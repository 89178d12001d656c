use serde::Serialize;

use crate::carleman::{working_domain, WeightFields};
use crate::forward::{lateral_boundary_nodes, ObservationRegion};
use crate::geometry::Grid3D;
use crate::metric::{christoffel, inverse_metric, MetricField};

/// Quasi-uniform unit vectors on the sphere (Fibonacci lattice).
pub fn fibonacci_directions(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    /// Smallest sampled `D²ϑ(ξ,ξ) + |<∇_g ϑ, ξ>_g|²` over unit `ξ`.
    pub convexity_min: f64,
    /// First offending `(node, direction index, value)`, if any.
    pub violation: Option<(usize, usize, f64)>,
    /// `min_M |∇_g ϑ|²_g`.
    pub beta: f64,
    pub passed: bool,
    /// Lateral nodes of the observed boundary part.
    #[serde(skip)]
    pub gamma0: ObservationRegion,
    pub gamma0_nodes: usize,
}

/// Samples the pseudo-convexity condition with 32 directions per node,
/// reports `β` and builds `Γ₀ = {<∇_g ϑ, ν>_g >= -enlarge}` on the lateral
/// boundary of the working domain.
pub fn verify_hypotheses(metric: &MetricField, wf: &WeightFields, grid: &Grid3D, enlarge: f64) -> HypothesisReport {
    let dirs = fibonacci_directions(32);
    let p = &metric.profile;
    let a = wf.wp.a;
    let mut convexity_min = f64::INFINITY;
    let mut violation = None;
    let mut beta = f64::INFINITY;
    for &id in &wf.nodes {
        let x = grid.coords(id);
        let (rate, curv) = p.rate_and_curvature(x[2]);
        let gam = christoffel(rate, curv, x);
        let grad = [2.0 * (x[0] - a[0]), 2.0 * (x[1] - a[1]), 2.0 * (x[2] - a[2])];
        let mut hess = [[0.0; 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                let mut v = if j == k { 2.0 } else { 0.0 };
                for m in 0..3 {
                    v -= gam[m][j][k] * grad[m];
                }
                hess[j][k] = v;
            }
        }
        for (d, xi) in dirs.iter().enumerate() {
            let dot = grad[0] * xi[0] + grad[1] * xi[1] + grad[2] * xi[2];
            let q = crate::metric::quad_form(&hess, *xi, *xi) + dot * dot;
            if q < convexity_min {
                convexity_min = q;
            }
            if q <= 0.0 && violation.is_none() {
                violation = Some((id, d, q));
            }
        }
        beta = beta.min(wf.grad_g_theta_sq(&metric.g_inv[id], x));
    }
    let m = working_domain(wf.wp.ell, wf.wp.big_l);
    let gamma0 = lateral_boundary_nodes(grid, m.half_length, |x, n| {
        let gi = inverse_metric(p.rate(x[2]), x);
        let nn = [n[0], n[1], 0.0];
        let d = wf.grad_theta(x);
        crate::metric::quad_form(&gi, d, nn) >= -enlarge
    });
    let gamma0_nodes = match &gamma0 {
        ObservationRegion::Boundary { nodes, .. } => nodes.len(),
        ObservationRegion::Interior(_) => 0,
    };
    HypothesisReport {
        convexity_min,
        violation,
        beta,
        passed: violation.is_none() && beta > 0.0,
        gamma0,
        gamma0_nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::{build_weights, select_weight_point, WeightMode};
    use crate::geometry::{CrossSection, ProfileTerm, SectionShape, TwistProfile};
    use crate::metric::assemble_metric;

    fn grid() -> Grid3D {
        let s = CrossSection::new(SectionShape::Disk { radius: 1.0 }, [12, 12]).unwrap();
        Grid3D::new(s, 2.5, 20).unwrap()
    }

    #[test]
    fn directions_are_unit_and_spread() {
        let d = fibonacci_directions(32);
        assert_eq!(d.len(), 32);
        for v in &d {
            assert!((v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - 1.0).abs() < 1e-12);
        }
        let mean: Vec<f64> = (0..3).map(|i| d.iter().map(|v| v[i]).sum::<f64>() / 32.0).collect();
        assert!(mean.iter().all(|m| m.abs() < 0.1));
    }

    #[test]
    fn straight_guide_is_convex_and_beta_is_grid_minimum() {
        let g = grid();
        let wp = select_weight_point(&g, 2.0, 1.0, 1.0, 1.0, WeightMode::Interior).unwrap();
        let wf = build_weights(&wp, &g, 1.0, 0.05).unwrap();
        let m = assemble_metric(&TwistProfile::zero(1.0, 0.1), &g).unwrap();
        let r = verify_hypotheses(&m, &wf, &g, 0.0);
        assert!(r.passed && r.convexity_min >= 2.0 - 1e-12);
        let oracle = wf
            .nodes
            .iter()
            .map(|&id| {
                let x = g.coords(id);
                4.0 * (x[0] * x[0] + x[1] * x[1] + (x[2] - 3.0).powi(2))
            })
            .fold(f64::INFINITY, f64::min);
        assert!((r.beta - oracle).abs() < 1e-12);
        assert!(r.beta >= 4.0 * wp.d3 * wp.d3);
    }

    #[test]
    fn twisted_guide_stays_convex_for_small_twist() {
        let g = grid();
        let wp = select_weight_point(&g, 2.0, 1.0, 1.0, 1.0, WeightMode::Interior).unwrap();
        let wf = build_weights(&wp, &g, 1.0, 0.05).unwrap();
        let p = TwistProfile::new(vec![ProfileTerm::Bump { amplitude: 0.04, centre: 0.0, half_width: 1.0 }], 1.0, 0.1)
            .unwrap();
        let r = verify_hypotheses(&assemble_metric(&p, &g).unwrap(), &wf, &g, 0.0);
        assert!(r.passed);
        assert!(r.gamma0_nodes > 0);
    }
}
