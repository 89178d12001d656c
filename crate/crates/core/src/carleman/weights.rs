use serde::Serialize;

use crate::geometry::{Cylinder, Grid3D, SectionShape, SubSection};
use crate::{Error, Result};

/// Observation point `a` of the weight `ϑ = |x - a|² + C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightPoint {
    pub a: [f64; 3],
    pub d3: f64,
    /// Distance from `a_τ` to the cross-section (0 when `a_τ` is inside it).
    pub d_tau: f64,
    pub gamma: f64,
    /// Shift `C` making `ϑ >= (2/3) sup ϑ` on the working domain.
    pub shift: f64,
    pub big_l: f64,
    pub ell: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WeightMode {
    /// `a = (0, 0, L + d3)`.
    Interior,
    /// `a_τ` pushed along `direction` from distance `d_tau` until the ball
    /// condition holds.
    Boundary { direction: [f64; 2], d_tau: f64, max_iter: usize },
}

/// Working domain `M = Ω(r')` with `r = (ℓ + L)/2`, `r' = (r + L)/2`.
pub fn working_domain(ell: f64, big_l: f64) -> Cylinder {
    let r = 0.5 * (ell + big_l);
    Cylinder::new(SubSection::Whole, 0.5 * (r + big_l))
}

/// Distance from a transverse point to the cross-section.
fn distance_to_section(shape: SectionShape, p: [f64; 2]) -> f64 {
    match shape {
        SectionShape::Disk { radius } => (p[0].hypot(p[1]) - radius).max(0.0),
        SectionShape::Rectangle { half_widths } => {
            let dx = (p[0].abs() - half_widths[0]).max(0.0);
            let dy = (p[1].abs() - half_widths[1]).max(0.0);
            dx.hypot(dy)
        }
    }
}

/// Ball condition: some cross-section node lies outside
/// `B(a_τ, d_τ + 4L(L + d3)/d_τ)`.
fn ball_condition(grid: &Grid3D, a_tau: [f64; 2], d_tau: f64, big_l: f64, d3: f64) -> bool {
    let rad = d_tau + 4.0 * big_l * (big_l + d3) / d_tau;
    let sec = &grid.section;
    sec.interior
        .iter()
        .enumerate()
        .filter(|e| *e.1)
        .any(|(c, _)| crate::geometry::dist2(sec.coords(c), a_tau) >= rad * rad)
}

fn shift_for(grid: &Grid3D, m: &Cylinder, a: [f64; 3]) -> Result<f64> {
    let nodes = m.nodes(grid);
    if nodes.is_empty() {
        return Err(Error::Region("working domain contains no node".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for id in nodes {
        let x = grid.coords(id);
        let v = (0..3).map(|i| (x[i] - a[i]).powi(2)).sum::<f64>();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((2.0 * hi - 3.0 * lo).max(0.0))
}

pub fn select_weight_point(
    grid: &Grid3D,
    big_l: f64,
    ell: f64,
    d3: f64,
    gamma: f64,
    mode: WeightMode,
) -> Result<WeightPoint> {
    if !(big_l > ell && ell > 0.0) {
        return Err(Error::WeightPoint(format!("need L > ell > 0, got L = {big_l}, ell = {ell}")));
    }
    if !(d3 > 0.0) {
        return Err(Error::WeightPoint(format!("d3 = a3 - L must be positive, got {d3}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::WeightPoint("gamma must be positive".into()));
    }
    if big_l > grid.axial_half_length {
        return Err(Error::WeightPoint(format!("L = {big_l} exceeds the truncation {}", grid.axial_half_length)));
    }
    let (a_tau, d_tau) = match mode {
        WeightMode::Interior => ([0.0, 0.0], 0.0),
        WeightMode::Boundary { direction, d_tau, max_iter } => {
            let n = direction[0].hypot(direction[1]);
            if n == 0.0 || d_tau <= 0.0 {
                return Err(Error::WeightPoint("boundary mode needs a direction and d_tau > 0".into()));
            }
            let dir = [direction[0] / n, direction[1] / n];
            let place = |d: f64| {
                // bisect the offset t along dir so the distance equals d
                let (mut lo, mut hi) = (0.0, d + 10.0 * grid.section.spacing[0].max(1.0) + d);
                while distance_to_section(grid.section.shape, [hi * dir[0], hi * dir[1]]) < d {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if distance_to_section(grid.section.shape, [mid * dir[0], mid * dir[1]]) < d {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                [hi * dir[0], hi * dir[1]]
            };
            let mut d = d_tau;
            let mut found = None;
            for _ in 0..=max_iter {
                let p = place(d);
                if ball_condition(grid, p, d, big_l, d3) {
                    found = Some((p, d));
                    break;
                }
                d *= 1.25;
            }
            found.ok_or_else(|| {
                Error::WeightPoint(format!("ball condition not met after {max_iter} pushes (reached d_tau = {d:.4})"))
            })?
        }
    };
    let a = [a_tau[0], a_tau[1], big_l + d3];
    let shift = shift_for(grid, &working_domain(ell, big_l), a)?;
    Ok(WeightPoint { a, d3, d_tau, gamma, shift, big_l, ell })
}

/// Weight functions on the working domain with analytic derivatives.
#[derive(Clone, Debug)]
pub struct WeightFields {
    pub wp: WeightPoint,
    pub t_final: f64,
    /// Working-domain nodes (interior grid nodes of `M`).
    pub nodes: Vec<usize>,
    /// `ϑ` on every grid node.
    pub theta_w: Vec<f64>,
    /// `sup_M ϑ`.
    pub sup_theta: f64,
    /// `e^{2γ sup ϑ}`.
    pub big_e: f64,
    /// Normalisation `min_M η₀`.
    pub eta_ref: f64,
    /// Midpoints `t_{k+1/2}` used by every time quadrature.
    pub times: Vec<f64>,
    pub dt: f64,
}

impl WeightFields {
    pub fn phi(&self, t: f64) -> f64 {
        1.0 / ((self.t_final - t) * (self.t_final + t))
    }

    pub fn exp_theta(&self, id: usize) -> f64 {
        (self.wp.gamma * self.theta_w[id]).exp()
    }

    pub fn psi(&self, t: f64, id: usize) -> f64 {
        self.exp_theta(id) * self.phi(t)
    }

    pub fn eta(&self, t: f64, id: usize) -> f64 {
        (self.big_e - self.exp_theta(id)) * self.phi(t)
    }

    pub fn eta0(&self, id: usize) -> f64 {
        self.eta(0.0, id)
    }

    /// `∂η/∂t`.
    pub fn eta_t(&self, t: f64, id: usize) -> f64 {
        let p = self.phi(t);
        (self.big_e - self.exp_theta(id)) * 2.0 * t * p * p
    }

    /// `∇ϑ = 2(x - a)`.
    pub fn grad_theta(&self, x: [f64; 3]) -> [f64; 3] {
        let a = self.wp.a;
        [2.0 * (x[0] - a[0]), 2.0 * (x[1] - a[1]), 2.0 * (x[2] - a[2])]
    }

    /// `∇η = -γψ∇ϑ`.
    pub fn grad_eta(&self, t: f64, id: usize, x: [f64; 3]) -> [f64; 3] {
        let c = -self.wp.gamma * self.psi(t, id);
        self.grad_theta(x).map(|v| c * v)
    }

    /// `∂₃η₀ = 2γ(a3 - x3)e^{γϑ}/T²`.
    pub fn d3_eta0(&self, id: usize, x: [f64; 3]) -> f64 {
        2.0 * self.wp.gamma * (self.wp.a[2] - x[2]) * self.exp_theta(id) / (self.t_final * self.t_final)
    }

    /// `Δ_g ϑ = 6 + 2θ̇²(a·x_τ) + 2θ̈(a1 x2 - a2 x1)` for the twist metric.
    pub fn lap_g_theta(&self, rate: f64, curvature: f64, x: [f64; 3]) -> f64 {
        let a = self.wp.a;
        6.0 + 2.0 * rate * rate * (a[0] * x[0] + a[1] * x[1]) + 2.0 * curvature * (a[0] * x[1] - a[1] * x[0])
    }

    /// `|∇_g ϑ|²_g = ∇ϑᵀ g⁻¹ ∇ϑ`.
    pub fn grad_g_theta_sq(&self, g_inv: &crate::metric::Mat3, x: [f64; 3]) -> f64 {
        let d = self.grad_theta(x);
        crate::metric::quad_form(g_inv, d, d)
    }

    /// `Δ_g η = -γψ(Δ_g ϑ + γ|∇_g ϑ|²_g)`.
    pub fn lap_g_eta(&self, t: f64, id: usize, lap_theta: f64, grad_sq: f64) -> f64 {
        -self.wp.gamma * self.psi(t, id) * (lap_theta + self.wp.gamma * grad_sq)
    }

    /// `e^{-s(η - η_ref)}`, zero at the singular endpoints when `s > 0`.
    pub fn weight(&self, s: f64, t: f64, id: usize) -> f64 {
        if s == 0.0 {
            return 1.0;
        }
        if t.abs() >= self.t_final {
            return 0.0;
        }
        (-s * (self.eta(t, id) - self.eta_ref)).exp()
    }
}

/// Builds `ϑ`, `ψ`, `η` on the working domain for final time `t_final`; the
/// quadrature points are the midpoints of the step `dt` on `[-T, T]`.
pub fn build_weights(wp: &WeightPoint, grid: &Grid3D, t_final: f64, dt: f64) -> Result<WeightFields> {
    if !(t_final > 0.0 && dt > 0.0 && dt < t_final) {
        return Err(Error::TimeGrid("weights need 0 < dt < T".into()));
    }
    let m = working_domain(wp.ell, wp.big_l);
    let nodes = m.nodes(grid);
    let a = wp.a;
    let theta_w: Vec<f64> = (0..grid.num_nodes())
        .map(|id| {
            let x = grid.coords(id);
            (0..3).map(|i| (x[i] - a[i]).powi(2)).sum::<f64>() + wp.shift
        })
        .collect();
    let sup_theta = nodes.iter().map(|&id| theta_w[id]).fold(0.0, f64::max);
    let big_e = (2.0 * wp.gamma * sup_theta).exp();
    let steps = crate::forward::step_count(2.0 * t_final, dt);
    let dt = 2.0 * t_final / steps as f64;
    let times = (0..steps).map(|k| -t_final + (k as f64 + 0.5) * dt).collect();
    let mut wf = WeightFields { wp: *wp, t_final, nodes, theta_w, sup_theta, big_e, eta_ref: 0.0, times, dt };
    wf.eta_ref = wf.nodes.iter().map(|&id| wf.eta0(id)).fold(f64::INFINITY, f64::min);
    Ok(wf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CrossSection;

    fn grid() -> Grid3D {
        let s = CrossSection::new(SectionShape::Disk { radius: 1.0 }, [16, 16]).unwrap();
        Grid3D::new(s, 2.5, 20).unwrap()
    }

    #[test]
    fn interior_point_and_bad_d3() {
        let g = grid();
        let wp = select_weight_point(&g, 2.0, 1.0, 1.0, 1.0, WeightMode::Interior).unwrap();
        assert_eq!(wp.a, [0.0, 0.0, 3.0]);
        assert!(select_weight_point(&g, 2.0, 1.0, 0.0, 1.0, WeightMode::Interior).is_err());
    }

    #[test]
    fn boundary_mode_reaches_smallest_compliant_distance() {
        let g = grid();
        let (big_l, d3) = (0.5, 0.5);
        let wp = select_weight_point(
            &g,
            big_l,
            0.3,
            d3,
            1.0,
            WeightMode::Boundary { direction: [1.0, 0.0], d_tau: 0.2, max_iter: 60 },
        )
        .unwrap();
        // Mask sweep oracle: the returned distance satisfies the ball test
        // and the previous push did not.
        let ok = |d: f64| {
            let rad = d + 4.0 * big_l * (big_l + d3) / d;
            g.section.interior.iter().enumerate().filter(|e| *e.1).any(|(c, _)| {
                let p = g.section.coords(c);
                (p[0] - (1.0 + d)).hypot(p[1]) >= rad
            })
        };
        assert!(ok(wp.d_tau));
        assert!(!ok(wp.d_tau / 1.25));
        assert!((wp.a[0] - (1.0 + wp.d_tau)).abs() < 1e-9);
        let err = select_weight_point(
            &g,
            big_l,
            0.3,
            d3,
            1.0,
            WeightMode::Boundary { direction: [1.0, 0.0], d_tau: 0.2, max_iter: 1 },
        );
        assert!(matches!(err, Err(Error::WeightPoint(_))));
    }

    #[test]
    fn weight_fields_basic_identities() {
        let g = grid();
        let wp = select_weight_point(&g, 1.0, 0.5, 0.5, 1.0, WeightMode::Interior).unwrap();
        let wf = build_weights(&wp, &g, 2.0, 0.05).unwrap();
        let inf = wf.nodes.iter().map(|&id| wf.theta_w[id]).fold(f64::INFINITY, f64::min);
        assert!(inf >= 2.0 / 3.0 * wf.sup_theta - 1e-12);
        for &id in &wf.nodes {
            let x = g.coords(id);
            assert!((wf.psi(0.0, id) - wf.exp_theta(id) / 4.0).abs() < 1e-14);
            for &t in &wf.times {
                assert!(wf.eta(t, id) > 0.0 && wf.psi(t, id) > 0.0);
            }
            // symbolic derivative of η₀ = (E - e^{γϑ})/T² along x3
            let h = 1e-6;
            // (E is constant, dropping it avoids cancellation)
            let eta0 = |z: f64| {
                let th = x[0].powi(2) + x[1].powi(2) + (z - wp.a[2]).powi(2) + wp.shift;
                -(wp.gamma * th).exp() / 4.0
            };
            let fd = (eta0(x[2] + h) - eta0(x[2] - h)) / (2.0 * h);
            assert!((fd - wf.d3_eta0(id, x)).abs() < 1e-6 * fd.abs().max(1.0));
            assert!(wf.d3_eta0(id, x) >= 2.0 * wp.gamma * wp.d3 * wf.exp_theta(id) / 4.0 - 1e-12);
        }
        // η grows monotonically toward the endpoints
        let id = wf.nodes[0];
        let half: Vec<f64> = wf.times.iter().filter(|t| **t > 0.0).map(|&t| wf.eta(t, id)).collect();
        assert!(half.windows(2).all(|w| w[1] > w[0]));
    }
}
