use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::carleman::WeightFields;
use crate::forward::{normal_derivative, ObservationRegion, WaveField};
use crate::geometry::Grid3D;
use crate::metric::MetricField;
use crate::operator::DiscreteOperator;
use crate::{Error, Result, C64};

/// The pieces of `e^{-sη} B e^{sη} = M₁ + M₂` with `B = i∂_t + Δ_g`.
pub struct ConjugatedOperators<'a> {
    pub laplace_beltrami: &'a DiscreteOperator,
    pub metric: &'a MetricField,
    pub weights: &'a WeightFields,
    pub grid: &'a Grid3D,
    pub s: f64,
}

/// Nodal coefficients of the conjugated operators at time `t`.
struct Coefficients {
    psi: f64,
    grad_eta: [f64; 3],
    grad_eta_sq: f64,
    lap_eta: f64,
    eta_t: f64,
}

fn coefficients(wf: &WeightFields, metric: &MetricField, grid: &Grid3D, t: f64, id: usize) -> Coefficients {
    let x = grid.coords(id);
    let gi = &metric.g_inv[id];
    let (rate, curv) = metric.profile.rate_and_curvature(x[2]);
    let grad_sq = wf.grad_g_theta_sq(gi, x);
    let psi = wf.psi(t, id);
    let gamma = wf.wp.gamma;
    Coefficients {
        psi,
        grad_eta: wf.grad_eta(t, id, x),
        grad_eta_sq: gamma * gamma * psi * psi * grad_sq,
        lap_eta: wf.lap_g_eta(t, id, wf.lap_g_theta(rate, curv, x), grad_sq),
        eta_t: wf.eta_t(t, id),
    }
}

/// `2 ∇ηᵀ g⁻¹ ∇v` at a node.
fn drift(metric: &MetricField, grid: &Grid3D, v: &[C64], id: usize, grad_eta: [f64; 3]) -> C64 {
    let g = grid.gradient(v, id);
    let gi = &metric.g_inv[id];
    let mut s = C64::new(0.0, 0.0);
    for j in 0..3 {
        for k in 0..3 {
            s += grad_eta[j] * gi[j][k] * g[k];
        }
    }
    2.0 * s
}

impl ConjugatedOperators<'_> {
    /// `(M₁ v, M₂ v)` at time `t` on the working-domain nodes, for a full-grid
    /// field `v` and its time derivative `v_t`.
    pub fn apply(&self, t: f64, v: &[C64], v_t: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let lap = self.laplace_beltrami.apply_full(self.grid, v);
        let s = self.s;
        let i = C64::new(0.0, 1.0);
        self.weights
            .nodes
            .iter()
            .map(|&id| {
                let c = coefficients(self.weights, self.metric, self.grid, t, id);
                let m1 = i * v_t[id] + lap[id] + s * s * c.grad_eta_sq * v[id];
                let m2 = i * s * c.eta_t * v[id]
                    + s * drift(self.metric, self.grid, v, id, c.grad_eta)
                    + s * c.lap_eta * v[id];
                (m1, m2)
            })
            .unzip()
    }
}

/// `(M₁ + M₂)(e^{-sη} w)` minus `e^{-sη} B w` at every midpoint, max norm
/// over the working domain. Uses the normalised weight.
pub fn conjugated_apply(ops: &ConjugatedOperators, w: &WaveField) -> Result<f64> {
    let wf = ops.weights;
    check_time_axis(w, wf)?;
    let grid = ops.grid;
    let i = C64::new(0.0, 1.0);
    let worst = (0..wf.times.len())
        .into_par_iter()
        .map(|k| {
            let (ta, tb, t) = (w.time(k), w.time(k + 1), wf.times[k]);
            let wa = w.full(grid, k);
            let wb = w.full(grid, k + 1);
            let n = wa.len();
            let mut v = vec![C64::new(0.0, 0.0); n];
            let mut vt = vec![C64::new(0.0, 0.0); n];
            let mut wm = vec![C64::new(0.0, 0.0); n];
            let mut wt = vec![C64::new(0.0, 0.0); n];
            for id in 0..n {
                let (a, b) = (wf.weight(ops.s, ta, id) * wa[id], wf.weight(ops.s, tb, id) * wb[id]);
                v[id] = 0.5 * (a + b);
                vt[id] = (b - a) / w.dt;
                wm[id] = 0.5 * (wa[id] + wb[id]);
                wt[id] = (wb[id] - wa[id]) / w.dt;
            }
            let (m1, m2) = ops.apply(t, &v, &vt);
            let lw = ops.laplace_beltrami.apply_full(grid, &wm);
            wf.nodes
                .iter()
                .enumerate()
                .map(|(j, &id)| {
                    let bw = i * wt[id] + lw[id];
                    (m1[j] + m2[j] - wf.weight(ops.s, t, id) * bw).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Left and right sides of the Carleman estimate for one `w` and one `s`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CarlemanTerms {
    pub lhs_grad: f64,
    pub lhs_w: f64,
    pub lhs_m1: f64,
    pub lhs_m2: f64,
    pub rhs_b: f64,
    pub rhs_boundary: f64,
}

impl CarlemanTerms {
    pub fn lhs(&self) -> f64 {
        self.lhs_grad + self.lhs_w + self.lhs_m1 + self.lhs_m2
    }

    pub fn rhs(&self) -> f64 {
        self.rhs_b + self.rhs_boundary
    }

    fn add(&mut self, o: &CarlemanTerms) {
        self.lhs_grad += o.lhs_grad;
        self.lhs_w += o.lhs_w;
        self.lhs_m1 += o.lhs_m1;
        self.lhs_m2 += o.lhs_m2;
        self.rhs_b += o.rhs_b;
        self.rhs_boundary += o.rhs_boundary;
    }
}

fn check_time_axis(w: &WaveField, wf: &WeightFields) -> Result<()> {
    if w.num_levels() != wf.times.len() + 1
        || (w.t0 + wf.t_final).abs() > 1e-9 * wf.t_final
        || (w.dt - wf.dt).abs() > 1e-12 * wf.dt
    {
        return Err(Error::TimeGrid("field and weights use different time grids".into()));
    }
    Ok(())
}

fn check_support(w: &WaveField, wf: &WeightFields, grid: &Grid3D) -> Result<()> {
    let mut inside = vec![false; grid.num_nodes()];
    for &id in &wf.nodes {
        inside[id] = true;
    }
    let outside: Vec<usize> = grid
        .interior_nodes()
        .iter()
        .enumerate()
        .filter(|(_, id)| !inside[**id])
        .map(|(u, _)| u)
        .collect();
    let worst = w
        .levels
        .iter()
        .flat_map(|l| outside.iter().map(move |&u| l[u].norm()))
        .fold(0.0, f64::max);
    if worst > 1e-10 {
        return Err(Error::BoundaryTrace(worst));
    }
    Ok(())
}

/// `min η₀` over the nodes where `w` is nonzero at some level and their
/// neighbours, so boundary derivatives are covered. Falls back to the
/// working-domain normalisation for the zero field.
fn support_eta_ref(w: &WaveField, wf: &WeightFields, grid: &Grid3D) -> f64 {
    let mut live = vec![false; grid.num_nodes()];
    for (u, &id) in grid.interior_nodes().iter().enumerate() {
        if w.levels.iter().any(|l| l[u].norm() > 0.0) {
            live[id] = true;
        }
    }
    let mut best = f64::INFINITY;
    for id in (0..grid.num_nodes()).filter(|&id| live[id]) {
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(n) = grid.offset(id, [dx, dy, dz]) {
                        best = best.min(wf.eta0(n));
                    }
                }
            }
        }
    }
    if best.is_finite() {
        best
    } else {
        wf.eta_ref
    }
}

/// Carleman terms of `w` for every `s` in `s_values`. Weights are
/// normalised by `min η₀` over the (slightly dilated) support of `w`, a
/// common factor of all terms. `gamma0` supplies the boundary part of the right side.
pub fn carleman_functional(
    w: &WaveField,
    wf: &WeightFields,
    metric: &MetricField,
    laplace_beltrami: &DiscreteOperator,
    grid: &Grid3D,
    gamma0: Option<&ObservationRegion>,
    s_values: &[f64],
) -> Result<Vec<CarlemanTerms>> {
    check_time_axis(w, wf)?;
    check_support(w, wf, grid)?;
    let vol = grid.cell_volume();
    let i = C64::new(0.0, 1.0);
    let (gnodes, gweights): (&[usize], &[f64]) = match gamma0 {
        Some(ObservationRegion::Boundary { nodes, weights }) => (nodes, weights),
        _ => (&[], &[]),
    };
    let eta_ref = support_eta_ref(w, wf, grid);
    let weight = |s: f64, t: f64, id: usize| {
        if s == 0.0 {
            1.0
        } else if t.abs() >= wf.t_final {
            0.0
        } else {
            (-s * (wf.eta(t, id) - eta_ref)).exp()
        }
    };
    let per_mid: Vec<Vec<CarlemanTerms>> = (0..wf.times.len())
        .into_par_iter()
        .map(|k| {
            let (ta, tb, t) = (w.time(k), w.time(k + 1), wf.times[k]);
            let wa = w.full(grid, k);
            let wb = w.full(grid, k + 1);
            let n = wa.len();
            let wm: Vec<C64> = (0..n).map(|id| 0.5 * (wa[id] + wb[id])).collect();
            let lw = laplace_beltrami.apply_full(grid, &wm);
            let coef: Vec<Coefficients> = wf.nodes.iter().map(|&id| coefficients(wf, metric, grid, t, id)).collect();
            let grad_sq: Vec<f64> = wf.nodes.iter().map(|&id| metric.grad_norm_sq(id, &grid.gradient(&wm, id))).collect();
            let bw: Vec<f64> = wf
                .nodes
                .iter()
                .map(|&id| (i * (wb[id] - wa[id]) / w.dt + lw[id]).norm_sqr())
                .collect();
            let dnu: Vec<f64> = gnodes.iter().map(|&id| normal_derivative(grid, metric, &wm, id).norm_sqr()).collect();
            let mut out = Vec::with_capacity(s_values.len());
            for &s in s_values {
                let mut v = vec![C64::new(0.0, 0.0); n];
                let mut vt = vec![C64::new(0.0, 0.0); n];
                for &id in &wf.nodes {
                    let (a, b) = (weight(s, ta, id) * wa[id], weight(s, tb, id) * wb[id]);
                    v[id] = 0.5 * (a + b);
                    vt[id] = (b - a) / w.dt;
                }
                let lap = laplace_beltrami.apply_full(grid, &v);
                let mut terms = CarlemanTerms::default();
                for (j, &id) in wf.nodes.iter().enumerate() {
                    let c = &coef[j];
                    let om2 = weight(s, t, id).powi(2);
                    if om2 == 0.0 {
                        continue;
                    }
                    terms.lhs_grad += s * om2 * c.psi * grad_sq[j];
                    terms.lhs_w += s.powi(3) * om2 * c.psi.powi(3) * wm[id].norm_sqr();
                    let m1 = i * vt[id] + lap[id] + s * s * c.grad_eta_sq * v[id];
                    let m2 = i * s * c.eta_t * v[id] + s * drift(metric, grid, &v, id, c.grad_eta) + s * c.lap_eta * v[id];
                    terms.lhs_m1 += m1.norm_sqr();
                    terms.lhs_m2 += m2.norm_sqr();
                    terms.rhs_b += om2 * bw[j];
                }
                for (j, &id) in gnodes.iter().enumerate() {
                    let om = weight(s, t, id);
                    let psi = wf.psi(t, id);
                    terms.rhs_boundary += s * (om * psi).powi(2) * dnu[j] * gweights[j] / vol;
                }
                out.push(terms);
            }
            out
        })
        .collect();
    let mut total = vec![CarlemanTerms::default(); s_values.len()];
    for mid in &per_mid {
        for (t, m) in total.iter_mut().zip(mid) {
            t.add(m);
        }
    }
    let q = vol * wf.dt;
    for t in &mut total {
        t.lhs_grad *= q;
        t.lhs_w *= q;
        t.lhs_m1 *= q;
        t.lhs_m2 *= q;
        t.rhs_b *= q;
        t.rhs_boundary *= q;
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct CarlemanRow {
    pub s: f64,
    /// Terms of the family member attaining the largest ratio.
    pub terms: CarlemanTerms,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CarlemanReport {
    pub rows: Vec<CarlemanRow>,
    pub s0: Option<f64>,
    pub c0: Option<f64>,
}

impl CarlemanReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("s,lhs_grad,lhs_w,lhs_M1M2,rhs_B,rhs_boundary,ratio\n");
        for r in &self.rows {
            let t = &r.terms;
            let _ = writeln!(
                s,
                "{:.6e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
                r.s,
                t.lhs_grad,
                t.lhs_w,
                t.lhs_m1 + t.lhs_m2,
                t.rhs_b,
                t.rhs_boundary,
                r.ratio
            );
        }
        s
    }
}

/// Ratio `I(w)/RHS` over an `s` grid, maximised over the family.
///
/// `s₀` is the first `s` from which two successive relative changes of the
/// ratio stay below 10%; `C₀` is the largest ratio from `s₀` on.
pub fn verify_carleman(
    family: &[WaveField],
    wf: &WeightFields,
    metric: &MetricField,
    laplace_beltrami: &DiscreteOperator,
    grid: &Grid3D,
    gamma0: Option<&ObservationRegion>,
    s_values: &[f64],
) -> Result<CarlemanReport> {
    let live: Vec<&WaveField> = family
        .iter()
        .filter(|w| w.levels.iter().flatten().any(|v| v.norm() > 0.0))
        .collect();
    if live.is_empty() {
        return Err(Error::Degenerate("Carleman family contains only zero fields".into()));
    }
    let mut rows: Vec<CarlemanRow> = s_values
        .iter()
        .map(|&s| CarlemanRow { s, terms: CarlemanTerms::default(), ratio: 0.0 })
        .collect();
    for w in live {
        let terms = carleman_functional(w, wf, metric, laplace_beltrami, grid, gamma0, s_values)?;
        for (row, t) in rows.iter_mut().zip(terms) {
            let ratio = if t.rhs() > 0.0 { t.lhs() / t.rhs() } else if t.lhs() > 0.0 { f64::INFINITY } else { 0.0 };
            if ratio >= row.ratio {
                row.ratio = ratio;
                row.terms = t;
            }
        }
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let rel = |a: f64, b: f64| (b - a).abs() / a.abs().max(f64::MIN_POSITIVE);
    let start = (0..ratios.len().saturating_sub(2))
        .find(|&i| ratios[i..i + 3].iter().all(|r| r.is_finite()) && rel(ratios[i], ratios[i + 1]) < 0.1 && rel(ratios[i + 1], ratios[i + 2]) < 0.1);
    let s0 = start.map(|i| rows[i].s);
    let c0 = start.map(|i| ratios[i..].iter().copied().fold(0.0, f64::max));
    Ok(CarlemanReport { rows, s0, c0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::{build_weights, select_weight_point, WeightMode};
    use crate::geometry::{CrossSection, ProfileTerm, SectionShape, TwistProfile};
    use crate::metric::assemble_metric;
    use crate::operator::assemble_laplace_beltrami;

    struct Setup {
        grid: Grid3D,
        metric: MetricField,
        lb: DiscreteOperator,
        wf: WeightFields,
    }

    fn setup(n: usize, steps: usize) -> Setup {
        let s = CrossSection::new(SectionShape::Disk { radius: 1.0 }, [n, n]).unwrap();
        let grid = Grid3D::new(s, 1.0, n).unwrap();
        let p = TwistProfile::new(vec![ProfileTerm::Bump { amplitude: 0.04, centre: 0.0, half_width: 0.4 }], 0.4, 0.5)
            .unwrap();
        let metric = assemble_metric(&p, &grid).unwrap();
        let lb = assemble_laplace_beltrami(&metric, &grid);
        let wp = select_weight_point(&grid, 0.8, 0.4, 0.3, 0.2, WeightMode::Interior).unwrap();
        let wf = build_weights(&wp, &grid, 1.0, 2.0 / steps as f64).unwrap();
        Setup { grid, metric, lb, wf }
    }

    /// Smooth field vanishing outside the working domain.
    fn field(st: &Setup) -> WaveField {
        let rp = 0.7;
        let levels = (0..=st.wf.times.len())
            .map(|k| {
                let t = -1.0 + k as f64 * st.wf.dt;
                let full = st.grid.sample(|x| {
                    if x[2].abs() >= rp {
                        return C64::new(0.0, 0.0);
                    }
                    let r2 = x[0] * x[0] + x[1] * x[1];
                    let amp = (1.0 - r2).max(0.0).powi(2) * (1.0 - (x[2] / rp).powi(2)).powi(3) * (1.0 + x[0]);
                    amp * C64::from_polar(1.0, -2.0 * t)
                });
                st.grid.gather(&full)
            })
            .collect();
        WaveField { t0: -1.0, dt: st.wf.dt, levels }
    }

    #[test]
    fn zero_family_is_degenerate_and_zero_field_gives_zero_terms() {
        let st = setup(8, 16);
        let w = field(&st).scale(C64::new(0.0, 0.0));
        let t = carleman_functional(&w, &st.wf, &st.metric, &st.lb, &st.grid, None, &[1.0, 2.0]).unwrap();
        assert!(t.iter().all(|t| t.lhs() == 0.0 && t.rhs() == 0.0));
        let err = verify_carleman(&[w], &st.wf, &st.metric, &st.lb, &st.grid, None, &[1.0]);
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn terms_are_quadratic_in_the_field() {
        let st = setup(8, 16);
        let w = field(&st);
        let w2 = w.scale(C64::new(0.0, 2.0));
        let s = [0.5, 3.0];
        let a = carleman_functional(&w, &st.wf, &st.metric, &st.lb, &st.grid, None, &s).unwrap();
        let b = carleman_functional(&w2, &st.wf, &st.metric, &st.lb, &st.grid, None, &s).unwrap();
        for (a, b) in a.iter().zip(&b) {
            for (x, y) in [
                (a.lhs_grad, b.lhs_grad),
                (a.lhs_w, b.lhs_w),
                (a.lhs_m1, b.lhs_m1),
                (a.lhs_m2, b.lhs_m2),
                (a.rhs_b, b.rhs_b),
            ] {
                assert!(x > 0.0);
                assert!((y - 4.0 * x).abs() <= 1e-12 * y);
            }
        }
    }

    #[test]
    fn field_leaking_out_of_the_working_domain_is_rejected() {
        let st = setup(8, 16);
        let mut w = field(&st);
        w.levels[3].iter_mut().for_each(|v| *v = C64::new(1.0, 0.0));
        let err = carleman_functional(&w, &st.wf, &st.metric, &st.lb, &st.grid, None, &[1.0]);
        assert!(matches!(err, Err(Error::BoundaryTrace(_))));
    }

    #[test]
    fn m2_of_a_constant_is_its_zeroth_order_part() {
        let st = setup(8, 16);
        let ones = vec![C64::new(1.0, 0.0); st.grid.num_nodes()];
        let zeros = vec![C64::new(0.0, 0.0); st.grid.num_nodes()];
        let t = 0.3;
        for s in [0.0, 2.0] {
            let ops = ConjugatedOperators { laplace_beltrami: &st.lb, metric: &st.metric, weights: &st.wf, grid: &st.grid, s };
            let (_, m2) = ops.apply(t, &ones, &zeros);
            for (j, &id) in st.wf.nodes.iter().enumerate() {
                let c = coefficients(&st.wf, &st.metric, &st.grid, t, id);
                let expect = C64::new(s * c.lap_eta, s * c.eta_t);
                assert!((m2[j] - expect).norm() <= 1e-12 * expect.norm().max(1.0));
            }
        }
    }

    #[test]
    fn conjugation_identity_is_second_order() {
        // s = 0.1 keeps the weight resolved on these grids
        let errs: Vec<f64> = [8, 16]
            .iter()
            .map(|&n| {
                let st = setup(n, 8 * n);
                let ops = ConjugatedOperators { laplace_beltrami: &st.lb, metric: &st.metric, weights: &st.wf, grid: &st.grid, s: 0.1 };
                conjugated_apply(&ops, &field(&st)).unwrap()
            })
            .collect();
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }
}
