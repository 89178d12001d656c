use rayon::prelude::*;
use serde::Serialize;

use crate::forward::{h1_norm_sq, h2_norm_sq, time_derivative, WaveField};
use crate::geometry::{Cylinder, Grid3D, SectionShape, SubSection};
use crate::metric::{quad_form, MetricField};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ObservationKind {
    Interior,
    Boundary,
}

/// Where the measurement is taken.
#[derive(Clone, Debug)]
pub enum ObservationRegion {
    /// Volume data on `omega_0 x (-L, L)`.
    Interior(Cylinder),
    /// Lateral Dirichlet nodes with their surface weights.
    Boundary { nodes: Vec<usize>, weights: Vec<f64> },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ObservationNorms {
    /// `L2(0,T; H1(Ω₀(L)))` or `L2(Σ₀)` norm of the measured derivative.
    pub data: f64,
    /// H2 norm of the initial gap (on `Ω₀` for interior data).
    pub initial_gap: f64,
}

/// Measurements of `z = q' - q̃'` for `t >= 0` plus the initial gap.
#[derive(Clone, Debug)]
pub struct ObservationSet {
    pub kind: ObservationKind,
    pub times: Vec<f64>,
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
    /// `data[n][j]` is the value at `times[n]` on `nodes[j]`.
    pub data: Vec<Vec<C64>>,
    /// `q0 - q̃0` on the full grid, zero outside the region it is measured on.
    pub initial_gap: Vec<C64>,
    pub norms: ObservationNorms,
}

fn boundary_perimeter(shape: SectionShape) -> f64 {
    match shape {
        SectionShape::Disk { radius } => 2.0 * std::f64::consts::PI * radius,
        SectionShape::Rectangle { half_widths } => 4.0 * (half_widths[0] + half_widths[1]),
    }
}

/// Lateral boundary nodes with `|x3| < half_length` accepted by `keep`,
/// which receives the node and its outward normal. Each node carries the
/// arc length `perimeter / #section boundary nodes` times the axial step.
pub fn lateral_boundary_nodes<F: Fn([f64; 3], [f64; 2]) -> bool>(grid: &Grid3D, half_length: f64, keep: F) -> ObservationRegion {
    let sec = &grid.section;
    let arc = boundary_perimeter(sec.shape) / sec.boundary_nodes.len() as f64;
    let plane = sec.num_nodes();
    let mut nodes = Vec::new();
    for k in 1..grid.axial_cells {
        let z = grid.axial_coord(k);
        if z.abs() >= half_length {
            continue;
        }
        for &c in &sec.boundary_nodes {
            let [x, y] = sec.coords(c);
            if keep([x, y, z], sec.shape.outward_normal(x, y)) {
                nodes.push(c + plane * k);
            }
        }
    }
    let weights = vec![arc * grid.spacing[2]; nodes.len()];
    ObservationRegion::Boundary { nodes, weights }
}

fn one_sided(grid: &Grid3D, w: &[C64], id: usize, axis: usize) -> C64 {
    let h = grid.spacing[axis];
    let step = |s: i64| {
        let mut e = [0i64; 3];
        e[axis] = s;
        grid.offset(id, e)
    };
    for s in [1i64, -1] {
        if let Some(n1) = step(s).filter(|&n| grid.is_interior(n)) {
            let sign = s as f64;
            return match step(2 * s) {
                Some(n2) => sign * (-3.0 * w[id] + 4.0 * w[n1] - w[n2]) / (2.0 * h),
                None => sign * (w[n1] - w[id]) / h,
            };
        }
    }
    grid.centred_diff(w, id, axis)
}

/// Metric normal derivative `∇wᵀ g⁻¹ n / sqrt(nᵀ g⁻¹ n)` at a boundary node.
pub fn normal_derivative(grid: &Grid3D, metric: &MetricField, w: &[C64], id: usize) -> C64 {
    let x = grid.coords(id);
    let n2 = grid.section.shape.outward_normal(x[0], x[1]);
    let n = [n2[0], n2[1], 0.0];
    let grad = [one_sided(grid, w, id, 0), one_sided(grid, w, id, 1), grid.centred_diff(w, id, 2)];
    let gi = &metric.g_inv[id];
    let mut s = C64::new(0.0, 0.0);
    for j in 0..3 {
        for k in 0..3 {
            s += grad[j] * gi[j][k] * n[k];
        }
    }
    s / quad_form(gi, n, n).sqrt()
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => 0.0,
        n => dt * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

/// Builds the observation set for the pair `(q, q̃)`.
pub fn extract_observations(
    q: &WaveField,
    q_ref: &WaveField,
    region: &ObservationRegion,
    metric: &MetricField,
    grid: &Grid3D,
) -> Result<ObservationSet> {
    let y = q.sub(q_ref)?;
    let z = time_derivative(&y)?;
    let k0 = y.index_of(0.0).ok_or_else(|| Error::TimeGrid("t = 0 is not a time level".into()))?;
    let y0 = y.full(grid, k0);
    let range: Vec<usize> = (k0..z.num_levels()).collect();
    let times = range.iter().map(|&k| z.time(k)).collect();
    match region {
        ObservationRegion::Interior(cyl) => {
            cyl.check_inside(grid)?;
            let nodes = cyl.nodes(grid);
            let per_level: Vec<(Vec<C64>, f64)> = range
                .par_iter()
                .map(|&k| {
                    let full = z.full(grid, k);
                    (nodes.iter().map(|&id| full[id]).collect(), h1_norm_sq(grid, &full, &nodes))
                })
                .collect();
            let sq: Vec<f64> = per_level.iter().map(|p| p.1).collect();
            let gap_region = Cylinder::new(cyl.section, grid.axial_half_length + grid.spacing[2]);
            let gap_nodes = gap_region.nodes(grid);
            let mut initial_gap = vec![C64::new(0.0, 0.0); grid.num_nodes()];
            for &id in &gap_nodes {
                initial_gap[id] = y0[id];
            }
            let norms = ObservationNorms {
                data: trapezoid(&sq, z.dt).sqrt(),
                initial_gap: h2_norm_sq(grid, &y0, &gap_nodes).sqrt(),
            };
            Ok(ObservationSet {
                kind: ObservationKind::Interior,
                times,
                weights: vec![grid.cell_volume(); nodes.len()],
                nodes,
                data: per_level.into_iter().map(|p| p.0).collect(),
                initial_gap,
                norms,
            })
        }
        ObservationRegion::Boundary { nodes, weights } => {
            if nodes.iter().any(|&id| id >= grid.num_nodes() || grid.is_interior(id)) {
                return Err(Error::Region("boundary observation nodes must be Dirichlet nodes".into()));
            }
            let data: Vec<Vec<C64>> = range
                .par_iter()
                .map(|&k| {
                    let full = z.full(grid, k);
                    nodes.iter().map(|&id| normal_derivative(grid, metric, &full, id)).collect()
                })
                .collect();
            let sq: Vec<f64> = data
                .iter()
                .map(|l| l.iter().zip(weights).map(|(v, w)| v.norm_sqr() * w).sum())
                .collect();
            let all = grid.interior_nodes().to_vec();
            let norms = ObservationNorms {
                data: trapezoid(&sq, z.dt).sqrt(),
                initial_gap: h2_norm_sq(grid, &y0, &all).sqrt(),
            };
            Ok(ObservationSet {
                kind: ObservationKind::Boundary,
                times,
                nodes: nodes.clone(),
                weights: weights.clone(),
                data,
                initial_gap: y0,
                norms,
            })
        }
    }
}

impl ObservationSet {
    /// Whole cross-section interior region helper.
    pub fn whole_interior(half_length: f64) -> ObservationRegion {
        ObservationRegion::Interior(Cylinder::new(SubSection::Whole, half_length))
    }
}
