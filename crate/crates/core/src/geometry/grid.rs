use crate::geometry::section::CrossSection;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};

const NONE: u32 = u32::MAX;

/// Truncated guide `omega x (-Lambda, Lambda)` on a uniform grid.
///
/// Fields are stored on every grid node (`num_nodes`) with zeros on the
/// Dirichlet nodes; linear solves work on the compact interior numbering.
#[derive(Clone, Debug)]
pub struct Grid3D {
    pub section: CrossSection,
    pub axial_half_length: f64,
    pub axial_cells: usize,
    pub spacing: [f64; 3],
    pub lower: [f64; 3],
    unknown_of: Vec<u32>,
    node_of: Vec<usize>,
}

impl Grid3D {
    pub fn new(section: CrossSection, axial_half_length: f64, axial_cells: usize) -> Result<Self> {
        if axial_cells < 4 {
            return Err(Error::Grid("need at least 4 axial cells".into()));
        }
        if axial_half_length <= 0.0 {
            return Err(Error::Grid("axial half-length must be positive".into()));
        }
        let spacing = [
            section.spacing[0],
            section.spacing[1],
            2.0 * axial_half_length / axial_cells as f64,
        ];
        let lower = [section.lower[0], section.lower[1], -axial_half_length];
        let plane = section.num_nodes();
        let total = plane * (axial_cells + 1);
        let mut unknown_of = vec![NONE; total];
        let mut node_of = Vec::new();
        for k in 1..axial_cells {
            for (c, &inside) in section.interior.iter().enumerate() {
                if inside {
                    let id = c + plane * k;
                    unknown_of[id] = node_of.len() as u32;
                    node_of.push(id);
                }
            }
        }
        Ok(Grid3D { section, axial_half_length, axial_cells, spacing, lower, unknown_of, node_of })
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.section.cells[0] + 1, self.section.cells[1] + 1, self.axial_cells + 1]
    }

    pub fn strides(&self) -> [usize; 3] {
        let d = self.dims();
        [1, d[0], d[0] * d[1]]
    }

    pub fn num_nodes(&self) -> usize {
        let d = self.dims();
        d[0] * d[1] * d[2]
    }

    pub fn num_unknowns(&self) -> usize {
        self.node_of.len()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let d = self.dims();
        i + d[0] * (j + d[1] * k)
    }

    pub fn ijk(&self, id: usize) -> [usize; 3] {
        let d = self.dims();
        [id % d[0], (id / d[0]) % d[1], id / (d[0] * d[1])]
    }

    pub fn coords(&self, id: usize) -> [f64; 3] {
        let [i, j, k] = self.ijk(id);
        [
            self.lower[0] + i as f64 * self.spacing[0],
            self.lower[1] + j as f64 * self.spacing[1],
            self.lower[2] + k as f64 * self.spacing[2],
        ]
    }

    pub fn axial_coord(&self, k: usize) -> f64 {
        self.lower[2] + k as f64 * self.spacing[2]
    }

    /// Neighbour of `id` shifted by `off`, or `None` when it leaves the box.
    pub fn offset(&self, id: usize, off: [i64; 3]) -> Option<usize> {
        let d = self.dims();
        let p = self.ijk(id);
        let mut q = [0usize; 3];
        for a in 0..3 {
            let v = p[a] as i64 + off[a];
            if v < 0 || v >= d[a] as i64 {
                return None;
            }
            q[a] = v as usize;
        }
        Some(self.index(q[0], q[1], q[2]))
    }

    pub fn is_interior(&self, id: usize) -> bool {
        self.unknown_of[id] != NONE
    }

    pub fn unknown(&self, id: usize) -> Option<usize> {
        let u = self.unknown_of[id];
        (u != NONE).then_some(u as usize)
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.node_of
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Expand an interior vector to a full-grid field with zero Dirichlet data.
    pub fn scatter(&self, compact: &[C64]) -> Vec<C64> {
        let mut full = vec![C64::new(0.0, 0.0); self.num_nodes()];
        for (u, &id) in self.node_of.iter().enumerate() {
            full[id] = compact[u];
        }
        full
    }

    pub fn gather(&self, full: &[C64]) -> Vec<C64> {
        self.node_of.iter().map(|&id| full[id]).collect()
    }

    /// Sample a function on every interior node, zero elsewhere.
    pub fn sample<F: Fn([f64; 3]) -> C64>(&self, f: F) -> Vec<C64> {
        let mut full = vec![C64::new(0.0, 0.0); self.num_nodes()];
        for &id in &self.node_of {
            full[id] = f(self.coords(id));
        }
        full
    }

    /// Value of a full field at `id + off`, zero outside the box.
    #[inline]
    pub fn value_at(&self, field: &[C64], id: usize, off: [i64; 3]) -> C64 {
        self.offset(id, off).map_or(C64::new(0.0, 0.0), |n| field[n])
    }

    /// Centred first difference along `axis` at node `id`.
    pub fn centred_diff(&self, field: &[C64], id: usize, axis: usize) -> C64 {
        let mut e = [0i64; 3];
        e[axis] = 1;
        let plus = self.value_at(field, id, e);
        e[axis] = -1;
        let minus = self.value_at(field, id, e);
        (plus - minus) / (2.0 * self.spacing[axis])
    }

    pub fn gradient(&self, field: &[C64], id: usize) -> [C64; 3] {
        [
            self.centred_diff(field, id, 0),
            self.centred_diff(field, id, 1),
            self.centred_diff(field, id, 2),
        ]
    }

    /// Second difference `d_a d_b` at `id` (standard three-point for `a == b`).
    pub fn second_diff(&self, field: &[C64], id: usize, a: usize, b: usize) -> C64 {
        if a == b {
            let mut e = [0i64; 3];
            e[a] = 1;
            let p = self.value_at(field, id, e);
            e[a] = -1;
            let m = self.value_at(field, id, e);
            (p - 2.0 * field[id] + m) / (self.spacing[a] * self.spacing[a])
        } else {
            let mut acc = C64::new(0.0, 0.0);
            for (sa, sb, w) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                let mut e = [0i64; 3];
                e[a] = sa;
                e[b] = sb;
                acc += w * self.value_at(field, id, e);
            }
            acc / (4.0 * self.spacing[a] * self.spacing[b])
        }
    }
}

/// Sub-region of the cross-section used for observation sets and cutoffs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SubSection {
    Whole,
    /// Open disc `|x_tau - centre| < radius`.
    Ball { centre: [f64; 2], radius: f64 },
    /// Points farther than `distance` from `centre`.
    FarFrom { centre: [f64; 2], distance: f64 },
}

impl SubSection {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        match *self {
            SubSection::Whole => true,
            SubSection::Ball { centre, radius } => dist2(x, centre) < radius * radius,
            SubSection::FarFrom { centre, distance } => dist2(x, centre) > distance * distance,
        }
    }
}

pub(crate) fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Cylinder `sub x (-half_length, half_length)` restricted to interior nodes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub section: SubSection,
    pub half_length: f64,
}

impl Cylinder {
    pub fn new(section: SubSection, half_length: f64) -> Self {
        Cylinder { section, half_length }
    }

    pub fn contains(&self, x: [f64; 3]) -> bool {
        x[2].abs() < self.half_length && self.section.contains([x[0], x[1]])
    }

    /// Interior grid nodes inside the cylinder.
    pub fn nodes(&self, grid: &Grid3D) -> Vec<usize> {
        grid.interior_nodes()
            .iter()
            .copied()
            .filter(|&id| self.contains(grid.coords(id)))
            .collect()
    }

    pub fn check_inside(&self, grid: &Grid3D) -> Result<()> {
        if self.half_length > grid.axial_half_length {
            return Err(Error::Region(format!(
                "half-length {} exceeds truncation {}",
                self.half_length, grid.axial_half_length
            )));
        }
        if self.nodes(grid).is_empty() {
            return Err(Error::Region("region contains no interior node".into()));
        }
        Ok(())
    }
}
