use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shape of the waveguide cross-section `omega`, centred on the guide axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SectionShape {
    Disk { radius: f64 },
    Rectangle { half_widths: [f64; 2] },
}

impl SectionShape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            SectionShape::Disk { radius } => x * x + y * y < radius * radius,
            SectionShape::Rectangle { half_widths } => {
                x.abs() < half_widths[0] && y.abs() < half_widths[1]
            }
        }
    }

    /// Outward unit normal at the boundary point closest to `(x, y)`.
    pub fn outward_normal(&self, x: f64, y: f64) -> [f64; 2] {
        match *self {
            SectionShape::Disk { .. } => {
                let r = (x * x + y * y).sqrt();
                if r == 0.0 {
                    [1.0, 0.0]
                } else {
                    [x / r, y / r]
                }
            }
            SectionShape::Rectangle { half_widths } => {
                let dx = half_widths[0] - x.abs();
                let dy = half_widths[1] - y.abs();
                if dx <= dy {
                    [x.signum(), 0.0]
                } else {
                    [0.0, y.signum()]
                }
            }
        }
    }

    fn bounding_half_widths(&self) -> [f64; 2] {
        match *self {
            SectionShape::Disk { radius } => [radius, radius],
            SectionShape::Rectangle { half_widths } => half_widths,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            SectionShape::Disk { radius } => std::f64::consts::PI * radius * radius,
            SectionShape::Rectangle { half_widths } => 4.0 * half_widths[0] * half_widths[1],
        }
    }
}

/// Cross-section sampled on a uniform tensor grid covering its bounding box.
///
/// Nodes strictly inside the shape (and off the box edge) are unknowns; the
/// remaining nodes carry homogeneous Dirichlet data.
#[derive(Clone, Debug)]
pub struct CrossSection {
    pub shape: SectionShape,
    /// Number of cells per transverse axis.
    pub cells: [usize; 2],
    pub spacing: [f64; 2],
    pub lower: [f64; 2],
    pub interior: Vec<bool>,
    pub boundary_nodes: Vec<usize>,
}

impl CrossSection {
    pub fn new(shape: SectionShape, cells: [usize; 2]) -> Result<Self> {
        if cells[0] < 4 || cells[1] < 4 {
            return Err(Error::Grid(format!("need at least 4 cells per axis, got {cells:?}")));
        }
        let half = shape.bounding_half_widths();
        if !(half[0] > 0.0 && half[1] > 0.0) {
            return Err(Error::Grid("cross-section extents must be positive".into()));
        }
        if !shape.contains(0.0, 0.0) {
            return Err(Error::Grid("cross-section must contain the origin".into()));
        }
        let spacing = [2.0 * half[0] / cells[0] as f64, 2.0 * half[1] / cells[1] as f64];
        let lower = [-half[0], -half[1]];
        let (nx, ny) = (cells[0] + 1, cells[1] + 1);
        let mut interior = vec![false; nx * ny];
        for j in 1..cells[1] {
            for i in 1..cells[0] {
                let x = lower[0] + i as f64 * spacing[0];
                let y = lower[1] + j as f64 * spacing[1];
                interior[i + nx * j] = shape.contains(x, y);
            }
        }
        let mut boundary_nodes = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let id = i + nx * j;
                if interior[id] {
                    continue;
                }
                let touches = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)].iter().any(|&(di, dj)| {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny && interior[a as usize + nx * b as usize]
                });
                if touches {
                    boundary_nodes.push(id);
                }
            }
        }
        let section = CrossSection { shape, cells, spacing, lower, interior, boundary_nodes };
        if !section.is_connected() {
            return Err(Error::Grid("interior mask is not connected".into()));
        }
        Ok(section)
    }

    pub fn nodes_per_row(&self) -> usize {
        self.cells[0] + 1
    }

    pub fn num_nodes(&self) -> usize {
        (self.cells[0] + 1) * (self.cells[1] + 1)
    }

    pub fn coords(&self, id: usize) -> [f64; 2] {
        let nx = self.nodes_per_row();
        [
            self.lower[0] + (id % nx) as f64 * self.spacing[0],
            self.lower[1] + (id / nx) as f64 * self.spacing[1],
        ]
    }

    pub fn num_interior(&self) -> usize {
        self.interior.iter().filter(|&&b| b).count()
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing[0] * self.spacing[1]
    }

    fn is_connected(&self) -> bool {
        let nx = self.nodes_per_row();
        let ny = self.cells[1] + 1;
        let Some(start) = self.interior.iter().position(|&b| b) else {
            return false;
        };
        let mut seen = vec![false; self.interior.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(id) = stack.pop() {
            count += 1;
            let (i, j) = (id % nx, id / nx);
            let mut push = |a: usize, b: usize| {
                let n = a + nx * b;
                if self.interior[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < nx {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < ny {
                push(i, j + 1);
            }
        }
        count == self.num_interior()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mask_contains_origin_and_is_symmetric() {
        let s = CrossSection::new(SectionShape::Disk { radius: 1.0 }, [16, 16]).unwrap();
        let centre = 8 + 17 * 8;
        assert!(s.interior[centre]);
        for id in 0..s.num_nodes() {
            let [x, y] = s.coords(id);
            let nx = s.nodes_per_row();
            let mirror = (16 - id % nx) + nx * (16 - id / nx);
            assert_eq!(s.interior[id], s.interior[mirror], "node {x},{y}");
        }
    }

    #[test]
    fn boundary_nodes_are_masked_neighbours() {
        let s = CrossSection::new(SectionShape::Disk { radius: 1.0 }, [12, 12]).unwrap();
        for &b in &s.boundary_nodes {
            assert!(!s.interior[b]);
        }
        // every masked-out 4-neighbour of an interior node is listed
        let nx = s.nodes_per_row();
        for id in 0..s.num_nodes() {
            if !s.interior[id] {
                continue;
            }
            for n in [id - 1, id + 1, id - nx, id + nx] {
                if !s.interior[n] {
                    assert!(s.boundary_nodes.contains(&n));
                }
            }
        }
    }

    #[test]
    fn rectangle_interior_count() {
        let s = CrossSection::new(SectionShape::Rectangle { half_widths: [1.0, 0.5] }, [8, 6]).unwrap();
        assert_eq!(s.num_interior(), 7 * 5);
        assert_eq!(s.boundary_nodes.len(), 2 * 7 + 2 * 5);
    }

    #[test]
    fn too_coarse_grid_is_rejected() {
        assert!(CrossSection::new(SectionShape::Disk { radius: 1.0 }, [2, 8]).is_err());
    }
}
