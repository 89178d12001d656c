//! Discrete Sobolev norms on node subsets, with cell-volume weights.

use crate::geometry::Grid3D;
use crate::C64;

pub fn l2_norm_sq(grid: &Grid3D, u: &[C64], nodes: &[usize]) -> f64 {
    nodes.iter().map(|&id| u[id].norm_sqr()).sum::<f64>() * grid.cell_volume()
}

/// `L2 + |grad|²` with centred first differences.
pub fn h1_norm_sq(grid: &Grid3D, u: &[C64], nodes: &[usize]) -> f64 {
    nodes
        .iter()
        .map(|&id| u[id].norm_sqr() + grid.gradient(u, id).iter().map(|g| g.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        * grid.cell_volume()
}

/// H1 plus all second differences `d_a d_b`.
pub fn h2_norm_sq(grid: &Grid3D, u: &[C64], nodes: &[usize]) -> f64 {
    let second: f64 = nodes
        .iter()
        .map(|&id| {
            let mut s = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    s += grid.second_diff(u, id, a, b).norm_sqr();
                }
            }
            s
        })
        .sum();
    h1_norm_sq(grid, u, nodes) + second * grid.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CrossSection, SectionShape};

    #[test]
    fn norms_of_linear_field() {
        let s = CrossSection::new(SectionShape::Rectangle { half_widths: [1.0, 1.0] }, [8, 8]).unwrap();
        let g = Grid3D::new(s, 1.0, 8).unwrap();
        let u: Vec<C64> = (0..g.num_nodes()).map(|id| C64::new(g.coords(id)[0], 0.0)).collect();
        let nodes = g.interior_nodes().to_vec();
        let l2 = l2_norm_sq(&g, &u, &nodes);
        let h1 = h1_norm_sq(&g, &u, &nodes);
        assert!((h1 - l2 - nodes.len() as f64 * g.cell_volume()).abs() < 1e-12);
        assert!((h2_norm_sq(&g, &u, &nodes) - h1).abs() < 1e-12);
        let u2: Vec<C64> = u.iter().map(|v| v * 3.0).collect();
        assert!((h2_norm_sq(&g, &u2, &nodes) - 9.0 * h1).abs() < 1e-10);
    }
}
