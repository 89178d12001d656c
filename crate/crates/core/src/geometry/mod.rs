//! Cross-sections, truncated guide grids, twist profiles and cutoffs.

mod cutoff;
mod grid;
mod profile;
mod section;

pub use cutoff::{build_cutoffs, smoothstep, smoothstep_derivatives, CutoffPair};
pub use grid::{Cylinder, Grid3D, SubSection};
pub(crate) use grid::dist2;
pub use profile::{
    make_twist_profile, spline_basis, spline_intervals, ProfileKind, ProfileTerm, TwistProfile,
    ADMISSIBILITY_SAMPLES,
};
pub use section::{CrossSection, SectionShape};

use crate::C64;

/// Image of `x` under the rotation `r_theta(x3)`; the axial coordinate is unchanged.
pub fn twist_map(x: [f64; 3], theta: &TwistProfile) -> [f64; 3] {
    rotate(x, theta.angle(x[2]))
}

/// Rotation by angle `a` in the convention of the twisted guide.
pub fn rotate(x: [f64; 3], a: f64) -> [f64; 3] {
    let (s, c) = a.sin_cos();
    [c * x[0] + s * x[1], -s * x[0] + c * x[1], x[2]]
}

/// Angular derivative `x1 d2 u - x2 d1 u` on interior nodes (zero elsewhere).
pub fn angular_derivative(grid: &Grid3D, u: &[C64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); grid.num_nodes()];
    for &id in grid.interior_nodes() {
        out[id] = angular_at(grid, u, id);
    }
    out
}

#[inline]
pub(crate) fn angular_at(grid: &Grid3D, u: &[C64], id: usize) -> C64 {
    let x = grid.coords(id);
    x[0] * grid.centred_diff(u, id, 1) - x[1] * grid.centred_diff(u, id, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid3D {
        let s = CrossSection::new(SectionShape::Disk { radius: 1.0 }, [n, n]).unwrap();
        Grid3D::new(s, 2.0, n).unwrap()
    }

    /// Nodes whose centred stencils stay inside the mask.
    fn deep_nodes(g: &Grid3D) -> Vec<usize> {
        g.interior_nodes()
            .iter()
            .copied()
            .filter(|&id| {
                [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]
                    .iter()
                    .all(|&o| g.offset(id, o).is_some_and(|n| g.is_interior(n)))
            })
            .collect()
    }

    #[test]
    fn angular_derivative_analytic_cases() {
        let g = grid(12);
        type Field = fn([f64; 3]) -> f64;
        let cases: [(Field, Field); 3] = [
            (|x| x[0], |x| -x[1]),
            (|x| x[0] * x[0] + x[1] * x[1], |_| 0.0),
            (|x| x[0] * x[1], |x| x[0] * x[0] - x[1] * x[1]),
        ];
        for (f, df) in cases {
            let u = g.sample(|x| C64::new(f(x), 0.0));
            let d = angular_derivative(&g, &u);
            for id in deep_nodes(&g) {
                assert!((d[id].re - df(g.coords(id))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn radial_fields_are_annihilated_at_second_order() {
        let err = |n: usize| {
            let g = grid(n);
            let u = g.sample(|x| C64::new((-(x[0] * x[0] + x[1] * x[1]) * 2.0).exp(), 0.0));
            let d = angular_derivative(&g, &u);
            deep_nodes(&g).iter().map(|&id| d[id].norm()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(16), err(32));
        assert!(e1 < 1e-12 && e2 < 1e-12 || (e1 / e2).log2() > 1.8, "{e1} {e2}");
    }

    #[test]
    fn twist_map_examples() {
        let zero = TwistProfile::zero(1.0, 0.1);
        assert_eq!(twist_map([0.3, -0.2, 0.5], &zero), [0.3, -0.2, 0.5]);
        let bump = TwistProfile::unchecked(
            vec![ProfileTerm::Bump { amplitude: 0.5, centre: 0.0, half_width: 1.0 }],
            1.0,
            10.0,
        );
        assert_eq!(twist_map([0.0, 0.0, 0.4], &bump), [0.0, 0.0, 0.4]);
        let r = rotate([1.0, 0.0, 2.0], std::f64::consts::FRAC_PI_2);
        assert!((r[0]).abs() < 1e-15 && (r[1] + 1.0).abs() < 1e-15 && r[2] == 2.0);
    }

    proptest! {
        #[test]
        fn twist_map_is_an_isometry_of_the_section(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -2.0f64..2.0, a in 0.0f64..0.5) {
            let p = TwistProfile::unchecked(
                vec![ProfileTerm::Bump { amplitude: a, centre: 0.0, half_width: 1.0 }], 1.0, 10.0);
            let m = twist_map([x, y, z], &p);
            prop_assert!(((m[0] * m[0] + m[1] * m[1]) - (x * x + y * y)).abs() < 1e-14);
            prop_assert_eq!(m[2], z);
        }
    }
}
