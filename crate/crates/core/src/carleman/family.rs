use crate::carleman::{working_domain, WeightFields};
use crate::forward::WaveField;
use crate::geometry::{Grid3D, SectionShape};
use crate::C64;

/// Smooth test fields `e(x_τ) μ(x₃) p_j(x_τ) e^{-iω_j t}` on the time axis of
/// `wf`. `e` vanishes on the lateral boundary and `μ` outside the working
/// domain, so each field is admissible for the Carleman functional while
/// keeping a nonzero normal derivative on the lateral boundary.
pub fn carleman_family(grid: &Grid3D, wf: &WeightFields) -> Vec<WaveField> {
    let rp = working_domain(wf.wp.ell, wf.wp.big_l).half_length;
    let shape = grid.section.shape;
    let env = move |x: [f64; 3]| -> f64 {
        let tau = match shape {
            SectionShape::Disk { radius } => (1.0 - (x[0] * x[0] + x[1] * x[1]) / (radius * radius)).max(0.0),
            SectionShape::Rectangle { half_widths } => {
                (1.0 - (x[0] / half_widths[0]).powi(2)).max(0.0) * (1.0 - (x[1] / half_widths[1]).powi(2)).max(0.0)
            }
        };
        let u = x[2] / rp;
        if u.abs() >= 1.0 {
            0.0
        } else {
            tau * (1.0 - u * u).powi(3)
        }
    };
    type Mode = (fn([f64; 3]) -> f64, f64);
    let modes: [Mode; 4] = [
        (|_| 1.0, 1.0),
        (|x| 1.0 + x[0], 3.0),
        (|x| x[1] - 0.5 * x[2], 2.0),
        (|x| x[0] * x[1] + 0.3, 5.0),
    ];
    let levels = wf.times.len() + 1;
    modes
        .iter()
        .map(|&(p, omega)| {
            let spatial = grid.sample(|x| C64::new(env(x) * p(x), 0.0));
            let compact = grid.gather(&spatial);
            WaveField {
                t0: -wf.t_final,
                dt: wf.dt,
                levels: (0..levels)
                    .map(|k| {
                        let ph = C64::from_polar(1.0, -omega * (-wf.t_final + k as f64 * wf.dt));
                        compact.iter().map(|v| v * ph).collect()
                    })
                    .collect(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::carleman::{build_weights, carleman_functional, select_weight_point, WeightMode};
    use crate::geometry::{CrossSection, TwistProfile};
    use crate::metric::assemble_metric;
    use crate::operator::assemble_laplace_beltrami;

    #[test]
    fn family_is_supported_in_the_working_domain() {
        let s = CrossSection::new(SectionShape::Disk { radius: 1.0 }, [8, 8]).unwrap();
        let g = Grid3D::new(s, 1.0, 16).unwrap();
        let wp = select_weight_point(&g, 0.8, 0.4, 0.3, 0.2, WeightMode::Interior).unwrap();
        let wf = build_weights(&wp, &g, 1.0, 1.0 / 8.0).unwrap();
        let m = assemble_metric(&TwistProfile::zero(0.4, 0.1), &g).unwrap();
        let lb = assemble_laplace_beltrami(&m, &g);
        let fam = carleman_family(&g, &wf);
        assert_eq!(fam.len(), 4);
        for w in &fam {
            assert_eq!(w.num_levels(), wf.times.len() + 1);
            let t = carleman_functional(w, &wf, &m, &lb, &g, None, &[1.0]).unwrap();
            assert!(t[0].lhs() > 0.0 && t[0].rhs() > 0.0);
        }
    }
}
