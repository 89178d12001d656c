use crate::geometry::grid::{dist2, Cylinder, Grid3D, SubSection};
use crate::{Error, Result};

/// Quintic smoothstep: 0 for `t <= 0`, 1 for `t >= 1`, C2 in between.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Derivatives `(S', S'')` of [`smoothstep`].
pub fn smoothstep_derivatives(t: f64) -> (f64, f64) {
    if !(0.0..=1.0).contains(&t) {
        return (0.0, 0.0);
    }
    (30.0 * t * t * (t - 1.0) * (t - 1.0), 60.0 * t * (2.0 * t * t - 3.0 * t + 1.0))
}

/// Cutoff `chi = rho(x_tau) mu(x3)` equal to one on `omega_1 x I_ell` and zero
/// outside `omega_0 x I_r`.
#[derive(Clone, Debug)]
pub struct CutoffPair {
    pub omega0: SubSection,
    pub omega1: SubSection,
    pub ell: f64,
    /// `r = (ell + L) / 2`.
    pub r: f64,
}

impl CutoffPair {
    pub fn rho(&self, x: [f64; 2]) -> f64 {
        match (self.omega0, self.omega1) {
            (SubSection::Whole, _) => 1.0,
            (SubSection::Ball { centre, radius: r0 }, SubSection::Ball { radius: r1, .. }) => {
                let d = dist2(x, centre).sqrt();
                smoothstep((r0 - d) / (r0 - r1))
            }
            (SubSection::FarFrom { centre, distance: d0 }, SubSection::FarFrom { distance: d1, .. }) => {
                let d = dist2(x, centre).sqrt();
                smoothstep((d - d0) / (d1 - d0))
            }
            _ => unreachable!("validated in build_cutoffs"),
        }
    }

    pub fn mu(&self, x3: f64) -> f64 {
        smoothstep((self.r - x3.abs()) / (self.r - self.ell))
    }

    pub fn chi(&self, x: [f64; 3]) -> f64 {
        self.rho([x[0], x[1]]) * self.mu(x[2])
    }

    /// Region `omega_0 x I_r` outside of which `chi` vanishes.
    pub fn outer(&self) -> Cylinder {
        Cylinder::new(self.omega0, self.r)
    }

    pub fn inner(&self) -> Cylinder {
        Cylinder::new(self.omega1, self.ell)
    }

    /// `chi` sampled on every grid node.
    pub fn sample(&self, grid: &Grid3D) -> Vec<f64> {
        (0..grid.num_nodes()).map(|id| self.chi(grid.coords(id))).collect()
    }

    /// Largest second difference of `chi` over the grid (C2 proxy).
    pub fn max_second_difference(&self, grid: &Grid3D) -> f64 {
        let chi = self.sample(grid);
        let mut worst: f64 = 0.0;
        for id in 0..grid.num_nodes() {
            for a in 0..3 {
                let mut e = [0i64; 3];
                e[a] = 1;
                let (Some(p), Some(m)) = (grid.offset(id, e), grid.offset(id, [-e[0], -e[1], -e[2]])) else {
                    continue;
                };
                let h = grid.spacing[a];
                worst = worst.max(((chi[p] - 2.0 * chi[id] + chi[m]) / (h * h)).abs());
            }
        }
        worst
    }
}

/// Builds the cutoff pair for `omega_1 ⊊ omega_0` and `ell < r = (ell + L)/2`.
pub fn build_cutoffs(omega0: SubSection, omega1: SubSection, ell: f64, big_l: f64, grid: &Grid3D) -> Result<CutoffPair> {
    let r = 0.5 * (ell + big_l);
    if !(ell > 0.0 && ell < r) {
        return Err(Error::Cutoff(format!("need 0 < ell < r, got ell = {ell}, r = {r}")));
    }
    let htau = grid.spacing[0].max(grid.spacing[1]);
    if r - ell < 3.0 * grid.spacing[2] {
        return Err(Error::Cutoff(format!(
            "axial transition band {} thinner than 3 cells ({})",
            r - ell,
            3.0 * grid.spacing[2]
        )));
    }
    let band = match (omega0, omega1) {
        (SubSection::Whole, SubSection::Whole) => f64::INFINITY,
        (SubSection::Ball { centre: c0, radius: r0 }, SubSection::Ball { centre: c1, radius: r1 }) => {
            if c0 != c1 || r1 >= r0 {
                return Err(Error::Cutoff("omega_1 must be a concentric smaller ball inside omega_0".into()));
            }
            r0 - r1
        }
        (SubSection::FarFrom { centre: c0, distance: d0 }, SubSection::FarFrom { centre: c1, distance: d1 }) => {
            if c0 != c1 || d1 <= d0 {
                return Err(Error::Cutoff("omega_1 must lie farther from the weight point than omega_0".into()));
            }
            d1 - d0
        }
        _ => return Err(Error::Cutoff("omega_0 and omega_1 must be of the same kind".into())),
    };
    if band < 3.0 * htau {
        return Err(Error::Cutoff(format!("transverse transition band {band} thinner than 3 cells")));
    }
    let sec = &grid.section;
    let (mut in0, mut in1, mut strict0, mut strict1) = (0usize, 0usize, false, false);
    for id in 0..sec.num_nodes() {
        if !sec.interior[id] {
            continue;
        }
        let x = sec.coords(id);
        let a0 = omega0.contains(x);
        let a1 = omega1.contains(x);
        if a1 && !a0 {
            return Err(Error::Cutoff("omega_1 is not contained in omega_0".into()));
        }
        in0 += a0 as usize;
        in1 += a1 as usize;
        strict0 |= !a0;
        strict1 |= a0 && !a1;
    }
    if in1 == 0 {
        return Err(Error::Cutoff("omega_1 has no grid node".into()));
    }
    if omega0 != SubSection::Whole && !(strict0 && strict1) {
        return Err(Error::Cutoff("inclusions omega_1 ⊊ omega_0 ⊊ omega are not strict on the mask".into()));
    }
    let _ = in0;
    Ok(CutoffPair { omega0, omega1, ell, r })
}
