//! Experiment configuration: a top-level `experiment` key plus flat
//! `[geometry]`, `[physics]`, `[carleman]` and `[inverse]` tables.

use serde::{Deserialize, Serialize};

use crate::geometry::{
    make_twist_profile, CrossSection, Grid3D, ProfileKind, SectionShape, SubSection, TwistProfile,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Forward,
    Carleman,
    LemmaChecks,
    InverseInterior,
    InverseBoundary,
    Stability,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Forward => "forward",
            ExperimentKind::Carleman => "carleman",
            ExperimentKind::LemmaChecks => "lemma_checks",
            ExperimentKind::InverseInterior => "inverse_interior",
            ExperimentKind::InverseBoundary => "inverse_boundary",
            ExperimentKind::Stability => "stability",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Disk,
    Rectangle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// `x₂ e(x_τ) cos(πx₃/2Λ)`, real.
    Angular,
    /// `(x₁ + i x₂) e(x_τ) cos(πx₃/2Λ)`, complex.
    Vortex,
    /// `e(x_τ) cos(πx₃/2Λ)`; an exact discrete eigenvector of the untwisted
    /// operator on rectangles.
    Eigenmode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Interior,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `θ̃ + c δ` for `c = 1, 1/2, 1/4, 1/8`.
    Dyadic,
    /// Independent random admissible pairs.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub section: SectionKind,
    /// Disk radius.
    #[serde(default = "one")]
    pub radius: f64,
    /// Rectangle half-widths.
    #[serde(default = "ones")]
    pub half_widths: [f64; 2],
    pub cells: [usize; 2],
    pub axial_cells: usize,
    /// `ℓ`, half-length of the twist support.
    pub ell: f64,
    /// `L`, half-length of the observation cylinder.
    pub big_l: f64,
    /// `Λ`, truncation of the guide.
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub t_final: f64,
    pub dt: f64,
    /// Bound `ε` on the C¹ norm of every twist rate.
    pub bound: f64,
    /// Unknown profile `θ`.
    pub profile: ProfileKind,
    pub profile_params: Vec<f64>,
    /// Known profile `θ̃`.
    pub reference: ProfileKind,
    pub reference_params: Vec<f64>,
    pub initial_state: StateKind,
    pub amplitude: f64,
    /// Scale of the initial gap `q₀ - q̃₀` (a fixed smooth shape).
    pub gap_amplitude: f64,
    /// Centre and radius of the ball `ω₀` for interior data.
    pub omega0_centre: [f64; 2],
    pub omega0_radius: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            t_final: 0.05,
            dt: 0.05 / 64.0,
            bound: 0.5,
            profile: ProfileKind::Zero,
            profile_params: Vec::new(),
            reference: ProfileKind::Zero,
            reference_params: Vec::new(),
            initial_state: StateKind::Angular,
            amplitude: 1.0,
            gap_amplitude: 0.0,
            omega0_centre: [0.5, 0.0],
            omega0_radius: 0.3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CarlemanConfig {
    pub mode: WeightKind,
    pub gamma: f64,
    pub d3: f64,
    /// Distance of `a_τ` from the section (boundary mode).
    pub d_tau: f64,
    /// Direction along which `a_τ` is placed (boundary mode).
    pub direction: [f64; 2],
    pub s_min: f64,
    pub s_max: f64,
    pub s_steps: usize,
}

impl Default for CarlemanConfig {
    fn default() -> Self {
        CarlemanConfig {
            mode: WeightKind::Interior,
            gamma: 1.0,
            d3: 0.5,
            d_tau: 1.5,
            direction: [1.0, 0.0],
            s_min: 1.0,
            s_max: 50.0,
            s_steps: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InverseConfig {
    pub dim: usize,
    pub lambda: f64,
    pub sigma: f64,
    pub iterations: usize,
    pub seed: u64,
    pub q_min: f64,
    pub family: FamilyKind,
    pub pairs: usize,
}

impl Default for InverseConfig {
    fn default() -> Self {
        InverseConfig {
            dim: 8,
            lambda: 1e-8,
            sigma: 0.0,
            iterations: 20,
            seed: 0,
            q_min: 1e-4,
            family: FamilyKind::Dyadic,
            pairs: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub carleman: CarlemanConfig,
    #[serde(default)]
    pub inverse: InverseConfig,
}

fn one() -> f64 {
    1.0
}

fn ones() -> [f64; 2] {
    [1.0, 1.0]
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every invariant and names the first offending field.
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        match g.section {
            SectionKind::Disk => positive("geometry.radius", g.radius)?,
            SectionKind::Rectangle => {
                positive("geometry.half_widths[0]", g.half_widths[0])?;
                positive("geometry.half_widths[1]", g.half_widths[1])?;
            }
        }
        positive("geometry.ell", g.ell)?;
        positive("geometry.big_l", g.big_l)?;
        positive("geometry.lambda", g.lambda)?;
        if !(g.ell < g.big_l && g.big_l < g.lambda) {
            return Err(field_err(
                "geometry.ell/big_l/lambda",
                format!("need ell < big_l < lambda, got {} / {} / {}", g.ell, g.big_l, g.lambda),
            ));
        }
        if g.cells.iter().any(|&c| c < 4) {
            return Err(field_err("geometry.cells", "need at least 4 cells per direction"));
        }
        if g.axial_cells < 4 {
            return Err(field_err("geometry.axial_cells", "need at least 4 axial cells"));
        }
        let p = &self.physics;
        positive("physics.t_final", p.t_final)?;
        positive("physics.dt", p.dt)?;
        if p.dt > p.t_final / 64.0 * (1.0 + 1e-12) {
            return Err(field_err("physics.dt", format!("must be at most t_final/64 = {}, got {}", p.t_final / 64.0, p.dt)));
        }
        positive("physics.bound", p.bound)?;
        positive("physics.amplitude", p.amplitude)?;
        if !(p.gap_amplitude >= 0.0) {
            return Err(field_err("physics.gap_amplitude", "must be non-negative"));
        }
        positive("physics.omega0_radius", p.omega0_radius)?;
        self.profile()?;
        self.reference_profile()?;
        let c = &self.carleman;
        positive("carleman.gamma", c.gamma)?;
        positive("carleman.d3", c.d3)?;
        positive("carleman.d_tau", c.d_tau)?;
        if !(c.s_min >= 1.0) {
            return Err(field_err("carleman.s_min", format!("must be at least 1, got {}", c.s_min)));
        }
        if !(c.s_max >= c.s_min) {
            return Err(field_err("carleman.s_max", "must not be below s_min"));
        }
        if c.s_steps == 0 {
            return Err(field_err("carleman.s_steps", "must be at least 1"));
        }
        let inv = &self.inverse;
        if inv.dim == 0 {
            return Err(field_err("inverse.dim", "must be at least 1"));
        }
        if !(inv.lambda >= 0.0) {
            return Err(field_err("inverse.lambda", "must be non-negative"));
        }
        if !(inv.sigma >= 0.0) {
            return Err(field_err("inverse.sigma", "must be non-negative"));
        }
        if inv.iterations == 0 {
            return Err(field_err("inverse.iterations", "must be at least 1"));
        }
        if !(inv.q_min >= 0.0) {
            return Err(field_err("inverse.q_min", "must be non-negative"));
        }
        if inv.pairs == 0 {
            return Err(field_err("inverse.pairs", "must be at least 1"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid3D> {
        let g = &self.geometry;
        let shape = match g.section {
            SectionKind::Disk => SectionShape::Disk { radius: g.radius },
            SectionKind::Rectangle => SectionShape::Rectangle { half_widths: g.half_widths },
        };
        Grid3D::new(CrossSection::new(shape, g.cells)?, g.lambda, g.axial_cells)
    }

    pub fn profile(&self) -> Result<TwistProfile> {
        let p = &self.physics;
        make_twist_profile(p.profile, &p.profile_params, self.geometry.ell, p.bound)
            .map_err(|e| field_err("physics.profile", e))
    }

    pub fn reference_profile(&self) -> Result<TwistProfile> {
        let p = &self.physics;
        make_twist_profile(p.reference, &p.reference_params, self.geometry.ell, p.bound)
            .map_err(|e| field_err("physics.reference", e))
    }

    pub fn omega0(&self) -> SubSection {
        SubSection::Ball { centre: self.physics.omega0_centre, radius: self.physics.omega0_radius }
    }

    /// `s_steps` values spaced geometrically on `[s_min, s_max]`.
    pub fn s_values(&self) -> Vec<f64> {
        let c = &self.carleman;
        if c.s_steps == 1 {
            return vec![c.s_min];
        }
        let r = (c.s_max / c.s_min).ln() / (c.s_steps - 1) as f64;
        (0..c.s_steps).map(|k| c.s_min * (r * k as f64).exp()).collect()
    }
}
