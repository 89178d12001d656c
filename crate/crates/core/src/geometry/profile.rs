use serde::{Deserialize, Serialize};

use crate::quadrature::simpson;
use crate::{Error, Result};

/// Sample count for the admissibility check on `I_ell`.
pub const ADMISSIBILITY_SAMPLES: usize = 10_000;

/// One closed-form contribution to the twist rate `theta_dot`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ProfileTerm {
    /// `amplitude * exp(1 - 1/(1 - u^2))`, `u = (x - centre)/half_width`.
    Bump { amplitude: f64, centre: f64, half_width: f64 },
    /// `(1 - u^2)^2 * sum_k a_k sin(k pi (u + 1)/2)`, `u = x / ell`.
    Fourier { coefficients: Vec<f64> },
    /// Cubic B-splines on uniform knots of `I_ell` whose supports lie inside it.
    Spline { coefficients: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Zero,
    Bump,
    Fourier,
    Spline,
}

/// Twisting function `theta` with analytically coded derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistProfile {
    pub terms: Vec<ProfileTerm>,
    /// Half-length `ell` of the support interval of `theta_dot`.
    pub support: f64,
    /// Bound `epsilon` on the C1 norm of `theta_dot`.
    pub bound: f64,
}

/// Number of cubic B-splines with support inside `I_ell` for `dim` basis functions.
pub fn spline_intervals(dim: usize) -> usize {
    dim + 3
}

/// Uniform cubic B-spline (support `[0, 4]`) and its first derivative.
fn cubic_bspline(t: f64) -> (f64, f64) {
    if !(0.0..4.0).contains(&t) {
        return (0.0, 0.0);
    }
    if t < 1.0 {
        (t * t * t / 6.0, t * t / 2.0)
    } else if t < 2.0 {
        let u = t - 1.0;
        ((1.0 + 3.0 * u + 3.0 * u * u - 3.0 * u * u * u) / 6.0, (3.0 + 6.0 * u - 9.0 * u * u) / 6.0)
    } else if t < 3.0 {
        let u = t - 2.0;
        ((4.0 - 6.0 * u * u + 3.0 * u * u * u) / 6.0, (-12.0 * u + 9.0 * u * u) / 6.0)
    } else {
        let u = 4.0 - t;
        (u * u * u / 6.0, -u * u / 2.0)
    }
}

/// Value and derivative of spline basis function `k` of a `dim`-dimensional basis on `I_ell`.
pub fn spline_basis(k: usize, dim: usize, ell: f64, x: f64) -> (f64, f64) {
    let m = spline_intervals(dim) as f64;
    let h = 2.0 * ell / m;
    let t = (x + ell) / h - k as f64;
    let (v, d) = cubic_bspline(t);
    (v, d / h)
}

impl ProfileTerm {
    fn rate(&self, ell: f64, x: f64) -> (f64, f64) {
        match self {
            ProfileTerm::Bump { amplitude, centre, half_width } => {
                let u = (x - centre) / half_width;
                if u.abs() >= 1.0 {
                    return (0.0, 0.0);
                }
                let q = 1.0 - u * u;
                let e = amplitude * (1.0 - 1.0 / q).exp();
                (e, e * (-2.0 * u / (q * q)) / half_width)
            }
            ProfileTerm::Fourier { coefficients } => {
                let u = x / ell;
                if u.abs() >= 1.0 {
                    return (0.0, 0.0);
                }
                let w = (1.0 - u * u).powi(2);
                let dw = -4.0 * u * (1.0 - u * u);
                let (mut s, mut ds) = (0.0, 0.0);
                for (i, a) in coefficients.iter().enumerate() {
                    let k = (i + 1) as f64 * std::f64::consts::PI / 2.0;
                    s += a * (k * (u + 1.0)).sin();
                    ds += a * k * (k * (u + 1.0)).cos();
                }
                (w * s, (dw * s + w * ds) / ell)
            }
            ProfileTerm::Spline { coefficients } => {
                let dim = coefficients.len();
                let (mut v, mut d) = (0.0, 0.0);
                for (k, c) in coefficients.iter().enumerate() {
                    let (b, db) = spline_basis(k, dim, ell, x);
                    v += c * b;
                    d += c * db;
                }
                (v, d)
            }
        }
    }

    fn leaks(&self, ell: f64) -> Option<String> {
        match self {
            ProfileTerm::Bump { centre, half_width, .. } => {
                if *half_width <= 0.0 {
                    Some("bump half-width must be positive".into())
                } else if centre - half_width < -ell - 1e-12 || centre + half_width > ell + 1e-12 {
                    Some(format!("bump support [{}, {}] not inside I_ell", centre - half_width, centre + half_width))
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

impl TwistProfile {
    /// Builds a profile without checking admissibility.
    pub fn unchecked(terms: Vec<ProfileTerm>, support: f64, bound: f64) -> Self {
        TwistProfile { terms, support, bound }
    }

    pub fn zero(support: f64, bound: f64) -> Self {
        TwistProfile::unchecked(Vec::new(), support, bound)
    }

    /// Validated constructor.
    pub fn new(terms: Vec<ProfileTerm>, support: f64, bound: f64) -> Result<Self> {
        if !(support > 0.0) || !(bound > 0.0) {
            return Err(Error::Grid("support and bound must be positive".into()));
        }
        let p = TwistProfile::unchecked(terms, support, bound);
        p.check_admissible(ADMISSIBILITY_SAMPLES)?;
        Ok(p)
    }

    /// `theta_dot(x3)`.
    pub fn rate(&self, x: f64) -> f64 {
        self.rate_and_curvature(x).0
    }

    /// `theta_ddot(x3)`.
    pub fn curvature(&self, x: f64) -> f64 {
        self.rate_and_curvature(x).1
    }

    pub fn rate_and_curvature(&self, x: f64) -> (f64, f64) {
        if x.abs() >= self.support {
            return (0.0, 0.0);
        }
        self.terms.iter().fold((0.0, 0.0), |(a, b), t| {
            let (v, d) = t.rate(self.support, x);
            (a + v, b + d)
        })
    }

    /// Rotation angle `theta(x3)`, normalised by `theta(-ell) = 0`.
    pub fn angle(&self, x: f64) -> f64 {
        let ell = self.support;
        let upper = x.clamp(-ell, ell);
        if upper <= -ell {
            return 0.0;
        }
        let panels = ((upper + ell) / (2.0 * ell) * 2000.0).ceil() as usize;
        simpson(|s| self.rate(s), -ell, upper, panels.max(2))
    }

    /// Sampled `max_{I_ell} (|theta_dot| + |theta_ddot|)`.
    pub fn sampled_c1_norm(&self, samples: usize) -> f64 {
        let ell = self.support;
        (0..=samples)
            .map(|i| {
                let x = -ell + 2.0 * ell * i as f64 / samples as f64;
                let (v, d) = self.rate_and_curvature(x);
                v.abs() + d.abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn check_admissible(&self, samples: usize) -> Result<()> {
        for t in &self.terms {
            if let Some(msg) = t.leaks(self.support) {
                return Err(Error::SupportLeak(msg));
            }
        }
        let norm = self.sampled_c1_norm(samples);
        if norm > self.bound {
            return Err(Error::Admissibility { norm, bound: self.bound });
        }
        Ok(())
    }

    /// Adds a spline term (used for `theta = theta_tilde + alpha`).
    pub fn plus_spline(&self, coefficients: &[f64]) -> TwistProfile {
        let mut p = self.clone();
        p.terms.push(ProfileTerm::Spline { coefficients: coefficients.to_vec() });
        p
    }

    /// Adds all terms of `other`, scaled by `scale`.
    pub fn plus_scaled(&self, other: &TwistProfile, scale: f64) -> TwistProfile {
        let mut p = self.clone();
        for t in &other.terms {
            p.terms.push(match t {
                ProfileTerm::Bump { amplitude, centre, half_width } => ProfileTerm::Bump {
                    amplitude: amplitude * scale,
                    centre: *centre,
                    half_width: *half_width,
                },
                ProfileTerm::Fourier { coefficients } => ProfileTerm::Fourier {
                    coefficients: coefficients.iter().map(|c| c * scale).collect(),
                },
                ProfileTerm::Spline { coefficients } => ProfileTerm::Spline {
                    coefficients: coefficients.iter().map(|c| c * scale).collect(),
                },
            });
        }
        p
    }

    /// Two-column text `(x3, theta_ddot)` for plotting.
    pub fn export_curvature(&self, samples: usize) -> String {
        let ell = self.support;
        let mut out = String::from("# x3 theta_ddot\n");
        for i in 0..=samples {
            let x = -ell + 2.0 * ell * i as f64 / samples as f64;
            out.push_str(&format!("{:.12e} {:.12e}\n", x, self.curvature(x)));
        }
        out
    }
}

/// Builds a profile of the requested kind from its parameter list.
///
/// * `Zero` ignores `params`.
/// * `Bump` reads `[amplitude, centre, half_width]`; centre defaults to 0 and
///   the half-width to `ell`.
/// * `Fourier` and `Spline` take the coefficient list.
pub fn make_twist_profile(kind: ProfileKind, params: &[f64], ell: f64, bound: f64) -> Result<TwistProfile> {
    let terms = match kind {
        ProfileKind::Zero => Vec::new(),
        ProfileKind::Bump => {
            let amplitude = *params.first().ok_or_else(|| Error::Config("bump needs an amplitude".into()))?;
            let centre = params.get(1).copied().unwrap_or(0.0);
            let half_width = params.get(2).copied().unwrap_or(ell);
            vec![ProfileTerm::Bump { amplitude, centre, half_width }]
        }
        ProfileKind::Fourier => vec![ProfileTerm::Fourier { coefficients: params.to_vec() }],
        ProfileKind::Spline => vec![ProfileTerm::Spline { coefficients: params.to_vec() }],
    };
    TwistProfile::new(terms, ell, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense-sampling oracle for the bump of amplitude `a` on `I_1`.
    fn bump_norm_oracle(a: f64) -> f64 {
        let n = 10_000;
        (1..n)
            .map(|i| {
                let s = -1.0 + 2.0 * i as f64 / n as f64;
                let q = 1.0 - s * s;
                let e = (1.0 - 1.0 / q).exp();
                a * e + a * e * (2.0 * s / (q * q)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn zero_profile_is_admissible() {
        let p = make_twist_profile(ProfileKind::Zero, &[], 1.0, 0.1).unwrap();
        assert_eq!(p.rate(0.3), 0.0);
        assert_eq!(p.angle(0.9), 0.0);
    }

    #[test]
    fn bump_norm_matches_dense_sampling() {
        // frozen from the oracle: 0.05 amplitude on ell = 1 has C1 norm 0.1229...
        let oracle = bump_norm_oracle(0.05);
        assert!((oracle - 0.122_900_750_5).abs() < 1e-8);
        let p = TwistProfile::unchecked(
            vec![ProfileTerm::Bump { amplitude: 0.05, centre: 0.0, half_width: 1.0 }],
            1.0,
            1.0,
        );
        assert!((p.sampled_c1_norm(ADMISSIBILITY_SAMPLES) - oracle).abs() < 1e-9);
    }

    #[test]
    fn bump_with_norm_above_bound_is_rejected() {
        let err = make_twist_profile(ProfileKind::Bump, &[0.05], 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::Admissibility { .. }));
        let ok = make_twist_profile(ProfileKind::Bump, &[0.04], 1.0, 0.1).unwrap();
        assert!(ok.sampled_c1_norm(10_000) <= 0.1);
        let twice = make_twist_profile(ProfileKind::Bump, &[0.2], 1.0, 0.1).unwrap_err();
        assert!(twice.to_string().contains("admissibility violated"));
    }

    #[test]
    fn support_leak_is_rejected() {
        let err = make_twist_profile(ProfileKind::Bump, &[0.01, 0.5, 0.8], 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::SupportLeak(_)));
    }

    #[test]
    fn derivatives_are_consistent_with_finite_differences() {
        let p = TwistProfile::unchecked(
            vec![
                ProfileTerm::Bump { amplitude: 0.02, centre: 0.1, half_width: 0.7 },
                ProfileTerm::Fourier { coefficients: vec![0.01, -0.004, 0.002] },
                ProfileTerm::Spline { coefficients: vec![0.003, -0.002, 0.001, 0.004, -0.001] },
            ],
            1.0,
            1.0,
        );
        let h = 1e-5;
        for i in 0..40 {
            let x = -0.97 + i as f64 * 0.05;
            let fd = (p.rate(x + h) - p.rate(x - h)) / (2.0 * h);
            assert!((fd - p.curvature(x)).abs() < 1e-7, "x = {x}");
            let fa = (p.angle(x + h) - p.angle(x - h)) / (2.0 * h);
            assert!((fa - p.rate(x)).abs() < 1e-6);
        }
    }

    #[test]
    fn spline_terms_vanish_with_derivative_at_the_ends() {
        let p = TwistProfile::unchecked(vec![ProfileTerm::Spline { coefficients: vec![1.0; 6] }], 1.0, 10.0);
        for x in [-1.0, 1.0, -0.999_999, 0.999_999] {
            assert!(p.rate(x).abs() < 1e-12);
            assert!(p.curvature(x).abs() < 1e-5);
        }
        // integral of the curvature vanishes, so alpha(+-ell) = 0
        let int = simpson(|x| p.curvature(x), -1.0, 1.0, 4000);
        assert!(int.abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn admissibility_stable_under_resampling(a in 0.001f64..0.03, c in -0.3f64..0.3, w in 0.3f64..0.7) {
            let p = TwistProfile::unchecked(
                vec![ProfileTerm::Bump { amplitude: a, centre: c, half_width: w }], 1.0, 1.0);
            let norm = p.sampled_c1_norm(ADMISSIBILITY_SAMPLES);
            // profiles with a 10% margin keep their verdict at double resolution
            let bound = norm * 1.1;
            let q = TwistProfile { bound, ..p.clone() };
            prop_assert!(q.check_admissible(ADMISSIBILITY_SAMPLES).is_ok());
            prop_assert!(q.check_admissible(2 * ADMISSIBILITY_SAMPLES).is_ok());
        }
    }
}
