use serde::Serialize;

use crate::geometry::{spline_basis, TwistProfile};
use crate::quadrature::{simpson, DEFAULT_PANELS};

/// Cubic B-splines for `α = θ̇ - θ̃̇` whose supports sit inside `I_ℓ`, so
/// `α(±ℓ) = 0` holds for every coefficient vector and `α̇` is the exact
/// derivative of `α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SplineBasis {
    pub dim: usize,
    pub ell: f64,
}

impl SplineBasis {
    pub fn new(dim: usize, ell: f64) -> Self {
        SplineBasis { dim, ell }
    }

    /// `(α, α̇)` at `x`.
    pub fn eval(&self, c: &[f64], x: f64) -> (f64, f64) {
        c.iter().enumerate().fold((0.0, 0.0), |(v, d), (k, ck)| {
            let (b, db) = spline_basis(k, self.dim, self.ell, x);
            (v + ck * b, d + ck * db)
        })
    }

    /// `θ = θ̃ + α`.
    pub fn profile(&self, theta_ref: &TwistProfile, c: &[f64]) -> TwistProfile {
        theta_ref.plus_spline(c)
    }
}

/// `‖f‖²_{L²(-ℓ,ℓ)}` with the shared composite Simpson rule.
pub fn l2_sq(f: impl Fn(f64) -> f64, ell: f64) -> f64 {
    simpson(|x| f(x).powi(2), -ell, ell, DEFAULT_PANELS)
}

/// `‖θ̈ - θ̃̈‖²_{L²(I_ℓ)}`.
pub fn curvature_gap_sq(theta: &TwistProfile, theta_ref: &TwistProfile, ell: f64) -> f64 {
    l2_sq(|x| theta.curvature(x) - theta_ref.curvature(x), ell)
}

/// Relative `L²(I_ℓ)` error of an estimate of `α̇`.
pub fn relative_error(estimate: impl Fn(f64) -> f64, truth: impl Fn(f64) -> f64, ell: f64) -> f64 {
    let num = l2_sq(|x| estimate(x) - truth(x), ell);
    let den = l2_sq(&truth, ell);
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_vanishes_at_the_ends_and_derivative_matches() {
        let b = SplineBasis::new(5, 0.8);
        let c = [0.3, -1.0, 0.4, 0.9, -0.2];
        for x in [-0.8, 0.8] {
            let (v, d) = b.eval(&c, x);
            assert!(v.abs() < 1e-15 && d.abs() < 1e-12);
        }
        let h = 1e-6;
        for x in [-0.5, 0.01, 0.33] {
            let fd = (b.eval(&c, x + h).0 - b.eval(&c, x - h).0) / (2.0 * h);
            assert!((fd - b.eval(&c, x).1).abs() < 1e-7);
        }
    }

    #[test]
    fn profile_rate_is_alpha() {
        let b = SplineBasis::new(4, 0.8);
        let c = [0.01, 0.02, -0.01, 0.005];
        let p = b.profile(&TwistProfile::zero(0.8, 0.3), &c);
        for x in [-0.6, 0.0, 0.4] {
            let (a, da) = b.eval(&c, x);
            assert!((p.rate(x) - a).abs() < 1e-16 && (p.curvature(x) - da).abs() < 1e-15);
        }
        assert!(relative_error(|x| p.curvature(x), |x| p.curvature(x), 0.8) == 0.0);
    }
}
