//! One-dimensional composite quadrature shared by every error norm on the
//! twist interval.

/// Default number of panels on `I_ell`.
pub const DEFAULT_PANELS: usize = 10_000;

/// Composite Simpson rule with `panels` subintervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = if panels.is_multiple_of(2) { panels.max(2) } else { panels + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Squared L2 norm of `f` on `(-half, half)`.
pub fn l2_squared_symmetric<F: Fn(f64) -> f64>(f: F, half: f64) -> f64 {
    simpson(|x| f(x) * f(x), -half, half, DEFAULT_PANELS)
}

/// `ln ∫_a^b e^{g(x)} dx` for a log-integrand `g` that may concentrate
/// sharply at `a`.
///
/// `[a, b]` is cut into `levels` segments whose lengths halve toward `a`,
/// each integrated by Simpson with `panels` subintervals; the sum is taken
/// in log space so nothing underflows. `g = -inf` marks zeros.
pub fn log_simpson_graded<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, levels: usize, panels: usize) -> f64 {
    let n = if panels.is_multiple_of(2) { panels.max(2) } else { panels + 1 };
    let mut terms = Vec::with_capacity(levels * (n + 1));
    let mut hi = b;
    for j in 0..levels {
        let lo = if j + 1 == levels { a } else { a + (b - a) * 0.5f64.powi(j as i32 + 1) };
        let h = (hi - lo) / n as f64;
        for i in 0..=n {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let v = g(lo + i as f64 * h);
            if v > f64::NEG_INFINITY {
                terms.push((w * h / 3.0).ln() + v);
            }
        }
        hi = lo;
    }
    log_sum_exp(&terms)
}

/// `ln Σ e^{x_i}`, `-inf` for an empty sum.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, 4);
        let exact = (16.0 / 4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn odd_panel_count_is_rounded_up() {
        let v = simpson(|x| x.sin(), 0.0, std::f64::consts::PI, 7);
        assert!((v - 2.0).abs() < 1e-3);
    }

    #[test]
    fn graded_rule_resolves_a_boundary_layer() {
        // ∫_0^1 e^{-k x} dx = (1 - e^{-k})/k for a very steep k
        for k in [1.0, 1e3, 1e9] {
            let v = log_simpson_graded(|x| -k * x, 0.0, 1.0, 60, 80);
            let exact = ((1.0 - (-k).exp()) / k).ln();
            assert!((v - exact).abs() < 1e-8, "{k}: {v} {exact}");
        }
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
