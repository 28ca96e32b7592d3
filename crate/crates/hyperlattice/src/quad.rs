//! Deterministic quadrature building blocks: Gauss–Legendre rules, composite
//! panels, and trapezoidal grids on logarithmic axes.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial and cached per order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre_ref(n).clone()
}

/// Borrowed rule for hot loops: lock-free after first use for small orders.
pub fn gauss_legendre_ref(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre order must be >= 1");
    const SMALL: usize = 64;
    static SMALL_CACHE: [OnceLock<(Vec<f64>, Vec<f64>)>; SMALL + 1] =
        [const { OnceLock::new() }; SMALL + 1];
    if n <= SMALL {
        return SMALL_CACHE[n].get_or_init(|| compute_gauss_legendre(n));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(compute_gauss_legendre(n))))
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_and_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Legendre nodes and weights mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    x.iter()
        .zip(w.iter())
        .map(|(&xi, &wi)| (mid + half * xi, half * wi))
        .collect()
}

/// Composite Gauss–Legendre rule over consecutive panels given by
/// breakpoints, `nodes_per_panel` nodes each.
pub fn composite_gauss(breakpoints: &[f64], nodes_per_panel: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for pair in breakpoints.windows(2) {
        out.extend(gauss_legendre_on(nodes_per_panel, pair[0], pair[1]));
    }
    out
}

/// Trapezoidal nodes and weights on [a, b] with n >= 2 nodes.
pub fn trapezoid(a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 2);
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            (a + i as f64 * h, w)
        })
        .collect()
}

/// Trapezoid on a logarithmic grid for integrals of the form
/// `int f(a) da / a^2` over [a_min, a_max]: substituting a = e^u turns the
/// measure into e^{-u} du. Returns (a, weight) pairs.
pub fn log_trapezoid_inv_sq(a_min: f64, a_max: f64, n: usize) -> Vec<(f64, f64)> {
    assert!(a_min > 0.0 && a_max > a_min);
    trapezoid(a_min.ln(), a_max.ln(), n)
        .into_iter()
        .map(|(u, w)| (u.exp(), w * (-u).exp()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        // order n integrates degree 2n-1 exactly
        let rule = gauss_legendre_on(5, 0.0, 2.0);
        let val: f64 = rule.iter().map(|(x, w)| w * x.powi(9)).sum();
        assert!((val - 2.0f64.powi(10) / 10.0).abs() < 1e-12, "{val}");
    }

    #[test]
    fn gl_high_order_smooth() {
        let rule = gauss_legendre_on(40, 0.0, 1.0);
        let val: f64 = rule.iter().map(|(x, w)| w * x.exp()).sum();
        assert!((val - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn log_trapezoid_matches_closed_form() {
        // int_1^e da/a^2 = 1 - 1/e
        let rule = log_trapezoid_inv_sq(1.0, std::f64::consts::E, 4000);
        let val: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((val - (1.0 - 1.0 / std::f64::consts::E)).abs() < 1e-7, "{val}");
    }

    #[test]
    fn composite_panels_cover_interval() {
        let rule = composite_gauss(&[0.0, 0.5, 1.0, 2.0], 8);
        let val: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((val - 2.0).abs() < 1e-13);
    }
}
