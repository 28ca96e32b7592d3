//! Hardy-space windows on the frequency side: the Laguerre family
//! psi_n^alpha with hat(psi)(xi) = xi^{alpha/2} e^{-xi} L_n^alpha(2 xi),
//! their norms, admissibility constants, and the formal dimension alpha/2.
//!
//! Frequency convention: unitary Fourier transform without a 2 pi in the
//! frequency variable; all inner products are taken frequency-side as
//! int_0^inf f g-bar d xi.

use crate::error::{Error, Result};
use crate::quad;
use num_complex::Complex64;
use std::sync::Arc;

/// Generalized Laguerre polynomial L_n^alpha(x) by the three-term recurrence.
pub fn laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// The window psi_n^alpha, defined through its frequency profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavelet {
    pub n: u32,
    pub alpha: f64,
}

impl Wavelet {
    pub fn new(n: u32, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { n, alpha })
    }

    /// hat(psi)(xi) = xi^{alpha/2} e^{-xi} L_n^alpha(2 xi) for xi > 0,
    /// zero on xi <= 0 (Hardy support).
    pub fn psi_hat(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            return 0.0;
        }
        xi.powf(self.alpha / 2.0) * (-xi).exp() * laguerre(self.n, self.alpha, 2.0 * xi)
    }

    /// Closed-form formal dimension alpha / 2.
    pub fn formal_dimension_closed_form(&self) -> f64 {
        self.alpha / 2.0
    }
}

pub fn psi_hat(w: &Wavelet, xi: f64) -> f64 {
    w.psi_hat(xi)
}

/// A frequency-side function on (0, inf) with decay and oscillation hints
/// used to size quadratures. Values for xi <= 0 are zero by convention.
#[derive(Clone)]
pub struct FreqFunction {
    eval: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    /// Exponential decay rate r: |f(xi)| decays like e^{-r xi}.
    pub decay_rate: f64,
    /// Largest modulation frequency present (|b| of any e^{-i b xi} factor).
    pub oscillation: f64,
}

impl FreqFunction {
    pub fn new<F>(eval: F, decay_rate: f64, oscillation: f64) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            decay_rate,
            oscillation,
        }
    }

    pub fn from_wavelet(w: Wavelet) -> Self {
        Self::new(move |xi| Complex64::new(w.psi_hat(xi), 0.0), 1.0, 0.0)
    }

    pub fn eval(&self, xi: f64) -> Complex64 {
        if xi <= 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            (self.eval)(xi)
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let inner = self.clone();
        Self {
            eval: Arc::new(move |xi| c * inner.eval(xi)),
            decay_rate: self.decay_rate,
            oscillation: self.oscillation,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let f = self.clone();
        let g = other.clone();
        Self {
            eval: Arc::new(move |xi| f.eval(xi) + g.eval(xi)),
            decay_rate: self.decay_rate.min(other.decay_rate),
            oscillation: self.oscillation.max(other.oscillation),
        }
    }
}

/// Composite Gauss rule on (0, cutoff] with geometric grading toward 0 to
/// resolve the xi^{alpha-1} behavior of admissibility integrands.
#[derive(Debug, Clone)]
pub struct FreqQuadratureSpec {
    pub cutoff: f64,
    pub nodes_per_panel: usize,
    pub graded_levels: u32,
}

impl FreqQuadratureSpec {
    pub fn new(cutoff: f64, nodes_per_panel: usize, graded_levels: u32) -> Result<Self> {
        if !(cutoff > 0.0) || nodes_per_panel < 2 {
            return Err(Error::Domain("bad frequency quadrature spec".into()));
        }
        Ok(Self {
            cutoff,
            nodes_per_panel,
            graded_levels,
        })
    }

    /// A default sized from the window's decay: cutoff where
    /// e^{-2 xi} xi^{alpha + 2n} falls below 1e-30.
    pub fn for_wavelet(w: &Wavelet) -> Self {
        let cutoff = 40.0 + 2.0 * (w.alpha + 2.0 * w.n as f64);
        Self {
            cutoff,
            nodes_per_panel: 24,
            graded_levels: 160,
        }
    }

    /// Panel breakpoints: geometric with ratio 2 from cutoff/2^levels up to
    /// cutoff, preceded by the remaining sliver [0, cutoff/2^levels].
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        for k in (0..=self.graded_levels).rev() {
            let x = self.cutoff / (2.0f64).powi(k as i32);
            if x > 0.0 && x > pts[pts.len() - 1] {
                pts.push(x);
            }
        }
        pts
    }

    pub fn nodes(&self) -> Vec<(f64, f64)> {
        quad::composite_gauss(&self.breakpoints(), self.nodes_per_panel)
    }

    fn refined(&self) -> Self {
        Self {
            cutoff: self.cutoff,
            nodes_per_panel: self.nodes_per_panel + 8,
            graded_levels: self.graded_levels + 20,
        }
    }
}

fn integrate_freq<F>(f: F, spec: &FreqQuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut total = 0.0;
    for (xi, w) in spec.nodes() {
        let v = f(xi);
        if !v.is_finite() {
            return Err(Error::Numeric(format!("non-finite integrand at xi = {xi}")));
        }
        total += w * v;
    }
    Ok(total)
}

/// ||f||^2 = int_0^inf |f(xi)|^2 d xi.
pub fn norm_sq(f: &FreqFunction, spec: &FreqQuadratureSpec) -> Result<f64> {
    integrate_freq(|xi| f.eval(xi).norm_sqr(), spec)
}

/// Admissibility constant C = int_0^inf |f(xi)|^2 d xi / xi, with a
/// divergence check: the low-frequency panel contributions must decay.
pub fn admissibility_constant(f: &FreqFunction, spec: &FreqQuadratureSpec) -> Result<f64> {
    let breaks = spec.breakpoints();
    let mut contributions = Vec::with_capacity(breaks.len() - 1);
    for pair in breaks.windows(2) {
        let mut panel = 0.0;
        for (xi, w) in quad::gauss_legendre_on(spec.nodes_per_panel, pair[0], pair[1]) {
            let v = f.eval(xi).norm_sqr() / xi;
            if !v.is_finite() {
                return Err(Error::Numeric(format!("non-finite integrand at xi = {xi}")));
            }
            panel += w * v;
        }
        contributions.push(panel);
    }
    // toward xi = 0 the panel sums must shrink, otherwise the integral is
    // divergent at the origin
    let low: Vec<f64> = contributions.iter().take(6).copied().collect();
    if low.len() >= 4 {
        let grows = low.windows(2).all(|p| p[0] >= p[1] * 0.999 && p[1] > 0.0);
        if grows && low[0] > 1e-13 {
            return Err(Error::Admissibility(
                "integrand |f|^2/xi does not decay toward xi = 0".into(),
            ));
        }
    }
    Ok(contributions.iter().sum())
}

/// Formal dimension computed two ways: by quadrature as ||psi||^2 / C_psi,
/// with the closed form alpha/2 exposed alongside.
#[derive(Debug, Clone, Copy)]
pub struct FormalDimension {
    pub quadrature: f64,
    pub closed_form: f64,
}

pub fn formal_dimension(w: &Wavelet) -> Result<FormalDimension> {
    let spec = FreqQuadratureSpec::for_wavelet(w);
    let f = FreqFunction::from_wavelet(*w);
    let nsq = norm_sq(&f, &spec)?;
    let c = admissibility_constant(&f, &spec)?;
    Ok(FormalDimension {
        quadrature: nsq / c,
        closed_form: w.formal_dimension_closed_form(),
    })
}

/// Quadrature stability helper used by tests and the CLI: value difference
/// under refinement.
pub fn refinement_delta<F>(f: F, spec: &FreqQuadratureSpec) -> Result<f64>
where
    F: Fn(&FreqQuadratureSpec) -> Result<f64>,
{
    let coarse = f(spec)?;
    let fine = f(&spec.refined())?;
    Ok((coarse - fine).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gamma function via Lanczos, used only as a test oracle.
    pub fn gamma_fn(x: f64) -> f64 {
        const G: f64 = 7.0;
        const C: [f64; 9] = [
            0.99999999999980993,
            676.5203681218851,
            -1259.1392167224028,
            771.32342877765313,
            -176.61502916214059,
            12.507343278686905,
            -0.13857109526572012,
            9.9843695780195716e-6,
            1.5056327351493116e-7,
        ];
        if x < 0.5 {
            std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_fn(1.0 - x))
        } else {
            let x = x - 1.0;
            let mut a = C[0];
            let t = x + G + 0.5;
            for (i, &c) in C.iter().enumerate().skip(1) {
                a += c / (x + i as f64);
            }
            (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
        }
    }

    #[test]
    fn laguerre_base_cases() {
        assert_eq!(laguerre(0, 3.7, 11.0), 1.0);
        // L_1^alpha(x) = 1 + alpha - x
        assert!((laguerre(1, 2.0, 1.0) - 2.0).abs() < 1e-15);
        assert!((laguerre(1, 0.5, 0.25) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn laguerre_orthogonality_by_quadrature() {
        // int_0^inf x^alpha e^{-x} L_n L_m dx = 0 for n != m
        let alpha = 1.5;
        // geometric grading toward 0 for the x^alpha endpoint factor
        let mut breaks = vec![0.0];
        breaks.extend((-40..=7).map(|k| (2.0f64).powi(k)));
        let rule = quad::composite_gauss(&breaks, 24);
        for (n, m) in [(0u32, 1u32), (1, 2), (0, 3), (2, 4)] {
            let val: f64 = rule
                .iter()
                .map(|&(x, w)| {
                    w * x.powf(alpha) * (-x).exp() * laguerre(n, alpha, x) * laguerre(m, alpha, x)
                })
                .sum();
            assert!(val.abs() < 1e-9, "n={n}, m={m}: {val}");
        }
    }

    #[test]
    fn laguerre_norm_identity() {
        // int_0^inf x^{alpha-1} e^{-x} [L_n^alpha(x)]^2 dx = Gamma(n+alpha+1)/(alpha n!)
        let alpha = 1.5;
        let spec = FreqQuadratureSpec::new(120.0, 24, 200).unwrap();
        for n in 0..4u32 {
            let val = integrate_freq(
                |x| x.powf(alpha - 1.0) * (-x).exp() * laguerre(n, alpha, x).powi(2),
                &spec,
            )
            .unwrap();
            let fact: f64 = (1..=n).map(|k| k as f64).product::<f64>().max(1.0);
            let exact = gamma_fn(n as f64 + alpha + 1.0) / (alpha * fact);
            assert!((val - exact).abs() < 1e-8 * exact, "n={n}: {val} vs {exact}");
        }
    }

    #[test]
    fn psi_hat_values() {
        let w = Wavelet::new(0, 2.0).unwrap();
        assert_eq!(w.psi_hat(-1.0), 0.0);
        assert_eq!(w.psi_hat(0.0), 0.0);
        assert!((w.psi_hat(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        // n=1, alpha=2 at xi=1: (1+2-2) e^{-1}
        let w = Wavelet::new(1, 2.0).unwrap();
        assert!((w.psi_hat(1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn norm_and_admissibility_closed_forms() {
        // oracle: int xi^alpha e^{-2 xi} d xi = Gamma(alpha+1) 2^{-(alpha+1)}
        let w = Wavelet::new(0, 2.0).unwrap();
        let f = FreqFunction::from_wavelet(w);
        let spec = FreqQuadratureSpec::for_wavelet(&w);
        let nsq = norm_sq(&f, &spec).unwrap();
        assert!((nsq - 0.25).abs() < 1e-10, "{nsq}");
        let c = admissibility_constant(&f, &spec).unwrap();
        assert!((c - 0.25).abs() < 1e-10, "{c}");
    }

    #[test]
    fn zero_function_and_homogeneity() {
        let spec = FreqQuadratureSpec::new(30.0, 16, 60).unwrap();
        let zero = FreqFunction::new(|_| Complex64::new(0.0, 0.0), 1.0, 0.0);
        assert_eq!(norm_sq(&zero, &spec).unwrap(), 0.0);
        let w = Wavelet::new(1, 1.5).unwrap();
        let f = FreqFunction::from_wavelet(w);
        let scaled = f.scale(Complex64::new(3.0, 0.0));
        let spec = FreqQuadratureSpec::for_wavelet(&w);
        let n1 = norm_sq(&f, &spec).unwrap();
        let n9 = norm_sq(&scaled, &spec).unwrap();
        assert!((n9 - 9.0 * n1).abs() < 1e-12 * n9.max(1.0));
    }

    #[test]
    fn ratio_law_all_supported_parameters() {
        for n in 0..=5u32 {
            for &alpha in &[0.5, 1.0, 1.5, 2.0, 3.0, 5.0] {
                let w = Wavelet::new(n, alpha).unwrap();
                let f = FreqFunction::from_wavelet(w);
                let spec = FreqQuadratureSpec::for_wavelet(&w);
                let ratio =
                    admissibility_constant(&f, &spec).unwrap() / norm_sq(&f, &spec).unwrap();
                assert!(
                    (ratio - 2.0 / alpha).abs() < 1e-8,
                    "n={n}, alpha={alpha}: {ratio}"
                );
            }
        }
    }

    #[test]
    fn formal_dimension_quadrature_vs_closed_form() {
        for &alpha in &[2.0, 4.0] {
            let fd = formal_dimension(&Wavelet::new(0, alpha).unwrap()).unwrap();
            assert!((fd.quadrature - alpha / 2.0).abs() < 1e-8);
            assert_eq!(fd.closed_form, alpha / 2.0);
        }
        for n in [1u32, 3] {
            for &alpha in &[0.5, 1.5, 3.0] {
                let fd = formal_dimension(&Wavelet::new(n, alpha).unwrap()).unwrap();
                assert!((fd.quadrature - fd.closed_form).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn divergence_detected_for_inadmissible_profile() {
        // |f|^2/xi ~ 1/xi near 0 diverges logarithmically
        let f = FreqFunction::new(|xi| Complex64::new((-xi).exp(), 0.0), 1.0, 0.0);
        let spec = FreqQuadratureSpec::new(40.0, 16, 120).unwrap();
        assert!(matches!(
            admissibility_constant(&f, &spec),
            Err(Error::Admissibility(_))
        ));
    }

    #[test]
    fn quadrature_refinement_stability() {
        let w = Wavelet::new(2, 1.5).unwrap();
        let f = FreqFunction::from_wavelet(w);
        let spec = FreqQuadratureSpec::for_wavelet(&w);
        let d1 = refinement_delta(|s| norm_sq(&f, s), &spec).unwrap();
        let d2 = refinement_delta(|s| admissibility_constant(&f, s), &spec).unwrap();
        assert!(d1 < 1e-9 && d2 < 1e-9, "{d1}, {d2}");
    }
}
