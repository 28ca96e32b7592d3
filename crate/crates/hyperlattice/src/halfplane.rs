//! PSL(2,R) elements, the upper half-plane, Moebius actions, the NAK
//! (affine times rotation) factorization, and quadrature for the Haar and
//! hyperbolic measures.
//!
//! Haar measure normalization: d mu_G = (da db / a^2) (d theta / pi), so the
//! rotation subgroup PSO(2) has total mass 1.

use crate::error::{Error, Result};
use crate::quad;
use num_complex::Complex64;
use rayon::prelude::*;

pub const ELEMENT_TOL: f64 = 1e-9;

/// Element of PSL(2,R): a real 2x2 matrix of determinant one, canonicalized
/// modulo sign so the first nonzero entry in the order (a, c, b, d) is >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl GroupElement {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !det.is_finite() || det <= 0.0 {
            return Err(Error::Domain(format!(
                "matrix ({a}, {b}; {c}, {d}) has nonpositive determinant {det}"
            )));
        }
        let s = det.sqrt();
        Ok(Self {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        }
        .canonicalize())
    }

    pub fn identity() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Sign canonicalization for the PSL identification m == -m.
    pub fn canonicalize(self) -> Self {
        for entry in [self.a, self.c, self.b, self.d] {
            if entry > 0.0 {
                return self;
            }
            if entry < 0.0 {
                return Self {
                    a: -self.a,
                    b: -self.b,
                    c: -self.c,
                    d: -self.d,
                };
            }
        }
        self
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
        .renormalize()
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
        .canonicalize()
    }

    fn renormalize(self) -> Self {
        let s = self.det().sqrt();
        Self {
            a: self.a / s,
            b: self.b / s,
            c: self.c / s,
            d: self.d / s,
        }
        .canonicalize()
    }

    /// Entrywise comparison after sign canonicalization.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let m1 = self.canonicalize();
        let m2 = other.canonicalize();
        (m1.a - m2.a).abs() <= tol
            && (m1.b - m2.b).abs() <= tol
            && (m1.c - m2.c).abs() <= tol
            && (m1.d - m2.d).abs() <= tol
    }

    /// Moebius action on the upper half-plane.
    pub fn apply(&self, z: PointH) -> PointH {
        let zc = z.to_complex();
        let den = self.c * zc + self.d;
        let num = self.a * zc + self.b;
        let w = num / den;
        PointH { x: w.re, y: w.im }
    }
}

/// Point z = x + iy of the upper half-plane (y > 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointH {
    pub x: f64,
    pub y: f64,
}

impl PointH {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain(format!(
                "point ({x}, {y}) is not in the upper half-plane"
            )));
        }
        Ok(Self { x, y })
    }

    pub fn i() -> Self {
        Self { x: 0.0, y: 1.0 }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }
}

pub fn mobius_apply(m: &GroupElement, z: PointH) -> PointH {
    m.apply(z)
}

/// Embedding of the affine group: (a, b) -> (sqrt a, b/sqrt a; 0, 1/sqrt a),
/// so that the matrix sends i to b + ai.
pub fn affine_embed(a: f64, b: f64) -> Result<GroupElement> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("affine scale must be positive, got {a}")));
    }
    let r = a.sqrt();
    Ok(GroupElement {
        a: r,
        b: b / r,
        c: 0.0,
        d: 1.0 / r,
    }
    .canonicalize())
}

/// Rotation (cos t, sin t; -sin t, cos t) in PSO(2); fixes i.
pub fn rotation(theta: f64) -> GroupElement {
    GroupElement {
        a: theta.cos(),
        b: theta.sin(),
        c: -theta.sin(),
        d: theta.cos(),
    }
    .canonicalize()
}

/// NAK coordinates: m = m_{a,b} r_theta with theta in [0, pi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NAKCoords {
    pub scale: f64,
    pub shift: f64,
    pub angle: f64,
}

impl NAKCoords {
    pub fn assemble(&self) -> Result<GroupElement> {
        Ok(affine_embed(self.scale, self.shift)?.compose(&rotation(self.angle)))
    }
}

/// Factor m into affine part times rotation. The affine part is read off
/// from m . i = b + ai, the rotation from the remainder.
pub fn nak_factor(m: &GroupElement) -> NAKCoords {
    let w = m.apply(PointH::i());
    let scale = w.y;
    let shift = w.x;
    // r = m_{a,b}^{-1} m is a rotation up to sign
    let aff = affine_embed(scale, shift).expect("Moebius image has positive imaginary part");
    let r = aff.inverse().compose(m);
    let mut angle = (-r.c).atan2(r.a);
    angle = angle.rem_euclid(std::f64::consts::PI);
    if angle >= std::f64::consts::PI {
        angle = 0.0;
    }
    NAKCoords {
        scale,
        shift,
        angle,
    }
}

/// Quadrature specification for the Haar measure of PSL(2,R) in NAK
/// coordinates: trapezoid on log-spaced scale nodes, uniform shift nodes on
/// [-shift_max, shift_max], uniform angle nodes on [0, pi) with total
/// angle mass 1.
#[derive(Debug, Clone)]
pub struct HaarQuadratureSpec {
    pub scale_min: f64,
    pub scale_max: f64,
    pub scale_nodes: usize,
    pub shift_max: f64,
    pub shift_nodes: usize,
    pub angle_nodes: usize,
}

impl HaarQuadratureSpec {
    pub fn new(
        scale_min: f64,
        scale_max: f64,
        scale_nodes: usize,
        shift_max: f64,
        shift_nodes: usize,
        angle_nodes: usize,
    ) -> Result<Self> {
        if !(scale_min > 0.0) || scale_max <= scale_min || shift_max <= 0.0 {
            return Err(Error::Domain(
                "Haar spec needs 0 < scale_min < scale_max and shift_max > 0".into(),
            ));
        }
        if scale_nodes < 2 || shift_nodes < 2 || angle_nodes < 2 {
            return Err(Error::Domain("Haar spec needs at least 2 nodes per axis".into()));
        }
        Ok(Self {
            scale_min,
            scale_max,
            scale_nodes,
            shift_max,
            shift_nodes,
            angle_nodes,
        })
    }

    /// Nodes as (coords, weight) with weight for (da db / a^2)(d theta / pi).
    pub fn nodes(&self) -> Vec<(NAKCoords, f64)> {
        let a_rule = quad::log_trapezoid_inv_sq(self.scale_min, self.scale_max, self.scale_nodes);
        let b_rule = quad::trapezoid(-self.shift_max, self.shift_max, self.shift_nodes);
        // midpoint on the periodic angle axis, normalized mass 1
        let n_t = self.angle_nodes;
        let t_rule: Vec<(f64, f64)> = (0..n_t)
            .map(|k| {
                (
                    (k as f64 + 0.5) * std::f64::consts::PI / n_t as f64,
                    1.0 / n_t as f64,
                )
            })
            .collect();
        let mut out = Vec::with_capacity(a_rule.len() * b_rule.len() * t_rule.len());
        for &(a, wa) in &a_rule {
            for &(b, wb) in &b_rule {
                for &(t, wt) in &t_rule {
                    out.push((
                        NAKCoords {
                            scale: a,
                            shift: b,
                            angle: t,
                        },
                        wa * wb * wt,
                    ));
                }
            }
        }
        out
    }
}

/// Integrate f over the group against the Haar measure restricted to the
/// spec's truncation box. Fails on non-finite integrand values.
pub fn haar_integrate<F>(f: F, spec: &HaarQuadratureSpec) -> Result<f64>
where
    F: Fn(&GroupElement) -> f64 + Sync,
{
    let nodes = spec.nodes();
    let vals: Vec<(f64, NAKCoords)> = nodes
        .par_iter()
        .map(|(coords, w)| {
            let m = coords.assemble().expect("valid NAK coordinates");
            (w * f(&m), *coords)
        })
        .collect();
    let mut total = 0.0;
    for (v, coords) in vals {
        if !v.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite integrand at Haar node (a={}, b={}, theta={})",
                coords.scale, coords.shift, coords.angle
            )));
        }
        total += v;
    }
    Ok(total)
}

/// Lower boundary of a y-simple region of the upper half-plane.
#[derive(Debug, Clone, Copy)]
pub enum LowerBoundary {
    Constant(f64),
    /// y = sqrt(1 - x^2): the unit-circle arc bounding the standard
    /// fundamental domains from below. Requires |x| < 1.
    UnitCircle,
}

/// y-simple integration region {x0 <= x <= x1, lower(x) <= y <= y_top}.
#[derive(Debug, Clone, Copy)]
pub struct Region {
    pub x0: f64,
    pub x1: f64,
    pub lower: LowerBoundary,
    pub y_top: f64,
}

impl Region {
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self {
            x0,
            x1,
            lower: LowerBoundary::Constant(y0),
            y_top: y1,
        }
    }

    fn y_lower(&self, x: f64) -> f64 {
        match self.lower {
            LowerBoundary::Constant(y) => y,
            LowerBoundary::UnitCircle => (1.0 - x * x).max(0.0).sqrt(),
        }
    }
}

/// Grid resolution for hyperbolic integration: composite Gauss panels.
#[derive(Debug, Clone, Copy)]
pub struct HyperbolicGrid {
    pub x_panels: usize,
    pub x_nodes: usize,
    pub y_nodes: usize,
}

impl Default for HyperbolicGrid {
    fn default() -> Self {
        Self {
            x_panels: 8,
            x_nodes: 24,
            y_nodes: 32,
        }
    }
}

/// Integrate f over the region against the hyperbolic measure dx dy / y^2.
pub fn hyperbolic_integrate<F>(f: F, region: &Region, grid: &HyperbolicGrid) -> Result<f64>
where
    F: Fn(PointH) -> f64 + Sync,
{
    if region.x1 <= region.x0 {
        return Err(Error::Domain("empty x-range".into()));
    }
    let width = region.x1 - region.x0;
    let breaks: Vec<f64> = (0..=region.x_panels_breaks(grid))
        .map(|i| region.x0 + width * i as f64 / region.x_panels_breaks(grid) as f64)
        .collect();
    let x_rule = quad::composite_gauss(&breaks, grid.x_nodes);
    let vals: Vec<Result<f64>> = x_rule
        .par_iter()
        .map(|&(x, wx)| {
            let ylo = region.y_lower(x);
            if ylo >= region.y_top {
                return Ok(0.0);
            }
            let mut col = 0.0;
            for (y, wy) in quad::gauss_legendre_on(grid.y_nodes, ylo.max(1e-12), region.y_top) {
                let v = f(PointH { x, y });
                if !v.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite integrand at ({x}, {y})"
                    )));
                }
                col += wy * v / (y * y);
            }
            Ok(wx * col)
        })
        .collect();
    let mut total = 0.0;
    for v in vals {
        total += v?;
    }
    Ok(total)
}

impl Region {
    fn x_panels_breaks(&self, grid: &HyperbolicGrid) -> usize {
        grid.x_panels.max(1)
    }
}
