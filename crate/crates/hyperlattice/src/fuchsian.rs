//! Fuchsian lattices as concrete generator sets: the modular and Hecke
//! families, word-ball enumeration, fundamental-domain membership and
//! reduction, covolumes, and tile histograms.

use crate::error::{Error, Result};
use crate::halfplane::{
    hyperbolic_integrate, GroupElement, HyperbolicGrid, LowerBoundary, PointH,
    Region, ELEMENT_TOL,
};
use std::collections::HashMap;

/// A Fuchsian lattice given by generators (closed under the listed inverses).
/// `translation` is the width lambda of the parabolic generator (1 lambda; 0 1),
/// which drives the reduction algorithm.
#[derive(Debug, Clone)]
pub struct FuchsianGroup {
    pub name: String,
    pub generators: Vec<GroupElement>,
    pub translation: f64,
}

/// The standard fundamental domain |x| <= w, |z| >= 1 with cusp truncation
/// height for numerics. w = lambda/2.
#[derive(Debug, Clone, Copy)]
pub struct FundamentalDomain {
    pub half_width: f64,
    pub cusp_height: f64,
}

/// Deduplicated word ball of radius L: all products of generators of word
/// length at most L.
#[derive(Debug, Clone)]
pub struct WordBall {
    pub radius: usize,
    pub elements: Vec<GroupElement>,
}

/// PSL(2,Z) with generators S = (0 -1; 1 0) and T = (1 1; 0 1).
pub fn modular_group() -> FuchsianGroup {
    let s = GroupElement::new(0.0, -1.0, 1.0, 0.0).unwrap();
    let t = GroupElement::new(1.0, 1.0, 0.0, 1.0).unwrap();
    FuchsianGroup {
        name: "modular".into(),
        generators: vec![s, t, t.inverse(), s.inverse()],
        translation: 1.0,
    }
}

/// Hecke group H(q): generators S and T_lambda with lambda = 2 cos(pi/q).
/// q = 3 recovers the modular group.
pub fn hecke_group(q: u32) -> Result<FuchsianGroup> {
    if q < 3 {
        return Err(Error::Domain(format!("Hecke parameter must be >= 3, got {q}")));
    }
    let lambda = 2.0 * (std::f64::consts::PI / q as f64).cos();
    let s = GroupElement::new(0.0, -1.0, 1.0, 0.0).unwrap();
    let t = GroupElement::new(1.0, lambda, 0.0, 1.0).unwrap();
    Ok(FuchsianGroup {
        name: format!("hecke:{q}"),
        generators: vec![s, t, t.inverse(), s.inverse()],
        translation: lambda,
    })
}

impl FuchsianGroup {
    pub fn domain(&self, cusp_height: f64) -> FundamentalDomain {
        FundamentalDomain {
            half_width: self.translation / 2.0,
            cusp_height,
        }
    }
}

/// Spatial-hash set of group elements with tolerance-based dedup.
struct ElementSet {
    quantum: f64,
    buckets: HashMap<[i64; 4], Vec<usize>>,
    elements: Vec<GroupElement>,
}

impl ElementSet {
    fn new() -> Self {
        Self {
            quantum: 1e-4,
            buckets: HashMap::new(),
            elements: Vec::new(),
        }
    }

    fn key(&self, m: &GroupElement) -> [i64; 4] {
        // hash the sign-canonicalized entries, else gamma and -gamma land in
        // distant buckets and the modulo-sign dedup never fires
        let m = m.canonicalize();
        [
            (m.a / self.quantum).round() as i64,
            (m.b / self.quantum).round() as i64,
            (m.c / self.quantum).round() as i64,
            (m.d / self.quantum).round() as i64,
        ]
    }

    fn contains(&self, m: &GroupElement) -> bool {
        let k = self.key(m);
        let mut delta = [0i64; 4];
        // probe neighbor cells so near-boundary quantization cannot split
        // a pair of elements that agree within tolerance
        for i in 0..81 {
            let mut v = i;
            for d in delta.iter_mut() {
                *d = (v % 3) as i64 - 1;
                v /= 3;
            }
            let kk = [k[0] + delta[0], k[1] + delta[1], k[2] + delta[2], k[3] + delta[3]];
            if let Some(idxs) = self.buckets.get(&kk) {
                if idxs.iter().any(|&i| self.elements[i].approx_eq(m, ELEMENT_TOL)) {
                    return true;
                }
            }
        }
        false
    }

    fn insert(&mut self, m: GroupElement) -> bool {
        if self.contains(&m) {
            return false;
        }
        let k = self.key(&m);
        let idx = self.elements.len();
        self.elements.push(m);
        self.buckets.entry(k).or_default().push(idx);
        true
    }
}

/// Breadth-first enumeration of all words of length <= radius in the
/// generators, deduplicated modulo sign and entrywise tolerance.
pub fn enumerate_ball(group: &FuchsianGroup, radius: usize) -> WordBall {
    let mut set = ElementSet::new();
    set.insert(GroupElement::identity());
    let mut frontier = vec![GroupElement::identity()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for m in &frontier {
            for g in &group.generators {
                let prod = m.compose(g);
                if set.insert(prod) {
                    next.push(prod);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    WordBall {
        radius,
        elements: set.elements,
    }
}

/// Membership in the standard fundamental domain with the boundary
/// tie-break: on |x| = w keep x = -w; on the arc |z| = 1 keep x <= 0.
pub fn in_domain(z: PointH, domain: &FundamentalDomain) -> bool {
    let w = domain.half_width;
    if z.x < -w || z.x >= w {
        return false;
    }
    let n = z.norm_sq();
    n > 1.0 || (n == 1.0 && z.x <= 0.0)
}

/// Reduce z into the fundamental domain: alternately translate into the
/// strip and invert when inside the unit circle. Returns (gamma, z0) with
/// z = gamma . z0 and z0 in the domain.
pub fn reduce_to_domain(z: PointH, group: &FuchsianGroup) -> Result<(GroupElement, PointH)> {
    let lambda = group.translation;
    let domain = group.domain(f64::INFINITY);
    let t = GroupElement::new(1.0, lambda, 0.0, 1.0).unwrap();
    let s = GroupElement::new(0.0, -1.0, 1.0, 0.0).unwrap();
    let mut gamma = GroupElement::identity();
    let mut z0 = z;
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        if iterations > 10_000 {
            return Err(Error::Numeric(format!(
                "domain reduction did not terminate for ({}, {})",
                z.x, z.y
            )));
        }
        let n = (z0.x / lambda).round();
        if n != 0.0 {
            // z0 -> z0 - n*lambda, gamma absorbs T^n
            z0 = PointH::new(z0.x - n * lambda, z0.y)?;
            let tn = GroupElement::new(1.0, n * lambda, 0.0, 1.0).unwrap();
            gamma = gamma.compose(&tn);
            let _ = t;
            continue;
        }
        if z0.norm_sq() < 1.0 {
            // inversion strictly increases the imaginary part
            let w = -z0.to_complex().inv();
            z0 = PointH::new(w.re, w.im)?;
            gamma = gamma.compose(&s.inverse());
            continue;
        }
        break;
    }
    // boundary tie-breaks
    if z0.x == domain.half_width {
        z0 = PointH::new(-domain.half_width, z0.y)?;
        gamma = gamma.compose(&GroupElement::new(1.0, lambda, 0.0, 1.0).unwrap());
    }
    if z0.norm_sq() == 1.0 && z0.x > 0.0 {
        let w = -z0.to_complex().inv();
        z0 = PointH::new(w.re, w.im)?;
        gamma = gamma.compose(&s.inverse());
    }
    Ok((gamma, z0))
}

/// Covolume of the standard domain: quadrature of the indicator column
/// (the inner dy/y^2 integral runs from the circle arc up to the truncation
/// height) plus the analytic cusp tail lambda / Y.
pub fn covolume(domain: &FundamentalDomain, grid: &HyperbolicGrid) -> Result<f64> {
    let y = domain.cusp_height;
    if !(y > 1.0) {
        return Err(Error::Domain("cusp truncation height must exceed 1".into()));
    }
    let region = Region {
        x0: -domain.half_width,
        x1: domain.half_width,
        lower: LowerBoundary::UnitCircle,
        y_top: y,
    };
    let bulk = hyperbolic_integrate(|_| 1.0, &region, grid)?;
    Ok(bulk + 2.0 * domain.half_width / y)
}

/// Result of assigning points to lattice tiles gamma . Omega.
#[derive(Debug, Clone)]
pub struct TileHistogram {
    /// (gamma, count), in first-seen order.
    pub counts: Vec<(GroupElement, usize)>,
    /// Points within the boundary tolerance of the domain boundary,
    /// excluded from the counts.
    pub flagged: Vec<PointH>,
}

pub const TILE_BOUNDARY_TOL: f64 = 1e-6;

fn near_boundary(z0: PointH, domain: &FundamentalDomain) -> bool {
    let w = domain.half_width;
    (z0.x.abs() - w).abs() < TILE_BOUNDARY_TOL || (z0.norm_sq() - 1.0).abs() < 2.0 * TILE_BOUNDARY_TOL
}

/// Assign each point to its tile; ambiguous (near-boundary) points are
/// flagged and excluded, so counts always sum to points.len() - flagged.len().
pub fn tile_histogram(
    points: &[PointH],
    group: &FuchsianGroup,
    _ball: &WordBall,
) -> Result<TileHistogram> {
    let domain = group.domain(f64::INFINITY);
    let mut counts: Vec<(GroupElement, usize)> = Vec::new();
    let mut flagged = Vec::new();
    for &z in points {
        let (gamma, z0) = reduce_to_domain(z, group)?;
        if near_boundary(z0, &domain) {
            flagged.push(z);
            continue;
        }
        match counts.iter_mut().find(|(g, _)| g.approx_eq(&gamma, ELEMENT_TOL)) {
            Some((_, c)) => *c += 1,
            None => counts.push((gamma, 1)),
        }
    }
    Ok(TileHistogram { counts, flagged })
}
