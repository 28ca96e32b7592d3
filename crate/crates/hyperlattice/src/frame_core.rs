//! Finite-dimensional frame algebra: Gram matrices, the frame operator,
//! frame and Riesz bounds as extremal eigenvalues, canonical tight frames,
//! and a finite Weyl-Heisenberg projective representation for exhaustive
//! orbit experiments.

use crate::error::{Error, Result};
use num_complex::Complex64;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Dense complex matrix, row-major square storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += aik * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.get(j, i).conj());
            }
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        Self { n: self.n, data }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.n, x.len());
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                if (self.get(i, j) - self.get(j, i).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.adjoint().mul(self).sub(&Self::identity(self.n)).frobenius_norm() <= tol
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
/// Returns eigenvalues ascending and a unitary whose columns are the
/// matching eigenvectors.
pub fn hermitian_eig(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.n;
    if !m.is_hermitian(1e-10 * (1.0 + m.frobenius_norm())) {
        return Err(Error::Numeric("eigensolver needs a Hermitian matrix".into()));
    }
    let mut a = m.clone();
    // symmetrize exactly so rounding in the input cannot drift the sweeps
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a.get(i, j) + a.get(j, i).conj());
            a.set(i, j, avg);
            a.set(j, i, avg.conj());
        }
        let d = a.get(i, i);
        a.set(i, i, Complex64::new(d.re, 0.0));
    }
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm().max(1e-300);
    for _sweep in 0..120 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a.get(i, j).norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r <= 1e-18 * scale {
                    continue;
                }
                let phi = apq.arg();
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = Complex64::from_polar(t * c, phi);
                // columns: col_p <- c col_p - s~ col_q ; col_q <- s col_p + c col_q
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s.conj() * akq);
                    a.set(k, q, s * akp + c * akq);
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s.conj() * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
                // rows: row_p <- c row_p - s row_q ; row_q <- s~ row_p + c row_q
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s.conj() * apk + c * aqk);
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let eig: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    idx.sort_by(|&i, &j| eig[i].partial_cmp(&eig[j]).unwrap());
    let values: Vec<f64> = idx.iter().map(|&i| eig[i]).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &i) in idx.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, col, v.get(k, i));
        }
    }
    Ok((values, vectors))
}

/// A finite family of vectors in C^d.
#[derive(Debug, Clone)]
pub struct VectorSystem {
    pub dim: usize,
    pub vectors: Vec<Vec<Complex64>>,
}

impl VectorSystem {
    pub fn new(dim: usize, vectors: Vec<Vec<Complex64>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Domain("vector system needs at least one vector".into()));
        }
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::Domain("vector length does not match dimension".into()));
        }
        Ok(Self { dim, vectors })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm(x: &[Complex64]) -> f64 {
    inner(x, x).re.max(0.0).sqrt()
}

/// G[i][j] = <v_j, v_i>; Hermitian positive semidefinite.
pub fn gram(sys: &VectorSystem) -> CMatrix {
    let n = sys.len();
    let mut g = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            g.set(i, j, inner(&sys.vectors[j], &sys.vectors[i]));
        }
    }
    g
}

/// S = sum_i v_i v_i^*, a d x d Hermitian PSD matrix.
pub fn frame_operator(sys: &VectorSystem) -> CMatrix {
    let d = sys.dim;
    let mut s = CMatrix::zeros(d);
    for v in &sys.vectors {
        for i in 0..d {
            for j in 0..d {
                let upd = s.get(i, j) + v[i] * v[j].conj();
                s.set(i, j, upd);
            }
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Extremal eigenvalues of the frame operator. lower > 0 iff the system
/// spans C^d.
pub fn frame_bounds(sys: &VectorSystem) -> Result<FrameBounds> {
    let (eig, _) = hermitian_eig(&frame_operator(sys))?;
    Ok(FrameBounds {
        lower: eig[0].max(0.0),
        upper: eig[eig.len() - 1],
    })
}

/// Extremal eigenvalues of the Gram matrix. lower > 0 iff the system is a
/// Riesz sequence.
pub fn riesz_bounds(sys: &VectorSystem) -> Result<FrameBounds> {
    let (eig, _) = hermitian_eig(&gram(sys))?;
    Ok(FrameBounds {
        lower: eig[0].max(0.0),
        upper: eig[eig.len() - 1],
    })
}

const SPECTRAL_FLOOR: f64 = 1e-12;

fn inverse_sqrt(s: &CMatrix) -> Result<CMatrix> {
    let (eig, u) = hermitian_eig(s)?;
    let top = eig[eig.len() - 1];
    if eig[0] <= SPECTRAL_FLOOR * top.max(1.0) {
        return Err(Error::NotAFrame(format!(
            "frame operator is singular: spectrum [{:.3e}, {:.3e}]",
            eig[0], top
        )));
    }
    let n = s.n;
    let mut out = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += u.get(i, k) * u.get(j, k).conj() / eig[k].sqrt();
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// {S^{-1/2} v_i}: the canonical tight (Parseval) frame associated with a
/// spanning system.
pub fn canonical_tight(sys: &VectorSystem) -> Result<VectorSystem> {
    let s_inv_half = inverse_sqrt(&frame_operator(sys))?;
    let vectors = sys
        .vectors
        .iter()
        .map(|v| s_inv_half.apply(v))
        .collect();
    VectorSystem::new(sys.dim, vectors)
}

/// A projective unitary representation of a finite group given by its
/// multiplication table, matrices, and cocycle U_g U_h = sigma(g,h) U_{gh}.
#[derive(Debug, Clone)]
pub struct FiniteProjectiveRep {
    pub dim: usize,
    pub order: usize,
    pub mult: Vec<Vec<usize>>,
    pub matrices: Vec<CMatrix>,
    pub cocycle: Vec<Vec<Complex64>>,
}

impl FiniteProjectiveRep {
    /// Checks unitarity and the cocycle relation to the supplied tolerance.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (g, u) in self.matrices.iter().enumerate() {
            if !u.is_unitary(tol) {
                return Err(Error::Numeric(format!("matrix {g} not unitary")));
            }
        }
        for g in 0..self.order {
            for h in 0..self.order {
                let sigma = self.cocycle[g][h];
                if (sigma.norm() - 1.0).abs() > tol {
                    return Err(Error::Numeric("cocycle not unimodular".into()));
                }
                let lhs = self.matrices[g].mul(&self.matrices[h]);
                let gh = self.mult[g][h];
                let mut rhs = self.matrices[gh].clone();
                for v in rhs.data.iter_mut() {
                    *v *= sigma;
                }
                if lhs.sub(&rhs).frobenius_norm() > tol {
                    return Err(Error::Numeric(format!(
                        "cocycle relation fails at ({g}, {h})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Translations and modulations on C^N: the group Z_N x Z_N with
/// U_{(p,q)} = M^q T^p, (T^p x)[j] = x[j - p], (M^q x)[j] = w^{qj} x[j],
/// w = e^{2 pi i / N}. The cocycle is sigma((p1,q1),(p2,q2)) = w^{-p1 q2}.
pub fn finite_weyl_heisenberg(n: usize) -> Result<FiniteProjectiveRep> {
    if n < 2 {
        return Err(Error::Domain("Weyl-Heisenberg analog needs N >= 2".into()));
    }
    let order = n * n;
    let elem = |idx: usize| (idx / n, idx % n); // (p, q)
    let index = |p: usize, q: usize| (p % n) * n + (q % n);
    let omega = |e: i64| {
        let k = e.rem_euclid(n as i64);
        Complex64::from_polar(1.0, TWO_PI * k as f64 / n as f64)
    };
    let mut matrices = Vec::with_capacity(order);
    for idx in 0..order {
        let (p, q) = elem(idx);
        let mut u = CMatrix::zeros(n);
        for j in 0..n {
            let src = (j + n - p % n) % n;
            u.set(j, src, omega((q * j) as i64));
        }
        matrices.push(u);
    }
    let mut mult = vec![vec![0usize; order]; order];
    let mut cocycle = vec![vec![Complex64::new(0.0, 0.0); order]; order];
    for g in 0..order {
        let (p1, q1) = elem(g);
        for h in 0..order {
            let (p2, q2) = elem(h);
            mult[g][h] = index(p1 + p2, q1 + q2);
            cocycle[g][h] = omega(-((p1 * q2) as i64));
        }
    }
    Ok(FiniteProjectiveRep {
        dim: n,
        order,
        mult,
        matrices,
        cocycle,
    })
}

/// {U_g F : g in the group}, in group-table order.
pub fn orbit_system(rep: &FiniteProjectiveRep, f: &[Complex64]) -> Result<VectorSystem> {
    if f.len() != rep.dim {
        return Err(Error::Domain("window length does not match dimension".into()));
    }
    let vectors = rep.matrices.iter().map(|u| u.apply(f)).collect();
    VectorSystem::new(rep.dim, vectors)
}

/// Report of a finite density experiment over a subgroup orbit.
#[derive(Debug, Clone)]
pub struct DensityAnalogReport {
    pub dim: usize,
    pub subgroup_order: usize,
    pub frame_bounds: FrameBounds,
    pub riesz_bounds: FrameBounds,
    pub is_frame: bool,
    pub is_riesz: bool,
}

/// Runs the finite analog of the density dichotomy: the orbit of F under a
/// subgroup of K of the N^2 elements is a frame only if K >= N and a Riesz
/// sequence only if K <= N.
pub fn density_analog_experiment(
    rep: &FiniteProjectiveRep,
    selection: &[usize],
    f: &[Complex64],
) -> Result<DensityAnalogReport> {
    if selection.is_empty() || selection.iter().any(|&g| g >= rep.order) {
        return Err(Error::Domain("selection indices out of range".into()));
    }
    let in_sel = {
        let mut mask = vec![false; rep.order];
        for &g in selection {
            mask[g] = true;
        }
        mask
    };
    for &g in selection {
        for &h in selection {
            if !in_sel[rep.mult[g][h]] {
                return Err(Error::Domain(
                    "selection is not closed under the group law".into(),
                ));
            }
        }
    }
    let vectors: Vec<Vec<Complex64>> = selection
        .iter()
        .map(|&g| rep.matrices[g].apply(f))
        .collect();
    let sys = VectorSystem::new(rep.dim, vectors)?;
    let fb = frame_bounds(&sys)?;
    let rb = riesz_bounds(&sys)?;
    let floor = 1e-10 * fb.upper.max(1.0);
    Ok(DensityAnalogReport {
        dim: rep.dim,
        subgroup_order: selection.len(),
        frame_bounds: fb,
        riesz_bounds: rb,
        is_frame: fb.lower > floor,
        is_riesz: rb.lower > 1e-10 * rb.upper.max(1.0),
    })
}
