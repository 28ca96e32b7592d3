//! Numerical toolkit for lattice orbit systems of hyperbolic wavelets.
//!
//! The library follows the pipeline of the density dichotomy for discrete
//! series restricted to lattices in PSL(2, R):
//!
//! * [`halfplane`]: the group, its NAK coordinates, Haar and hyperbolic
//!   measures, and quadrature over both.
//! * [`fuchsian`]: lattices (modular and Hecke groups), fundamental
//!   domains, word balls, point reduction, covolumes, and tiling
//!   diagnostics.
//! * [`hardy`]: the Laguerre window family on the Hardy space of the
//!   half-plane, admissibility constants, and formal dimensions.
//! * [`wavelet`]: the wavelet transform, the projective representation on
//!   its range, and the structural identity checks.
//! * [`frame_core`]: exact finite-dimensional frame algebra and a finite
//!   Weyl-Heisenberg analog of the density experiments.
//! * [`density`]: admissibility verdicts, the periodization identity over
//!   lattice tiles, Bessel witnesses, and a quadrature-side formal
//!   dimension.

pub mod density;
pub mod error;
pub mod frame_core;
pub mod fuchsian;
pub mod halfplane;
pub mod hardy;
pub mod quad;
pub mod wavelet;

pub use error::{Error, Result};
