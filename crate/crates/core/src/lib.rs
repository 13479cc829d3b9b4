//! Stress-aligned stripe structures on thin shells.
//!
//! Pipeline: linear shell statics, per-face stress, anisotropic diffusion
//! tensors, low-frequency generalized eigenmodes, stripe level sets, and
//! exact extraction of the stripe region as a triangle mesh.

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod extract;
pub mod fem;
pub mod mesh;
pub mod operators;
pub mod sparse;
pub mod stripes;
pub mod tensor;
