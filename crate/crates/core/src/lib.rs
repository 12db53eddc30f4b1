//! Finite element discretization of two-dimensional directional fractional
//! diffusion on uniform triangulations, with a two-level overlapping additive
//! Schwarz preconditioner for conjugate gradients.
//!
//! The pipeline is: [`mesh`] builds the triangulation and decomposition,
//! [`assembly`] computes the translation-invariant stiffness entries,
//! [`operators`] turns them into an FFT-backed operator plus local and coarse
//! blocks, [`schwarz`] assembles the preconditioner and [`krylov`] solves.
//! [`experiment`] reproduces the iteration-count tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod experiment;
pub mod fraccalc;
pub mod krylov;
pub mod mesh;
pub mod operators;
pub mod par;
pub mod schwarz;

pub use error::{Error, Result};
