//! Random products g·x·gᵀ of real matrices g with real antisymmetric x.
//!
//! Modules: [`linalg`] (types, Haar sampling), [`samplers`], [`spherical`]
//! (Φ, Ψ, Harish-Chandra), [`mellin`] (weights, Mellin transform and
//! convolution), [`ensembles`] (joint densities), [`kernels`] and
//! [`harness`] (experiments, reports).

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensembles;
pub mod error;
pub mod harness;
pub mod jet;
pub mod kernels;
pub mod linalg;
pub mod mellin;
pub mod quad;
pub mod rng;
pub mod samplers;
pub mod special;
pub mod spherical;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{
    build_canonical, haar_orthogonal, project_corank2, singular_spectrum, vandermonde_sq, AntisymmetricMatrix,
    GeneralLinearMatrix, OrthogonalMatrix, SingularSpectrum,
};
pub use rng::{substream, RandomStream};
pub use stats::McEstimate;
