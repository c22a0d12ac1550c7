//! Pointwise toolkit for Kähler curvature tensors on `(R^{2n}, J, <,>)`.
//!
//! The crate certifies the algebraic symmetries of curvature tensors,
//! computes sectional and holomorphic sectional curvature extremes with a
//! rigorous eigenvalue envelope, evaluates Chern forms by Chern-Weil theory
//! and runs perturbation experiments around the complex hyperbolic model
//! tensor `R0`.

pub mod chern;
pub mod cli;
pub mod curvature;
pub mod error;
pub mod experiments;
pub mod exterior;
pub mod pinching;
pub mod rng;
pub mod space;
pub mod tensor_file;

pub use chern::{ChernDensity, ChernIndex};
pub use curvature::{CurvatureTensor, SymmetryCertificate, TwoPlane};
pub use error::{Error, Result};
pub use exterior::AlternatingForm;
pub use pinching::{HolReport, PinchReport};
pub use space::HermitianSpace;

/// Largest complex dimension for which the Kähler projector is assembled.
pub const MAX_N: usize = 4;
