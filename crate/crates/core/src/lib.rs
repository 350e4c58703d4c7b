//! Wave-optics simulation of two-photon (ghost) imaging with pseudo-thermal light.
//!
//! The crate is organised bottom-up:
//! [`grid`], [`field`], [`mask`], [`geometry`] and [`sampling`] hold the shared
//! vocabulary; [`optics`] transforms fields; [`source`] draws speckle ensembles;
//! [`correlation`] estimates `<I1 I2>`; [`experiment`] runs the imaging procedures.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod error;
pub mod experiment;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod mask;
pub mod optics;
pub mod sampling;
pub mod source;

pub use error::{Error, Result};
pub use field::ComplexField;
pub use geometry::{ScatterCone, SetupGeometry};
pub use grid::Grid1D;
pub use mask::TransmissionMask;
