//! Four-parameter affine motion compensation for block-based video prediction.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: corner-MV affine model and its fixed-point MV field.
//! - [`frame`] and [`synth`]: padded 8-bit planes, raw I420 I/O, metrics and
//!   synthetic ground-truth warps.
//! - [`interp`]: one-step 1/64-pel DCT-based interpolation and adaptive
//!   block-size affine motion compensation.
//! - [`search`]: translational search, gradient-based affine motion
//!   estimation and an exhaustive oracle.
//! - [`harness`]: candidate lists, mode decision and quadtree encoding of
//!   prediction structures, plus CSV/PGM reports.

pub mod error;
pub mod frame;
pub mod harness;
pub mod interp;
pub mod model;
pub mod search;
pub mod synth;

pub use error::{Error, Result};
pub use frame::{Block, Frame, Plane, PlaneRegion};
pub use interp::FilterBank;
pub use model::{AffineModel, MotionVector, MvPrecision};
