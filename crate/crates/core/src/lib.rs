//! Physically-based homogeneous fog for clear-weather images with known depth.
//!
//! A frame is fogged in five steps:
//!
//! 1. decode planar depth ([`geometry::decode_depth`]) and resolve holes ([`geometry::fill_holes`]);
//! 2. convert planar depth to camera-center distance ([`geometry::planar_to_radial`]);
//! 3. attenuate with `t = exp(-β·ℓ)` ([`optics::transmittance`]);
//! 4. pick the atmospheric light, fixed or from the dark channel ([`airlight::estimate_airlight`]);
//! 5. composite `F = t·R + (1 − t)·L` ([`optics::apply_fog`]).
//!
//! [`pipeline`] runs this over JSON Lines manifests with a worker pool,
//! copying annotations unchanged next to every fog variant.

pub mod airlight;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod optics;
pub mod pipeline;
pub mod raster;
pub mod raster_io;
pub mod synth;

pub use error::{Error, Result};
