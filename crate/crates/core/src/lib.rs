//! Boundary-warping label augmentation and bias-aware segmentation scoring.
//!
//! The crate covers the numerical side of probing semantic image synthesis
//! pipelines with mismatched label maps:
//!
//! * [`raster`] — image, label-map, edge-map and mask containers with 8-bit
//!   PNG I/O, Gaussian smoothing and boundary extraction;
//! * [`tps`] — thin-plate-spline fitting and seeded boundary-warp
//!   augmentation of label maps;
//! * [`perturb`] — class-conditional image perturbations (constant, segment
//!   average, blur, fitted lognormal noise);
//! * [`metrics`] — confusion-matrix accumulation with per-class pixel
//!   accuracy and intersection-over-union;
//! * [`bias`] — threshold classification of classes whose scores survive
//!   content removal, plus bundled reference splits;
//! * [`objectives`] — scalar generator/discriminator objectives (adversarial,
//!   feature matching, perceptual, edge) with baseline weight profiles;
//! * [`rng`] — explicit seeding helpers shared by everything stochastic.
//!
//! All floating-point work is `f64`; every seeded operation is a pure
//! function of its inputs and seed.

pub mod bias;
pub mod error;
pub mod metrics;
pub mod objectives;
pub mod perturb;
pub mod raster;
pub mod rng;
pub mod tps;

pub use error::{Error, Result};
