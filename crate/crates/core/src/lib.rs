//! Deterministic synthesis of one-instance fractal pre-training datasets.
//!
//! The pipeline: [`search`] draws random iterated function systems and keeps
//! those whose attractor is sufficiently spread out, one per category;
//! [`ifs`] runs the chaos game for each; [`camera`] projects 3D clouds;
//! [`raster`] renders dots with optional 3x3 stamp augmentation; and
//! [`dataset`] writes PNGs plus a checksummed manifest. [`train`] holds the
//! loss contract and epoch planner an external trainer consumes.
//!
//! Every random draw is keyed by a [`SeedKey`], so outputs are a function of
//! the inputs alone, independent of thread count.

pub mod camera;
pub mod dataset;
pub mod error;
pub mod ifs;
pub mod par;
pub mod raster;
pub mod search;
pub mod seed;
pub mod train;

pub use error::{Error, Result};
pub use seed::SeedKey;
