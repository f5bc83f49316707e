//! Sliding-window iterative denoising over a view-by-time sample grid.
//!
//! A grid of latent samples (some clean conditioning inputs, the rest noisy
//! targets) is denoised by sweeping small overlapping windows along the view
//! and time axes, alternating between a spatial and a temporal phase. Every
//! sample carries its own noise level, and plans are audited against the step
//! budget identity `D = 2 * P * W / S` before execution.
//!
//! The crate also ships the surrounding machinery: pinhole cameras with
//! Plücker ray embeddings, skeleton triangulation and rasterization for
//! conditioning maps, an exactly solvable Gaussian toy world that stands in
//! for the learned denoiser, a deterministic fork-join executor, and an
//! ablation harness comparing scheduling strategies against a full-grid gold
//! run.
//!
//! Start with the `examples/` directory: each example exercises one major
//! capability end to end.

pub mod ablation;
pub mod camera;
pub mod cli;
pub mod engine;
pub mod error;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod parallel;
pub mod plan;
pub mod schedule;
pub mod skeleton;
pub mod toy;

pub use engine::{Denoiser, GuidanceConfig};
pub use error::{Error, Result};
pub use grid::{Role, SampleGrid, SampleId};
pub use plan::{DenoisePlan, SweepParams};
pub use schedule::NoiseSchedule;
