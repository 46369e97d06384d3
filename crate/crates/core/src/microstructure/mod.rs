//! Periodic two-phase fiber microstructures.
//!
//! A [`FiberSpec`] holds equal-radius disk centers in unit-cell coordinates;
//! [`rasterize`] turns it into a [`PhaseGrid`] by pixel-center membership under
//! periodic distance. Grids are always periodic: every index wraps modulo the
//! resolution.

mod generate;
mod grid;
pub mod io;
mod transform;

pub use generate::{generate_rve, max_fibers_for_pixel_radius, FiberSpec, RveConfig};
pub use grid::{measure_vf, rasterize, Phase, PhaseGrid};
pub use transform::{transform_d4, translate_periodic, D4Element};

use thiserror::Error;

pub const MAX_FIBERS: usize = 150;
pub const VF_MIN: f64 = 0.05;
pub const VF_MAX: f64 = 0.75;
pub const DEFAULT_RESOLUTION: usize = 256;
pub const DEFAULT_VF_TOLERANCE: f64 = 0.01;
/// Placement attempts per fiber before falling back to overlapping fibers.
pub const RSA_ATTEMPTS_PER_FIBER: usize = 10_000;
/// Bisection steps on the shared radius.
pub const RADIUS_BISECTION_STEPS: usize = 30;

#[derive(Debug, Error)]
pub enum MicrostructureError {
    #[error("invalid RVE configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "generation failed: vf target {target} not reached within {tolerance} \
         (best {best}) after {steps} radius adjustments"
    )]
    GenerationFailed {
        target: f64,
        tolerance: f64,
        best: f64,
        steps: usize,
    },
}
