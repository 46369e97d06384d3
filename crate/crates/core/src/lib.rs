//! Virtual dynamic mechanical analysis (DMA) of periodic fiber composites.
//!
//! The crate generates periodic two-phase fiber microstructures, solves the
//! viscoelastic cell problem at each pulsation with an FFT-based fixed-point
//! scheme, and assembles storage/loss shear modulus curves into reproducible
//! datasets. Evaluation metrics for curve predictions live in [`metrics`].
//!
//! Module map:
//! - [`microstructure`]: fiber placement, rasterization, periodic/D4 transforms, grid files
//! - [`viscoelastic`]: standard linear solid law and the local constitutive relation
//! - [`homogenizer`]: periodic Green operator and the basic FFT scheme
//! - [`dma`]: frequency sweeps, elastic limits and Voigt/Reuss bounds
//! - [`dataset`]: dataset generation, augmentation, splitting and verification
//! - [`metrics`]: wMAPE, MAE and per-sample MAPE
//! - [`plot`]: static SVG figures

pub mod dataset;
pub mod digest;
pub mod dma;
mod fft;
pub mod homogenizer;
pub mod metrics;
pub mod microstructure;
pub mod plot;
pub mod rng;
pub mod viscoelastic;

pub use dma::{DmaCurve, FrequencyGrid};
pub use homogenizer::{SolveResult, SolverSettings, TensorField};
pub use microstructure::{D4Element, FiberSpec, PhaseGrid, RveConfig};
pub use viscoelastic::{ComplexModuli, MaterialPair, PhaseMaterial, SlsParams, SymTensor2};
