//! Periodic pseudo-spectral solver for
//! `∂ₜθ = νΔθ + λ|∇θ|^p + μ(−Δ)^αθ`, `α ∈ (0, 1/2)`, with numerical checks of
//! the constructive estimates behind its global well-posedness.

pub mod error;
pub mod evolve;
pub mod fields;
pub mod fraclap;
pub mod heatkernel;
pub mod modulus;
pub mod params;
pub mod picard;
pub mod quadrature;

pub use error::{Error, Result};
pub use evolve::{run, RunReport, Solver, SolverConfig, StopReason};
pub use fields::{PairSample, TorusField, TorusGrid};
pub use fraclap::{DecayingFunction, FracOrder, Gaussian};
pub use heatkernel::{GronwallInstance, HeatKernelParams};
pub use modulus::{Modulus, TheoryConstants, TimeModulus};
pub use params::PdeParams;
pub use picard::{PicardConstants, PicardSequence};
