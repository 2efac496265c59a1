//! Built-in parameter sets shared by the suites and the acceptance test.

use std::f64::consts::PI;

use anyhow::Result;
use msfrac_core::{PdeParams, SolverConfig, TorusField, TorusGrid};

use crate::config::InitialData;

/// One global-in-time verification case.
#[derive(Debug, Clone)]
pub struct EvolutionPreset {
    pub name: &'static str,
    pub params: PdeParams,
    pub n: usize,
    pub data: &'static str,
    pub amplitude: f64,
}

pub const T_END: f64 = 5.0;
pub const DT: f64 = 1e-3;
pub const RECORD_EVERY: usize = 50;

fn params(lambda: f64, p: f64, alpha: f64, dim: usize) -> PdeParams {
    PdeParams::new(1.0, alpha, p, 1.0, lambda, dim).expect("preset parameters are admissible")
}

/// Six cases spanning `λ ∈ {−1, 1}`, `p ∈ {1, 2, 3}`, `α ∈ {0.1, 0.25}` and
/// `d ∈ {1, 2}`.
pub fn evolution_presets() -> Vec<EvolutionPreset> {
    vec![
        EvolutionPreset { name: "d1-p2-desk", params: params(1.0, 2.0, 0.25, 1), n: 256, data: "sin", amplitude: 1.0 },
        EvolutionPreset { name: "d1-p1-neg", params: params(-1.0, 1.0, 0.1, 1), n: 256, data: "sin-cos2", amplitude: 1.0 },
        EvolutionPreset { name: "d1-p3", params: params(1.0, 3.0, 0.25, 1), n: 256, data: "sin", amplitude: 0.5 },
        EvolutionPreset { name: "d2-p2-neg", params: params(-1.0, 2.0, 0.25, 2), n: 64, data: "sin-sum", amplitude: 1.0 },
        EvolutionPreset { name: "d2-p1", params: params(1.0, 1.0, 0.1, 2), n: 64, data: "sin-diag", amplitude: 1.0 },
        EvolutionPreset { name: "d2-p3-neg", params: params(-1.0, 3.0, 0.1, 2), n: 64, data: "sin-cos", amplitude: 0.5 },
    ]
}

impl EvolutionPreset {
    pub fn grid(&self) -> TorusGrid {
        TorusGrid::new(self.params.dim, 2.0 * PI, self.n).expect("preset grid is valid")
    }

    pub fn theta0(&self) -> Result<TorusField> {
        InitialData::Preset { name: self.data.into(), amplitude: self.amplitude }.build(&self.grid())
    }

    pub fn solver_config(&self, scan_pairs: usize, seed: u64) -> Result<SolverConfig> {
        let mut c = SolverConfig::new(self.params, self.grid(), DT, T_END)?;
        c.record_every = RECORD_EVERY;
        c.scan_samples = scan_pairs;
        c.seed = seed;
        Ok(c)
    }
}

/// `θ₀ = sin x`, `ν = μ = λ = 1`, `p = 2`, `α = 1/4`.
pub fn desk_params() -> PdeParams {
    params(1.0, 2.0, 0.25, 1)
}

pub fn desk_grid() -> TorusGrid {
    TorusGrid::new(1, 2.0 * PI, 256).expect("desk grid is valid")
}

pub fn desk_theta0() -> TorusField {
    TorusField::from_fn(&desk_grid(), |x| x[0].sin())
}
