//! Check implementations, grouped by suite. Every check returns an
//! [`Outcome`] whose margin is positive when there is headroom.

use std::cell::RefCell;
use std::rc::Rc;

use anyhow::Result;
use msfrac_core::{RunReport, TheoryConstants, TimeModulus, TorusField};

use crate::config::ExperimentConfig;
use crate::presets::{evolution_presets, EvolutionPreset};

pub mod evolve;
pub mod kernel;
pub mod lemmas;
pub mod picard;
pub mod theorem12;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub margin: f64,
    pub detail: String,
}

impl Outcome {
    /// Passes when `margin ≥ 0`.
    pub fn nonnegative(margin: f64, detail: impl Into<String>) -> Self {
        Self { pass: margin >= 0.0, margin, detail: detail.into() }
    }

    /// Passes when `margin > 0`.
    pub fn positive(margin: f64, detail: impl Into<String>) -> Self {
        Self { pass: margin > 0.0, margin, detail: detail.into() }
    }

    /// Margin as computed, pass decided separately.
    pub fn with(pass: bool, margin: f64, detail: impl Into<String>) -> Self {
        Self { pass: pass && !margin.is_nan(), margin, detail: detail.into() }
    }
}

/// A finished evolution of one preset with its attached time modulus.
pub struct PresetRun {
    pub name: String,
    pub params: msfrac_core::PdeParams,
    pub t_end: f64,
    pub theta0: TorusField,
    pub constants: TheoryConstants,
    pub modulus: TimeModulus,
    pub report: RunReport,
}

pub type PlainFn = fn(&Ctx) -> Result<Outcome>;
pub type PresetFn = fn(&Ctx, &PresetRun) -> Result<Outcome>;

#[derive(Clone, Copy)]
pub enum CheckFn {
    Plain(PlainFn),
    Preset(usize, PresetFn),
}

/// A preset evolution, or the error that stopped it, shared between checks.
pub type SharedRun = Rc<std::result::Result<PresetRun, String>>;

/// Shared state for one suite invocation. Preset runs are computed on first
/// use and reused by the later checks of the same preset.
pub struct Ctx<'a> {
    pub config: &'a ExperimentConfig,
    presets: Vec<EvolutionPreset>,
    runs: RefCell<Vec<Option<SharedRun>>>,
}

impl<'a> Ctx<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Self {
        let presets = evolution_presets();
        let runs = RefCell::new(vec![None; presets.len()]);
        Self { config, presets, runs }
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn preset_run(&self, index: usize) -> SharedRun {
        if let Some(r) = &self.runs.borrow()[index] {
            return Rc::clone(r);
        }
        let preset = self.presets[index].clone();
        log::info!("evolving preset {} to t = {}", preset.name, crate::presets::T_END);
        let result = theorem12::evolve_preset(&preset, self.config).map_err(|e| format!("{e:#}"));
        let rc = Rc::new(result);
        self.runs.borrow_mut()[index] = Some(Rc::clone(&rc));
        rc
    }

    /// Finished preset runs in preset order.
    pub fn finished_runs(&self) -> Vec<SharedRun> {
        self.runs.borrow().iter().flatten().cloned().collect()
    }
}

/// `|a − b| / |b|`, or `|a − b|` when `b = 0`.
pub(crate) fn rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        (a - b).abs()
    } else {
        ((a - b) / b).abs()
    }
}

pub(crate) fn fmt_sci(x: f64) -> String {
    format!("{x:.3e}")
}
