//! Suite execution: registry order, per-check failure isolation, timing.

use std::time::Instant;

use anyhow::Result;
use msfrac_core::{RunReport, TheoryConstants};

use crate::checks::{CheckFn, Ctx, Outcome, PresetRun};
use crate::config::{ExperimentConfig, Suite};
use crate::registry::{audit, registry};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub id: String,
    pub paper_ref: &'static str,
    pub suite: Suite,
    pub pass: bool,
    pub margin: f64,
    pub seconds: f64,
    pub detail: String,
}

/// A recorded evolution destined for its own time-series file.
#[derive(Debug, Clone)]
pub struct NamedRun {
    pub name: String,
    pub report: RunReport,
    pub constants: Option<TheoryConstants>,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteResult {
    pub checks: Vec<CheckRecord>,
    pub runs: Vec<NamedRun>,
}

impl SuiteResult {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn pass_rate(&self) -> f64 {
        if self.checks.is_empty() {
            return 1.0;
        }
        self.checks.iter().filter(|c| c.pass).count() as f64 / self.checks.len() as f64
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock seconds per check; off keeps reports reproducible.
    pub timings: bool,
}

pub(crate) fn outcome_record(
    id: String,
    paper_ref: &'static str,
    suite: Suite,
    outcome: Result<Outcome>,
    started: Instant,
    opts: RunOptions,
) -> CheckRecord {
    let outcome = outcome.unwrap_or_else(|e| Outcome { pass: false, margin: f64::NAN, detail: format!("error: {e:#}") });
    let seconds = if opts.timings { started.elapsed().as_secs_f64() } else { 0.0 };
    let level = if outcome.pass { log::Level::Info } else { log::Level::Warn };
    log::log!(level, "{} {id}: {}", if outcome.pass { "pass" } else { "FAIL" }, outcome.detail);
    CheckRecord { id, paper_ref, suite, pass: outcome.pass, margin: outcome.margin, seconds, detail: outcome.detail }
}

pub(crate) fn named_run(r: &PresetRun, prefix: &str) -> NamedRun {
    NamedRun { name: format!("{prefix}{}", r.name), report: r.report.clone(), constants: Some(r.constants) }
}

/// Runs every registered check of the selected suite(s) in registry order.
/// Check failures and check errors are recorded; only a failed registry
/// audit aborts.
pub fn run_suite(config: &ExperimentConfig, opts: RunOptions) -> Result<SuiteResult> {
    let specs = registry();
    audit(&specs)?;
    let selected = config.suite.expand();
    let ctx = Ctx::new(config);
    let mut result = SuiteResult::default();
    for spec in specs.iter().filter(|s| selected.contains(&s.suite)) {
        let started = Instant::now();
        let outcome = match spec.run {
            CheckFn::Plain(f) => f(&ctx),
            CheckFn::Preset(i, f) => match &*ctx.preset_run(i) {
                Ok(r) => f(&ctx, r),
                Err(e) => Err(anyhow::anyhow!("preset run failed: {e}")),
            },
        };
        result.checks.push(outcome_record(spec.id.clone(), spec.paper_ref, spec.suite, outcome, started, opts));
    }
    for r in ctx.finished_runs().iter() {
        if let Ok(r) = &**r {
            result.runs.push(named_run(r, "theorem12_"));
        }
    }
    Ok(result)
}
