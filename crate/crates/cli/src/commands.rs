//! The single-case subcommands: one evolution, one Picard construction, or
//! the constants table for the configured data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use msfrac_core::picard::{compute_constants, iterate, verify_contraction, ContractionReport};
use msfrac_core::TheoryConstants;

use crate::checks::{theorem12, Ctx, Outcome};
use crate::config::ExperimentConfig;
use crate::report::{constants_csv, num};
use crate::suite::{named_run, outcome_record, RunOptions, SuiteResult};

/// Evolves the configured data with the time modulus attached and checks
/// the same statements as the preset sweep.
pub fn single_run(config: &ExperimentConfig, opts: RunOptions) -> Result<SuiteResult> {
    let started = Instant::now();
    let cfg = config.solver_config()?;
    let run = theorem12::evolve_with_modulus("run", config.theta0()?, &cfg)?;
    let ctx = Ctx::new(config);
    let checks: [(&str, &'static str, crate::checks::PresetFn); 5] = [
        ("run.construction", "growth-constants", theorem12::construction),
        ("run.inequality", "breakthrough-inequality", theorem12::inequality),
        ("run.completed", "global-existence", theorem12::completed),
        ("run.gradient_bound", "gradient-bound", theorem12::gradient_bound),
        ("run.no_breakthrough", "breakthrough-scan", theorem12::no_breakthrough),
    ];
    let mut result = SuiteResult::default();
    for (id, tag, f) in checks {
        let t = Instant::now();
        let outcome = f(&ctx, &run);
        let begun = if result.checks.is_empty() { started } else { t };
        result.checks.push(outcome_record(id.into(), tag, crate::Suite::Theorem12, outcome, begun, opts));
    }
    result.runs.push(named_run(&run, ""));
    Ok(result)
}

pub struct PicardOutcome {
    pub result: SuiteResult,
    pub contraction: Option<ContractionReport>,
}

/// Builds `k_max` Picard iterates on `[0, T₀]` for the configured data.
pub fn picard_run(config: &ExperimentConfig, k_max: usize, opts: RunOptions) -> Result<PicardOutcome> {
    let theta0 = config.theta0()?;
    let constants = compute_constants(&theta0, &config.pde)?;
    if !constants.t0.is_finite() {
        bail!("T0 is infinite for these parameters (no forcing); nothing to iterate");
    }
    let started = Instant::now();
    let seq = iterate(&theta0, &config.pde, &constants, k_max, constants.t0 / 64.0);
    let mut result = SuiteResult::default();
    let mut contraction = None;
    match seq {
        Ok(seq) => {
            let margin = seq
                .iterates
                .iter()
                .flat_map(|t| t.sup_norm.iter().zip(&t.lip))
                .map(|(s, l)| (constants.m0 - s).min(constants.m1 - l))
                .fold(f64::INFINITY, f64::min);
            result.checks.push(outcome_record(
                "picard.run.uniform_bounds".into(),
                "picard-iteration",
                crate::Suite::Picard,
                Ok(Outcome::positive(margin, format!("{k_max} iterates within M0 = {}, M1 = {}", constants.m0, constants.m1))),
                started,
                opts,
            ));
            let t = Instant::now();
            let rep = verify_contraction(&seq);
            let outcome = rep.as_ref().map_err(|e| anyhow::anyhow!("{e}")).map(|r| {
                let m = r.envelope_margins.iter().cloned().fold(f64::INFINITY, f64::min);
                Outcome::with(r.pass, m, format!("final distance {}", num(*r.distances.last().unwrap_or(&f64::NAN))))
            });
            result.checks.push(outcome_record(
                "picard.run.contraction".into(),
                "contraction-envelope",
                crate::Suite::Picard,
                outcome,
                t,
                opts,
            ));
            contraction = rep.ok();
        }
        Err(e) => {
            result.checks.push(outcome_record(
                "picard.run.uniform_bounds".into(),
                "picard-iteration",
                crate::Suite::Picard,
                Err(e.into()),
                started,
                opts,
            ));
        }
    }
    Ok(PicardOutcome { result, contraction })
}

pub fn contraction_csv(rep: &ContractionReport) -> String {
    let mut s = String::from("k,distance,envelope_margin,ratio\n");
    for (i, (d, m)) in rep.distances.iter().zip(&rep.envelope_margins).enumerate() {
        let ratio = if i == 0 { None } else { rep.ratios[i - 1] };
        let _ = writeln!(s, "{},{},{},{}", i + 2, num(*d), num(*m), ratio.map(num).unwrap_or_default());
    }
    s
}

pub fn write_contraction(dir: &Path, rep: &ContractionReport) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join("picard.csv");
    fs::write(&path, contraction_csv(rep)).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn theory_constants(config: &ExperimentConfig) -> Result<TheoryConstants> {
    let (c, _) = TheoryConstants::compute(&config.theta0()?, &config.pde)?;
    Ok(c)
}

pub fn constants_table(c: &TheoryConstants) -> String {
    let mut s = String::new();
    for (name, value, formula) in c.entries() {
        let _ = writeln!(s, "{name:<10} {:<24} {formula}", num(value));
    }
    s
}

pub fn write_constants(dir: &Path, c: &TheoryConstants) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join("constants.csv");
    fs::write(&path, constants_csv(&[("data", c)])).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
