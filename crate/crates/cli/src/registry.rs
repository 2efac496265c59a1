//! The check registry: every check id with its reference tag and suite, in
//! the order results are committed.

use std::collections::BTreeSet;

use anyhow::{bail, Result};

use crate::checks::{evolve, kernel, lemmas, picard, theorem12, CheckFn};
use crate::config::Suite;
use crate::presets::evolution_presets;

/// Reference tags with a one-line description of the verified statement.
pub const REFERENCE_TAGS: &[(&str, &str)] = &[
    ("torus-field", "spectral differentiation on the periodic grid"),
    ("holder-seminorm", "sampled Holder seminorm of the gradient"),
    ("fourier-multiplier", "fractional Laplacian as the multiplier |k|^(2a)"),
    ("lattice-sum", "pointwise periodic lattice-sum representation"),
    ("pv-quadrature", "whole-space principal-value representation"),
    ("pv-decay", "decay at infinity of the fractional Laplacian of decaying data"),
    ("normalizing-constant", "normalizing constant C_{d,a}"),
    ("interpolation-bound", "sup bound by |theta|^(1-2a) |grad theta|^(2a)"),
    ("modulus-transfer", "transfer of a modulus of continuity through the operator"),
    ("heat-kernel", "heat semigroup equals the periodized Gaussian convolution"),
    ("kernel-identities", "mass, gradient and time-derivative moments of the heat kernel"),
    ("mild-solution", "Duhamel formula for the mild solution"),
    ("gronwall-lemma", "explicit Gronwall-type bound"),
    ("picard-constants", "M0, M1, kappa0 and T0 of the local construction"),
    ("picard-iteration", "uniform bounds and convergence of the Picard iterates"),
    ("contraction-envelope", "geometric envelope 2^(-(k-1)) of successive differences"),
    ("continuous-dependence", "W^{1,inf} continuous dependence on the data"),
    ("pde-step", "time integrator for the full equation"),
    ("global-existence", "runs reach t_end without blow-up"),
    ("parabolic-smoothing", "Holder smoothing of the gradient for t > 0"),
    ("sup-norm-regularity", "sup-norm integral inequality under a gradient bound"),
    ("modulus-definition", "base modulus xi/(1+xi^(1-a)) and its shape"),
    ("strict-modulus", "data obey omega(B|x-y|) strictly for B large"),
    ("gradient-strict-bound", "strict modulus bounds the gradient by omega'(0)"),
    ("touching-derivatives", "first and second derivatives at a touching pair"),
    ("growth-constants", "delta0 and C0 of the time-dependent modulus"),
    ("breakthrough-scan", "no pair reaches the time-dependent modulus"),
    ("breakthrough-inequality", "right side of the breakthrough inequality is negative"),
    ("gradient-bound", "Lipschitz bound B e^(C0 t)"),
];

pub struct CheckSpec {
    pub id: String,
    pub paper_ref: &'static str,
    pub suite: Suite,
    pub run: CheckFn,
}

fn plain(id: &str, paper_ref: &'static str, suite: Suite, run: crate::checks::PlainFn) -> CheckSpec {
    CheckSpec { id: id.to_string(), paper_ref, suite, run: CheckFn::Plain(run) }
}

pub fn registry() -> Vec<CheckSpec> {
    use Suite::*;
    let mut r = vec![
        plain("fields.spectral_derivative", "torus-field", Lemmas, lemmas::spectral_derivative),
        plain("fields.holder_sampling", "holder-seminorm", Lemmas, lemmas::holder_sampling),
        plain("fraclap.multiplier", "fourier-multiplier", Lemmas, lemmas::multiplier),
        plain("fraclap.lattice_equivalence", "lattice-sum", Lemmas, lemmas::lattice_equivalence),
        plain("fraclap.normalizing_constant", "normalizing-constant", Lemmas, lemmas::normalizing_constant),
        plain("fraclap.pv_big_box", "pv-quadrature", Lemmas, lemmas::pv_big_box),
        plain("fraclap.pv_decay", "pv-decay", Lemmas, lemmas::pv_decay),
        plain("fraclap.interpolation_bound", "interpolation-bound", Lemmas, lemmas::interpolation_bound),
        plain("fraclap.transfer_closed_form", "modulus-transfer", Lemmas, lemmas::transfer_closed_form),
        plain("fraclap.transfer_sweep", "modulus-transfer", Lemmas, lemmas::transfer_sweep),
        plain("modulus.base_shape", "modulus-definition", Lemmas, lemmas::base_shape),
        plain("modulus.fit_b", "strict-modulus", Lemmas, lemmas::fit_b_strict),
        plain("modulus.gradient_strict_bound", "gradient-strict-bound", Lemmas, lemmas::gradient_strict_bound),
        plain("modulus.touching", "touching-derivatives", Lemmas, lemmas::touching),
        plain("modulus.growth_constants", "growth-constants", Lemmas, lemmas::growth_constants),
        plain("modulus.breakthrough_detector", "breakthrough-scan", Lemmas, lemmas::breakthrough_detector),
        plain("kernel.semigroup", "heat-kernel", Kernel, kernel::semigroup),
        plain("kernel.periodization", "heat-kernel", Kernel, kernel::periodization),
        plain("kernel.mass", "kernel-identities", Kernel, kernel::mass),
        plain("kernel.gradient_constant", "kernel-identities", Kernel, kernel::gradient_constant),
        plain("kernel.dt_moments", "kernel-identities", Kernel, kernel::dt_moments),
        plain("kernel.difference_bounds", "kernel-identities", Kernel, kernel::difference_bounds),
        plain("kernel.duhamel", "mild-solution", Kernel, kernel::duhamel),
        plain("kernel.gronwall_instance", "gronwall-lemma", Kernel, kernel::gronwall_instance),
        plain("kernel.gronwall_premise", "gronwall-lemma", Kernel, kernel::gronwall_premise),
        plain("picard.desk_constants", "picard-constants", Picard, picard::desk_constants),
        plain("picard.uniform_bounds", "picard-iteration", Picard, picard::uniform_bounds),
        plain("picard.contraction", "contraction-envelope", Picard, picard::contraction),
        plain("picard.linear_limit", "picard-iteration", Picard, picard::linear_limit),
        plain("picard.continuous_dependence", "continuous-dependence", Picard, picard::continuous_dependence),
        plain("picard.linearization", "continuous-dependence", Picard, picard::linearization),
        plain("evolve.linear_exactness", "pde-step", Evolve, evolve::linear_exactness),
        plain("evolve.linear_oracle", "pde-step", Evolve, evolve::linear_oracle),
        plain("evolve.manufactured_order", "pde-step", Evolve, evolve::manufactured_order),
        plain("evolve.gradient_max_principle", "pde-step", Evolve, evolve::gradient_max_principle),
        plain("evolve.self_convergence", "pde-step", Evolve, evolve::self_convergence),
        plain("evolve.parabolic_smoothing", "parabolic-smoothing", Evolve, evolve::parabolic_smoothing),
        plain("evolve.sup_norm_monitor", "sup-norm-regularity", Evolve, evolve::sup_norm_monitor),
    ];
    for (i, p) in evolution_presets().iter().enumerate() {
        let items: [(&str, &'static str, crate::checks::PresetFn); 5] = [
            ("construction", "growth-constants", theorem12::construction),
            ("inequality", "breakthrough-inequality", theorem12::inequality),
            ("completed", "global-existence", theorem12::completed),
            ("gradient_bound", "gradient-bound", theorem12::gradient_bound),
            ("no_breakthrough", "breakthrough-scan", theorem12::no_breakthrough),
        ];
        for (suffix, tag, f) in items {
            r.push(CheckSpec {
                id: format!("theorem12.{}.{suffix}", p.name),
                paper_ref: tag,
                suite: Theorem12,
                run: CheckFn::Preset(i, f),
            });
        }
    }
    r
}

/// Every check id is unique and carries a known tag, and every tag has at
/// least one check.
pub fn audit(checks: &[CheckSpec]) -> Result<()> {
    let tags: BTreeSet<&str> = REFERENCE_TAGS.iter().map(|t| t.0).collect();
    let mut ids = BTreeSet::new();
    let mut covered = BTreeSet::new();
    for c in checks {
        if !ids.insert(c.id.as_str()) {
            bail!("check id `{}` is registered twice", c.id);
        }
        if !tags.contains(c.paper_ref) {
            bail!("check `{}` carries unknown reference tag `{}`", c.id, c.paper_ref);
        }
        covered.insert(c.paper_ref);
    }
    let missing: Vec<&str> = tags.difference(&covered).copied().collect();
    if !missing.is_empty() {
        bail!("reference tags without any check: {}", missing.join(", "));
    }
    Ok(())
}
