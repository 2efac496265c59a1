//! Moduli of continuity, the explicit time-dependent modulus
//! `Ω(t, ξ) = e^{C₀t} ω(Bξ)` with `ω(ξ) = ξ/(1+ξ^{1−α})`, and the sampled
//! checks built around it (strict fit, breakthrough scan, touching-point
//! derivative identities, strict gradient bound).

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{check_range, Error, Result};
use crate::fields::{
    all_pairs, lipschitz_estimate, linf_norm, near_diagonal_pairs, sample_pairs, PairSample,
    TorusField,
};
use crate::fraclap::{constant_c_dalpha, sphere_area, FracOrder};
use crate::params::PdeParams;
use crate::picard::{compute_constants, PicardConstants};

type Evaluator = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// A modulus of continuity with closed-form or quadrature-backed evaluators
/// for `ω`, `ω′` and `ω″` on `ξ > 0`.
#[derive(Clone)]
pub struct Modulus {
    label: String,
    eval: Evaluator,
    slope_at_zero: f64,
    unbounded: bool,
    strong: bool,
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Modulus")
            .field("label", &self.label)
            .field("slope_at_zero", &self.slope_at_zero)
            .field("unbounded", &self.unbounded)
            .field("strong", &self.strong)
            .finish()
    }
}

impl Modulus {
    /// `eval(ξ)` must return `[ω(ξ), ω′(ξ), ω″(ξ)]` for `ξ > 0`.
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static,
        slope_at_zero: f64,
        unbounded: bool,
        strong: bool,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
            slope_at_zero,
            unbounded,
            strong,
        }
    }

    /// `ω(ξ) = ξ`.
    pub fn linear() -> Self {
        Self::new("linear", |x| [x, 1.0, 0.0], 1.0, true, false)
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| [0.0; 3], 0.0, false, false)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            0.0
        } else {
            (self.eval)(xi)[0]
        }
    }

    pub fn derivative(&self, xi: f64) -> f64 {
        if xi <= 0.0 {
            self.slope_at_zero
        } else {
            (self.eval)(xi)[1]
        }
    }

    pub fn second_derivative(&self, xi: f64) -> f64 {
        (self.eval)(xi)[2]
    }

    pub fn eval_all(&self, xi: f64) -> [f64; 3] {
        (self.eval)(xi)
    }

    /// `ω′(0⁺)`.
    pub fn slope_at_zero(&self) -> f64 {
        self.slope_at_zero
    }

    pub fn is_unbounded(&self) -> bool {
        self.unbounded
    }

    pub fn is_strong(&self) -> bool {
        self.strong
    }

    /// `ξ ↦ ω(Bξ)`.
    pub fn scaled(&self, b: f64) -> Modulus {
        let inner = self.eval.clone();
        Modulus {
            label: format!("{}(B={b})", self.label),
            eval: Arc::new(move |x| {
                let [w, d1, d2] = inner(b * x);
                [w, b * d1, b * b * d2]
            }),
            slope_at_zero: b * self.slope_at_zero,
            unbounded: self.unbounded,
            strong: self.strong,
        }
    }

    /// Checks `ω′ ≥ 0` and `ω″ ≤ 0` (to `tol`) on the supplied points.
    pub fn check_shape(&self, points: &[f64], tol: f64) -> ShapeReport {
        let mut report = ShapeReport {
            nondecreasing: true,
            concave: true,
            min_first: f64::INFINITY,
            max_second: f64::NEG_INFINITY,
        };
        for &x in points {
            let [_, d1, d2] = self.eval_all(x);
            report.min_first = report.min_first.min(d1);
            report.max_second = report.max_second.max(d2);
        }
        report.nondecreasing = report.min_first >= -tol;
        report.concave = report.max_second <= tol;
        report
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeReport {
    pub nondecreasing: bool,
    pub concave: bool,
    pub min_first: f64,
    pub max_second: f64,
}

/// Logarithmically spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count.max(2) - 1) as f64).exp())
        .collect()
}

/// `ω(ξ) = ξ / (1 + ξ^{1−α})`.
pub fn omega_base(alpha: f64) -> Result<Modulus> {
    check_range("alpha", alpha, alpha > 0.0 && alpha < 0.5, "(0, 1/2)")?;
    Ok(Modulus::new(
        format!("omega(alpha={alpha})"),
        move |x| {
            let u = x.powf(1.0 - alpha);
            let q = 1.0 + u;
            let w = x / q;
            let d1 = (1.0 + alpha * u) / (q * q);
            let d2 = (1.0 - alpha) * x.powf(-alpha) * (alpha - 2.0 - alpha * u) / (q * q * q);
            [w, d1, d2]
        },
        1.0,
        true,
        true,
    ))
}

/// Worst strictness margin `min ω(ξ) − |θ(x) − θ(y)|` over the pairs, paired
/// with the relative requirement `margin ≥ rel·ω(ξ)`.
fn strict_margin(theta: &TorusField, omega: &Modulus, pairs: &[PairSample], rel: f64) -> (f64, bool) {
    let v = theta.values();
    let mut worst = f64::INFINITY;
    let mut ok = true;
    for p in pairs {
        let w = omega.value(p.separation);
        let m = w - (v[p.x] - v[p.y]).abs();
        worst = worst.min(m);
        if m < rel * w {
            ok = false;
        }
    }
    (worst, ok)
}

const FIT_SAMPLE_SEED: u64 = 0x5eed_f17b;

/// Pair set used to certify strictness: every pair in 1D, a dense stratified
/// sample plus all near-diagonal pairs in 2D.
pub fn certification_pairs(theta: &TorusField) -> Vec<PairSample> {
    let grid = theta.grid();
    if grid.dim() == 1 {
        all_pairs(grid)
    } else {
        let mut pairs = near_diagonal_pairs(grid, 4.0);
        pairs.extend(sample_pairs(grid, 20_000, FIT_SAMPLE_SEED));
        pairs
    }
}

/// Smallest `B = 2^{j/8} ≥ 1` with `ω(B) > max{2‖θ‖+1, ‖∇θ‖+1}`, then
/// certified on [`certification_pairs`] with relative gap `10⁻⁶`; doubled
/// (at most 10 times) until the check passes.
pub fn fit_b(theta0: &TorusField, omega: &Modulus) -> Result<f64> {
    if !omega.is_unbounded() {
        return Err(Error::InvalidInput("fit_b needs an unbounded modulus".into()));
    }
    let target = (2.0 * linf_norm(theta0) + 1.0).max(lipschitz_estimate(theta0) + 1.0);
    let mut j = 0;
    let mut b = 1.0;
    while omega.value(b) <= target {
        j += 1;
        b = 2f64.powf(j as f64 / 8.0);
        if j > 8 * 200 {
            return Err(Error::Construction("modulus does not exceed the fit target".into()));
        }
    }
    let pairs = certification_pairs(theta0);
    for _ in 0..=10 {
        let (_, ok) = strict_margin(theta0, &omega.scaled(b), &pairs, 1e-6);
        if ok {
            return Ok(b);
        }
        log::debug!("strictness check failed at B = {b}; doubling");
        b *= 2.0;
    }
    Err(Error::Construction(
        "no B within 10 doublings gives a strict modulus on the sampled pairs".into(),
    ))
}

/// `μ C_{d,α}|S^{d−1}|/α`-weighted growth constants of the time-dependent
/// modulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthConstants {
    pub delta0: f64,
    pub c0: f64,
}

/// Constant of the modulus transfer estimate, `C_{d,α}|S^{d−1}|/α`.
pub fn transfer_constant(order: &FracOrder) -> f64 {
    order.c_dalpha() * sphere_area(order.dim()) / order.alpha()
}

/// Left side of the small-scale dissipation condition
/// `4νω_B″(ξ) + μK·Bξ^{1−2α}/(1−2α)`; it must be negative on `(0, δ₀]`.
pub fn dissipation_residual(omega_b: &Modulus, b: f64, params: &PdeParams, k: f64, xi: f64) -> f64 {
    let a = params.alpha;
    4.0 * params.nu * omega_b.second_derivative(xi) + params.mu * k * b * xi.powf(1.0 - 2.0 * a) / (1.0 - 2.0 * a)
}

/// δ₀ as the largest admissible point below the cap, located on a log grid of
/// 10³ points and refined by bisection; C₀ from the closed formula.
pub fn construct_constants(b: f64, params: &PdeParams) -> Result<GrowthConstants> {
    check_range("B", b, b >= 1.0, "[1, inf)")?;
    params.validate()?;
    let order = params.frac_order()?;
    let k = transfer_constant(&order);
    let a = params.alpha;
    let omega_b = omega_base(a)?.scaled(b);
    let mut cap = 1.0 / b;
    if params.mu > 0.0 {
        cap = cap.min((params.nu * (1.0 - 2.0 * a) / (params.mu * k)).powf(1.0 / (1.0 - a)));
    }
    let holds = |x: f64| dissipation_residual(&omega_b, b, params, k, x) < 0.0;
    let grid = log_grid(cap * 1e-12, cap, 1000);
    let first_bad = grid.iter().position(|&x| !holds(x));
    let delta0 = match first_bad {
        None => cap,
        Some(0) => 0.0,
        Some(i) => {
            let (mut lo, mut hi) = (grid[i - 1], grid[i]);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if holds(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            lo
        }
    };
    if delta0.is_nan() || delta0 <= 1e-12 {
        return Err(Error::Construction(format!(
            "no delta0 > 1e-12 satisfies the dissipation condition (B = {b})"
        )));
    }
    let w = omega_b.value(delta0);
    let c0 = params.mu * k / w
        * (b.powf(2.0 * a - 1.0) / delta0
            + b.powf(a) / delta0.powf(a)
            + b * delta0.powf(1.0 - 2.0 * a) / (1.0 - 2.0 * a));
    Ok(GrowthConstants { delta0, c0 })
}

/// `Ω(t, ξ) = e^{C₀t}·ω(Bξ)`.
#[derive(Debug, Clone)]
pub struct TimeModulus {
    base: Modulus,
    scaled: Modulus,
    b: f64,
    c0: f64,
    delta0: f64,
}

impl TimeModulus {
    pub fn new(base: Modulus, b: f64, growth: GrowthConstants) -> Self {
        let scaled = base.scaled(b);
        Self {
            base,
            scaled,
            b,
            c0: growth.c0,
            delta0: growth.delta0,
        }
    }

    pub fn base(&self) -> &Modulus {
        &self.base
    }

    /// `ω_B`.
    pub fn omega_b(&self) -> &Modulus {
        &self.scaled
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn f(&self, t: f64) -> f64 {
        (self.c0 * t).exp()
    }

    pub fn value(&self, t: f64, xi: f64) -> f64 {
        self.f(t) * self.scaled.value(xi)
    }

    pub fn d_xi(&self, t: f64, xi: f64) -> f64 {
        self.f(t) * self.scaled.derivative(xi)
    }

    pub fn d2_xi(&self, t: f64, xi: f64) -> f64 {
        self.f(t) * self.scaled.second_derivative(xi)
    }

    pub fn d_t(&self, t: f64, xi: f64) -> f64 {
        self.c0 * self.value(t, xi)
    }

    /// `∂_ξΩ(t, 0) = B ω′(0) e^{C₀t}`, the gradient bound.
    pub fn gradient_bound(&self, t: f64) -> f64 {
        self.f(t) * self.scaled.slope_at_zero()
    }

    /// The modulus `Ω(t, ·)` frozen at time `t`.
    pub fn at(&self, t: f64) -> Modulus {
        let ft = self.f(t);
        let inner = self.scaled.clone();
        Modulus::new(
            format!("Omega(t={t})"),
            move |x| {
                let [w, d1, d2] = inner.eval_all(x);
                [ft * w, ft * d1, ft * d2]
            },
            ft * self.scaled.slope_at_zero(),
            self.scaled.is_unbounded(),
            self.scaled.is_strong(),
        )
    }
}

/// `4ν∂²_ξΩ − ∂ₜΩ + μK∫₀^ξ ∂_ηΩ η^{−2α} dη` at `(t, ξ)`. `transfer` must
/// be the transfer of `ω_B`; the value is `f(t)` times a `t`-independent
/// profile, so it may overflow to `-inf` for large `C₀t` without changing sign.
pub fn breakthrough_rhs(tm: &TimeModulus, params: &PdeParams, transfer: &Modulus, t: f64, xi: f64) -> f64 {
    let profile = 4.0 * params.nu * tm.omega_b().second_derivative(xi) - tm.c0() * tm.omega_b().value(xi)
        + params.mu * transfer.value(xi);
    tm.f(t) * profile
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakthroughReport {
    pub found: bool,
    pub worst_pair: PairSample,
    pub worst_margin: f64,
    pub time: f64,
}

/// Minimum over `pairs` of `Ω(t, ξ) − |θ(x) − θ(y)|`; the first minimizer in
/// list order wins ties.
pub fn breakthrough_scan(
    theta: &TorusField,
    tm: &TimeModulus,
    t: f64,
    pairs: &[PairSample],
) -> Result<BreakthroughReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("breakthrough_scan needs at least one pair".into()));
    }
    let v = theta.values();
    let ft = tm.f(t);
    let mut worst_margin = f64::INFINITY;
    let mut worst_pair = pairs[0];
    for p in pairs {
        let m = ft * tm.omega_b().value(p.separation) - (v[p.x] - v[p.y]).abs();
        if m < worst_margin {
            worst_margin = m;
            worst_pair = *p;
        }
    }
    Ok(BreakthroughReport {
        found: worst_margin <= 0.0,
        worst_pair,
        worst_margin,
        time: t,
    })
}

/// Stratified pairs plus every pair within four cells.
pub fn scan_pairs(theta: &TorusField, samples: usize, seed: u64) -> Vec<PairSample> {
    let grid = theta.grid();
    let mut pairs = near_diagonal_pairs(grid, 4.0);
    pairs.extend(sample_pairs(grid, samples, seed));
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TouchingReport {
    pub max_value_error: f64,
    pub max_gradient_error: f64,
    pub max_laplacian_gap_error: f64,
    pub pass: bool,
}

/// For `θ(x) = g(x₁)` with `g` odd and the pair `±ξ/2·e₁`, compares
/// finite-difference derivatives of `g` with the analytic derivatives of
/// `omega`: the touching value, `∂₁θ(x⁰) = ∂₁θ(y⁰) = ω′(ξ)` (tolerance
/// `10⁻⁸`) and `Δθ(x⁰) − Δθ(y⁰) = 4ω″(ξ)` (tolerance `10⁻⁶`).
pub fn check_touching_derivatives(
    g: &dyn Fn(f64) -> f64,
    omega: &Modulus,
    separations: &[f64],
) -> Result<TouchingReport> {
    for &s in &[0.0, 1e-3, 0.1, 0.37, 1.0, 2.5] {
        let (plus, minus) = (g(s), g(-s));
        if (plus + minus).abs() > 1e-12 * (1.0 + plus.abs()) {
            return Err(Error::InvalidInput(format!("profile is not odd at s = {s}")));
        }
    }
    let d1 = |x: f64, h: f64| (g(x - 2.0 * h) - 8.0 * g(x - h) + 8.0 * g(x + h) - g(x + 2.0 * h)) / (12.0 * h);
    let d2 = |x: f64, h: f64| {
        (-g(x - 2.0 * h) + 16.0 * g(x - h) - 30.0 * g(x) + 16.0 * g(x + h) - g(x + 2.0 * h)) / (12.0 * h * h)
    };
    let mut report = TouchingReport {
        max_value_error: 0.0,
        max_gradient_error: 0.0,
        max_laplacian_gap_error: 0.0,
        pass: true,
    };
    for &xi in separations {
        let (x0, y0) = (0.5 * xi, -0.5 * xi);
        let h1 = (1e-3f64).min(xi / 200.0);
        let h2 = (1e-2f64).min(xi / 100.0);
        let [w, w1, w2] = omega.eval_all(xi);
        report.max_value_error = report.max_value_error.max((g(x0) - g(y0) - w).abs());
        let gx = d1(x0, h1);
        let gy = d1(y0, h1);
        report.max_gradient_error = report
            .max_gradient_error
            .max((gx - w1).abs())
            .max((gy - w1).abs());
        let gap = d2(x0, h2) - d2(y0, h2);
        report.max_laplacian_gap_error = report.max_laplacian_gap_error.max((gap - 4.0 * w2).abs());
    }
    report.pass = report.max_value_error <= 1e-8
        && report.max_gradient_error <= 1e-8
        && report.max_laplacian_gap_error <= 1e-6;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrictBoundReport {
    pub lipschitz: f64,
    pub slope_at_zero: f64,
    pub margin: f64,
    pub pass: bool,
}

/// `‖∇θ‖_∞ < ω′(0)`, reported with its margin.
pub fn check_gradient_strict_bound(theta: &TorusField, omega: &Modulus) -> StrictBoundReport {
    let lipschitz = lipschitz_estimate(theta);
    let margin = omega.slope_at_zero() - lipschitz;
    StrictBoundReport {
        lipschitz,
        slope_at_zero: omega.slope_at_zero(),
        margin,
        pass: margin > 0.0,
    }
}

/// ω → B → (δ₀, C₀) → Ω for the given data.
pub fn assemble_time_modulus(theta0: &TorusField, params: &PdeParams) -> Result<TimeModulus> {
    params.validate()?;
    let omega = omega_base(params.alpha)?;
    let b = fit_b(theta0, &omega)?;
    let growth = construct_constants(b, params)?;
    Ok(TimeModulus::new(omega, b, growth))
}

/// Every explicit constant of the local and global constructions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryConstants {
    pub m0: f64,
    pub m1: f64,
    pub kappa0: f64,
    pub t0: f64,
    pub c_dalpha: f64,
    pub b: f64,
    pub delta0: f64,
    pub c0: f64,
}

impl TheoryConstants {
    pub fn compute(theta0: &TorusField, params: &PdeParams) -> Result<(Self, TimeModulus)> {
        let picard: PicardConstants = compute_constants(theta0, params)?;
        let tm = assemble_time_modulus(theta0, params)?;
        let c_dalpha = constant_c_dalpha(params.dim, params.alpha)?;
        Ok((
            Self {
                m0: picard.m0,
                m1: picard.m1,
                kappa0: picard.kappa0,
                t0: picard.t0,
                c_dalpha,
                b: tm.b(),
                delta0: tm.delta0(),
                c0: tm.c0(),
            },
            tm,
        ))
    }

    /// `(name, value, formula id)` rows for reports.
    pub fn entries(&self) -> Vec<(&'static str, f64, &'static str)> {
        vec![
            ("M0", self.m0, "1+|theta0|_inf"),
            ("M1", self.m1, "1+|grad theta0|_inf"),
            ("kappa0", self.kappa0, "Cstar*(2p|lambda|M1^p+mu*M0^(1-2a)*M1^(2a))"),
            ("T0", self.t0, "min(nu/kappa0^2,1/kappa0)/16"),
            ("C_d_alpha", self.c_dalpha, "1/int(1-cos z1)|z|^(-d-2a)"),
            ("B", self.b, "min 2^(j/8): omega(B)>max(2|theta0|+1,Lip+1), certified"),
            ("delta0", self.delta0, "bisection on 4nu*omega_B''+mu*K*B*xi^(1-2a)/(1-2a)<0"),
            ("C0", self.c0, "mu*K/omega_B(delta0)*(B^(2a-1)/delta0+B^a/delta0^a+B*delta0^(1-2a)/(1-2a))"),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::TorusGrid;
    use crate::fraclap::modulus_transfer;
    use crate::heatkernel::{heat_propagate, HeatKernelParams};
    use std::f64::consts::PI;

    fn params() -> PdeParams {
        PdeParams::new(1.0, 0.25, 2.0, 0.5, 1.0, 1).unwrap()
    }

    #[test]
    fn base_modulus_closed_form_facts() {
        for alpha in [0.1, 0.25, 0.4] {
            let w = omega_base(alpha).unwrap();
            assert!((w.value(1.0) - 0.5).abs() < 1e-15);
            assert!((w.derivative(1e-12) - 1.0).abs() < 1e-6);
            for xi in [1e-4, 1e-6, 1e-8] {
                let scaled = w.second_derivative(xi) * xi.powf(alpha);
                assert!(scaled < 0.0 && scaled > -3.0, "{scaled}");
            }
            assert!(w.is_strong() && w.is_unbounded());
        }
        assert!(omega_base(0.5).is_err());
    }

    #[test]
    fn base_modulus_derivatives_match_finite_differences() {
        let w = omega_base(0.3).unwrap();
        for xi in [0.05, 0.5, 3.0, 40.0] {
            let mut errs = Vec::new();
            for h in [1e-2 * xi, 5e-3 * xi] {
                let fd1 = (w.value(xi + h) - w.value(xi - h)) / (2.0 * h);
                let fd2 = (w.derivative(xi + h) - w.derivative(xi - h)) / (2.0 * h);
                errs.push(((fd1 - w.derivative(xi)).abs(), (fd2 - w.second_derivative(xi)).abs()));
            }
            let order1 = (errs[0].0 / errs[1].0).log2();
            let order2 = (errs[0].1 / errs[1].1).log2();
            assert!(order1 >= 1.9 && order2 >= 1.9, "orders {order1} {order2} at {xi}");
        }
    }

    #[test]
    fn scaled_base_is_concave_on_wide_log_grid() {
        let w = omega_base(0.25).unwrap().scaled(37.0);
        let rep = w.check_shape(&log_grid(1e-8, 1e4, 400), 1e-10);
        assert!(rep.nondecreasing && rep.concave, "{rep:?}");
    }

    #[test]
    fn fit_b_on_zero_and_sine() {
        let g = TorusGrid::new(1, 2.0 * PI, 256).unwrap();
        let w = omega_base(0.25).unwrap();
        let b0 = fit_b(&TorusField::zeros(&g), &w).unwrap();
        assert!(w.value(b0) > 1.0);
        assert!(w.value(b0 * 2f64.powf(-1.0 / 8.0)) <= 1.0 || b0 == 1.0);

        let s = TorusField::from_fn(&g, |x| x[0].sin());
        let b = fit_b(&s, &w).unwrap();
        assert!(w.value(b) > 3.0);
        let (margin, ok) = strict_margin(&s, &w.scaled(b), &all_pairs(&g), 1e-6);
        assert!(ok && margin > 0.0);

        let g2 = TorusGrid::new(1, 4.0 * PI, 512).unwrap();
        let s2 = TorusField::from_fn(&g2, |x| x[0].sin());
        assert_eq!(fit_b(&s2, &w).unwrap(), b);
    }

    #[test]
    fn dissipation_condition_holds_below_delta0() {
        let p = params();
        let b = 150.0;
        let gc = construct_constants(b, &p).unwrap();
        let order = p.frac_order().unwrap();
        let k = transfer_constant(&order);
        let wb = omega_base(p.alpha).unwrap().scaled(b);
        for xi in log_grid(gc.delta0 * 1e-10, gc.delta0, 300) {
            assert!(dissipation_residual(&wb, b, &p, k, xi) < 0.0);
        }
        assert!(gc.c0.is_finite() && gc.c0 > 0.0);
    }

    #[test]
    fn viscosity_sweep_is_monotone() {
        // small ν makes the viscous branch of the cap active
        let b = 4.0;
        let mut prev: Option<GrowthConstants> = None;
        for j in 0..5 {
            let nu = 1e-4 * 4f64.powi(j);
            let p = PdeParams::new(nu, 0.25, 2.0, 1.0, 1.0, 1).unwrap();
            let gc = construct_constants(b, &p).unwrap();
            if let Some(q) = prev {
                assert!(gc.delta0 > q.delta0, "{gc:?} vs {q:?}");
                assert!(gc.c0 < q.c0);
            }
            prev = Some(gc);
        }
    }

    #[test]
    fn constants_degenerate_towards_half() {
        let b = 10.0;
        let lo = construct_constants(b, &PdeParams::new(1.0, 0.25, 2.0, 1.0, 1.0, 1).unwrap()).unwrap();
        let hi = construct_constants(b, &PdeParams::new(1.0, 0.49, 2.0, 1.0, 1.0, 1).unwrap()).unwrap();
        assert!(hi.c0.is_finite() && hi.c0 > lo.c0);
        assert!(hi.delta0 <= lo.delta0);
    }

    #[test]
    fn rhs_of_breakthrough_inequality_is_negative() {
        let p = params();
        let g = TorusGrid::new(1, 2.0 * PI, 64).unwrap();
        let theta = TorusField::from_fn(&g, |x| 0.1 * x[0].sin());
        let tm = assemble_time_modulus(&theta, &p).unwrap();
        let transfer = modulus_transfer(tm.omega_b(), &p.frac_order().unwrap()).unwrap();
        for t in [0.0, 1.0, 5.0] {
            for xi in log_grid(1e-6, 1e3, 200) {
                let r = breakthrough_rhs(&tm, &p, &transfer, t, xi);
                assert!(r < 0.0, "rhs {r} at t={t}, xi={xi}");
            }
        }
    }

    #[test]
    fn tail_bound_on_transfer_integral() {
        let p = params();
        let b = 20.0;
        let gc = construct_constants(b, &p).unwrap();
        let wb = omega_base(p.alpha).unwrap().scaled(b);
        let a = p.alpha;
        let bound = b.powf(2.0 * a - 1.0) / gc.delta0 + b.powf(a) / gc.delta0.powf(a);
        for xi in log_grid(gc.delta0 * 1.01, 1e3, 20) {
            let v = crate::quadrature::adaptive_gk(
                |e| wb.derivative(e) * e.powf(-2.0 * a),
                gc.delta0,
                xi,
                1e-12,
                1e-10,
            )
            .unwrap();
            assert!(v <= bound, "{v} > {bound}");
        }
    }

    #[test]
    fn time_modulus_is_monotone_in_t() {
        let tm = TimeModulus::new(omega_base(0.25).unwrap(), 3.0, GrowthConstants { delta0: 0.1, c0: 2.0 });
        for xi in [1e-3, 0.1, 10.0] {
            assert!(tm.value(1.0, xi) >= tm.value(0.5, xi));
        }
        assert!((tm.gradient_bound(0.0) - 3.0).abs() < 1e-15);
        assert!((tm.d_xi(0.7, 1e-14) - tm.gradient_bound(0.7)).abs() < 1e-6);
    }

    #[test]
    fn scan_on_zero_field_and_touching_profile() {
        let g = TorusGrid::new(1, 2.0 * PI, 256).unwrap();
        let tm = TimeModulus::new(omega_base(0.25).unwrap(), 2.0, GrowthConstants { delta0: 0.1, c0: 1.0 });
        let pairs = scan_pairs(&TorusField::zeros(&g), 1000, 3);
        let rep = breakthrough_scan(&TorusField::zeros(&g), &tm, 0.5, &pairs).unwrap();
        assert!(!rep.found && rep.worst_margin > 0.0);
        assert!(breakthrough_scan(&TorusField::zeros(&g), &tm, 0.5, &[]).is_err());

        // odd about x_c, touching Ω(t, ·) (up to a 1e-9 excess) on a window
        let t = 0.3;
        let l = g.period();
        let xc = l / 2.0;
        let w = l / 8.0;
        let phi = |s: f64| {
            if s <= w {
                tm.value(t, 2.0 * s) / 2.0
            } else {
                tm.value(t, 2.0 * w) / 2.0 * (l / 2.0 - s) / (l / 2.0 - w)
            }
        };
        let theta = TorusField::from_fn(&g, |x| {
            let s = x[0] - xc;
            (1.0 + 1e-9) * s.signum() * phi(s.abs())
        });
        let rep = breakthrough_scan(&theta, &tm, t, &all_pairs(&g)).unwrap();
        assert!(rep.found);
        let (px, py) = (g.point(rep.worst_pair.x)[0], g.point(rep.worst_pair.y)[0]);
        assert!(px.min(py) < xc && px.max(py) > xc);
        let v = theta.values();
        let recomputed = tm.value(t, rep.worst_pair.separation) - (v[rep.worst_pair.x] - v[rep.worst_pair.y]).abs();
        assert!((recomputed - rep.worst_margin).abs() <= 1e-12);
    }

    #[test]
    fn touching_identities_for_tanh_linear_and_base_profiles() {
        let tanh_mod = Modulus::new(
            "2tanh(x/2)",
            |x| {
                let s = 1.0 / (x / 2.0).cosh().powi(2);
                [2.0 * (x / 2.0).tanh(), s, -s * (x / 2.0).tanh()]
            },
            1.0,
            false,
            false,
        );
        let rep = check_touching_derivatives(&|s: f64| s.tanh(), &tanh_mod, &[0.5, 1.0, 2.0]).unwrap();
        assert!(rep.pass, "{rep:?}");

        let rep = check_touching_derivatives(&|s: f64| s, &Modulus::linear(), &[0.5, 1.0]).unwrap();
        assert!(rep.pass && rep.max_laplacian_gap_error < 1e-9);

        let alpha = 0.25;
        let base = omega_base(alpha).unwrap();
        let g = move |s: f64| s.signum() * (s.abs() / (1.0 + s.abs().powf(1.0 - alpha)));
        // ω(η) := 2g(η/2)
        let doubled = {
            let b = base.clone();
            Modulus::new(
                "2g(x/2)",
                move |x| {
                    let [w, d1, d2] = b.eval_all(x / 2.0);
                    [2.0 * w, d1, 0.5 * d2]
                },
                1.0,
                true,
                true,
            )
        };
        let rep = check_touching_derivatives(&g, &doubled, &[0.5, 1.0, 3.0]).unwrap();
        assert!(rep.pass, "{rep:?}");

        assert!(check_touching_derivatives(&|s: f64| s * s, &Modulus::linear(), &[1.0]).is_err());
    }

    #[test]
    fn strict_gradient_bound_cases() {
        let g = TorusGrid::new(1, 2.0 * PI, 1024).unwrap();
        let w = omega_base(0.25).unwrap();
        let zero = check_gradient_strict_bound(&TorusField::zeros(&g), &w);
        assert!(zero.pass && zero.margin == 1.0);

        let s = TorusField::from_fn(&g, |x| x[0].sin());
        let b = fit_b(&s, &w).unwrap();
        assert!(check_gradient_strict_bound(&s, &w.scaled(b)).pass);

        // near-extremal: odd profile s ↦ ω(2s)/2 near 0, linear back to 0 at
        // the half period, then mildly heat-smoothed
        let l = g.period();
        let win = l / 8.0;
        let phi = |s: f64| {
            if s <= win {
                w.value(2.0 * s) / 2.0
            } else {
                w.value(2.0 * win) / 2.0 * (l / 2.0 - s) / (l / 2.0 - win)
            }
        };
        let raw = TorusField::from_fn(&g, |x| {
            let s = x[0] - l / 2.0;
            s.signum() * phi(s.abs())
        });
        let h = g.spacing();
        let smooth = heat_propagate(&raw, &HeatKernelParams::new(1.0, 1).unwrap(), 4.0 * h * h).unwrap();
        let rep = check_gradient_strict_bound(&smooth, &w);
        assert!(rep.pass && rep.margin < 0.2, "{rep:?}");
    }
}
