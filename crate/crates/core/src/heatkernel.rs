//! Heat kernel `Ψ(s, y) = (4πνs)^{−d/2} exp(−|y|²/4νs)`: the periodic
//! semigroup, the Duhamel step of the mild formulation, numerical checks of
//! the kernel's integral identities, and the explicit Gronwall-type bound.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{check_range, Error, Result};
use crate::fields::TorusField;
use crate::fraclap::sphere_area;
use crate::quadrature::{adaptive_gk, semi_infinite, tanh_sinh, GaussLegendre};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatKernelParams {
    pub nu: f64,
    pub dim: usize,
}

impl HeatKernelParams {
    pub fn new(nu: f64, dim: usize) -> Result<Self> {
        check_range("nu", nu, nu > 0.0, "(0, inf)")?;
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        Ok(Self { nu, dim })
    }

    /// `Ψ(s, y)` as a function of `r = |y|`.
    pub fn kernel(&self, s: f64, r: f64) -> f64 {
        let v = 4.0 * self.nu * s;
        (PI * v).powf(-(self.dim as f64) / 2.0) * (-r * r / v).exp()
    }
}

/// Spectral heat semigroup: multiplies mode `k` by `exp(−νs|k|²)`.
pub fn heat_propagate(field: &TorusField, params: &HeatKernelParams, s: f64) -> Result<TorusField> {
    check_range("s", s, s >= 0.0, "[0, inf)")?;
    if field.grid().dim() != params.dim {
        return Err(Error::GridMismatch("heat kernel dimension differs from grid".into()));
    }
    let nu = params.nu;
    Ok(field.apply_radial_multiplier(|k| (-nu * s * k * k).exp()))
}

/// Whole-space convolution `∫Ψ(s, x − y) θ(y) dy` of the trigonometric
/// interpolant, by composite Gauss–Legendre over `|x − y|_∞ ≤ 12√(2νs)`.
/// Used to confirm that the spectral semigroup is the periodized kernel.
pub fn whole_space_convolution(field: &TorusField, params: &HeatKernelParams, s: f64, x: &[f64]) -> Result<f64> {
    check_range("s", s, s > 0.0, "(0, inf)")?;
    let d = field.grid().dim();
    if d != params.dim {
        return Err(Error::GridMismatch("heat kernel dimension differs from grid".into()));
    }
    let reach = 12.0 * (2.0 * params.nu * s).sqrt();
    let panels = 24;
    let gl = GaussLegendre::new(12);
    let mut nodes = Vec::with_capacity(panels * gl.len());
    for j in 0..panels {
        let a = -reach + 2.0 * reach * j as f64 / panels as f64;
        let b = a + 2.0 * reach / panels as f64;
        nodes.extend(gl.mapped(a, b));
    }
    let mut acc = 0.0;
    if d == 1 {
        for &(u, w) in &nodes {
            acc += w * params.kernel(s, u.abs()) * field.interpolate(&[x[0] - u]);
        }
    } else {
        for &(u, wu) in &nodes {
            for &(v, wv) in &nodes {
                let r = (u * u + v * v).sqrt();
                acc += wu * wv * params.kernel(s, r) * field.interpolate(&[x[0] - u, x[1] - v]);
            }
        }
    }
    Ok(acc)
}

/// Mild-formulation step: `e^{(t−t0)νΔ} state + ∫_{t0}^t e^{(t−s)νΔ} F(s) ds`
/// with the time integral done by the trapezoidal rule on the history nodes.
pub fn duhamel_step(
    state: &TorusField,
    forcing_history: &[(f64, TorusField)],
    params: &HeatKernelParams,
    t: f64,
    t0: f64,
) -> Result<TorusField> {
    if t.is_nan() || t0.is_nan() || t <= t0 {
        return Err(Error::InvalidInput(format!("duhamel_step needs t > t0 (t = {t}, t0 = {t0})")));
    }
    let n = forcing_history.len();
    if n < 2 {
        return Err(Error::InvalidInput("forcing history needs at least two samples".into()));
    }
    let span = t - t0;
    let dt = (forcing_history[n - 1].0 - forcing_history[0].0) / (n - 1) as f64;
    let tol = 1e-9 * span;
    if (forcing_history[0].0 - t0).abs() > tol || (forcing_history[n - 1].0 - t).abs() > tol {
        return Err(Error::InvalidInput("forcing history must start at t0 and end at t".into()));
    }
    for (i, (s, _)) in forcing_history.iter().enumerate() {
        if (s - (t0 + i as f64 * dt)).abs() > tol {
            return Err(Error::InvalidInput("forcing history must be uniformly spaced".into()));
        }
    }
    let grid = state.grid();
    if state.grid().dim() != params.dim {
        return Err(Error::GridMismatch("heat kernel dimension differs from grid".into()));
    }
    let k2: Vec<f64> = (0..grid.len()).map(|i| grid.wavenumber_norm(i).powi(2)).collect();
    let nu = params.nu;
    let mut acc: Vec<Complex64> = state
        .spectrum()
        .iter()
        .zip(&k2)
        .map(|(c, k)| c * (-nu * span * k).exp())
        .collect();
    for (i, (s, f)) in forcing_history.iter().enumerate() {
        if f.grid() != grid {
            return Err(Error::GridMismatch("forcing field on a different grid".into()));
        }
        let w = if i == 0 || i == n - 1 { 0.5 * dt } else { dt };
        let lag = t - s;
        for ((a, c), k) in acc.iter_mut().zip(f.spectrum()).zip(&k2) {
            *a += c * (w * (-nu * lag * k).exp());
        }
    }
    Ok(TorusField::from_spectrum(grid, acc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtMomentFit {
    pub gamma: f64,
    pub fitted_exponent: f64,
    pub expected_exponent: f64,
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelIdentityReport {
    /// `max_s |∫Ψ − 1|`.
    pub mass_max_error: f64,
    /// `√(νs)·∫|∇Ψ|` per `s`.
    pub gradient_constants: Vec<f64>,
    /// Least-squares log-log slope of `∫|∇Ψ|` against `s`.
    pub gradient_exponent: f64,
    pub dt_moments: Vec<DtMomentFit>,
    /// Largest `νs/|x−z| · ∫|∇Ψ(s,x−y) − ∇Ψ(s,z−y)|dy` over the samples.
    pub lipschitz_constant: f64,
    /// Same with the Hölder-½ normalization `(νs)^{3/4}/|x−z|^{1/2}`.
    pub holder_constant: f64,
}

fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

/// Radial integral `|S^{d−1}|∫₀^∞ r^{d−1} g(r) dr`.
fn radial_integral(dim: usize, g: impl Fn(f64) -> f64, split: Option<f64>) -> Result<f64> {
    let d = dim as f64;
    let integrand = |r: f64| r.powf(d - 1.0) * g(r);
    let total = match split {
        Some(r0) => {
            tanh_sinh(|r, _| integrand(r), 0.0, r0, 1e-13)? + semi_infinite(&integrand, r0, 1e-13)?
        }
        None => semi_infinite(&integrand, 0.0, 1e-13)?,
    };
    Ok(sphere_area(dim) * total)
}

fn grad_difference_l1(params: &HeatKernelParams, s: f64, delta: f64) -> Result<f64> {
    let v = 4.0 * params.nu * s;
    let reach = delta + 14.0 * v.sqrt();
    // ∇Ψ(y) = −2y/v Ψ(y); shift along e₁ by δ.
    let grad = |y: [f64; 2]| -> [f64; 2] {
        let r = (y[0] * y[0] + y[1] * y[1]).sqrt();
        let k = params.kernel(s, r) * (-2.0 / v);
        [k * y[0], k * y[1]]
    };
    if params.dim == 1 {
        adaptive_gk(
            |y| (grad([y, 0.0])[0] - grad([y + delta, 0.0])[0]).abs(),
            -reach,
            reach,
            1e-14,
            1e-9,
        )
        .map_err(|e| Error::Quadrature(format!("Lipschitz kernel bound: {e}")))
    } else if params.dim == 2 {
        let mut failure = None;
        let outer = adaptive_gk(
            |y2| {
                match adaptive_gk(
                    |y1| {
                        let a = grad([y1, y2]);
                        let b = grad([y1 + delta, y2]);
                        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
                    },
                    -reach,
                    reach,
                    1e-14,
                    1e-9,
                ) {
                    Ok(v) => v,
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            },
            -reach,
            reach,
            1e-13,
            1e-8,
        )?;
        if let Some(e) = failure {
            return Err(Error::Quadrature(format!("Lipschitz kernel bound: {e}")));
        }
        Ok(outer)
    } else {
        Err(Error::InvalidInput("kernel difference check supports d = 1, 2".into()))
    }
}

/// Quadrature checks of `∫Ψ = 1`, `∫|∇Ψ| = C_d/√(νs)`,
/// `∫|y|^γ|∂_sΨ| ≤ C_d ν^{γ/2}s^{γ/2−1}` (for `γ ∈ {1/2, 1}`) and the
/// Lipschitz/Hölder kernel-difference bounds, with fitted constants.
pub fn verify_kernel_identities(params: &HeatKernelParams, s_values: &[f64]) -> Result<KernelIdentityReport> {
    if s_values.is_empty() {
        return Err(Error::InvalidInput("s_values must be nonempty".into()));
    }
    let d = params.dim as f64;
    let nu = params.nu;
    let mut mass_max_error: f64 = 0.0;
    let mut grad_l1 = Vec::new();
    for &s in s_values {
        check_range("s", s, s > 0.0, "(0, inf)")?;
        let scale = (4.0 * nu * s).sqrt();
        let mass = radial_integral(params.dim, |r| params.kernel(s, r), Some(scale))
            .map_err(|e| Error::Quadrature(format!("mass identity: {e}")))?;
        mass_max_error = mass_max_error.max((mass - 1.0).abs());
        let g = radial_integral(params.dim, |r| params.kernel(s, r) * r / (2.0 * nu * s), Some(scale))
            .map_err(|e| Error::Quadrature(format!("gradient identity: {e}")))?;
        grad_l1.push(g);
    }
    let gradient_constants = s_values
        .iter()
        .zip(&grad_l1)
        .map(|(s, g)| g * (nu * s).sqrt())
        .collect();
    let gradient_exponent = if s_values.len() > 1 { loglog_slope(s_values, &grad_l1) } else { -0.5 };

    let mut dt_moments = Vec::new();
    for gamma in [0.5, 1.0] {
        let mut vals = Vec::new();
        for &s in s_values {
            // ∂_sΨ = Ψ (r²/(4νs²) − d/(2s)); sign change at r² = 2dνs
            let r0 = (2.0 * d * nu * s).sqrt();
            let v = radial_integral(
                params.dim,
                |r| r.powf(gamma) * (params.kernel(s, r) * (r * r / (4.0 * nu * s * s) - d / (2.0 * s))).abs(),
                Some(r0),
            )
            .map_err(|e| Error::Quadrature(format!("time-derivative moment: {e}")))?;
            vals.push(v);
        }
        let expected = gamma / 2.0 - 1.0;
        let fitted = if s_values.len() > 1 { loglog_slope(s_values, &vals) } else { expected };
        let constant = s_values
            .iter()
            .zip(&vals)
            .map(|(s, v)| v / (nu.powf(gamma / 2.0) * s.powf(expected)))
            .fold(0.0, f64::max);
        dt_moments.push(DtMomentFit {
            gamma,
            fitted_exponent: fitted,
            expected_exponent: expected,
            constant,
        });
    }

    let mut lipschitz_constant: f64 = 0.0;
    let mut holder_constant: f64 = 0.0;
    for &s in s_values {
        let scale = (nu * s).sqrt();
        for frac in [0.1, 0.5, 1.0, 3.0] {
            let delta = frac * scale;
            let diff = grad_difference_l1(params, s, delta)?;
            lipschitz_constant = lipschitz_constant.max(diff * nu * s / delta);
            holder_constant = holder_constant.max(diff * (nu * s).powf(0.75) / delta.sqrt());
        }
    }
    Ok(KernelIdentityReport {
        mass_max_error,
        gradient_constants,
        gradient_exponent,
        dt_moments,
        lipschitz_constant,
        holder_constant,
    })
}

/// Data of the Gronwall-type lemma: `g(t) ≤ ∫_{T₁}^t f(t−s)g(s)ds + C₀`
/// implies `g(t) ≤ C₀[2(∫₀^{t−T₁}|f|^r)^{1/r}(∫_{T₁}^t e^{h(t)−h(s)}ds)^{1/q} + 1]`
/// with `h(t) = 2^q∫_{T₁}^t(∫₀^{s−T₁}|f|^r)^{q/r}ds`.
#[derive(Debug, Clone)]
pub struct GronwallInstance {
    q: f64,
    r: f64,
    c0: f64,
    t1: f64,
    t2: f64,
    times: Vec<f64>,
    /// `∫₀^{t_i − T₁} |f|^r`.
    f_r: Vec<f64>,
    h: Vec<f64>,
}

impl GronwallInstance {
    /// `f` may be integrably singular at `σ = 0`; the cell integrals of
    /// `|f|^r` use tanh-sinh quadrature.
    pub fn new(q: f64, c0: f64, t1: f64, t2: f64, steps: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        check_range("q", q, q > 1.0, "(1, inf)")?;
        check_range("C0", c0, c0 >= 0.0, "[0, inf)")?;
        if t1.is_nan() || t2.is_nan() || t2 <= t1 || steps < 1 {
            return Err(Error::InvalidInput("Gronwall instance needs T2 > T1 and steps >= 1".into()));
        }
        let r = q / (q - 1.0);
        let dt = (t2 - t1) / steps as f64;
        let times: Vec<f64> = (0..=steps).map(|i| t1 + i as f64 * dt).collect();
        let mut f_r = vec![0.0; steps + 1];
        for i in 0..steps {
            let (a, b) = (i as f64 * dt, (i + 1) as f64 * dt);
            let cell = tanh_sinh(
                |x, dist| {
                    let sigma = if x < a + 0.5 * dt { a + dist } else { x };
                    let v = f(sigma).abs().powf(r);
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                },
                a,
                b,
                1e-10,
            )?;
            if cell < 0.0 {
                return Err(Error::InvalidInput("f must be nonnegative".into()));
            }
            f_r[i + 1] = f_r[i] + cell;
        }
        Ok(Self::assemble(q, r, c0, t1, t2, times, f_r))
    }

    /// Uniformly sampled `f` on `[0, T₂−T₁]`; cell integrals by the
    /// trapezoidal rule.
    pub fn from_samples(q: f64, c0: f64, t1: f64, t2: f64, f_samples: &[f64]) -> Result<Self> {
        check_range("q", q, q > 1.0, "(1, inf)")?;
        check_range("C0", c0, c0 >= 0.0, "[0, inf)")?;
        if f_samples.len() < 2 || t1.is_nan() || t2.is_nan() || t2 <= t1 {
            return Err(Error::InvalidInput("need T2 > T1 and at least two samples".into()));
        }
        if f_samples.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidInput("f samples must be finite and nonnegative".into()));
        }
        let r = q / (q - 1.0);
        let steps = f_samples.len() - 1;
        let dt = (t2 - t1) / steps as f64;
        let times: Vec<f64> = (0..=steps).map(|i| t1 + i as f64 * dt).collect();
        let mut f_r = vec![0.0; steps + 1];
        for i in 0..steps {
            f_r[i + 1] = f_r[i] + 0.5 * dt * (f_samples[i].powf(r) + f_samples[i + 1].powf(r));
        }
        Ok(Self::assemble(q, r, c0, t1, t2, times, f_r))
    }

    fn assemble(q: f64, r: f64, c0: f64, t1: f64, t2: f64, times: Vec<f64>, f_r: Vec<f64>) -> Self {
        let mut h = vec![0.0; times.len()];
        for i in 1..times.len() {
            let dt = times[i] - times[i - 1];
            let (a, b) = (f_r[i - 1].powf(q / r), f_r[i].powf(q / r));
            h[i] = h[i - 1] + 2f64.powf(q) * 0.5 * dt * (a + b);
        }
        Self { q, r, c0, t1, t2, times, f_r, h }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn with_c0(&self, c0: f64) -> Self {
        Self { c0, ..self.clone() }
    }

    /// `ln` of the bound at node `i`. `h` is nondecreasing from 0, so the
    /// prefix sums of `e^{−h}` never overflow even when the bound does.
    fn log_bound_at_node(&self, i: usize) -> f64 {
        let log_c0 = self.c0.ln();
        if i == 0 || self.f_r[i] == 0.0 {
            return log_c0;
        }
        let tail: f64 = (0..i)
            .map(|j| 0.5 * (self.times[j + 1] - self.times[j]) * ((-self.h[j]).exp() + (-self.h[j + 1]).exp()))
            .sum();
        let x = 2f64.ln() + self.f_r[i].ln() / self.r + (self.h[i] + tail.ln()) / self.q;
        // ln(1 + e^x) without overflow
        let softplus = if x > 30.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
        log_c0 + softplus
    }

    /// Natural logarithm of the bound at `t ∈ [T₁, T₂]`, linear in `t`
    /// between nodes. Finite whenever `C₀ > 0`, even where the bound itself
    /// exceeds the floating-point range.
    pub fn log_bound(&self, t: f64) -> Result<f64> {
        if !(t >= self.t1 - 1e-12 && t <= self.t2 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "t = {t} outside the sampled range [{}, {}]",
                self.t1, self.t2
            )));
        }
        let n = self.times.len() - 1;
        let pos = ((t - self.t1) / (self.t2 - self.t1) * n as f64).clamp(0.0, n as f64);
        let i = pos.floor() as usize;
        if i >= n {
            return Ok(self.log_bound_at_node(n));
        }
        let frac = pos - i as f64;
        let (a, b) = (self.log_bound_at_node(i), self.log_bound_at_node(i + 1));
        if frac == 0.0 {
            return Ok(a);
        }
        Ok(a + frac * (b - a))
    }

    /// The lemma's bound at `t`; `+∞` once it leaves the floating-point range.
    pub fn bound(&self, t: f64) -> Result<f64> {
        Ok(self.log_bound(t)?.exp())
    }
}

/// Explicit bound of the lemma at `t`.
pub fn gronwall_bound(instance: &GronwallInstance, t: f64) -> Result<f64> {
    instance.bound(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{linf_norm, TorusGrid};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &TorusGrid, seed: u64) -> TorusField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<(f64, f64)> = (1..=5).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        TorusField::from_fn(grid, move |x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let k = (k + 1) as f64;
                    a * (k * x[0]).cos() + b * (k * x[0]).sin()
                })
                .sum()
        })
    }

    #[test]
    fn eigenfunction_and_small_time_limit() {
        let g = TorusGrid::new(1, 2.0 * PI, 64).unwrap();
        let p = HeatKernelParams::new(1.0, 1).unwrap();
        let s = TorusField::from_fn(&g, |x| x[0].sin());
        let out = heat_propagate(&s, &p, 1.0).unwrap();
        assert!(linf_norm(&out.sub(&s.scale((-1.0f64).exp()))) < 1e-10);
        let f = random_field(&g, 1);
        let mut prev = f64::INFINITY;
        for e in [1e-2, 1e-4, 1e-6, 1e-8] {
            let d = linf_norm(&heat_propagate(&f, &p, e).unwrap().sub(&f));
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-6);
        assert!(heat_propagate(&f, &p, -1.0).is_err());
    }

    #[test]
    fn semigroup_mass_and_maximum_principle() {
        let g = TorusGrid::new(1, 2.0 * PI, 64).unwrap();
        let p = HeatKernelParams::new(0.7, 1).unwrap();
        for seed in 0..10 {
            let f = random_field(&g, seed);
            let a = heat_propagate(&heat_propagate(&f, &p, 0.1).unwrap(), &p, 0.3).unwrap();
            let b = heat_propagate(&f, &p, 0.4).unwrap();
            assert!(linf_norm(&a.sub(&b)) <= 1e-12 * linf_norm(&f).max(1.0));
            assert!((b.mean() - f.mean()).abs() < 1e-13);
            assert!(linf_norm(&b) <= linf_norm(&f) + 1e-12);
            assert!(b.min() >= f.min() - 1e-10 && b.max() <= f.max() + 1e-10);
        }
    }

    #[test]
    fn spectral_semigroup_is_the_periodized_kernel() {
        let p = HeatKernelParams::new(1.0, 1).unwrap();
        let g = TorusGrid::new(1, 2.0 * PI, 32).unwrap();
        let f = random_field(&g, 4);
        let s = 0.05;
        let spec = heat_propagate(&f, &p, s).unwrap();
        for idx in [0, 5, 17] {
            let q = whole_space_convolution(&f, &p, s, &[g.point(idx)[0]]).unwrap();
            assert!((q - spec.values()[idx]).abs() < 1e-10, "{q} vs {}", spec.values()[idx]);
        }
        let p2 = HeatKernelParams::new(0.5, 2).unwrap();
        let g2 = TorusGrid::new(2, 2.0 * PI, 8).unwrap();
        let f2 = TorusField::from_fn(&g2, |x| (x[0] + 2.0 * x[1]).sin() + (3.0 * x[1]).cos());
        let spec2 = heat_propagate(&f2, &p2, 0.1).unwrap();
        let q = whole_space_convolution(&f2, &p2, 0.1, &g2.point(11)).unwrap();
        assert!((q - spec2.values()[11]).abs() < 1e-9);
    }

    #[test]
    fn duhamel_simple_cases() {
        let g = TorusGrid::new(1, 2.0 * PI, 32).unwrap();
        let p = HeatKernelParams::new(1.0, 1).unwrap();
        let s = TorusField::from_fn(&g, |x| x[0].sin());
        let zeros: Vec<(f64, TorusField)> = (0..5).map(|i| (i as f64 * 0.25, TorusField::zeros(&g))).collect();
        let out = duhamel_step(&s, &zeros, &p, 1.0, 0.0).unwrap();
        assert!(linf_norm(&out.sub(&heat_propagate(&s, &p, 1.0).unwrap())) < 1e-14);

        let c = TorusField::constant(&g, 0.3);
        let consts: Vec<(f64, TorusField)> = (0..5).map(|i| (i as f64 * 0.25, c.clone())).collect();
        let out = duhamel_step(&c, &consts, &p, 1.0, 0.0).unwrap();
        assert!(linf_norm(&out.sub(&TorusField::constant(&g, 0.6))) < 1e-14);
        assert!(duhamel_step(&s, &zeros, &p, 0.0, 0.0).is_err());
        assert!(duhamel_step(&s, &zeros[..1], &p, 1.0, 0.0).is_err());
    }

    #[test]
    fn duhamel_manufactured_solution_is_second_order() {
        // θ*(t,x) = cos(2t) sin x with ν = 1, forcing ∂ₜθ* − Δθ*
        let g = TorusGrid::new(1, 2.0 * PI, 16).unwrap();
        let p = HeatKernelParams::new(1.0, 1).unwrap();
        let exact = |t: f64| TorusField::from_fn(&g, move |x| (2.0 * t).cos() * x[0].sin());
        let forcing = |t: f64| {
            TorusField::from_fn(&g, move |x| (-2.0 * (2.0 * t).sin() + (2.0 * t).cos()) * x[0].sin())
        };
        let mut errs = Vec::new();
        for n in [8, 16, 32] {
            let hist: Vec<(f64, TorusField)> = (0..=n).map(|i| {
                let s = i as f64 / n as f64;
                (s, forcing(s))
            }).collect();
            let out = duhamel_step(&exact(0.0), &hist, &p, 1.0, 0.0).unwrap();
            errs.push(linf_norm(&out.sub(&exact(1.0))));
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn kernel_identities_in_one_dimension() {
        let p = HeatKernelParams::new(1.0, 1).unwrap();
        let rep = verify_kernel_identities(&p, &[0.25, 0.5, 1.0, 2.0]).unwrap();
        assert!(rep.mass_max_error < 1e-8);
        for c in &rep.gradient_constants {
            assert_relative_eq!(*c, 1.0 / PI.sqrt(), max_relative = 1e-4);
        }
        assert!((rep.gradient_exponent + 0.5).abs() < 0.005);
        for m in &rep.dt_moments {
            assert!((m.fitted_exponent - m.expected_exponent).abs() < 0.01 * m.expected_exponent.abs());
        }
        assert!(rep.lipschitz_constant.is_finite() && rep.holder_constant.is_finite());
    }

    #[test]
    fn kernel_gradient_scaling_under_doubling() {
        let p = HeatKernelParams::new(0.3, 2).unwrap();
        let rep = verify_kernel_identities(&p, &[0.5, 1.0]).unwrap();
        let g = &rep.gradient_constants;
        // equal constants ⇔ ∫|∇Ψ| scales by 1/√2 when s doubles
        assert_relative_eq!(g[0], g[1], max_relative = 1e-6);
        assert!(rep.mass_max_error < 1e-8);
    }

    #[test]
    fn gronwall_zero_kernel_and_monotonicity() {
        let inst = GronwallInstance::new(3.0, 2.0, 0.0, 1.0, 50, |_| 0.0).unwrap();
        for t in [0.0, 0.3, 1.0] {
            assert_relative_eq!(inst.bound(t).unwrap(), 2.0, max_relative = 1e-14);
        }
        let (a, nu) = (1.5, 0.5);
        let inst = GronwallInstance::new(3.0, 1.0, 0.0, 2.0, 200, move |s| a * ((nu * s).powf(-0.5) + 1.0)).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=40 {
            let b = inst.log_bound(i as f64 * 0.05).unwrap();
            assert!(b.is_finite() && b >= prev);
            prev = b;
        }
        let bigger = inst.with_c0(2.0);
        assert!(bigger.bound(1.0).unwrap() >= inst.bound(1.0).unwrap());
        assert!(inst.bound(2.5).is_err());
    }

    #[test]
    fn gronwall_bound_dominates_premise_saturating_g() {
        let (a, nu, c0, t2, n) = (0.8, 1.0, 0.5, 1.0, 200);
        // exact primitive of f(σ) = A(1 + (νσ)^{-1/2})
        let prim = |s: f64| a * (s + 2.0 * (s / nu).sqrt());
        let dt = t2 / n as f64;
        let mut gvals = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let ti = i as f64 * dt;
            let mut acc = c0;
            for (j, gj) in gvals.iter().enumerate() {
                let (sa, sb) = (j as f64 * dt, (j + 1) as f64 * dt);
                acc += gj * (prim(ti - sa) - prim(ti - sb));
            }
            gvals.push(acc);
        }
        let inst = GronwallInstance::new(3.0, c0, 0.0, t2, n, move |s| a * ((nu * s).powf(-0.5) + 1.0)).unwrap();
        for (i, g) in gvals.iter().enumerate() {
            let b = inst.bound(i as f64 * dt).unwrap();
            assert!(*g <= b, "g = {g} > bound = {b} at node {i}");
        }
    }
}
