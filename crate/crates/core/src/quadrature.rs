//! Small one-dimensional quadrature toolkit: fixed Gauss–Legendre rules,
//! adaptive Gauss–Kronrod (7/15), double-exponential (tanh-sinh) rules for
//! endpoint singularities, and Wynn's epsilon algorithm for alternating
//! panel sums.

use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, refined by Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
            * h
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + h * x, w * h))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod 7/15 quadrature on a finite interval.
/// Succeeds once the estimated error is below `max(abs_tol, rel_tol·|I|)`.
pub fn adaptive_gk(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, error: e });
    let (mut total, mut err) = (v, e);
    for _ in 0..4000 {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // recompute the sums to shed accumulated cancellation before judging
    total = heap.iter().map(|p| p.value).sum();
    err = heap.iter().map(|p| p.error).sum();
    if err <= abs_tol.max(rel_tol * total.abs()) && total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Quadrature(format!(
            "adaptive Gauss–Kronrod on [{a}, {b}] stalled at error {err:e}"
        )))
    }
}

/// Tanh-sinh quadrature on `[a, b]`. The integrand receives
/// `(x, distance to nearer endpoint)`, which lets callers evaluate
/// endpoint-singular integrands without cancellation.
pub fn tanh_sinh(
    mut f: impl FnMut(f64, f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<f64> {
    let half = 0.5 * (b - a);
    if half == 0.0 {
        return Ok(0.0);
    }
    let c = 0.5 * (a + b);
    // nodes reach within ~1e-137 of the endpoints, enough for x^{-0.9}-type singularities
    let t_max = 6.0;
    let mut h = 0.5;
    let mut sum = half * FRAC_PI_2 * f(c, half);
    let mut abs_sum = sum.abs();
    let eval = |t: f64, f: &mut dyn FnMut(f64, f64) -> f64| -> (f64, f64) {
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        // 1 - tanh(u) computed without cancellation
        let delta = (-u).exp() / cu;
        let dist = half * delta;
        if dist == 0.0 || w == 0.0 || !w.is_finite() {
            return (0.0, 0.0);
        }
        let (l, r) = (f(a + dist, dist), f(b - dist, dist));
        let v = w * (l + r);
        // nodes this close to an endpoint carry negligible weight; an
        // integrand that under/overflows there (0·∞) is dropped
        if !v.is_finite() && dist < 1e-100 * half {
            return (0.0, 0.0);
        }
        (v, w * (l.abs() + r.abs()))
    };
    let mut k = 1;
    while k as f64 * h <= t_max {
        let (v, av) = eval(k as f64 * h, &mut f);
        sum += half * v;
        abs_sum += half * av;
        k += 1;
    }
    let mut estimate = sum * h;
    for _level in 0..10 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let (v, av) = eval(k as f64 * h, &mut f);
            sum += half * v;
            abs_sum += half * av;
            k += 2;
        }
        let next = sum * h;
        let diff = (next - estimate).abs();
        estimate = next;
        if !estimate.is_finite() {
            break;
        }
        let floor = 64.0 * f64::EPSILON * abs_sum * h;
        if diff <= (rel_tol * estimate.abs()).max(floor) || diff < 1e-300 {
            return Ok(estimate);
        }
    }
    Err(Error::Quadrature(format!(
        "tanh-sinh on [{a}, {b}] did not reach relative tolerance {rel_tol:e}"
    )))
}

/// `∫_a^∞ f` via the map `x = a + s/(1-s)` and tanh-sinh on `[0, 1]`.
pub fn semi_infinite(mut f: impl FnMut(f64) -> f64, a: f64, rel_tol: f64) -> Result<f64> {
    tanh_sinh(
        |s, dist| {
            // s close to 1 ⇒ 1-s = dist
            let one_minus = if s > 0.5 { dist } else { 1.0 - s };
            let x = a + s / one_minus;
            let jac = 1.0 / (one_minus * one_minus);
            let v = f(x) * jac;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        rel_tol,
    )
}

/// Wynn's epsilon acceleration of a sequence of partial sums; returns the
/// best estimate of the limit.
pub fn wynn_epsilon(partial_sums: &[f64]) -> f64 {
    let n = partial_sums.len();
    if n < 3 {
        return *partial_sums.last().unwrap_or(&0.0);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial_sums.to_vec();
    let mut best = cur[n - 1];
    let mut best_err = f64::INFINITY;
    let mut col = 0;
    while cur.len() >= 2 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            let base = if col == 0 { 0.0 } else { prev[i + 1] };
            next.push(if d == 0.0 { f64::INFINITY } else { base + 1.0 / d });
        }
        col += 1;
        prev = cur;
        cur = next;
        if col % 2 == 0 && cur.len() >= 2 {
            let m = cur.len();
            let err = (cur[m - 1] - cur[m - 2]).abs();
            if cur[m - 1].is_finite() && err < best_err {
                best_err = err;
                best = cur[m - 1];
            }
        }
        if cur.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(5);
        let v = gl.integrate(0.0, 2.0, |x| x.powi(9));
        assert_relative_eq!(v, 2f64.powi(10) / 10.0, max_relative = 1e-13);
        let w: f64 = gl.weights().iter().sum();
        assert_relative_eq!(w, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn gauss_legendre_even_and_odd_counts() {
        for n in [1, 2, 7, 20, 64] {
            let gl = GaussLegendre::new(n);
            let v = gl.integrate(0.0, std::f64::consts::PI, f64::sin);
            if n >= 7 {
                assert_relative_eq!(v, 2.0, max_relative = 1e-10);
            }
            assert!(gl.nodes().windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn adaptive_gk_handles_sqrt_singularity() {
        let v = adaptive_gk(f64::sqrt, 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_blowup() {
        let v = tanh_sinh(|_, _| 0.0, 0.0, 1.0, 1e-12).unwrap();
        assert_eq!(v, 0.0);
        // ∫_0^1 x^{-1/2} = 2, evaluated through the distance argument
        let v = tanh_sinh(|x, d| if x < 0.5 { d.powf(-0.5) } else { x.powf(-0.5) }, 0.0, 1.0, 1e-12)
            .unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn semi_infinite_power_tail() {
        let v = semi_infinite(|x| (1.0 + x * x).powf(-1.25), 0.0, 1e-12).unwrap();
        // ∫_0^∞ (1+x²)^{-5/4} = √π Γ(3/4) / (2 Γ(5/4))
        let exact = std::f64::consts::PI.sqrt() * 1.225_416_702_465_177_6
            / (2.0 * 0.906_402_477_055_477);
        assert_relative_eq!(v, exact, max_relative = 1e-10);
    }

    #[test]
    fn wynn_accelerates_alternating_series() {
        // Σ (-1)^k/(k+1) = ln 2
        let mut s = 0.0;
        let sums: Vec<f64> = (0..20)
            .map(|k| {
                s += if k % 2 == 0 { 1.0 } else { -1.0 } / (k as f64 + 1.0);
                s
            })
            .collect();
        assert!((wynn_epsilon(&sums) - 2f64.ln()).abs() < 1e-12);
    }
}
