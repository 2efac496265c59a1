//! Periodic grids, sampled fields and the spectral plumbing shared by every
//! other module.
//!
//! A [`TorusField`] stores its physical samples and lazily computes the
//! normalized Fourier coefficients `c_k` such that
//! `θ(x) = Σ_k c_k exp(i k·x)`, with wavenumbers `2π/L · {-N/2, …, N/2-1}`
//! per axis. Fields are immutable once built; every operation returns a new
//! field.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

struct GridTables {
    /// Wave vector per flat index (second entry is zero in 1D).
    kvec: Vec<[f64; 2]>,
    /// Integer mode numbers per flat index, in `-N/2..N/2`.
    modes: Vec<[i64; 2]>,
    /// Index of the mode `−m` for each stored mode `m`.
    conj: Vec<usize>,
    plans: Plans,
}

/// Uniform collocation grid on the d-torus `[0, L)^d`, `d ∈ {1, 2}`.
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    period: f64,
    n: usize,
    tables: Arc<GridTables>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("period", &self.period)
            .field("n", &self.n)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.period == other.period
    }
}

impl TorusGrid {
    pub fn new(dim: usize, period: f64, points_per_axis: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        let n = points_per_axis;
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        let mut planner = FftPlanner::<f64>::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        let base = 2.0 * PI / period;
        let mode = |i: usize| -> i64 {
            if i < n / 2 {
                i as i64
            } else {
                i as i64 - n as i64
            }
        };
        let total = n.pow(dim as u32);
        let mut kvec = Vec::with_capacity(total);
        let mut modes = Vec::with_capacity(total);
        for idx in 0..total {
            let m = if dim == 1 {
                [mode(idx), 0]
            } else {
                [mode(idx / n), mode(idx % n)]
            };
            modes.push(m);
            kvec.push([base * m[0] as f64, base * m[1] as f64]);
        }
        let wrap = |m: i64| (-m).rem_euclid(n as i64) as usize;
        let conj = modes
            .iter()
            .map(|m| if dim == 1 { wrap(m[0]) } else { wrap(m[0]) * n + wrap(m[1]) })
            .collect();
        Ok(Self {
            dim,
            period,
            n,
            tables: Arc::new(GridTables { kvec, modes, conj, plans }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Total number of samples, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest geodesic separation on the torus, `(√d/2)·L`.
    pub fn max_separation(&self) -> f64 {
        (self.dim as f64).sqrt() * 0.5 * self.period
    }

    /// Wave vector of the mode stored at `idx` (second component zero in 1D).
    pub fn wavevector(&self, idx: usize) -> [f64; 2] {
        self.tables.kvec[idx]
    }

    /// Integer mode numbers of the coefficient stored at `idx`.
    pub fn mode(&self, idx: usize) -> [i64; 2] {
        self.tables.modes[idx]
    }

    pub fn wavenumber_norm(&self, idx: usize) -> f64 {
        let k = self.tables.kvec[idx];
        (k[0] * k[0] + k[1] * k[1]).sqrt()
    }

    /// Largest resolved wavenumber magnitude per axis, `π N / L`.
    pub fn max_wavenumber(&self) -> f64 {
        PI * self.n as f64 / self.period
    }

    /// Axis indices of a flat sample index.
    pub fn cell(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    pub fn flat(&self, cell: [usize; 2]) -> usize {
        if self.dim == 1 {
            cell[0] % self.n
        } else {
            (cell[0] % self.n) * self.n + cell[1] % self.n
        }
    }

    /// Physical coordinates of a sample (second entry zero in 1D).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let c = self.cell(idx);
        let h = self.spacing();
        [c[0] as f64 * h, c[1] as f64 * h]
    }

    /// Minimum-image offset, in cells, from sample `a` to sample `b`.
    pub fn min_image_offset(&self, a: usize, b: usize) -> [i64; 2] {
        let n = self.n as i64;
        let wrap = |d: i64| -> i64 {
            let d = d.rem_euclid(n);
            if d > n / 2 {
                d - n
            } else {
                d
            }
        };
        let (ca, cb) = (self.cell(a), self.cell(b));
        [
            wrap(cb[0] as i64 - ca[0] as i64),
            if self.dim == 2 {
                wrap(cb[1] as i64 - ca[1] as i64)
            } else {
                0
            },
        ]
    }

    /// Geodesic distance between two samples (per-axis minimum image).
    pub fn torus_distance(&self, a: usize, b: usize) -> f64 {
        let m = self.min_image_offset(a, b);
        self.spacing() * ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt()
    }

    /// Sample reached from `idx` by moving `offset` cells (periodic wrap).
    pub fn shift_index(&self, idx: usize, offset: [i64; 2]) -> usize {
        let n = self.n as i64;
        let c = self.cell(idx);
        let i = (c[0] as i64 + offset[0]).rem_euclid(n) as usize;
        let j = (c[1] as i64 + offset[1]).rem_euclid(n) as usize;
        self.flat([i, j])
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.tables.plans.forward);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
    }

    fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.tables.plans.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        // rustfft processes consecutive chunks of length n: that covers the
        // contiguous axis; the strided axis goes through a transpose.
        plan.process(data);
        if self.dim == 2 {
            transpose_square(data, self.n);
            plan.process(data);
            transpose_square(data, self.n);
        }
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Real scalar field sampled on a [`TorusGrid`].
#[derive(Clone)]
pub struct TorusField {
    grid: TorusGrid,
    values: Vec<f64>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for TorusField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusField")
            .field("grid", &self.grid)
            .field("len", &self.values.len())
            .finish()
    }
}

impl TorusField {
    pub fn new(grid: &TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {bad}")));
        }
        Ok(Self::from_values_unchecked(grid, values))
    }

    pub(crate) fn from_values_unchecked(grid: &TorusGrid, values: Vec<f64>) -> Self {
        Self {
            grid: grid.clone(),
            values,
            spectral: OnceLock::new(),
        }
    }

    /// Samples `f` at every grid point; `f` receives `d` coordinates.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len())
            .map(|idx| {
                let p = grid.point(idx);
                f(&p[..d])
            })
            .collect();
        Self::from_values_unchecked(grid, values)
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &TorusGrid, c: f64) -> Self {
        Self::from_values_unchecked(grid, vec![c; grid.len()])
    }

    /// Builds a field from normalized Fourier coefficients; the imaginary part
    /// of the synthesized samples is discarded.
    pub fn from_spectrum(grid: &TorusGrid, spectrum: Vec<Complex64>) -> Self {
        assert_eq!(spectrum.len(), grid.len(), "spectrum length mismatch");
        let mut data = spectrum.clone();
        grid.inverse(&mut data);
        let values = data.iter().map(|c| c.re).collect();
        let field = Self::from_values_unchecked(grid, values);
        // The stored spectrum must describe the real field, so only keep it
        // when it is already conjugate-symmetric.
        if is_hermitian(grid, &spectrum) {
            let _ = field.spectral.set(spectrum);
        }
        field
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Normalized Fourier coefficients, computed on first use.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| {
            let mut data: Vec<Complex64> =
                self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            self.grid.forward(&mut data);
            data
        })
    }

    /// Applies a Fourier multiplier `m(k) c_k` and returns the new field.
    pub fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        let spec: Vec<Complex64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(idx, &c)| f(idx, c))
            .collect();
        Self::from_spectrum(&self.grid, spec)
    }

    /// Real, even multiplier `m(|k|)`.
    pub fn apply_radial_multiplier(&self, m: impl Fn(f64) -> f64) -> Self {
        let grid = self.grid.clone();
        self.map_modes(|idx, c| c * m(grid.wavenumber_norm(idx)))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::from_values_unchecked(&self.grid, self.values.iter().map(|v| a * v).collect())
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: f64, other: &TorusField, b: f64) -> Self {
        assert!(self.grid == other.grid, "grid mismatch");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::from_values_unchecked(&self.grid, values)
    }

    pub fn sub(&self, other: &TorusField) -> Self {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn add(&self, other: &TorusField) -> Self {
        self.lin_comb(1.0, other, 1.0)
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values_unchecked(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Translates the field by whole cells: `out(x) = self(x - offset·h)`.
    pub fn shifted(&self, offset: [i64; 2]) -> Self {
        let neg = [-offset[0], -offset[1]];
        let values = (0..self.grid.len())
            .map(|idx| self.values[self.grid.shift_index(idx, neg)])
            .collect();
        Self::from_values_unchecked(&self.grid, values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let grid = &self.grid;
        let half = (grid.points_per_axis() / 2) as i64;
        let mut acc = 0.0;
        for (idx, c) in self.spectrum().iter().enumerate() {
            let k = grid.wavevector(idx);
            let m = grid.mode(idx);
            let mut phase_factor = Complex64::new(1.0, 0.0);
            for axis in 0..grid.dim() {
                let arg = k[axis] * x[axis];
                phase_factor *= if m[axis] == -half {
                    Complex64::new(arg.cos(), 0.0)
                } else {
                    Complex64::new(arg.cos(), arg.sin())
                };
            }
            acc += (c * phase_factor).re;
        }
        acc
    }
}

fn is_hermitian(grid: &TorusGrid, spec: &[Complex64]) -> bool {
    let scale_sq = spec.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max).max(1e-300);
    let tol_sq = 1e-26 * scale_sq;
    let conj = &grid.tables.conj;
    (0..grid.len()).all(|idx| {
        let conj = conj[idx];
        (spec[idx] - spec[conj].conj()).norm_sqr() <= tol_sq
    })
}

/// Spectral gradient: component `j` is `∂_j` of the trigonometric interpolant.
/// The Nyquist mode of each axis is dropped in the derivative along that axis.
pub fn gradient(field: &TorusField) -> Vec<TorusField> {
    let grid = field.grid().clone();
    let half = (grid.points_per_axis() / 2) as i64;
    (0..grid.dim())
        .map(|axis| {
            field.map_modes(|idx, c| {
                if grid.mode(idx)[axis] == -half {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, grid.wavevector(idx)[axis])
                }
            })
        })
        .collect()
}

/// Pointwise Euclidean norm of a gradient.
pub fn gradient_magnitude(grad: &[TorusField]) -> Vec<f64> {
    let len = grad[0].values().len();
    (0..len)
        .map(|i| grad.iter().map(|g| g.values()[i].powi(2)).sum::<f64>().sqrt())
        .collect()
}

pub fn linf_norm(field: &TorusField) -> f64 {
    field.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Grid surrogate for `‖∇θ‖_∞`: the largest Euclidean norm of the spectral
/// gradient over the samples.
pub fn lipschitz_estimate(field: &TorusField) -> f64 {
    gradient_magnitude(&gradient(field))
        .into_iter()
        .fold(0.0, f64::max)
}

/// `L∞ + Lipschitz`, the grid version of the `W^{1,∞}` norm.
pub fn w1inf_norm(field: &TorusField) -> f64 {
    linf_norm(field) + lipschitz_estimate(field)
}

/// Empirical Hölder-β seminorm of `∇θ` over sampled pairs, taking the largest
/// component difference.
pub fn holder_seminorm(field: &TorusField, beta: f64, samples: usize, seed: u64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::OutOfRange {
            name: "beta",
            value: beta,
            range: "(0, 1)",
        });
    }
    if samples == 0 {
        return Err(Error::InvalidInput("holder_seminorm needs at least one sample".into()));
    }
    let grad = gradient(field);
    let pairs = sample_pairs(field.grid(), samples, seed);
    Ok(holder_quotient_max(&grad, &pairs, beta))
}

pub(crate) fn holder_quotient_max(grad: &[TorusField], pairs: &[PairSample], beta: f64) -> f64 {
    pairs
        .iter()
        .map(|p| {
            let diff = grad
                .iter()
                .map(|g| (g.values()[p.x] - g.values()[p.y]).abs())
                .fold(0.0, f64::max);
            diff / p.separation.powf(beta)
        })
        .fold(0.0, f64::max)
}

/// A pair of distinct samples together with their geodesic separation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample {
    pub x: usize,
    pub y: usize,
    pub separation: f64,
}

impl PairSample {
    pub fn new(grid: &TorusGrid, x: usize, y: usize) -> Self {
        Self {
            x,
            y,
            separation: grid.torus_distance(x, y),
        }
    }
}

/// Number of dyadic separation bins `[2^k h, 2^{k+1} h)` needed to reach the
/// largest separation on the grid.
pub fn dyadic_bin_count(grid: &TorusGrid) -> usize {
    let ratio = grid.max_separation() / grid.spacing();
    (ratio.log2().floor() as usize) + 1
}

/// Deterministic pair sampler, stratified over dyadic separation bins.
///
/// Pair `i` targets bin `i mod K`. In 1D the separation in cells is drawn
/// uniformly among the integers of the bin, so every bin is hit exactly; in
/// 2D a radius and angle are drawn and rounded to the lattice, retrying a few
/// times when rounding leaves the bin.
pub fn sample_pairs(grid: &TorusGrid, count: usize, seed: u64) -> Vec<PairSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bins = dyadic_bin_count(grid);
    let n = grid.points_per_axis() as i64;
    let h = grid.spacing();
    let max_cells = grid.max_separation() / h;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let bin = i % bins;
        let lo = (1u64 << bin) as f64;
        let hi = ((1u64 << (bin + 1)) as f64).min(max_cells + 1e-9);
        let x = rng.gen_range(0..grid.len());
        let offset = if grid.dim() == 1 {
            let lo_i = lo as i64;
            let hi_i = (hi.ceil() as i64).min(n / 2 + 1).max(lo_i + 1);
            let m = rng.gen_range(lo_i..hi_i);
            let m = m.min(n / 2);
            [if rng.gen::<bool>() { m } else { -m }, 0]
        } else {
            let mut best = [1, 0];
            for _ in 0..16 {
                let r = rng.gen_range(lo..hi);
                let phi = rng.gen_range(0.0..2.0 * PI);
                let m = [(r * phi.cos()).round() as i64, (r * phi.sin()).round() as i64];
                if m == [0, 0] {
                    continue;
                }
                best = m;
                let d = ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
                if d >= lo && d < hi.max(lo + 1.0) {
                    break;
                }
            }
            best
        };
        let y = grid.shift_index(x, offset);
        if y == x {
            continue;
        }
        out.push(PairSample::new(grid, x, y));
    }
    out
}

/// All pairs whose minimum-image offset has length at most `max_cells` cells,
/// each unordered pair listed once.
pub fn near_diagonal_pairs(grid: &TorusGrid, max_cells: f64) -> Vec<PairSample> {
    let r = max_cells.floor() as i64;
    let mut offsets = Vec::new();
    let j_range = if grid.dim() == 2 { -r..=r } else { 0..=0 };
    for i in -r..=r {
        for j in j_range.clone() {
            let positive = i > 0 || (i == 0 && j > 0);
            if positive && ((i * i + j * j) as f64).sqrt() <= max_cells {
                offsets.push([i, j]);
            }
        }
    }
    let mut out = Vec::with_capacity(offsets.len() * grid.len());
    for x in 0..grid.len() {
        for &o in &offsets {
            let y = grid.shift_index(x, o);
            if y != x {
                out.push(PairSample::new(grid, x, y));
            }
        }
    }
    out
}

/// Every unordered pair of distinct samples. Quadratic in the sample count;
/// intended for 1D grids.
pub fn all_pairs(grid: &TorusGrid) -> Vec<PairSample> {
    let len = grid.len();
    let mut out = Vec::with_capacity(len * (len - 1) / 2);
    for x in 0..len {
        for y in (x + 1)..len {
            out.push(PairSample::new(grid, x, y));
        }
    }
    out
}

/// Trigonometric polynomial with every mode `|m_j| ≤ max_mode` and seeded
/// uniform `[−1, 1)` cosine/sine coefficients (plus a random mean).
pub fn random_band_limited(grid: &TorusGrid, max_mode: i64, seed: u64) -> TorusField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = 2.0 * PI / grid.period();
    let mut terms = Vec::new();
    let m2max = if grid.dim() == 2 { max_mode } else { 0 };
    for m1 in 0..=max_mode {
        for m2 in -m2max..=m2max {
            if (m1, m2) == (0, 0) || (m1 == 0 && m2 < 0) {
                continue;
            }
            terms.push((m1 as f64 * base, m2 as f64 * base, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        }
    }
    let c0 = rng.gen_range(-1.0..1.0);
    TorusField::from_fn(grid, move |x| {
        let y = if x.len() > 1 { x[1] } else { 0.0 };
        c0 + terms
            .iter()
            .map(|(k1, k2, a, b)| {
                let ph = k1 * x[0] + k2 * y;
                a * ph.cos() + b * ph.sin()
            })
            .sum::<f64>()
    })
}

/// Rough data: modes `1 ≤ |m| ≤ N/3` with amplitude `|m|^{−decay}` and seeded
/// random phases. For `decay ≤ 2` the gradient is large at grid scale.
pub fn rough_field(grid: &TorusGrid, decay: f64, seed: u64) -> TorusField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cutoff = (grid.points_per_axis() / 3) as i64;
    let spec: Vec<Complex64> = {
        let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
        for idx in 0..grid.len() {
            let m = grid.mode(idx);
            let positive = m[0] > 0 || (m[0] == 0 && m[1] > 0);
            let norm = ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
            if !positive || m[0].abs() > cutoff || m[1].abs() > cutoff {
                continue;
            }
            let phase = rng.gen_range(0.0..2.0 * PI);
            let c = Complex64::from_polar(0.5 * norm.powf(-decay), phase);
            spec[idx] = c;
            spec[grid.tables.conj[idx]] = c.conj();
        }
        spec
    };
    TorusField::from_spectrum(grid, spec)
}
