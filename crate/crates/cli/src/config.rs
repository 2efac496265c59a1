//! Experiment configuration: a TOML file (every key optional) merged with
//! command-line overrides, then validated as a whole.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use msfrac_core::{PdeParams, TorusField, TorusGrid};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemmas,
    Kernel,
    Picard,
    Evolve,
    Theorem12,
    All,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Lemmas, Suite::Kernel, Suite::Picard, Suite::Evolve, Suite::Theorem12];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemmas => "lemmas",
            Suite::Kernel => "kernel",
            Suite::Picard => "picard",
            Suite::Evolve => "evolve",
            Suite::Theorem12 => "theorem12",
            Suite::All => "all",
        }
    }

    /// The concrete suites this selector expands to, in run order.
    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::ALL.to_vec(),
            s => vec![s],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "lemmas" => Suite::Lemmas,
            "kernel" => Suite::Kernel,
            "picard" => Suite::Picard,
            "evolve" => Suite::Evolve,
            "theorem12" => Suite::Theorem12,
            "all" => Suite::All,
            other => bail!("unknown suite `{other}` (expected lemmas, kernel, picard, evolve, theorem12 or all)"),
        })
    }
}

/// One Fourier mode `a_cos·cos(k·x) + a_sin·sin(k·x)` with `k` in units of
/// `2π/L`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: [i64; 2],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Preset { name: String, amplitude: f64 },
    Modes { constant: f64, modes: Vec<ModeSpec> },
}

pub const PRESETS: [&str; 7] = ["zero", "sin", "sin-cos2", "sin-sum", "sin-diag", "sin-cos", "cos2"];

impl InitialData {
    pub fn build(&self, grid: &TorusGrid) -> Result<TorusField> {
        let w = 2.0 * PI / grid.period();
        let d = grid.dim();
        let y = move |x: &[f64]| if d > 1 { x[1] } else { 0.0 };
        match self {
            InitialData::Preset { name, amplitude } => {
                let a = *amplitude;
                let f = match name.as_str() {
                    "zero" => TorusField::zeros(grid),
                    "sin" => TorusField::from_fn(grid, |x| a * (w * x[0]).sin()),
                    "sin-cos2" => {
                        TorusField::from_fn(grid, |x| a * ((w * x[0]).sin() + 0.5 * (2.0 * w * x[0]).cos()))
                    }
                    "cos2" => TorusField::from_fn(grid, |x| a * (2.0 * w * x[0]).cos()),
                    "sin-sum" | "sin-diag" | "sin-cos" if d < 2 => {
                        bail!("initial data preset `{name}` needs dim = 2")
                    }
                    "sin-sum" => TorusField::from_fn(grid, |x| a * ((w * x[0]).sin() + (w * y(x)).sin())),
                    "sin-diag" => TorusField::from_fn(grid, |x| a * (w * (x[0] + y(x))).sin()),
                    "sin-cos" => TorusField::from_fn(grid, |x| a * (w * x[0]).sin() * (w * y(x)).cos()),
                    other => bail!("unknown initial data preset `{other}` (known: {})", PRESETS.join(", ")),
                };
                Ok(f)
            }
            InitialData::Modes { constant, modes } => {
                for m in modes {
                    if d == 1 && m.k[1] != 0 {
                        bail!("mode k = {:?} has a second component on a one-dimensional grid", m.k);
                    }
                    let limit = (grid.points_per_axis() / 2) as i64;
                    if m.k.iter().any(|k| k.abs() >= limit) {
                        bail!("mode k = {:?} is not resolved by n = {}", m.k, grid.points_per_axis());
                    }
                }
                let modes = modes.clone();
                let c = *constant;
                Ok(TorusField::from_fn(grid, move |x| {
                    modes.iter().fold(c, |acc, m| {
                        let phase = w * (m.k[0] as f64 * x[0] + m.k[1] as f64 * y(x));
                        acc + m.cos * phase.cos() + m.sin * phase.sin()
                    })
                }))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InitialData::Preset { name, amplitude } => format!("preset {name} x {amplitude}"),
            InitialData::Modes { modes, .. } => format!("{} Fourier modes", modes.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Samples {
    /// Random fields per `(d, α)` case in the operator-equivalence sweep.
    pub equivalence_fields: usize,
    /// Random fields per `(d, α)` case in the interpolation-bound sweep.
    pub interpolation_fields: usize,
    /// Pairs per case in the modulus-transfer check.
    pub transfer_pairs: usize,
    /// Stratified pairs in the breakthrough scan.
    pub scan_pairs: usize,
}

impl Default for Samples {
    fn default() -> Self {
        Self {
            equivalence_fields: 20,
            interpolation_fields: 100,
            transfer_pairs: 10_000,
            scan_pairs: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub pde: PdeParams,
    pub grid: TorusGrid,
    pub initial_data: InitialData,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub seed: u64,
    pub samples: Samples,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn theta0(&self) -> Result<TorusField> {
        self.initial_data.build(&self.grid)
    }

    pub fn solver_config(&self) -> Result<msfrac_core::SolverConfig> {
        let mut c = msfrac_core::SolverConfig::new(self.pde, self.grid.clone(), self.dt, self.t_end)?;
        c.record_every = self.record_every;
        c.scan_samples = self.samples.scan_pairs;
        c.seed = self.seed;
        Ok(c)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPde {
    nu: Option<f64>,
    mu: Option<f64>,
    alpha: Option<f64>,
    lambda: Option<f64>,
    p: Option<f64>,
    dim: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: Option<usize>,
    period: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    preset: Option<String>,
    amplitude: Option<f64>,
    constant: Option<f64>,
    modes: Option<Vec<ModeSpec>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSamples {
    equivalence_fields: Option<usize>,
    interpolation_fields: Option<usize>,
    transfer_pairs: Option<usize>,
    scan_pairs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    suite: Option<Suite>,
    seed: Option<u64>,
    dt: Option<f64>,
    t_end: Option<f64>,
    record_every: Option<usize>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    pde: RawPde,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    initial_data: RawInitial,
    #[serde(default)]
    samples: RawSamples,
}

/// Values given on the command line; each one wins over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub suite: Option<Suite>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub nu: Option<f64>,
    pub mu: Option<f64>,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub p: Option<f64>,
    pub dim: Option<usize>,
    pub n: Option<usize>,
    pub period: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub preset: Option<String>,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

fn default_n(dim: usize) -> usize {
    if dim == 2 {
        64
    } else {
        256
    }
}

impl RawConfig {
    fn resolve(self, o: &Overrides) -> Result<ExperimentConfig> {
        let dim = o.dim.or(self.pde.dim).unwrap_or(1);
        let pde = PdeParams {
            nu: o.nu.or(self.pde.nu).unwrap_or(1.0),
            mu: o.mu.or(self.pde.mu).unwrap_or(1.0),
            alpha: o.alpha.or(self.pde.alpha).unwrap_or(0.25),
            lambda: o.lambda.or(self.pde.lambda).unwrap_or(1.0),
            p: o.p.or(self.pde.p).unwrap_or(2.0),
            dim,
        };
        pde.validate().context("invalid [pde] section")?;
        let n = o.n.or(self.grid.n).unwrap_or_else(|| default_n(dim));
        let period = o.period.or(self.grid.period).unwrap_or(2.0 * PI);
        let grid = TorusGrid::new(dim, period, n).context("invalid [grid] section")?;

        let init = self.initial_data;
        let initial_data = match (o.preset.clone().or(init.preset), init.modes) {
            (Some(_), Some(_)) if o.preset.is_none() => {
                bail!("[initial_data] sets both `preset` and `modes`; choose one")
            }
            (Some(name), _) => {
                if init.constant.is_some() {
                    bail!("[initial_data] key `constant` only applies together with `modes`");
                }
                InitialData::Preset { name, amplitude: init.amplitude.unwrap_or(1.0) }
            }
            (None, Some(modes)) => {
                if init.amplitude.is_some() {
                    bail!("[initial_data] key `amplitude` only applies together with `preset`");
                }
                InitialData::Modes { constant: init.constant.unwrap_or(0.0), modes }
            }
            (None, None) => InitialData::Preset { name: "sin".into(), amplitude: init.amplitude.unwrap_or(1.0) },
        };
        if let InitialData::Preset { amplitude, .. } = &initial_data {
            if !amplitude.is_finite() {
                bail!("[initial_data] amplitude must be finite");
            }
        }
        initial_data.build(&grid).context("invalid [initial_data] section")?;

        let dt = o.dt.or(self.dt).unwrap_or(1e-3);
        let t_end = o.t_end.or(self.t_end).unwrap_or(1.0);
        if !(dt.is_finite() && dt > 0.0) {
            bail!("dt = {dt} must lie in (0, inf)");
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            bail!("t_end = {t_end} must lie in (0, inf)");
        }
        let record_every = self.record_every.unwrap_or(50);
        if record_every == 0 {
            bail!("record_every must be at least 1");
        }
        let d = Samples::default();
        let s = self.samples;
        let samples = Samples {
            equivalence_fields: s.equivalence_fields.unwrap_or(d.equivalence_fields),
            interpolation_fields: s.interpolation_fields.unwrap_or(d.interpolation_fields),
            transfer_pairs: s.transfer_pairs.unwrap_or(d.transfer_pairs),
            scan_pairs: s.scan_pairs.unwrap_or(d.scan_pairs),
        };
        for (name, v) in [
            ("equivalence_fields", samples.equivalence_fields),
            ("interpolation_fields", samples.interpolation_fields),
            ("transfer_pairs", samples.transfer_pairs),
            ("scan_pairs", samples.scan_pairs),
        ] {
            if v == 0 {
                bail!("[samples] {name} must be at least 1");
            }
        }
        Ok(ExperimentConfig {
            suite: o.suite.or(self.suite).unwrap_or(Suite::All),
            pde,
            grid,
            initial_data,
            dt,
            t_end,
            record_every,
            seed: o.seed.or(self.seed).unwrap_or(DEFAULT_SEED),
            samples,
            output_dir: o.out.clone().or(self.output_dir).unwrap_or_else(|| PathBuf::from("msfrac-out")),
        })
    }
}

pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{}", e.message().trim()))?;
    raw.resolve(overrides)
}

/// Reads `path` when given, otherwise starts from the defaults.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            parse_config_str(&text, overrides).with_context(|| format!("in config {}", p.display()))
        }
        None => RawConfig::default().resolve(overrides),
    }
}
