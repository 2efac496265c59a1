use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use msfrac_cli::commands::{
    constants_table, picard_run, single_run, theory_constants, write_constants, write_contraction,
};
use msfrac_cli::{emit_report, parse_config, run_suite, ExperimentConfig, Overrides, RunOptions, Suite, SuiteResult};

#[derive(Parser)]
#[command(name = "msfrac", version, about = "Spectral solver and verification harness for a fractional Hamilton-Jacobi equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write summary, time-series and constants files.
    Verify(Common),
    /// Evolve the configured data with the time-dependent modulus attached.
    Run(Common),
    /// Build Picard iterates for the configured data and check the contraction.
    Picard {
        #[command(flatten)]
        common: Common,
        /// Number of iterates.
        #[arg(long, default_value_t = 8)]
        k_max: usize,
    },
    /// Print the explicit constants for the configured data.
    Constants(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML configuration file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// lemmas, kernel, picard, evolve, theorem12 or all.
    #[arg(long)]
    suite: Option<Suite>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Grid points per axis.
    #[arg(long)]
    n: Option<usize>,
    /// Period of the torus.
    #[arg(long = "L")]
    period: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Initial data preset (zero, sin, sin-cos2, cos2, sin-sum, sin-diag, sin-cos).
    #[arg(long)]
    preset: Option<String>,
    /// Record wall-clock seconds per check in the summary.
    #[arg(long)]
    timings: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let o = Overrides {
            suite: self.suite,
            seed: self.seed,
            out: self.out.clone(),
            nu: self.nu,
            mu: self.mu,
            alpha: self.alpha,
            lambda: self.lambda,
            p: self.p,
            dim: self.dim,
            n: self.n,
            period: self.period,
            dt: self.dt,
            t_end: self.t_end,
            preset: self.preset.clone(),
        };
        parse_config(self.config.as_deref(), &o)
    }

    fn options(&self) -> RunOptions {
        RunOptions { timings: self.timings }
    }
}

fn print_checks(result: &SuiteResult) {
    for c in &result.checks {
        println!("{} {:<44} {:<24} margin {:>11.3e}  {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.paper_ref, c.margin, c.detail);
    }
    let passed = result.checks.iter().filter(|c| c.pass).count();
    println!("{passed}/{} checks passed", result.checks.len());
}

fn finish(result: &SuiteResult, config: &ExperimentConfig) -> Result<ExitCode> {
    print_checks(result);
    for path in emit_report(&config.output_dir, result)? {
        println!("wrote {}", path.display());
    }
    Ok(if result.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Verify(common) => {
            let config = common.load()?;
            log::info!("suite {} with seed {}", config.suite, config.seed);
            let result = run_suite(&config, common.options())?;
            finish(&result, &config)
        }
        Command::Run(common) => {
            let config = common.load()?;
            log::info!("evolving {} to t = {}", config.initial_data.describe(), config.t_end);
            let result = single_run(&config, common.options())?;
            finish(&result, &config)
        }
        Command::Picard { common, k_max } => {
            let config = common.load()?;
            let out = picard_run(&config, k_max, common.options())?;
            if let Some(rep) = &out.contraction {
                println!("wrote {}", write_contraction(&config.output_dir, rep)?.display());
            }
            finish(&out.result, &config)
        }
        Command::Constants(common) => {
            let config = common.load()?;
            let c = theory_constants(&config)?;
            print!("{}", constants_table(&c));
            println!("wrote {}", write_constants(&config.output_dir, &c)?.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
