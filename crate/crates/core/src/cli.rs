//! Command-line front end. Exit codes: 0 ok, 1 runtime failure, 2 config error.

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::{Error, Result};
use crate::experiments;
use crate::nls::NlsScheme;
use crate::record::{CsvSink, Manifest, NdjsonSink};
use crate::runner::{self, Setup};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "zakharov-sde", version, about = "Stochastic Zakharov system and its NLS limit")]
pub struct Cli {
    /// TOML config file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: the config's, then $ZAKHAROV_SDE_OUT, then ./output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Comma-separated, strictly decreasing.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps_list: Option<Vec<f64>>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SchemeArg {
    Stratonovich,
    ItoEm,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One Zakharov trajectory.
    SimulateZakharov {
        #[arg(long, default_value_t = 0)]
        path: u64,
        /// Overrides the config's ε.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// One limit-equation trajectory.
    SimulateNls {
        #[arg(long, default_value_t = 0)]
        path: u64,
        #[arg(long, value_enum, default_value_t = SchemeArg::Stratonovich)]
        scheme: SchemeArg,
    },
    /// Coupled convergence sweep over the ε-list.
    SweepEpsilon,
    /// Convergence sweeps at damping exponents 1 and 2.
    SweepGamma,
    /// Monte Carlo check of the stationary kernels.
    ValidateKernels,
    /// Finite-difference check of the limit generator.
    ValidateGenerator,
    /// Print the resolved config, including derived step sizes.
    ShowConfig,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::SimulateZakharov { .. } => "simulate-zakharov",
            Command::SimulateNls { .. } => "simulate-nls",
            Command::SweepEpsilon => "sweep-epsilon",
            Command::SweepGamma => "sweep-gamma",
            Command::ValidateKernels => "validate-kernels",
            Command::ValidateGenerator => "validate-generator",
            Command::ShowConfig => "show-config",
        }
    }
}

/// Loads the config and applies command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.mc.seed = s;
    }
    if let Some(p) = cli.paths {
        config.mc.paths = p;
    }
    if let Some(list) = &cli.eps_list {
        config.physics.epsilon = None;
        config.physics.epsilon_list = Some(list.clone());
    }
    if let Some(out) = &cli.out {
        config.output.directory = Some(out.clone());
    }
    config.validate()?;
    Ok(config)
}

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
    csv: bool,
    ndjson: bool,
}

impl Outputs {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        let dir = config.output.resolved_directory();
        std::fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            files: Vec::new(),
            csv: config.output.formats.contains(&OutputFormat::Csv),
            ndjson: config.output.formats.contains(&OutputFormat::Ndjson),
        })
    }

    fn csv(&mut self, name: &str) -> Result<Option<CsvSink>> {
        if !self.csv {
            return Ok(None);
        }
        let path = self.dir.join(name);
        self.files.push(path.clone());
        CsvSink::create(&path).map(Some)
    }

    fn report<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if !self.ndjson {
            return Ok(());
        }
        let path = self.dir.join(name);
        let mut sink = NdjsonSink::create(&path)?;
        sink.write(value)?;
        self.files.push(path);
        Ok(())
    }

    fn rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        if !self.csv {
            return Ok(());
        }
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.files.push(path);
        Ok(())
    }
}

#[derive(Serialize)]
struct PathRow {
    gamma: f64,
    epsilon: f64,
    path: u64,
    error: Option<f64>,
    trip_time: Option<f64>,
    blew_up: bool,
}

fn path_rows(report: &experiments::ConvergenceReport) -> Vec<PathRow> {
    report
        .summaries
        .iter()
        .flat_map(|s| {
            s.per_path.iter().map(|p| PathRow {
                gamma: report.gamma,
                epsilon: s.epsilon,
                path: p.path,
                error: p.error,
                trip_time: p.trip_time,
                blew_up: p.blew_up,
            })
        })
        .collect()
}

fn print_sweep(report: &experiments::ConvergenceReport) {
    println!("gamma {} alpha {} policy {:?}", report.gamma, report.alpha, report.policy);
    for s in &report.summaries {
        println!(
            "  eps {:<8} median {:.4e}  q1 {:.4e}  q3 {:.4e}  used {}/{}  trips {}  blowups {}",
            s.epsilon,
            s.median,
            s.q1,
            s.q3,
            s.used,
            s.paths,
            s.trips,
            s.blowups.len()
        );
    }
    println!(
        "  decay ratios {:?}  last/first {:.3}  coupling audit {}",
        report.decay_ratios,
        report.last_first_ratio,
        if report.coupling_audit_ok { "ok" } else { "MISMATCH" }
    );
}

fn execute(cli: &Cli, config: &ExperimentConfig, out: &mut Outputs, stop: &AtomicBool) -> Result<()> {
    match &cli.command {
        Command::ShowConfig => unreachable!("handled before outputs are created"),
        Command::SimulateZakharov { path, epsilon } => {
            let mut config = config.clone();
            if let Some(e) = epsilon {
                config.physics.epsilon = Some(*e);
                config.physics.epsilon_list = None;
                config.validate()?;
            }
            let setup = Setup::new(&config)?;
            let eps = config.physics.single_epsilon();
            let mut sink = out.csv(&format!("zakharov_eps{eps}_path{path}.csv"))?;
            let record = runner::run_zakharov(&setup, eps, config.physics.gamma, *path, Some(stop), sink.as_mut())?;
            if let Some(t) = record.monitor_trip_time {
                log::warn!("growth monitor tripped at t = {t}");
            }
            out.report(&format!("zakharov_eps{eps}_path{path}.ndjson"), &record)?;
            println!("{} rows, final mass {:.12e}", record.rows.len(), record.rows.last().map_or(f64::NAN, |r| r.mass));
        }
        Command::SimulateNls { path, scheme } => {
            let setup = Setup::new(config)?;
            let scheme = match scheme {
                SchemeArg::Stratonovich => NlsScheme::Stratonovich,
                SchemeArg::ItoEm => NlsScheme::ItoEm,
            };
            let mut sink = out.csv(&format!("nls_path{path}.csv"))?;
            let record = runner::run_nls(&setup, scheme, *path, Some(stop), sink.as_mut())?;
            out.report(&format!("nls_path{path}.ndjson"), &record)?;
            println!("{} rows, final mass {:.12e}", record.rows.len(), record.rows.last().map_or(f64::NAN, |r| r.mass));
        }
        Command::SweepEpsilon => {
            let report = experiments::convergence_experiment(config, Some(stop))?;
            out.rows("sweep_epsilon.csv", &path_rows(&report))?;
            out.report("sweep_epsilon.ndjson", &report)?;
            print_sweep(&report);
        }
        Command::SweepGamma => {
            let report = experiments::damping_exponent_experiment(config, Some(stop))?;
            let mut rows = path_rows(&report.reference);
            rows.extend(path_rows(&report.reduced));
            out.rows("sweep_gamma.csv", &rows)?;
            out.report("sweep_gamma.ndjson", &report)?;
            print_sweep(&report.reference);
            print_sweep(&report.reduced);
            println!("reduced-damping ratio {:.3}, no decay: {}", report.reduced_ratio, report.no_decay);
        }
        Command::ValidateKernels => {
            let report = experiments::kernel_validation(config)?;
            out.report("validate_kernels.ndjson", &report)?;
            println!(
                "samples {}  max sigma K1 {:.2}  max sigma k {:.2}  diagonal {:.1e}",
                report.samples, report.max_sigma_k1, report.max_sigma_sym, report.max_diagonal_error
            );
        }
        Command::ValidateGenerator => {
            let report = experiments::generator_validation(config, Some(stop))?;
            out.report("validate_generator.ndjson", &report)?;
            let d = &report.drift;
            let v = &report.variance;
            println!(
                "drift: fd {:.5e} ± {:.2e}, generator {:.5e}, within {}; paired mismatch {:.2e} ± {:.2e}",
                d.finite_difference, d.ci_half_width, d.generator, d.within, d.paired_mismatch, d.paired_ci_half_width
            );
            println!(
                "variance: sample {:.4e} in [{:.4e}, {:.4e}], predicted {:.4e}, within {}",
                v.sample_variance, v.ci_low, v.ci_high, v.predicted, v.within
            );
        }
    }
    Ok(())
}

fn write_manifest(cli: &Cli, config: &ExperimentConfig, out: &Outputs, started: Instant, interrupted: bool) -> Result<PathBuf> {
    let manifest = Manifest {
        command: cli.command.name().to_string(),
        config: serde_json::to_value(config)?,
        config_hash: config.hash(),
        seed: config.mc.seed,
        code_version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs: out.files.clone(),
        interrupted,
    };
    let path = out.dir.join(format!("{}.manifest.json", cli.command.name()));
    manifest.write(&path)?;
    Ok(path)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I, stop: &AtomicBool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let config = match resolve_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if matches!(cli.command, Command::ShowConfig) {
        return match toml::to_string_pretty(&config.resolved()) {
            Ok(s) => {
                print!("{s}");
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_FAILURE
            }
        };
    }
    let started = Instant::now();
    let mut out = match Outputs::new(&config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    let result = execute(&cli, &config, &mut out, stop);
    let interrupted = stop.load(Ordering::Relaxed) || matches!(result, Err(Error::Interrupted));
    match write_manifest(&cli, &config, &out, started, interrupted) {
        Ok(p) => log::info!("manifest written to {}", p.display()),
        Err(e) => eprintln!("error writing manifest: {e}"),
    }
    match result {
        Ok(()) if interrupted => {
            eprintln!("interrupted; partial results flushed to {}", out.dir.display());
            EXIT_FAILURE
        }
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
