//! Single-path simulation drivers shared by the CLI and the experiments.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use num_complex::Complex64;

use crate::config::{DriverStart, ExperimentConfig, TripPolicy, Window};
use crate::diagnostics;
use crate::driver::{DriverMode, DriverState, GrowthMonitor, OuDriver};
use crate::error::{Error, Result};
use crate::nls::{NlsScheme, NlsSim, NlsState};
use crate::noise::{make_phi, NoiseOperator};
use crate::record::{CsvSink, SampleRow, TrajectoryRecord};
use crate::spectral::{ComplexField, NormKind, RealField, SpectralGrid};
use crate::stream::IncrementStream;
use crate::zakharov::{boundary_amplitude, initial_data, ZakharovSim, ZakharovState, BOUNDARY_TOLERANCE};

/// Everything derived once from a config and shared by all paths.
#[derive(Debug)]
pub struct Setup {
    pub config: ExperimentConfig,
    pub grid: Arc<SpectralGrid>,
    pub phi: Arc<NoiseOperator>,
    pub u0: ComplexField,
    pub m0: RealField,
    pub m1: RealField,
    pub nls: NlsSim,
    pub windows: Vec<Window>,
    pub config_hash: String,
}

impl Setup {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let grid = SpectralGrid::new(config.grid.num_points, config.grid.domain_length)?;
        let phi = Arc::new(make_phi(grid.clone(), &config.noise)?);
        let (u0, m0, m1) = initial_data(&grid, &config.initial)?;
        Ok(Self {
            config: config.clone(),
            nls: NlsSim::new(phi.clone()),
            grid,
            phi,
            u0,
            m0,
            m1,
            windows: config.windows(),
            config_hash: config.hash(),
        })
    }

    pub fn zakharov(&self, eps: f64, gamma: f64) -> Result<ZakharovSim> {
        ZakharovSim::new(self.phi.clone(), eps, self.config.physics.alpha, gamma)
    }

    /// Maximum over the configured windows of the windowed `H^s` norm.
    pub fn metric(&self, u: &ComplexField) -> Result<f64> {
        let mut best = 0.0f64;
        for w in &self.windows {
            best = best.max(u.windowed_norm(self.config.metric.order, w.center, w.radius)?);
        }
        Ok(best)
    }

    /// Threshold scale: the configured value, else `scale_factor` times the
    /// stationary RMS at the reference damping `α` (so a weaker effective
    /// damping shows up as trips).
    pub fn monitor(&self, eps: f64) -> Result<GrowthMonitor> {
        let m = &self.config.monitor;
        let scale = match m.scale {
            Some(s) => s,
            None => {
                let reference = OuDriver::new(self.phi.clone(), self.config.physics.alpha)?;
                m.scale_factor * reference.stationary_monitor_scale()?
            }
        };
        GrowthMonitor::new(m.delta, eps, scale)
    }

    pub fn initial_driver(&self, driver: &OuDriver, path: u64, mode: DriverMode) -> Result<DriverState> {
        match self.config.driver.start {
            DriverStart::Zero => Ok(DriverState::zeros(self.grid.clone(), mode)),
            DriverStart::Stationary if driver.alpha() > 0.0 && !self.phi.is_zero() => {
                let mut rng = IncrementStream::side_rng(self.config.mc.seed, path);
                driver.sample_stationary(&mut rng, mode)
            }
            DriverStart::Stationary => Ok(DriverState::zeros(self.grid.clone(), mode)),
        }
    }

    pub fn stream(&self, path: u64, dt: f64) -> IncrementStream {
        let n = self.config.driver.substeps;
        IncrementStream::new(self.config.mc.seed, path, self.phi.mode_count(), dt / n as f64)
    }

    /// `‖u₀‖²/L`: on the torus the wave component stays mean-zero, so the
    /// Zakharov field tracks the limit solution up to the gauge `e^{−i N t / L}`.
    pub fn gauge_rate(&self) -> f64 {
        diagnostics::mass(&self.u0) / self.grid.length()
    }

    pub fn run_id(&self, kind: &str, eps: Option<f64>, path: u64) -> String {
        match eps {
            Some(e) => format!("{kind}-eps{e}-path{path}-{}", &self.config_hash[..12]),
            None => format!("{kind}-path{path}-{}", &self.config_hash[..12]),
        }
    }
}

fn stopped(stop: Option<&AtomicBool>) -> bool {
    stop.is_some_and(|s| s.load(Ordering::Relaxed))
}

/// Removes the torus gauge: `e^{iθ} u`.
pub fn rotate(u: &ComplexField, theta: f64) -> Result<ComplexField> {
    let r = Complex64::from_polar(1.0, theta);
    ComplexField::new(u.grid().clone(), u.physical().iter().map(|c| c * r).collect())
}

fn zakharov_row(setup: &Setup, sim: &ZakharovSim, state: &ZakharovState, monitor: &GrowthMonitor) -> Result<SampleRow> {
    let driver = sim.driver();
    let eps = state.epsilon;
    let h = diagnostics::hamiltonian(&state.u, &state.m, &state.mu, eps)?;
    let k = diagnostics::quadratic_energy(&state.u, &state.m, &state.mu, eps)?;
    let h1 = diagnostics::corrector_h1(&state.u, &state.driver, driver.alpha())?;
    let h2 = if driver.alpha() > 0.0 || (driver.phi().is_zero() && state.driver.is_zero()) {
        Some(diagnostics::corrector_h2(&state.u, &state.driver, driver)?)
    } else {
        None
    };
    let v = diagnostics::v_field(&state.mu)?.sobolev_norm(0.0, NormKind::Inhomogeneous)?;
    let edge = boundary_amplitude(&state.u);
    Ok(SampleRow {
        time: state.time,
        mass: state.mass(),
        hamiltonian: Some(h),
        quadratic_energy: Some(k),
        h1: Some(h1),
        h2,
        h_eps: h2.map(|h2| h + eps.sqrt() * h1 + eps * h2),
        v_norm: Some(v),
        windowed_norm: setup.metric(&state.u)?,
        driver_norm: Some(state.driver.monitored_norm()?),
        monitor_tripped: Some(monitor.tripped_at.is_some()),
        boundary_amplitude: edge,
        valid: edge <= BOUNDARY_TOLERANCE.sqrt(),
    })
}

fn nls_row(setup: &Setup, state: &NlsState) -> Result<SampleRow> {
    let edge = boundary_amplitude(&state.u);
    Ok(SampleRow {
        time: state.time,
        mass: diagnostics::mass(&state.u),
        windowed_norm: setup.metric(&state.u)?,
        boundary_amplitude: edge,
        valid: edge <= BOUNDARY_TOLERANCE.sqrt(),
        ..Default::default()
    })
}

/// One Zakharov trajectory at `eps`, sampled every `save_every` steps.
pub fn run_zakharov(
    setup: &Setup,
    eps: f64,
    gamma: f64,
    path: u64,
    stop: Option<&AtomicBool>,
    mut sink: Option<&mut CsvSink>,
) -> Result<TrajectoryRecord> {
    let cfg = &setup.config;
    let sim = setup.zakharov(eps, gamma)?;
    let mode = cfg.driver.mode;
    let d0 = setup.initial_driver(sim.driver(), path, mode)?;
    let mut state = sim.initial_state(setup.u0.clone(), setup.m0.clone(), setup.m1.clone(), d0)?;
    let mut monitor = setup.monitor(eps)?;
    monitor.observe(&state.driver)?;
    let (steps, dt) = cfg.stepping.resolve(eps);
    let mut stream = setup.stream(path, dt);
    let mut exact_rng = IncrementStream::side_rng(cfg.mc.seed ^ 0x5eed, path);
    let mut record = TrajectoryRecord::new(setup.run_id("zakharov", Some(eps), path), setup.config_hash.clone(), Some(eps), path);
    let emit = |record: &mut TrajectoryRecord, sink: &mut Option<&mut CsvSink>, row: SampleRow| -> Result<()> {
        if let Some(s) = sink.as_deref_mut() {
            s.write(&row)?;
        }
        record.push(row)
    };
    emit(&mut record, &mut sink, zakharov_row(setup, &sim, &state, &monitor)?)?;
    for n in 1..=steps {
        if stopped(stop) {
            record.truncated = true;
            break;
        }
        state = match mode {
            DriverMode::CoupledEm => {
                let block = stream.next_block(cfg.driver.substeps)?;
                sim.strang_step(&state, dt, &block)?
            }
            DriverMode::ExactGaussian => sim.strang_step_exact(&state, dt, &mut exact_rng)?,
        };
        let tripped = monitor.observe(&state.driver)?;
        if n % cfg.stepping.save_every == 0 || n == steps {
            emit(&mut record, &mut sink, zakharov_row(setup, &sim, &state, &monitor)?)?;
        }
        if tripped && cfg.monitor.policy == TripPolicy::Halt {
            record.truncated = n < steps;
            break;
        }
    }
    record.monitor_trip_time = monitor.tripped_at;
    if mode == DriverMode::CoupledEm {
        record.increment_checksum = Some(stream.checksum());
    }
    Ok(record)
}

/// One limit-equation trajectory using the step of the single-run ε, so it
/// consumes the same increments as the matching Zakharov run.
pub fn run_nls(
    setup: &Setup,
    scheme: NlsScheme,
    path: u64,
    stop: Option<&AtomicBool>,
    mut sink: Option<&mut CsvSink>,
) -> Result<TrajectoryRecord> {
    let cfg = &setup.config;
    let (steps, dt) = cfg.stepping.resolve(cfg.physics.single_epsilon());
    let mut stream = setup.stream(path, dt);
    let mut state = setup.nls.initial_state(setup.u0.clone())?;
    let mut record = TrajectoryRecord::new(setup.run_id("nls", None, path), setup.config_hash.clone(), None, path);
    let first = nls_row(setup, &state)?;
    if let Some(s) = sink.as_deref_mut() {
        s.write(&first)?;
    }
    record.push(first)?;
    for n in 1..=steps {
        if stopped(stop) {
            record.truncated = true;
            break;
        }
        let block = stream.next_block(cfg.driver.substeps)?;
        state = setup.nls.step(scheme, &state, dt, &block)?;
        if n % cfg.stepping.save_every == 0 || n == steps {
            let row = nls_row(setup, &state)?;
            if let Some(s) = sink.as_deref_mut() {
                s.write(&row)?;
            }
            record.push(row)?;
        }
    }
    record.increment_checksum = Some(stream.checksum());
    Ok(record)
}

/// A Zakharov path and a limit-equation path driven by identical increments.
/// Each integrator draws from its own stream instance so the checksums audit
/// the coupling.
pub struct CoupledPath<'a> {
    setup: &'a Setup,
    sim: &'a ZakharovSim,
    zakharov_stream: IncrementStream,
    nls_stream: IncrementStream,
    pub zakharov: ZakharovState,
    pub nls: NlsState,
    pub monitor: GrowthMonitor,
    pub dt: f64,
    pub steps_taken: usize,
}

impl<'a> CoupledPath<'a> {
    pub fn new(setup: &'a Setup, sim: &'a ZakharovSim, path: u64, dt: f64) -> Result<Self> {
        let d0 = setup.initial_driver(sim.driver(), path, DriverMode::CoupledEm)?;
        let zakharov = sim.initial_state(setup.u0.clone(), setup.m0.clone(), setup.m1.clone(), d0)?;
        let mut monitor = setup.monitor(sim.epsilon())?;
        monitor.observe(&zakharov.driver)?;
        Ok(Self {
            setup,
            sim,
            zakharov_stream: setup.stream(path, dt),
            nls_stream: setup.stream(path, dt),
            zakharov,
            nls: setup.nls.initial_state(setup.u0.clone())?,
            monitor,
            dt,
            steps_taken: 0,
        })
    }

    /// Advances both; returns whether the monitor has tripped.
    pub fn step(&mut self) -> Result<bool> {
        let n = self.setup.config.driver.substeps;
        let a = self.zakharov_stream.next_block(n)?;
        let b = self.nls_stream.next_block(n)?;
        self.zakharov = self.sim.strang_step(&self.zakharov, self.dt, &a)?;
        self.nls = self.setup.nls.stratonovich_step(&self.nls, self.dt, &b)?;
        self.steps_taken += 1;
        self.monitor.observe(&self.zakharov.driver)
    }

    /// Zakharov field with the torus gauge removed.
    pub fn zakharov_u(&self) -> Result<ComplexField> {
        rotate(&self.zakharov.u, self.setup.gauge_rate() * self.zakharov.time)
    }

    pub fn error(&self) -> Result<f64> {
        self.setup.metric(&self.zakharov_u()?.sub(&self.nls.u)?)
    }

    pub fn checksums(&self) -> (String, String) {
        (self.zakharov_stream.checksum(), self.nls_stream.checksum())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledOutcome {
    /// `sup` over saved times of the windowed error, up to the trip when halting.
    pub error: f64,
    pub trip_time: Option<f64>,
    pub checksums_match: bool,
    /// `(H^ε, K)` at saved times before any trip.
    pub energies: Vec<(f64, f64)>,
}

pub fn run_coupled(
    setup: &Setup,
    sim: &ZakharovSim,
    path: u64,
    policy: TripPolicy,
    collect_energies: bool,
    stop: Option<&AtomicBool>,
) -> Result<CoupledOutcome> {
    let (steps, dt) = setup.config.stepping.resolve(sim.epsilon());
    let save_every = setup.config.stepping.save_every;
    let mut cp = CoupledPath::new(setup, sim, path, dt)?;
    let mut error = 0.0f64;
    let mut energies = Vec::new();
    let energy = |cp: &CoupledPath| -> Result<(f64, f64)> {
        let r = diagnostics::modified_energy(&cp.zakharov, sim.driver(), None)?;
        Ok((r.h_eps, r.quadratic_energy))
    };
    if collect_energies && cp.monitor.tripped_at.is_none() {
        energies.push(energy(&cp)?);
    }
    for n in 1..=steps {
        if stopped(stop) {
            return Err(Error::Interrupted);
        }
        let tripped = cp.step()?;
        if tripped && policy == TripPolicy::Halt {
            break;
        }
        if n % save_every == 0 || n == steps {
            error = error.max(cp.error()?);
            if collect_energies && !tripped {
                energies.push(energy(&cp)?);
            }
        }
    }
    let (a, b) = cp.checksums();
    Ok(CoupledOutcome {
        error,
        trip_time: cp.monitor.tripped_at,
        checksums_match: a == b,
        energies,
    })
}
