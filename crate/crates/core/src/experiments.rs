//! The headline experiments: ε-sweep convergence, damping exponent,
//! kernel validation and generator-drift validation.

use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, TripPolicy};
use crate::diagnostics;
use crate::driver::{self, DriverMode, OuDriver};
use crate::error::{Error, Result};
use crate::runner::{run_coupled, CoupledPath, Setup};
use crate::spectral::{ComplexField, ZeroModePolicy};
use crate::stream::IncrementStream;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathError {
    pub path: u64,
    /// `None` when the path was excluded.
    pub error: Option<f64>,
    pub trip_time: Option<f64>,
    pub blew_up: bool,
    /// Largest sandwich violation over pre-trip samples, when collected.
    pub sandwich_violation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub dt: f64,
    pub steps: usize,
    pub paths: usize,
    /// Effective sample size.
    pub used: usize,
    pub trips: usize,
    pub excluded_trips: Vec<u64>,
    pub blowups: Vec<u64>,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub per_path: Vec<PathError>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub gamma: f64,
    pub alpha: f64,
    pub policy: TripPolicy,
    pub summaries: Vec<EpsilonSummary>,
    /// `median(ε_{i+1}) / median(ε_i)`.
    pub decay_ratios: Vec<f64>,
    pub last_first_ratio: f64,
    pub strictly_decreasing: bool,
    /// Every coupled pair consumed identical increment streams.
    pub coupling_audit_ok: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub gamma: f64,
    pub policy: TripPolicy,
    pub collect_energies: bool,
}

impl SweepOptions {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            gamma: config.physics.gamma,
            policy: config.monitor.policy,
            collect_energies: false,
        }
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn convergence_experiment(config: &ExperimentConfig, stop: Option<&AtomicBool>) -> Result<ConvergenceReport> {
    convergence_sweep(config, SweepOptions::from_config(config), stop)
}

/// Coupled Zakharov/limit pairs over the ε-list, paths in parallel.
pub fn convergence_sweep(config: &ExperimentConfig, opts: SweepOptions, stop: Option<&AtomicBool>) -> Result<ConvergenceReport> {
    let setup = Setup::new(config)?;
    let epsilons = config.physics.epsilons();
    let sims = epsilons
        .iter()
        .map(|&e| setup.zakharov(e, opts.gamma))
        .collect::<Result<Vec<_>>>()?;
    let paths = config.mc.paths as u64;
    let jobs: Vec<(usize, u64)> = (0..sims.len()).flat_map(|i| (0..paths).map(move |p| (i, p))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(i, p)| {
            if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
                return Err(Error::Interrupted);
            }
            match run_coupled(&setup, &sims[i], p, opts.policy, opts.collect_energies, stop) {
                Ok(o) => Ok((i, p, Some(o))),
                Err(Error::BlowUp { time, detail }) => {
                    log::warn!("eps {} path {p}: blow-up at t = {time}: {detail}", epsilons[i]);
                    Ok((i, p, None))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut audit = true;
    let mut summaries = Vec::with_capacity(sims.len());
    for (i, &eps) in epsilons.iter().enumerate() {
        let (steps, dt) = config.stepping.resolve(eps);
        let mut per_path = Vec::new();
        let (mut trips, mut excluded, mut blowups, mut errs) = (0, Vec::new(), Vec::new(), Vec::new());
        for (_, p, o) in outcomes.iter().filter(|(j, _, _)| *j == i) {
            let Some(o) = o else {
                blowups.push(*p);
                per_path.push(PathError {
                    path: *p,
                    error: None,
                    trip_time: None,
                    blew_up: true,
                    sandwich_violation: None,
                });
                continue;
            };
            audit &= o.checksums_match;
            let tripped = o.trip_time.is_some();
            trips += tripped as usize;
            let keep = !(tripped && opts.policy == TripPolicy::Halt);
            if keep {
                errs.push(o.error);
            } else {
                excluded.push(*p);
            }
            let violation = (!o.energies.is_empty()).then(|| {
                o.energies
                    .iter()
                    .map(|&(h, k)| diagnostics::sandwich_violation(h, k))
                    .fold(0.0, f64::max)
            });
            per_path.push(PathError {
                path: *p,
                error: keep.then_some(o.error),
                trip_time: o.trip_time,
                blew_up: false,
                sandwich_violation: violation,
            });
        }
        if !excluded.is_empty() {
            log::info!("eps {eps}: {} of {paths} paths excluded by monitor trips", excluded.len());
        }
        errs.sort_by(f64::total_cmp);
        summaries.push(EpsilonSummary {
            epsilon: eps,
            dt,
            steps,
            paths: paths as usize,
            used: errs.len(),
            trips,
            excluded_trips: excluded,
            blowups,
            median: quantile(&errs, 0.5),
            q1: quantile(&errs, 0.25),
            q3: quantile(&errs, 0.75),
            per_path,
        });
    }
    let decay_ratios: Vec<f64> = summaries.windows(2).map(|w| w[1].median / w[0].median).collect();
    let last_first_ratio = match (summaries.first(), summaries.last()) {
        (Some(a), Some(b)) => b.median / a.median,
        _ => f64::NAN,
    };
    Ok(ConvergenceReport {
        gamma: opts.gamma,
        alpha: config.physics.alpha,
        policy: opts.policy,
        strictly_decreasing: decay_ratios.iter().all(|&r| r < 1.0),
        decay_ratios,
        last_first_ratio,
        coupling_audit_ok: audit,
        summaries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceScaling {
    pub epsilon: f64,
    pub expected_ratio: f64,
    /// Largest relative deviation over modes of the per-mode variance ratio.
    pub max_relative_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DampingReport {
    pub reference: ConvergenceReport,
    pub reduced: ConvergenceReport,
    /// `median(ε_last) / median(ε_first)` for the reduced-damping arm.
    pub reduced_ratio: f64,
    /// True when the reduced arm keeps at least half its error across the sweep.
    pub no_decay: bool,
    pub variance_scaling: Vec<VarianceScaling>,
}

/// Stationary variance ratio between damping `αε^{γ−1}` and `α`, per mode,
/// against the expected `ε^{−(γ−1)}`.
pub fn stationary_variance_scaling(config: &ExperimentConfig, gamma: f64) -> Result<Vec<VarianceScaling>> {
    let setup = Setup::new(config)?;
    let alpha = config.physics.alpha;
    config
        .physics
        .epsilons()
        .into_iter()
        .map(|eps| {
            let expected = eps.powf(-(gamma - 1.0));
            let mut dev = 0.0f64;
            for m in 0..setup.phi.mode_count() {
                let lam = setup.phi.lambda(m);
                if lam == 0.0 {
                    continue;
                }
                let k = setup.phi.wavenumber(m);
                let a = driver::lyapunov_covariance(alpha * eps.powf(gamma - 1.0), lam, k)?;
                let b = driver::lyapunov_covariance(alpha, lam, k)?;
                for (x, y) in [(a[0][0], b[0][0]), (a[1][1], b[1][1])] {
                    dev = dev.max((x / y / expected - 1.0).abs());
                }
            }
            Ok(VarianceScaling {
                epsilon: eps,
                expected_ratio: expected,
                max_relative_deviation: dev,
            })
        })
        .collect()
}

/// Side-by-side sweeps at `γ = 1` and `γ = 2`. The reduced arm keeps tripped
/// paths (trips are its expected signature) and logs them.
pub fn damping_exponent_experiment(config: &ExperimentConfig, stop: Option<&AtomicBool>) -> Result<DampingReport> {
    let reference = convergence_sweep(
        config,
        SweepOptions {
            gamma: 1.0,
            ..SweepOptions::from_config(config)
        },
        stop,
    )?;
    let reduced = convergence_sweep(
        config,
        SweepOptions {
            gamma: 2.0,
            policy: TripPolicy::Continue,
            collect_energies: false,
        },
        stop,
    )?;
    for s in &reduced.summaries {
        if s.trips > 0 {
            log::info!("gamma 2, eps {}: {} of {} paths tripped the monitor", s.epsilon, s.trips, s.paths);
        }
    }
    Ok(DampingReport {
        reduced_ratio: reduced.last_first_ratio,
        no_decay: reduced.last_first_ratio >= 0.5,
        variance_scaling: stationary_variance_scaling(config, 2.0)?,
        reference,
        reduced,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    pub x: f64,
    pub y: f64,
    pub k1_mc: f64,
    pub k1_analytic: f64,
    pub k1_stderr: f64,
    pub sym_mc: f64,
    pub k_analytic: f64,
    pub sym_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub samples: usize,
    pub probes: Vec<ProbeResult>,
    /// Largest `|MC − K₁ sum|` in standard errors.
    pub max_sigma_k1: f64,
    /// Largest `|MC − k|` in standard errors for the symmetrized covariance.
    pub max_sigma_sym: f64,
    /// Largest gap between the `K` double sum and the closed form `k`.
    pub max_double_sum_gap: f64,
    /// `max_x |k(x, x) + F(x)|` over the grid.
    pub max_diagonal_error: f64,
}

fn sigmas(mc: f64, exact: f64, se: f64) -> f64 {
    let d = (mc - exact).abs();
    if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Probe points spread over the central half of the domain.
pub fn probe_pairs(config: &ExperimentConfig) -> Vec<(f64, f64)> {
    let count = config.kernel.probes.max(1);
    let side = (count as f64).sqrt().ceil() as usize;
    let l = config.grid.domain_length;
    let at = |i: usize| -0.25 * l + 0.5 * l * (i as f64 + 0.37) / side as f64;
    (0..count).map(|n| (at(n / side), at((n * 7 + 3) % side))).collect()
}

/// Monte Carlo over exact stationary samples against the analytic kernels.
pub fn kernel_validation(config: &ExperimentConfig) -> Result<KernelReport> {
    let setup = Setup::new(config)?;
    let alpha = config.physics.alpha;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter("kernel validation needs positive damping".into()));
    }
    let drv = OuDriver::new(setup.phi.clone(), alpha)?;
    let probes = probe_pairs(config);
    let samples = config.kernel.samples;
    let chunk = 250usize;
    let chunks = samples.div_ceil(chunk);
    let spectral_at = |spec: &[Complex64], x: f64| -> f64 {
        // Trigonometric interpolation; the sampled fields are band-limited.
        let n = setup.grid.num_points() as f64;
        let k = setup.grid.wavenumbers();
        let x0 = setup.grid.origin();
        spec.iter()
            .zip(k)
            .map(|(c, &kk)| (c * Complex64::from_polar(1.0, kk * (x - x0))).re)
            .sum::<f64>()
            / n
    };
    // Per-probe sums of the two estimands and their squares.
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<[f64; 4]>> {
            let mut rng = ChaCha20Rng::seed_from_u64(config.mc.seed);
            rng.set_stream(0x6b65_726e_0000_0000 | c as u64);
            let mut acc = vec![[0.0; 4]; probes.len()];
            for _ in (c * chunk)..((c + 1) * chunk).min(samples) {
                let s = drv.sample_stationary(&mut rng, DriverMode::ExactGaussian)?;
                let lz = s.z.inverse_laplacian(ZeroModePolicy::Error)?;
                let mz = drv.minverse_z(&s)?;
                let (sz, slz, smz) = (s.z.spectrum(), lz.spectrum(), mz.spectrum());
                for (a, &(x, y)) in acc.iter_mut().zip(&probes) {
                    let zx = spectral_at(&sz, x);
                    let zy = spectral_at(&sz, y);
                    let v1 = zx * spectral_at(&slz, y);
                    let v2 = zx * spectral_at(&smz, y) + zy * spectral_at(&smz, x);
                    a[0] += v1;
                    a[1] += v1 * v1;
                    a[2] += v2;
                    a[3] += v2 * v2;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = samples as f64;
    let mut probes_out = Vec::with_capacity(probes.len());
    let (mut s1, mut s2, mut gap) = (0.0f64, 0.0f64, 0.0f64);
    for (j, &(x, y)) in probes.iter().enumerate() {
        let tot = sums.iter().fold([0.0; 4], |mut t, a| {
            for q in 0..4 {
                t[q] += a[j][q];
            }
            t
        });
        let mean1 = tot[0] / n;
        let mean2 = tot[2] / n;
        let se1 = ((tot[1] / n - mean1 * mean1).max(0.0) / (n - 1.0).max(1.0)).sqrt();
        let se2 = ((tot[3] / n - mean2 * mean2).max(0.0) / (n - 1.0).max(1.0)).sqrt();
        let k1 = driver::k1_double_sum(alpha, &setup.phi, x, y);
        let k = driver::kernel_k(&setup.phi, x, y);
        gap = gap.max((driver::k_double_sum(alpha, &setup.phi, x, y) - k).abs());
        s1 = s1.max(sigmas(mean1, k1, se1));
        s2 = s2.max(sigmas(mean2, k, se2));
        probes_out.push(ProbeResult {
            x,
            y,
            k1_mc: mean1,
            k1_analytic: k1,
            k1_stderr: se1,
            sym_mc: mean2,
            k_analytic: k,
            sym_stderr: se2,
        });
    }
    let f = driver::compute_f(&setup.phi);
    let diag = setup
        .grid
        .points()
        .iter()
        .zip(f.values())
        .map(|(&x, &fx)| (driver::kernel_k(&setup.phi, x, x) + fx).abs())
        .fold(0.0, f64::max);
    Ok(KernelReport {
        samples,
        probes: probes_out,
        max_sigma_k1: s1,
        max_sigma_sym: s2,
        max_double_sum_gap: gap,
        max_diagonal_error: diag,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftCheck {
    pub time: f64,
    /// `(E(u^ε_t, h) − (u₀, h)) / t`.
    pub finite_difference: f64,
    /// 95% half-width of the finite-difference estimate.
    pub ci_half_width: f64,
    /// `E (1/t) ∫₀ᵗ drift(u_s, h) ds` along the coupled limit path.
    pub generator: f64,
    /// The generator mean lies in the band around the finite difference.
    pub within: bool,
    /// Mean of the per-path differences and its 95% half-width. The coupling
    /// removes most of the noise, so this resolves the O(ε) bias at finite ε.
    pub paired_mismatch: f64,
    pub paired_ci_half_width: f64,
    pub paired_within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceCheck {
    pub time: f64,
    pub dt: f64,
    pub sample_variance: f64,
    /// `E ∫₀ᵗ quad_var(u_s, h) ds`.
    pub predicted: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratorReport {
    pub epsilon: f64,
    pub paths: usize,
    pub used: usize,
    pub excluded: Vec<u64>,
    pub drift: DriftCheck,
    pub variance: VarianceCheck,
}

/// Smooth compactly supported bump `(1 + i/2) exp(1 − 1/(1 − (x/r)²))`
/// centred on the pulse.
pub fn bump(setup: &Setup) -> ComplexField {
    let r = setup.config.generator.bump_radius;
    let c = setup.config.initial.center();
    ComplexField::from_fn(setup.grid.clone(), move |x| {
        let s = (x - c) / r;
        let v = if s.abs() < 1.0 { (1.0 - 1.0 / (1.0 - s * s)).exp() } else { 0.0 };
        Complex64::new(v, 0.5 * v)
    })
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var)
}

/// Martingale-problem check of the limit generator.
///
/// Drift: the finite difference of `E(u^ε_t, h)` with its 95% band, against
/// the time-averaged limit drift along the coupled path; per-path paired
/// differences are reported as well.
/// Variance: the sample variance of `(u_t, h)` under the limit equation at a
/// short time against the integrated quadratic variation, with a
/// chi-square-style band `s²(1 ± 1.96 √(2/(n−1)))`.
pub fn generator_validation(config: &ExperimentConfig, stop: Option<&AtomicBool>) -> Result<GeneratorReport> {
    let setup = Setup::new(config)?;
    let g = &config.generator;
    let eps = g.epsilon;
    let sim = setup.zakharov(eps, config.physics.gamma)?;
    let h = bump(&setup);
    let f = setup.nls.f().clone();
    let base = diagnostics::real_inner(&setup.u0, &h)?;
    let (_, dt) = config.stepping.resolve(eps);
    let steps = (g.drift_time / dt).round().max(1.0) as usize;
    let dt = g.drift_time / steps as f64;

    let drift_paths = (0..g.paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Option<(f64, f64)>> {
            if stop.is_some_and(|s| s.load(Ordering::Relaxed)) {
                return Err(Error::Interrupted);
            }
            let mut cp = CoupledPath::new(&setup, &sim, p, dt)?;
            let gen = |u: &ComplexField| diagnostics::limit_generator(u, &h, &setup.phi, &f).map(|v| v.drift);
            let mut integral = 0.5 * gen(&cp.nls.u)?;
            for n in 1..=steps {
                if cp.step()? && config.monitor.policy == TripPolicy::Halt {
                    return Ok(None);
                }
                let w = if n == steps { 0.5 } else { 1.0 };
                integral += w * gen(&cp.nls.u)?;
            }
            let t = cp.zakharov.time;
            let fd = (diagnostics::real_inner(&cp.zakharov_u()?, &h)? - base) / t;
            Ok(Some((fd, integral * dt / t)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut excluded = Vec::new();
    let (mut fds, mut gens, mut diffs) = (Vec::new(), Vec::new(), Vec::new());
    for (p, r) in drift_paths.iter().enumerate() {
        match r {
            Some((a, b)) => {
                fds.push(*a);
                gens.push(*b);
                diffs.push(a - b);
            }
            None => excluded.push(p as u64),
        }
    }
    if diffs.len() < 2 {
        return Err(Error::InvalidParameter("too few paths survived the monitor".into()));
    }
    let used = diffs.len();
    if used < 30 {
        log::warn!("generator check on {used} paths; confidence band is wide");
    }
    let band = |var: f64| 1.96 * (var / used as f64).sqrt();
    let (fd, var_fd) = mean_var(&fds);
    let generator = mean_var(&gens).0;
    let (mismatch, var_d) = mean_var(&diffs);
    let drift = DriftCheck {
        time: g.drift_time,
        finite_difference: fd,
        ci_half_width: band(var_fd),
        generator,
        within: (fd - generator).abs() <= band(var_fd),
        paired_mismatch: mismatch,
        paired_ci_half_width: band(var_d),
        paired_within: mismatch.abs() <= band(var_d),
    };

    let vsteps = (g.variance_time / g.variance_dt).round().max(1.0) as usize;
    let vdt = g.variance_time / vsteps as f64;
    let substeps = config.driver.substeps;
    let var_paths = (0..g.paths as u64)
        .into_par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let mut stream = IncrementStream::new(config.mc.seed ^ 0x7661_7269, p, setup.phi.mode_count(), vdt / substeps as f64);
            let mut s = setup.nls.initial_state(setup.u0.clone())?;
            let qv = |u: &ComplexField| diagnostics::limit_generator(u, &h, &setup.phi, &f).map(|v| v.quad_var);
            let mut integral = 0.5 * qv(&s.u)?;
            for n in 1..=vsteps {
                let block = stream.next_block(substeps)?;
                s = setup.nls.stratonovich_step(&s, vdt, &block)?;
                integral += if n == vsteps { 0.5 } else { 1.0 } * qv(&s.u)?;
            }
            Ok((diagnostics::real_inner(&s.u, &h)?, integral * vdt))
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = var_paths.iter().map(|v| v.0).collect();
    let predicted = var_paths.iter().map(|v| v.1).sum::<f64>() / var_paths.len() as f64;
    let (_, s2) = mean_var(&values);
    let w = 1.96 * (2.0 / (values.len() as f64 - 1.0).max(1.0)).sqrt();
    let (lo, hi) = (s2 * (1.0 - w), s2 * (1.0 + w));
    let variance = VarianceCheck {
        time: g.variance_time,
        dt: vdt,
        sample_variance: s2,
        predicted,
        ci_low: lo,
        ci_high: hi,
        within: lo <= predicted && predicted <= hi,
    };
    Ok(GeneratorReport {
        epsilon: eps,
        paths: g.paths,
        used,
        excluded,
        drift,
        variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseProfile;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.grid.num_points = 64;
        c.mc.paths = 2;
        c.physics.epsilon_list = Some(vec![0.4, 0.2]);
        c.stepping.final_time = 0.1;
        c
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn sweep_is_deterministic_and_audited() {
        let c = small();
        let a = convergence_experiment(&c, None).unwrap();
        let b = convergence_experiment(&c, None).unwrap();
        assert!(a.coupling_audit_ok);
        for (x, y) in a.summaries.iter().zip(&b.summaries) {
            assert_eq!(x.median.to_bits(), y.median.to_bits());
        }
    }

    #[test]
    fn reference_arm_equals_plain_sweep() {
        let c = small();
        let a = convergence_experiment(&c, None).unwrap();
        let d = damping_exponent_experiment(&c, None).unwrap();
        assert_eq!(a, d.reference);
        for v in &d.variance_scaling {
            assert!(v.max_relative_deviation < 1e-10);
        }
    }

    #[test]
    fn noiseless_kernels_vanish() {
        let mut c = small();
        c.noise = NoiseProfile::zero();
        c.kernel.samples = 10;
        let r = kernel_validation(&c).unwrap();
        assert_eq!(r.max_sigma_k1, 0.0);
        assert_eq!(r.max_sigma_sym, 0.0);
        assert_eq!(r.max_diagonal_error, 0.0);
        assert!(r.probes.iter().all(|p| p.k1_mc == 0.0 && p.sym_mc == 0.0));
    }

    #[test]
    fn kernel_validation_rejects_zero_damping() {
        let mut c = small();
        c.physics.alpha = 0.0;
        assert!(kernel_validation(&c).is_err());
    }
}
