//! Direct and fitted-constant checks of the energy inequalities on random
//! states and along simulated ensembles.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use zakharov_sde::calibration::fit_ratio;
use zakharov_sde::config::ExperimentConfig;
use zakharov_sde::diagnostics;
use zakharov_sde::driver::{DriverMode, DriverState, OuDriver};
use zakharov_sde::noise::{make_phi, NoiseOperator, NoiseProfile};
use zakharov_sde::runner::Setup;
use zakharov_sde::spectral::{ComplexField, RealField, SpectralGrid};

const L: f64 = 16.0 * std::f64::consts::PI;

fn phi(n: usize) -> Arc<NoiseOperator> {
    let g = SpectralGrid::new(n, L).unwrap();
    Arc::new(make_phi(g, &NoiseProfile { min_wavenumber: 0.5, ..NoiseProfile::algebraic(3.0) }).unwrap())
}

struct RandomState {
    u: ComplexField,
    m: RealField,
    mu: RealField,
    driver: DriverState,
    eps: f64,
}

/// Wave packets for `u`, a few periodic modes for `m` and `μ`, and a scaled
/// stationary driver sample.
fn random_state(drv: &OuDriver, rng: &mut ChaCha20Rng) -> RandomState {
    let g = drv.grid().clone();
    let packets: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| (rng.gen_range(0.2..2.0), rng.gen_range(-10.0..10.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.7..2.0)))
        .collect();
    let u = ComplexField::from_fn(g.clone(), |x| {
        packets
            .iter()
            .map(|&(a, c, v, w)| Complex64::from_polar(a * (-(x - c).powi(2) / (w * w)).exp(), v * x))
            .sum()
    });
    let modes = |rng: &mut ChaCha20Rng, scale: f64| -> Vec<(f64, f64, f64)> {
        (0..4)
            .map(|_| (scale * rng.gen_range(-1.0..1.0), 2.0 * std::f64::consts::PI * rng.gen_range(1..12) as f64 / L, rng.gen_range(0.0..6.3)))
            .collect()
    };
    let mm = modes(rng, 1.0);
    let mmu = modes(rng, 3.0);
    let wave = |coefs: &[(f64, f64, f64)], x: f64| coefs.iter().map(|&(a, k, p)| a * (k * x + p).cos()).sum::<f64>();
    let m = RealField::from_fn(g.clone(), |x| wave(&mm, x));
    let mu = RealField::from_fn(g.clone(), |x| wave(&mmu, x));
    let s = drv.sample_stationary(rng, DriverMode::ExactGaussian).unwrap();
    let a = rng.gen_range(0.1..3.0);
    let driver = DriverState {
        z: s.z.scaled(a),
        zeta: s.zeta.scaled(a),
        ..s
    };
    RandomState {
        u,
        m,
        mu,
        driver,
        eps: rng.gen_range(0.01..1.0),
    }
}

fn split(pairs: &[(f64, f64)]) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let (a, b) = pairs.split_at(pairs.len() / 2);
    (a.to_vec(), b.to_vec())
}

#[test]
fn energy_gap_obeys_the_interpolation_bound() {
    let drv = OuDriver::new(phi(128), 1.0).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for _ in 0..100 {
        let s = random_state(&drv, &mut rng);
        let h = diagnostics::hamiltonian(&s.u, &s.m, &s.mu, s.eps).unwrap();
        let k = diagnostics::quadratic_energy(&s.u, &s.m, &s.mu, s.eps).unwrap();
        let bound = diagnostics::energy_gap_bound(&s.u, &s.m).unwrap();
        assert!((h - k).abs() <= bound, "|H − K| = {} above {bound}", (h - k).abs());
    }
}

#[test]
fn first_corrector_obeys_its_bound() {
    let alpha = 1.5;
    let drv = OuDriver::new(phi(128), alpha).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for _ in 0..100 {
        let s = random_state(&drv, &mut rng);
        let k = diagnostics::quadratic_energy(&s.u, &s.m, &s.mu, s.eps).unwrap();
        let h1 = diagnostics::corrector_h1(&s.u, &s.driver, alpha).unwrap();
        let bound = diagnostics::h1_bound(&s.u, k, &s.driver, alpha, s.eps).unwrap();
        assert!(s.eps.sqrt() * h1.abs() <= bound * (1.0 + 1e-12), "√ε|H₁| = {} above {bound}", s.eps.sqrt() * h1.abs());
    }
}

#[test]
fn second_corrector_fits_one_constant() {
    let drv = OuDriver::new(phi(64), 1.0).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let pairs: Vec<(f64, f64)> = (0..100)
        .map(|_| {
            let s = random_state(&drv, &mut rng);
            let lhs = s.eps * diagnostics::corrector_h2(&s.u, &s.driver, &drv).unwrap().abs();
            (lhs, diagnostics::h2_bound_shape(&s.u, &s.driver, s.eps).unwrap())
        })
        .collect();
    let (cal, test) = split(&pairs);
    let fit = fit_ratio(&cal, &test);
    assert!(fit.holds, "{fit:?}");
}

#[test]
fn martingale_increment_variance_fits_one_constant() {
    // X is linear in the increments, so its conditional variance per unit
    // time is the sum of squares of its values on unit increments.
    let drv = OuDriver::new(phi(128), 1.0).unwrap();
    let p = drv.phi().clone();
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let pairs: Vec<(f64, f64)> = (0..100)
        .map(|_| {
            let s = random_state(&drv, &mut rng);
            let rate: f64 = (0..p.mode_count())
                .map(|m| {
                    let mut e = vec![0.0; p.mode_count()];
                    e[m] = 1.0;
                    diagnostics::martingale_x_increment(&s.u, &p, &e).unwrap().powi(2)
                })
                .sum();
            let k = diagnostics::quadratic_energy(&s.u, &s.m, &s.mu, s.eps).unwrap();
            (rate, k * diagnostics::mass(&s.u))
        })
        .collect();
    let (cal, test) = split(&pairs);
    let fit = fit_ratio(&cal, &test);
    assert!(fit.holds, "{fit:?}");
}

/// Ensemble means `(E H^ε, E K, E K²)` at each saved time, over paths that
/// never trip the monitor.
fn ensemble(setup: &Setup, eps: f64, paths: std::ops::Range<u64>) -> (f64, Vec<(f64, f64, f64)>) {
    let sim = setup.zakharov(eps, 1.0).unwrap();
    let (steps, dt) = setup.config.stepping.resolve(eps);
    let every = 4;
    let mut sums = vec![(0.0, 0.0, 0.0); steps / every + 1];
    let mut used = 0.0;
    'path: for path in paths {
        let d0 = setup.initial_driver(sim.driver(), path, DriverMode::CoupledEm).unwrap();
        let mut s = sim.initial_state(setup.u0.clone(), setup.m0.clone(), setup.m1.clone(), d0).unwrap();
        let mut monitor = setup.monitor(eps).unwrap();
        let mut stream = setup.stream(path, dt);
        let mut rows = Vec::new();
        for n in 0..=steps {
            if n > 0 {
                s = sim.strang_step(&s, dt, &stream.next_block(setup.config.driver.substeps).unwrap()).unwrap();
            }
            if monitor.observe(&s.driver).unwrap() {
                continue 'path;
            }
            if n % every == 0 {
                let r = diagnostics::modified_energy(&s, sim.driver(), None).unwrap();
                rows.push((r.h_eps, r.quadratic_energy, r.quadratic_energy.powi(2)));
            }
        }
        used += 1.0;
        for (acc, r) in sums.iter_mut().zip(rows) {
            acc.0 += r.0;
            acc.1 += r.1;
            acc.2 += r.2;
        }
    }
    assert!(used > 0.0);
    (dt * every as f64, sums.into_iter().map(|(a, b, c)| (a / used, b / used, c / used)).collect())
}

/// `(max(0, ∂ₜE H^ε), ε E K² + E K + 1)` at each interval: one fitted
/// constant then bounds the drift by `ε E K² + B E K + C` with `B = C`.
fn drift_pairs(setup: &Setup, eps: f64, paths: std::ops::Range<u64>) -> Vec<(f64, f64)> {
    let (h, means) = ensemble(setup, eps, paths);
    means
        .windows(2)
        .map(|w| {
            let drift = (w[1].0 - w[0].0) / h;
            let (k, k2) = (0.5 * (w[0].1 + w[1].1), 0.5 * (w[0].2 + w[1].2));
            (drift.max(0.0), eps * k2 + k + 1.0)
        })
        .collect()
}

#[test]
fn ensemble_energy_drift_obeys_the_polynomial_bound() {
    let mut cfg = ExperimentConfig::default();
    cfg.grid.num_points = 128;
    cfg.stepping.final_time = 0.5;
    let setup = Setup::new(&cfg).unwrap();
    let mut cal = Vec::new();
    let mut test = Vec::new();
    for eps in [0.4, 0.2, 0.1] {
        cal.extend(drift_pairs(&setup, eps, 0..12));
        test.extend(drift_pairs(&setup, eps, 12..24));
    }
    let fit = fit_ratio(&cal, &test);
    assert!(fit.calibration_max > 0.0, "no positive drift sampled");
    assert!(fit.holds, "{fit:?}");
}
