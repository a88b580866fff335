//! Split-step integrator for the translated stochastic Zakharov system
//! `i∂ₜu + ∂ₓ²u = (m + ε^{−1/2} z^ε) u`, `ε²∂ₜ²m + αε^γ ∂ₜm = ∂ₓ²(m + |u|²)`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::driver::{DriverState, DriverStep, OuDriver};
use crate::error::{Error, Result};
use crate::noise::NoiseOperator;
use crate::spectral::{ComplexField, RealField, SpectralGrid};
use crate::wave::SemigroupCache;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    /// `A sech(A(x − x₀)) e^{ivx}`.
    Sech {
        amplitude: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// `A exp(−(x − x₀)²/(2σ²))`.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
}

impl InitialProfile {
    pub fn center(&self) -> f64 {
        match *self {
            Self::Sech { center, .. } | Self::Gaussian { center, .. } => center,
        }
    }

    fn value(&self, x: f64) -> Complex64 {
        match *self {
            Self::Sech {
                amplitude,
                center,
                velocity,
            } => {
                let r = amplitude / (amplitude * (x - center)).cosh();
                Complex64::from_polar(r, velocity * x)
            }
            Self::Gaussian {
                amplitude,
                width,
                center,
            } => Complex64::new(amplitude * (-(x - center).powi(2) / (2.0 * width * width)).exp(), 0.0),
        }
    }
}

/// Largest `|u|` on the outer 5% band at each end of the domain, relative to
/// `max |u|`; zero for the zero field.
pub fn boundary_amplitude(u: &ComplexField) -> f64 {
    let values = u.physical();
    let n = values.len();
    let band = (n / 20).max(1);
    let peak = values.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let edge = values[..band]
        .iter()
        .chain(&values[n - band..])
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    edge / peak
}

/// Profiles whose edge amplitude exceeds this are rejected.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// `(u₀, m₀, m₁)` with `m₀ = −|u₀|²` made mean-zero and `m₁ = 0`.
pub fn initial_data(grid: &Arc<SpectralGrid>, profile: &InitialProfile) -> Result<(ComplexField, RealField, RealField)> {
    let l = grid.length();
    match *profile {
        InitialProfile::Sech { amplitude, .. } if !(amplitude >= 0.0) => {
            return Err(Error::InvalidParameter(format!("amplitude must be nonnegative, got {amplitude}")))
        }
        InitialProfile::Gaussian { width, .. } if !(width > 0.0) => {
            return Err(Error::InvalidParameter(format!("gaussian width must be positive, got {width}")))
        }
        _ => {}
    }
    // Sum of the nearest periodic images.
    let u0 = ComplexField::from_fn(grid.clone(), |x| {
        (-2..=2).map(|p| profile.value(x + p as f64 * l)).sum::<Complex64>()
    });
    let edge = boundary_amplitude(&u0);
    if edge > BOUNDARY_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "initial profile reaches the domain edge (relative amplitude {edge:.2e})"
        )));
    }
    let m0 = u0.abs_squared().scaled(-1.0).mean_zero();
    let m1 = RealField::zeros(grid.clone());
    Ok((u0, m0, m1))
}

#[derive(Clone, Debug)]
pub struct ZakharovState {
    pub u: ComplexField,
    pub m: RealField,
    /// `∂ₜm` in physical time.
    pub mu: RealField,
    pub time: f64,
    pub driver: DriverState,
    pub epsilon: f64,
    pub alpha: f64,
}

impl ZakharovState {
    pub fn mass(&self) -> f64 {
        crate::diagnostics::mass(&self.u)
    }
}

pub struct ZakharovSim {
    grid: Arc<SpectralGrid>,
    driver: Arc<OuDriver>,
    epsilon: f64,
    alpha: f64,
    gamma: f64,
    wave: RwLock<HashMap<u64, Arc<SemigroupCache>>>,
}

impl std::fmt::Debug for ZakharovSim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZakharovSim")
            .field("epsilon", &self.epsilon)
            .field("alpha", &self.alpha)
            .field("gamma", &self.gamma)
            .finish()
    }
}

impl ZakharovSim {
    /// The driver and the wave step both see the damping `α ε^{γ−1}` in
    /// the fast time `τ = t/ε`.
    pub fn new(phi: Arc<NoiseOperator>, epsilon: f64, alpha: f64, gamma: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("damping exponent must be at least 1, got {gamma}")));
        }
        let effective = alpha * epsilon.powf(gamma - 1.0);
        let grid = phi.grid().clone();
        Ok(Self {
            grid,
            driver: Arc::new(OuDriver::new(phi, effective)?),
            epsilon,
            alpha,
            gamma,
            wave: RwLock::new(HashMap::new()),
        })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn driver(&self) -> &Arc<OuDriver> {
        &self.driver
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn effective_damping(&self) -> f64 {
        self.driver.alpha()
    }

    pub fn initial_state(
        &self,
        u0: ComplexField,
        m0: RealField,
        m1: RealField,
        driver: DriverState,
    ) -> Result<ZakharovState> {
        for g in [u0.grid(), m0.grid(), m1.grid(), driver.grid()] {
            if !g.same_as(&self.grid) {
                return Err(Error::GridMismatch);
            }
        }
        Ok(ZakharovState {
            u: u0,
            m: m0.mean_zero(),
            mu: m1.mean_zero(),
            time: 0.0,
            driver,
            epsilon: self.epsilon,
            alpha: self.alpha,
        })
    }

    fn wave_cache(&self, tau: f64) -> Result<Arc<SemigroupCache>> {
        let key = tau.to_bits();
        if let Some(c) = self.wave.read().expect("wave cache").get(&key) {
            return Ok(c.clone());
        }
        let c = Arc::new(SemigroupCache::new(&self.grid, self.effective_damping(), tau)?);
        self.wave.write().expect("wave cache").insert(key, c.clone());
        Ok(c)
    }

    fn check(&self, state: &ZakharovState, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {dt}")));
        }
        if !state.u.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// One step with the driver advanced by exponential Euler–Maruyama on
    /// the supplied substep increments.
    pub fn strang_step(&self, state: &ZakharovState, dt: f64, increments: &[Vec<f64>]) -> Result<ZakharovState> {
        self.check(state, dt)?;
        let step = self.driver.step_rescaled_em(self.epsilon, &state.driver, dt, increments)?;
        self.compose(state, dt, step)
    }

    /// One step with the driver advanced by its exact Gaussian transition.
    pub fn strang_step_exact<R: Rng + ?Sized>(&self, state: &ZakharovState, dt: f64, rng: &mut R) -> Result<ZakharovState> {
        self.check(state, dt)?;
        let step = self.driver.step_rescaled_exact(self.epsilon, &state.driver, dt, rng)?;
        self.compose(state, dt, step)
    }

    /// Half free flow, exact potential sub-flow, half free flow. Within the
    /// middle sub-flow `|u|` is constant, so the wave equation with frozen
    /// source and its time integral are solved exactly.
    fn compose(&self, state: &ZakharovState, dt: f64, step: DriverStep) -> Result<ZakharovState> {
        let eps = self.epsilon;
        let k = self.grid.wavenumbers();
        let mut u = state.u.spectrum();
        free_flow(&mut u, k, 0.5 * dt);
        self.grid.inverse(&mut u);

        let tau = dt / eps;
        let cache = self.wave_cache(tau)?;
        let alpha = self.effective_damping();
        let mut g: Vec<Complex64> = u.iter().map(|c| Complex64::new(c.norm_sqr(), 0.0)).collect();
        self.grid.forward(&mut g);
        g[0] = Complex64::new(0.0, 0.0);
        let n0 = state.m.spectrum();
        let mu0: Vec<Complex64> = state.mu.spectrum().iter().map(|c| c * eps).collect();
        let mut n1: Vec<Complex64> = n0.iter().zip(&g).map(|(a, s)| a + s).collect();
        let mut mu1 = mu0.clone();
        cache.apply_spectral(&mut n1, &mut mu1);
        for (a, s) in n1.iter_mut().zip(&g) {
            *a -= s;
        }
        let mut integral = vec![Complex64::new(0.0, 0.0); k.len()];
        for j in 1..k.len() {
            let k2 = k[j] * k[j];
            integral[j] = -((mu1[j] - mu0[j]) + alpha * (n1[j] - n0[j])) / k2 - g[j] * tau;
        }
        integral[0] = if alpha > 0.0 {
            let m12 = cache.matrix(0)[0][1];
            n0[0] * tau + mu0[0] * (tau - m12) / alpha
        } else {
            n0[0] * tau + mu0[0] * tau * tau / 2.0
        };
        let mut phase: Vec<Complex64> = integral
            .iter()
            .map(|c| c * eps)
            .collect();
        self.grid.inverse(&mut phase);
        for ((c, p), q) in u.iter_mut().zip(&phase).zip(step.potential_integral.values()) {
            *c *= Complex64::from_polar(1.0, -(p.re + q));
        }

        self.grid.forward(&mut u);
        free_flow(&mut u, k, 0.5 * dt);
        self.grid.inverse(&mut u);

        let time = state.time + dt;
        if let Some(bad) = u.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::BlowUp {
                time,
                detail: format!(
                    "non-finite u at grid index {bad}; mass before step {:.6e}",
                    state.mass()
                ),
            });
        }
        let mu_phys: Vec<Complex64> = mu1.iter().map(|c| c / eps).collect();
        Ok(ZakharovState {
            u: ComplexField::new(self.grid.clone(), u)?,
            m: RealField::from_spectrum(self.grid.clone(), n1)?,
            mu: RealField::from_spectrum(self.grid.clone(), mu_phys)?,
            time,
            driver: step.state,
            epsilon: eps,
            alpha: self.alpha,
        })
    }
}

/// `e^{i h ∂ₓ²}` on a spectrum.
pub fn free_flow(spectrum: &mut [Complex64], wavenumbers: &[f64], h: f64) {
    for (c, &k) in spectrum.iter_mut().zip(wavenumbers) {
        *c *= Complex64::from_polar(1.0, -k * k * h);
    }
}
