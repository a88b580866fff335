//! The limit equation `du = (i∂ₓ²u + i|u|²u) dt + i u (∂ₓ²)⁻¹φ∘dW`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::driver::compute_f;
use crate::error::{Error, Result};
use crate::noise::NoiseOperator;
use crate::spectral::{ComplexField, RealField, SpectralGrid};
use crate::stream::sum_increments;
use crate::zakharov::free_flow;

#[derive(Clone, Debug)]
pub struct NlsState {
    pub u: ComplexField,
    pub time: f64,
    pub f: Arc<RealField>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NlsScheme {
    Stratonovich,
    ItoEm,
}

#[derive(Debug)]
pub struct NlsSim {
    grid: Arc<SpectralGrid>,
    phi: Arc<NoiseOperator>,
    f: Arc<RealField>,
}

impl NlsSim {
    pub fn new(phi: Arc<NoiseOperator>) -> Self {
        let f = Arc::new(compute_f(&phi));
        Self {
            grid: phi.grid().clone(),
            phi,
            f,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn phi(&self) -> &Arc<NoiseOperator> {
        &self.phi
    }

    pub fn f(&self) -> &Arc<RealField> {
        &self.f
    }

    pub fn initial_state(&self, u0: ComplexField) -> Result<NlsState> {
        if !u0.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(NlsState {
            u: u0,
            time: 0.0,
            f: self.f.clone(),
        })
    }

    /// `B = (∂ₓ²)⁻¹ φ ΔW` for the summed increment of the block.
    fn noise_potential(&self, increments: &[Vec<f64>]) -> Result<Vec<f64>> {
        if increments.is_empty() {
            return Err(Error::LengthMismatch { expected: 1, got: 0 });
        }
        for inc in increments {
            if inc.len() != self.phi.mode_count() {
                return Err(Error::LengthMismatch {
                    expected: self.phi.mode_count(),
                    got: inc.len(),
                });
            }
        }
        let mut spec = self.phi.phi_spectrum(&sum_increments(increments))?;
        let k = self.grid.wavenumbers();
        spec[0] = Complex64::new(0.0, 0.0);
        for j in 1..spec.len() {
            spec[j] /= -k[j] * k[j];
        }
        self.grid.inverse(&mut spec);
        Ok(spec.iter().map(|c| c.re).collect())
    }

    fn check(&self, state: &NlsState, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {dt}")));
        }
        if !state.u.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn finish(&self, state: &NlsState, dt: f64, u: Vec<Complex64>) -> Result<NlsState> {
        let time = state.time + dt;
        if u.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::BlowUp {
                time,
                detail: "non-finite NLS field".into(),
            });
        }
        Ok(NlsState {
            u: ComplexField::new(self.grid.clone(), u)?,
            time,
            f: state.f.clone(),
        })
    }

    /// Half free flow, exact cubic phase, exact noise phase `e^{iB}`, half
    /// free flow. The unimodular noise phase is the Stratonovich flow, so
    /// no `−½Fu` correction appears.
    pub fn stratonovich_step(&self, state: &NlsState, dt: f64, increments: &[Vec<f64>]) -> Result<NlsState> {
        self.check(state, dt)?;
        let b = self.noise_potential(increments)?;
        let k = self.grid.wavenumbers();
        let mut u = state.u.spectrum();
        free_flow(&mut u, k, 0.5 * dt);
        self.grid.inverse(&mut u);
        for (c, bb) in u.iter_mut().zip(&b) {
            *c *= Complex64::from_polar(1.0, c.norm_sqr() * dt + bb);
        }
        self.grid.forward(&mut u);
        free_flow(&mut u, k, 0.5 * dt);
        self.grid.inverse(&mut u);
        self.finish(state, dt, u)
    }

    /// `e^{iΔt∂ₓ²}[u + Δt(i|u|²u − ½Fu) + i u B]`.
    pub fn ito_em_step(&self, state: &NlsState, dt: f64, increments: &[Vec<f64>]) -> Result<NlsState> {
        self.check(state, dt)?;
        let b = self.noise_potential(increments)?;
        let i = Complex64::i();
        let mut u: Vec<Complex64> = state
            .u
            .physical()
            .iter()
            .zip(&b)
            .zip(state.f.values())
            .map(|((&c, &bb), &f)| c + dt * (i * c.norm_sqr() * c - 0.5 * f * c) + i * c * bb)
            .collect();
        self.grid.forward(&mut u);
        free_flow(&mut u, self.grid.wavenumbers(), dt);
        self.grid.inverse(&mut u);
        self.finish(state, dt, u)
    }

    pub fn step(&self, scheme: NlsScheme, state: &NlsState, dt: f64, increments: &[Vec<f64>]) -> Result<NlsState> {
        match scheme {
            NlsScheme::Stratonovich => self.stratonovich_step(state, dt, increments),
            NlsScheme::ItoEm => self.ito_em_step(state, dt, increments),
        }
    }
}
