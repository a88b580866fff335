//! Energies, correctors, the modified energy and the limit generator.

use serde::Serialize;

use crate::driver::{DriverState, OuDriver};
use crate::error::{Error, Result};
use crate::noise::NoiseOperator;
use crate::spectral::{dealiased_inner, ComplexField, NormKind, RealField, ZeroModePolicy};
use crate::zakharov::ZakharovState;

pub fn mass(u: &ComplexField) -> f64 {
    u.grid().dx() * u.physical().iter().map(|c| c.norm_sqr()).sum::<f64>()
}

/// `V = −∂ₓ⁻¹ μ`.
pub fn v_field(mu: &RealField) -> Result<RealField> {
    Ok(mu.antiderivative(ZeroModePolicy::Error)?.scaled(-1.0))
}

fn gradient_energy(u: &ComplexField) -> Result<f64> {
    let h1 = u.sobolev_norm(1.0, NormKind::Homogeneous)?;
    Ok(h1 * h1)
}

fn l2_squared(f: &RealField) -> f64 {
    f.grid().dx() * f.values().iter().map(|v| v * v).sum::<f64>()
}

/// `‖∂ₓu‖² + ½(‖m‖² + ‖εV‖²) + ∫ m|u|²`.
pub fn hamiltonian(u: &ComplexField, m: &RealField, mu: &RealField, eps: f64) -> Result<f64> {
    let v = v_field(mu)?;
    let coupling = dealiased_inner(m, &u.dealiased().abs_squared())?;
    Ok(gradient_energy(u)? + 0.5 * (l2_squared(m) + eps * eps * l2_squared(&v)) + coupling)
}

/// `‖∂ₓu‖² + ½‖m‖² + ½‖εV‖²`.
pub fn quadratic_energy(u: &ComplexField, m: &RealField, mu: &RealField, eps: f64) -> Result<f64> {
    let v = v_field(mu)?;
    Ok(gradient_energy(u)? + 0.5 * l2_squared(m) + 0.5 * eps * eps * l2_squared(&v))
}

/// `Re(i u ∂ₓū)` built from the 2/3-truncated field.
fn current_density(u: &ComplexField) -> Result<RealField> {
    let ud = u.dealiased();
    let du = ud.apply_symbol(crate::spectral::symbols::derivative, ZeroModePolicy::Identity)?;
    let values = ud
        .physical()
        .iter()
        .zip(du.physical())
        .map(|(a, b)| (num_complex::Complex64::i() * a * b.conj()).re)
        .collect();
    RealField::new(u.grid().clone(), values)
}

/// `2 Re ∫ i u ∂ₓū (∂ₓ⁻¹ζ + α ∂ₓ⁻¹z) dx`.
pub fn corrector_h1(u: &ComplexField, driver: &DriverState, alpha: f64) -> Result<f64> {
    if driver.is_zero() {
        return Ok(0.0);
    }
    let w = driver
        .zeta
        .antiderivative(ZeroModePolicy::Error)?
        .add(&driver.z.antiderivative(ZeroModePolicy::Error)?.scaled(alpha))?;
    Ok(2.0 * dealiased_inner(&current_density(u)?, &w)?)
}

/// `2 ∫ |u|² ℳ⁻¹(∂ₓz ∂ₓℳ⁻¹z − E_ν[…]) dx`.
pub fn corrector_h2(u: &ComplexField, state: &DriverState, driver: &OuDriver) -> Result<f64> {
    if driver.phi().is_zero() && state.is_zero() {
        return Ok(0.0);
    }
    let g = driver.minverse_quadratic(state, 1)?;
    Ok(2.0 * dealiased_inner(&u.dealiased().abs_squared(), &g)?)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct EnergyReport {
    pub time: f64,
    pub mass: f64,
    pub hamiltonian: f64,
    pub quadratic_energy: f64,
    pub h1: f64,
    pub h2: f64,
    pub h_eps: f64,
    pub v_norm: f64,
    /// `Some(holds)` when a sandwich constant was supplied.
    pub sandwich: Option<bool>,
}

impl EnergyReport {
    pub fn assemble(time: f64, mass: f64, h: f64, k: f64, h1: f64, h2: f64, v_norm: f64, eps: f64) -> Self {
        Self {
            time,
            mass,
            hamiltonian: h,
            quadratic_energy: k,
            h1,
            h2,
            h_eps: h + eps.sqrt() * h1 + eps * h2,
            v_norm,
            sandwich: None,
        }
    }
}

/// `K/4 − C ≤ H^ε ≤ 3K + C`.
pub fn sandwich_holds(h_eps: f64, k: f64, c: f64) -> bool {
    0.25 * k - c <= h_eps && h_eps <= 3.0 * k + c
}

/// Smallest `C` making the sandwich hold for one sample.
pub fn sandwich_violation(h_eps: f64, k: f64) -> f64 {
    (0.25 * k - h_eps).max(h_eps - 3.0 * k).max(0.0)
}

pub fn modified_energy(state: &ZakharovState, driver: &OuDriver, sandwich_c: Option<f64>) -> Result<EnergyReport> {
    let eps = state.epsilon;
    let h = hamiltonian(&state.u, &state.m, &state.mu, eps)?;
    let k = quadratic_energy(&state.u, &state.m, &state.mu, eps)?;
    let h1 = corrector_h1(&state.u, &state.driver, driver.alpha())?;
    let h2 = corrector_h2(&state.u, &state.driver, driver)?;
    let v_norm = l2_squared(&v_field(&state.mu)?).sqrt();
    let mut report = EnergyReport::assemble(state.time, mass(&state.u), h, k, h1, h2, v_norm, eps);
    report.sandwich = sandwich_c.map(|c| sandwich_holds(report.h_eps, k, c));
    Ok(report)
}

/// `2 Re ∫ i u ∂ₓū ∂ₓ⁻¹(φ ΔW) dx`.
pub fn martingale_x_increment(u: &ComplexField, phi: &NoiseOperator, increments: &[f64]) -> Result<f64> {
    if increments.len() != phi.mode_count() {
        return Err(Error::LengthMismatch {
            expected: phi.mode_count(),
            got: increments.len(),
        });
    }
    let w = phi.apply_phi(increments)?.antiderivative(ZeroModePolicy::Error)?;
    Ok(2.0 * dealiased_inner(&current_density(u)?, &w)?)
}

/// Real inner product `Re ∫ a b̄ dx`.
pub fn real_inner(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::GridMismatch);
    }
    let dx = a.grid().dx();
    Ok(dx * a
        .physical()
        .iter()
        .zip(b.physical())
        .map(|(x, y)| (x * y.conj()).re)
        .sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeneratorValue {
    pub drift: f64,
    pub quad_var: f64,
}

/// Drift `(i∂ₓ²u + i|u|²u − ½Fu, h)` and quadratic variation
/// `Σ_m (i u (∂ₓ²)⁻¹φe_m, h)²` of `(u, h)` under the limit equation.
pub fn limit_generator(u: &ComplexField, h: &ComplexField, phi: &NoiseOperator, f: &RealField) -> Result<GeneratorValue> {
    let i = num_complex::Complex64::i();
    let lap = u.apply_symbol(crate::spectral::symbols::laplacian, ZeroModePolicy::Identity)?;
    let up = u.physical();
    let values = up
        .iter()
        .zip(lap.physical())
        .zip(f.values())
        .map(|((&c, l), &ff)| i * l + i * c.norm_sqr() * c - 0.5 * ff * c)
        .collect();
    let drift = real_inner(&ComplexField::new(u.grid().clone(), values)?, h)?;
    // (i u ψ, h) = ∫ ψ Re(i u h̄).
    let hp = h.physical();
    let weight: Vec<f64> = up.iter().zip(&hp).map(|(a, b)| (i * a * b.conj()).re).collect();
    let dx = u.grid().dx();
    let mut quad_var = 0.0;
    for m in 0..phi.mode_count() {
        if phi.lambda(m) == 0.0 {
            continue;
        }
        let psi = phi.basis_image(m)?.inverse_laplacian(ZeroModePolicy::Project)?;
        let p: f64 = dx * psi.values().iter().zip(&weight).map(|(a, b)| a * b).sum::<f64>();
        quad_var += p * p;
    }
    Ok(GeneratorValue { drift, quad_var })
}

/// `(1/4)‖m‖² + 4 N^{3/2} ‖∂ₓu‖`, the interpolation bound on `|H − K|`.
pub fn energy_gap_bound(u: &ComplexField, m: &RealField) -> Result<f64> {
    Ok(0.25 * l2_squared(m) + 4.0 * mass(u).powf(1.5) * gradient_energy(u)?.sqrt())
}

/// `2‖u‖ K^{1/2} √ε (‖∂ₓ⁻¹ζ‖_{H¹} + α‖∂ₓ⁻¹z‖_{H¹})`.
pub fn h1_bound(u: &ComplexField, k: f64, driver: &DriverState, alpha: f64, eps: f64) -> Result<f64> {
    let a = driver.zeta.antiderivative(ZeroModePolicy::Error)?.sobolev_norm(1.0, NormKind::Inhomogeneous)?;
    let b = driver.z.antiderivative(ZeroModePolicy::Error)?.sobolev_norm(1.0, NormKind::Inhomogeneous)?;
    Ok(2.0 * mass(u).sqrt() * k.sqrt() * eps.sqrt() * (a + alpha * b))
}

/// `‖u‖² (1 + ε‖z‖²_{H²∩Ḣ^{−2}} + ε‖ζ‖²_{H¹∩Ḣ^{−2}})`, the shape of the bound on `ε H₂`.
pub fn h2_bound_shape(u: &ComplexField, driver: &DriverState, eps: f64) -> Result<f64> {
    let a = driver.z.intersection_norm(2.0, 2.0)?;
    let b = driver.zeta.intersection_norm(1.0, 2.0)?;
    Ok(mass(u) * (1.0 + eps * a * a + eps * b * b))
}

/// `1 + ‖z‖²_{H^{1+d}∩Ḣ^{−3}} + ‖ζ‖²_{H^d∩Ḣ^{−3}}`, the shape of the sup bound
/// on the second-order inverse generator.
pub fn linf_bound_shape(driver: &DriverState, derivative: u8) -> Result<f64> {
    let d = derivative as f64;
    let a = driver.z.intersection_norm(1.0 + d, 3.0)?;
    let b = driver.zeta.intersection_norm(d, 3.0)?;
    Ok(1.0 + a * a + b * b)
}
