//! The damped-wave Ornstein–Uhlenbeck driver `(z, ζ)`:
//! `z' = ζ`, `dζ = (−α ζ + ∂ₓ² z) dτ + φ dW`, its ε-rescaling, stationary
//! law, inverse generator and invariant-measure kernels.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, GaussLegendre, Mat2};
use crate::noise::NoiseOperator;
use crate::spectral::{mean_negligible, NormKind, RealField, SpectralGrid, ZeroModePolicy};
use crate::wave::{multiplier_unchecked, SemigroupCache};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverMode {
    CoupledEm,
    ExactGaussian,
}

#[derive(Clone, Debug)]
pub struct DriverState {
    pub z: RealField,
    pub zeta: RealField,
    pub time: f64,
    pub mode: DriverMode,
}

impl DriverState {
    pub fn zeros(grid: Arc<SpectralGrid>, mode: DriverMode) -> Self {
        Self {
            z: RealField::zeros(grid.clone()),
            zeta: RealField::zeros(grid),
            time: 0.0,
            mode,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.z.grid()
    }

    pub fn is_zero(&self) -> bool {
        self.z.values().iter().chain(self.zeta.values()).all(|&v| v == 0.0)
    }

    /// `‖z‖_{H³∩Ḣ^{−3}} + ‖ζ‖_{H³∩Ḣ^{−3}}`.
    pub fn monitored_norm(&self) -> Result<f64> {
        Ok(self.z.intersection_norm(3.0, 3.0)? + self.zeta.intersection_norm(3.0, 3.0)?)
    }
}

/// Stationary covariance of `(ẑ, ζ̂)` for one mode with noise multiplier `lambda`.
pub fn lyapunov_covariance(alpha: f64, lambda: f64, xi: f64) -> Result<Mat2> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "stationary law needs positive damping, got {alpha}"
        )));
    }
    if xi == 0.0 {
        return Err(Error::InvalidParameter("no stationary law for the zero mode".into()));
    }
    let a = linalg::wave_generator(alpha, xi);
    let q = [[0.0, 0.0], [0.0, lambda * lambda]];
    linalg::sylvester(&a, &a, &q).ok_or_else(|| Error::InvalidParameter("singular Lyapunov system".into()))
}

fn cholesky<const N: usize>(a: &[[f64; N]; N]) -> [[f64; N]; N] {
    let mut l = [[0.0; N]; N];
    let scale = (0..N).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 0..N {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d <= 1e-15 * scale {
            continue;
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in j + 1..N {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    l
}

/// Joint covariance, for unit noise over `[0, h]`, of the stochastic
/// convolution `(X_z, X_ζ)` and the driving Brownian increment `W(h)`.
pub fn joint_step_covariance(alpha: f64, xi: f64, h: f64) -> [[f64; 3]; 3] {
    let rule = GaussLegendre::new(10);
    let d = alpha * alpha - 4.0 * xi * xi;
    let freq = if d < 0.0 { 0.5 * (-d).sqrt() + alpha } else { alpha + 1.0 };
    let panels = ((h * freq).ceil() as usize).max(2);
    let mut c = [0.0; 5];
    let width = h / panels as f64;
    for p in 0..panels {
        let lo = p as f64 * width;
        for (s, w) in rule.mapped(lo, lo + width) {
            let m = multiplier_unchecked(alpha, xi, s);
            let (a, b) = (m[0][1], m[1][1]);
            c[0] += w * a * a;
            c[1] += w * a * b;
            c[2] += w * b * b;
            c[3] += w * a;
            c[4] += w * b;
        }
    }
    [[c[0], c[1], c[3]], [c[1], c[2], c[4]], [c[3], c[4], h]]
}

struct StepTables {
    semigroup: SemigroupCache,
    /// Cholesky factors of `joint_step_covariance`, by wave index.
    joint: Vec<[[f64; 3]; 3]>,
}

/// Per-wave-index time integrals used by the second-order inverse generator.
struct SecondOrderKernel {
    half: usize,
    /// `∫ (M_j)_{1p} ((M_l)_{2q} + α (M_l)_{1q}) dt`.
    first: Vec<Mat2>,
    /// Same with the weight `t`, input column `p = q = 2` only.
    second: Vec<f64>,
}

impl SecondOrderKernel {
    fn new(grid: &SpectralGrid, alpha: f64) -> Self {
        let half = grid.num_points() / 2;
        let base = 2.0 * std::f64::consts::PI / grid.length();
        let size = (half + 1) * (half + 1);
        let mut first = vec![[[0.0; 2]; 2]; size];
        let mut second = vec![0.0; size];
        for j in 1..=half {
            let aj = linalg::wave_generator(alpha, base * j as f64);
            for l in 1..=half {
                let al = linalg::wave_generator(alpha, base * l as f64);
                let idx = j * (half + 1) + l;
                for p in 0..2 {
                    for q in 0..2 {
                        let mut e = [[0.0; 2]; 2];
                        e[p][q] = 1.0;
                        let x = linalg::sylvester(&aj, &al, &e).expect("stable generators");
                        first[idx][p][q] = x[0][1] + alpha * x[0][0];
                        if p == 1 && q == 1 {
                            let x2 = linalg::sylvester(&aj, &al, &x).expect("stable generators");
                            second[idx] = x2[0][1] + alpha * x2[0][0];
                        }
                    }
                }
            }
        }
        Self { half, first, second }
    }

    fn at(&self, j: usize, l: usize) -> usize {
        j * (self.half + 1) + l
    }
}

pub struct OuDriver {
    phi: Arc<NoiseOperator>,
    alpha: f64,
    steps: RwLock<HashMap<u64, Arc<StepTables>>>,
    kernel: OnceLock<SecondOrderKernel>,
    covariance_terms: [OnceLock<RealField>; 4],
}

impl std::fmt::Debug for OuDriver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OuDriver").field("alpha", &self.alpha).finish()
    }
}

/// Output of one driver step that also reports the time integral of the
/// rescaled potential `ε^{−1/2} z^ε` over the step.
#[derive(Clone, Debug)]
pub struct DriverStep {
    pub state: DriverState,
    pub potential_integral: RealField,
    /// Physical-time white increments of the basis coefficients over the step.
    pub increments: Vec<f64>,
}

impl OuDriver {
    pub fn new(phi: Arc<NoiseOperator>, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("damping must be nonnegative, got {alpha}")));
        }
        Ok(Self {
            phi,
            alpha,
            steps: RwLock::new(HashMap::new()),
            kernel: OnceLock::new(),
            covariance_terms: Default::default(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn phi(&self) -> &Arc<NoiseOperator> {
        &self.phi
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.phi.grid()
    }

    fn tables(&self, h: f64) -> Result<Arc<StepTables>> {
        let key = h.to_bits();
        if let Some(t) = self.steps.read().expect("step cache").get(&key) {
            return Ok(t.clone());
        }
        let grid = self.grid();
        let semigroup = SemigroupCache::new(grid, self.alpha, h)?;
        let base = 2.0 * std::f64::consts::PI / grid.length();
        let joint = (0..grid.num_points() / 2)
            .map(|j| {
                if j == 0 {
                    [[0.0; 3]; 3]
                } else {
                    cholesky(&joint_step_covariance(self.alpha, base * j as f64, h))
                }
            })
            .collect();
        let t = Arc::new(StepTables { semigroup, joint });
        self.steps.write().expect("step cache").insert(key, t.clone());
        Ok(t)
    }

    fn check_state(&self, state: &DriverState) -> Result<()> {
        if !state.grid().same_as(self.grid()) || !state.zeta.grid().same_as(self.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn check_increments(&self, increments: &[Vec<f64>]) -> Result<()> {
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
        Ok(())
    }

    /// `(ζ + α z)` divided by `∂ₓ²`, in spectral form.
    fn ell_spectrum(&self, z: &[Complex64], zeta: &[Complex64]) -> Vec<Complex64> {
        let k = self.grid().wavenumbers();
        let mut out: Vec<Complex64> = z
            .iter()
            .zip(zeta)
            .zip(k)
            .map(|((a, b), &kk)| {
                if kk == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    -(b + self.alpha * a) / (kk * kk)
                }
            })
            .collect();
        out[0] = Complex64::new(0.0, 0.0);
        out
    }

    fn finish(
        &self,
        state: &DriverState,
        z: Vec<Complex64>,
        zeta: Vec<Complex64>,
        time: f64,
    ) -> Result<DriverState> {
        let grid = self.grid().clone();
        Ok(DriverState {
            z: RealField::from_spectrum(grid.clone(), z)?,
            zeta: RealField::from_spectrum(grid, zeta)?,
            time,
            mode: state.mode,
        })
    }

    /// Exponential Euler–Maruyama substeps in the driver's own time:
    /// `v ← S(δ) v + (0, scale · φ ΔW)`, one substep per increment.
    fn em_core(
        &self,
        z: &mut [Complex64],
        zeta: &mut [Complex64],
        delta: f64,
        increments: &[Vec<f64>],
        scale: f64,
    ) -> Result<()> {
        let tables = self.tables(delta)?;
        for inc in increments {
            tables.semigroup.apply_spectral(z, zeta);
            if !self.phi.is_zero() {
                let spec = self.phi.phi_spectrum(inc)?;
                for (x, s) in zeta.iter_mut().zip(&spec) {
                    *x += scale * s;
                }
            }
        }
        Ok(())
    }

    /// Exact Gaussian transition over `h` in the driver's own time; returns
    /// the Brownian increments of the basis coefficients.
    fn exact_core<R: Rng + ?Sized>(
        &self,
        z: &mut [Complex64],
        zeta: &mut [Complex64],
        h: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let tables = self.tables(h)?;
        tables.semigroup.apply_spectral(z, zeta);
        let count = self.phi.mode_count();
        let (mut wz, mut wzeta, mut dw) = (vec![0.0; count], vec![0.0; count], vec![0.0; count]);
        for m in 0..count {
            let g: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let l = &tables.joint[m / 2 + 1];
            let x = [
                l[0][0] * g[0],
                l[1][0] * g[0] + l[1][1] * g[1],
                l[2][0] * g[0] + l[2][1] * g[1] + l[2][2] * g[2],
            ];
            let lam = self.phi.lambda(m);
            wz[m] = lam * x[0];
            wzeta[m] = lam * x[1];
            dw[m] = x[2];
        }
        self.phi.accumulate_spectrum(&wz, z)?;
        self.phi.accumulate_spectrum(&wzeta, zeta)?;
        Ok(dw)
    }

    /// Coupled mode: `increments.len()` substeps over `dt`, each increment
    /// having variance `dt / increments.len()`.
    pub fn advance_em(&self, state: &DriverState, dt: f64, increments: &[Vec<f64>]) -> Result<DriverState> {
        self.advance_rescaled_em(1.0, state, dt, increments)
    }

    pub fn advance_exact<R: Rng + ?Sized>(&self, state: &DriverState, dt: f64, rng: &mut R) -> Result<DriverState> {
        self.advance_rescaled_exact(1.0, state, dt, rng)
    }

    pub fn advance_rescaled_em(
        &self,
        eps: f64,
        state: &DriverState,
        dt: f64,
        increments: &[Vec<f64>],
    ) -> Result<DriverState> {
        Ok(self.step_rescaled_em(eps, state, dt, increments)?.state)
    }

    pub fn advance_rescaled_exact<R: Rng + ?Sized>(
        &self,
        eps: f64,
        state: &DriverState,
        dt: f64,
        rng: &mut R,
    ) -> Result<DriverState> {
        Ok(self.step_rescaled_exact(eps, state, dt, rng)?.state)
    }

    fn check_step(&self, eps: f64, dt: f64) -> Result<()> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("step must be positive, got {dt}")));
        }
        Ok(())
    }

    /// Rescaled coupled step over physical `dt`; the potential integral is
    /// exact for the piecewise-linear-flow path the substeps define.
    pub fn step_rescaled_em(
        &self,
        eps: f64,
        state: &DriverState,
        dt: f64,
        increments: &[Vec<f64>],
    ) -> Result<DriverStep> {
        self.check_step(eps, dt)?;
        self.check_state(state)?;
        self.check_increments(increments)?;
        let delta = dt / (eps * increments.len() as f64);
        let mut z = state.z.spectrum();
        let mut zeta = state.zeta.spectrum();
        let ell0 = self.ell_spectrum(&z, &zeta);
        self.em_core(&mut z, &mut zeta, delta, increments, eps.powf(-0.5))?;
        let mut total = vec![0.0; self.phi.mode_count()];
        for inc in increments {
            for (t, v) in total.iter_mut().zip(inc) {
                *t += v;
            }
        }
        let potential_integral = self.potential_integral(eps, &ell0, &z, &zeta, &total)?;
        Ok(DriverStep {
            state: self.finish(state, z, zeta, state.time + dt)?,
            potential_integral,
            increments: total,
        })
    }

    pub fn step_rescaled_exact<R: Rng + ?Sized>(
        &self,
        eps: f64,
        state: &DriverState,
        dt: f64,
        rng: &mut R,
    ) -> Result<DriverStep> {
        self.check_step(eps, dt)?;
        self.check_state(state)?;
        let mut z = state.z.spectrum();
        let mut zeta = state.zeta.spectrum();
        let ell0 = self.ell_spectrum(&z, &zeta);
        let w = self.exact_core(&mut z, &mut zeta, dt / eps, rng)?;
        let physical: Vec<f64> = w.iter().map(|v| v * eps.sqrt()).collect();
        let potential_integral = self.potential_integral(eps, &ell0, &z, &zeta, &physical)?;
        Ok(DriverStep {
            state: self.finish(state, z, zeta, state.time + dt)?,
            potential_integral,
            increments: physical,
        })
    }

    /// `√ε Δℓ − (∂ₓ²)⁻¹ φ ΔW` with `ℓ = (∂ₓ²)⁻¹(ζ + α z)`.
    fn potential_integral(
        &self,
        eps: f64,
        ell0: &[Complex64],
        z: &[Complex64],
        zeta: &[Complex64],
        dw: &[f64],
    ) -> Result<RealField> {
        let ell1 = self.ell_spectrum(z, zeta);
        let noise = self.phi.phi_spectrum(dw)?;
        let k = self.grid().wavenumbers();
        let se = eps.sqrt();
        let spec: Vec<Complex64> = (0..k.len())
            .map(|j| {
                if j == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    se * (ell1[j] - ell0[j]) + noise[j] / (k[j] * k[j])
                }
            })
            .collect();
        RealField::from_spectrum(self.grid().clone(), spec)
    }

    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R, mode: DriverMode) -> Result<DriverState> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidParameter("stationary law needs positive damping".into()));
        }
        let count = self.phi.mode_count();
        let (mut wz, mut wzeta) = (vec![0.0; count], vec![0.0; count]);
        for m in 0..count {
            let cov = lyapunov_covariance(self.alpha, self.phi.lambda(m), self.phi.wavenumber(m))?;
            let l = cholesky(&cov);
            let g: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            wz[m] = l[0][0] * g[0];
            wzeta[m] = l[1][0] * g[0] + l[1][1] * g[1];
        }
        let grid = self.grid().clone();
        let n = grid.num_points();
        let mut z = vec![Complex64::new(0.0, 0.0); n];
        let mut zeta = vec![Complex64::new(0.0, 0.0); n];
        self.phi.accumulate_spectrum(&wz, &mut z)?;
        self.phi.accumulate_spectrum(&wzeta, &mut zeta)?;
        Ok(DriverState {
            z: RealField::from_spectrum(grid.clone(), z)?,
            zeta: RealField::from_spectrum(grid, zeta)?,
            time: 0.0,
            mode,
        })
    }

    /// `(E_ν‖z‖²)^{1/2} + (E_ν‖ζ‖²)^{1/2}` in `H³ ∩ Ḣ^{−3}`, the natural
    /// scale of the growth monitor; 1 when there is no stationary law or no noise.
    pub fn stationary_monitor_scale(&self) -> Result<f64> {
        if !(self.alpha > 0.0) {
            return Ok(1.0);
        }
        let (mut ez, mut ezeta) = (0.0, 0.0);
        for m in 0..self.phi.mode_count() {
            let k = self.phi.wavenumber(m);
            let cov = lyapunov_covariance(self.alpha, self.phi.lambda(m), k)?;
            let w = crate::wave::intersection_weight(k, 3.0, 3.0);
            ez += cov[0][0] * w;
            ezeta += cov[1][1] * w;
        }
        let scale = ez.sqrt() + ezeta.sqrt();
        Ok(if scale > 0.0 { scale } else { 1.0 })
    }

    /// `ℳ⁻¹ z = (∂ₓ²)⁻¹ ζ + α (∂ₓ²)⁻¹ z`.
    pub fn minverse_z(&self, state: &DriverState) -> Result<RealField> {
        self.check_state(state)?;
        let a = state.zeta.inverse_laplacian(ZeroModePolicy::Error)?;
        let b = state.z.inverse_laplacian(ZeroModePolicy::Error)?;
        a.add(&b.scaled(self.alpha))
    }

    fn kernel(&self) -> Result<&SecondOrderKernel> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidParameter(
                "second-order inverse generator needs positive damping".into(),
            ));
        }
        Ok(self.kernel.get_or_init(|| SecondOrderKernel::new(self.grid(), self.alpha)))
    }

    fn derivative_factor(k: f64, d: u8) -> Complex64 {
        if d == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, k)
        }
    }

    /// Noise-only terms: `which = 0` gives `E_ν[f]`, `which = 1` gives
    /// `Σ_k ∫₀^∞ t f(S(t)(0, φ e_k)) dt`.
    fn covariance_term(&self, d: u8, which: usize) -> Result<RealField> {
        let slot = &self.covariance_terms[2 * which + d as usize];
        if let Some(f) = slot.get() {
            return Ok(f.clone());
        }
        let kernel = self.kernel()?;
        let grid = self.grid();
        let n = grid.num_points();
        let k = grid.wavenumbers();
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        for m in 0..self.phi.mode_count() {
            let lam = self.phi.lambda(m);
            if lam == 0.0 {
                continue;
            }
            let mut w = vec![0.0; self.phi.mode_count()];
            w[m] = lam;
            let mut c = vec![Complex64::new(0.0, 0.0); n];
            self.phi.accumulate_spectrum(&w, &mut c)?;
            let j0 = m / 2 + 1;
            for &j in &[j0, n - j0] {
                for &l in &[j0, n - j0] {
                    let idx = kernel.at(j0, j0);
                    let weight = if which == 0 {
                        kernel.first[idx][1][1]
                    } else {
                        kernel.second[idx]
                    };
                    let f = Self::derivative_factor(k[j], d) * Self::derivative_factor(k[l], d)
                        * (-1.0 / (k[l] * k[l]));
                    acc[(j + l) % n] += f * c[j] * c[l] * weight;
                }
            }
        }
        grid.inverse_unnormalized(&mut acc);
        let scale = 1.0 / (n * n) as f64;
        let field = RealField::new(grid.clone(), acc.iter().map(|c| c.re * scale).collect())?;
        let _ = slot.set(field.clone());
        Ok(field)
    }

    /// `E_ν[∂ₓᵈ z · ∂ₓᵈ ℳ⁻¹ z]` as a field.
    pub fn stationary_product_mean(&self, derivative: u8) -> Result<RealField> {
        self.covariance_term(derivative.min(1), 0)
    }

    /// `ℳ⁻¹(f − E_ν f)` for `f = ∂ₓᵈ z · ∂ₓᵈ ℳ⁻¹ z`, with all time integrals
    /// done in closed form through per-mode Sylvester equations.
    pub fn minverse_quadratic(&self, state: &DriverState, derivative: u8) -> Result<RealField> {
        self.check_state(state)?;
        let d = derivative.min(1);
        let kernel = self.kernel()?;
        let grid = self.grid();
        let n = grid.num_points();
        let k = grid.wavenumbers();
        let z = state.z.spectrum();
        let zeta = state.zeta.spectrum();
        if !mean_negligible(&z) || !mean_negligible(&zeta) {
            return Err(Error::ZeroModeObstruction("minverse_quadratic"));
        }
        let tail = self.covariance_term(d, 1)?;
        if state.is_zero() {
            return Ok(tail);
        }
        let mut acc = vec![Complex64::new(0.0, 0.0); n];
        let left: Vec<Complex64> = (0..n).map(|j| Self::derivative_factor(k[j], d)).collect();
        let right: Vec<Complex64> = (0..n)
            .map(|l| if l == 0 { Complex64::new(0.0, 0.0) } else { left[l] * (-1.0 / (k[l] * k[l])) })
            .collect();
        for j in 1..n {
            let (vj0, vj1) = (z[j], zeta[j]);
            if vj0.norm_sqr() + vj1.norm_sqr() == 0.0 {
                continue;
            }
            let jj = grid.wave_index(j);
            for l in 1..n {
                let (vl0, vl1) = (z[l], zeta[l]);
                let w = &kernel.first[kernel.at(jj, grid.wave_index(l))];
                let s = vj0 * (vl0 * w[0][0] + vl1 * w[0][1]) + vj1 * (vl0 * w[1][0] + vl1 * w[1][1]);
                acc[(j + l) % n] += left[j] * right[l] * s;
            }
        }
        grid.inverse_unnormalized(&mut acc);
        let scale = 1.0 / (n * n) as f64;
        let values = acc
            .iter()
            .zip(tail.values())
            .map(|(c, t)| t - c.re * scale)
            .collect();
        RealField::new(grid.clone(), values)
    }
}

pub fn kernel_k1(alpha: f64, xi: f64, eta: f64) -> Result<f64> {
    if eta == 0.0 {
        return Err(Error::InvalidParameter("kernel needs η ≠ 0".into()));
    }
    let d = (xi * xi - eta * eta).powi(2) + 2.0 * alpha * alpha * (xi * xi + eta * eta);
    Ok(-2.0 * alpha / (eta * eta * d))
}

pub fn kernel_k2(alpha: f64, xi: f64, eta: f64) -> Result<f64> {
    if eta == 0.0 {
        return Err(Error::InvalidParameter("kernel needs η ≠ 0".into()));
    }
    let d = (xi * xi - eta * eta).powi(2) + 2.0 * alpha * alpha * (xi * xi + eta * eta);
    Ok(-(alpha * alpha + xi * xi - eta * eta) / (eta * eta * d))
}

/// Continuous Fourier coefficients of `φ e_m` at `±k`.
fn mode_coefficients(phi: &NoiseOperator, m: usize) -> [(f64, Complex64); 2] {
    let k = phi.wavenumber(m);
    let a = 0.5 * phi.lambda(m) * (2.0 / phi.grid().length()).sqrt();
    if m % 2 == 0 {
        [(k, Complex64::new(a, 0.0)), (-k, Complex64::new(a, 0.0))]
    } else {
        [(k, Complex64::new(0.0, -a)), (-k, Complex64::new(0.0, a))]
    }
}

fn double_sum<F: Fn(f64, f64) -> f64>(phi: &NoiseOperator, x: f64, y: f64, kernel: F) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..phi.mode_count() {
        if phi.lambda(m) == 0.0 {
            continue;
        }
        let c = mode_coefficients(phi, m);
        for &(xi, a) in &c {
            for &(eta, b) in &c {
                let phase = Complex64::from_polar(1.0, x * xi + y * eta);
                acc += kernel(xi, eta) * a * b * phase;
            }
        }
    }
    acc.re
}

/// `E_ν[z(x) (∂ₓ²)⁻¹ z(y)]` from the `K₁` double sum.
pub fn k1_double_sum(alpha: f64, phi: &NoiseOperator, x: f64, y: f64) -> f64 {
    double_sum(phi, x, y, |xi, eta| kernel_k1(alpha, xi, eta).expect("η ≠ 0"))
}

/// `E_ν[z(x) ℳ⁻¹z(y) + z(y) ℳ⁻¹z(x)]` from the symmetrized `K` double sum,
/// `K = (α/2) K₁ + K₂`.
pub fn k_double_sum(alpha: f64, phi: &NoiseOperator, x: f64, y: f64) -> f64 {
    let kk = |xi: f64, eta: f64| {
        0.5 * alpha * kernel_k1(alpha, xi, eta).expect("η ≠ 0") + kernel_k2(alpha, xi, eta).expect("η ≠ 0")
    };
    double_sum(phi, x, y, |xi, eta| kk(xi, eta) + kk(eta, xi))
}

/// `k(x, y) = −Σ_m (∂ₓ²)⁻¹(φ e_m)(x) (∂ₓ²)⁻¹(φ e_m)(y)`.
pub fn kernel_k(phi: &NoiseOperator, x: f64, y: f64) -> f64 {
    -(0..phi.mode_count())
        .map(|m| {
            let k2 = phi.wavenumber(m).powi(2);
            let lam = phi.lambda(m);
            // Grouping the basis product keeps k(x, y) = k(y, x) bitwise.
            lam * lam / (k2 * k2) * (phi.basis_value(m, x) * phi.basis_value(m, y))
        })
        .sum::<f64>()
}

/// `F(x) = Σ_m ((∂ₓ²)⁻¹ φ e_m)²(x)` on the grid.
pub fn compute_f(phi: &NoiseOperator) -> RealField {
    let grid = phi.grid().clone();
    let values = grid
        .points()
        .iter()
        .map(|&x| {
            (0..phi.mode_count())
                .map(|m| {
                    let k2 = phi.wavenumber(m).powi(2);
                    let v = phi.lambda(m) * phi.basis_value(m, x) / k2;
                    v * v
                })
                .sum()
        })
        .collect();
    RealField::new(grid, values).expect("grid length")
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthMonitor {
    pub delta: f64,
    pub epsilon: f64,
    pub scale: f64,
    pub threshold: f64,
    pub tripped_at: Option<f64>,
    pub max_norm: f64,
}

impl GrowthMonitor {
    pub fn new(delta: f64, epsilon: f64, scale: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.125) {
            return Err(Error::InvalidParameter(format!("monitor exponent {delta} outside (0, 1/8]")));
        }
        if !(epsilon > 0.0) || !(scale > 0.0) {
            return Err(Error::InvalidParameter("monitor needs positive epsilon and scale".into()));
        }
        Ok(Self {
            delta,
            epsilon,
            scale,
            threshold: scale * epsilon.powf(-delta),
            tripped_at: None,
            max_norm: 0.0,
        })
    }

    /// Records the state; returns whether the monitor has tripped.
    pub fn observe(&mut self, state: &DriverState) -> Result<bool> {
        let v = state.monitored_norm()?;
        self.max_norm = self.max_norm.max(v);
        if self.tripped_at.is_none() && v >= self.threshold {
            self.tripped_at = Some(state.time);
        }
        Ok(self.tripped_at.is_some())
    }
}

/// Norms of the driver reported alongside trajectories.
pub fn driver_norms(state: &DriverState) -> Result<(f64, f64)> {
    Ok((
        state.z.sobolev_norm(0.0, NormKind::Inhomogeneous)?,
        state.zeta.sobolev_norm(0.0, NormKind::Inhomogeneous)?,
    ))
}
