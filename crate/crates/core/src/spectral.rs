//! Periodic collocation grid, Fourier multipliers and Sobolev norms.
//!
//! Grid points are `x_j = -L/2 + j L/N`. Spectral coefficients are the
//! unnormalized DFT of the point values, so the coefficient at index `j`
//! multiplies `exp(i k_j (x - x_0))`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub struct SpectralGrid {
    num_points: usize,
    length: f64,
    wavenumbers: Vec<f64>,
    points: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("num_points", &self.num_points)
            .field("length", &self.length)
            .finish()
    }
}

impl SpectralGrid {
    pub fn new(num_points: usize, length: f64) -> Result<Arc<Self>> {
        if num_points < 8 || num_points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "N must be even and at least 8, got {num_points}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("L must be positive, got {length}")));
        }
        let n = num_points;
        let base = 2.0 * std::f64::consts::PI / length;
        let wavenumbers = (0..n)
            .map(|j| {
                let signed = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                base * signed
            })
            .collect();
        let dx = length / n as f64;
        let points = (0..n).map(|j| -0.5 * length + j as f64 * dx).collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            num_points,
            length,
            wavenumbers,
            points,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.num_points as f64
    }

    /// Wavenumbers in FFT order; index `N/2` is the Nyquist mode `-N/2 * 2π/L`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn origin(&self) -> f64 {
        -0.5 * self.length
    }

    pub fn nyquist_index(&self) -> usize {
        self.num_points / 2
    }

    /// `|j|` for FFT index `j`.
    pub fn wave_index(&self, j: usize) -> usize {
        if j <= self.num_points / 2 {
            j
        } else {
            self.num_points - j
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// Inverse transform including the `1/N` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let scale = 1.0 / self.num_points as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Inverse transform without normalization.
    pub fn inverse_unnormalized(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
    }

    pub fn same_as(&self, other: &SpectralGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.num_points == other.num_points && self.length == other.length)
    }

    /// `|j| < N/3`, the modes kept by the 2/3 rule.
    pub fn is_resolved(&self, j: usize) -> bool {
        3 * self.wave_index(j) < self.num_points
    }

    /// Sum of `w(k_j)^2 |c_j|^2` scaled so that `s = 0` gives the L² norm squared.
    pub(crate) fn weighted_energy(
        &self,
        spectrum: &[Complex64],
        s: f64,
        kind: NormKind,
        what: &'static str,
    ) -> Result<f64> {
        let n = self.num_points as f64;
        let scale = self.length / (n * n);
        let mut acc = 0.0;
        for (j, (&k, c)) in self.wavenumbers.iter().zip(spectrum).enumerate() {
            let w2 = match kind {
                NormKind::Inhomogeneous => (1.0 + k * k).powf(s),
                NormKind::Homogeneous => {
                    if j == 0 {
                        if s > 0.0 {
                            0.0
                        } else if s == 0.0 {
                            1.0
                        } else {
                            if !mean_negligible(spectrum) {
                                return Err(Error::ZeroModeObstruction(what));
                            }
                            0.0
                        }
                    } else {
                        (k * k).powf(s)
                    }
                }
            };
            acc += w2 * c.norm_sqr();
        }
        Ok(acc * scale)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroModePolicy {
    Project,
    Error,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    Inhomogeneous,
    Homogeneous,
}

pub(crate) fn mean_negligible(spectrum: &[Complex64]) -> bool {
    let peak = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
    spectrum[0].norm() <= 1e-9 * peak.max(f64::MIN_POSITIVE)
}

fn multiply_symbol<S: Fn(f64) -> Complex64>(
    grid: &SpectralGrid,
    spectrum: &mut [Complex64],
    symbol: S,
    policy: ZeroModePolicy,
) -> Result<()> {
    match policy {
        ZeroModePolicy::Project => spectrum[0] = Complex64::new(0.0, 0.0),
        ZeroModePolicy::Error => {
            if !mean_negligible(spectrum) {
                return Err(Error::NonInvertibleZeroMode {
                    mean: spectrum[0].re / grid.num_points as f64,
                });
            }
            spectrum[0] = Complex64::new(0.0, 0.0);
        }
        ZeroModePolicy::Identity => spectrum[0] *= symbol(0.0),
    }
    for (c, &k) in spectrum.iter_mut().zip(grid.wavenumbers()).skip(1) {
        *c *= symbol(k);
    }
    Ok(())
}

/// Standard Fourier symbols.
pub mod symbols {
    use num_complex::Complex64;

    pub fn laplacian(k: f64) -> Complex64 {
        Complex64::new(-k * k, 0.0)
    }

    pub fn inverse_laplacian(k: f64) -> Complex64 {
        Complex64::new(-1.0 / (k * k), 0.0)
    }

    pub fn derivative(k: f64) -> Complex64 {
        Complex64::new(0.0, k)
    }

    pub fn antiderivative(k: f64) -> Complex64 {
        Complex64::new(0.0, -1.0 / k)
    }

    pub fn bessel(s: f64) -> impl Fn(f64) -> Complex64 {
        move |k| Complex64::new((1.0 + k * k).powf(0.5 * s), 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Arc<SpectralGrid>,
    representation: Representation,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Arc<SpectralGrid>, values: Vec<Complex64>) -> Result<Self> {
        Self::with_representation(grid, Representation::Physical, values)
    }

    pub fn with_representation(
        grid: Arc<SpectralGrid>,
        representation: Representation,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::LengthMismatch {
                expected: grid.num_points(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            representation,
            values,
        })
    }

    pub fn zeros(grid: Arc<SpectralGrid>) -> Self {
        let n = grid.num_points();
        Self {
            grid,
            representation: Representation::Physical,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Arc<SpectralGrid>, f: F) -> Self {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self {
            grid,
            representation: Representation::Physical,
            values,
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn to_spectral(&self) -> Self {
        let mut out = self.clone();
        if out.representation == Representation::Physical {
            out.grid.forward(&mut out.values);
            out.representation = Representation::Spectral;
        }
        out
    }

    pub fn to_physical(&self) -> Self {
        let mut out = self.clone();
        if out.representation == Representation::Spectral {
            out.grid.inverse(&mut out.values);
            out.representation = Representation::Physical;
        }
        out
    }

    pub fn physical(&self) -> Vec<Complex64> {
        match self.representation {
            Representation::Physical => self.values.clone(),
            Representation::Spectral => self.to_physical().values,
        }
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        match self.representation {
            Representation::Spectral => self.values.clone(),
            Representation::Physical => self.to_spectral().values,
        }
    }

    pub fn apply_symbol<S: Fn(f64) -> Complex64>(
        &self,
        symbol: S,
        policy: ZeroModePolicy,
    ) -> Result<Self> {
        let mut spec = self.spectrum();
        multiply_symbol(&self.grid, &mut spec, symbol, policy)?;
        let out = Self {
            grid: self.grid.clone(),
            representation: Representation::Spectral,
            values: spec,
        };
        Ok(match self.representation {
            Representation::Spectral => out,
            Representation::Physical => out.to_physical(),
        })
    }

    pub fn sobolev_norm(&self, s: f64, kind: NormKind) -> Result<f64> {
        Ok(self
            .grid
            .weighted_energy(&self.spectrum(), s, kind, "sobolev_norm")?
            .sqrt())
    }

    /// `sqrt(‖f‖²_{H^k} + ‖f‖²_{Ḣ^{-l}})`.
    pub fn intersection_norm(&self, k: f64, l: f64) -> Result<f64> {
        let spec = self.spectrum();
        let a = self.grid.weighted_energy(&spec, k, NormKind::Inhomogeneous, "H^k")?;
        let b = self.grid.weighted_energy(&spec, -l, NormKind::Homogeneous, "Ḣ^-l")?;
        Ok((a + b).sqrt())
    }

    pub fn windowed_norm(&self, s: f64, center: f64, radius: f64) -> Result<f64> {
        let chi = window_profile(&self.grid, center, radius)?;
        check_order(&self.grid, s)?;
        let values: Vec<Complex64> = self
            .physical()
            .iter()
            .zip(&chi)
            .map(|(v, c)| v * c)
            .collect();
        Self::new(self.grid.clone(), values)?.sobolev_norm(s, NormKind::Inhomogeneous)
    }

    /// Copy with all modes `|j| ≥ N/3` removed; returned in physical form.
    pub fn dealiased(&self) -> Self {
        let mut spec = self.spectrum();
        for (j, c) in spec.iter_mut().enumerate() {
            if !self.grid.is_resolved(j) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.grid.inverse(&mut spec);
        Self {
            grid: self.grid.clone(),
            representation: Representation::Physical,
            values: spec,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.physical().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn abs_squared(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.physical().iter().map(|c| c.norm_sqr()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        let a = self.physical();
        let b = other.physical();
        Self::new(
            self.grid.clone(),
            a.iter().zip(&b).map(|(x, y)| x - y).collect(),
        )
    }
}

#[derive(Clone, Debug)]
pub struct RealField {
    grid: Arc<SpectralGrid>,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Arc<SpectralGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_points() {
            return Err(Error::LengthMismatch {
                expected: grid.num_points(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<SpectralGrid>) -> Self {
        let n = grid.num_points();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<SpectralGrid>, f: F) -> Self {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }

    /// Real part of the inverse transform of `spectrum`.
    pub fn from_spectrum(grid: Arc<SpectralGrid>, mut spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.num_points() {
            return Err(Error::LengthMismatch {
                expected: grid.num_points(),
                got: spectrum.len(),
            });
        }
        grid.inverse(&mut spectrum);
        let values = spectrum.iter().map(|c| c.re).collect();
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward(&mut data);
        data
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            representation: Representation::Physical,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_mean_zero(&self) -> bool {
        mean_negligible(&self.spectrum())
    }

    pub fn mean_zero(&self) -> Self {
        let m = self.mean();
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v - m).collect(),
        }
    }

    pub fn apply_symbol<S: Fn(f64) -> Complex64>(
        &self,
        symbol: S,
        policy: ZeroModePolicy,
    ) -> Result<Self> {
        let mut spec = self.spectrum();
        multiply_symbol(&self.grid, &mut spec, symbol, policy)?;
        Self::from_spectrum(self.grid.clone(), spec)
    }

    pub fn laplacian(&self) -> Self {
        self.apply_symbol(symbols::laplacian, ZeroModePolicy::Identity)
            .expect("regular symbol")
    }

    pub fn inverse_laplacian(&self, policy: ZeroModePolicy) -> Result<Self> {
        self.apply_symbol(symbols::inverse_laplacian, policy)
    }

    pub fn derivative(&self) -> Self {
        self.apply_symbol(symbols::derivative, ZeroModePolicy::Identity)
            .expect("regular symbol")
    }

    pub fn antiderivative(&self, policy: ZeroModePolicy) -> Result<Self> {
        self.apply_symbol(symbols::antiderivative, policy)
    }

    pub fn sobolev_norm(&self, s: f64, kind: NormKind) -> Result<f64> {
        Ok(self
            .grid
            .weighted_energy(&self.spectrum(), s, kind, "sobolev_norm")?
            .sqrt())
    }

    pub fn intersection_norm(&self, k: f64, l: f64) -> Result<f64> {
        let spec = self.spectrum();
        let a = self.grid.weighted_energy(&spec, k, NormKind::Inhomogeneous, "H^k")?;
        let b = self.grid.weighted_energy(&spec, -l, NormKind::Homogeneous, "Ḣ^-l")?;
        Ok((a + b).sqrt())
    }

    pub fn windowed_norm(&self, s: f64, center: f64, radius: f64) -> Result<f64> {
        self.to_complex().windowed_norm(s, center, radius)
    }

    pub fn dealiased(&self) -> Self {
        let mut spec = self.spectrum();
        for (j, c) in spec.iter_mut().enumerate() {
            if !self.grid.is_resolved(j) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        Self::from_spectrum(self.grid.clone(), spec).expect("same grid")
    }

    /// Trapezoid (spectrally exact) integral over the period.
    pub fn integral(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// `∫ a b dx` with both factors truncated by the 2/3 rule.
pub fn dealiased_inner(a: &RealField, b: &RealField) -> Result<f64> {
    Ok(a.dealiased().mul(&b.dealiased())?.integral())
}

fn check_order(grid: &SpectralGrid, s: f64) -> Result<()> {
    if !(0.0..(grid.num_points() as f64) / 4.0).contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "window order {s} outside [0, N/4)"
        )));
    }
    Ok(())
}

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Smooth bump equal to one within `radius` of `center` (periodic distance)
/// and zero beyond `2 radius`. The outer support must not wrap, so
/// `radius ≤ L/4`.
pub fn window_profile(grid: &SpectralGrid, center: f64, radius: f64) -> Result<Vec<f64>> {
    let l = grid.length();
    if !(radius > 0.0) || 4.0 * radius > l * (1.0 + 1e-12) {
        return Err(Error::WindowExceedsDomain { radius, length: l });
    }
    Ok(grid
        .points()
        .iter()
        .map(|&x| {
            let d = (x - center).rem_euclid(l);
            let d = d.min(l - d);
            smooth_step((2.0 * radius - d) / radius)
        })
        .collect())
}
