//! Diagonal noise operator on the real trigonometric basis
//! `{√(2/L) cos(k x), √(2/L) sin(k x)}`, `k = 2π j / L`, `1 ≤ j < N/2`.
//!
//! The constant mode and the Nyquist cosine are not part of the basis: the
//! former carries λ = 0 by construction and the latter is not unit-norm on the
//! grid.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{NormKind, RealField, SpectralGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrigKind {
    Cos,
    Sin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisMode {
    pub wave_index: usize,
    pub kind: TrigKind,
}

impl BasisMode {
    pub fn index(&self) -> usize {
        2 * (self.wave_index - 1) + usize::from(self.kind == TrigKind::Sin)
    }

    pub fn from_index(m: usize) -> Self {
        Self {
            wave_index: m / 2 + 1,
            kind: if m % 2 == 0 { TrigKind::Cos } else { TrigKind::Sin },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Cos,
    Sin,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub wave_index: usize,
    #[serde(default = "TableEntry::default_kind")]
    pub kind: TableKind,
    pub lambda: f64,
}

impl TableEntry {
    fn default_kind() -> TableKind {
        TableKind::Both
    }
}

/// λ(k) = A (1 + k²)^(−exponent) on `min_wavenumber ≤ |k| ≤ max_wavenumber`,
/// or an explicit table of per-mode multipliers when `table` is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseProfile {
    pub amplitude: f64,
    #[serde(default = "NoiseProfile::default_exponent")]
    pub exponent: f64,
    #[serde(default)]
    pub min_wavenumber: f64,
    #[serde(default)]
    pub max_wavenumber: Option<f64>,
    #[serde(default)]
    pub table: Option<Vec<TableEntry>>,
}

impl NoiseProfile {
    fn default_exponent() -> f64 {
        2.0
    }

    pub fn algebraic(amplitude: f64) -> Self {
        Self {
            amplitude,
            exponent: 2.0,
            min_wavenumber: 0.0,
            max_wavenumber: None,
            table: None,
        }
    }

    pub fn zero() -> Self {
        Self::algebraic(0.0)
    }

    pub fn single(wave_index: usize, kind: TableKind, lambda: f64) -> Self {
        Self {
            table: Some(vec![TableEntry {
                wave_index,
                kind,
                lambda,
            }]),
            ..Self::algebraic(0.0)
        }
    }
}

impl Default for NoiseProfile {
    fn default() -> Self {
        Self::algebraic(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HsNorm {
    pub order: i32,
    pub inhomogeneous: f64,
    pub homogeneous: f64,
}

#[derive(Clone, Debug)]
pub struct NoiseOperator {
    grid: Arc<SpectralGrid>,
    lambdas: Vec<f64>,
    hs_table: Vec<HsNorm>,
}

pub fn make_phi(grid: Arc<SpectralGrid>, profile: &NoiseProfile) -> Result<NoiseOperator> {
    if !(profile.amplitude >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise amplitude must be nonnegative, got {}",
            profile.amplitude
        )));
    }
    let count = grid.num_points() - 2;
    let base = 2.0 * std::f64::consts::PI / grid.length();
    let mut lambdas = vec![0.0; count];
    match &profile.table {
        Some(table) => {
            for e in table {
                if e.wave_index == 0 || e.wave_index >= grid.num_points() / 2 {
                    return Err(Error::InvalidMode(e.wave_index));
                }
                if !(e.lambda >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "table multiplier must be nonnegative, got {}",
                        e.lambda
                    )));
                }
                let kinds: &[TrigKind] = match e.kind {
                    TableKind::Cos => &[TrigKind::Cos],
                    TableKind::Sin => &[TrigKind::Sin],
                    TableKind::Both => &[TrigKind::Cos, TrigKind::Sin],
                };
                for &kind in kinds {
                    let m = BasisMode {
                        wave_index: e.wave_index,
                        kind,
                    };
                    lambdas[m.index()] = e.lambda;
                }
            }
        }
        None => {
            let kmax = profile.max_wavenumber.unwrap_or(f64::INFINITY);
            for (m, lam) in lambdas.iter_mut().enumerate() {
                let k = base * BasisMode::from_index(m).wave_index as f64;
                if k >= profile.min_wavenumber && k <= kmax {
                    *lam = profile.amplitude * (1.0 + k * k).powf(-profile.exponent);
                }
            }
        }
    }
    Ok(NoiseOperator::from_multipliers(grid, lambdas))
}

impl NoiseOperator {
    pub fn from_multipliers(grid: Arc<SpectralGrid>, lambdas: Vec<f64>) -> Self {
        assert_eq!(lambdas.len(), grid.num_points() - 2);
        let mut op = Self {
            grid,
            lambdas,
            hs_table: Vec::new(),
        };
        op.hs_table = (-4..=3)
            .map(|order| HsNorm {
                order,
                inhomogeneous: op.hs_norm(order as f64, NormKind::Inhomogeneous),
                homogeneous: op.hs_norm(order as f64, NormKind::Homogeneous),
            })
            .collect();
        op
    }

    pub fn zero(grid: Arc<SpectralGrid>) -> Self {
        let n = grid.num_points() - 2;
        Self::from_multipliers(grid, vec![0.0; n])
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn mode_count(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda(&self, m: usize) -> f64 {
        self.lambdas[m]
    }

    pub fn is_zero(&self) -> bool {
        self.lambdas.iter().all(|&l| l == 0.0)
    }

    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * std::f64::consts::PI * BasisMode::from_index(m).wave_index as f64 / self.grid.length()
    }

    pub fn hs_norm(&self, s: f64, kind: NormKind) -> f64 {
        self.lambdas
            .iter()
            .enumerate()
            .map(|(m, &lam)| {
                let k = self.wavenumber(m);
                let w2 = match kind {
                    NormKind::Inhomogeneous => (1.0 + k * k).powf(s),
                    NormKind::Homogeneous => (k * k).powf(s),
                };
                lam * lam * w2
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Hilbert–Schmidt norms for integer orders −4..=3.
    pub fn hs_norms(&self) -> &[HsNorm] {
        &self.hs_table
    }

    /// `e_m(x)` at an arbitrary point.
    pub fn basis_value(&self, m: usize, x: f64) -> f64 {
        let c = (2.0 / self.grid.length()).sqrt();
        let k = self.wavenumber(m);
        match BasisMode::from_index(m).kind {
            TrigKind::Cos => c * (k * x).cos(),
            TrigKind::Sin => c * (k * x).sin(),
        }
    }

    /// Adds the grid spectrum of `Σ_m w_m e_m` to `out`.
    pub fn accumulate_spectrum(&self, weights: &[f64], out: &mut [Complex64]) -> Result<()> {
        let n = self.grid.num_points();
        if weights.len() != self.mode_count() {
            return Err(Error::LengthMismatch {
                expected: self.mode_count(),
                got: weights.len(),
            });
        }
        let scale = (2.0 / self.grid.length()).sqrt() * n as f64 / 2.0;
        for (m, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let mode = BasisMode::from_index(m);
            let j = mode.wave_index;
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let a = sign * scale * w;
            match mode.kind {
                TrigKind::Cos => {
                    out[j] += Complex64::new(a, 0.0);
                    out[n - j] += Complex64::new(a, 0.0);
                }
                TrigKind::Sin => {
                    out[j] += Complex64::new(0.0, -a);
                    out[n - j] += Complex64::new(0.0, a);
                }
            }
        }
        Ok(())
    }

    /// Spectrum of `φ c = Σ λ_m c_m e_m`.
    pub fn phi_spectrum(&self, coefs: &[f64]) -> Result<Vec<Complex64>> {
        if coefs.len() != self.mode_count() {
            return Err(Error::LengthMismatch {
                expected: self.mode_count(),
                got: coefs.len(),
            });
        }
        let weights: Vec<f64> = coefs.iter().zip(&self.lambdas).map(|(c, l)| c * l).collect();
        let mut spec = vec![Complex64::new(0.0, 0.0); self.grid.num_points()];
        self.accumulate_spectrum(&weights, &mut spec)?;
        Ok(spec)
    }

    pub fn apply_phi(&self, coefs: &[f64]) -> Result<RealField> {
        RealField::from_spectrum(self.grid.clone(), self.phi_spectrum(coefs)?)
    }

    pub fn basis_image(&self, m: usize) -> Result<RealField> {
        if m >= self.mode_count() {
            return Err(Error::InvalidMode(m));
        }
        let mut coefs = vec![0.0; self.mode_count()];
        coefs[m] = 1.0;
        self.apply_phi(&coefs)
    }

    /// `⟨g, e_m⟩` for every basis mode.
    pub fn project(&self, g: &RealField) -> Result<Vec<f64>> {
        if !self.grid.same_as(g.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(self.project_spectrum(&g.spectrum()))
    }

    pub(crate) fn project_spectrum(&self, spec: &[Complex64]) -> Vec<f64> {
        let c = (2.0 / self.grid.length()).sqrt() * self.grid.dx();
        (0..self.mode_count())
            .map(|m| {
                let mode = BasisMode::from_index(m);
                let j = mode.wave_index;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                match mode.kind {
                    TrigKind::Cos => sign * c * spec[j].re,
                    TrigKind::Sin => -sign * c * spec[j].im,
                }
            })
            .collect()
    }
}

/// Independent `N(0, dt)` draws, one per basis mode.
pub fn sample_white_increment<R: Rng + ?Sized>(
    mode_count: usize,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if dt < 0.0 || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("increment length {dt}")));
    }
    if dt == 0.0 {
        return Ok(vec![0.0; mode_count]);
    }
    let sd = dt.sqrt();
    Ok((0..mode_count)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect())
}
