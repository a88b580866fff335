//! Damped linear wave flow `n'' + α n' = ∂ₓ² n` via its per-mode
//! multipliers `exp(t A_ξ)`, `A_ξ = [[0, 1], [−ξ², −α]]`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{GaussLegendre, Mat2};
use crate::spectral::{mean_negligible, RealField, SpectralGrid};

const SERIES_TERMS: usize = 6;

/// `(e^{-αt/2} C, e^{-αt/2} S)` where `C = cosh(βt)`, `S = sinh(βt)/β` with
/// `β² = (α² − 4ξ²)/4` (trigonometric when negative).
fn damped_cs(alpha: f64, xi: f64, t: f64) -> (f64, f64) {
    let h = 0.5 * alpha;
    let d = alpha * alpha - 4.0 * xi * xi;
    let x = 0.25 * d * t * t;
    if d == 0.0 || (d.abs() < 1e-4 * alpha * alpha && x.abs() <= 0.1) {
        let (mut c, mut s) = (0.0, 0.0);
        let (mut tc, mut ts) = (1.0, t);
        for n in 0..SERIES_TERMS {
            c += tc;
            s += ts;
            let a = (2 * n + 1) as f64;
            let b = (2 * n + 2) as f64;
            tc *= x / (a * b);
            ts *= x / (b * (b + 1.0));
        }
        let e = (-h * t).exp();
        return (e * c, e * s);
    }
    if d > 0.0 {
        let sq = d.sqrt();
        let beta = 0.5 * sq;
        if beta * t < 1.0 {
            let e = (-h * t).exp();
            (e * (beta * t).cosh(), e * (beta * t).sinh() / beta)
        } else {
            // β − h written without cancellation.
            let slow = (-2.0 * xi * xi / (sq + alpha) * t).exp();
            let fast = (-(beta + h) * t).exp();
            (0.5 * (slow + fast), 0.5 * (slow - fast) / beta)
        }
    } else {
        let beta = 0.5 * (-d).sqrt();
        let e = (-h * t).exp();
        (e * (beta * t).cos(), e * (beta * t).sin() / beta)
    }
}

pub fn semigroup_multiplier(alpha: f64, xi: f64, t: f64) -> Result<Mat2> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("damping must be nonnegative, got {alpha}")));
    }
    Ok(multiplier_unchecked(alpha, xi, t))
}

pub(crate) fn multiplier_unchecked(alpha: f64, xi: f64, t: f64) -> Mat2 {
    let (c, s) = damped_cs(alpha, xi, t);
    let h = 0.5 * alpha;
    [[c + h * s, s], [-xi * xi * s, c - h * s]]
}

/// Slowest exponential decay rate among the multiplier entries.
pub fn decay_rate(alpha: f64, xi: f64) -> f64 {
    let d = alpha * alpha - 4.0 * xi * xi;
    if d > 0.0 {
        2.0 * xi * xi / (d.sqrt() + alpha)
    } else {
        0.5 * alpha
    }
}

/// Multipliers for one `(α, t)` at every FFT index of a grid.
#[derive(Clone, Debug)]
pub struct SemigroupCache {
    alpha: f64,
    t: f64,
    mats: Vec<Mat2>,
}

impl SemigroupCache {
    pub fn new(grid: &SpectralGrid, alpha: f64, t: f64) -> Result<Self> {
        let mats = grid
            .wavenumbers()
            .iter()
            .map(|&k| semigroup_multiplier(alpha, k, t))
            .collect::<Result<_>>()?;
        Ok(Self { alpha, t, mats })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn matrix(&self, j: usize) -> &Mat2 {
        &self.mats[j]
    }

    pub(crate) fn apply_spectral(&self, a: &mut [Complex64], b: &mut [Complex64]) {
        for ((m, x), y) in self.mats.iter().zip(a.iter_mut()).zip(b.iter_mut()) {
            let (p, q) = (*x, *y);
            *x = p * m[0][0] + q * m[0][1];
            *y = p * m[1][0] + q * m[1][1];
        }
    }
}

#[derive(Clone, Debug)]
pub struct WavePair {
    pub n: RealField,
    pub mu: RealField,
}

impl WavePair {
    pub fn new(n: RealField, mu: RealField) -> Result<Self> {
        if !n.grid().same_as(mu.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { n, mu })
    }

    pub fn zeros(grid: Arc<SpectralGrid>) -> Self {
        Self {
            n: RealField::zeros(grid.clone()),
            mu: RealField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.n.grid()
    }

    /// `‖n‖²_{H¹} + ‖μ‖²_{L²} + ‖∂ₓ⁻¹μ‖²_{L²}`, the contraction functional.
    pub fn contraction_energy(&self) -> Result<f64> {
        use crate::spectral::NormKind::*;
        let a = self.n.sobolev_norm(1.0, Inhomogeneous)?;
        let b = self.mu.sobolev_norm(0.0, Inhomogeneous)?;
        let c = self.mu.sobolev_norm(-1.0, Homogeneous)?;
        Ok(a * a + b * b + c * c)
    }
}

pub fn apply_semigroup(alpha: f64, t: f64, pair: &WavePair) -> Result<WavePair> {
    let cache = SemigroupCache::new(pair.grid(), alpha, t)?;
    apply_cached(&cache, pair)
}

pub fn apply_cached(cache: &SemigroupCache, pair: &WavePair) -> Result<WavePair> {
    let grid = pair.grid().clone();
    if cache.mats.len() != grid.num_points() {
        return Err(Error::GridMismatch);
    }
    let mut a = pair.n.spectrum();
    let mut b = pair.mu.spectrum();
    cache.apply_spectral(&mut a, &mut b);
    Ok(WavePair {
        n: RealField::from_spectrum(grid.clone(), a)?,
        mu: RealField::from_spectrum(grid, b)?,
    })
}

/// Exact flow over `tau` of `n'' + α n' = ∂ₓ²(n + g)` with `g` frozen.
pub fn forced_step(alpha: f64, tau: f64, pair: &WavePair, g: &RealField) -> Result<WavePair> {
    if !pair.grid().same_as(g.grid()) {
        return Err(Error::GridMismatch);
    }
    let cache = SemigroupCache::new(pair.grid(), alpha, tau)?;
    let mut gs = g.spectrum();
    if !mean_negligible(&gs) {
        log::debug!("forced_step: source mean {} projected out", g.mean());
    }
    gs[0] = Complex64::new(0.0, 0.0);
    for c in gs.iter_mut() {
        *c = -*c;
    }
    let mut a = pair.n.spectrum();
    let mut b = pair.mu.spectrum();
    for (x, s) in a.iter_mut().zip(&gs) {
        *x -= s;
    }
    cache.apply_spectral(&mut a, &mut b);
    for (x, s) in a.iter_mut().zip(&gs) {
        *x += s;
    }
    let grid = pair.grid().clone();
    Ok(WavePair {
        n: RealField::from_spectrum(grid.clone(), a)?,
        mu: RealField::from_spectrum(grid, b)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeIntegral {
    pub value: f64,
    pub truncation_bound: f64,
}

/// Per-mode Gram matrices `∫₀^∞ m_{cp}(t) m_{cq}(t) dt`, integrated on a
/// per-mode horizon set by that mode's own decay rate.
#[derive(Clone, Debug)]
pub struct TimeIntegralOperator {
    grid: Arc<SpectralGrid>,
    alpha: f64,
    component: Component,
    gram: Vec<[f64; 3]>,
    tails: Vec<[f64; 3]>,
}

impl TimeIntegralOperator {
    pub fn new(grid: Arc<SpectralGrid>, alpha: f64, component: Component, quad_tol: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::NonIntegrable("damping must be positive"));
        }
        if !(quad_tol > 0.0 && quad_tol < 1.0) {
            return Err(Error::InvalidParameter(format!("quadrature tolerance {quad_tol}")));
        }
        let rule = GaussLegendre::new(10);
        let row = match component {
            Component::First => 0,
            Component::Second => 1,
        };
        let half = grid.num_points() / 2;
        let base = 2.0 * std::f64::consts::PI / grid.length();
        let mut gram = Vec::with_capacity(half + 1);
        let mut tails = Vec::with_capacity(half + 1);
        for j in 0..=half {
            let xi = base * j as f64;
            if j == 0 {
                gram.push([0.0; 3]);
                tails.push([0.0; 3]);
                continue;
            }
            let rate = decay_rate(alpha, xi);
            let horizon = ((1.0 / quad_tol).ln() + 10.0) / (2.0 * rate);
            let d = alpha * alpha - 4.0 * xi * xi;
            let freq = if d < 0.0 { 0.5 * (-d).sqrt() + 0.5 * alpha } else { alpha };
            let panels = ((horizon * freq).ceil() as usize).max(4);
            let mut acc = [0.0; 3];
            let width = horizon / panels as f64;
            let mut last = [0.0; 3];
            for p in 0..panels {
                let lo = p as f64 * width;
                for (t, w) in rule.mapped(lo, lo + width) {
                    let m = multiplier_unchecked(alpha, xi, t);
                    let (a, b) = (m[row][0], m[row][1]);
                    acc[0] += w * a * a;
                    acc[1] += w * a * b;
                    acc[2] += w * b * b;
                }
                if p + 1 == panels {
                    let m = multiplier_unchecked(alpha, xi, horizon);
                    last = [m[row][0].abs(), m[row][1].abs(), 0.0];
                }
            }
            // Envelope continuation beyond the horizon.
            let env = (last[0] + last[1]).powi(2) / (2.0 * rate);
            gram.push(acc);
            tails.push([env, 0.0, 0.0]);
        }
        Ok(Self {
            grid,
            alpha,
            component,
            gram,
            tails,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn component(&self) -> Component {
        self.component
    }

    /// `∫₀^∞ ‖(S(t) pair)_c‖²_{H^k ∩ Ḣ^{−l}} dt` for a mean-zero pair.
    pub fn evaluate(&self, pair: &WavePair, k: u32, l: u32) -> Result<TimeIntegral> {
        if !pair.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let a = pair.n.spectrum();
        let b = pair.mu.spectrum();
        if !mean_negligible(&a) || !mean_negligible(&b) {
            return Err(Error::ZeroModeObstruction("time_integral_norm"));
        }
        let n = self.grid.num_points() as f64;
        let scale = self.grid.length() / (n * n);
        let (mut value, mut bound) = (0.0, 0.0);
        for (j, (&xi, (p, q))) in self.grid.wavenumbers().iter().zip(a.iter().zip(&b)).enumerate().skip(1) {
            let idx = self.grid.wave_index(j);
            let g = &self.gram[idx];
            let w = intersection_weight(xi, k as f64, l as f64);
            let quad = g[0] * p.norm_sqr() + 2.0 * g[1] * (p * q.conj()).re + g[2] * q.norm_sqr();
            value += w * quad;
            bound += w * self.tails[idx][0] * (p.norm() + q.norm()).powi(2);
        }
        Ok(TimeIntegral {
            value: value * scale,
            truncation_bound: bound * scale,
        })
    }
}

/// Squared weight of `H^k ∩ Ḣ^{−l}` at a nonzero wavenumber.
pub fn intersection_weight(xi: f64, k: f64, l: f64) -> f64 {
    (1.0 + xi * xi).powf(k) + (xi * xi).powf(-l)
}

pub fn time_integral_norm(
    alpha: f64,
    pair: &WavePair,
    k: u32,
    l: u32,
    component: Component,
    quad_tol: f64,
) -> Result<TimeIntegral> {
    TimeIntegralOperator::new(pair.grid().clone(), alpha, component, quad_tol)?.evaluate(pair, k, l)
}

/// Right-hand side of the time-integral bound:
/// component 1: `‖n‖²_{H^k∩Ḣ^{−(l+1)}} + ‖μ‖²_{H^{k−1}∩Ḣ^{−(l+1)}}`;
/// component 2: `‖n‖²_{H^{k+1}∩Ḣ^{−l}} + ‖μ‖²_{H^k∩Ḣ^{−l}}`.
pub fn time_integral_bound_rhs(pair: &WavePair, k: u32, l: u32, component: Component) -> Result<f64> {
    let (kn, km, ll) = match component {
        Component::First => (k as f64, k as f64 - 1.0, l as f64 + 1.0),
        Component::Second => (k as f64 + 1.0, k as f64, l as f64),
    };
    let a = pair.n.intersection_norm(kn, ll)?;
    let b = pair.mu.intersection_norm(km, ll)?;
    Ok(a * a + b * b)
}
