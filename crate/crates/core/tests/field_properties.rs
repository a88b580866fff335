use std::sync::Arc;

use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use zakharov_sde::noise::{make_phi, NoiseProfile};
use zakharov_sde::spectral::{symbols, ComplexField, NormKind, RealField, SpectralGrid, ZeroModePolicy};
use zakharov_sde::wave::{apply_semigroup, semigroup_multiplier, WavePair};

const L: f64 = 16.0 * std::f64::consts::PI;

fn grid(n: usize) -> Arc<SpectralGrid> {
    SpectralGrid::new(n, L).unwrap()
}

/// Random smooth real field: a few low modes with the given coefficients.
fn field(g: &Arc<SpectralGrid>, coefs: &[(f64, f64)], mean: f64) -> RealField {
    RealField::from_fn(g.clone(), |x| {
        mean + coefs
            .iter()
            .enumerate()
            .map(|(j, &(a, b))| {
                let k = 2.0 * std::f64::consts::PI * (j + 1) as f64 / L;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum::<f64>()
    })
}

fn coefs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(c in coefs(), mean in -1.0..1.0f64) {
        let g = grid(64);
        let f = field(&g, &c, mean);
        let norm = f.sobolev_norm(0.0, NormKind::Inhomogeneous).unwrap();
        let direct = g.dx() * f.values().iter().map(|v| v * v).sum::<f64>();
        prop_assert!((norm * norm - direct).abs() <= 1e-12 * direct.max(1e-300));
    }

    #[test]
    fn symbols_are_linear(c1 in coefs(), c2 in coefs(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let g = grid(64);
        let (f, h) = (field(&g, &c1, 0.2), field(&g, &c2, -0.4));
        let combo = f.scaled(a).add(&h.scaled(b)).unwrap();
        let op = |x: &RealField| x.apply_symbol(symbols::bessel(1.5), ZeroModePolicy::Identity).unwrap();
        let lhs = op(&combo);
        let rhs = op(&f).scaled(a).add(&op(&h).scaled(b)).unwrap();
        let scale = lhs.max_abs().max(1.0);
        for (x, y) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn laplacian_inverts_inverse_laplacian(c in coefs()) {
        let g = grid(128);
        let f = field(&g, &c, 0.0);
        let back = f.inverse_laplacian(ZeroModePolicy::Error).unwrap().laplacian();
        let scale = f.max_abs();
        for (x, y) in f.values().iter().zip(back.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn windowed_norm_grows_with_radius(c in coefs(), r in 1.0..(L / 8.0), center in -5.0..5.0f64, s in 0.0..1.5f64) {
        let g = grid(128);
        let f = field(&g, &c, 0.3).to_complex();
        let small = f.windowed_norm(s, center, r).unwrap();
        let large = f.windowed_norm(s, center, 2.0 * r).unwrap();
        prop_assert!(large + 1e-12 * large.max(1.0) >= small);
    }

    #[test]
    fn multiplier_determinant_and_group_law(alpha in 0.0..3.0f64, j in 0usize..64, s in 0.0..5.0f64, t in 0.0..5.0f64) {
        let xi = 2.0 * std::f64::consts::PI * j as f64 / L;
        let ms = semigroup_multiplier(alpha, xi, s).unwrap();
        let mt = semigroup_multiplier(alpha, xi, t).unwrap();
        let mst = semigroup_multiplier(alpha, xi, s + t).unwrap();
        let det = ms[0][0] * ms[1][1] - ms[0][1] * ms[1][0];
        prop_assert!((det - (-alpha * s).exp()).abs() <= 1e-12 * (-alpha * s).exp().max(1e-300) + 1e-15);
        for a in 0..2 {
            for b in 0..2 {
                let prod = mt[a][0] * ms[0][b] + mt[a][1] * ms[1][b];
                prop_assert!((prod - mst[a][b]).abs() <= 1e-12 * (1.0 + mst[a][b].abs()));
            }
        }
    }

    #[test]
    fn damped_energy_is_nonincreasing(alpha in 0.1..3.0f64, c1 in coefs(), c2 in coefs(), t in 0.01..2.0f64) {
        let g = grid(64);
        let pair = WavePair::new(field(&g, &c1, 0.0), field(&g, &c2, 0.0)).unwrap();
        let e0 = pair.contraction_energy().unwrap();
        let e1 = apply_semigroup(alpha, t, &pair).unwrap().contraction_energy().unwrap();
        let e2 = apply_semigroup(alpha, 2.0 * t, &pair).unwrap().contraction_energy().unwrap();
        prop_assert!(e1 <= e0 * (1.0 + 1e-12));
        prop_assert!(e2 <= e1 * (1.0 + 1e-12));
    }

    #[test]
    fn noise_synthesis_obeys_cauchy_schwarz(c in coefs(), mean in -1.0..1.0f64) {
        let g = grid(64);
        let phi = make_phi(g.clone(), &NoiseProfile { min_wavenumber: 0.5, ..NoiseProfile::algebraic(2.0) }).unwrap();
        let f = field(&g, &c, mean);
        let proj = phi.project(&f).unwrap();
        let lhs: f64 = proj.iter().enumerate().map(|(m, p)| phi.lambda(m).powi(2) * p * p).sum();
        let hs = phi.hs_norm(0.0, NormKind::Inhomogeneous);
        let l2 = f.sobolev_norm(0.0, NormKind::Inhomogeneous).unwrap();
        prop_assert!(lhs <= hs * hs * l2 * l2 * (1.0 + 1e-12));
    }
}

#[test]
fn basis_images_are_mean_zero() {
    let g = grid(64);
    let phi = make_phi(g, &NoiseProfile::algebraic(3.0)).unwrap();
    for m in 0..phi.mode_count() {
        let b = phi.basis_image(m).unwrap();
        assert!(b.mean().abs() < 1e-14, "mode {m}");
    }
}

#[test]
fn complex_parseval_with_phases() {
    let g = grid(32);
    let u = ComplexField::from_fn(g.clone(), |x| Complex64::from_polar((-x * x / 8.0).exp(), 0.3 * x));
    let n = u.sobolev_norm(0.0, NormKind::Inhomogeneous).unwrap();
    let direct = g.dx() * u.physical().iter().map(|c| c.norm_sqr()).sum::<f64>();
    assert_relative_eq!(n * n, direct, max_relative = 1e-12);
}
