use std::ffi::{CStr, CString};
use std::ptr;

use zakharov_sde_ffi::*;

fn last_error() -> String {
    let p = zs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

const SMALL: &str = r#"
[grid]
num_points = 64
domain_length = 50.26548245743669

[physics]
alpha = 4.0
epsilon = 0.1

[noise]
amplitude = 5.0
min_wavenumber = 2.0

[initial]
profile = "sech"
amplitude = 1.0
center = 0.0
velocity = 0.0
"#;

fn small_config() -> *mut ZsConfig {
    let text = CString::new(SMALL).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { zs_config_from_toml(text.as_ptr(), &mut cfg) }, ZsStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

#[test]
fn config_errors_carry_field_names() {
    let text = CString::new("[grid]\nnum_points = 64\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { zs_config_from_toml(text.as_ptr(), &mut cfg) }, ZsStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("grid.domain_length"));
}

#[test]
fn null_handles_are_rejected() {
    let mut t = 0.0;
    unsafe {
        assert_eq!(zs_zakharov_time(ptr::null(), &mut t), ZsStatus::NullPointer);
        assert_eq!(zs_zakharov_step(ptr::null_mut(), 1), ZsStatus::NullPointer);
        assert_eq!(zs_config_from_toml(ptr::null(), &mut ptr::null_mut()), ZsStatus::NullPointer);
        assert_eq!(zs_semigroup_multiplier(1.0, 1.0, 1.0, ptr::null_mut()), ZsStatus::NullPointer);
        zs_config_free(ptr::null_mut());
        zs_zakharov_free(ptr::null_mut());
        zs_nls_free(ptr::null_mut());
    }
}

#[test]
fn multiplier_determinant_and_bad_input() {
    let mut m = [0.0; 4];
    assert_eq!(unsafe { zs_semigroup_multiplier(1.0, 3.0, 0.5, m.as_mut_ptr()) }, ZsStatus::Ok);
    let det = m[0] * m[3] - m[1] * m[2];
    assert!((det - (-0.5f64).exp()).abs() < 1e-13);
    assert_eq!(unsafe { zs_semigroup_multiplier(1.0, 3.0, -1.0, m.as_mut_ptr()) }, ZsStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn kernels_through_the_abi() {
    let cfg = small_config();
    let (mut kxy, mut kyx, mut k1) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(zs_kernel_k(cfg, 0.3, -1.1, &mut kxy), ZsStatus::Ok);
        assert_eq!(zs_kernel_k(cfg, -1.1, 0.3, &mut kyx), ZsStatus::Ok);
        assert_eq!(zs_kernel_k1(2.0, 1.0, -1.0, &mut k1), ZsStatus::Ok);
        zs_config_free(cfg);
    }
    assert!((kxy - kyx).abs() <= 1e-14 * kxy.abs());
    assert!(k1.is_finite());
}

#[test]
fn coupled_handles_share_increments_and_conserve_mass() {
    // SAFETY: every pointer is a live handle or a buffer of the stated length.
    unsafe {
        let cfg = small_config();
        let mut n = 0usize;
        assert_eq!(zs_config_num_points(cfg, &mut n), ZsStatus::Ok);
        let (mut z, mut u) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(zs_zakharov_new(cfg, 0.1, 2, &mut z), ZsStatus::Ok);
        assert_eq!(zs_nls_new(cfg, 0.1, 2, &mut u), ZsStatus::Ok);
        let mut m0 = 0.0;
        assert_eq!(zs_zakharov_mass(z, &mut m0), ZsStatus::Ok);
        assert_eq!(zs_zakharov_step(z, 20), ZsStatus::Ok);
        assert_eq!(zs_nls_step(u, 20), ZsStatus::Ok);
        let (mut tz, mut tu, mut m1) = (0.0, 0.0, 0.0);
        assert_eq!(zs_zakharov_time(z, &mut tz), ZsStatus::Ok);
        assert_eq!(zs_nls_time(u, &mut tu), ZsStatus::Ok);
        assert_eq!(zs_zakharov_mass(z, &mut m1), ZsStatus::Ok);
        assert!((tz - tu).abs() < 1e-12 && tz > 0.0);
        assert!((m1 - m0).abs() < 1e-11 * m0);

        let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(zs_zakharov_field(z, re.as_mut_ptr(), im.as_mut_ptr(), n), ZsStatus::Ok);
        assert_eq!(zs_nls_field(u, re.as_mut_ptr(), im.as_mut_ptr(), n - 1), ZsStatus::BufferTooSmall);
        assert_eq!(zs_nls_field(u, re.as_mut_ptr(), im.as_mut_ptr(), n), ZsStatus::Ok);
        assert!(re.iter().chain(&im).all(|v| v.is_finite()));
        zs_zakharov_free(z);
        zs_nls_free(u);
        zs_config_free(cfg);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/zakharov_sde.h")).unwrap();
    for name in [
        "zs_last_error",
        "zs_config_default",
        "zs_config_from_toml",
        "zs_config_set_seed",
        "zs_config_num_points",
        "zs_config_free",
        "zs_zakharov_new",
        "zs_zakharov_step",
        "zs_zakharov_time",
        "zs_zakharov_mass",
        "zs_zakharov_field",
        "zs_zakharov_free",
        "zs_nls_new",
        "zs_nls_step",
        "zs_nls_time",
        "zs_nls_field",
        "zs_nls_free",
        "zs_semigroup_multiplier",
        "zs_kernel_k1",
        "zs_kernel_k",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("size_t"));
}
