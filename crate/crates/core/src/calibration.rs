//! Fitted constants for bounds that are known only up to a constant.
//!
//! The constant is the least value making the bound hold on a calibration
//! set, times a fixed headroom; it is then frozen and checked on a disjoint
//! set of samples.

use serde::Serialize;

pub const HEADROOM: f64 = 1.25;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FittedConstant {
    pub value: f64,
    pub calibration_max: f64,
    pub calibration_samples: usize,
    /// Largest requirement seen out of sample.
    pub test_max: f64,
    pub test_samples: usize,
    pub holds: bool,
}

/// `lhs ≤ C · rhs`: calibrates `C = headroom · max lhs/rhs` and checks it on `test`.
pub fn fit_ratio(calibration: &[(f64, f64)], test: &[(f64, f64)]) -> FittedConstant {
    let ratio = |&(lhs, rhs): &(f64, f64)| if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
    let calibration_max = calibration.iter().map(ratio).fold(0.0, f64::max);
    let test_max = test.iter().map(ratio).fold(0.0, f64::max);
    let value = HEADROOM * calibration_max;
    FittedConstant {
        value,
        calibration_max,
        calibration_samples: calibration.len(),
        test_max,
        test_samples: test.len(),
        holds: test_max <= value,
    }
}

/// Additive constant: `violation ≤ C`, where violations are nonnegative.
pub fn fit_offset(calibration: &[f64], test: &[f64]) -> FittedConstant {
    let calibration_max = calibration.iter().copied().fold(0.0, f64::max);
    let test_max = test.iter().copied().fold(0.0, f64::max);
    let value = HEADROOM * calibration_max;
    FittedConstant {
        value,
        calibration_max,
        calibration_samples: calibration.len(),
        test_max,
        test_samples: test.len(),
        holds: test_max <= value,
    }
}
