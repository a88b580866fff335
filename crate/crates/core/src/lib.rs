pub mod calibration;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod nls;
pub mod noise;
pub mod record;
pub mod runner;
pub mod spectral;
pub mod stream;
pub mod wave;
pub mod zakharov;

pub use error::{Error, Result};
