//! Experiment configuration: TOML in, fully resolved and validated out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::driver::DriverMode;
use crate::error::{Error, Result};
use crate::noise::NoiseProfile;
use crate::zakharov::InitialProfile;

pub const OUTPUT_ENV: &str = "ZAKHAROV_SDE_OUT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub num_points: usize,
    pub domain_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub alpha: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub epsilon_list: Option<Vec<f64>>,
    #[serde(default = "PhysicsConfig::default_gamma")]
    pub gamma: f64,
}

impl PhysicsConfig {
    fn default_gamma() -> f64 {
        1.0
    }

    /// The sweep list, or the single ε as a one-element list.
    pub fn epsilons(&self) -> Vec<f64> {
        match (&self.epsilon_list, self.epsilon) {
            (Some(list), _) => list.clone(),
            (None, Some(e)) => vec![e],
            (None, None) => vec![0.1],
        }
    }

    /// The single-run ε: explicit value, else the last (smallest) sweep entry.
    pub fn single_epsilon(&self) -> f64 {
        self.epsilon
            .or_else(|| self.epsilon_list.as_ref().and_then(|l| l.last().copied()))
            .unwrap_or(0.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    #[serde(default = "DriverConfig::default_mode")]
    pub mode: DriverMode,
    #[serde(default = "DriverConfig::default_substeps")]
    pub substeps: usize,
    #[serde(default = "DriverConfig::default_start")]
    pub start: DriverStart,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverStart {
    Stationary,
    Zero,
}

impl DriverConfig {
    fn default_mode() -> DriverMode {
        DriverMode::CoupledEm
    }
    fn default_substeps() -> usize {
        8
    }
    fn default_start() -> DriverStart {
        DriverStart::Stationary
    }
}

impl Default for DriverConfig {
    fn default() -> Self {
        Self {
            mode: Self::default_mode(),
            substeps: Self::default_substeps(),
            start: Self::default_start(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteppingConfig {
    /// Fixed step; when absent the step is `min(dt_max, cfl · ε)`.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "SteppingConfig::default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "SteppingConfig::default_cfl")]
    pub cfl: f64,
    #[serde(default = "SteppingConfig::default_final_time")]
    pub final_time: f64,
    #[serde(default = "SteppingConfig::default_save_every")]
    pub save_every: usize,
}

impl SteppingConfig {
    fn default_dt_max() -> f64 {
        0.01
    }
    fn default_cfl() -> f64 {
        0.25
    }
    fn default_final_time() -> f64 {
        1.0
    }
    fn default_save_every() -> usize {
        1
    }

    /// Step count and step for a run at `eps`; the step divides `final_time`.
    pub fn resolve(&self, eps: f64) -> (usize, f64) {
        let target = self.dt.unwrap_or_else(|| self.dt_max.min(self.cfl * eps));
        if self.final_time == 0.0 {
            return (0, target);
        }
        let steps = (self.final_time / target - 1e-9).ceil().max(1.0) as usize;
        (steps, self.final_time / steps as f64)
    }
}

impl Default for SteppingConfig {
    fn default() -> Self {
        Self {
            dt: None,
            dt_max: Self::default_dt_max(),
            cfl: Self::default_cfl(),
            final_time: Self::default_final_time(),
            save_every: Self::default_save_every(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripPolicy {
    Continue,
    Halt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorConfig {
    #[serde(default = "MonitorConfig::default_delta")]
    pub delta: f64,
    #[serde(default = "MonitorConfig::default_policy")]
    pub policy: TripPolicy,
    /// Threshold is `scale · ε^{−δ}`; when absent, `scale_factor` times the
    /// stationary RMS of the monitored norm at damping `α`.
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default = "MonitorConfig::default_scale_factor")]
    pub scale_factor: f64,
}

impl MonitorConfig {
    fn default_delta() -> f64 {
        0.125
    }
    fn default_policy() -> TripPolicy {
        TripPolicy::Halt
    }
    fn default_scale_factor() -> f64 {
        2.0
    }
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            delta: Self::default_delta(),
            policy: Self::default_policy(),
            scale: None,
            scale_factor: Self::default_scale_factor(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default = "McConfig::default_paths")]
    pub paths: usize,
    #[serde(default = "McConfig::default_seed")]
    pub seed: u64,
}

impl McConfig {
    fn default_paths() -> usize {
        20
    }
    fn default_seed() -> u64 {
        20_240_601
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            paths: Self::default_paths(),
            seed: Self::default_seed(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub center: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default = "MetricConfig::default_order")]
    pub order: f64,
    /// Defaults to the pulse center.
    #[serde(default)]
    pub center: Option<f64>,
    /// Defaults to `L/4`.
    #[serde(default)]
    pub radius: Option<f64>,
    /// Extra windows; the metric is the maximum over all windows.
    #[serde(default)]
    pub windows: Vec<Window>,
}

impl MetricConfig {
    fn default_order() -> f64 {
        0.5
    }
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            order: Self::default_order(),
            center: None,
            radius: None,
            windows: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Ndjson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Defaults to `$ZAKHAROV_SDE_OUT`, else `output`.
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "OutputConfig::default_formats")]
    pub formats: Vec<OutputFormat>,
}

impl OutputConfig {
    fn default_formats() -> Vec<OutputFormat> {
        vec![OutputFormat::Csv, OutputFormat::Ndjson]
    }

    pub fn resolved_directory(&self) -> PathBuf {
        self.directory
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("output"))
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: None,
            formats: Self::default_formats(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    #[serde(default = "GeneratorConfig::default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "GeneratorConfig::default_paths")]
    pub paths: usize,
    /// Horizon of the drift finite difference.
    #[serde(default = "GeneratorConfig::default_drift_time")]
    pub drift_time: f64,
    /// Horizon and step of the variance-growth estimate.
    #[serde(default = "GeneratorConfig::default_variance_time")]
    pub variance_time: f64,
    #[serde(default = "GeneratorConfig::default_variance_dt")]
    pub variance_dt: f64,
    /// Half-width of the smooth test bump `h`.
    #[serde(default = "GeneratorConfig::default_bump_radius")]
    pub bump_radius: f64,
}

impl GeneratorConfig {
    fn default_epsilon() -> f64 {
        0.05
    }
    fn default_paths() -> usize {
        200
    }
    fn default_drift_time() -> f64 {
        0.5
    }
    fn default_variance_time() -> f64 {
        0.05
    }
    fn default_variance_dt() -> f64 {
        0.0025
    }
    fn default_bump_radius() -> f64 {
        4.0
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            epsilon: Self::default_epsilon(),
            paths: Self::default_paths(),
            drift_time: Self::default_drift_time(),
            variance_time: Self::default_variance_time(),
            variance_dt: Self::default_variance_dt(),
            bump_radius: Self::default_bump_radius(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default = "KernelConfig::default_samples")]
    pub samples: usize,
    #[serde(default = "KernelConfig::default_probes")]
    pub probes: usize,
}

impl KernelConfig {
    fn default_samples() -> usize {
        10_000
    }
    fn default_probes() -> usize {
        25
    }
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            samples: Self::default_samples(),
            probes: Self::default_probes(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub noise: NoiseProfile,
    pub initial: InitialProfile,
    #[serde(default)]
    pub driver: DriverConfig,
    #[serde(default)]
    pub stepping: SteppingConfig,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
}

/// Keys that must be present in a config file.
const REQUIRED: &[(&str, &str)] = &[
    ("grid", "num_points"),
    ("grid", "domain_length"),
    ("physics", "alpha"),
    ("noise", "amplitude"),
    ("initial", "profile"),
];

impl Default for ExperimentConfig {
    /// Desk-scale defaults: the noise band starts at `|k| = 2` so every
    /// driver mode is underdamped at `α = 4` and decorrelates on the fast
    /// time scale.
    fn default() -> Self {
        Self {
            grid: GridConfig {
                num_points: 256,
                domain_length: 16.0 * std::f64::consts::PI,
            },
            physics: PhysicsConfig {
                alpha: 4.0,
                epsilon: None,
                epsilon_list: Some(vec![0.4, 0.2, 0.1, 0.05]),
                gamma: 1.0,
            },
            noise: NoiseProfile {
                amplitude: 40.0,
                exponent: 2.0,
                min_wavenumber: 2.0,
                max_wavenumber: None,
                table: None,
            },
            initial: InitialProfile::Sech {
                amplitude: 1.0,
                center: 0.0,
                velocity: 0.0,
            },
            driver: DriverConfig::default(),
            stepping: SteppingConfig::default(),
            monitor: MonitorConfig::default(),
            mc: McConfig::default(),
            metric: MetricConfig::default(),
            output: OutputConfig::default(),
            generator: GeneratorConfig::default(),
            kernel: KernelConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config(span_field(&e), e.message().to_string()))?;
        for (section, key) in REQUIRED {
            let present = value
                .get(*section)
                .and_then(|s| s.as_table())
                .is_some_and(|t| t.contains_key(*key));
            if !present {
                return Err(Error::config(format!("{section}.{key}"), "missing required field"));
            }
        }
        let config: Self = toml::from_str(text).map_err(|e| {
            let (field, line) = match e.span() {
                Some(span) => {
                    let (field, line) = key_at(text, span.start);
                    (field.unwrap_or_else(|| span_field(&e)), format!(" (line {line})"))
                }
                None => (span_field(&e), String::new()),
            };
            Error::config(field, format!("{}{line}", e.message()))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.num_points < 8 || g.num_points % 2 != 0 {
            return Err(Error::config("grid.num_points", "must be even and at least 8"));
        }
        if !(g.domain_length > 0.0 && g.domain_length.is_finite()) {
            return Err(Error::config("grid.domain_length", "must be positive"));
        }
        let p = &self.physics;
        if !(p.alpha >= 0.0 && p.alpha.is_finite()) {
            return Err(Error::config("physics.alpha", "must be nonnegative"));
        }
        if let Some(e) = p.epsilon {
            if !(e > 0.0) {
                return Err(Error::config("physics.epsilon", "must be positive"));
            }
        }
        if let Some(list) = &p.epsilon_list {
            if list.is_empty() || list.iter().any(|&e| !(e > 0.0)) {
                return Err(Error::config("physics.epsilon_list", "must be nonempty and positive"));
            }
            if list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::config("physics.epsilon_list", "must be strictly decreasing"));
            }
        }
        if !(p.gamma >= 1.0 && p.gamma.is_finite()) {
            return Err(Error::config("physics.gamma", "must be at least 1"));
        }
        if !(self.noise.amplitude >= 0.0) {
            return Err(Error::config("noise.amplitude", "must be nonnegative"));
        }
        if self.driver.substeps == 0 {
            return Err(Error::config("driver.substeps", "must be at least 1"));
        }
        let s = &self.stepping;
        if let Some(dt) = s.dt {
            if !(dt > 0.0) {
                return Err(Error::config("stepping.dt", "must be positive"));
            }
        }
        if !(s.dt_max > 0.0) || !(s.cfl > 0.0) {
            return Err(Error::config("stepping.dt_max", "step rule needs positive dt_max and cfl"));
        }
        if !(s.final_time >= 0.0 && s.final_time.is_finite()) {
            return Err(Error::config("stepping.final_time", "must be nonnegative"));
        }
        if s.save_every == 0 {
            return Err(Error::config("stepping.save_every", "must be at least 1"));
        }
        let m = &self.monitor;
        if !(m.delta > 0.0 && m.delta <= 0.125) {
            return Err(Error::config("monitor.delta", "must lie in (0, 1/8]"));
        }
        if let Some(sc) = m.scale {
            if !(sc > 0.0) {
                return Err(Error::config("monitor.scale", "must be positive"));
            }
        }
        if !(m.scale_factor > 0.0) {
            return Err(Error::config("monitor.scale_factor", "must be positive"));
        }
        if self.mc.paths == 0 {
            return Err(Error::config("mc.paths", "must be at least 1"));
        }
        let quarter = g.num_points as f64 / 4.0;
        if !(self.metric.order >= 0.0 && self.metric.order < quarter) {
            return Err(Error::config("metric.order", format!("must lie in [0, {quarter})")));
        }
        for w in self.windows() {
            if !(w.radius > 0.0 && w.radius <= 0.25 * g.domain_length) {
                return Err(Error::config("metric.radius", "window radius must lie in (0, L/4]"));
            }
        }
        let gen = &self.generator;
        if !(gen.epsilon > 0.0) || gen.paths < 2 || !(gen.drift_time > 0.0) || !(gen.variance_time > 0.0) || !(gen.variance_dt > 0.0) || !(gen.bump_radius > 0.0) {
            return Err(Error::config("generator", "needs positive times, epsilon and radius, and at least 2 paths"));
        }
        if self.kernel.samples < 2 || self.kernel.probes == 0 {
            return Err(Error::config("kernel", "needs at least 2 samples and 1 probe"));
        }
        Ok(())
    }

    /// Primary window followed by any extra windows.
    pub fn windows(&self) -> Vec<Window> {
        let mut out = vec![Window {
            center: self.metric.center.unwrap_or_else(|| self.initial.center()),
            radius: self.metric.radius.unwrap_or(0.25 * self.grid.domain_length),
        }];
        out.extend(self.metric.windows.iter().copied());
        out
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }

    /// The config together with the derived per-ε step sizes.
    pub fn resolved(&self) -> ResolvedConfig {
        let steps = self
            .physics
            .epsilons()
            .into_iter()
            .map(|eps| {
                let (n, dt) = self.stepping.resolve(eps);
                DerivedStep { epsilon: eps, steps: n, dt }
            })
            .collect();
        let mut config = self.clone();
        config.output.directory = Some(self.output.resolved_directory());
        ResolvedConfig {
            config,
            derived: Derived {
                steps,
                windows: self.windows(),
            },
        }
    }
}

/// `section.key` of the assignment containing byte `offset`, and its line number.
fn key_at(text: &str, offset: usize) -> (Option<String>, usize) {
    let before = &text[..offset.min(text.len())];
    let line_no = before.lines().count().max(1);
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    let key = line.split_once('=').map(|(k, _)| k.trim().to_string());
    let section = before[..line_start]
        .lines()
        .rev()
        .find_map(|l| l.trim().strip_prefix('[')?.strip_suffix(']').map(|s| s.trim().to_string()));
    let field = match (section, key) {
        (Some(s), Some(k)) => Some(format!("{s}.{k}")),
        (None, Some(k)) => Some(k),
        _ => None,
    };
    (field, line_no)
}

fn span_field(e: &toml::de::Error) -> String {
    // The deserializer reports paths only inside the message; keep the
    // first backquoted name when there is one.
    let msg = e.message();
    msg.split('`').nth(1).unwrap_or("config").to_string()
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivedStep {
    pub epsilon: f64,
    pub steps: usize,
    pub dt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Derived {
    pub steps: Vec<DerivedStep>,
    pub windows: Vec<Window>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolvedConfig {
    #[serde(flatten)]
    pub config: ExperimentConfig,
    pub derived: Derived,
}
