use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowConfig, Integrator};
use crate::grad::LossKind;
use crate::nnet::{BumpFunction, BumpProfile, DensityKind, NetworkSpec, TargetFunction};
use crate::spectral::Grid;

pub const SCHEMA_VERSION: u32 = 1;

/// A complete, seeded experiment description (TOML on disk).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Master seed; network init uses it directly, samples derive theirs.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub network: NetworkSpec,
    pub target: TargetFunction,
    pub bump: BumpConfig,
    pub samples: SampleConfig,
    pub density: DensityConfig,
    pub loss: LossKind,
    pub flow: FlowSection,
    pub grid: GridConfig,
    #[serde(default)]
    pub eta: EtaConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub inner: [f64; 2],
    pub outer: [f64; 2],
    #[serde(default)]
    pub profile: BumpProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Random,
    Linspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub count: usize,
    pub interval: [f64; 2],
    #[serde(default)]
    pub spacing: Spacing,
    /// Defaults to a value derived from the master seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// How the population measure is represented: the training samples, or a
/// density integrated on the spectral grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    Empirical,
    UniformOn { a: f64, b: f64 },
    TruncatedConstant,
}

impl DensityConfig {
    pub fn density_kind(self) -> Option<DensityKind> {
        match self {
            DensityConfig::Empirical => None,
            DensityConfig::UniformOn { a, b } => Some(DensityKind::UniformOn { a, b }),
            DensityConfig::TruncatedConstant => Some(DensityKind::TruncatedConstant),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub integrator: Integrator,
    pub step: f64,
    pub steps: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

fn default_stride() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub m: usize,
    pub domain: [f64; 2],
}

/// Explicit cutoffs, or the detected peaks plus a log-spaced sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EtaConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Decay required of a window, `L(T2) <= delta L(T1)`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Levels `k` of the nested windows `L(T2) <= 2^-k L(T1)`.
    #[serde(default = "default_levels")]
    pub nested_levels: u32,
    /// Highest Japanese-bracket order reported.
    #[serde(default = "default_bracket")]
    pub bracket_order: u32,
    /// Radius of the loss sandwich scan.
    #[serde(default = "default_r0")]
    pub sandwich_radius: f64,
}

fn default_delta() -> f64 {
    0.5
}

fn default_levels() -> u32 {
    8
}

fn default_bracket() -> u32 {
    3
}

fn default_r0() -> f64 {
    1.0
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            delta: default_delta(),
            nested_levels: default_levels(),
            bracket_order: default_bracket(),
            sandwich_radius: default_r0(),
        }
    }
}

fn interval_ok(v: [f64; 2]) -> bool {
    v[0].is_finite() && v[1].is_finite() && v[0] < v[1]
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config("<toml>", e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Field-level validation of every section.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.network.input_dim() != 1 {
            return Err(Error::config("network.widths", "experiments are one-dimensional (n_0 = 1)"));
        }
        self.target
            .validate()
            .map_err(|e| Error::config("target", e.to_string()))?;
        self.bump_function()?;
        if self.samples.count == 0 {
            return Err(Error::config("samples.count", "must be >= 1"));
        }
        if !interval_ok(self.samples.interval) {
            return Err(Error::config("samples.interval", "needs finite a < b"));
        }
        if let DensityConfig::UniformOn { a, b } = self.density {
            if !interval_ok([a, b]) {
                return Err(Error::config("density", "uniform_on needs finite a < b"));
            }
        }
        if let LossKind::Power { p } = self.loss {
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::config("loss.p", "must be positive and finite"));
            }
        }
        self.flow_config()
            .validate()
            .map_err(|e| match e {
                Error::Config { field, message } => Error::config(field, message),
                other => Error::config("flow", other.to_string()),
            })?;
        let grid = self.grid()?;
        let bump = self.bump_function()?;
        if bump.outer().0 < grid.start() || bump.outer().1 > grid.end() {
            return Err(Error::config("grid.domain", "must contain the bump support"));
        }
        if let Some(values) = &self.eta.values {
            if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::config("eta.values", "need a nonempty list of positive cutoffs"));
            }
        }
        let d = &self.diagnostics;
        if !(d.delta > 0.0 && d.delta < 1.0) {
            return Err(Error::config("diagnostics.delta", "must lie in (0, 1)"));
        }
        if d.bracket_order > crate::spectral::MAX_BRACKET_ORDER {
            return Err(Error::config("diagnostics.bracket_order", "exceeds the supported cap"));
        }
        if !(d.sandwich_radius > 1e-6) {
            return Err(Error::config("diagnostics.sandwich_radius", "must exceed 1e-6"));
        }
        Ok(())
    }

    pub fn bump_function(&self) -> Result<BumpFunction> {
        let b = &self.bump;
        BumpFunction::new((b.inner[0], b.inner[1]), (b.outer[0], b.outer[1]), b.profile)
            .map_err(|e| Error::config("bump", e.to_string()))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.domain[0], self.grid.domain[1], self.grid.m)
            .map_err(|e| Error::config("grid", e.to_string()))
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            integrator: self.flow.integrator,
            step: self.flow.step,
            steps: self.flow.steps,
            stride: self.flow.stride,
            seed: self.seed,
            bound: self.flow.bound,
        }
    }

    pub fn sample_seed(&self) -> u64 {
        self.samples.seed.unwrap_or_else(|| sweep_seed(self.seed, u64::MAX))
    }

    /// Training inputs, deterministic in the sample seed.
    pub fn sample_points(&self) -> Vec<f64> {
        let [a, b] = self.samples.interval;
        let n = self.samples.count;
        match self.samples.spacing {
            Spacing::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.sample_seed());
                (0..n).map(|_| rng.random_range(a..b)).collect()
            }
            Spacing::Linspace => {
                if n == 1 {
                    vec![0.5 * (a + b)]
                } else {
                    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
                }
            }
        }
    }

    /// Whether the band residual carries `sqrt(rho)`: a grid-quadrature
    /// measure with a quadratic loss, where the training loss itself is the
    /// weighted residual energy.
    pub fn weighted_residual(&self) -> bool {
        let quadratic = match self.loss {
            LossKind::Mse => true,
            LossKind::Power { p } => p == 2.0,
        };
        quadratic && self.density.density_kind().is_some()
    }
}

/// Seed for run `index` of a sweep over `base` (SplitMix64 finalizer).
pub fn sweep_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
