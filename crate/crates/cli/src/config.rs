//! Experiment configuration (TOML). Every field has a default, so an empty
//! file is the default experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Coarse quadrature cells per parameter axis (the fine level doubles it).
    pub resolution: usize,
    pub spacetime: SpacetimeConfig,
    pub current: CurrentConfig,
    pub surface: SurfaceConfig,
    pub orientation: OrientationConfig,
    /// Sub-rectangles of the parameter box; absent means the whole box.
    pub region: Option<Vec<Vec<[f64; 2]>>>,
    pub flow: FlowConfig,
    pub verify: VerifyConfig,
    pub example1: Example1Config,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 20_240_917,
            resolution: 16,
            spacetime: SpacetimeConfig::default(),
            current: CurrentConfig::default(),
            surface: SurfaceConfig::default(),
            orientation: OrientationConfig::Anchored,
            region: None,
            flow: FlowConfig::default(),
            verify: VerifyConfig::default(),
            example1: Example1Config::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !matches!(self.spacetime.dim, 3 | 4) {
            return Err(CliError::Config(format!(
                "spacetime.dim must be 3 or 4, got {}",
                self.spacetime.dim
            )));
        }
        if self.resolution < 2 {
            return Err(CliError::Config("resolution must be at least 2".into()));
        }
        if self.flow.samples < 3 {
            return Err(CliError::Config("flow.samples must be at least 3".into()));
        }
        Ok(())
    }

    /// The configuration as one-line JSON, echoed into output headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpacetimeConfig {
    /// `minkowski` or `conformal` (Ω²η with Ω = 1 + 0.1 sin x).
    pub name: String,
    pub dim: usize,
}

impl Default for SpacetimeConfig {
    fn default() -> Self {
        SpacetimeConfig {
            name: "minkowski".into(),
            dim: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurrentConfig {
    /// Normalized Gaussian packet moving with `velocity` (padded with zeros).
    BoostedGaussian {
        #[serde(default = "default_velocity")]
        velocity: Vec<f64>,
        #[serde(default = "one")]
        width: f64,
    },
    Constant {
        components: Vec<f64>,
    },
    /// Drifting Gaussian density carried by the rotating observer field
    /// (2+1 only; not conserved).
    RotatingDrift {
        #[serde(default = "one")]
        omega: f64,
        #[serde(default = "default_center")]
        center: [f64; 2],
        #[serde(default = "default_drift")]
        drift: f64,
        #[serde(default = "default_drift_width")]
        width: f64,
    },
    /// Components `J^μ(t, x, y[, z])` as expressions.
    Expression {
        components: Vec<String>,
        #[serde(default)]
        divergence_free: bool,
    },
}

impl Default for CurrentConfig {
    fn default() -> Self {
        CurrentConfig::BoostedGaussian {
            velocity: default_velocity(),
            width: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceConfig {
    TimeSlice {
        #[serde(default)]
        t0: f64,
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
    TiltedPlane {
        slope: f64,
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
    /// Graph `t = height(x, y[, z])` over the cube of half-width `half_width`.
    Graph {
        height: String,
        #[serde(default = "default_half_width")]
        half_width: f64,
    },
    PolarDisk {
        #[serde(default)]
        t0: f64,
        radius: f64,
    },
    SquareDisk {
        #[serde(default)]
        t0: f64,
        radius: f64,
    },
    /// Embedding components over parameters `u, v[, w]` on `param_box`.
    Expression {
        embed: Vec<String>,
        param_box: Vec<[f64; 2]>,
        #[serde(default)]
        truncated: bool,
    },
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        SurfaceConfig::TimeSlice {
            t0: 0.0,
            half_width: default_half_width(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationConfig {
    Anchored,
    Reversed,
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FlowFieldConfig {
    /// The current's own velocity factor.
    Velocity,
    Example1 {
        #[serde(default = "one")]
        omega: f64,
    },
    Constant {
        components: Vec<f64>,
    },
    Expression {
        components: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorConfig {
    Analytic,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    pub field: FlowFieldConfig,
    pub integrator: IntegratorConfig,
    /// RK4 step; defaults to `1e−3·(1+|τ|)`.
    pub step: Option<f64>,
    pub tau_max: f64,
    /// Number of τ samples in `[0, tau_max]`.
    pub samples: usize,
    /// Positive factor `f(t, x, y[, z])` multiplying the flow field.
    pub rescale: Option<String>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            field: FlowFieldConfig::Velocity,
            integrator: IntegratorConfig::Analytic,
            step: None,
            tau_max: 5.0,
            samples: 11,
            rescale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Expected total probability of the configured region, if known.
    pub expected_total: Option<f64>,
    pub normalization_tol: f64,
    pub identity_tol: f64,
    pub pointwise_tol: f64,
    pub drift_tol: f64,
    pub reynolds_tol: f64,
    pub cap_tol: f64,
    pub tube_tol: f64,
    /// Flow time spanned by the divergence-theorem cylinder.
    pub cylinder_tau: f64,
    /// Random positive velocity rescalings checked for conservation.
    pub rescalings: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            expected_total: Some(1.0),
            normalization_tol: 1e-6,
            identity_tol: 1e-8,
            pointwise_tol: 1e-10,
            drift_tol: 1e-6,
            reynolds_tol: 1e-4,
            cap_tol: 1e-6,
            tube_tol: 1e-10,
            cylinder_tau: 1.0,
            rescalings: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Example1Config {
    pub omega: f64,
    pub r_max: f64,
    /// Number of radii `r_k = k·r_max/grid` in the crossing table.
    pub grid: usize,
    /// Crossing search window; defaults to 1.1 × the crossing time of the
    /// innermost radius.
    pub tau_max: Option<f64>,
    /// Frames of the causal sweep, spread over `[0, sweep_tau_max]`.
    pub frames: usize,
    /// Defaults to twice the crossing time of the outer rim.
    pub sweep_tau_max: Option<f64>,
    /// Angular cells of the swept disk.
    pub angular: usize,
    pub integrator: IntegratorConfig,
}

impl Default for Example1Config {
    fn default() -> Self {
        Example1Config {
            omega: 1.0,
            r_max: 2.0,
            grid: 20,
            tau_max: None,
            frames: 16,
            sweep_tau_max: None,
            angular: 32,
            integrator: IntegratorConfig::Analytic,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_velocity() -> Vec<f64> {
    vec![0.5]
}

fn default_center() -> [f64; 2] {
    [0.5, 0.0]
}

fn default_drift() -> f64 {
    0.3
}

fn default_drift_width() -> f64 {
    0.4
}

fn default_half_width() -> f64 {
    8.0
}
