//! Experiment configuration, read from a single JSON document.
//!
//! Every field has a default; the empty document `{}` describes the CAT map
//! `[[2,1],[1,1]]` with `G = 0`, an unstable segment of length 1 at the
//! origin and the two balls of radius 1/3 centred at `(0,0)` and
//! `(1/2,1/2)`.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::curves::RefinementPolicy;
use crate::potential::{FourierMode, Potential};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    /// Row-major integer matrix `[a, b, c, d]`.
    Cat {
        #[serde(default = "arnold_matrix")]
        matrix: [i64; 4],
    },
    Solenoid {
        #[serde(default = "default_contraction")]
        contraction: f64,
        #[serde(default)]
        variant: VariantConfig,
        /// Forward iterations applied to the seed point before use.
        #[serde(default = "default_settle")]
        settle: usize,
    },
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::Cat {
            matrix: arnold_matrix(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantConfig {
    #[default]
    Corrected,
    Verbatim,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero {
        #[serde(default)]
        offset: f64,
    },
    UnstableExpansion {
        #[serde(default)]
        offset: f64,
    },
    Fourier {
        modes: Vec<FourierMode>,
        #[serde(default)]
        offset: f64,
    },
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self::Zero { offset: 0.0 }
    }
}

impl PotentialConfig {
    pub fn build(&self) -> Potential {
        match self {
            Self::Zero { offset } => Potential::zero().shifted(*offset),
            Self::UnstableExpansion { offset } => Potential::unstable_expansion().shifted(*offset),
            Self::Fourier { modes, offset } => Potential::fourier(modes.clone()).shifted(*offset),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero { offset } if *offset == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeedConfig {
    /// Local unstable segment of length `delta` through `point`. An absent
    /// point means the origin.
    Segment {
        #[serde(default)]
        point: Option<Vec<f64>>,
        #[serde(default = "one")]
        delta: f64,
    },
    /// Polyline through the given points.
    Waypoints { points: Vec<Vec<f64>> },
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self::Segment {
            point: None,
            delta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementConfig {
    #[serde(default = "default_spacing")]
    pub max_spacing: f64,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            max_spacing: default_spacing(),
            max_points: default_max_points(),
        }
    }
}

impl RefinementConfig {
    pub fn policy(&self) -> RefinementPolicy {
        RefinementPolicy {
            max_spacing: self.max_spacing,
            max_points: self.max_points,
            ..RefinementPolicy::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_separated_n_max")]
    pub separated_n_max: usize,
    #[serde(default = "default_pitch")]
    pub grid_pitch: f64,
    #[serde(default = "default_period")]
    pub periodic_n_max: u32,
}

impl Default for PressureConfig {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            separated_n_max: default_separated_n_max(),
            grid_pitch: default_pitch(),
            periodic_n_max: default_period(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_period")]
    pub period: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            period: default_period(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub seed: SeedConfig,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Absent means two balls of radius 1/3: at `(0,0)` and `(1/2,1/2)` on
    /// the torus, at `(0, 1/2, 0)` and `(1/2, 0, 1/2)` on the solenoid.
    #[serde(default)]
    pub balls: Option<Vec<BallConfig>>,
    /// Observables whose integrals and invariance defects are reported.
    #[serde(default)]
    pub test_functions: Vec<FourierMode>,
    #[serde(default)]
    pub refinement: RefinementConfig,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub pressure: PressureConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.into(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn balls(&self) -> Vec<BallConfig> {
        self.balls.clone().unwrap_or_else(|| default_balls(self.dimension()))
    }

    pub fn dimension(&self) -> usize {
        match self.system {
            SystemConfig::Cat { .. } => 2,
            SystemConfig::Solenoid { .. } => 3,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let dim = self.dimension();
        if self.n_max < 1 {
            return Err(ConfigError::invalid("n_max", "must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(ConfigError::invalid("threads", "must be at least 1"));
        }
        if let SystemConfig::Solenoid { contraction, .. } = self.system {
            if !(contraction > 0.0 && contraction < 0.5) {
                return Err(ConfigError::invalid("system.contraction", "must lie in (0, 1/2)"));
            }
        }
        let check_point = |field: String, p: &[f64]| {
            if p.len() != dim {
                Err(ConfigError::invalid(
                    field,
                    format!("expected {dim} coordinates, got {}", p.len()),
                ))
            } else if p.iter().any(|v| !v.is_finite()) {
                Err(ConfigError::invalid(field, "coordinates must be finite"))
            } else {
                Ok(())
            }
        };
        match &self.seed {
            SeedConfig::Segment { point, delta } => {
                if let Some(p) = point {
                    check_point("seed.point".into(), p)?;
                }
                if !(*delta > 0.0 && delta.is_finite()) {
                    return Err(ConfigError::invalid("seed.delta", "must be positive"));
                }
            }
            SeedConfig::Waypoints { points } => {
                if points.len() < 2 {
                    return Err(ConfigError::invalid("seed.points", "need at least two waypoints"));
                }
                for (i, p) in points.iter().enumerate() {
                    check_point(format!("seed.points[{i}]"), p)?;
                }
            }
        }
        for (i, ball) in self.balls().iter().enumerate() {
            check_point(format!("balls[{i}].center"), &ball.center)?;
            let embedded = dim == 3 || ball.radius < 0.5;
            if !(ball.radius > 0.0 && embedded) {
                return Err(ConfigError::invalid(
                    format!("balls[{i}].radius"),
                    "must lie in (0, 1/2)",
                ));
            }
        }
        if let PotentialConfig::Fourier { modes, .. } = &self.potential {
            if modes.iter().any(|m| !m.amplitude.is_finite() || !m.phase.is_finite()) {
                return Err(ConfigError::invalid(
                    "potential.modes",
                    "amplitudes and phases must be finite",
                ));
            }
        }
        let p = &self.pressure;
        let k = -p.epsilon.log2();
        if !(p.epsilon > 0.0 && k >= 0.0 && k.fract() == 0.0) {
            return Err(ConfigError::invalid("pressure.epsilon", "must be 1/2^k"));
        }
        if !(p.grid_pitch > 0.0 && p.grid_pitch <= p.epsilon / 4.0) {
            return Err(ConfigError::invalid(
                "pressure.grid_pitch",
                "must lie in (0, epsilon/4]",
            ));
        }
        if !(1..=crate::pressure::MAX_SEPARATED_HORIZON).contains(&p.separated_n_max) {
            return Err(ConfigError::invalid("pressure.separated_n_max", "must lie in 1..=10"));
        }
        for (field, period) in [
            ("pressure.periodic_n_max", p.periodic_n_max),
            ("oracle.period", self.oracle.period),
        ] {
            if !(1..=crate::oracle::MAX_PERIOD).contains(&period) {
                return Err(ConfigError::invalid(field, "must lie in 1..=16"));
            }
        }
        if self.refinement.max_spacing.is_nan() || self.refinement.max_spacing <= 0.0 {
            return Err(ConfigError::invalid("refinement.max_spacing", "must be positive"));
        }
        if self.refinement.max_points < 2 {
            return Err(ConfigError::invalid("refinement.max_points", "must be at least 2"));
        }
        Ok(())
    }
}

fn arnold_matrix() -> [i64; 4] {
    [2, 1, 1, 1]
}

fn default_contraction() -> f64 {
    0.1
}

fn default_settle() -> usize {
    30
}

fn one() -> f64 {
    1.0
}

fn default_n_max() -> usize {
    12
}

fn default_balls(dimension: usize) -> Vec<BallConfig> {
    let centers = if dimension == 2 {
        [vec![0.0, 0.0], vec![0.5, 0.5]]
    } else {
        [vec![0.0, 0.5, 0.0], vec![0.5, 0.0, 0.5]]
    };
    centers
        .into_iter()
        .map(|center| BallConfig {
            center,
            radius: 1.0 / 3.0,
        })
        .collect()
}

fn default_spacing() -> f64 {
    1e-2
}

fn default_max_points() -> usize {
    50_000_000
}

fn default_epsilon() -> f64 {
    0.125
}

fn default_separated_n_max() -> usize {
    8
}

fn default_pitch() -> f64 {
    1.0 / 1024.0
}

fn default_period() -> u32 {
    14
}
