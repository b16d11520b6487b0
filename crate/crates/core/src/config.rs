//! Run configuration: schema, presets and loading.
//!
//! A configuration file is TOML. It either spells out every field, or names
//! a preset (`preset = "example1"`, optionally `scale = "desk"`) and lists
//! only the keys it overrides; tables are merged key by key. The resolved
//! configuration is always complete and is echoed into every manifest.
//! See `docs/config.md` for the full schema.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::EvolutionGrid;
use crate::geometry::{Decomposition, PointCounts, Sampling};
use crate::losses::{LossOptions, LossWeights};
use crate::network::{Activation, MlpConfig};
use crate::problems::{FdScheme, ProblemName, ProblemSpec, SpatialOrder, TimeScheme};
use crate::trainer::{model_seed, TrainConfig};

/// Which objective is trained and whether stage 2 runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Interface enhancements off; errors measured on the networks.
    Xpinn,
    /// Full objective; errors measured on the networks.
    Ddpinn,
    /// Full objective followed by frozen-operator evolution.
    D3pinn,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Xpinn, Variant::Ddpinn, Variant::D3pinn];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Xpinn => "xpinn",
            Variant::Ddpinn => "ddpinn",
            Variant::D3pinn => "d3pinn",
        }
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "xpinn" => Ok(Variant::Xpinn),
            "ddpinn" => Ok(Variant::Ddpinn),
            "d3pinn" => Ok(Variant::D3pinn),
            other => Err(format!("unknown variant `{other}` (expected xpinn, ddpinn or d3pinn)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Reduced networks, iterations and point counts for quick runs.
    Desk,
    /// The benchmarks' full network sizes, iterations and point counts.
    Full,
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(format!("unknown scale `{other}` (expected desk or full)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkShape {
    /// Number of affine layers, output layer included.
    pub depth: usize,
    pub width: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    /// Interior cut points, increasing.
    pub cuts: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub iterations: usize,
    pub learning_rate: f64,
    pub sampling: Sampling,
    pub checkpoint_every: usize,
    pub log_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Finite-difference spacing of the Burgers reference.
    pub dx: f64,
    pub dt: f64,
    pub time_scheme: TimeScheme,
    pub spatial_order: SpatialOrder,
}

impl ReferenceConfig {
    pub fn fd_scheme(&self) -> FdScheme {
        FdScheme {
            time: self.time_scheme,
            order: self.spatial_order,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Resample the reference onto the solution grid when the grids differ.
    pub interpolate_reference: bool,
    /// Times written to the slice export.
    pub slice_times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceConfig {
    /// A run passes when its relative L2 error is at most this.
    pub max_rel_l2: f64,
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemName,
    pub variant: Variant,
    /// Seeds collocation sampling and, through [`model_seed`], every network.
    pub seed: u64,
    pub activation: Activation,
    pub decomposition: DecompositionConfig,
    pub networks: Vec<NetworkShape>,
    pub train: TrainSection,
    pub points: PointCounts,
    pub weights: LossWeights,
    pub loss: LossOptions,
    pub evolution: EvolutionGrid,
    pub reference: ReferenceConfig,
    pub evaluation: EvaluationConfig,
    pub acceptance: AcceptanceConfig,
}

impl RunConfig {
    /// The built-in configuration for a benchmark at a given scale.
    pub fn preset(problem: ProblemName, scale: Scale) -> Self {
        let (networks, interface, initial, weights, max_rel_l2) = match problem {
            ProblemName::Example1 => (
                vec![
                    NetworkShape { depth: 6, width: 50 },
                    NetworkShape { depth: 6, width: 60 },
                ],
                1000,
                80,
                [1.0, 22.0, 1.0, 1.0, 10.0, 0.001, 10.0, 0.001, 1.0],
                3e-2,
            ),
            ProblemName::Example2 => (
                vec![
                    NetworkShape { depth: 6, width: 50 },
                    NetworkShape { depth: 6, width: 50 },
                ],
                2000,
                40,
                [5.0, 20.0, 10.0, 0.01, 0.0002, 0.001, 0.01, 0.01, 0.01],
                1e-2,
            ),
        };
        let mut cfg = RunConfig {
            problem,
            variant: Variant::D3pinn,
            seed: 1,
            activation: Activation::Tanh,
            decomposition: DecompositionConfig { cuts: vec![0.0] },
            networks,
            train: TrainSection {
                iterations: 20_000,
                learning_rate: 1e-3,
                sampling: Sampling::Uniform,
                checkpoint_every: 1000,
                log_every: 500,
            },
            points: PointCounts {
                residual_per_subdomain: 3000,
                interface,
                boundary: 200,
                initial,
            },
            weights: LossWeights::from_array(weights),
            loss: LossOptions::default(),
            evolution: EvolutionGrid::default(),
            reference: ReferenceConfig {
                dx: 0.01,
                dt: 1e-4,
                time_scheme: TimeScheme::Rk4,
                spatial_order: SpatialOrder::Sixth,
            },
            evaluation: EvaluationConfig {
                interpolate_reference: false,
                slice_times: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            },
            acceptance: AcceptanceConfig { max_rel_l2 },
        };
        if scale == Scale::Desk {
            for net in &mut cfg.networks {
                *net = NetworkShape { depth: 4, width: 20 };
            }
            cfg.train.iterations = 2000;
            cfg.train.checkpoint_every = 500;
            cfg.train.log_every = 100;
            cfg.points.residual_per_subdomain = 500;
            cfg.acceptance.max_rel_l2 = 1e-1;
        }
        cfg
    }

    pub fn problem_spec(&self) -> ProblemSpec {
        self.problem.spec()
    }

    pub fn decomposition(&self) -> Result<Decomposition> {
        let p = self.problem_spec();
        Decomposition::new(p.space(), p.t_end(), &self.decomposition.cuts)
            .map_err(|e| Error::config("decomposition.cuts", e.to_string()))
    }

    /// Loss weights actually trained with; the XPINN variant drops the
    /// interface enhancements.
    pub fn effective_weights(&self) -> LossWeights {
        match self.variant {
            Variant::Xpinn => self.weights.xpinn(),
            Variant::Ddpinn | Variant::D3pinn => self.weights,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.train.iterations,
            learning_rate: self.train.learning_rate,
            weights: self.effective_weights(),
            loss_options: self.loss,
            points: self.points,
            sampling: self.train.sampling,
            seed: self.seed,
            checkpoint_every: self.train.checkpoint_every,
            log_every: self.train.log_every,
            networks: self
                .networks
                .iter()
                .enumerate()
                .map(|(i, n)| MlpConfig::new(n.depth, n.width, self.activation, model_seed(self.seed, i)))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::config("seed", "must fit in a signed 64-bit integer"));
        }
        let dec = self.decomposition()?;
        if self.networks.len() != dec.subdomain_count() {
            return Err(Error::config(
                "networks",
                format!(
                    "{} networks for {} subdomains",
                    self.networks.len(),
                    dec.subdomain_count()
                ),
            ));
        }
        for (i, n) in self.networks.iter().enumerate() {
            if n.depth == 0 || n.width == 0 {
                return Err(Error::config(
                    format!("networks[{i}]"),
                    "depth and width must be at least 1",
                ));
            }
        }
        if self.train.iterations == 0 {
            return Err(Error::config("train.iterations", "must be at least 1"));
        }
        if !(self.train.learning_rate.is_finite() && self.train.learning_rate > 0.0) {
            return Err(Error::config("train.learning_rate", "must be positive"));
        }
        self.weights.validate()?;
        self.points.validate()?;
        self.evolution.validate()?;
        if !(self.reference.dx > 0.0 && self.reference.dt > 0.0) {
            return Err(Error::config("reference", "dx and dt must be positive"));
        }
        let t_end = self.problem_spec().t_end();
        if let Some(t) = self.evaluation.slice_times.iter().find(|t| !(0.0..=t_end).contains(*t)) {
            return Err(Error::config(
                "evaluation.slice_times",
                format!("{t} is outside [0, {t_end}]"),
            ));
        }
        if !(self.acceptance.max_rel_l2.is_finite() && self.acceptance.max_rel_l2 > 0.0) {
            return Err(Error::config("acceptance.max_rel_l2", "must be positive"));
        }
        self.train_config().validate(&dec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<root>", e.to_string()))
    }

    /// Parses a configuration document, applying a preset when it names one.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
        let preset = doc.remove("preset");
        let scale = doc.remove("scale");
        let merged = match preset {
            Some(name) => {
                let name = name
                    .as_str()
                    .ok_or_else(|| Error::config("preset", "must be a string"))?;
                let problem = ProblemName::from_str(name).map_err(|e| Error::config("preset", e))?;
                let scale = match scale {
                    Some(s) => {
                        let s = s.as_str().ok_or_else(|| Error::config("scale", "must be a string"))?;
                        Scale::from_str(s).map_err(|e| Error::config("scale", e))?
                    }
                    None => Scale::Full,
                };
                let base = RunConfig::preset(problem, scale).to_toml()?;
                let mut base: toml::Table = base.parse().expect("preset serialises to valid TOML");
                merge(&mut base, doc, "")?;
                base
            }
            None if scale.is_some() => return Err(Error::config("scale", "only meaningful together with `preset`")),
            None => doc,
        };
        let text = toml::to_string(&merged).map_err(|e| Error::config("<document>", e.to_string()))?;
        let de = toml::Deserializer::parse(&text).map_err(|e| Error::config("<document>", e.message().to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path == "." { "<root>".to_string() } else { path },
                e.inner().message().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Overlays `over` onto `base`. Tables merge recursively; any other value
/// replaces. Keys absent from `base` are rejected so typos surface with
/// their full path.
fn merge(base: &mut toml::Table, over: toml::Table, prefix: &str) -> Result<()> {
    for (key, value) in over {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o, &path)?,
            (Some(slot), value) => *slot = value,
            (None, _) => return Err(Error::config(path, "unknown key")),
        }
    }
    Ok(())
}

/// Where a configuration comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ConfigSource<'a> {
    Preset(ProblemName, Scale),
    File(&'a Path),
}

pub fn load_config(source: ConfigSource<'_>) -> Result<RunConfig> {
    match source {
        ConfigSource::Preset(problem, scale) => {
            let cfg = RunConfig::preset(problem, scale);
            cfg.validate()?;
            Ok(cfg)
        }
        ConfigSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            RunConfig::from_toml_str(&text)
        }
    }
}
