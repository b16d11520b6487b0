//! Stage 1: joint full-batch training of the subdomain networks.
//!
//! All networks share one Adam state over their concatenated parameters and
//! are updated together from the gradient of the single total loss.
//! Collocation points are sampled once from the run seed and never
//! resampled, so a run is a pure function of its configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_points, Decomposition, PointCounts, PointSets, Sampling};
use crate::io::{read_envelope, write_envelope};
use crate::losses::{LossAssembly, LossBreakdown, LossOptions, LossWeights, LossWorkspace};
use crate::network::{AdamHyper, AdamState, MlpConfig, MlpModel};
use crate::problems::{ProblemName, ProblemSpec};

const CHECKPOINT_FORMAT: &str = "d3pinn-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub weights: LossWeights,
    #[serde(default)]
    pub loss_options: LossOptions,
    pub points: PointCounts,
    #[serde(default)]
    pub sampling: Sampling,
    /// Seeds the collocation points. Network seeds live in `networks`.
    pub seed: u64,
    /// Checkpoint cadence in iterations; 0 disables periodic checkpoints.
    #[serde(default)]
    pub checkpoint_every: usize,
    /// Progress cadence in iterations; 0 disables progress callbacks.
    #[serde(default)]
    pub log_every: usize,
    /// One network per subdomain, left to right.
    pub networks: Vec<MlpConfig>,
}

impl TrainConfig {
    pub fn validate(&self, dec: &Decomposition) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("train.iterations", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("train.learning_rate", "must be positive"));
        }
        self.weights.validate()?;
        self.points.validate()?;
        if self.networks.len() != dec.subdomain_count() {
            return Err(Error::config(
                "networks",
                format!(
                    "{} networks given for {} subdomains",
                    self.networks.len(),
                    dec.subdomain_count()
                ),
            ));
        }
        for (i, net) in self.networks.iter().enumerate() {
            net.validate()
                .map_err(|e| Error::config(format!("networks[{i}]"), e.to_string()))?;
        }
        Ok(())
    }
}

/// Deterministic per-network seed derived from a run seed.
pub fn model_seed(run_seed: u64, index: usize) -> u64 {
    // splitmix64 finaliser
    let mut z = run_seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Everything needed to rebuild a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainManifest {
    pub problem: ProblemName,
    pub decomposition: Decomposition,
    pub config: TrainConfig,
    pub points_fingerprint: String,
    pub crate_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub models: Vec<MlpModel>,
    /// Loss at the parameters each update was computed from, one entry per
    /// iteration.
    pub loss_history: Vec<LossBreakdown>,
    /// Loss at the final parameters.
    pub final_loss: LossBreakdown,
    pub manifest: TrainManifest,
}

impl TrainedModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        write_envelope(path, "d3pinn-trained", 1, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_envelope(path, "d3pinn-trained", 1)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Progress {
    pub iteration: usize,
    pub iterations: usize,
    pub loss: LossBreakdown,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    manifest: TrainManifest,
    iteration: usize,
    models: Vec<MlpModel>,
    adam: AdamState,
    loss_history: Vec<LossBreakdown>,
}

pub struct Trainer {
    problem: ProblemSpec,
    dec: Decomposition,
    cfg: TrainConfig,
    points: PointSets,
    assembly: LossAssembly,
    workspace: LossWorkspace,
    models: Vec<MlpModel>,
    adam: AdamState,
    history: Vec<LossBreakdown>,
    flat: Vec<f64>,
    grad: Vec<f64>,
    grads: Vec<Vec<f64>>,
}

impl Trainer {
    pub fn new(problem: &ProblemSpec, dec: &Decomposition, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate(dec)?;
        if problem.space() != dec.space() || problem.t_end() != dec.t_end() {
            return Err(Error::Domain("decomposition does not cover the problem domain".into()));
        }
        let points = sample_points(dec, &cfg.points, cfg.seed, cfg.sampling)?;
        let models = cfg
            .networks
            .iter()
            .map(|net| MlpModel::init(net.clone()))
            .collect::<Result<Vec<_>>>()?;
        let total: usize = models.iter().map(MlpModel::parameter_count).sum();
        let hyper = AdamHyper {
            learning_rate: cfg.learning_rate,
            ..AdamHyper::default()
        };
        Self::assemble(
            problem,
            dec,
            cfg,
            points,
            models,
            AdamState::new(total, hyper),
            Vec::new(),
        )
    }

    fn assemble(
        problem: &ProblemSpec,
        dec: &Decomposition,
        cfg: &TrainConfig,
        points: PointSets,
        models: Vec<MlpModel>,
        adam: AdamState,
        history: Vec<LossBreakdown>,
    ) -> Result<Self> {
        let assembly = LossAssembly::new(problem, dec, &points, cfg.loss_options)?;
        let total = adam.m.len();
        let grads = models.iter().map(|m| vec![0.0; m.parameter_count()]).collect();
        Ok(Trainer {
            problem: problem.clone(),
            dec: dec.clone(),
            cfg: cfg.clone(),
            points,
            assembly,
            workspace: LossWorkspace::default(),
            models,
            adam,
            history,
            flat: vec![0.0; total],
            grad: vec![0.0; total],
            grads,
        })
    }

    pub fn iteration(&self) -> usize {
        self.history.len()
    }

    pub fn is_finished(&self) -> bool {
        self.iteration() >= self.cfg.iterations
    }

    pub fn models(&self) -> &[MlpModel] {
        &self.models
    }

    pub fn points(&self) -> &PointSets {
        &self.points
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn history(&self) -> &[LossBreakdown] {
        &self.history
    }

    pub fn manifest(&self) -> TrainManifest {
        TrainManifest {
            problem: self.problem.name(),
            decomposition: self.dec.clone(),
            config: self.cfg.clone(),
            points_fingerprint: self.points.fingerprint(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// Loss at the current parameters, without a gradient.
    pub fn current_loss(&self) -> Result<LossBreakdown> {
        self.assembly.evaluate(&self.models, &self.cfg.weights, None)
    }

    /// One joint Adam update. Returns the loss the update was computed from.
    /// On a non-finite loss or gradient nothing is modified.
    pub fn step(&mut self) -> Result<LossBreakdown> {
        let iteration = self.iteration() + 1;
        for g in &mut self.grads {
            g.fill(0.0);
        }
        let loss = self.assembly.evaluate_in(
            &mut self.workspace,
            &self.models,
            &self.cfg.weights,
            Some(&mut self.grads),
        )?;
        if !loss.is_finite() {
            return Err(Error::TrainingHalted {
                iteration,
                reason: format!("non-finite loss {loss:?}"),
            });
        }
        let mut offset = 0;
        for (model, g) in self.models.iter().zip(&self.grads) {
            let n = model.parameter_count();
            self.flat[offset..offset + n].copy_from_slice(model.parameters());
            self.grad[offset..offset + n].copy_from_slice(g);
            offset += n;
        }
        if let Some(k) = self.grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::TrainingHalted {
                iteration,
                reason: format!("non-finite gradient component {k}"),
            });
        }
        self.adam.update(&mut self.flat, &self.grad)?;
        if let Some(k) = self.flat.iter().position(|p| !p.is_finite()) {
            return Err(Error::TrainingHalted {
                iteration,
                reason: format!("update produced non-finite parameter {k}"),
            });
        }
        let mut offset = 0;
        for model in &mut self.models {
            let n = model.parameter_count();
            model.parameters_mut().copy_from_slice(&self.flat[offset..offset + n]);
            offset += n;
        }
        self.history.push(loss);
        Ok(loss)
    }

    /// Runs to the iteration budget. With `checkpoint` set and a nonzero
    /// `checkpoint_every`, the state is saved there at that cadence; after a
    /// failure the last saved checkpoint is left in place.
    pub fn run(&mut self, checkpoint: Option<&Path>, mut progress: impl FnMut(&Progress)) -> Result<()> {
        while !self.is_finished() {
            let loss = self.step()?;
            let it = self.iteration();
            if self.cfg.log_every > 0 && (it.is_multiple_of(self.cfg.log_every) || it == 1 || it == self.cfg.iterations)
            {
                progress(&Progress {
                    iteration: it,
                    iterations: self.cfg.iterations,
                    loss,
                });
            }
            if let Some(path) = checkpoint {
                if self.cfg.checkpoint_every > 0 && it.is_multiple_of(self.cfg.checkpoint_every) {
                    self.checkpoint(path)?;
                }
            }
        }
        Ok(())
    }

    pub fn checkpoint(&self, path: &Path) -> Result<()> {
        let ck = Checkpoint {
            manifest: self.manifest(),
            iteration: self.iteration(),
            models: self.models.clone(),
            adam: self.adam.clone(),
            loss_history: self.history.clone(),
        };
        write_envelope(path, CHECKPOINT_FORMAT, CHECKPOINT_VERSION, &ck)
    }

    /// Restores a checkpoint. Points are regenerated from the recorded
    /// configuration and must match the recorded fingerprint.
    pub fn resume(path: &Path) -> Result<Self> {
        let ck: Checkpoint = read_envelope(path, CHECKPOINT_FORMAT, CHECKPOINT_VERSION)?;
        let bad = |reason: String| Error::format(path, reason);
        if ck.iteration != ck.loss_history.len() || ck.adam.step as usize != ck.iteration {
            return Err(bad("iteration counters disagree".into()));
        }
        let m = &ck.manifest;
        m.config.validate(&m.decomposition)?;
        let problem = m.problem.spec();
        let points = sample_points(&m.decomposition, &m.config.points, m.config.seed, m.config.sampling)?;
        if points.fingerprint() != m.points_fingerprint {
            return Err(bad(
                "regenerated collocation points differ from the recorded ones".into()
            ));
        }
        if ck.models.len() != m.config.networks.len()
            || ck.models.iter().zip(&m.config.networks).any(|(a, b)| a.config() != b)
        {
            return Err(bad("stored networks do not match the configuration".into()));
        }
        let total: usize = ck.models.iter().map(MlpModel::parameter_count).sum();
        if ck.adam.m.len() != total || ck.adam.v.len() != total {
            return Err(bad("optimizer state does not match the networks".into()));
        }
        Self::assemble(
            &problem,
            &m.decomposition,
            &m.config,
            points,
            ck.models,
            ck.adam,
            ck.loss_history,
        )
    }

    pub fn finish(self) -> Result<TrainedModel> {
        let final_loss = self.current_loss()?;
        let manifest = self.manifest();
        Ok(TrainedModel {
            models: self.models,
            loss_history: self.history,
            final_loss,
            manifest,
        })
    }
}

/// Trains from scratch to the configured budget.
pub fn train(problem: &ProblemSpec, dec: &Decomposition, cfg: &TrainConfig) -> Result<TrainedModel> {
    train_with_progress(problem, dec, cfg, None, |_| {})
}

pub fn train_with_progress(
    problem: &ProblemSpec,
    dec: &Decomposition,
    cfg: &TrainConfig,
    checkpoint: Option<&Path>,
    progress: impl FnMut(&Progress),
) -> Result<TrainedModel> {
    let mut trainer = Trainer::new(problem, dec, cfg)?;
    trainer.run(checkpoint, progress)?;
    trainer.finish()
}
