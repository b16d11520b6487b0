//! Experiment orchestration: train, evolve, evaluate, and the artifacts
//! each stage leaves in a run directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autodiff::JetLevel;
use crate::config::{RunConfig, Variant};
use crate::error::{Error, Result};
use crate::evolution::{evolve_on_grid, DecomposedSurrogate, FrozenRhs, Sample, Surrogate};
use crate::grid::SolutionField;
use crate::harness::export::{export_slices, write_error_surface};
use crate::harness::metrics::{relative_errors, ErrorReport};
use crate::io::{read_envelope, sha256_file, sha256_hex, write_atomic, write_envelope};
use crate::losses::COMPONENT_NAMES;
use crate::problems::{solve_periodic_burgers, ProblemName};
use crate::trainer::{Progress, TrainedModel, Trainer};

const MANIFEST_FORMAT: &str = "d3pinn-experiment";
const MANIFEST_VERSION: u32 = 1;

/// File names inside a run directory.
#[derive(Clone, Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub const CONFIG: &'static str = "config.toml";
    pub const POINTS: &'static str = "points.csv";
    pub const MODEL: &'static str = "model.json";
    pub const CHECKPOINT: &'static str = "checkpoint.json";
    pub const LOSS_HISTORY: &'static str = "loss_history.csv";
    pub const SOLUTION: &'static str = "solution.grid";
    pub const SOLUTION_CSV: &'static str = "solution.csv";
    pub const REFERENCE: &'static str = "reference.grid";
    pub const REFERENCE_CSV: &'static str = "reference.csv";
    pub const ERROR_SURFACE: &'static str = "error_surface.csv";
    pub const SLICES: &'static str = "slices.csv";
    pub const TIMINGS: &'static str = "timings.json";
    pub const REPORT: &'static str = "report.json";
    pub const MANIFEST: &'static str = "manifest.json";

    /// Files whose bytes depend only on the configuration.
    pub const DETERMINISTIC: [&'static str; 10] = [
        Self::CONFIG,
        Self::POINTS,
        Self::MODEL,
        Self::LOSS_HISTORY,
        Self::SOLUTION,
        Self::SOLUTION_CSV,
        Self::REFERENCE,
        Self::REFERENCE_CSV,
        Self::ERROR_SURFACE,
        Self::SLICES,
    ];

    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(RunDir { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn read_config(&self) -> Result<RunConfig> {
        let path = self.path(Self::CONFIG);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        RunConfig::from_toml_str(&text)
    }

    fn record_time(&self, stage: &str, seconds: f64) -> Result<()> {
        let mut t = self.timings();
        t.insert(stage.to_string(), seconds);
        write_atomic(&self.path(Self::TIMINGS), &serde_json::to_vec_pretty(&t)?)
    }

    fn timings(&self) -> BTreeMap<String, f64> {
        fs::read(self.path(Self::TIMINGS))
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_default()
    }
}

/// Everything needed to re-run an experiment and check its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub crate_version: String,
    pub config: RunConfig,
    /// SHA-256 of the resolved configuration as written to `config.toml`;
    /// also stamped into every grid file header.
    pub config_sha256: String,
    pub network_seeds: Vec<u64>,
    /// Where errors are measured.
    pub error_domain: String,
    pub reference: String,
    pub reference_interpolated: bool,
    /// SHA-256 of each deterministic artifact.
    pub files: BTreeMap<String, String>,
}

impl ExperimentManifest {
    pub fn load(path: &Path) -> Result<Self> {
        read_envelope(path, MANIFEST_FORMAT, MANIFEST_VERSION)
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub report: ErrorReport,
    /// Whether the relative L2 error meets the configured threshold.
    pub passed: bool,
    pub manifest: ExperimentManifest,
    pub dir: PathBuf,
}

fn config_hash(cfg: &RunConfig) -> Result<[u8; 32]> {
    let text = cfg.to_toml()?;
    let hex = sha256_hex(text.as_bytes());
    let mut out = [0u8; 32];
    hex::decode_to_slice(hex, &mut out).expect("sha256 hex is 64 characters");
    Ok(out)
}

fn loss_history_csv(trained: &TrainedModel) -> String {
    let mut out = String::from("iteration");
    for name in COMPONENT_NAMES {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",total\n");
    let rows = trained.loss_history.iter().chain(std::iter::once(&trained.final_loss));
    for (i, b) in rows.enumerate() {
        let _ = write!(out, "{i}");
        for c in b.components() {
            let _ = write!(out, ",{c:e}");
        }
        let _ = writeln!(out, ",{:e}", b.total);
    }
    out
}

/// Stage 1. Writes the resolved configuration, collocation points, trained
/// networks and loss history. With `resume`, continues from the run
/// directory's checkpoint when one exists.
pub fn train_stage(
    cfg: &RunConfig,
    dir: &RunDir,
    resume: bool,
    progress: &mut dyn FnMut(&Progress),
) -> Result<TrainedModel> {
    cfg.validate()?;
    write_atomic(&dir.path(RunDir::CONFIG), cfg.to_toml()?.as_bytes())?;
    let problem = cfg.problem_spec();
    let dec = cfg.decomposition()?;
    let train_cfg = cfg.train_config();
    let checkpoint = dir.path(RunDir::CHECKPOINT);
    let start = Instant::now();
    let mut trainer = if resume && checkpoint.exists() {
        let t = Trainer::resume(&checkpoint)?;
        let m = t.manifest();
        if m.problem != cfg.problem || m.config != train_cfg || m.decomposition != dec {
            return Err(Error::format(
                &checkpoint,
                "checkpoint belongs to a different configuration",
            ));
        }
        t
    } else {
        Trainer::new(&problem, &dec, &train_cfg)?
    };
    trainer.points().write_csv(&dec, &dir.path(RunDir::POINTS))?;
    trainer.run(Some(&checkpoint), |p| progress(p))?;
    let trained = trainer.finish()?;
    trained.save(&dir.path(RunDir::MODEL))?;
    write_atomic(&dir.path(RunDir::LOSS_HISTORY), loss_history_csv(&trained).as_bytes())?;
    dir.record_time("train", start.elapsed().as_secs_f64())?;
    Ok(trained)
}

/// Stage 2: evolves the frozen-operator ODE on the configured grid.
pub fn evolve_stage(cfg: &RunConfig, trained: &TrainedModel, dir: &RunDir) -> Result<SolutionField> {
    let start = Instant::now();
    let surrogate = DecomposedSurrogate::from_trained(trained)?;
    let mut rhs = FrozenRhs::new(&cfg.problem_spec(), surrogate);
    let mut field = evolve_on_grid(&mut rhs, &cfg.evolution)?;
    field.manifest_hash = config_hash(cfg)?;
    field.write_binary(&dir.path(RunDir::SOLUTION))?;
    field.write_csv(&dir.path(RunDir::SOLUTION_CSV))?;
    dir.record_time("evolve", start.elapsed().as_secs_f64())?;
    Ok(field)
}

/// The trained networks sampled on the evolution grid; on a cut the two
/// sides are averaged.
pub fn network_field(cfg: &RunConfig, trained: &TrainedModel) -> Result<SolutionField> {
    let problem = cfg.problem_spec();
    let xs = cfg.evolution.x_grid(&problem);
    let ts = cfg.evolution.t_grid(&problem);
    let mut surrogate = DecomposedSurrogate::from_trained(trained)?;
    let mut values = ndarray::Array2::zeros((xs.len(), ts.len()));
    let mut samples = Vec::new();
    for (j, &t) in ts.iter().enumerate() {
        surrogate.sample(&xs, t, JetLevel::Value, &mut samples)?;
        for (i, s) in samples.iter().enumerate() {
            values[[i, j]] = match s {
                Sample::One(a) => a[0],
                Sample::Two(a, b) => 0.5 * (a[0] + b[0]),
            };
        }
    }
    let mut field = SolutionField::new(xs, ts, values, 0.0)?;
    field.manifest_hash = config_hash(cfg)?;
    Ok(field)
}

/// The field errors are measured against, with a description for the
/// manifest.
pub fn reference_field(cfg: &RunConfig) -> Result<(SolutionField, String)> {
    let problem = cfg.problem_spec();
    let (mut field, description) = match cfg.problem {
        ProblemName::Example1 => {
            let xs = cfg.evolution.x_grid(&problem);
            let ts = cfg.evolution.t_grid(&problem);
            let field = SolutionField::from_fn(xs, ts, 0.0, |x, t| problem.exact(x, t).expect("closed form"));
            (field, "closed-form solution".to_string())
        }
        ProblemName::Example2 => {
            let r = &cfg.reference;
            let reference = solve_periodic_burgers(
                |x| problem.initial(x),
                problem.space(),
                problem.t_end(),
                r.dx,
                r.dt,
                cfg.evolution.output_dt,
                r.fd_scheme(),
            )?;
            let description = format!(
                "finite differences: flux-form central differences ({:?} order) on a periodic grid sharing x = -1 and x = 1, dx = {}, dt = {}, time scheme {:?}",
                r.spatial_order, r.dx, r.dt, r.time_scheme
            );
            (reference.field, description)
        }
    };
    field.manifest_hash = config_hash(cfg)?;
    Ok((field, description))
}

/// Measures the configured variant's solution against the reference and
/// writes the reference, error surface, slices, report and manifest.
pub fn evaluate_stage(cfg: &RunConfig, dir: &RunDir) -> Result<ErrorReport> {
    let approx = match cfg.variant {
        Variant::D3pinn => SolutionField::read_binary(&dir.path(RunDir::SOLUTION))?,
        Variant::Xpinn | Variant::Ddpinn => {
            let trained = TrainedModel::load(&dir.path(RunDir::MODEL))?;
            let field = network_field(cfg, &trained)?;
            field.write_binary(&dir.path(RunDir::SOLUTION))?;
            field.write_csv(&dir.path(RunDir::SOLUTION_CSV))?;
            field
        }
    };
    let (reference, description) = reference_field(cfg)?;
    reference.write_binary(&dir.path(RunDir::REFERENCE))?;
    reference.write_csv(&dir.path(RunDir::REFERENCE_CSV))?;

    let interpolate = cfg.evaluation.interpolate_reference;
    let mut report = relative_errors(&approx, &reference, interpolate, cfg.variant.as_str())?;
    report.wall_time = dir.timings().values().sum();
    let aligned = if report.interpolated {
        reference.resample(&approx.x_grid, &approx.t_grid)?
    } else {
        reference
    };
    write_error_surface(&approx, &aligned, &dir.path(RunDir::ERROR_SURFACE))?;
    export_slices(
        &approx,
        Some(&aligned),
        &cfg.evaluation.slice_times,
        &dir.path(RunDir::SLICES),
    )?;
    write_atomic(&dir.path(RunDir::REPORT), &serde_json::to_vec_pretty(&report)?)?;

    let mut files = BTreeMap::new();
    for name in RunDir::DETERMINISTIC {
        let path = dir.path(name);
        if path.exists() {
            files.insert(name.to_string(), sha256_file(&path)?);
        }
    }
    let manifest = ExperimentManifest {
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        config_sha256: hex::encode(config_hash(cfg)?),
        network_seeds: cfg.train_config().networks.iter().map(|n| n.seed).collect(),
        error_domain: "every node of the space-time grid".to_string(),
        reference: description,
        reference_interpolated: report.interpolated,
        files,
    };
    write_envelope(
        &dir.path(RunDir::MANIFEST),
        MANIFEST_FORMAT,
        MANIFEST_VERSION,
        &manifest,
    )?;
    Ok(report)
}

/// Runs every stage the variant needs into `out`.
pub fn run_experiment(cfg: &RunConfig, out: &Path, progress: &mut dyn FnMut(&Progress)) -> Result<ExperimentOutcome> {
    let dir = RunDir::create(out)?;
    // Stale timings would inflate the reported wall time.
    let _ = fs::remove_file(dir.path(RunDir::TIMINGS));
    let trained = train_stage(cfg, &dir, false, progress)?;
    if cfg.variant == Variant::D3pinn {
        evolve_stage(cfg, &trained, &dir)?;
    }
    let report = evaluate_stage(cfg, &dir)?;
    let manifest = ExperimentManifest::load(&dir.path(RunDir::MANIFEST))?;
    Ok(ExperimentOutcome {
        passed: report.rel_l2 <= cfg.acceptance.max_rel_l2,
        report,
        manifest,
        dir: out.to_path_buf(),
    })
}

/// Artifacts whose hashes differ between two manifests.
pub fn differing_files(a: &ExperimentManifest, b: &ExperimentManifest) -> Vec<String> {
    let mut names: Vec<&String> = a.files.keys().chain(b.files.keys()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .filter(|n| a.files.get(*n) != b.files.get(*n))
        .cloned()
        .collect()
}

/// Re-runs the experiment recorded in `manifest_path` into `out` and
/// returns it together with the artifacts whose bytes changed.
pub fn rerun_from_manifest(
    manifest_path: &Path,
    out: &Path,
    progress: &mut dyn FnMut(&Progress),
) -> Result<(ExperimentOutcome, Vec<String>)> {
    let recorded = ExperimentManifest::load(manifest_path)?;
    let outcome = run_experiment(&recorded.config, out, progress)?;
    let changed = differing_files(&recorded, &outcome.manifest);
    Ok((outcome, changed))
}
