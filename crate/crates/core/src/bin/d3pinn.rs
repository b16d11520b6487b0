use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use d3pinn::config::{load_config, ConfigSource, RunConfig, Scale, Variant};
use d3pinn::harness::{
    compare, evaluate_stage, evolve_stage, rerun_from_manifest, run_experiment, train_stage, ErrorReport, RunDir,
};
use d3pinn::problems::ProblemName;
use d3pinn::trainer::{Progress, TrainedModel};

/// Decoupled domain-decomposed PINN training and frozen-operator evolution.
#[derive(Parser)]
#[command(name = "d3pinn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the subdomain networks into a run directory.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Continue from the run directory's checkpoint if present.
        #[arg(long)]
        resume: bool,
    },
    /// Evolve the frozen-operator ODE from a trained run directory.
    Evolve {
        #[arg(long)]
        run: PathBuf,
    },
    /// Measure errors of a run directory against the reference.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
    },
    /// Run a benchmark end to end, or re-run a recorded manifest and check
    /// that its artifacts come out bit-identical.
    Reproduce {
        /// `example1`, `example2`, or a path to a `manifest.json`.
        target: String,
        #[arg(long)]
        scale: Option<Scale>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep variants over several seeds and report medians.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',', default_value = "xpinn,ddpinn,d3pinn")]
        variants: Vec<Variant>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        seeds: Vec<u64>,
    },
    /// Print a resolved configuration as TOML.
    ShowConfig {
        #[command(flatten)]
        source: SourceArgs,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// Configuration file; may name a preset and override parts of it.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long)]
    preset: Option<ProblemName>,
    #[arg(long, requires = "preset")]
    scale: Option<Scale>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variant: Option<Variant>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Output directory; defaults to a name under `$D3PINN_OUTPUT_ROOT`
    /// (or `./runs`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SourceArgs {
    fn resolve(&self) -> d3pinn::Result<RunConfig> {
        let mut cfg = match (&self.config, self.preset) {
            (Some(path), _) => load_config(ConfigSource::File(path))?,
            (None, Some(p)) => load_config(ConfigSource::Preset(p, self.scale.unwrap_or(Scale::Full)))?,
            (None, None) => {
                return Err(d3pinn::Error::Config {
                    path: "<command line>".into(),
                    reason: "pass --config or --preset".into(),
                })
            }
        };
        override_cfg(&mut cfg, self.seed, self.variant)?;
        Ok(cfg)
    }
}

fn override_cfg(cfg: &mut RunConfig, seed: Option<u64>, variant: Option<Variant>) -> d3pinn::Result<()> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(v) = variant {
        cfg.variant = v;
    }
    cfg.validate()
}

fn output_dir(out: Option<PathBuf>, name: &str) -> PathBuf {
    out.unwrap_or_else(|| {
        std::env::var_os("D3PINN_OUTPUT_ROOT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"))
            .join(name)
    })
}

fn default_name(cfg: &RunConfig) -> String {
    format!("{}-{}-seed{}", cfg.problem.as_str(), cfg.variant.as_str(), cfg.seed)
}

fn log_progress(p: &Progress) {
    eprintln!(
        "iteration {:>6}/{}  loss {:.6e}",
        p.iteration, p.iterations, p.loss.total
    );
}

fn print_report(report: &ErrorReport, threshold: f64) -> bool {
    let passed = report.rel_l2 <= threshold;
    println!(
        "{}: rel_l1 {:.4e}  rel_l2 {:.4e}  max_abs {:.4e}  max_sq {:.4e}  points {}  time {:.1}s",
        report.label, report.rel_l1, report.rel_l2, report.linf, report.linf_squared, report.n_points, report.wall_time
    );
    println!(
        "{} (rel_l2 {:.4e} vs threshold {:.1e})",
        if passed { "PASS" } else { "FAIL" },
        report.rel_l2,
        threshold
    );
    passed
}

fn load_trained(dir: &RunDir) -> d3pinn::Result<(RunConfig, TrainedModel)> {
    Ok((dir.read_config()?, TrainedModel::load(&dir.path(RunDir::MODEL))?))
}

fn execute(command: Command) -> d3pinn::Result<bool> {
    match command {
        Command::Train { run, resume } => {
            let cfg = run.source.resolve()?;
            let dir = RunDir::create(output_dir(run.out, &default_name(&cfg)))?;
            let trained = train_stage(&cfg, &dir, resume, &mut log_progress)?;
            println!("final loss {:.6e}", trained.final_loss.total);
            println!("wrote {}", dir.root().display());
            Ok(true)
        }
        Command::Evolve { run } => {
            let dir = RunDir::create(run)?;
            let (cfg, trained) = load_trained(&dir)?;
            let field = evolve_stage(&cfg, &trained, &dir)?;
            println!(
                "evolved {} x {} grid into {}",
                field.nx(),
                field.nt(),
                dir.root().display()
            );
            Ok(true)
        }
        Command::Evaluate { run } => {
            let dir = RunDir::create(run)?;
            let cfg = dir.read_config()?;
            let report = evaluate_stage(&cfg, &dir)?;
            Ok(print_report(&report, cfg.acceptance.max_rel_l2))
        }
        Command::Reproduce {
            target,
            scale,
            seed,
            variant,
            out,
        } => match target.parse::<ProblemName>() {
            Ok(problem) => {
                let mut cfg = RunConfig::preset(problem, scale.unwrap_or(Scale::Full));
                override_cfg(&mut cfg, seed, variant)?;
                let dir = output_dir(out, &default_name(&cfg));
                let outcome = run_experiment(&cfg, &dir, &mut log_progress)?;
                println!("wrote {}", dir.display());
                Ok(print_report(&outcome.report, cfg.acceptance.max_rel_l2))
            }
            Err(_) => {
                let manifest = Path::new(&target);
                if scale.is_some() || seed.is_some() || variant.is_some() {
                    return Err(d3pinn::Error::Config {
                        path: "<command line>".into(),
                        reason: "a manifest fixes scale, seed and variant".into(),
                    });
                }
                let dir = output_dir(out, "rerun");
                let (outcome, changed) = rerun_from_manifest(manifest, &dir, &mut log_progress)?;
                let passed = print_report(&outcome.report, outcome.manifest.config.acceptance.max_rel_l2);
                if changed.is_empty() {
                    println!("all artifacts bit-identical to the manifest");
                } else {
                    println!("artifacts differ from the manifest: {}", changed.join(", "));
                }
                Ok(passed && changed.is_empty())
            }
        },
        Command::Compare { run, variants, seeds } => {
            let cfg = run.source.resolve()?;
            let dir = output_dir(run.out, &format!("{}-compare", cfg.problem.as_str()));
            let summary = compare(&cfg, &variants, &seeds, &dir, &mut |v, s, p| {
                if p.iteration == p.iterations {
                    eprintln!("{} seed {s}: final loss {:.6e}", v.as_str(), p.loss.total);
                }
            })?;
            print!("{}", summary.to_csv());
            for (v, m) in &summary.median_rel_l2 {
                println!("median rel_l2 {}: {:.4e}", v.as_str(), m);
            }
            // Passing means the staged method has the lowest median.
            let passed = match summary.median_of(Variant::D3pinn) {
                Some(best) => summary
                    .median_rel_l2
                    .iter()
                    .all(|(v, m)| *v == Variant::D3pinn || best < *m),
                None => true,
            };
            println!("{}", if passed { "PASS" } else { "FAIL" });
            Ok(passed)
        }
        Command::ShowConfig { source } => {
            print!("{}", source.resolve()?.to_toml()?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
