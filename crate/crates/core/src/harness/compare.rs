//! Variant sweeps over several seeds.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Variant};
use crate::error::Result;
use crate::harness::experiment::run_experiment;
use crate::harness::metrics::median;
use crate::io::write_atomic;
use crate::trainer::Progress;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub variant: Variant,
    pub seed: u64,
    pub rel_l1: f64,
    pub rel_l2: f64,
    pub linf: f64,
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub rows: Vec<CompareRow>,
    /// Median relative L2 error per variant, in sweep order.
    pub median_rel_l2: Vec<(Variant, f64)>,
}

impl CompareSummary {
    pub fn median_of(&self, variant: Variant) -> Option<f64> {
        self.median_rel_l2.iter().find(|(v, _)| *v == variant).map(|(_, m)| *m)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,seed,rel_l1,rel_l2,linf,wall_time\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{:e},{:.3}",
                r.variant.as_str(),
                r.seed,
                r.rel_l1,
                r.rel_l2,
                r.linf,
                r.wall_time
            );
        }
        out
    }
}

/// Runs `base` once per (variant, seed) under `out/<variant>-seed<k>` and
/// writes `compare.csv` and `compare.json` to `out`.
pub fn compare(
    base: &RunConfig,
    variants: &[Variant],
    seeds: &[u64],
    out: &Path,
    progress: &mut dyn FnMut(Variant, u64, &Progress),
) -> Result<CompareSummary> {
    let mut rows = Vec::new();
    for &variant in variants {
        for &seed in seeds {
            let mut cfg = base.clone();
            cfg.variant = variant;
            cfg.seed = seed;
            let dir = out.join(format!("{}-seed{seed}", variant.as_str()));
            let outcome = run_experiment(&cfg, &dir, &mut |p| progress(variant, seed, p))?;
            rows.push(CompareRow {
                variant,
                seed,
                rel_l1: outcome.report.rel_l1,
                rel_l2: outcome.report.rel_l2,
                linf: outcome.report.linf,
                wall_time: outcome.report.wall_time,
            });
        }
    }
    let median_rel_l2 = variants
        .iter()
        .map(|&v| {
            let errs: Vec<f64> = rows.iter().filter(|r| r.variant == v).map(|r| r.rel_l2).collect();
            (v, median(&errs))
        })
        .collect();
    let summary = CompareSummary { rows, median_rel_l2 };
    write_atomic(&out.join("compare.csv"), summary.to_csv().as_bytes())?;
    write_atomic(&out.join("compare.json"), &serde_json::to_vec_pretty(&summary)?)?;
    Ok(summary)
}
