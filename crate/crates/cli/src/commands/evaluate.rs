//! `evaluate`: score predicted label maps against ground truth and emit a
//! metrics JSON, optionally split into biased/unbiased class means.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use warpeval_core::bias::BiasSplit;
use warpeval_core::metrics::{
    ConfusionMatrix, MetricsReport, SplitAggregate, SplitMetricsBlock, VoidPolicy, SCHEMA_VERSION,
};
use warpeval_core::raster::load_label_map;

use crate::config::{ToolConfig, VoidChoice};
use crate::manifest::{partition_outcomes, Manifest};
use crate::pairing::{pair, png_stems};

#[derive(Debug, clap::Args)]
pub struct EvaluateArgs {
    /// Directory of ground-truth label maps.
    #[arg(long)]
    pub gt: PathBuf,
    /// Directory of predicted label maps.
    #[arg(long)]
    pub pred: PathBuf,
    /// Output directory (metrics.json, manifest.json, effective config).
    #[arg(long)]
    pub out: PathBuf,
    /// Bias-split JSON; adds biased/unbiased class means to the report.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Class count; derived from the data when absent.
    #[arg(long)]
    pub n_classes: Option<usize>,
    /// Label value that marks unlabeled pixels.
    #[arg(long)]
    pub ignore_id: Option<u8>,
    /// How to treat ignore-id pixels in predictions.
    #[arg(long, value_enum)]
    pub void_policy: Option<VoidChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateEntry {
    pub file: String,
    pub pixels: usize,
}

pub fn run(args: &EvaluateArgs, mut cfg: ToolConfig) -> Result<usize> {
    apply_overrides(args, &mut cfg);

    let gt = png_stems(&args.gt)?;
    let pred = png_stems(&args.pred)?;
    let pairs = pair(&gt, "gt", &pred, "pred")?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let ignore_id = cfg.eval.ignore_id;
    let policy: VoidPolicy = cfg.eval.void_policy.into();
    let n_classes = match cfg.eval.n_classes {
        Some(n) => n,
        None => derive_n_classes(&pairs, ignore_id)?,
    };

    let outcomes: Vec<(String, Result<(ConfusionMatrix, EvaluateEntry)>)> = pairs
        .par_iter()
        .map(|(stem, gt_path, pred_path)| {
            let outcome = accumulate_pair(gt_path, pred_path, n_classes, ignore_id, policy).map(
                |(cm, pixels)| {
                    (
                        cm,
                        EvaluateEntry {
                            file: format!("{stem}.png"),
                            pixels,
                        },
                    )
                },
            );
            (format!("{stem}.png"), outcome)
        })
        .collect();
    let (scored, errors) = partition_outcomes(outcomes);
    let n_errors = super::surface_errors(&errors);

    let mut manifest = Manifest::new("evaluate", cfg.seed);
    manifest.entries = scored.iter().map(|(_, e)| e.clone()).collect();
    manifest.errors = errors;
    manifest.write(&args.out)?;
    cfg.write_effective(&args.out)?;

    if scored.is_empty() {
        eprintln!("error: no pairs evaluated; metrics not written");
        return Ok(n_errors.max(1));
    }
    let mut total = ConfusionMatrix::new(n_classes)?;
    for (cm, _) in &scored {
        total = total.merge(cm)?;
    }

    let table = total.per_class_metrics();
    let aggregate = warpeval_core::metrics::aggregate(&table, &total, None)?;
    let splits = match &args.split {
        Some(path) => {
            let split = BiasSplit::from_path(path)?;
            Some(SplitMetricsBlock {
                biased: SplitAggregate::over(&table, &total, &split.biased_set())?,
                unbiased: SplitAggregate::over(&table, &total, &split.unbiased_set())?,
            })
        }
        None => None,
    };
    let report = MetricsReport {
        schema_version: SCHEMA_VERSION,
        n_classes,
        ignore_id,
        per_class: table,
        aggregate,
        splits,
    };
    report.to_path(args.out.join("metrics.json"))?;
    Ok(n_errors)
}

fn accumulate_pair(
    gt_path: &Path,
    pred_path: &Path,
    n_classes: usize,
    ignore_id: Option<u8>,
    policy: VoidPolicy,
) -> Result<(ConfusionMatrix, usize)> {
    let gt = load_label_map(gt_path, Some(n_classes), ignore_id)?;
    let pred = load_label_map(pred_path, Some(n_classes), ignore_id)?;
    let mut cm = ConfusionMatrix::new(n_classes)?;
    cm.accumulate(&gt, &pred, policy)?;
    Ok((cm, gt.width() * gt.height()))
}

/// Class count: one past the largest non-ignore id over all gt and
/// prediction maps.
fn derive_n_classes(pairs: &[(String, PathBuf, PathBuf)], ignore_id: Option<u8>) -> Result<usize> {
    pairs
        .par_iter()
        .map(|(stem, gt_path, pred_path)| {
            let gt = load_label_map(gt_path, None, ignore_id)
                .with_context(|| format!("deriving the class count from gt {stem}"))?;
            let pred = load_label_map(pred_path, None, ignore_id)
                .with_context(|| format!("deriving the class count from pred {stem}"))?;
            Ok(gt.n_classes().max(pred.n_classes()))
        })
        .try_reduce(|| 1, |a, b| Ok(a.max(b)))
}

fn apply_overrides(args: &EvaluateArgs, cfg: &mut ToolConfig) {
    if let Some(v) = args.n_classes {
        cfg.eval.n_classes = Some(v);
    }
    if let Some(v) = args.ignore_id {
        cfg.eval.ignore_id = Some(v);
    }
    if let Some(v) = args.void_policy {
        cfg.eval.void_policy = v;
    }
}
