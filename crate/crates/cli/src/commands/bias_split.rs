//! `bias-split`: partition classes into biased and unbiased sides from real
//! and perturbed metric files, or dump a bundled reference split.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use warpeval_core::bias::{
    classify_bias, load_reference_split, BiasMetricMode, PerturbedMetricSet, ReferenceDataset,
};
use warpeval_core::metrics::MetricsReport;
use warpeval_core::perturb::SchemeKind;

use crate::config::ToolConfig;

#[derive(Debug, clap::Args)]
pub struct BiasSplitArgs {
    /// Metrics JSON measured on unperturbed images.
    #[arg(long, required_unless_present = "bundled", conflicts_with = "bundled")]
    pub real: Option<PathBuf>,
    /// Per-scheme metrics JSONs, as scheme=path (repeatable).
    #[arg(
        long = "perturbed",
        value_name = "SCHEME=PATH",
        conflicts_with = "bundled"
    )]
    pub perturbed: Vec<String>,
    /// Write a bundled reference split for this dataset instead.
    #[arg(long)]
    pub bundled: Option<String>,
    /// Output directory (bias_split.json, effective config).
    #[arg(long)]
    pub out: PathBuf,
    /// Threshold factor override.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Restrict the criterion to IoU.
    #[arg(long)]
    pub iou_only: bool,
}

pub fn run(args: &BiasSplitArgs, mut cfg: ToolConfig) -> Result<usize> {
    if let Some(v) = args.delta {
        cfg.eval.delta = v;
    }
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let split = match &args.bundled {
        Some(name) => {
            let dataset: ReferenceDataset = name.parse()?;
            load_reference_split(dataset)?
        }
        None => {
            let real_path = args.real.as_ref().expect("clap enforces --real");
            if args.perturbed.is_empty() {
                bail!("at least one --perturbed scheme=path is required");
            }
            let real = MetricsReport::from_path(real_path)?;
            let mut set = PerturbedMetricSet::new();
            for raw in &args.perturbed {
                let (scheme_name, path) = super::key_value(raw, "--perturbed")?;
                let scheme: SchemeKind = scheme_name.parse()?;
                if set.get(scheme).is_some() {
                    bail!("scheme {scheme} given twice");
                }
                let report = MetricsReport::from_path(&path)
                    .with_context(|| format!("loading {scheme} metrics"))?;
                set.insert(scheme, report.per_class)?;
            }
            for scheme in SchemeKind::ALL {
                if set.get(scheme).is_none() {
                    eprintln!(
                        "warning: no metrics for scheme {scheme}; classification proceeds \
                         without it"
                    );
                }
            }
            let mode = if args.iou_only {
                BiasMetricMode::IouOnly
            } else {
                BiasMetricMode::PaOrIou
            };
            let split = classify_bias(&real.per_class, &set, cfg.eval.delta, mode)?;
            if !split.excluded.is_empty() {
                eprintln!(
                    "warning: classes {:?} appear in perturbed metrics but not in the real \
                     ones; they were excluded",
                    split.excluded
                );
            }
            split
        }
    };

    split.to_path(args.out.join("bias_split.json"))?;
    cfg.write_effective(&args.out)?;
    Ok(0)
}
