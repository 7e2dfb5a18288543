//! `warp`: distort label-map boundaries with seeded thin-plate splines.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use warpeval_core::raster::{label_boundary_edges, load_edge_map, load_label_map, save_label_map};
use warpeval_core::rng::derive_seed;
use warpeval_core::tps::{warp_augment_full, warp_label_map};

use crate::config::{BorderChoice, ToolConfig};
use crate::manifest::{partition_outcomes, Manifest};
use crate::pairing::{pair, png_stems};

#[derive(Debug, clap::Args)]
pub struct WarpArgs {
    /// Directory of label-map PNGs to warp.
    #[arg(long)]
    pub labels: PathBuf,
    /// Directory of edge-map PNGs; boundaries are derived from the labels
    /// when absent.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Directory of companion id maps (e.g. instances) to warp with the
    /// same per-file transform.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Boundary keypoints sampled per image.
    #[arg(long)]
    pub n_keypoints: Option<usize>,
    /// Edge-strength threshold for keypoint candidates, in (0, 1].
    #[arg(long)]
    pub tau: Option<f64>,
    /// Largest keypoint shift in pixels along either axis.
    #[arg(long)]
    pub max_shift: Option<f64>,
    /// Spline smoothing weight; 0 interpolates exactly.
    #[arg(long)]
    pub lambda_reg: Option<f64>,
    /// What out-of-image samples read as.
    #[arg(long, value_enum)]
    pub border: Option<BorderChoice>,
    /// Class count; derived from the data when absent.
    #[arg(long)]
    pub n_classes: Option<usize>,
    /// Label value that marks unlabeled pixels.
    #[arg(long)]
    pub ignore_id: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpEntry {
    pub file: String,
    pub seed: u64,
    pub keypoints: usize,
    pub max_displacement: f64,
}

pub fn run(args: &WarpArgs, mut cfg: ToolConfig) -> Result<usize> {
    apply_overrides(args, &mut cfg);

    let labels = png_stems(&args.labels)?;
    let edges = match &args.edges {
        Some(dir) => {
            let edges = png_stems(dir)?;
            pair(&labels, "labels", &edges, "edges")?;
            Some(edges)
        }
        None => {
            eprintln!("note: no --edges directory; deriving boundary maps from the label maps");
            None
        }
    };
    let instances = match &args.instances {
        Some(dir) => {
            let instances = png_stems(dir)?;
            pair(&labels, "labels", &instances, "instances")?;
            std::fs::create_dir_all(args.out.join("instances"))
                .with_context(|| format!("creating {}", args.out.display()))?;
            Some(instances)
        }
        None => None,
    };
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let outcomes: Vec<(String, Result<WarpEntry>)> = labels
        .iter()
        .enumerate()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(index, (stem, label_path))| {
            let seed = derive_seed(cfg.seed, index as u64);
            let edge_path = edges.as_ref().map(|m| m[stem].as_path());
            let inst_path = instances.as_ref().map(|m| m[stem].as_path());
            let outcome = warp_one(
                &cfg, stem, label_path, edge_path, inst_path, &args.out, seed,
            );
            (format!("{stem}.png"), outcome)
        })
        .collect();

    let (entries, errors) = partition_outcomes(outcomes);
    let n_errors = super::surface_errors(&errors);
    let mut manifest = Manifest::new("warp", cfg.seed);
    manifest.entries = entries;
    manifest.errors = errors;
    manifest.write(&args.out)?;
    cfg.write_effective(&args.out)?;
    Ok(n_errors)
}

fn warp_one(
    cfg: &ToolConfig,
    stem: &str,
    label_path: &Path,
    edge_path: Option<&Path>,
    inst_path: Option<&Path>,
    out_dir: &Path,
    seed: u64,
) -> Result<WarpEntry> {
    let label = load_label_map(label_path, cfg.eval.n_classes, cfg.eval.ignore_id)?;
    let edge = match edge_path {
        Some(p) => load_edge_map(p)?,
        None => label_boundary_edges(&label),
    };
    let wcfg = cfg.warp_config(seed);
    let outcome = warp_augment_full(&label, &edge, &wcfg)?;
    save_label_map(&outcome.warped, out_dir.join(format!("{stem}.png")))?;

    if let Some(p) = inst_path {
        let inst = load_label_map(p, None, cfg.eval.ignore_id)?;
        if inst.width() != label.width() || inst.height() != label.height() {
            bail!(
                "companion map {} is {}x{}, label map is {}x{}",
                p.display(),
                inst.width(),
                inst.height(),
                label.width(),
                label.height()
            );
        }
        let warped = warp_label_map(&inst, &outcome.transform, wcfg.border)?;
        save_label_map(
            &warped,
            out_dir.join("instances").join(format!("{stem}.png")),
        )?;
    }

    Ok(WarpEntry {
        file: format!("{stem}.png"),
        seed,
        keypoints: outcome.stats.keypoints,
        max_displacement: outcome.stats.max_displacement,
    })
}

fn apply_overrides(args: &WarpArgs, cfg: &mut ToolConfig) {
    if let Some(v) = args.n_keypoints {
        cfg.warp.n_keypoints = v;
    }
    if let Some(v) = args.tau {
        cfg.warp.tau = v;
    }
    if let Some(v) = args.max_shift {
        cfg.warp.max_shift = v;
    }
    if let Some(v) = args.lambda_reg {
        cfg.warp.lambda_reg = v;
    }
    if let Some(v) = args.border {
        cfg.warp.border = v;
    }
    if let Some(v) = args.n_classes {
        cfg.eval.n_classes = Some(v);
    }
    if let Some(v) = args.ignore_id {
        cfg.eval.ignore_id = Some(v);
    }
}
