//! `perturb`: destroy class content in images with statistics-preserving
//! fills, one output tree per class/scheme combination.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use warpeval_core::perturb::{perturb_item, DatasetItem, PerturbScheme, SchemeKind};
use warpeval_core::raster::load_label_map;
use warpeval_core::rng::derive_seed;

use crate::config::ToolConfig;
use crate::manifest::{partition_outcomes, Manifest};
use crate::pairing::{pair, png_stems};

#[derive(Debug, clap::Args)]
pub struct PerturbArgs {
    /// Directory of image PNGs.
    #[arg(long)]
    pub images: PathBuf,
    /// Directory of label-map PNGs naming each pixel's class.
    #[arg(long)]
    pub labels: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Perturb this class only.
    #[arg(long, conflicts_with = "all_classes")]
    pub class_id: Option<u8>,
    /// Perturb every class, one output subtree per class.
    #[arg(long)]
    pub all_classes: bool,
    /// Which scheme to run (all = every enabled scheme).
    #[arg(long, value_enum, default_value_t = SchemeChoice::All)]
    pub scheme: SchemeChoice,
    /// Class count; derived from the data when absent.
    #[arg(long)]
    pub n_classes: Option<usize>,
    /// Label value that marks unlabeled pixels.
    #[arg(long)]
    pub ignore_id: Option<u8>,
    /// Constant-scheme fill value.
    #[arg(long)]
    pub c0: Option<f64>,
    /// Blur-scheme width.
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// Dataset profile supplying the blur width.
    #[arg(long)]
    pub profile: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SchemeChoice {
    Constant,
    Average,
    Blur,
    Lognormal,
    All,
}

/// One manifest entry: a single image under one class/scheme combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbEntry {
    pub file: String,
    pub class_id: u8,
    pub scheme: SchemeKind,
    pub masked_pixels: usize,
    pub status: warpeval_core::perturb::PerturbStatus,
}

pub fn run(args: &PerturbArgs, mut cfg: ToolConfig) -> Result<usize> {
    apply_overrides(args, &mut cfg);

    let images = png_stems(&args.images)?;
    let labels = png_stems(&args.labels)?;
    let pairs = pair(&images, "images", &labels, "labels")?;
    let items: Vec<DatasetItem> = pairs
        .into_iter()
        .map(|(stem, image_path, label_path)| DatasetItem {
            stem,
            image_path,
            label_path,
        })
        .collect();

    let ignore_id = cfg.eval.ignore_id;
    let n_classes = match cfg.eval.n_classes {
        Some(n) => n,
        None => derive_n_classes(&items, ignore_id)?,
    };
    let classes: Vec<u8> = if args.all_classes {
        (0..n_classes as u8).collect()
    } else {
        match args.class_id {
            Some(id) => vec![id],
            None => bail!("choose a target: --class-id <ID> or --all-classes"),
        }
    };
    let schemes = scheme_set(args.scheme, &cfg)?;

    let multi_class = classes.len() > 1;
    let multi_scheme = schemes.len() > 1;
    let mut all_entries = Vec::new();
    let mut all_errors = Vec::new();
    for &class_id in &classes {
        for scheme in &schemes {
            let dir = combo_dir(
                &args.out,
                class_id,
                multi_class,
                scheme.kind(),
                multi_scheme,
            );
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let base_seed = derive_seed(cfg.seed, u64::from(class_id));
            let outcomes: Vec<(String, Result<PerturbEntry>)> = items
                .par_iter()
                .enumerate()
                .map(|(idx, item)| {
                    let item_scheme = match scheme {
                        PerturbScheme::Lognormal { .. } => PerturbScheme::Lognormal {
                            seed: derive_seed(base_seed, idx as u64),
                        },
                        other => other.clone(),
                    };
                    let out_path = dir.join(format!("{}.png", item.stem));
                    let rel = rel_name(&args.out, &out_path);
                    let entry = perturb_item(
                        item,
                        class_id,
                        &item_scheme,
                        &out_path,
                        n_classes,
                        ignore_id,
                    )
                    .map(|r| PerturbEntry {
                        file: rel.clone(),
                        class_id: r.class_id,
                        scheme: r.scheme,
                        masked_pixels: r.masked_pixels,
                        status: r.status,
                    })
                    .map_err(anyhow::Error::from);
                    (rel, entry)
                })
                .collect();
            let (entries, errors) = partition_outcomes(outcomes);
            all_entries.extend(entries);
            all_errors.extend(errors);
        }
    }

    let n_errors = super::surface_errors(&all_errors);
    let mut manifest = Manifest::new("perturb", cfg.seed);
    manifest.inputs = Some(items.iter().map(|i| i.stem.clone()).collect());
    manifest.entries = all_entries;
    manifest.errors = all_errors;
    manifest.write(&args.out)?;
    cfg.write_effective(&args.out)?;
    Ok(n_errors)
}

/// Class count: one past the largest non-ignore id over all label maps.
fn derive_n_classes(items: &[DatasetItem], ignore_id: Option<u8>) -> Result<usize> {
    items
        .par_iter()
        .map(|item| {
            load_label_map(&item.label_path, None, ignore_id)
                .map(|l| l.n_classes())
                .with_context(|| format!("deriving the class count from {}", item.stem))
        })
        .try_reduce(|| 1, |a, b| Ok(a.max(b)))
}

fn scheme_set(choice: SchemeChoice, cfg: &ToolConfig) -> Result<Vec<PerturbScheme>> {
    let constant = PerturbScheme::Constant {
        value: cfg.perturb.c0,
    };
    let blur = PerturbScheme::GaussianBlur {
        sigma: cfg.perturb.resolved_sigma0()?,
    };
    // Lognormal seeds are per item; the base value here is replaced.
    let lognormal = PerturbScheme::Lognormal { seed: 0 };
    Ok(match choice {
        SchemeChoice::Constant => vec![constant],
        SchemeChoice::Average => vec![PerturbScheme::Average],
        SchemeChoice::Blur => vec![blur],
        SchemeChoice::Lognormal => vec![lognormal],
        SchemeChoice::All => {
            let mut set = vec![constant, PerturbScheme::Average, blur];
            if cfg.perturb.lognormal {
                set.push(lognormal);
            }
            set
        }
    })
}

fn combo_dir(
    out: &Path,
    class_id: u8,
    multi_class: bool,
    scheme: SchemeKind,
    multi_scheme: bool,
) -> PathBuf {
    let mut dir = out.to_path_buf();
    if multi_class {
        dir = dir.join(format!("class_{class_id}"));
    }
    if multi_scheme {
        dir = dir.join(scheme.name());
    }
    dir
}

fn rel_name(out: &Path, path: &Path) -> String {
    path.strip_prefix(out)
        .unwrap_or(path)
        .to_string_lossy()
        .replace(std::path::MAIN_SEPARATOR, "/")
}

fn apply_overrides(args: &PerturbArgs, cfg: &mut ToolConfig) {
    if let Some(v) = args.n_classes {
        cfg.eval.n_classes = Some(v);
    }
    if let Some(v) = args.ignore_id {
        cfg.eval.ignore_id = Some(v);
    }
    if let Some(v) = args.c0 {
        cfg.perturb.c0 = v;
    }
    if let Some(v) = args.sigma0 {
        cfg.perturb.sigma0 = Some(v);
    }
    if let Some(v) = &args.profile {
        cfg.perturb.profile = Some(v.clone());
    }
}
