//! Class-conditional image perturbations.
//!
//! Each scheme rewrites exactly the pixels selected by a class mask and
//! leaves the rest untouched:
//!
//! * [`PerturbScheme::Constant`] — a fixed intensity on every channel;
//! * [`PerturbScheme::Average`] — the segment's per-channel mean;
//! * [`PerturbScheme::GaussianBlur`] — the blurred image, sampled inside the
//!   mask (texture removed, low-frequency appearance kept);
//! * [`PerturbScheme::Lognormal`] — seeded noise from a lognormal law fitted
//!   to the segment via `y = ln(p + 1)`, sampled per channel as
//!   `exp(z) - 1` and clamped to `[0, 255]`.
//!
//! [`perturb_dataset`] runs one scheme across paired image/label files,
//! deriving an independent child seed per item so worker count and item
//! order never change any output byte.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{
    gaussian_blur, load_image, load_label_map, save_image, ClassMask, LabelMap, RasterImage,
};
use crate::rng::{derive_seed, seeded_rng};

/// Scheme identity without parameters; used in manifests, metric bundles and
/// bias provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Constant,
    Average,
    Blur,
    Lognormal,
}

impl SchemeKind {
    /// All kinds in their canonical order.
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Constant,
        SchemeKind::Average,
        SchemeKind::Blur,
        SchemeKind::Lognormal,
    ];

    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Constant => "constant",
            SchemeKind::Average => "average",
            SchemeKind::Blur => "blur",
            SchemeKind::Lognormal => "lognormal",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(SchemeKind::Constant),
            "average" => Ok(SchemeKind::Average),
            "blur" => Ok(SchemeKind::Blur),
            "lognormal" => Ok(SchemeKind::Lognormal),
            other => Err(Error::InvalidParameter(format!(
                "unknown perturbation scheme {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully parameterized perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PerturbScheme {
    /// Replace the segment with `value` on every channel.
    Constant { value: f64 },
    /// Replace the segment with its own per-channel mean.
    Average,
    /// Replace the segment with the Gaussian-blurred image.
    #[serde(rename = "blur")]
    GaussianBlur { sigma: f64 },
    /// Replace the segment with seeded fitted-lognormal noise.
    Lognormal { seed: u64 },
}

impl PerturbScheme {
    #[must_use]
    pub fn kind(&self) -> SchemeKind {
        match self {
            PerturbScheme::Constant { .. } => SchemeKind::Constant,
            PerturbScheme::Average => SchemeKind::Average,
            PerturbScheme::GaussianBlur { .. } => SchemeKind::Blur,
            PerturbScheme::Lognormal { .. } => SchemeKind::Lognormal,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PerturbScheme::Constant { value } => {
                if !value.is_finite() || !(0.0..=255.0).contains(&value) {
                    return Err(Error::InvalidParameter(format!(
                        "constant fill {value} outside [0, 255]"
                    )));
                }
            }
            PerturbScheme::GaussianBlur { sigma } => {
                if !sigma.is_finite() || sigma <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "blur width must be positive, got {sigma}"
                    )));
                }
            }
            PerturbScheme::Average | PerturbScheme::Lognormal { .. } => {}
        }
        Ok(())
    }

    /// Same scheme with the lognormal seed replaced (no-op for the others).
    #[must_use]
    fn with_seed(&self, seed: u64) -> Self {
        match self {
            PerturbScheme::Lognormal { .. } => PerturbScheme::Lognormal { seed },
            other => other.clone(),
        }
    }
}

/// Blur width from a square smoothing-kernel size, `sigma = k / 3`.
///
/// Lets callers derive the blur scheme's width from the kernel size that
/// covers a typical segment of their dataset.
#[must_use]
pub fn sigma0_from_kernel_size(kernel_size: f64) -> f64 {
    kernel_size / 3.0
}

/// Binary mask of the pixels labelled `class_id`.
///
/// The id must lie inside the map's class range; the ignore id is not a
/// selectable class.
pub fn class_mask(label: &LabelMap, class_id: u8) -> Result<ClassMask> {
    if (class_id as usize) >= label.n_classes() {
        return Err(Error::ClassIdOutOfRange {
            id: u16::from(class_id),
            n_classes: label.n_classes(),
        });
    }
    let data = label.data().iter().map(|&id| id == class_id).collect();
    ClassMask::new(label.width(), label.height(), data)
}

/// Rewrite the masked pixels of `image` according to `scheme`.
///
/// `Average` and `Lognormal` need a non-empty mask; `Constant` and
/// `GaussianBlur` accept any mask (an empty one returns the image as-is).
pub fn apply_perturbation(
    image: &RasterImage,
    mask: &ClassMask,
    scheme: &PerturbScheme,
) -> Result<RasterImage> {
    scheme.validate()?;
    if mask.width() != image.width() || mask.height() != image.height() {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} does not cover image {}x{}",
            mask.width(),
            mask.height(),
            image.width(),
            image.height()
        )));
    }
    let mut out = image.clone();
    match *scheme {
        PerturbScheme::Constant { value } => {
            for_each_masked(mask, |x, y| {
                for c in 0..out.channels() {
                    out.set(x, y, c, value);
                }
            });
        }
        PerturbScheme::Average => {
            let count = mask.count();
            if count == 0 {
                return Err(Error::EmptySegment(
                    "the average scheme needs at least one masked pixel".into(),
                ));
            }
            let means: Vec<f64> = (0..image.channels())
                .map(|c| masked_sum(image, mask, c) / count as f64)
                .collect();
            for_each_masked(mask, |x, y| {
                for (c, &m) in means.iter().enumerate() {
                    out.set(x, y, c, m);
                }
            });
        }
        PerturbScheme::GaussianBlur { sigma } => {
            let blurred = gaussian_blur(image, sigma)?;
            for_each_masked(mask, |x, y| {
                for c in 0..out.channels() {
                    out.set(x, y, c, blurred.get(x, y, c));
                }
            });
        }
        PerturbScheme::Lognormal { seed } => {
            if mask.count() == 0 {
                return Err(Error::EmptySegment(
                    "the lognormal scheme needs at least one masked pixel to fit".into(),
                ));
            }
            let mut rng = seeded_rng(seed);
            // One independent field per channel, drawn channel-major with
            // masked pixels visited in row-major order.
            for c in 0..image.channels() {
                let (mu, sigma) = lognormal_fit(image, mask, c);
                for_each_masked(mask, |x, y| {
                    let z: f64 = if sigma > 0.0 {
                        mu + sigma * rng.sample::<f64, _>(StandardNormal)
                    } else {
                        mu
                    };
                    out.set(x, y, c, (z.exp() - 1.0).clamp(0.0, 255.0));
                });
            }
        }
    }
    Ok(out)
}

fn for_each_masked(mask: &ClassMask, mut f: impl FnMut(usize, usize)) {
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                f(x, y);
            }
        }
    }
}

fn masked_sum(image: &RasterImage, mask: &ClassMask, c: usize) -> f64 {
    let mut sum = 0.0;
    for_each_masked(mask, |x, y| sum += image.get(x, y, c));
    sum
}

/// Fit `ln(p + 1)` over the masked pixels of one channel: mean and
/// population standard deviation.
fn lognormal_fit(image: &RasterImage, mask: &ClassMask, c: usize) -> (f64, f64) {
    let mut ys = Vec::with_capacity(mask.count());
    for_each_masked(mask, |x, y| ys.push((image.get(x, y, c) + 1.0).ln()));
    let n = ys.len() as f64;
    let mu = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mu) * (y - mu)).sum::<f64>() / n;
    (mu, var.sqrt())
}

/// Mean and standard deviation of `exp(z) - 1` under the fitted law for one
/// channel; the targets the sampled field converges to (before clamping).
#[must_use]
pub fn lognormal_targets(image: &RasterImage, mask: &ClassMask, c: usize) -> (f64, f64) {
    let (mu, sigma) = lognormal_fit(image, mask, c);
    let m = (mu + sigma * sigma / 2.0).exp();
    (m - 1.0, m * ((sigma * sigma).exp() - 1.0).sqrt())
}

/// One image/label pair of a dataset, keyed by its shared file stem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetItem {
    pub stem: String,
    pub image_path: PathBuf,
    pub label_path: PathBuf,
}

/// Outcome for one image in a [`perturb_dataset`] run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbRecord {
    pub image: String,
    pub class_id: u8,
    pub scheme: SchemeKind,
    pub masked_pixels: usize,
    pub status: PerturbStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbStatus {
    /// The class was present; masked pixels were rewritten.
    Perturbed,
    /// The class was absent; the image was copied through unchanged.
    Absent,
}

/// Perturb one image/label pair, writing the result to `out_path`.
///
/// Images that do not contain `class_id` are copied byte-for-byte and
/// flagged [`PerturbStatus::Absent`] instead of erroring.
pub fn perturb_item(
    item: &DatasetItem,
    class_id: u8,
    scheme: &PerturbScheme,
    out_path: &Path,
    n_classes: usize,
    ignore_id: Option<u8>,
) -> Result<PerturbRecord> {
    scheme.validate()?;
    let image = load_image(&item.image_path)?;
    let label = load_label_map(&item.label_path, Some(n_classes), ignore_id)?;
    if label.width() != image.width() || label.height() != image.height() {
        return Err(Error::DimensionMismatch(format!(
            "label map {}x{} does not cover image {}x{} for stem {:?}",
            label.width(),
            label.height(),
            image.width(),
            image.height(),
            item.stem
        )));
    }
    let mask = class_mask(&label, class_id)?;
    let masked_pixels = mask.count();
    let status = if masked_pixels == 0 {
        std::fs::copy(&item.image_path, out_path).map_err(|e| Error::io(out_path, e))?;
        PerturbStatus::Absent
    } else {
        let perturbed = apply_perturbation(&image, &mask, scheme)?;
        save_image(&perturbed, out_path)?;
        PerturbStatus::Perturbed
    };
    Ok(PerturbRecord {
        image: item.stem.clone(),
        class_id,
        scheme: scheme.kind(),
        masked_pixels,
        status,
    })
}

/// Run one scheme on one class over a whole dataset, in parallel.
///
/// Outputs land at `out_dir/<stem>.png`. The lognormal scheme derives a
/// child seed per item from its base seed and the item index, so results do
/// not depend on thread scheduling. Records come back in item order; the
/// first failing item aborts the run.
pub fn perturb_dataset(
    items: &[DatasetItem],
    class_id: u8,
    scheme: &PerturbScheme,
    out_dir: &Path,
    n_classes: usize,
    ignore_id: Option<u8>,
) -> Result<Vec<PerturbRecord>> {
    scheme.validate()?;
    if (class_id as usize) >= n_classes {
        return Err(Error::ClassIdOutOfRange {
            id: u16::from(class_id),
            n_classes,
        });
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let base_seed = match *scheme {
        PerturbScheme::Lognormal { seed } => seed,
        _ => 0,
    };
    items
        .par_iter()
        .enumerate()
        .map(|(idx, item)| {
            let item_scheme = scheme.with_seed(derive_seed(base_seed, idx as u64));
            let out_path = out_dir.join(format!("{}.png", item.stem));
            perturb_item(
                item,
                class_id,
                &item_scheme,
                &out_path,
                n_classes,
                ignore_id,
            )
        })
        .collect()
}
