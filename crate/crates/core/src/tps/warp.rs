//! Seeded boundary-warp augmentation of label maps.
//!
//! The augmentation pipeline samples keypoints from a boundary-strength map,
//! jitters them with per-axis uniform shifts, fits a spline from the jittered
//! positions back to the originals, and resamples the label map through that
//! backward transform with nearest-neighbor lookup. Fitting in the
//! moving-to-fixed direction means backward resampling applies the intended
//! forward distortion without inverting the spline.

use rand::Rng;

use crate::error::{Error, Result};
use crate::raster::{EdgeMap, LabelMap};
use crate::rng::{derive_seed, seeded_rng};
use crate::tps::{KeyPointSet, TpsTransform};

/// What a backward lookup outside the source rectangle produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderMode {
    /// Clamp the source location to the nearest border pixel.
    Clamp,
    /// Write the map's ignore id (requires one to be configured).
    IgnoreFill,
}

/// Parameters of [`warp_augment`].
#[derive(Debug, Clone, PartialEq)]
pub struct WarpConfig {
    /// Number of boundary keypoints drawn (with replacement).
    pub n_keypoints: usize,
    /// Minimum edge strength for a pixel to act as a keypoint candidate.
    pub tau: f64,
    /// Half-range of the per-axis uniform jitter, in pixels.
    pub max_shift: f64,
    /// Diagonal regularization added to the spline system.
    pub lambda_reg: f64,
    /// Seed for both the sampling and jitter draws.
    pub seed: u64,
    /// Out-of-rectangle policy during resampling.
    pub border: BorderMode,
}

impl Default for WarpConfig {
    fn default() -> Self {
        Self {
            n_keypoints: 64,
            tau: 0.5,
            max_shift: 4.0,
            lambda_reg: 1e-3,
            seed: 0,
            border: BorderMode::Clamp,
        }
    }
}

/// Summary of one augmentation run, recorded in warp manifests.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WarpStats {
    /// Keypoints actually used for the fit.
    pub keypoints: usize,
    /// Largest per-axis displacement between a keypoint and its jittered
    /// position, after clamping to the image rectangle.
    pub max_displacement: f64,
    /// Bending energy of the fitted backward transform.
    pub bending_energy: f64,
}

/// Warped map plus the transform and statistics that produced it.
#[derive(Debug, Clone)]
pub struct WarpOutcome {
    pub warped: LabelMap,
    /// Backward transform (output pixel to source location); reuse it to
    /// warp companion rasters such as instance maps with the same distortion.
    pub transform: TpsTransform,
    pub stats: WarpStats,
}

/// Draw `n` keypoints (with replacement) from the pixels whose edge strength
/// reaches `tau`, in row-major candidate order.
pub fn sample_boundary_keypoints(
    edge: &EdgeMap,
    n: usize,
    tau: f64,
    seed: u64,
) -> Result<KeyPointSet> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "keypoint count must be positive".into(),
        ));
    }
    if !tau.is_finite() || tau <= 0.0 || tau > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "edge threshold must lie in (0, 1], got {tau}"
        )));
    }
    let mut candidates = Vec::new();
    for y in 0..edge.height() {
        for x in 0..edge.width() {
            if edge.get(x, y) >= tau {
                candidates.push((x as f64, y as f64));
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoBoundaryPixels { tau });
    }
    let mut rng = seeded_rng(seed);
    let points = (0..n)
        .map(|_| candidates[rng.gen_range(0..candidates.len())])
        .collect();
    Ok(KeyPointSet::new(points))
}

/// Shift every keypoint by independent per-axis draws from
/// `U(-max_shift, max_shift)`, then clamp into the `width x height`
/// rectangle. `max_shift = 0` returns the input unchanged.
pub fn jitter_keypoints(
    fixed: &KeyPointSet,
    max_shift: f64,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<KeyPointSet> {
    if !max_shift.is_finite() || max_shift < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "max shift must be finite and non-negative, got {max_shift}"
        )));
    }
    if max_shift == 0.0 {
        return Ok(fixed.clone());
    }
    let mut rng = seeded_rng(seed);
    let points = fixed
        .points
        .iter()
        .map(|&(u, v)| {
            let du = rng.gen_range(-max_shift..max_shift);
            let dv = rng.gen_range(-max_shift..max_shift);
            (
                (u + du).clamp(0.0, (width - 1) as f64),
                (v + dv).clamp(0.0, (height - 1) as f64),
            )
        })
        .collect();
    Ok(KeyPointSet::new(points))
}

/// Resample a label map through a backward transform with nearest-neighbor
/// lookup: output pixel `(u, v)` takes the id at the rounded `t(u, v)`.
pub fn warp_label_map(label: &LabelMap, t: &TpsTransform, border: BorderMode) -> Result<LabelMap> {
    let (w, h) = (label.width(), label.height());
    let fill = match border {
        BorderMode::Clamp => None,
        BorderMode::IgnoreFill => Some(label.ignore_id().ok_or_else(|| {
            Error::InvalidParameter(
                "ignore-fill border requires the label map to declare an ignore id".into(),
            )
        })?),
    };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (su, sv) = t.apply((x as f64, y as f64));
            let (iu, iv) = (su.round() as i64, sv.round() as i64);
            let inside = (0..w as i64).contains(&iu) && (0..h as i64).contains(&iv);
            let id = if inside {
                label.get(iu as usize, iv as usize)
            } else {
                match fill {
                    Some(ignore) => ignore,
                    None => label.get(
                        iu.clamp(0, w as i64 - 1) as usize,
                        iv.clamp(0, h as i64 - 1) as usize,
                    ),
                }
            };
            out.push(id);
        }
    }
    LabelMap::new(w, h, label.n_classes(), label.ignore_id(), out)
}

/// Full boundary-warp augmentation: sample, jitter, fit backward, resample.
///
/// Child seeds for the sampling and jitter stages are derived from
/// `cfg.seed`, so equal inputs and seeds reproduce the output bit-exactly.
pub fn warp_augment_full(
    label: &LabelMap,
    edge: &EdgeMap,
    cfg: &WarpConfig,
) -> Result<WarpOutcome> {
    if edge.width() != label.width() || edge.height() != label.height() {
        return Err(Error::DimensionMismatch(format!(
            "edge map {}x{} does not cover label map {}x{}",
            edge.width(),
            edge.height(),
            label.width(),
            label.height()
        )));
    }
    let fixed =
        sample_boundary_keypoints(edge, cfg.n_keypoints, cfg.tau, derive_seed(cfg.seed, 0))?;
    let moving = jitter_keypoints(
        &fixed,
        cfg.max_shift,
        label.width(),
        label.height(),
        derive_seed(cfg.seed, 1),
    )?;
    let max_displacement = fixed
        .points
        .iter()
        .zip(&moving.points)
        .map(|(&(fu, fv), &(mu, mv))| (fu - mu).abs().max((fv - mv).abs()))
        .fold(0.0f64, f64::max);
    // Moving-to-fixed orientation: the fitted map sends each output-side
    // (jittered) position back to where its content came from.
    let transform = TpsTransform::fit(&moving, &fixed, cfg.lambda_reg)?;
    let warped = warp_label_map(label, &transform, cfg.border)?;
    let stats = WarpStats {
        keypoints: fixed.len(),
        max_displacement,
        bending_energy: transform.bending_energy(),
    };
    Ok(WarpOutcome {
        warped,
        transform,
        stats,
    })
}

/// [`warp_augment_full`] without the diagnostics.
pub fn warp_augment(label: &LabelMap, edge: &EdgeMap, cfg: &WarpConfig) -> Result<LabelMap> {
    warp_augment_full(label, edge, cfg).map(|o| o.warped)
}
