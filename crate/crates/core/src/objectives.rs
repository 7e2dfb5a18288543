//! Training objectives for label-map-conditioned image synthesis.
//!
//! Everything here is a plain scalar loss over caller-supplied numbers:
//! adversarial losses in three flavors (saturating log, hinge, least
//! squares), feature matching and perceptual losses over feature stacks, and
//! an edge-consistency loss that compares boundary maps of real and
//! synthesized images. All losses are returned in minimization form for both
//! sides, so a training step always descends. [`BaselineProfile`] bundles
//! the adversarial flavor and loss weights used by three reference
//! generators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::EdgeMap;

const LOG_EPS: f64 = 1e-7;

/// Discriminator outputs over a batch, validated finite and non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitField(Vec<f64>);

impl LogitField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "a logit field needs at least one value".into(),
            ));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("logit {bad} is not finite")));
        }
        Ok(Self(values))
    }

    #[must_use]
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn mean_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.0.iter().map(|&v| f(v)).sum::<f64>() / self.0.len() as f64
    }
}

/// Intermediate activations, one flat buffer per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStack {
    layers: Vec<Vec<f64>>,
}

impl FeatureStack {
    pub fn new(layers: Vec<Vec<f64>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParameter(
                "a feature stack needs at least one layer".into(),
            ));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "feature layer {i} is empty"
                )));
            }
            if let Some(bad) = layer.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "feature layer {i} holds non-finite value {bad}"
                )));
            }
        }
        Ok(Self { layers })
    }

    #[must_use]
    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    #[must_use]
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }
}

/// Shape of the adversarial objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversarialMode {
    /// Saturating cross-entropy on sigmoid probabilities.
    Log,
    /// Hinge at margin 1 on raw logits.
    Hinge,
    /// Least squares against targets 1 (real) and 0 (fake).
    LeastSquares,
}

/// Which player's loss to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversarialSide {
    Generator,
    Discriminator,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn clamped_ln(p: f64) -> f64 {
    p.clamp(LOG_EPS, 1.0 - LOG_EPS).ln()
}

/// Adversarial loss in minimization form.
///
/// The discriminator side needs real logits; the generator side ignores
/// them. In log mode logits pass through a sigmoid whose output is clamped
/// away from 0 and 1, so saturated logits yield large but finite losses.
pub fn adversarial_loss(
    d_real: Option<&LogitField>,
    d_fake: &LogitField,
    side: AdversarialSide,
    mode: AdversarialMode,
) -> Result<f64> {
    let real = match side {
        AdversarialSide::Generator => None,
        AdversarialSide::Discriminator => Some(d_real.ok_or(Error::MissingRealLogits)?),
    };
    let loss = match (mode, side) {
        (AdversarialMode::Log, AdversarialSide::Generator) => {
            -d_fake.mean_of(|v| clamped_ln(sigmoid(v)))
        }
        (AdversarialMode::Log, AdversarialSide::Discriminator) => {
            let real = real.expect("checked above");
            -real.mean_of(|v| clamped_ln(sigmoid(v)))
                - d_fake.mean_of(|v| clamped_ln(1.0 - sigmoid(v)))
        }
        (AdversarialMode::Hinge, AdversarialSide::Generator) => -d_fake.mean_of(|v| v),
        (AdversarialMode::Hinge, AdversarialSide::Discriminator) => {
            let real = real.expect("checked above");
            real.mean_of(|v| (1.0 - v).max(0.0)) + d_fake.mean_of(|v| (1.0 + v).max(0.0))
        }
        (AdversarialMode::LeastSquares, AdversarialSide::Generator) => {
            0.5 * d_fake.mean_of(|v| (v - 1.0).powi(2))
        }
        (AdversarialMode::LeastSquares, AdversarialSide::Discriminator) => {
            let real = real.expect("checked above");
            0.5 * real.mean_of(|v| (v - 1.0).powi(2)) + 0.5 * d_fake.mean_of(|v| v.powi(2))
        }
    };
    Ok(loss)
}

/// Log-mode adversarial loss straight from probabilities in `(0, 1)`.
///
/// Bypasses the sigmoid of [`adversarial_loss`] for callers whose
/// discriminator already outputs probabilities.
pub fn adversarial_loss_on_probabilities(
    p_real: Option<&[f64]>,
    p_fake: &[f64],
    side: AdversarialSide,
) -> Result<f64> {
    let check = |what: &str, values: &[f64]| -> Result<()> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{what} probabilities must be non-empty"
            )));
        }
        if let Some(bad) = values
            .iter()
            .find(|p| !p.is_finite() || !(0.0..=1.0).contains(*p))
        {
            return Err(Error::InvalidParameter(format!(
                "{what} probability {bad} outside [0, 1]"
            )));
        }
        Ok(())
    };
    check("fake", p_fake)?;
    let mean = |values: &[f64], f: &dyn Fn(f64) -> f64| {
        values.iter().map(|&p| f(p)).sum::<f64>() / values.len() as f64
    };
    match side {
        AdversarialSide::Generator => Ok(-mean(p_fake, &|p| clamped_ln(p))),
        AdversarialSide::Discriminator => {
            let real = p_real.ok_or(Error::MissingRealLogits)?;
            check("real", real)?;
            Ok(-mean(real, &|p| clamped_ln(p)) - mean(p_fake, &|p| clamped_ln(1.0 - p)))
        }
    }
}

/// Euclidean distance between two boundary-strength maps.
///
/// Pushes synthesized images to reproduce the real image's edges, which is
/// what ties generated content to label boundaries.
pub fn edge_loss(real: &EdgeMap, fake: &EdgeMap) -> Result<f64> {
    if real.width() != fake.width() || real.height() != fake.height() {
        return Err(Error::DimensionMismatch(format!(
            "edge maps disagree: {}x{} vs {}x{}",
            real.width(),
            real.height(),
            fake.width(),
            fake.height()
        )));
    }
    let sum: f64 = real
        .data()
        .iter()
        .zip(fake.data())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(sum.sqrt())
}

/// Mean absolute difference between matching discriminator feature layers,
/// averaged over layers.
pub fn feature_matching_loss(real: &FeatureStack, fake: &FeatureStack) -> Result<f64> {
    let diffs = layerwise_l1(real, fake)?;
    Ok(diffs.iter().sum::<f64>() / diffs.len() as f64)
}

/// Weighted sum of per-layer mean absolute differences.
///
/// `layer_weights` must provide one weight per layer.
pub fn perceptual_loss(
    real: &FeatureStack,
    fake: &FeatureStack,
    layer_weights: &[f64],
) -> Result<f64> {
    if layer_weights.len() != real.n_layers() {
        return Err(Error::InvalidParameter(format!(
            "{} layer weights for {} layers",
            layer_weights.len(),
            real.n_layers()
        )));
    }
    if let Some(bad) = layer_weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "layer weight {bad} must be finite and non-negative"
        )));
    }
    let diffs = layerwise_l1(real, fake)?;
    Ok(diffs.iter().zip(layer_weights).map(|(d, w)| d * w).sum())
}

fn layerwise_l1(real: &FeatureStack, fake: &FeatureStack) -> Result<Vec<f64>> {
    if real.n_layers() != fake.n_layers() {
        return Err(Error::DimensionMismatch(format!(
            "feature stacks disagree: {} vs {} layers",
            real.n_layers(),
            fake.n_layers()
        )));
    }
    real.layers()
        .iter()
        .zip(fake.layers())
        .enumerate()
        .map(|(i, (a, b))| {
            if a.len() != b.len() {
                return Err(Error::DimensionMismatch(format!(
                    "feature layer {i} disagrees: {} vs {} values",
                    a.len(),
                    b.len()
                )));
            }
            Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
        })
        .collect()
}

/// Weights on the non-adversarial generator loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_fm: f64,
    pub lambda_p: f64,
    pub lambda_e: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_fm: 10.0,
            lambda_p: 10.0,
            lambda_e: 10.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_fm", self.lambda_fm),
            ("lambda_p", self.lambda_p),
            ("lambda_e", self.lambda_e),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Full generator objective: adversarial term plus weighted auxiliary terms.
pub fn total_generator_loss(
    adversarial: f64,
    feature_matching: f64,
    perceptual: f64,
    edge: f64,
    weights: &LossWeights,
) -> Result<f64> {
    weights.validate()?;
    for (name, v) in [
        ("adversarial", adversarial),
        ("feature matching", feature_matching),
        ("perceptual", perceptual),
        ("edge", edge),
    ] {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{name} loss is {v}")));
        }
    }
    Ok(adversarial
        + weights.lambda_fm * feature_matching
        + weights.lambda_p * perceptual
        + weights.lambda_e * edge)
}

/// The three reference generators and their training setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineProfile {
    Pix2pixHd,
    Spade,
    CcFpse,
}

impl BaselineProfile {
    pub const ALL: [BaselineProfile; 3] = [
        BaselineProfile::Pix2pixHd,
        BaselineProfile::Spade,
        BaselineProfile::CcFpse,
    ];

    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            BaselineProfile::Pix2pixHd => "pix2pixhd",
            BaselineProfile::Spade => "spade",
            BaselineProfile::CcFpse => "cc-fpse",
        }
    }

    #[must_use]
    pub fn adversarial_mode(self) -> AdversarialMode {
        match self {
            BaselineProfile::Pix2pixHd => AdversarialMode::LeastSquares,
            BaselineProfile::Spade | BaselineProfile::CcFpse => AdversarialMode::Hinge,
        }
    }

    #[must_use]
    pub fn weights(self) -> LossWeights {
        let lambda_fm = match self {
            BaselineProfile::CcFpse => 20.0,
            _ => 10.0,
        };
        LossWeights {
            lambda_fm,
            lambda_p: 10.0,
            lambda_e: 10.0,
        }
    }
}

impl std::str::FromStr for BaselineProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineProfile::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown baseline profile {s:?} (expected one of pix2pixhd, spade, cc-fpse)"
                ))
            })
    }
}

impl std::fmt::Display for BaselineProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
