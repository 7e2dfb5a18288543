//! Bias classification of segmentation classes.
//!
//! A class is *biased* when a segmentation network still scores it well
//! after its image content has been destroyed: formally, when any perturbed
//! score strictly exceeds `delta` times the unperturbed score for the same
//! metric (pixel accuracy or IoU, checked per metric set). Such classes
//! reward synthesis models for copying label-map layout rather than
//! producing recognizable content, so downstream reports score them
//! separately from the unbiased rest.
//!
//! [`classify_bias`] computes the split from metric tables; bundled splits
//! for three public datasets load through [`load_reference_split`]. The
//! bundled files list the published biased side only (the corresponding
//! unbiased lists and per-class triggers were never published), so loaded
//! splits carry an empty unbiased list and no provenance.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ClassMetricTable, SCHEMA_VERSION};
use crate::perturb::SchemeKind;

/// Which metric triggered a bias call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Pa,
    Iou,
}

/// Which metric sets participate in the criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BiasMetricMode {
    /// Either metric may trigger (pixel accuracy checked first).
    #[default]
    PaOrIou,
    /// Restrict to IoU, for sensitivity studies.
    IouOnly,
}

/// Why one class landed on the biased side — or `None` for unbiased ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasProvenance {
    None,
    Triggered {
        scheme: SchemeKind,
        metric: MetricKind,
    },
}

impl Serialize for BiasProvenance {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BiasProvenance::None => ser.serialize_str("none"),
            BiasProvenance::Triggered { scheme, metric } => {
                use serde::ser::SerializeStruct;
                let mut s = ser.serialize_struct("BiasProvenance", 2)?;
                s.serialize_field("scheme", scheme)?;
                s.serialize_field("metric", metric)?;
                s.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for BiasProvenance {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Word(String),
            Trigger {
                scheme: SchemeKind,
                metric: MetricKind,
            },
        }
        match Repr::deserialize(de)? {
            Repr::Word(w) if w == "none" => Ok(BiasProvenance::None),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "expected \"none\" or a trigger object, found {w:?}"
            ))),
            Repr::Trigger { scheme, metric } => Ok(BiasProvenance::Triggered { scheme, metric }),
        }
    }
}

/// Per-scheme metric tables measured on perturbed inputs.
///
/// Schemes may be partially present; [`PerturbedMetricSet::schemes`] reports
/// which ones are. All tables must cover the same class range and hold
/// scores inside `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerturbedMetricSet {
    tables: BTreeMap<SchemeKind, ClassMetricTable>,
}

impl PerturbedMetricSet {
    #[must_use]
    pub fn new() -> Self {
        Self::default()
    }

    /// Add (or replace) the table measured under one scheme.
    pub fn insert(&mut self, scheme: SchemeKind, table: ClassMetricTable) -> Result<()> {
        validate_scores(&table, &format!("{scheme} table"))?;
        if let Some(existing) = self.tables.values().next() {
            if existing.n_classes() != table.n_classes() {
                return Err(Error::SchemaViolation(format!(
                    "{scheme} table covers {} classes, earlier tables cover {}",
                    table.n_classes(),
                    existing.n_classes()
                )));
            }
        }
        self.tables.insert(scheme, table);
        Ok(())
    }

    /// Schemes with a table, in canonical order.
    #[must_use]
    pub fn schemes(&self) -> Vec<SchemeKind> {
        SchemeKind::ALL
            .iter()
            .copied()
            .filter(|k| self.tables.contains_key(k))
            .collect()
    }

    #[must_use]
    pub fn get(&self, scheme: SchemeKind) -> Option<&ClassMetricTable> {
        self.tables.get(&scheme)
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    #[must_use]
    pub fn n_classes(&self) -> Option<usize> {
        self.tables.values().next().map(ClassMetricTable::n_classes)
    }
}

fn validate_scores(table: &ClassMetricTable, what: &str) -> Result<()> {
    for row in &table.classes {
        for v in [row.pa, row.iou].into_iter().flatten() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::SchemaViolation(format!(
                    "{what}: class {} carries score {v} outside [0, 1]",
                    row.class_id
                )));
            }
        }
    }
    Ok(())
}

/// The outcome of bias classification: a partition of the evaluated classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSplit {
    pub schema_version: u32,
    /// Threshold factor the criterion compared against.
    pub delta: f64,
    /// Classes whose scores survive content destruction, ascending.
    pub biased: Vec<usize>,
    /// The remaining evaluated classes, ascending.
    pub unbiased: Vec<usize>,
    /// Per evaluated class: the first triggering scheme and metric, or none.
    pub provenance: BTreeMap<usize, BiasProvenance>,
    /// Classes present in some perturbed table but absent from the real one;
    /// they are left out of the partition.
    pub excluded: Vec<usize>,
    /// Schemes that contributed comparisons.
    pub schemes_present: Vec<SchemeKind>,
}

impl BiasSplit {
    /// The biased ids as a set, for use as an aggregation split.
    #[must_use]
    pub fn biased_set(&self) -> BTreeSet<usize> {
        self.biased.iter().copied().collect()
    }

    /// The unbiased ids as a set, for use as an aggregation split.
    #[must_use]
    pub fn unbiased_set(&self) -> BTreeSet<usize> {
        self.unbiased.iter().copied().collect()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let split: BiasSplit = serde_json::from_str(&text)
            .map_err(|e| Error::SchemaViolation(format!("{}: {e}", path.display())))?;
        if split.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaViolation(format!(
                "{}: schema version {} unsupported (expected {SCHEMA_VERSION})",
                path.display(),
                split.schema_version
            )));
        }
        Ok(split)
    }

    pub fn to_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::SchemaViolation(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Partition the evaluated classes into biased and unbiased sides.
///
/// A class is biased iff some available perturbed score strictly exceeds
/// `delta` times its real score for the same metric. Schemes are checked in
/// canonical order with pixel accuracy before IoU, and the first trigger is
/// recorded as provenance. Classes missing from the real table are excluded
/// (see [`BiasSplit::excluded`]); classes missing from a perturbed table
/// simply contribute no comparison for that scheme.
pub fn classify_bias(
    real: &ClassMetricTable,
    perturbed: &PerturbedMetricSet,
    delta: f64,
    mode: BiasMetricMode,
) -> Result<BiasSplit> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "bias threshold factor must be positive, got {delta}"
        )));
    }
    validate_scores(real, "real table")?;
    if perturbed.is_empty() {
        return Err(Error::InvalidParameter(
            "no perturbed metric tables to compare against".into(),
        ));
    }
    if let Some(n) = perturbed.n_classes() {
        if n != real.n_classes() {
            return Err(Error::SchemaViolation(format!(
                "real table covers {} classes, perturbed tables cover {n}",
                real.n_classes()
            )));
        }
    }

    let schemes = perturbed.schemes();
    let metrics: &[MetricKind] = match mode {
        BiasMetricMode::PaOrIou => &[MetricKind::Pa, MetricKind::Iou],
        BiasMetricMode::IouOnly => &[MetricKind::Iou],
    };

    let mut split = BiasSplit {
        schema_version: SCHEMA_VERSION,
        delta,
        biased: Vec::new(),
        unbiased: Vec::new(),
        provenance: BTreeMap::new(),
        excluded: Vec::new(),
        schemes_present: schemes.clone(),
    };

    for row in &real.classes {
        let id = row.class_id;
        if !row.present {
            let seen_perturbed = schemes.iter().any(|&s| {
                perturbed
                    .get(s)
                    .and_then(|t| t.get(id))
                    .is_some_and(|r| r.present)
            });
            if seen_perturbed {
                split.excluded.push(id);
            }
            continue;
        }
        let trigger = metrics_trigger(row, perturbed, &schemes, metrics, delta);
        match trigger {
            Some((scheme, metric)) => {
                split.biased.push(id);
                split
                    .provenance
                    .insert(id, BiasProvenance::Triggered { scheme, metric });
            }
            None => {
                split.unbiased.push(id);
                split.provenance.insert(id, BiasProvenance::None);
            }
        }
    }
    Ok(split)
}

fn metrics_trigger(
    row: &crate::metrics::ClassMetrics,
    perturbed: &PerturbedMetricSet,
    schemes: &[SchemeKind],
    metrics: &[MetricKind],
    delta: f64,
) -> Option<(SchemeKind, MetricKind)> {
    for &scheme in schemes {
        let table = perturbed.get(scheme)?;
        let Some(p_row) = table.get(row.class_id) else {
            continue;
        };
        for &metric in metrics {
            let (real_v, pert_v) = match metric {
                MetricKind::Pa => (row.pa, p_row.pa),
                MetricKind::Iou => (row.iou, p_row.iou),
            };
            if let (Some(r), Some(p)) = (real_v, pert_v) {
                if p > delta * r {
                    return Some((scheme, metric));
                }
            }
        }
    }
    None
}

/// The datasets this crate bundles reference data for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceDataset {
    CocoStuff,
    Ade20k,
    Cityscapes,
}

impl ReferenceDataset {
    pub const ALL: [ReferenceDataset; 3] = [
        ReferenceDataset::CocoStuff,
        ReferenceDataset::Ade20k,
        ReferenceDataset::Cityscapes,
    ];

    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            ReferenceDataset::CocoStuff => "coco-stuff",
            ReferenceDataset::Ade20k => "ade20k",
            ReferenceDataset::Cityscapes => "cityscapes",
        }
    }

    fn bundled_json(self) -> &'static str {
        match self {
            ReferenceDataset::CocoStuff => {
                include_str!("../data/reference_split_coco_stuff.json")
            }
            ReferenceDataset::Ade20k => include_str!("../data/reference_split_ade20k.json"),
            ReferenceDataset::Cityscapes => {
                include_str!("../data/reference_split_cityscapes.json")
            }
        }
    }
}

impl std::str::FromStr for ReferenceDataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReferenceDataset::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::UnknownDataset(s.to_string()))
    }
}

impl std::fmt::Display for ReferenceDataset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One published biased class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasedClass {
    pub id: usize,
    pub name: String,
}

/// Bundled per-dataset reference data: threshold, blur width and the
/// published biased classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub schema_version: u32,
    pub dataset: ReferenceDataset,
    pub delta: f64,
    /// Blur width used for the blur scheme on this dataset
    /// (a third of the dataset's average-class-area kernel size).
    pub sigma0: f64,
    pub biased: Vec<BiasedClass>,
}

/// Load the bundled profile for one dataset.
pub fn dataset_profile(dataset: ReferenceDataset) -> Result<DatasetProfile> {
    let profile: DatasetProfile = serde_json::from_str(dataset.bundled_json())
        .map_err(|e| Error::SchemaViolation(format!("bundled {dataset} data: {e}")))?;
    if profile.schema_version != SCHEMA_VERSION || profile.dataset != dataset {
        return Err(Error::SchemaViolation(format!(
            "bundled {dataset} data is inconsistent"
        )));
    }
    Ok(profile)
}

/// The bundled split for one dataset, biased side only (see module docs).
pub fn load_reference_split(dataset: ReferenceDataset) -> Result<BiasSplit> {
    let profile = dataset_profile(dataset)?;
    Ok(BiasSplit {
        schema_version: SCHEMA_VERSION,
        delta: profile.delta,
        biased: profile.biased.iter().map(|c| c.id).collect(),
        unbiased: Vec::new(),
        provenance: BTreeMap::new(),
        excluded: Vec::new(),
        schemes_present: Vec::new(),
    })
}
