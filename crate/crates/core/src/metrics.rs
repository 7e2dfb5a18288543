//! Confusion-matrix accumulation and segmentation scores.
//!
//! A [`ConfusionMatrix`] counts pixels by (true class, predicted class) over
//! any number of map pairs; ground-truth pixels carrying the ignore id are
//! skipped. From the counts, per-class pixel accuracy `PA_i = n_ii / t_i`
//! and intersection-over-union
//! `IoU_i = n_ii / (t_i + sum_j n_ji - n_ii)` follow, along with overall
//! pixel accuracy (trace / total) and unweighted class means (MA, mIoU)
//! that skip absent classes instead of counting them as zero.
//!
//! [`MetricsReport`] is the serialized form consumed by the bias
//! classification stage and the reporting command.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::LabelMap;

/// Version tag stamped into every serialized artifact of this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// How to treat prediction pixels that carry the ignore id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VoidPolicy {
    /// Predictions never carry the ignore id; finding one is an error.
    #[default]
    Reject,
    /// Count the pixel as a miss for its true class, in a reserved column
    /// that never forms a predicted class of its own.
    CountAsMiss,
}

/// Pixel counts by true class (row) and predicted class (column).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
    /// Per true class: pixels whose prediction carried the ignore id
    /// (only populated under [`VoidPolicy::CountAsMiss`]).
    void_pred: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Result<Self> {
        if n_classes == 0 || n_classes > 255 {
            return Err(Error::InvalidParameter(format!(
                "n_classes must be in 1..=255, got {n_classes}"
            )));
        }
        Ok(Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
            void_pred: vec![0; n_classes],
        })
    }

    #[must_use]
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Count of pixels with true class `gt` predicted as `pred`.
    #[must_use]
    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        debug_assert!(gt < self.n_classes && pred < self.n_classes);
        self.counts[gt * self.n_classes + pred]
    }

    /// Pixels of true class `gt` whose prediction was the ignore id.
    #[must_use]
    pub fn void_predictions(&self, gt: usize) -> u64 {
        self.void_pred[gt]
    }

    /// Ground-truth pixel count of one class, void predictions included.
    #[must_use]
    pub fn true_count(&self, gt: usize) -> u64 {
        let row: u64 = (0..self.n_classes).map(|p| self.get(gt, p)).sum();
        row + self.void_pred[gt]
    }

    /// Pixels predicted as one class, over all true classes.
    #[must_use]
    pub fn predicted_count(&self, pred: usize) -> u64 {
        (0..self.n_classes).map(|g| self.get(g, pred)).sum()
    }

    /// Correctly classified pixels.
    #[must_use]
    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|i| self.get(i, i)).sum()
    }

    /// All evaluated (non-ignored ground truth) pixels.
    #[must_use]
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.void_pred.iter().sum::<u64>()
    }

    /// Add one ground-truth/prediction pair to the counts.
    ///
    /// Both maps must share the matrix's class count and the same geometry.
    /// Ground-truth ignore pixels are skipped; prediction ignore pixels are
    /// handled per `policy`.
    pub fn accumulate(&mut self, gt: &LabelMap, pred: &LabelMap, policy: VoidPolicy) -> Result<()> {
        if gt.width() != pred.width() || gt.height() != pred.height() {
            return Err(Error::DimensionMismatch(format!(
                "ground truth {}x{} vs prediction {}x{}",
                gt.width(),
                gt.height(),
                pred.width(),
                pred.height()
            )));
        }
        if gt.n_classes() != self.n_classes || pred.n_classes() != self.n_classes {
            return Err(Error::DimensionMismatch(format!(
                "matrix covers {} classes, maps declare {} and {}",
                self.n_classes,
                gt.n_classes(),
                pred.n_classes()
            )));
        }
        for (i, (&g, &p)) in gt.data().iter().zip(pred.data()).enumerate() {
            if Some(g) == gt.ignore_id() {
                continue;
            }
            if Some(p) == pred.ignore_id() {
                match policy {
                    VoidPolicy::Reject => {
                        return Err(Error::VoidPrediction {
                            ignore_id: u16::from(p),
                            x: i % gt.width(),
                            y: i / gt.width(),
                        });
                    }
                    VoidPolicy::CountAsMiss => {
                        self.void_pred[g as usize] += 1;
                        continue;
                    }
                }
            }
            self.counts[g as usize * self.n_classes + p as usize] += 1;
        }
        Ok(())
    }

    /// Entrywise sum of two matrices over the same class set.
    pub fn merge(&self, other: &ConfusionMatrix) -> Result<ConfusionMatrix> {
        if self.n_classes != other.n_classes {
            return Err(Error::DimensionMismatch(format!(
                "cannot merge {}-class and {}-class matrices",
                self.n_classes, other.n_classes
            )));
        }
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        let void_pred = self
            .void_pred
            .iter()
            .zip(&other.void_pred)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ConfusionMatrix {
            n_classes: self.n_classes,
            counts,
            void_pred,
        })
    }

    /// Per-class pixel accuracy and intersection-over-union.
    #[must_use]
    pub fn per_class_metrics(&self) -> ClassMetricTable {
        let classes = (0..self.n_classes)
            .map(|i| {
                let t = self.true_count(i);
                let predicted = self.predicted_count(i);
                let hit = self.get(i, i);
                let union = t + predicted - hit;
                ClassMetrics {
                    class_id: i,
                    pa: (t > 0).then(|| hit as f64 / t as f64),
                    iou: (union > 0).then(|| hit as f64 / union as f64),
                    present: t > 0,
                }
            })
            .collect();
        ClassMetricTable { classes }
    }
}

/// Scores of a single class.
///
/// `pa` is defined only for present classes (`t_i > 0`); `iou` is defined
/// whenever the union is non-empty, so a class that only appears in
/// predictions reports `iou = 0` while staying non-present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class_id: usize,
    pub pa: Option<f64>,
    pub iou: Option<f64>,
    pub present: bool,
}

/// Per-class scores for every class id below the matrix's class count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassMetricTable {
    pub classes: Vec<ClassMetrics>,
}

impl ClassMetricTable {
    #[must_use]
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Row for one class id, if the table covers it.
    #[must_use]
    pub fn get(&self, class_id: usize) -> Option<&ClassMetrics> {
        self.classes.get(class_id)
    }

    /// Ids of present classes, ascending.
    #[must_use]
    pub fn present_ids(&self) -> Vec<usize> {
        self.classes
            .iter()
            .filter(|c| c.present)
            .map(|c| c.class_id)
            .collect()
    }
}

/// Overall scores; `ma` and `miou` average present classes only (restricted
/// to the split when one is given), `pa_overall` stays global.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub pa_overall: f64,
    pub ma: f64,
    pub miou: f64,
    /// Present classes that entered the two means.
    pub n_classes_used: usize,
}

/// Overall pixel accuracy plus unweighted class means.
///
/// With `split` given, the means run over the present classes inside the
/// split; a split selecting no present class is an error, as is a split id
/// outside the table's class range.
pub fn aggregate(
    table: &ClassMetricTable,
    cm: &ConfusionMatrix,
    split: Option<&BTreeSet<usize>>,
) -> Result<AggregateMetrics> {
    if table.n_classes() != cm.n_classes() {
        return Err(Error::DimensionMismatch(format!(
            "table covers {} classes, matrix {}",
            table.n_classes(),
            cm.n_classes()
        )));
    }
    if let Some(ids) = split {
        if let Some(&bad) = ids.iter().find(|&&id| id >= table.n_classes()) {
            return Err(Error::InvalidParameter(format!(
                "split id {bad} outside the {}-class range",
                table.n_classes()
            )));
        }
    }
    let used: Vec<&ClassMetrics> = table
        .classes
        .iter()
        .filter(|c| c.present && split.is_none_or(|ids| ids.contains(&c.class_id)))
        .collect();
    if used.is_empty() {
        return Err(Error::EmptySplit);
    }
    let n = used.len() as f64;
    let ma = used
        .iter()
        .map(|c| c.pa.expect("present classes always carry a pixel accuracy"))
        .sum::<f64>()
        / n;
    let miou = used
        .iter()
        .map(|c| c.iou.expect("present classes always carry an IoU"))
        .sum::<f64>()
        / n;
    Ok(AggregateMetrics {
        pa_overall: cm.trace() as f64 / cm.total() as f64,
        ma,
        miou,
        n_classes_used: used.len(),
    })
}

/// Class means over a split, as serialized alongside the overall scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAggregate {
    pub ma: Option<f64>,
    pub miou: Option<f64>,
    pub n_classes_used: usize,
    /// True when the split selected no present class; the means are null.
    pub empty: bool,
}

impl SplitAggregate {
    /// Compute the block, mapping the empty-split error to a flagged row.
    pub fn over(
        table: &ClassMetricTable,
        cm: &ConfusionMatrix,
        ids: &BTreeSet<usize>,
    ) -> Result<Self> {
        match aggregate(table, cm, Some(ids)) {
            Ok(a) => Ok(Self {
                ma: Some(a.ma),
                miou: Some(a.miou),
                n_classes_used: a.n_classes_used,
                empty: false,
            }),
            Err(Error::EmptySplit) => Ok(Self {
                ma: None,
                miou: None,
                n_classes_used: 0,
                empty: true,
            }),
            Err(other) => Err(other),
        }
    }
}

/// Biased/unbiased split means, keyed the way reports print them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetricsBlock {
    pub biased: SplitAggregate,
    pub unbiased: SplitAggregate,
}

/// Serialized evaluation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub n_classes: usize,
    pub ignore_id: Option<u8>,
    pub per_class: ClassMetricTable,
    pub aggregate: AggregateMetrics,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub splits: Option<SplitMetricsBlock>,
}

impl MetricsReport {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: MetricsReport = serde_json::from_str(&text)
            .map_err(|e| Error::SchemaViolation(format!("{}: {e}", path.display())))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaViolation(format!(
                "{}: schema version {} unsupported (expected {SCHEMA_VERSION})",
                path.display(),
                report.schema_version
            )));
        }
        if report.per_class.n_classes() != report.n_classes {
            return Err(Error::SchemaViolation(format!(
                "{}: {} per-class rows but n_classes = {}",
                path.display(),
                report.per_class.n_classes(),
                report.n_classes
            )));
        }
        Ok(report)
    }

    pub fn to_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::SchemaViolation(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand::Rng;

    fn map(w: usize, h: usize, n: usize, data: Vec<u8>) -> LabelMap {
        LabelMap::new(w, h, n, Some(255), data).unwrap()
    }

    #[test]
    fn hand_counted_pair_fills_the_expected_cells() {
        let gt = map(4, 1, 2, vec![0, 0, 1, 1]);
        let pred = map(4, 1, 2, vec![0, 1, 1, 1]);
        let mut cm = ConfusionMatrix::new(2).unwrap();
        cm.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
        assert_eq!(cm.get(0, 0), 1);
        assert_eq!(cm.get(0, 1), 1);
        assert_eq!(cm.get(1, 0), 0);
        assert_eq!(cm.get(1, 1), 2);

        let table = cm.per_class_metrics();
        assert_eq!(table.get(0).unwrap().pa, Some(0.5));
        assert_eq!(table.get(1).unwrap().pa, Some(1.0));
        assert_eq!(table.get(0).unwrap().iou, Some(0.5));
        let iou1 = table.get(1).unwrap().iou.unwrap();
        assert!((iou1 - 2.0 / 3.0).abs() < 1e-12, "IoU_1 = {iou1}");
    }

    #[test]
    fn ignored_ground_truth_pixels_are_skipped() {
        let gt = map(3, 1, 2, vec![0, 255, 1]);
        let pred = map(3, 1, 2, vec![0, 0, 1]);
        let mut cm = ConfusionMatrix::new(2).unwrap();
        cm.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
        assert_eq!(cm.total(), 2);
        assert_eq!(cm.trace(), 2);
    }

    #[test]
    fn void_predictions_are_rejected_by_default() {
        let gt = map(2, 1, 2, vec![0, 1]);
        let pred = map(2, 1, 2, vec![0, 255]);
        let mut cm = ConfusionMatrix::new(2).unwrap();
        let err = cm.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap_err();
        assert!(
            matches!(
                err,
                Error::VoidPrediction {
                    ignore_id: 255,
                    x: 1,
                    y: 0
                }
            ),
            "unexpected error: {err}"
        );
    }

    #[test]
    fn void_predictions_count_as_misses_when_allowed() {
        let gt = map(2, 1, 2, vec![1, 1]);
        let pred = map(2, 1, 2, vec![1, 255]);
        let mut cm = ConfusionMatrix::new(2).unwrap();
        cm.accumulate(&gt, &pred, VoidPolicy::CountAsMiss).unwrap();
        assert_eq!(cm.true_count(1), 2);
        assert_eq!(cm.void_predictions(1), 1);
        let row = cm.per_class_metrics();
        assert_eq!(row.get(1).unwrap().pa, Some(0.5));
        // Union = 2 true + 1 predicted - 1 hit; the void pixel never forms
        // a predicted class.
        assert_eq!(row.get(1).unwrap().iou, Some(0.5));
    }

    #[test]
    fn accumulation_over_a_set_equals_merge_of_parts() {
        let mut rng = seeded_rng(41);
        let mut whole = ConfusionMatrix::new(3).unwrap();
        let mut parts = Vec::new();
        for _ in 0..6 {
            let gt = map(8, 8, 3, (0..64).map(|_| rng.gen_range(0u8..3)).collect());
            let pred = map(8, 8, 3, (0..64).map(|_| rng.gen_range(0u8..3)).collect());
            whole.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
            let mut part = ConfusionMatrix::new(3).unwrap();
            part.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
            parts.push(part);
        }
        let merged = parts
            .iter()
            .try_fold(ConfusionMatrix::new(3).unwrap(), |acc, p| acc.merge(p))
            .unwrap();
        assert_eq!(whole, merged);
    }

    #[test]
    fn merge_rejects_mismatched_class_counts() {
        let a = ConfusionMatrix::new(2).unwrap();
        let b = ConfusionMatrix::new(3).unwrap();
        assert!(a.merge(&b).is_err());
    }

    #[test]
    fn metrics_equal_naive_double_loop_oracle() {
        let mut rng = seeded_rng(67);
        for round in 0..40 {
            let n = 5usize;
            let gt_data: Vec<u8> = (0..256)
                .map(|_| {
                    if rng.gen::<f64>() < 0.05 {
                        255
                    } else {
                        rng.gen_range(0u8..n as u8)
                    }
                })
                .collect();
            let pred_data: Vec<u8> = (0..256).map(|_| rng.gen_range(0u8..n as u8)).collect();
            let gt = map(16, 16, n, gt_data);
            let pred = map(16, 16, n, pred_data);
            let mut cm = ConfusionMatrix::new(n).unwrap();
            cm.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
            let table = cm.per_class_metrics();

            for class in 0..n as u8 {
                // Oracle: direct pixel counting, one pass per quantity.
                let t = gt
                    .data()
                    .iter()
                    .zip(pred.data())
                    .filter(|&(&g, _)| g == class)
                    .count() as u64;
                let hit = gt
                    .data()
                    .iter()
                    .zip(pred.data())
                    .filter(|&(&g, &p)| g != 255 && g == class && p == class)
                    .count() as u64;
                let predicted = gt
                    .data()
                    .iter()
                    .zip(pred.data())
                    .filter(|&(&g, &p)| g != 255 && p == class)
                    .count() as u64;
                assert_eq!(cm.true_count(class as usize), t, "round {round}");
                assert_eq!(cm.get(class as usize, class as usize), hit);
                assert_eq!(cm.predicted_count(class as usize), predicted);

                let row = table.get(class as usize).unwrap();
                if t > 0 {
                    let pa = row.pa.unwrap();
                    let iou = row.iou.unwrap();
                    assert!((pa - hit as f64 / t as f64).abs() < 1e-12);
                    let union = (t + predicted - hit) as f64;
                    assert!((iou - hit as f64 / union).abs() < 1e-12);
                    assert!(iou <= pa + 1e-12, "IoU {iou} exceeds PA {pa}");
                }
            }
        }
    }

    #[test]
    fn absent_class_is_excluded_from_means() {
        // Class 2 never occurs: means run over classes 0 and 1 only.
        let gt = map(4, 1, 3, vec![0, 0, 1, 1]);
        let pred = map(4, 1, 3, vec![0, 1, 1, 1]);
        let mut cm = ConfusionMatrix::new(3).unwrap();
        cm.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
        let table = cm.per_class_metrics();
        assert!(!table.get(2).unwrap().present);
        assert_eq!(table.get(2).unwrap().pa, None);
        assert_eq!(table.get(2).unwrap().iou, None);

        let agg = aggregate(&table, &cm, None).unwrap();
        assert_eq!(agg.n_classes_used, 2);
        assert!((agg.ma - 0.75).abs() < 1e-12);
        assert!((agg.miou - (0.5 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((agg.pa_overall - 0.75).abs() < 1e-12);
    }

    #[test]
    fn class_present_only_in_predictions_scores_zero_iou_but_stays_absent() {
        let gt = map(2, 1, 3, vec![0, 0]);
        let pred = map(2, 1, 3, vec![0, 2]);
        let mut cm = ConfusionMatrix::new(3).unwrap();
        cm.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
        let row = cm.per_class_metrics();
        let c2 = row.get(2).unwrap();
        assert!(!c2.present);
        assert_eq!(c2.pa, None);
        assert_eq!(c2.iou, Some(0.0));
    }

    #[test]
    fn split_means_average_only_the_selected_classes() {
        // Three present classes with IoU 0.5, 0.9, 0.7; split {0, 2} must
        // average to 0.6 regardless of class 1.
        let gt = map(12, 1, 3, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
        let pred = map(12, 1, 3, vec![0, 0, 1, 1, 1, 1, 1, 2, 2, 2, 2, 0]);
        let mut cm = ConfusionMatrix::new(3).unwrap();
        cm.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
        let table = cm.per_class_metrics();
        let iou0 = table.get(0).unwrap().iou.unwrap();
        let iou2 = table.get(2).unwrap().iou.unwrap();

        let split: BTreeSet<usize> = [0, 2].into_iter().collect();
        let agg = aggregate(&table, &cm, Some(&split)).unwrap();
        assert_eq!(agg.n_classes_used, 2);
        assert!((agg.miou - (iou0 + iou2) / 2.0).abs() < 1e-12);
        // The overall accuracy ignores the split.
        assert!((agg.pa_overall - cm.trace() as f64 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn split_of_absent_classes_is_empty() {
        let gt = map(2, 1, 4, vec![0, 1]);
        let pred = map(2, 1, 4, vec![0, 1]);
        let mut cm = ConfusionMatrix::new(4).unwrap();
        cm.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
        let table = cm.per_class_metrics();
        let split: BTreeSet<usize> = [2, 3].into_iter().collect();
        assert!(matches!(
            aggregate(&table, &cm, Some(&split)),
            Err(Error::EmptySplit)
        ));
        let block = SplitAggregate::over(&table, &cm, &split).unwrap();
        assert!(block.empty);
        assert_eq!(block.ma, None);
    }

    #[test]
    fn split_ids_outside_the_class_range_are_rejected() {
        let gt = map(2, 1, 2, vec![0, 1]);
        let pred = map(2, 1, 2, vec![0, 1]);
        let mut cm = ConfusionMatrix::new(2).unwrap();
        cm.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
        let table = cm.per_class_metrics();
        let split: BTreeSet<usize> = [1, 9].into_iter().collect();
        assert!(aggregate(&table, &cm, Some(&split)).is_err());
    }

    #[test]
    fn means_are_invariant_under_class_relabeling() {
        // Swapping two class ids everywhere permutes the table but cannot
        // change unweighted means.
        let mut rng = seeded_rng(90);
        let gt_data: Vec<u8> = (0..100).map(|_| rng.gen_range(0u8..4)).collect();
        let pred_data: Vec<u8> = (0..100).map(|_| rng.gen_range(0u8..4)).collect();
        let swap = |id: u8| match id {
            1 => 3,
            3 => 1,
            other => other,
        };
        let gt = map(10, 10, 4, gt_data.clone());
        let pred = map(10, 10, 4, pred_data.clone());
        let gt_sw = map(10, 10, 4, gt_data.iter().map(|&v| swap(v)).collect());
        let pred_sw = map(10, 10, 4, pred_data.iter().map(|&v| swap(v)).collect());

        let mut cm = ConfusionMatrix::new(4).unwrap();
        cm.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
        let mut cm_sw = ConfusionMatrix::new(4).unwrap();
        cm_sw
            .accumulate(&gt_sw, &pred_sw, VoidPolicy::Reject)
            .unwrap();

        let a = aggregate(&cm.per_class_metrics(), &cm, None).unwrap();
        let b = aggregate(&cm_sw.per_class_metrics(), &cm_sw, None).unwrap();
        assert!((a.ma - b.ma).abs() < 1e-12);
        assert!((a.miou - b.miou).abs() < 1e-12);
        assert!((a.pa_overall - b.pa_overall).abs() < 1e-12);
    }

    #[test]
    fn report_round_trips_through_json() {
        let gt = map(4, 1, 2, vec![0, 0, 1, 1]);
        let pred = map(4, 1, 2, vec![0, 1, 1, 1]);
        let mut cm = ConfusionMatrix::new(2).unwrap();
        cm.accumulate(&gt, &pred, VoidPolicy::Reject).unwrap();
        let table = cm.per_class_metrics();
        let report = MetricsReport {
            schema_version: SCHEMA_VERSION,
            n_classes: 2,
            ignore_id: Some(255),
            aggregate: aggregate(&table, &cm, None).unwrap(),
            per_class: table,
            splits: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.json");
        report.to_path(&path).unwrap();
        let loaded = MetricsReport::from_path(&path).unwrap();
        assert_eq!(loaded, report);
    }

    #[test]
    fn report_rejects_foreign_schema_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.json");
        std::fs::write(
            &path,
            r#"{"schema_version": 99, "n_classes": 0, "ignore_id": null,
                "per_class": [], "aggregate":
                {"pa_overall": 0, "ma": 0, "miou": 0, "n_classes_used": 0}}"#,
        )
        .unwrap();
        assert!(matches!(
            MetricsReport::from_path(&path),
            Err(Error::SchemaViolation(_))
        ));
    }
}
