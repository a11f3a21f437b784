//! Sensitivity of a detector to object characteristics.
//!
//! Ground truth of a category is partitioned by one characteristic (annotated
//! levels for occ/trn/view/part, quantile bins of area or aspect ratio for
//! size/asp). Normalized AP is computed per subset with one shared reference
//! count, and the spread `max - min` over subsets is the sensitivity.
//!
//! Restricting to a subset keeps every false positive, and turns true
//! positives claimed on out-of-subset objects into ignored detections.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CategoryMatch, Verdict};
use crate::metrics::{normalized_average_precision, pr_curve, ApMode};
use crate::model::{derived_characteristic, Characteristic, Feature, GroundTruthObject};

/// Subset for objects lacking an annotation; never part of max/min.
pub const UNLABELED: &str = "unlabeled";
/// Single subset emitted when a geometric feature has fewer than two distinct values.
pub const ALL_SUBSET: &str = "all";

/// Quantile cut points, strictly increasing inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct QuantileCuts(Vec<f64>);

impl QuantileCuts {
    pub fn new(cuts: Vec<f64>) -> Result<Self> {
        let inside = cuts.iter().all(|&c| c > 0.0 && c < 1.0);
        let increasing = cuts.windows(2).all(|w| w[0] < w[1]);
        if cuts.is_empty() || !inside || !increasing {
            return Err(Error::Domain(format!(
                "quantile cuts must be non-empty, strictly increasing and inside (0, 1), got {cuts:?}"
            )));
        }
        Ok(QuantileCuts(cuts))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Default for QuantileCuts {
    fn default() -> Self {
        QuantileCuts(vec![0.1, 0.3, 0.7, 0.9])
    }
}

/// Partition of a category's objects by one characteristic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharacteristicBinning {
    pub characteristic: Characteristic,
    /// Subset labels in display order.
    pub labels: Vec<String>,
    /// Object id to subset label.
    pub assignment: BTreeMap<String, String>,
}

impl CharacteristicBinning {
    pub fn label_of(&self, object_id: &str) -> Option<&str> {
        self.assignment.get(object_id).map(String::as_str)
    }

    pub fn subset_size(&self, label: &str) -> usize {
        self.assignment.values().filter(|l| *l == label).count()
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("fewer than two distinct values of `{}`; emitting a single `all` subset", fallback.characteristic)]
pub struct DegenerateFeature {
    pub fallback: CharacteristicBinning,
}

fn bin_labels(feature: Feature, bins: usize) -> Vec<String> {
    let named: &[&str] = match feature {
        Feature::Size => &["XS", "S", "M", "L", "XL"],
        Feature::Asp => &["XT", "T", "M", "W", "XW"],
    };
    if bins == named.len() {
        named.iter().map(|s| s.to_string()).collect()
    } else {
        (0..bins).map(|i| format!("b{i}")).collect()
    }
}

fn feature_characteristic(feature: Feature) -> Characteristic {
    match feature {
        Feature::Size => Characteristic::Size,
        Feature::Asp => Characteristic::Asp,
    }
}

/// Nearest-rank quantile thresholds of `sorted`: the value at 1-based rank
/// `ceil(q * n)`.
pub fn nearest_rank_thresholds(sorted: &[f64], cuts: &QuantileCuts) -> Vec<f64> {
    let n = sorted.len();
    cuts.as_slice()
        .iter()
        .map(|&q| {
            // q * n carries representation error (0.3 * 10 = 3.0000000000000004)
            let rank = (q * n as f64 - 1e-9).ceil().clamp(1.0, n as f64) as usize;
            sorted[rank - 1]
        })
        .collect()
}

/// Splits objects into `cuts.len() + 1` bins at the empirical quantiles of a
/// geometric feature. A value equal to a threshold falls into the lower bin.
pub fn bin_by_quantiles(
    objs: &[&GroundTruthObject],
    feature: Feature,
    cuts: &QuantileCuts,
) -> std::result::Result<CharacteristicBinning, DegenerateFeature> {
    let characteristic = feature_characteristic(feature);
    let values: Vec<f64> = objs.iter().map(|o| derived_characteristic(o, feature)).collect();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();

    if sorted.len() < 2 {
        let fallback = CharacteristicBinning {
            characteristic,
            labels: vec![ALL_SUBSET.to_string()],
            assignment: objs.iter().map(|o| (o.id.clone(), ALL_SUBSET.to_string())).collect(),
        };
        return Err(DegenerateFeature { fallback });
    }

    let mut all_sorted = values.clone();
    all_sorted.sort_by(f64::total_cmp);
    let thresholds = nearest_rank_thresholds(&all_sorted, cuts);
    let labels = bin_labels(feature, thresholds.len() + 1);
    let assignment = objs
        .iter()
        .zip(&values)
        .map(|(o, &v)| {
            let bin = thresholds.iter().filter(|&&t| v > t).count();
            (o.id.clone(), labels[bin].clone())
        })
        .collect();
    Ok(CharacteristicBinning {
        characteristic,
        labels,
        assignment,
    })
}

/// One subset per distinct annotated level (sorted), plus `unlabeled` for
/// objects without the annotation.
pub fn bin_by_label(objs: &[&GroundTruthObject], characteristic: Characteristic) -> CharacteristicBinning {
    let assignment: BTreeMap<String, String> = objs
        .iter()
        .map(|o| {
            let label = o.label(characteristic).unwrap_or(UNLABELED);
            (o.id.clone(), label.to_string())
        })
        .collect();
    let mut labels: Vec<String> = assignment.values().filter(|l| *l != UNLABELED).cloned().collect();
    labels.sort();
    labels.dedup();
    if assignment.values().any(|l| l == UNLABELED) {
        labels.push(UNLABELED.to_string());
    }
    CharacteristicBinning {
        characteristic,
        labels,
        assignment,
    }
}

/// Bins with the rule appropriate to the characteristic; degenerate geometric
/// features collapse to their single-subset fallback.
pub fn bin_characteristic(
    objs: &[&GroundTruthObject],
    characteristic: Characteristic,
    cuts: &QuantileCuts,
) -> CharacteristicBinning {
    match characteristic.feature() {
        Some(feature) => bin_by_quantiles(objs, feature, cuts).unwrap_or_else(|e| e.fallback),
        None => bin_by_label(objs, characteristic),
    }
}

/// Normalized AP with positives restricted to one subset. Absent when the
/// subset holds no non-ignored object.
pub fn subset_normalized_ap(
    matched: &CategoryMatch<'_>,
    binning: &CharacteristicBinning,
    subset: &str,
    n_ref: f64,
    mode: ApMode,
) -> Result<Option<f64>> {
    let in_subset = |g: &GroundTruthObject| binning.label_of(&g.id) == Some(subset);
    let n_pos = matched.gts.iter().filter(|g| !g.ignore && in_subset(g)).count();
    if n_pos == 0 {
        // still validates the reference count
        normalized_average_precision(&pr_curve(&[], &[], 0), n_ref, mode)?;
        return Ok(None);
    }
    let verdicts: Vec<Verdict> = matched
        .result
        .verdicts
        .iter()
        .map(|&v| match v {
            Verdict::TruePositive { gt } if !in_subset(matched.gts[gt]) => Verdict::Ignored,
            other => other,
        })
        .collect();
    let curve = pr_curve(&verdicts, &matched.scores(), n_pos);
    normalized_average_precision(&curve, n_ref, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetValue {
    pub subset: String,
    pub normalized_ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub characteristic: Characteristic,
    pub subsets: Vec<SubsetValue>,
    pub max: f64,
    pub min: f64,
    pub sensitivity: f64,
}

/// Max, min and spread over present, labelled subsets. Absent when no such
/// subset exists.
pub fn summarize(characteristic: Characteristic, subsets: Vec<SubsetValue>) -> Option<SensitivityRow> {
    let present: Vec<f64> = subsets
        .iter()
        .filter(|s| s.subset != UNLABELED)
        .filter_map(|s| s.normalized_ap)
        .collect();
    if present.is_empty() {
        return None;
    }
    let max = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = present.iter().copied().fold(f64::INFINITY, f64::min);
    Some(SensitivityRow {
        characteristic,
        subsets,
        max,
        min,
        sensitivity: max - min,
    })
}

pub fn sensitivity_summary(
    per_characteristic: impl IntoIterator<Item = (Characteristic, Vec<SubsetValue>)>,
) -> Vec<SensitivityRow> {
    per_characteristic
        .into_iter()
        .filter_map(|(c, subsets)| summarize(c, subsets))
        .collect()
}

/// Full sensitivity table for one category, ordered by characteristic name.
pub fn category_sensitivity(
    matched: &CategoryMatch<'_>,
    cuts: &QuantileCuts,
    n_ref: f64,
    mode: ApMode,
) -> Result<Vec<SensitivityRow>> {
    let objs: Vec<&GroundTruthObject> = matched.gts.iter().copied().filter(|g| !g.ignore).collect();
    let mut rows = Vec::new();
    for characteristic in Characteristic::ALL {
        let binning = bin_characteristic(&objs, characteristic, cuts);
        let subsets = binning
            .labels
            .iter()
            .map(|label| {
                Ok(SubsetValue {
                    subset: label.clone(),
                    normalized_ap: subset_normalized_ap(matched, &binning, label, n_ref, mode)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(summarize(characteristic, subsets));
    }
    Ok(rows)
}

/// Averages per-category rows into one row per characteristic.
///
/// `max`, `min` and `sensitivity` are unweighted means over categories with a
/// present row (so `sensitivity == max - min` still holds); each subset value
/// is the mean over categories where that subset is present.
pub fn aggregate_rows<'a>(per_category: impl IntoIterator<Item = &'a [SensitivityRow]>) -> Vec<SensitivityRow> {
    let mut grouped: BTreeMap<Characteristic, Vec<&SensitivityRow>> = BTreeMap::new();
    for rows in per_category {
        for row in rows {
            grouped.entry(row.characteristic).or_default().push(row);
        }
    }
    grouped
        .into_iter()
        .map(|(characteristic, rows)| {
            let mut order: Vec<&str> = Vec::new();
            let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
            for row in &rows {
                for s in &row.subsets {
                    if !order.contains(&s.subset.as_str()) {
                        order.push(&s.subset);
                    }
                    if let Some(v) = s.normalized_ap {
                        let e = sums.entry(&s.subset).or_insert((0.0, 0));
                        e.0 += v;
                        e.1 += 1;
                    }
                }
            }
            let subsets = order
                .iter()
                .map(|&label| SubsetValue {
                    subset: label.to_string(),
                    normalized_ap: sums.get(label).map(|&(s, n)| s / n as f64),
                })
                .collect();
            let n = rows.len() as f64;
            let max = rows.iter().map(|r| r.max).sum::<f64>() / n;
            let min = rows.iter().map(|r| r.min).sum::<f64>() / n;
            SensitivityRow {
                characteristic,
                subsets,
                max,
                min,
                sensitivity: max - min,
            }
        })
        .collect()
}
