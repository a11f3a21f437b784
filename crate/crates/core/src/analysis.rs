//! End-to-end analysis of one detector: match, type false positives, compute
//! metrics and the sensitivity table.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp_taxonomy::{classify_in_dataset, fp_type_counts, FpRecord, FpType, FpTypeCounts};
use crate::geometry::{CategoryMatch, Verdict};
use crate::metrics::{
    average_precision, default_schedule, fp_distribution_series, normalized_average_precision, pr_curve, ApMode,
    FpDistributionSeries,
};
use crate::model::{Dataset, Detection, DetectionSet};
use crate::sensitivity::{aggregate_rows, category_sensitivity, QuantileCuts, SensitivityRow};

/// Analysis parameters. `n_ref` and `schedule` fall back to data-derived
/// defaults when unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub tp_iou: f64,
    pub n_ref: Option<f64>,
    pub cuts: Vec<f64>,
    pub ap_mode: ApMode,
    /// Prefix sizes of the overall false-positive distribution.
    pub schedule: Option<Vec<usize>>,
    /// Drop duplicate detections from the false-positive statistics.
    pub exclude_duplicates: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            tp_iou: 0.5,
            n_ref: None,
            cuts: QuantileCuts::default().as_slice().to_vec(),
            ap_mode: ApMode::Envelope,
            schedule: None,
            exclude_duplicates: false,
        }
    }
}

/// Default reference count: non-ignored objects per category, rounded up.
pub fn default_n_ref(ds: &Dataset) -> f64 {
    let cats = ds.categories().len().max(1);
    ds.non_ignored_count().div_ceil(cats).max(1) as f64
}

impl AnalysisConfig {
    /// Copy with `n_ref` filled in; the result reproduces the same report.
    pub fn resolved(&self, ds: &Dataset) -> Result<AnalysisConfig> {
        if !(self.tp_iou > 0.0 && self.tp_iou <= 1.0) {
            return Err(Error::Domain(format!("tp_iou must be in (0, 1], got {}", self.tp_iou)));
        }
        QuantileCuts::new(self.cuts.clone())?;
        let n_ref = self.n_ref.unwrap_or_else(|| default_n_ref(ds));
        if !(n_ref.is_finite() && n_ref > 0.0) {
            return Err(Error::Domain(format!("n_ref must be > 0, got {n_ref}")));
        }
        Ok(AnalysisConfig {
            n_ref: Some(n_ref),
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryReport {
    pub category: String,
    pub positives: usize,
    pub detections: usize,
    pub tp: usize,
    pub fp: usize,
    pub ignored: usize,
    pub duplicates: usize,
    pub ap: Option<f64>,
    pub normalized_ap: Option<f64>,
    pub fp_counts: FpTypeCounts,
    pub fp_distribution: FpDistributionSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverallReport {
    pub positives: usize,
    pub detections: usize,
    pub tp: usize,
    pub fp: usize,
    pub ignored: usize,
    pub fp_counts: FpTypeCounts,
    pub fp_distribution: FpDistributionSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategorySensitivity {
    pub category: String,
    pub rows: Vec<SensitivityRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub detector: String,
    pub config: AnalysisConfig,
    pub categories: Vec<CategoryReport>,
    pub overall: OverallReport,
    /// Per-characteristic rows averaged over categories.
    pub sensitivity: Vec<SensitivityRow>,
    pub category_sensitivity: Vec<CategorySensitivity>,
}

impl AnalysisReport {
    pub fn category(&self, name: &str) -> Option<&CategoryReport> {
        self.categories.iter().find(|c| c.category == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// A finished analysis: the report plus the typed false positives behind it.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AnalysisReport,
    /// False positives counted in the report, canonical score order.
    pub fp_records: Vec<FpRecord>,
}

struct CategoryOutcome {
    report: CategoryReport,
    records: Vec<FpRecord>,
    sensitivity: Vec<SensitivityRow>,
}

fn analyze_category(
    ds: &Dataset,
    category: &str,
    dets: Vec<&Detection>,
    cfg: &AnalysisConfig,
    n_ref: f64,
    cuts: &QuantileCuts,
) -> Result<CategoryOutcome> {
    let gts = ds.objects_of_category(category);
    let matched = CategoryMatch::new(category, dets, gts, cfg.tp_iou);
    let result = &matched.result;

    let mut records = Vec::new();
    let mut duplicates = 0;
    for (det, verdict) in matched.dets.iter().zip(&result.verdicts) {
        if *verdict != Verdict::FalsePositive {
            continue;
        }
        let record = classify_in_dataset(det, ds, cfg.tp_iou);
        if record.duplicate {
            duplicates += 1;
            if cfg.exclude_duplicates {
                continue;
            }
        }
        records.push(record);
    }

    let n_pos = matched.positive_count();
    let curve = pr_curve(&result.verdicts, &matched.scores(), n_pos);
    let types: Vec<FpType> = records.iter().map(|r| r.fp_type).collect();
    let fp_distribution = fp_distribution_series(&types, &default_schedule(types.len(), 1))?;

    let report = CategoryReport {
        category: category.to_string(),
        positives: n_pos,
        detections: matched.dets.len(),
        tp: result.tp_count(),
        fp: result.fp_count(),
        ignored: result.ignored_count(),
        duplicates,
        ap: average_precision(&curve, cfg.ap_mode),
        normalized_ap: normalized_average_precision(&curve, n_ref, cfg.ap_mode)?,
        fp_counts: fp_type_counts(&records),
        fp_distribution,
    };
    let sensitivity = category_sensitivity(&matched, cuts, n_ref, cfg.ap_mode)?;
    Ok(CategoryOutcome {
        report,
        records,
        sensitivity,
    })
}

/// Runs the full analysis. Categories are processed on the current rayon
/// pool; results are merged in declared category order, so output does not
/// depend on the worker count.
pub fn analyze(ds: &Dataset, dets: &DetectionSet, config: &AnalysisConfig) -> Result<Analysis> {
    let cfg = config.resolved(ds)?;
    let n_ref = cfg.n_ref.expect("resolved");
    let cuts = QuantileCuts::new(cfg.cuts.clone())?;

    let mut by_category: Vec<Vec<&Detection>> = vec![Vec::new(); ds.categories().len()];
    for det in dets.detections() {
        let pos = ds.category_position(&det.category).ok_or_else(|| {
            Error::validation(&det.id, format!("unknown category `{}`", det.category))
        })?;
        by_category[pos].push(det);
    }

    let outcomes: Vec<CategoryOutcome> = ds
        .categories()
        .par_iter()
        .zip(by_category.into_par_iter())
        .map(|(category, cat_dets)| analyze_category(ds, category, cat_dets, &cfg, n_ref, &cuts))
        .collect::<Result<_>>()?;

    let mut fp_records: Vec<FpRecord> = outcomes.iter().flat_map(|o| o.records.iter().cloned()).collect();
    fp_records.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.detection_id.cmp(&b.detection_id)));
    let types: Vec<FpType> = fp_records.iter().map(|r| r.fp_type).collect();
    let schedule = match &cfg.schedule {
        Some(s) => s.clone(),
        None => default_schedule(types.len(), ds.categories().len()),
    };

    let mut fp_counts = FpTypeCounts::default();
    for o in &outcomes {
        fp_counts += o.report.fp_counts;
    }
    let overall = OverallReport {
        positives: outcomes.iter().map(|o| o.report.positives).sum(),
        detections: dets.len(),
        tp: outcomes.iter().map(|o| o.report.tp).sum(),
        fp: outcomes.iter().map(|o| o.report.fp).sum(),
        ignored: outcomes.iter().map(|o| o.report.ignored).sum(),
        fp_counts,
        fp_distribution: fp_distribution_series(&types, &schedule)?,
    };

    let sensitivity = aggregate_rows(outcomes.iter().map(|o| o.sensitivity.as_slice()));
    let mut categories = Vec::with_capacity(outcomes.len());
    let mut category_sensitivity = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        category_sensitivity.push(CategorySensitivity {
            category: o.report.category.clone(),
            rows: o.sensitivity,
        });
        categories.push(o.report);
    }

    Ok(Analysis {
        report: AnalysisReport {
            detector: dets.detector().to_string(),
            config: cfg,
            categories,
            overall,
            sensitivity,
            category_sensitivity,
        },
        fp_records,
    })
}

/// Loads inputs from disk and analyzes.
pub fn analyze_files(
    gt: impl AsRef<Path>,
    det: impl AsRef<Path>,
    taxonomy: impl AsRef<Path>,
    config: &AnalysisConfig,
) -> Result<(Dataset, Analysis)> {
    let ds = crate::model::load_dataset(gt, taxonomy)?;
    let dets = crate::model::load_detections(det, &ds)?;
    let analysis = analyze(&ds, &dets, config)?;
    Ok((ds, analysis))
}
