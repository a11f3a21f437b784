//! Side-by-side analysis of two detectors on the same ground truth.

use std::path::Path;

use serde::Serialize;

use crate::analysis::{analyze, Analysis, AnalysisConfig, AnalysisReport};
use crate::error::Result;
use crate::model::{Characteristic, Dataset, DetectionSet};
use crate::output::{ensure_dir, write_analysis, write_file};
use crate::svg::{fp_distribution_svg, sensitivity_svg};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryDelta {
    pub category: String,
    pub fp: i64,
    pub initial_loc_fraction: Option<f64>,
    pub ap: Option<f64>,
    pub normalized_ap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverallDelta {
    pub fp: i64,
    pub initial_loc_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityDelta {
    pub characteristic: Characteristic,
    pub sensitivity: Option<f64>,
}

/// Every delta is `B - A`; absent when either side is absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonDeltas {
    pub categories: Vec<CategoryDelta>,
    pub overall: OverallDelta,
    pub sensitivity: Vec<SensitivityDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub a: AnalysisReport,
    pub b: AnalysisReport,
    pub deltas: ComparisonDeltas,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("comparison serializes");
        s.push('\n');
        s
    }
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(b? - a?)
}

fn fp_total(counts: &crate::fp_taxonomy::FpTypeCounts) -> i64 {
    counts.total() as i64
}

/// Recomputes the deltas from two reports over the same categories.
pub fn deltas(a: &AnalysisReport, b: &AnalysisReport) -> ComparisonDeltas {
    let categories = a
        .categories
        .iter()
        .filter_map(|ca| {
            let cb = b.category(&ca.category)?;
            Some(CategoryDelta {
                category: ca.category.clone(),
                fp: fp_total(&cb.fp_counts) - fp_total(&ca.fp_counts),
                initial_loc_fraction: diff(
                    ca.fp_distribution.initial_loc_fraction(),
                    cb.fp_distribution.initial_loc_fraction(),
                ),
                ap: diff(ca.ap, cb.ap),
                normalized_ap: diff(ca.normalized_ap, cb.normalized_ap),
            })
        })
        .collect();
    let sensitivity_of = |r: &AnalysisReport, c: Characteristic| {
        r.sensitivity.iter().find(|row| row.characteristic == c).map(|row| row.sensitivity)
    };
    ComparisonDeltas {
        categories,
        overall: OverallDelta {
            fp: fp_total(&b.overall.fp_counts) - fp_total(&a.overall.fp_counts),
            initial_loc_fraction: diff(
                a.overall.fp_distribution.initial_loc_fraction(),
                b.overall.fp_distribution.initial_loc_fraction(),
            ),
        },
        sensitivity: Characteristic::ALL
            .iter()
            .map(|&c| SensitivityDelta {
                characteristic: c,
                sensitivity: diff(sensitivity_of(a, c), sensitivity_of(b, c)),
            })
            .collect(),
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub report: ComparisonReport,
    pub a: Analysis,
    pub b: Analysis,
}

/// Analyzes both detectors under one configuration.
pub fn compare(ds: &Dataset, det_a: &DetectionSet, det_b: &DetectionSet, config: &AnalysisConfig) -> Result<Comparison> {
    let a = analyze(ds, det_a, config)?;
    let b = analyze(ds, det_b, config)?;
    let report = ComparisonReport {
        deltas: deltas(&a.report, &b.report),
        a: a.report.clone(),
        b: b.report.clone(),
    };
    Ok(Comparison { report, a, b })
}

/// `comparison.json`, paired charts (A on top, B below), and each side's
/// full analysis under `a/` and `b/`.
pub fn write_comparison(out_dir: &Path, cmp: &Comparison) -> Result<()> {
    ensure_dir(out_dir)?;
    write_file(&out_dir.join("comparison.json"), cmp.report.to_json())?;
    let (ra, rb) = (&cmp.report.a, &cmp.report.b);
    let ta = format!("A: {}", ra.detector);
    let tb = format!("B: {}", rb.detector);
    write_file(
        &out_dir.join("fp_distribution.svg"),
        fp_distribution_svg(&[(&ta, &ra.overall.fp_distribution), (&tb, &rb.overall.fp_distribution)]),
    )?;
    write_file(
        &out_dir.join("sensitivity.svg"),
        sensitivity_svg(&[(&ta, &ra.sensitivity), (&tb, &rb.sensitivity)]),
    )?;
    write_analysis(&out_dir.join("a"), &cmp.a)?;
    write_analysis(&out_dir.join("b"), &cmp.b)?;
    Ok(())
}
