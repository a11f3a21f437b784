//! Report files: `report.json`, `fp_types.csv`, `sensitivity.csv`,
//! `fp_records.csv` and the two charts.

use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{Analysis, AnalysisReport};
use crate::error::{Error, Result};
use crate::fp_taxonomy::FpRecord;
use crate::svg::{fp_distribution_svg, sensitivity_svg};

pub const REPORT_JSON: &str = "report.json";
pub const FP_TYPES_CSV: &str = "fp_types.csv";
pub const SENSITIVITY_CSV: &str = "sensitivity.csv";
pub const FP_RECORDS_CSV: &str = "fp_records.csv";
pub const FP_DISTRIBUTION_SVG: &str = "fp_distribution.svg";
pub const SENSITIVITY_SVG: &str = "sensitivity.svg";

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

/// One row per category: `category,Loc,Sim,Oth,BG`.
pub fn fp_types_csv(report: &AnalysisReport) -> Vec<u8> {
    csv_bytes(
        &["category", "Loc", "Sim", "Oth", "BG"],
        report.categories.iter().map(|c| {
            vec![
                c.category.clone(),
                c.fp_counts.loc.to_string(),
                c.fp_counts.sim.to_string(),
                c.fp_counts.oth.to_string(),
                c.fp_counts.bg.to_string(),
            ]
        }),
    )
}

/// Aggregate sensitivity, one row per (characteristic, subset):
/// `characteristic,subset,normalized_ap,max,min,sensitivity`.
pub fn sensitivity_csv(report: &AnalysisReport) -> Vec<u8> {
    csv_bytes(
        &["characteristic", "subset", "normalized_ap", "max", "min", "sensitivity"],
        report.sensitivity.iter().flat_map(|row| {
            row.subsets.iter().map(move |s| {
                vec![
                    row.characteristic.name().to_string(),
                    s.subset.clone(),
                    opt(s.normalized_ap),
                    row.max.to_string(),
                    row.min.to_string(),
                    row.sensitivity.to_string(),
                ]
            })
        }),
    )
}

pub fn fp_records_csv(records: &[FpRecord]) -> Vec<u8> {
    csv_bytes(
        &[
            "detection_id",
            "image_id",
            "category",
            "score",
            "fp_type",
            "same_class_iou",
            "similar_class_iou",
            "other_class_iou",
            "duplicate",
        ],
        records.iter().map(|r| {
            vec![
                r.detection_id.clone(),
                r.image_id.clone(),
                r.category.clone(),
                r.score.to_string(),
                r.fp_type.name().to_string(),
                r.evidence.same_class_iou.to_string(),
                r.evidence.similar_class_iou.to_string(),
                r.evidence.other_class_iou.to_string(),
                r.duplicate.to_string(),
            ]
        }),
    )
}

pub fn distribution_chart(report: &AnalysisReport) -> String {
    let title = format!("{}: top false positive types", report.detector);
    fp_distribution_svg(&[(&title, &report.overall.fp_distribution)])
}

pub fn sensitivity_chart(report: &AnalysisReport) -> String {
    let title = format!("{}: sensitivity to object characteristics", report.detector);
    sensitivity_svg(&[(&title, &report.sensitivity)])
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes every analysis artifact into `out_dir`, creating it if needed.
pub fn write_analysis(out_dir: &Path, analysis: &Analysis) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let report = &analysis.report;
    let files: [(&str, Vec<u8>); 6] = [
        (REPORT_JSON, report.to_json().into_bytes()),
        (FP_TYPES_CSV, fp_types_csv(report)),
        (SENSITIVITY_CSV, sensitivity_csv(report)),
        (FP_RECORDS_CSV, fp_records_csv(&analysis.fp_records)),
        (FP_DISTRIBUTION_SVG, distribution_chart(report).into_bytes()),
        (SENSITIVITY_SVG, sensitivity_chart(report).into_bytes()),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = out_dir.join(name);
        write_file(&path, bytes)?;
        written.push(path);
    }
    Ok(written)
}
