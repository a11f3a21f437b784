//! Diagnosis of object-detector errors.
//!
//! Detections are matched greedily to ground truth, every false positive is
//! typed as a localization error (`Loc`), a confusion with a similar class
//! (`Sim`), a confusion with another class (`Oth`) or background (`BG`), and
//! detectors are scored by AP and normalized AP, overall and per subset of
//! six object characteristics (occlusion, truncation, size, aspect ratio,
//! visible sides, visible parts).
//!
//! ```no_run
//! use detdiag::{analyze, load_dataset, load_detections, AnalysisConfig};
//!
//! # fn main() -> detdiag::Result<()> {
//! let ds = load_dataset("gt.json", "taxonomy.json")?;
//! let dets = load_detections("det.json", &ds)?;
//! let analysis = analyze(&ds, &dets, &AnalysisConfig::default())?;
//! println!("{}", analysis.report.to_json());
//! # Ok(())
//! # }
//! ```

pub mod analysis;
pub mod compare;
pub mod config;
pub mod error;
pub mod fp_taxonomy;
pub mod geometry;
pub mod metrics;
pub mod model;
pub mod output;
pub mod overlay;
pub mod sensitivity;
pub mod svg;
pub mod synth;

pub use analysis::{analyze, analyze_files, Analysis, AnalysisConfig, AnalysisReport};
pub use compare::{compare, Comparison, ComparisonReport};
pub use error::{Error, Result};
pub use fp_taxonomy::{classify_fp, fp_type_counts, FpRecord, FpType, FpTypeCounts};
pub use geometry::{iou, match_category, CategoryMatch, MatchResult, Verdict};
pub use metrics::{average_precision, normalized_average_precision, pr_curve, ApMode, PrCurve};
pub use model::{
    load_dataset, load_detections, BBox, Characteristic, Dataset, Detection, DetectionSet, GroundTruthObject,
    SimilarityTaxonomy,
};
pub use overlay::{build_overlays, FpOverlay};
