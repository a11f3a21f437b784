//! Four-way typing of false positives: localization error, confusion with a
//! similar class, confusion with another class, and background.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::iou;
use crate::model::{Dataset, Detection, SimilarityTaxonomy};

/// Minimum overlap for same-class (Loc) and cross-class (Sim, Oth) evidence.
pub const MIN_EVIDENCE_IOU: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FpType {
    Loc,
    Sim,
    Oth,
    #[serde(rename = "BG")]
    Bg,
}

impl FpType {
    /// Precedence order, highest first.
    pub const ALL: [FpType; 4] = [FpType::Loc, FpType::Sim, FpType::Oth, FpType::Bg];

    pub fn name(self) -> &'static str {
        match self {
            FpType::Loc => "Loc",
            FpType::Sim => "Sim",
            FpType::Oth => "Oth",
            FpType::Bg => "BG",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FpType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Best overlaps backing a false-positive label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FpEvidence {
    pub same_class_iou: f64,
    pub similar_class_iou: f64,
    pub other_class_iou: f64,
}

impl FpEvidence {
    /// Loc, then Sim, then Oth, then BG. Same-class overlap at or above 0.5
    /// only occurs for duplicates of an already claimed object and stays Loc.
    pub fn fp_type(&self) -> FpType {
        if self.same_class_iou >= MIN_EVIDENCE_IOU {
            FpType::Loc
        } else if self.similar_class_iou >= MIN_EVIDENCE_IOU {
            FpType::Sim
        } else if self.other_class_iou >= MIN_EVIDENCE_IOU {
            FpType::Oth
        } else {
            FpType::Bg
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FpRecord {
    pub detection_id: String,
    pub image_id: String,
    pub category: String,
    pub score: f64,
    pub fp_type: FpType,
    pub evidence: FpEvidence,
    /// Same-class overlap reached the TP threshold, so the object it overlaps
    /// was already claimed by a higher-ranked detection.
    pub duplicate: bool,
}

/// Types one false positive from its overlaps with the non-ignored objects of
/// its image: `same_class_ious` against objects of the detection's category,
/// `cross_class_ious` as `(category, iou)` against every other object.
pub fn classify_fp(
    det: &Detection,
    taxonomy: &SimilarityTaxonomy,
    same_class_ious: &[f64],
    cross_class_ious: &[(&str, f64)],
    tp_threshold: f64,
) -> FpRecord {
    let same_class_iou = same_class_ious.iter().copied().fold(0.0, f64::max);
    let mut similar_class_iou = 0.0_f64;
    let mut other_class_iou = 0.0_f64;
    for &(category, overlap) in cross_class_ious {
        if taxonomy.similar(&det.category, category) {
            similar_class_iou = similar_class_iou.max(overlap);
        } else {
            other_class_iou = other_class_iou.max(overlap);
        }
    }
    let evidence = FpEvidence {
        same_class_iou,
        similar_class_iou,
        other_class_iou,
    };
    FpRecord {
        detection_id: det.id.clone(),
        image_id: det.image_id.clone(),
        category: det.category.clone(),
        score: det.score,
        fp_type: evidence.fp_type(),
        evidence,
        duplicate: same_class_iou >= tp_threshold,
    }
}

/// Computes the overlaps against every non-ignored object of the detection's
/// image and classifies.
pub fn classify_in_dataset(det: &Detection, ds: &Dataset, tp_threshold: f64) -> FpRecord {
    let mut same = Vec::new();
    let mut cross = Vec::new();
    for obj in ds.objects_in_image(&det.image_id).filter(|o| !o.ignore) {
        let overlap = iou(&det.bbox, &obj.bbox);
        if obj.category == det.category {
            same.push(overlap);
        } else {
            cross.push((obj.category.as_str(), overlap));
        }
    }
    classify_fp(det, ds.taxonomy(), &same, &cross, tp_threshold)
}

/// Per-type counts, serialized with the type names as keys.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpTypeCounts {
    #[serde(rename = "Loc")]
    pub loc: usize,
    #[serde(rename = "Sim")]
    pub sim: usize,
    #[serde(rename = "Oth")]
    pub oth: usize,
    #[serde(rename = "BG")]
    pub bg: usize,
}

impl FpTypeCounts {
    pub fn get(&self, t: FpType) -> usize {
        [self.loc, self.sim, self.oth, self.bg][t.index()]
    }

    pub fn add(&mut self, t: FpType) {
        match t {
            FpType::Loc => self.loc += 1,
            FpType::Sim => self.sim += 1,
            FpType::Oth => self.oth += 1,
            FpType::Bg => self.bg += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.loc + self.sim + self.oth + self.bg
    }
}

impl std::ops::AddAssign for FpTypeCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.loc += rhs.loc;
        self.sim += rhs.sim;
        self.oth += rhs.oth;
        self.bg += rhs.bg;
    }
}

pub fn fp_type_counts<'a>(records: impl IntoIterator<Item = &'a FpRecord>) -> FpTypeCounts {
    let mut counts = FpTypeCounts::default();
    for r in records {
        counts.add(r.fp_type);
    }
    counts
}
