//! False-positive overlays: one SVG per image that links the source image and
//! draws ground truth in red and high-scoring false positives in green.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::fp_taxonomy::{FpRecord, FpType};
use crate::model::{BBox, Dataset, DetectionSet};
use crate::output::{ensure_dir, write_file};
use crate::svg::escape_xml;

pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.3;
pub const GT_COLOR: &str = "#ff0000";
pub const FP_COLOR: &str = "#00c000";

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayGt {
    pub category: String,
    pub bbox: BBox,
    pub ignore: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayFp {
    pub category: String,
    pub bbox: BBox,
    pub score: f64,
    pub fp_type: FpType,
}

impl OverlayFp {
    pub fn caption(&self) -> String {
        format!("{} {:.2} ({})", self.category, self.score, self.fp_type)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpOverlay {
    pub image_id: String,
    pub file_name: String,
    pub width: f64,
    pub height: f64,
    pub ground_truth: Vec<OverlayGt>,
    pub false_positives: Vec<OverlayFp>,
}

/// Overlays for every image holding a false positive scored strictly above
/// `score_threshold`, in dataset image order.
pub fn build_overlays(
    ds: &Dataset,
    dets: &DetectionSet,
    records: &[FpRecord],
    score_threshold: f64,
) -> Vec<FpOverlay> {
    let boxes: HashMap<&str, BBox> = dets.detections().iter().map(|d| (d.id.as_str(), d.bbox)).collect();
    let mut per_image: HashMap<&str, Vec<OverlayFp>> = HashMap::new();
    for r in records.iter().filter(|r| r.score > score_threshold) {
        let Some(&bbox) = boxes.get(r.detection_id.as_str()) else {
            continue;
        };
        per_image.entry(r.image_id.as_str()).or_default().push(OverlayFp {
            category: r.category.clone(),
            bbox,
            score: r.score,
            fp_type: r.fp_type,
        });
    }
    ds.images()
        .iter()
        .filter_map(|image| {
            let false_positives = per_image.remove(image.id.as_str())?;
            Some(FpOverlay {
                image_id: image.id.clone(),
                file_name: image.file_name.clone(),
                width: image.width,
                height: image.height,
                ground_truth: ds
                    .objects_in_image(&image.id)
                    .map(|o| OverlayGt {
                        category: o.category.clone(),
                        bbox: o.bbox,
                        ignore: o.ignore,
                    })
                    .collect(),
                false_positives,
            })
        })
        .collect()
}

fn rect(out: &mut String, class: &str, color: &str, b: &BBox, dashed: bool) {
    let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
    let _ = writeln!(
        out,
        r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
        b.x, b.y, b.w, b.h
    );
}

fn label(out: &mut String, color: &str, b: &BBox, body: &str) {
    let y = if b.y >= 14.0 { b.y - 4.0 } else { b.y + 14.0 };
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{y}" font-family="Helvetica, Arial, sans-serif" font-size="12" fill="{color}" stroke="white" stroke-width="0.3">{}</text>"#,
        b.x,
        escape_xml(body)
    );
}

impl FpOverlay {
    pub fn to_svg(&self) -> String {
        let (w, h) = (self.width, self.height);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" xmlns:xlink="http://www.w3.org/1999/xlink" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let href = escape_xml(&self.file_name);
        let _ = writeln!(
            out,
            r#"<image href="{href}" xlink:href="{href}" x="0" y="0" width="{w}" height="{h}"/>"#
        );
        for gt in &self.ground_truth {
            rect(&mut out, "gt", GT_COLOR, &gt.bbox, gt.ignore);
            label(&mut out, GT_COLOR, &gt.bbox, &gt.category);
        }
        for fp in &self.false_positives {
            rect(&mut out, "fp", FP_COLOR, &fp.bbox, false);
            label(&mut out, FP_COLOR, &fp.bbox, &fp.caption());
        }
        out.push_str("</svg>\n");
        out
    }

    /// Image id reduced to filename-safe characters.
    pub fn file_stem(&self) -> String {
        self.image_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
            .collect()
    }
}

pub fn write_overlays(out_dir: &Path, overlays: &[FpOverlay]) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    overlays
        .iter()
        .map(|o| {
            let path = out_dir.join(format!("{}.svg", o.file_stem()));
            write_file(&path, o.to_svg())?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp_taxonomy::FpEvidence;
    use crate::model::{Detection, GroundTruthObject, Image, SimilarityTaxonomy};

    fn fixture() -> (Dataset, DetectionSet) {
        let images = vec![
            Image {
                id: "a/1".into(),
                width: 100.0,
                height: 100.0,
                file_name: "a&1.jpg".into(),
            },
            Image {
                id: "b".into(),
                width: 50.0,
                height: 50.0,
                file_name: "b.jpg".into(),
            },
        ];
        let objects = vec![GroundTruthObject {
            id: "g".into(),
            image_id: "a/1".into(),
            category: "cat".into(),
            bbox: BBox::new(10.0, 10.0, 40.0, 40.0),
            ignore: false,
            characteristics: Default::default(),
        }];
        let ds = Dataset::new(images, objects, vec!["cat".into()], SimilarityTaxonomy::empty()).unwrap();
        let dets = ["d1", "d2", "d3"]
            .iter()
            .map(|id| Detection {
                id: id.to_string(),
                image_id: if *id == "d3" { "b" } else { "a/1" }.into(),
                category: "cat".into(),
                bbox: BBox::new(60.0, 60.0, 10.0, 10.0),
                score: 0.5,
            })
            .collect();
        let set = DetectionSet::new("x", dets, &ds).unwrap();
        (ds, set)
    }

    fn record(id: &str, image: &str, score: f64) -> FpRecord {
        FpRecord {
            detection_id: id.into(),
            image_id: image.into(),
            category: "cat".into(),
            score,
            fp_type: FpType::Loc,
            evidence: FpEvidence {
                same_class_iou: 0.2,
                similar_class_iou: 0.0,
                other_class_iou: 0.0,
            },
            duplicate: false,
        }
    }

    #[test]
    fn threshold_is_strict() {
        let (ds, dets) = fixture();
        let recs = [record("d1", "a/1", 0.31), record("d2", "a/1", 0.30)];
        let overlays = build_overlays(&ds, &dets, &recs, 0.3);
        assert_eq!(overlays.len(), 1);
        assert_eq!(overlays[0].false_positives.len(), 1);
        assert_eq!(overlays[0].to_svg().matches(r#"class="fp""#).count(), 1);
    }

    #[test]
    fn images_without_qualifying_fp_get_nothing() {
        let (ds, dets) = fixture();
        let overlays = build_overlays(&ds, &dets, &[record("d2", "a/1", 0.1)], 0.3);
        assert!(overlays.is_empty());
    }

    #[test]
    fn svg_content() {
        let (ds, dets) = fixture();
        let overlays = build_overlays(&ds, &dets, &[record("d1", "a/1", 0.98)], 0.3);
        let svg = overlays[0].to_svg();
        assert!(svg.contains("cat 0.98 (Loc)"));
        assert!(svg.contains(r#"href="a&amp;1.jpg""#));
        assert!(svg.contains(GT_COLOR));
        assert_eq!(svg.matches(r#"class="gt""#).count(), 1);
        assert_eq!(overlays[0].file_stem(), "a_1");
    }
}
