//! Box overlap and greedy rank-order matching of detections to ground truth.

use std::collections::HashMap;

use serde::Serialize;

use crate::model::{BBox, Detection, GroundTruthObject};

/// Intersection over union of two valid boxes.
///
/// Intersection and union are formed first and divided once, so on integer
/// coordinates the result is the correctly rounded value of the exact ratio.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = a.right().min(b.right()) - a.x.max(b.x);
    let ih = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    inter / union
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// Claimed the ground-truth object at this index of the matcher's input.
    TruePositive { gt: usize },
    FalsePositive,
    /// Best overlap is an `ignore` object; excluded from TP and FP statistics.
    Ignored,
}

impl Verdict {
    pub fn is_tp(self) -> bool {
        matches!(self, Verdict::TruePositive { .. })
    }

    pub fn is_fp(self) -> bool {
        matches!(self, Verdict::FalsePositive)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// One verdict per input detection, same order.
    pub verdicts: Vec<Verdict>,
    /// Highest overlap with any non-ignored same-class object in the
    /// detection's image, whether or not that object was claimed.
    pub best_iou_same_class: Vec<f64>,
    /// One flag per input ground-truth object.
    pub gt_matched: Vec<bool>,
}

impl MatchResult {
    pub fn tp_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_tp()).count()
    }

    pub fn fp_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_fp()).count()
    }

    pub fn ignored_count(&self) -> usize {
        self.verdicts.iter().filter(|v| **v == Verdict::Ignored).count()
    }
}

/// Greedy matching of one category's detections (canonical order) against
/// that category's ground truth.
///
/// Each detection, in rank order, claims the unclaimed non-ignored object of
/// its image with the highest overlap when that overlap reaches
/// `tp_threshold`. Equal overlaps go to the smaller object id. A detection that
/// claims nothing is `Ignored` when its best overlap is with an `ignore` object
/// at or above the threshold (ties with non-ignored objects favour `Ignored`),
/// and a false positive otherwise.
pub fn match_category(dets: &[&Detection], gts: &[&GroundTruthObject], tp_threshold: f64) -> MatchResult {
    let mut by_image: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, gt) in gts.iter().enumerate() {
        by_image.entry(gt.image_id.as_str()).or_default().push(i);
    }
    for bucket in by_image.values_mut() {
        bucket.sort_by(|&a, &b| gts[a].id.cmp(&gts[b].id));
    }

    let mut gt_matched = vec![false; gts.len()];
    let mut verdicts = Vec::with_capacity(dets.len());
    let mut best_iou_same_class = Vec::with_capacity(dets.len());

    for det in dets {
        debug_assert!(gts.iter().all(|g| g.category == det.category));
        let mut best_unclaimed: Option<(usize, f64)> = None;
        let mut best_non_ignored = 0.0_f64;
        let mut best_ignored = 0.0_f64;

        for &g in by_image.get(det.image_id.as_str()).map(Vec::as_slice).unwrap_or(&[]) {
            let overlap = iou(&det.bbox, &gts[g].bbox);
            if gts[g].ignore {
                best_ignored = best_ignored.max(overlap);
                continue;
            }
            best_non_ignored = best_non_ignored.max(overlap);
            if !gt_matched[g] && best_unclaimed.is_none_or(|(_, v)| overlap > v) {
                best_unclaimed = Some((g, overlap));
            }
        }

        let verdict = match best_unclaimed {
            Some((g, overlap)) if overlap >= tp_threshold => {
                gt_matched[g] = true;
                Verdict::TruePositive { gt: g }
            }
            _ if best_ignored >= tp_threshold && best_ignored >= best_non_ignored => Verdict::Ignored,
            _ => Verdict::FalsePositive,
        };
        verdicts.push(verdict);
        best_iou_same_class.push(best_non_ignored);
    }

    MatchResult {
        verdicts,
        best_iou_same_class,
        gt_matched,
    }
}

/// One category's detections and ground truth together with their matching.
#[derive(Debug, Clone)]
pub struct CategoryMatch<'a> {
    pub category: String,
    /// Canonical rank order.
    pub dets: Vec<&'a Detection>,
    /// Ascending object id.
    pub gts: Vec<&'a GroundTruthObject>,
    pub result: MatchResult,
}

impl<'a> CategoryMatch<'a> {
    pub fn new(
        category: impl Into<String>,
        dets: Vec<&'a Detection>,
        gts: Vec<&'a GroundTruthObject>,
        tp_threshold: f64,
    ) -> Self {
        let result = match_category(&dets, &gts, tp_threshold);
        CategoryMatch {
            category: category.into(),
            dets,
            gts,
            result,
        }
    }

    pub fn scores(&self) -> Vec<f64> {
        self.dets.iter().map(|d| d.score).collect()
    }

    /// Non-ignored ground-truth objects, the positives of this category.
    pub fn positive_count(&self) -> usize {
        self.gts.iter().filter(|g| !g.ignore).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h)
    }

    fn gt(id: &str, bbox: BBox, ignore: bool) -> GroundTruthObject {
        GroundTruthObject {
            id: id.into(),
            image_id: "i".into(),
            category: "cat".into(),
            bbox,
            ignore,
            characteristics: Default::default(),
        }
    }

    fn det(id: &str, bbox: BBox, score: f64) -> Detection {
        Detection {
            id: id.into(),
            image_id: "i".into(),
            category: "cat".into(),
            bbox,
            score,
        }
    }

    #[test]
    fn iou_identity_disjoint_and_partial() {
        let a = b(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &b(20.0, 20.0, 5.0, 5.0)), 0.0);
        assert_eq!(iou(&a, &b(5.0, 5.0, 10.0, 10.0)), 25.0 / 175.0);
        // edge contact has zero area
        assert_eq!(iou(&a, &b(10.0, 0.0, 10.0, 10.0)), 0.0);
    }

    #[test]
    fn single_match_is_tp() {
        // 6x10 inside 10x10: IOU 0.6
        let g = gt("g", b(0.0, 0.0, 10.0, 10.0), false);
        let d = det("d", b(0.0, 0.0, 6.0, 10.0), 0.9);
        let r = match_category(&[&d], &[&g], 0.5);
        assert_eq!(r.verdicts, vec![Verdict::TruePositive { gt: 0 }]);
        assert_eq!(r.gt_matched, vec![true]);
    }

    #[test]
    fn duplicate_is_fp() {
        let g = gt("g", b(0.0, 0.0, 10.0, 10.0), false);
        let d1 = det("d1", b(0.0, 0.0, 7.0, 10.0), 0.9);
        let d2 = det("d2", b(0.0, 0.0, 6.0, 10.0), 0.8);
        let r = match_category(&[&d1, &d2], &[&g], 0.5);
        assert_eq!(r.verdicts, vec![Verdict::TruePositive { gt: 0 }, Verdict::FalsePositive]);
        assert_eq!(r.best_iou_same_class, vec![0.7, 0.6]);
    }

    #[test]
    fn match_on_ignored_object_is_ignored() {
        let g = gt("g", b(0.0, 0.0, 10.0, 10.0), true);
        let d = det("d", b(0.0, 0.0, 6.0, 10.0), 0.9);
        let r = match_category(&[&d], &[&g], 0.5);
        assert_eq!(r.verdicts, vec![Verdict::Ignored]);
        assert_eq!(r.gt_matched, vec![false]);
        assert_eq!(r.best_iou_same_class, vec![0.0]);
    }

    #[test]
    fn other_images_are_never_matched() {
        let mut g = gt("g", b(0.0, 0.0, 10.0, 10.0), false);
        g.image_id = "other".into();
        let d = det("d", b(0.0, 0.0, 10.0, 10.0), 0.9);
        let r = match_category(&[&d], &[&g], 0.5);
        assert_eq!(r.verdicts, vec![Verdict::FalsePositive]);
    }

    #[test]
    fn equal_overlap_goes_to_smaller_id() {
        let g1 = gt("b", b(0.0, 0.0, 10.0, 10.0), false);
        let g2 = gt("a", b(0.0, 0.0, 10.0, 10.0), false);
        let d = det("d", b(0.0, 0.0, 10.0, 10.0), 0.9);
        let r = match_category(&[&d], &[&g1, &g2], 0.5);
        assert_eq!(r.verdicts, vec![Verdict::TruePositive { gt: 1 }]);
    }

    fn arb_box() -> impl Strategy<Value = BBox> {
        (0u32..40, 0u32..40, 1u32..30, 1u32..30)
            .prop_map(|(x, y, w, h)| BBox::new(x as f64, y as f64, w as f64, h as f64))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), c in arb_box()) {
            let v = iou(&a, &c);
            prop_assert_eq!(v, iou(&c, &a));
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v == 1.0, a == c);
        }

        #[test]
        fn matcher_conserves_and_is_monotone(
            gts in prop::collection::vec((arb_box(), any::<bool>()), 0..6),
            dets in prop::collection::vec(arb_box(), 0..8),
            lo in 0.1f64..0.6,
            bump in 0.0f64..0.4,
        ) {
            let gts: Vec<GroundTruthObject> = gts
                .into_iter()
                .enumerate()
                .map(|(i, (bx, ig))| gt(&format!("g{i}"), bx, ig))
                .collect();
            let dets: Vec<Detection> = dets
                .into_iter()
                .enumerate()
                .map(|(i, bx)| det(&format!("d{i}"), bx, 1.0))
                .collect();
            let gref: Vec<&GroundTruthObject> = gts.iter().collect();
            let dref: Vec<&Detection> = dets.iter().collect();
            let low = match_category(&dref, &gref, lo);
            let high = match_category(&dref, &gref, lo + bump);
            let positives = gts.iter().filter(|g| !g.ignore).count();
            prop_assert_eq!(low.tp_count() + low.fp_count() + low.ignored_count(), dets.len());
            prop_assert!(low.tp_count() <= positives);
            prop_assert!(high.tp_count() <= low.tp_count());
            let claimed = low.gt_matched.iter().filter(|m| **m).count();
            prop_assert_eq!(claimed, low.tp_count());
        }
    }
}
