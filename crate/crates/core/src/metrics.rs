//! Ranked-retrieval metrics over one category's verdicts: precision/recall,
//! average precision, normalized average precision, and the false-positive
//! type distribution over score-ranked prefixes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp_taxonomy::FpType;
use crate::geometry::Verdict;

/// How the precision envelope is integrated over recall.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApMode {
    /// All-point interpolation: exact area under the envelope.
    #[default]
    #[serde(rename = "envelope")]
    Envelope,
    /// Mean envelope value at recall 0, 0.1, ..., 1.
    #[serde(rename = "11point")]
    ElevenPoint,
}

impl FromStr for ApMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "envelope" => Ok(ApMode::Envelope),
            "11point" => Ok(ApMode::ElevenPoint),
            other => Err(format!("unknown AP mode `{other}` (expected envelope or 11point)")),
        }
    }
}

impl fmt::Display for ApMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApMode::Envelope => "envelope",
            ApMode::ElevenPoint => "11point",
        })
    }
}

/// Per-rank precision/recall; ignored detections occupy no rank.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub n_pos: usize,
    pub scores: Vec<f64>,
    pub cum_tp: Vec<usize>,
    pub cum_fp: Vec<usize>,
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
}

impl PrCurve {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

pub fn pr_curve(verdicts: &[Verdict], scores: &[f64], n_pos: usize) -> PrCurve {
    assert_eq!(verdicts.len(), scores.len(), "one score per verdict");
    let mut curve = PrCurve {
        n_pos,
        scores: Vec::new(),
        cum_tp: Vec::new(),
        cum_fp: Vec::new(),
        recall: Vec::new(),
        precision: Vec::new(),
    };
    let (mut tp, mut fp) = (0usize, 0usize);
    for (verdict, &score) in verdicts.iter().zip(scores) {
        match verdict {
            Verdict::TruePositive { .. } => tp += 1,
            Verdict::FalsePositive => fp += 1,
            Verdict::Ignored => continue,
        }
        let rank = tp + fp;
        curve.scores.push(score);
        curve.cum_tp.push(tp);
        curve.cum_fp.push(fp);
        curve.recall.push(if n_pos == 0 { 0.0 } else { tp as f64 / n_pos as f64 });
        curve.precision.push(tp as f64 / rank as f64);
    }
    curve
}

/// Integrates `precision` against `recall` (non-decreasing) under the
/// running-maximum envelope `env(r) = max { p(k) : r(k) >= r }`.
fn integrate(recall: &[f64], precision: &[f64], mode: ApMode) -> f64 {
    match mode {
        ApMode::Envelope => {
            let mut envelope = precision.to_vec();
            for i in (0..envelope.len().saturating_sub(1)).rev() {
                envelope[i] = envelope[i].max(envelope[i + 1]);
            }
            let mut area = 0.0;
            let mut prev = 0.0;
            for (&r, &p) in recall.iter().zip(&envelope) {
                if r > prev {
                    area += (r - prev) * p;
                    prev = r;
                }
            }
            area
        }
        ApMode::ElevenPoint => {
            let total: f64 = (0..=10)
                .map(|i| {
                    let t = i as f64 / 10.0;
                    recall
                        .iter()
                        .zip(precision)
                        .filter(|(&r, _)| r >= t)
                        .map(|(_, &p)| p)
                        .fold(0.0, f64::max)
                })
                .sum();
            total / 11.0
        }
    }
}

/// Absent when the category has no positives.
pub fn average_precision(curve: &PrCurve, mode: ApMode) -> Option<f64> {
    (curve.n_pos > 0).then(|| integrate(&curve.recall, &curve.precision, mode))
}

/// Precision rescaled to a fixed reference positive count:
/// `r * n_ref / (r * n_ref + cum_fp)`, defined as 1 when the denominator is 0.
pub fn normalized_precision(curve: &PrCurve, n_ref: f64) -> Vec<f64> {
    curve
        .recall
        .iter()
        .zip(&curve.cum_fp)
        .map(|(&r, &fp)| {
            let hits = r * n_ref;
            let denom = hits + fp as f64;
            if denom == 0.0 {
                1.0
            } else {
                hits / denom
            }
        })
        .collect()
}

pub fn normalized_average_precision(curve: &PrCurve, n_ref: f64, mode: ApMode) -> Result<Option<f64>> {
    if !(n_ref.is_finite() && n_ref > 0.0) {
        return Err(Error::Domain(format!("reference positive count must be > 0, got {n_ref}")));
    }
    if curve.n_pos == 0 {
        return Ok(None);
    }
    Ok(Some(integrate(&curve.recall, &normalized_precision(curve, n_ref), mode)))
}

/// Fraction of each type; serialized with the type names as keys.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FpFractions {
    #[serde(rename = "Loc")]
    pub loc: f64,
    #[serde(rename = "Sim")]
    pub sim: f64,
    #[serde(rename = "Oth")]
    pub oth: f64,
    #[serde(rename = "BG")]
    pub bg: f64,
}

impl FpFractions {
    pub fn get(&self, t: FpType) -> f64 {
        match t {
            FpType::Loc => self.loc,
            FpType::Sim => self.sim,
            FpType::Oth => self.oth,
            FpType::Bg => self.bg,
        }
    }

    pub fn sum(&self) -> f64 {
        self.loc + self.sim + self.oth + self.bg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpDistributionEntry {
    /// Number of highest-scoring false positives considered.
    pub k: usize,
    pub fractions: FpFractions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FpDistributionSeries {
    pub entries: Vec<FpDistributionEntry>,
}

impl FpDistributionSeries {
    /// Loc fraction at the smallest prefix.
    pub fn initial_loc_fraction(&self) -> Option<f64> {
        self.entries.first().map(|e| e.fractions.loc)
    }
}

/// `types` are the false positives' types in canonical score order.
pub fn fp_distribution_series(types: &[FpType], schedule: &[usize]) -> Result<FpDistributionSeries> {
    let mut prev = 0usize;
    for &k in schedule {
        if k <= prev {
            return Err(Error::Schedule(format!(
                "prefix sizes must be positive and strictly increasing, got {schedule:?}"
            )));
        }
        if k > types.len() {
            return Err(Error::Schedule(format!(
                "prefix size {k} exceeds the {} available false positives",
                types.len()
            )));
        }
        prev = k;
    }

    let mut counts = [0usize; 4];
    let mut consumed = 0usize;
    let mut entries = Vec::with_capacity(schedule.len());
    for &k in schedule {
        for t in &types[consumed..k] {
            counts[*t as usize] += 1;
        }
        consumed = k;
        let frac = |t: FpType| counts[t as usize] as f64 / k as f64;
        entries.push(FpDistributionEntry {
            k,
            fractions: FpFractions {
                loc: frac(FpType::Loc),
                sim: frac(FpType::Sim),
                oth: frac(FpType::Oth),
                bg: frac(FpType::Bg),
            },
        });
    }
    Ok(FpDistributionSeries { entries })
}

/// Eight log-spaced prefix sizes from `ceil(25 * n_categories / 20)` up to
/// `n_fp`, clamped to `[1, n_fp]` and deduplicated.
pub fn default_schedule(n_fp: usize, n_categories: usize) -> Vec<usize> {
    if n_fp == 0 {
        return Vec::new();
    }
    let start = (25 * n_categories.max(1)).div_ceil(20).clamp(1, n_fp);
    if start == n_fp {
        return vec![n_fp];
    }
    let ratio = n_fp as f64 / start as f64;
    let mut schedule: Vec<usize> = (0..8)
        .map(|i| {
            let v = (start as f64 * ratio.powf(i as f64 / 7.0)).round() as usize;
            v.clamp(1, n_fp)
        })
        .collect();
    schedule[7] = n_fp;
    schedule.dedup();
    schedule
}

#[cfg(test)]
mod tests {
    use super::*;
    use FpType::*;

    const TP: Verdict = Verdict::TruePositive { gt: 0 };
    const FP: Verdict = Verdict::FalsePositive;

    fn curve(verdicts: &[Verdict], n_pos: usize) -> PrCurve {
        let scores: Vec<f64> = (0..verdicts.len()).map(|i| 1.0 - i as f64 / 100.0).collect();
        pr_curve(verdicts, &scores, n_pos)
    }

    #[test]
    fn curve_worked_examples() {
        let c = curve(&[TP], 1);
        assert_eq!((c.recall.clone(), c.precision.clone()), (vec![1.0], vec![1.0]));

        let c = curve(&[TP, FP, TP], 2);
        assert_eq!(c.recall, vec![0.5, 0.5, 1.0]);
        assert_eq!(c.precision, vec![1.0, 0.5, 2.0 / 3.0]);

        let c = curve(&[FP, FP], 3);
        assert!(c.recall.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn ignored_detections_take_no_rank() {
        let c = curve(&[TP, Verdict::Ignored, FP], 1);
        assert_eq!(c.cum_tp, vec![1, 1]);
        assert_eq!(c.cum_fp, vec![0, 1]);
        for (k, (tp, fp)) in c.cum_tp.iter().zip(&c.cum_fp).enumerate() {
            assert_eq!(tp + fp, k + 1);
        }
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&curve(&[TP, TP], 2), ApMode::Envelope), Some(1.0));
        let ap = average_precision(&curve(&[TP, FP, TP], 2), ApMode::Envelope).unwrap();
        assert!((ap - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
        assert_eq!(average_precision(&curve(&[FP, FP], 2), ApMode::Envelope), Some(0.0));
        assert_eq!(average_precision(&curve(&[FP], 0), ApMode::Envelope), None);
    }

    #[test]
    fn eleven_point_perfect_and_half() {
        assert_eq!(average_precision(&curve(&[TP], 1), ApMode::ElevenPoint), Some(1.0));
        // recall 0.5 at precision 1: thresholds 0..=0.5 hit, 6 of 11
        let ap = average_precision(&curve(&[TP], 2), ApMode::ElevenPoint).unwrap();
        assert!((ap - 6.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn normalized_ap_examples() {
        for n_ref in [1.0, 7.0, 250.0] {
            let v = normalized_average_precision(&curve(&[TP, TP], 2), n_ref, ApMode::Envelope).unwrap();
            assert_eq!(v, Some(1.0));
        }
        let v = normalized_average_precision(&curve(&[FP, TP, TP], 2), 2.0, ApMode::Envelope)
            .unwrap()
            .unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        let v = normalized_average_precision(&curve(&[TP, FP], 1), 1.0, ApMode::Envelope).unwrap();
        assert_eq!(v, Some(1.0));
    }

    #[test]
    fn normalized_ap_rejects_non_positive_reference() {
        let c = curve(&[TP], 1);
        assert!(matches!(normalized_average_precision(&c, 0.0, ApMode::Envelope), Err(Error::Domain(_))));
        assert!(matches!(normalized_average_precision(&c, -3.0, ApMode::Envelope), Err(Error::Domain(_))));
    }

    #[test]
    fn distribution_examples() {
        let types = [Loc, Loc, Bg, Sim];
        let s = fp_distribution_series(&types, &[1, 2, 4]).unwrap();
        assert_eq!(s.entries[0].fractions, FpFractions { loc: 1.0, ..Default::default() });
        assert_eq!(s.entries[1].fractions, FpFractions { loc: 1.0, ..Default::default() });
        assert_eq!(
            s.entries[2].fractions,
            FpFractions {
                loc: 0.5,
                sim: 0.25,
                oth: 0.0,
                bg: 0.25
            }
        );
    }

    #[test]
    fn schedule_errors() {
        let types = [Loc, Bg];
        assert!(matches!(fp_distribution_series(&types, &[2, 1]), Err(Error::Schedule(_))));
        assert!(matches!(fp_distribution_series(&types, &[1, 1]), Err(Error::Schedule(_))));
        assert!(matches!(fp_distribution_series(&types, &[3]), Err(Error::Schedule(_))));
        assert!(matches!(fp_distribution_series(&types, &[0, 1]), Err(Error::Schedule(_))));
        assert!(fp_distribution_series(&[], &[]).unwrap().entries.is_empty());
    }

    #[test]
    fn default_schedule_shape() {
        assert!(default_schedule(0, 20).is_empty());
        assert_eq!(default_schedule(10, 20), vec![10]);
        let s = default_schedule(10_000, 20);
        assert_eq!(s.len(), 8);
        assert_eq!(s[0], 25);
        assert_eq!(*s.last().unwrap(), 10_000);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        let s = default_schedule(3, 1);
        assert_eq!(s, vec![2, 3]);
    }
}
