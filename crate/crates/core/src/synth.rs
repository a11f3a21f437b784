//! Seeded synthetic fixtures with a known verdict for every detection.
//!
//! Objects are laid out one per cell of a 4x4 grid covering the left 480x480
//! pixels of a 640x480 image, so distinct objects never overlap and every
//! planted error lands in its intended band:
//!
//! - Loc: a sub-box of the object covering 20-40% of its width or height,
//!   giving a same-class overlap in [0.2, 0.4].
//! - Sim: the object's exact box labelled with another category of its
//!   taxonomy group.
//! - BG: a box whose overlap with every object of the image is below 0.1,
//!   found by rejection sampling with the empty right-hand strip as fallback.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fp_taxonomy::{FpType, MIN_EVIDENCE_IOU};
use crate::geometry::iou;
use crate::model::{BBox, Dataset, Detection, DetectionSet, GroundTruthObject, Image, SimilarityTaxonomy};
use crate::output::{ensure_dir, write_file};

pub const IMAGE_WIDTH: f64 = 640.0;
pub const IMAGE_HEIGHT: f64 = 480.0;
const CELL: f64 = 120.0;
const GRID: usize = 4;
pub const MAX_OBJECTS_PER_IMAGE: usize = GRID * GRID;

/// PASCAL VOC class names, used for the first 20 synthetic categories.
pub const VOC_CATEGORIES: [&str; 20] = [
    "aeroplane", "bicycle", "bird", "boat", "bottle", "bus", "car", "cat", "chair", "cow",
    "diningtable", "dog", "horse", "motorbike", "person", "pottedplant", "sheep", "sofa", "train",
    "tvmonitor",
];

/// Conventional VOC similarity grouping (animals, vehicles, furniture).
pub fn voc_groups() -> BTreeMap<String, BTreeSet<String>> {
    let groups: [(&str, &[&str]); 3] = [
        ("animals", &["bird", "cat", "cow", "dog", "horse", "sheep"]),
        ("furniture", &["chair", "diningtable", "sofa"]),
        ("vehicles", &["aeroplane", "bicycle", "boat", "bus", "car", "motorbike", "train"]),
    ];
    groups
        .iter()
        .map(|(g, members)| (g.to_string(), members.iter().map(|m| m.to_string()).collect()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Perfect,
    Jittered,
    Confused,
    NoisyBg,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "perfect" => Ok(Profile::Perfect),
            "jittered" => Ok(Profile::Jittered),
            "confused" => Ok(Profile::Confused),
            "noisy-bg" => Ok(Profile::NoisyBg),
            other => Err(format!(
                "unknown profile `{other}` (expected perfect, jittered, confused or noisy-bg)"
            )),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Perfect => "perfect",
            Profile::Jittered => "jittered",
            Profile::Confused => "confused",
            Profile::NoisyBg => "noisy-bg",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub images: usize,
    pub categories: usize,
    /// At most 16.
    pub objects_per_image: usize,
    /// Probability an object is only found by a partial (Loc) box.
    pub loc_rate: f64,
    /// Probability a grouped object is detected under a similar category.
    pub sim_rate: f64,
    pub background_per_image: usize,
    /// Probability an object is flagged `ignore`; it still gets an exact box.
    pub ignore_rate: f64,
    pub tp_score: (f64, f64),
    pub fp_score: (f64, f64),
}

impl SynthConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let base = SynthConfig {
            images: 50,
            categories: 20,
            objects_per_image: 4,
            loc_rate: 0.0,
            sim_rate: 0.0,
            background_per_image: 0,
            ignore_rate: 0.0,
            tp_score: (0.3, 1.0),
            fp_score: (0.05, 0.95),
        };
        match profile {
            Profile::Perfect => base,
            Profile::Jittered => SynthConfig { loc_rate: 0.3, ..base },
            Profile::Confused => SynthConfig { sim_rate: 0.4, ..base },
            Profile::NoisyBg => SynthConfig {
                background_per_image: 3,
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlantedVerdict {
    #[serde(rename = "TP")]
    Tp,
    #[serde(rename = "FP")]
    Fp,
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedDetection {
    pub detection_id: String,
    pub image_id: String,
    pub category: String,
    pub verdict: PlantedVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fp_type: Option<FpType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gt_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub profile: Option<Profile>,
    pub config: SynthConfig,
    pub planted: Vec<PlantedDetection>,
}

impl Manifest {
    pub fn planted_fp_counts(&self) -> BTreeMap<FpType, usize> {
        let mut counts = BTreeMap::new();
        for p in &self.planted {
            if let Some(t) = p.fp_type {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
        counts
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub detections: DetectionSet,
    pub manifest: Manifest,
}

fn score(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    let v: f64 = rng.gen_range(lo..=hi);
    ((v * 1000.0).round() / 1000.0).clamp(0.0, 1.0)
}

fn characteristics(rng: &mut ChaCha8Rng) -> BTreeMap<String, String> {
    let pick = |rng: &mut ChaCha8Rng, levels: &[&str]| levels[rng.gen_range(0..levels.len())].to_string();
    let mut m = BTreeMap::new();
    m.insert("occ".into(), pick(rng, &["none", "low", "moderate", "high"]));
    m.insert("trn".into(), pick(rng, &["none", "truncated"]));
    m.insert("view".into(), pick(rng, &["front", "side", "rear"]));
    m.insert("part".into(), pick(rng, &["all-visible", "partial"]));
    m
}

/// Partial box inside `b` covering 20-40% of one dimension.
fn partial_box(rng: &mut ChaCha8Rng, b: &BBox) -> BBox {
    let frac: f64 = rng.gen_range(0.2..=0.4);
    match rng.gen_range(0..4) {
        0 => BBox::new(b.x, b.y, (b.w * frac).round(), b.h),
        1 => {
            let w = (b.w * frac).round();
            BBox::new(b.right() - w, b.y, w, b.h)
        }
        2 => BBox::new(b.x, b.y, b.w, (b.h * frac).round()),
        _ => {
            let h = (b.h * frac).round();
            BBox::new(b.x, b.bottom() - h, b.w, h)
        }
    }
}

/// Small shift keeping the overlap well above 0.5.
fn jitter(rng: &mut ChaCha8Rng, b: &BBox) -> BBox {
    let dx = rng.gen_range(-2..=2) as f64;
    let dy = rng.gen_range(-2..=2) as f64;
    BBox::new(b.x + dx, b.y + dy, b.w, b.h)
}

fn background_box(rng: &mut ChaCha8Rng, objects: &[BBox]) -> BBox {
    for _ in 0..100 {
        let w = rng.gen_range(20..=80) as f64;
        let h = rng.gen_range(20..=80) as f64;
        let x = rng.gen_range(0..=(IMAGE_WIDTH - w) as u32) as f64;
        let y = rng.gen_range(0..=(IMAGE_HEIGHT - h) as u32) as f64;
        let b = BBox::new(x, y, w, h);
        if objects.iter().all(|o| iou(&b, o) < MIN_EVIDENCE_IOU) {
            return b;
        }
    }
    let w = rng.gen_range(20..=80) as f64;
    let h = rng.gen_range(20..=80) as f64;
    let x = GRID as f64 * CELL + rng.gen_range(0..=(IMAGE_WIDTH - GRID as f64 * CELL - w) as u32) as f64;
    let y = rng.gen_range(0..=(IMAGE_HEIGHT - h) as u32) as f64;
    BBox::new(x, y, w, h)
}

pub fn category_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| match VOC_CATEGORIES.get(i) {
            Some(name) => name.to_string(),
            None => format!("class{:02}", i + 1),
        })
        .collect()
}

/// Generates a dataset, one detector's output and the manifest of planted
/// verdicts. Identical `(seed, config)` always yields identical output.
pub fn generate(seed: u64, profile: Option<Profile>, config: &SynthConfig) -> Result<Synthetic> {
    if config.objects_per_image > MAX_OBJECTS_PER_IMAGE || config.categories == 0 {
        return Err(crate::error::Error::Domain(format!(
            "objects_per_image must be <= {MAX_OBJECTS_PER_IMAGE} and categories > 0"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let categories = category_names(config.categories);
    let present: BTreeSet<&str> = categories.iter().map(String::as_str).collect();
    let groups: BTreeMap<String, BTreeSet<String>> = voc_groups()
        .into_iter()
        .map(|(g, members)| {
            let kept: BTreeSet<String> = members.into_iter().filter(|m| present.contains(m.as_str())).collect();
            (g, kept)
        })
        .filter(|(_, members)| !members.is_empty())
        .collect();
    let taxonomy = SimilarityTaxonomy::new(groups)?;

    let mut images = Vec::with_capacity(config.images);
    let mut objects = Vec::new();
    let mut detections = Vec::new();
    let mut planted = Vec::new();
    let mut next_det = 0usize;
    let mut new_det_id = || {
        next_det += 1;
        format!("det{next_det:07}")
    };

    for i in 0..config.images {
        let image_id = format!("img{:05}", i + 1);
        images.push(Image {
            id: image_id.clone(),
            width: IMAGE_WIDTH,
            height: IMAGE_HEIGHT,
            file_name: format!("{image_id}.jpg"),
        });

        let mut cells: Vec<usize> = (0..MAX_OBJECTS_PER_IMAGE).collect();
        cells.shuffle(&mut rng);
        let mut boxes = Vec::with_capacity(config.objects_per_image);
        for &cell in &cells[..config.objects_per_image] {
            let (cx, cy) = ((cell % GRID) as f64 * CELL, (cell / GRID) as f64 * CELL);
            let w = rng.gen_range(30..=110) as f64;
            let h = rng.gen_range(30..=110) as f64;
            let x = cx + rng.gen_range(0..=(CELL - w) as u32) as f64;
            let y = cy + rng.gen_range(0..=(CELL - h) as u32) as f64;
            let bbox = BBox::new(x, y, w, h);
            let category = categories[rng.gen_range(0..categories.len())].clone();
            let ignore = rng.gen_bool(config.ignore_rate);
            let gt_id = format!("gt{:06}", objects.len() + 1);
            boxes.push(bbox);
            objects.push(GroundTruthObject {
                id: gt_id.clone(),
                image_id: image_id.clone(),
                category: category.clone(),
                bbox,
                ignore,
                characteristics: characteristics(&mut rng),
            });

            let roll: f64 = rng.gen();
            let similar: Vec<&String> = taxonomy
                .group_of(&category)
                .map(|g| taxonomy.groups()[g].iter().filter(|c| **c != category).collect())
                .unwrap_or_default();
            let (det_box, det_category, verdict, fp_type) = if ignore {
                (bbox, category.clone(), PlantedVerdict::Ignored, None)
            } else if roll < config.loc_rate {
                (partial_box(&mut rng, &bbox), category.clone(), PlantedVerdict::Fp, Some(FpType::Loc))
            } else if roll < config.loc_rate + config.sim_rate && !similar.is_empty() {
                let other = similar[rng.gen_range(0..similar.len())].clone();
                (bbox, other, PlantedVerdict::Fp, Some(FpType::Sim))
            } else {
                (jitter(&mut rng, &bbox), category.clone(), PlantedVerdict::Tp, None)
            };
            let s = score(
                &mut rng,
                if verdict == PlantedVerdict::Fp {
                    config.fp_score
                } else {
                    config.tp_score
                },
            );
            let id = new_det_id();
            planted.push(PlantedDetection {
                detection_id: id.clone(),
                image_id: image_id.clone(),
                category: det_category.clone(),
                verdict,
                fp_type,
                gt_id: (verdict != PlantedVerdict::Fp).then(|| gt_id.clone()),
            });
            detections.push(Detection {
                id,
                image_id: image_id.clone(),
                category: det_category,
                bbox: det_box,
                score: s,
            });
        }

        for _ in 0..config.background_per_image {
            let bbox = background_box(&mut rng, &boxes);
            let category = categories[rng.gen_range(0..categories.len())].clone();
            let s = score(&mut rng, config.fp_score);
            let id = new_det_id();
            planted.push(PlantedDetection {
                detection_id: id.clone(),
                image_id: image_id.clone(),
                category: category.clone(),
                verdict: PlantedVerdict::Fp,
                fp_type: Some(FpType::Bg),
                gt_id: None,
            });
            detections.push(Detection {
                id,
                image_id: image_id.clone(),
                category,
                bbox,
                score: s,
            });
        }
    }

    let dataset = Dataset::new(images, objects, categories, taxonomy)?;
    let name = match profile {
        Some(p) => format!("synthetic-{p}"),
        None => "synthetic".to_string(),
    };
    let detections = DetectionSet::new(name, detections, &dataset)?;
    Ok(Synthetic {
        dataset,
        detections,
        manifest: Manifest {
            seed,
            profile,
            config: config.clone(),
            planted,
        },
    })
}

pub const GT_FILE: &str = "gt.json";
pub const DET_FILE: &str = "det.json";
pub const TAXONOMY_FILE: &str = "taxonomy.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `gt.json`, `det.json`, `taxonomy.json` and `manifest.json`.
pub fn write_synthetic(out_dir: &Path, synth: &Synthetic) -> Result<()> {
    ensure_dir(out_dir)?;
    write_file(&out_dir.join(GT_FILE), synth.dataset.to_json() + "\n")?;
    write_file(&out_dir.join(DET_FILE), synth.detections.to_json() + "\n")?;
    write_file(&out_dir.join(TAXONOMY_FILE), synth.dataset.taxonomy().to_json() + "\n")?;
    let manifest = serde_json::to_string_pretty(&synth.manifest).expect("manifest serializes");
    write_file(&out_dir.join(MANIFEST_FILE), manifest + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_parse() {
        for p in [Profile::Perfect, Profile::Jittered, Profile::Confused, Profile::NoisyBg] {
            assert_eq!(p.to_string().parse::<Profile>().unwrap(), p);
        }
        assert!("bogus".parse::<Profile>().is_err());
    }

    #[test]
    fn objects_never_overlap() {
        let cfg = SynthConfig {
            objects_per_image: 16,
            images: 5,
            ..SynthConfig::for_profile(Profile::Perfect)
        };
        let s = generate(3, None, &cfg).unwrap();
        for img in s.dataset.images() {
            let objs: Vec<_> = s.dataset.objects_in_image(&img.id).collect();
            for (i, a) in objs.iter().enumerate() {
                for b in &objs[i + 1..] {
                    assert_eq!(iou(&a.bbox, &b.bbox), 0.0);
                }
            }
        }
    }

    #[test]
    fn planted_bands_hold_geometrically() {
        let cfg = SynthConfig {
            loc_rate: 0.3,
            sim_rate: 0.3,
            background_per_image: 4,
            ..SynthConfig::for_profile(Profile::Perfect)
        };
        let s = generate(11, None, &cfg).unwrap();
        let by_id: BTreeMap<&str, &Detection> =
            s.detections.detections().iter().map(|d| (d.id.as_str(), d)).collect();
        for p in &s.manifest.planted {
            let det = by_id[p.detection_id.as_str()];
            let max_iou = s
                .dataset
                .objects_in_image(&p.image_id)
                .map(|o| iou(&det.bbox, &o.bbox))
                .fold(0.0, f64::max);
            match p.fp_type {
                Some(FpType::Bg) => assert!(max_iou < 0.1),
                Some(FpType::Loc) => assert!((0.1..0.5).contains(&max_iou), "{max_iou}"),
                Some(FpType::Sim) => assert_eq!(max_iou, 1.0),
                _ => assert!(max_iou >= 0.5),
            }
        }
    }

    #[test]
    fn too_many_objects_rejected() {
        let cfg = SynthConfig {
            objects_per_image: 17,
            ..SynthConfig::for_profile(Profile::Perfect)
        };
        assert!(generate(0, None, &cfg).is_err());
    }
}
