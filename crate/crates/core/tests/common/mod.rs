#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use detdiag::model::Image;
use detdiag::synth::{Profile, SynthConfig};
use detdiag::{BBox, Dataset, Detection, DetectionSet, GroundTruthObject, SimilarityTaxonomy};

pub fn image(id: &str, w: f64, h: f64) -> Image {
    Image {
        id: id.into(),
        width: w,
        height: h,
        file_name: format!("{id}.jpg"),
    }
}

pub fn gt(id: &str, image: &str, category: &str, b: [f64; 4], ignore: bool) -> GroundTruthObject {
    GroundTruthObject {
        id: id.into(),
        image_id: image.into(),
        category: category.into(),
        bbox: BBox::new(b[0], b[1], b[2], b[3]),
        ignore,
        characteristics: BTreeMap::new(),
    }
}

pub fn det(id: &str, image: &str, category: &str, b: [f64; 4], score: f64) -> Detection {
    Detection {
        id: id.into(),
        image_id: image.into(),
        category: category.into(),
        bbox: BBox::new(b[0], b[1], b[2], b[3]),
        score,
    }
}

pub fn taxonomy(groups: &[(&str, &[&str])]) -> SimilarityTaxonomy {
    let map: BTreeMap<String, BTreeSet<String>> = groups
        .iter()
        .map(|(g, members)| (g.to_string(), members.iter().map(|m| m.to_string()).collect()))
        .collect();
    SimilarityTaxonomy::new(map).unwrap()
}

/// Same detector with every score mapped through `f`.
pub fn rescored(ds: &Dataset, dets: &DetectionSet, f: impl Fn(f64) -> f64) -> DetectionSet {
    let moved = dets
        .detections()
        .iter()
        .map(|d| Detection {
            score: f(d.score),
            ..d.clone()
        })
        .collect();
    DetectionSet::new(dets.detector(), moved, ds).unwrap()
}

/// Every error mode at once: partial boxes, similar-class confusions,
/// background boxes and a few ignored objects.
pub fn mixed_config(images: usize) -> SynthConfig {
    SynthConfig {
        images,
        loc_rate: 0.15,
        sim_rate: 0.2,
        background_per_image: 1,
        ignore_rate: 0.05,
        ..SynthConfig::for_profile(Profile::Perfect)
    }
}

/// Objects come in twins with identical size, aspect ratio and labels; one
/// twin is found with an exact box and the other is missed. All true
/// positives outrank all false positives, so every subset of every
/// characteristic has the same normalized AP.
pub fn twin_fixture(pairs: usize) -> (Dataset, DetectionSet) {
    let occ = ["none", "low", "moderate", "high"];
    let view = ["front", "side", "rear"];
    let mut images = Vec::new();
    let mut objects = Vec::new();
    let mut dets = Vec::new();
    for k in 0..pairs {
        let w = 20.0 + ((k * 7) % 60) as f64;
        let h = 20.0 + ((k * 13) % 50) as f64;
        for twin in 0..2 {
            let img = format!("img{k:03}{twin}");
            images.push(image(&img, 200.0, 200.0));
            let mut o = gt(&format!("gt{k:03}{twin}"), &img, "cat", [10.0, 10.0, w, h], false);
            o.characteristics.insert("occ".into(), occ[k % 4].into());
            o.characteristics.insert("trn".into(), if k % 2 == 0 { "none" } else { "truncated" }.into());
            o.characteristics.insert("view".into(), view[k % 3].into());
            o.characteristics.insert("part".into(), if (k / 2) % 2 == 0 { "all-visible" } else { "partial" }.into());
            objects.push(o);
            if twin == 0 {
                dets.push(det(&format!("tp{k:03}"), &img, "cat", [10.0, 10.0, w, h], 0.9 - k as f64 * 0.001));
            } else {
                dets.push(det(&format!("fp{k:03}"), &img, "cat", [150.0, 150.0, 20.0, 20.0], 0.3 - k as f64 * 0.001));
            }
        }
    }
    let ds = Dataset::new(images, objects, vec!["cat".into()], SimilarityTaxonomy::empty()).unwrap();
    let set = DetectionSet::new("twins", dets, &ds).unwrap();
    (ds, set)
}
