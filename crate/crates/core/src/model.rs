//! Domain types and validated ingestion of ground truth, detections and the
//! similarity taxonomy.
//!
//! Everything downstream relies on two guarantees established here: every
//! cross-reference resolves, and detections are held in one canonical order
//! (descending score, ties broken by ascending detection id).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[x, y, w, h]`, origin top-left, continuous pixel units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BBox { x, y, w, h }
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Finite coordinates and strictly positive extent.
    pub fn is_valid(&self) -> bool {
        [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite()) && self.w > 0.0 && self.h > 0.0
    }
}

impl Serialize for BBox {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(4)?;
        t.serialize_element(&self.x)?;
        t.serialize_element(&self.y)?;
        t.serialize_element(&self.w)?;
        t.serialize_element(&self.h)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [x, y, w, h] = <[f64; 4]>::deserialize(deserializer)?;
        Ok(BBox { x, y, w, h })
    }
}

/// Identifiers may be written as JSON strings or integers; both are held as strings.
fn de_id<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<String, D::Error> {
    struct IdVisitor;

    impl Visitor<'_> for IdVisitor {
        type Value = String;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a string or integer identifier")
        }

        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<String, E> {
            Ok(v.to_owned())
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<String, E> {
            Ok(v.to_string())
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<String, E> {
            Ok(v.to_string())
        }
    }

    deserializer.deserialize_any(IdVisitor)
}

/// The six object characteristics used by the sensitivity analysis.
///
/// Declaration order is alphabetical by name, which is also the merge order of
/// every per-characteristic table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Characteristic {
    Asp,
    Occ,
    Part,
    Size,
    Trn,
    View,
}

impl Characteristic {
    pub const ALL: [Characteristic; 6] = [
        Characteristic::Asp,
        Characteristic::Occ,
        Characteristic::Part,
        Characteristic::Size,
        Characteristic::Trn,
        Characteristic::View,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Characteristic::Asp => "asp",
            Characteristic::Occ => "occ",
            Characteristic::Part => "part",
            Characteristic::Size => "size",
            Characteristic::Trn => "trn",
            Characteristic::View => "view",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// Geometry-derived characteristics are never stored in annotations.
    pub fn feature(self) -> Option<Feature> {
        match self {
            Characteristic::Size => Some(Feature::Size),
            Characteristic::Asp => Some(Feature::Asp),
            _ => None,
        }
    }
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Characteristics computed from box geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    /// Pixel area `w * h`.
    Size,
    /// Aspect ratio `w / h`.
    Asp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    #[serde(deserialize_with = "de_id")]
    pub id: String,
    pub width: f64,
    pub height: f64,
    pub file_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    #[serde(deserialize_with = "de_id")]
    pub id: String,
    #[serde(deserialize_with = "de_id")]
    pub image_id: String,
    pub category: String,
    pub bbox: BBox,
    #[serde(default)]
    pub ignore: bool,
    #[serde(default)]
    pub characteristics: BTreeMap<String, String>,
}

impl GroundTruthObject {
    /// Annotated level for one of the label characteristics, if present.
    pub fn label(&self, characteristic: Characteristic) -> Option<&str> {
        self.characteristics.get(characteristic.name()).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(deserialize_with = "de_id")]
    pub id: String,
    #[serde(deserialize_with = "de_id")]
    pub image_id: String,
    pub category: String,
    pub bbox: BBox,
    pub score: f64,
}

/// Canonical rank order: descending score, then ascending id.
pub fn canonical_order(a: &Detection, b: &Detection) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id))
}

pub fn derived_characteristic(obj: &GroundTruthObject, feature: Feature) -> f64 {
    match feature {
        Feature::Size => obj.bbox.area(),
        Feature::Asp => obj.bbox.w / obj.bbox.h,
    }
}

/// Named groups of categories considered mutually similar.
#[derive(Debug, Clone, Default)]
pub struct SimilarityTaxonomy {
    groups: BTreeMap<String, BTreeSet<String>>,
    group_of: HashMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct TaxonomyFile {
    groups: BTreeMap<String, BTreeSet<String>>,
}

impl SimilarityTaxonomy {
    pub fn new(groups: BTreeMap<String, BTreeSet<String>>) -> Result<Self> {
        let mut group_of = HashMap::new();
        for (group, members) in &groups {
            for category in members {
                if let Some(prev) = group_of.insert(category.clone(), group.clone()) {
                    return Err(Error::validation(
                        category.clone(),
                        format!("category listed in taxonomy groups `{prev}` and `{group}`"),
                    ));
                }
            }
        }
        Ok(SimilarityTaxonomy { groups, group_of })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TaxonomyFile = serde_json::from_str(text).map_err(|source| Error::Parse {
            origin: "taxonomy".into(),
            source,
        })?;
        Self::new(file.groups)
    }

    pub fn to_json(&self) -> String {
        let file = TaxonomyFile {
            groups: self.groups.clone(),
        };
        serde_json::to_string_pretty(&file).expect("taxonomy serializes")
    }

    pub fn groups(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.groups
    }

    pub fn group_of(&self, category: &str) -> Option<&str> {
        self.group_of.get(category).map(String::as_str)
    }

    /// Distinct categories sharing a group.
    pub fn similar(&self, a: &str, b: &str) -> bool {
        if a == b {
            return false;
        }
        match (self.group_of.get(a), self.group_of.get(b)) {
            (Some(ga), Some(gb)) => ga == gb,
            _ => false,
        }
    }
}

impl PartialEq for SimilarityTaxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.groups == other.groups
    }
}

#[derive(Serialize, Deserialize)]
struct GroundTruthFile {
    images: Vec<Image>,
    objects: Vec<GroundTruthObject>,
    categories: Vec<String>,
}

/// Validated, immutable ground truth plus the similarity taxonomy.
#[derive(Debug, Clone)]
pub struct Dataset {
    images: Vec<Image>,
    objects: Vec<GroundTruthObject>,
    categories: Vec<String>,
    taxonomy: SimilarityTaxonomy,
    image_index: HashMap<String, usize>,
    category_index: HashMap<String, usize>,
    objects_by_image: Vec<Vec<usize>>,
    objects_by_category: Vec<Vec<usize>>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.images == other.images
            && self.objects == other.objects
            && self.categories == other.categories
            && self.taxonomy == other.taxonomy
    }
}

const LABEL_CHARACTERISTICS: [&str; 4] = ["occ", "trn", "view", "part"];

impl Dataset {
    pub fn new(
        images: Vec<Image>,
        objects: Vec<GroundTruthObject>,
        categories: Vec<String>,
        taxonomy: SimilarityTaxonomy,
    ) -> Result<Self> {
        let mut image_index = HashMap::with_capacity(images.len());
        for (i, image) in images.iter().enumerate() {
            if !(image.width.is_finite() && image.width > 0.0 && image.height.is_finite() && image.height > 0.0) {
                return Err(Error::validation(&image.id, "image width and height must be positive"));
            }
            if image_index.insert(image.id.clone(), i).is_some() {
                return Err(Error::validation(&image.id, "duplicate image id"));
            }
        }

        let mut category_index = HashMap::with_capacity(categories.len());
        for (i, category) in categories.iter().enumerate() {
            if category_index.insert(category.clone(), i).is_some() {
                return Err(Error::validation(category, "duplicate category"));
            }
        }

        let mut objects_by_image = vec![Vec::new(); images.len()];
        let mut objects_by_category = vec![Vec::new(); categories.len()];
        let mut seen = HashSet::with_capacity(objects.len());
        for (i, obj) in objects.iter().enumerate() {
            if !seen.insert(obj.id.as_str()) {
                return Err(Error::validation(&obj.id, "duplicate object id"));
            }
            let Some(&img) = image_index.get(&obj.image_id) else {
                return Err(Error::validation(
                    &obj.id,
                    format!("unknown image `{}`", obj.image_id),
                ));
            };
            let Some(&cat) = category_index.get(&obj.category) else {
                return Err(Error::validation(
                    &obj.id,
                    format!("unknown category `{}`", obj.category),
                ));
            };
            if !obj.bbox.is_valid() {
                return Err(Error::validation(&obj.id, "box must be finite with w > 0 and h > 0"));
            }
            if let Some(name) = obj
                .characteristics
                .keys()
                .find(|k| !LABEL_CHARACTERISTICS.contains(&k.as_str()))
            {
                return Err(Error::validation(
                    &obj.id,
                    format!("unsupported characteristic `{name}` (expected occ, trn, view or part)"),
                ));
            }
            objects_by_image[img].push(i);
            objects_by_category[cat].push(i);
        }
        for bucket in &mut objects_by_category {
            bucket.sort_by(|&a, &b| objects[a].id.cmp(&objects[b].id));
        }

        Ok(Dataset {
            images,
            objects,
            categories,
            taxonomy,
            image_index,
            category_index,
            objects_by_image,
            objects_by_category,
        })
    }

    pub fn from_json(ground_truth: &str, taxonomy: &str) -> Result<Self> {
        let taxonomy = SimilarityTaxonomy::from_json(taxonomy)?;
        Self::from_json_with_taxonomy(ground_truth, taxonomy)
    }

    pub fn from_json_with_taxonomy(ground_truth: &str, taxonomy: SimilarityTaxonomy) -> Result<Self> {
        let file: GroundTruthFile = serde_json::from_str(ground_truth).map_err(|source| Error::Parse {
            origin: "ground truth".into(),
            source,
        })?;
        Self::new(file.images, file.objects, file.categories, taxonomy)
    }

    /// Ground-truth file contents; the taxonomy is written separately.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            images: &'a [Image],
            objects: &'a [GroundTruthObject],
            categories: &'a [String],
        }
        serde_json::to_string_pretty(&View {
            images: &self.images,
            objects: &self.objects,
            categories: &self.categories,
        })
        .expect("dataset serializes")
    }

    pub fn images(&self) -> &[Image] {
        &self.images
    }

    pub fn objects(&self) -> &[GroundTruthObject] {
        &self.objects
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn taxonomy(&self) -> &SimilarityTaxonomy {
        &self.taxonomy
    }

    pub fn image(&self, id: &str) -> Option<&Image> {
        self.image_index.get(id).map(|&i| &self.images[i])
    }

    pub fn has_category(&self, name: &str) -> bool {
        self.category_index.contains_key(name)
    }

    pub fn category_position(&self, name: &str) -> Option<usize> {
        self.category_index.get(name).copied()
    }

    /// All objects (any category, ignored or not) annotated on an image.
    pub fn objects_in_image(&self, image_id: &str) -> impl Iterator<Item = &GroundTruthObject> {
        self.image_index
            .get(image_id)
            .map(|&i| self.objects_by_image[i].as_slice())
            .unwrap_or(&[])
            .iter()
            .map(move |&o| &self.objects[o])
    }

    /// Objects of one category in ascending id order.
    pub fn objects_of_category(&self, category: &str) -> Vec<&GroundTruthObject> {
        self.category_index
            .get(category)
            .map(|&c| self.objects_by_category[c].iter().map(|&o| &self.objects[o]).collect())
            .unwrap_or_default()
    }

    pub fn non_ignored_count(&self) -> usize {
        self.objects.iter().filter(|o| !o.ignore).count()
    }

    /// Copy of this dataset with a different taxonomy.
    pub fn with_taxonomy(&self, taxonomy: SimilarityTaxonomy) -> Dataset {
        Dataset {
            taxonomy,
            ..self.clone()
        }
    }
}

pub fn load_dataset(gt_path: impl AsRef<Path>, taxonomy_path: impl AsRef<Path>) -> Result<Dataset> {
    let gt_path = gt_path.as_ref();
    let taxonomy_path = taxonomy_path.as_ref();
    let gt = read_text(gt_path)?;
    let taxonomy_text = read_text(taxonomy_path)?;
    let taxonomy = SimilarityTaxonomy::from_json(&taxonomy_text).map_err(|e| relabel(e, taxonomy_path))?;
    Dataset::from_json_with_taxonomy(&gt, taxonomy).map_err(|e| relabel(e, gt_path))
}

/// One detector's output, validated and held in canonical rank order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionSet {
    detector: String,
    detections: Vec<Detection>,
}

#[derive(Deserialize)]
struct DetectionFile {
    #[serde(default)]
    detector: String,
    detections: Vec<Detection>,
}

impl DetectionSet {
    pub fn new(detector: impl Into<String>, mut detections: Vec<Detection>, ds: &Dataset) -> Result<Self> {
        let mut seen = HashSet::with_capacity(detections.len());
        for det in &detections {
            if !seen.insert(det.id.as_str()) {
                return Err(Error::validation(&det.id, "duplicate detection id"));
            }
            if ds.image(&det.image_id).is_none() {
                return Err(Error::validation(
                    &det.id,
                    format!("unknown image `{}`", det.image_id),
                ));
            }
            if !ds.has_category(&det.category) {
                return Err(Error::validation(
                    &det.id,
                    format!("unknown category `{}`", det.category),
                ));
            }
            if !det.bbox.is_valid() {
                return Err(Error::validation(&det.id, "box must be finite with w > 0 and h > 0"));
            }
            if !(det.score.is_finite() && (0.0..=1.0).contains(&det.score)) {
                return Err(Error::validation(&det.id, format!("score {} outside [0, 1]", det.score)));
            }
        }
        detections.sort_by(canonical_order);
        Ok(DetectionSet {
            detector: detector.into(),
            detections,
        })
    }

    pub fn from_json(text: &str, ds: &Dataset) -> Result<Self> {
        let file: DetectionFile = serde_json::from_str(text).map_err(|source| Error::Parse {
            origin: "detections".into(),
            source,
        })?;
        Self::new(file.detector, file.detections, ds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("detections serialize")
    }

    pub fn detector(&self) -> &str {
        &self.detector
    }

    /// Detections in canonical rank order.
    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }
}

pub fn load_detections(det_path: impl AsRef<Path>, ds: &Dataset) -> Result<DetectionSet> {
    let det_path = det_path.as_ref();
    let text = read_text(det_path)?;
    DetectionSet::from_json(&text, ds).map_err(|e| relabel(e, det_path))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn relabel(err: Error, path: &Path) -> Error {
    match err {
        Error::Parse { source, .. } => Error::Parse {
            origin: path.display().to_string(),
            source,
        },
        other => other,
    }
}
