//! Corpus loading and stratified fold assignment.
//!
//! A corpus on disk looks like
//!
//! ```text
//! root/
//!   labels.csv        # header `id,label`, label ∈ {melanoma, benign}
//!   images/<id>.png   # or .jpg / .jpeg
//! ```
//!
//! No preprocessing (resizing, hair removal, color constancy) is applied; images are
//! used at native resolution.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::RgbImage;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SIDE: u32 = 16;
const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "PNG", "JPG"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Melanoma,
    Benign,
}

impl Label {
    /// Melanoma is the positive class for every metric in this crate.
    pub fn is_positive(self) -> bool {
        matches!(self, Label::Melanoma)
    }

    pub fn from_positive(positive: bool) -> Self {
        if positive {
            Label::Melanoma
        } else {
            Label::Benign
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Melanoma => "melanoma",
            Label::Benign => "benign",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "melanoma" => Ok(Label::Melanoma),
            "benign" => Ok(Label::Benign),
            other => Err(other.to_string()),
        }
    }
}

/// A decoded RGB lesion image with its ground-truth class.
#[derive(Debug, Clone)]
pub struct LabelledImage {
    pub id: String,
    pub pixels: RgbImage,
    pub label: Label,
}

impl LabelledImage {
    pub fn new(id: impl Into<String>, pixels: RgbImage, label: Label) -> Result<Self> {
        let id = id.into();
        let (width, height) = pixels.dimensions();
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::ImageTooSmall { id, width, height });
        }
        Ok(Self { id, pixels, label })
    }

    pub fn width(&self) -> u32 {
        self.pixels.width()
    }

    pub fn height(&self) -> u32 {
        self.pixels.height()
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels.width() as usize * self.pixels.height() as usize
    }
}

/// Reads a two-column `id,label` CSV with a header row.
///
/// Rows come back in file order; duplicates and unknown label tokens are errors.
pub fn read_labels(labels_file: &Path) -> Result<Vec<(String, Label)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(labels_file)
        .map_err(|e| Error::csv(labels_file, e))?;
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(labels_file, e))?;
        if record.len() != 2 {
            return Err(Error::csv(
                labels_file,
                format!("expected 2 columns, found {}", record.len()),
            ));
        }
        let id = record[0].to_string();
        let label = record[1].parse::<Label>().map_err(|token| Error::UnknownLabel {
            id: id.clone(),
            token,
        })?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        rows.push((id, label));
    }
    Ok(rows)
}

pub fn find_image_file(images_dir: &Path, id: &str) -> Option<PathBuf> {
    IMAGE_EXTENSIONS
        .iter()
        .map(|ext| images_dir.join(format!("{id}.{ext}")))
        .find(|p| p.is_file())
}

pub fn decode_rgb(path: &Path) -> Result<RgbImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.to_rgb8())
}

/// Loads every image listed in `labels_file` from `images_dir`, sorted by id.
pub fn load_corpus(images_dir: &Path, labels_file: &Path) -> Result<Vec<LabelledImage>> {
    let mut rows = read_labels(labels_file)?;
    rows.sort_by(|a, b| a.0.cmp(&b.0));

    let paths = rows
        .iter()
        .map(|(id, _)| find_image_file(images_dir, id).ok_or_else(|| Error::MissingImage(id.clone())))
        .collect::<Result<Vec<_>>>()?;

    rows.into_par_iter()
        .zip(paths.into_par_iter())
        .map(|((id, label), path)| LabelledImage::new(id, decode_rgb(&path)?, label))
        .collect()
}

/// Loads a corpus laid out as `root/images/` plus `root/labels.csv`.
pub fn load_corpus_root(root: &Path) -> Result<Vec<LabelledImage>> {
    load_corpus(&root.join("images"), &root.join("labels.csv"))
}

/// Writes a corpus in the layout read by [`load_corpus_root`]. Images are saved as PNG.
pub fn write_corpus(root: &Path, images: &[LabelledImage]) -> Result<()> {
    let images_dir = root.join("images");
    fs::create_dir_all(&images_dir).map_err(|e| Error::io(&images_dir, e))?;
    let labels_path = root.join("labels.csv");
    let mut writer = csv::Writer::from_path(&labels_path).map_err(|e| Error::csv(&labels_path, e))?;
    writer
        .write_record(["id", "label"])
        .map_err(|e| Error::csv(&labels_path, e))?;
    for img in images {
        let path = images_dir.join(format!("{}.png", img.id));
        img.pixels.save(&path).map_err(|source| Error::Image {
            path: path.clone(),
            source,
        })?;
        writer
            .write_record([img.id.as_str(), img.label.as_str()])
            .map_err(|e| Error::csv(&labels_path, e))?;
    }
    writer.flush().map_err(|e| Error::io(&labels_path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldAssignment {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignments.get(id).copied()
    }

    pub fn members(&self, fold: usize) -> impl Iterator<Item = &str> {
        self.assignments
            .iter()
            .filter(move |(_, f)| **f == fold)
            .map(|(id, _)| id.as_str())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// Seeded stratified k-fold assignment.
///
/// Each class is sorted by id, shuffled with a ChaCha8 stream seeded from `seed`, then dealt
/// round-robin into folds. The dealing position carries over from one class to the next so that
/// fold sizes stay balanced overall as well as per class.
pub fn stratified_folds(labels: &[(String, Label)], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("fold count must be >= 2, got {k}")));
    }
    let mut by_class: BTreeMap<Label, Vec<&str>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (id, label) in labels {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
        by_class.entry(*label).or_default().push(id);
    }
    for label in [Label::Melanoma, Label::Benign] {
        let count = by_class.get(&label).map_or(0, Vec::len);
        if count < k {
            return Err(Error::ClassTooSmall {
                class: label.to_string(),
                count,
                k,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = BTreeMap::new();
    let mut next = 0usize;
    for ids in by_class.values_mut() {
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        for id in ids.iter() {
            assignments.insert(id.to_string(), next % k);
            next += 1;
        }
    }
    Ok(FoldAssignment { k, seed, assignments })
}
