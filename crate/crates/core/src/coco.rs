//! COCO-style instance annotation ingestion.
//!
//! Turns detection annotations into ground-truth counting triples: one
//! [`CountInstance`] per `(image, category)` pair that has at least one
//! bounding box and no crowd box. Crowd boxes do not correspond to a single
//! countable object, so a crowd annotation poisons its whole
//! `(image, category)` pair rather than just being skipped.

use crate::jsonl::Schema;
use serde::{Deserialize, Deserializer, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        path: PathBuf,
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("annotation {index} references unknown image_id {image_id}")]
    DanglingImage { index: usize, image_id: u64 },
    #[error("annotation {index} references unknown category_id {category_id}")]
    DanglingCategory { index: usize, category_id: u64 },
    #[error("duplicate category name {name:?} (ids {first} and {second})")]
    DuplicateCategoryName {
        name: String,
        first: u64,
        second: u64,
    },
}

/// Parsed COCO instances file. Fields beyond the ones needed for counting
/// are ignored on deserialization.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct AnnotationFile {
    #[serde(default)]
    pub images: Vec<ImageEntry>,
    #[serde(default)]
    pub annotations: Vec<AnnotationEntry>,
    #[serde(default)]
    pub categories: Vec<CategoryEntry>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ImageEntry {
    pub id: u64,
    #[serde(default)]
    pub file_name: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AnnotationEntry {
    pub image_id: u64,
    pub category_id: u64,
    #[serde(default, deserialize_with = "deserialize_iscrowd")]
    pub iscrowd: bool,
    #[serde(default)]
    pub bbox: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CategoryEntry {
    pub id: u64,
    pub name: String,
}

// MSCOCO writes iscrowd as 0/1 but some exporters use booleans.
fn deserialize_iscrowd<'de, D>(deserializer: D) -> Result<bool, D::Error>
where
    D: Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum IsCrowd {
        Int(u8),
        Bool(bool),
    }
    Ok(match IsCrowd::deserialize(deserializer)? {
        IsCrowd::Int(i) => i != 0,
        IsCrowd::Bool(b) => b,
    })
}

/// One ground-truth counting triple: `count` instances of `category` are
/// visible in the image. `count` is always at least 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CountInstance {
    pub image_id: u64,
    pub image_ref: String,
    pub category: String,
    pub count: u32,
}

impl Schema for CountInstance {
    const TAG: &'static str = "ci/1";
}

impl AnnotationFile {
    /// Verify referential integrity: every annotation points at a known
    /// image and category, and category names are unique.
    pub fn verify_integrity(&self) -> Result<(), IngestError> {
        let image_ids: HashSet<u64> = self.images.iter().map(|i| i.id).collect();
        let mut names: HashMap<&str, u64> = HashMap::new();
        for cat in &self.categories {
            if let Some(&first) = names.get(cat.name.as_str()) {
                return Err(IngestError::DuplicateCategoryName {
                    name: cat.name.clone(),
                    first,
                    second: cat.id,
                });
            }
            names.insert(&cat.name, cat.id);
        }
        let category_ids: HashSet<u64> = self.categories.iter().map(|c| c.id).collect();
        for (index, ann) in self.annotations.iter().enumerate() {
            if !image_ids.contains(&ann.image_id) {
                return Err(IngestError::DanglingImage {
                    index,
                    image_id: ann.image_id,
                });
            }
            if !category_ids.contains(&ann.category_id) {
                return Err(IngestError::DanglingCategory {
                    index,
                    category_id: ann.category_id,
                });
            }
        }
        Ok(())
    }
}

/// Load and integrity-check a COCO instances JSON file.
pub fn load_annotations(path: &Path) -> Result<AnnotationFile, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| IngestError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let file: AnnotationFile = serde_json::from_str(&text).map_err(|e| IngestError::Json {
        path: path.to_path_buf(),
        offset: byte_offset(&text, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.verify_integrity()?;
    Ok(file)
}

// serde_json reports 1-based line/column; recover the byte offset for the
// error message.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (idx, l) in text.split('\n').enumerate() {
        if idx + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len() + 1;
    }
    text.len()
}

/// Build the counting dataset from a verified annotation file.
///
/// For each `(image, category)` pair the count is the number of its
/// annotations; the pair is dropped entirely if any of those annotations is
/// a crowd box. Zero counts never materialize because counts come from
/// annotation presence. Output is sorted by `(image_id, category)`.
pub fn build_count_dataset(file: &AnnotationFile) -> Vec<CountInstance> {
    let image_refs: HashMap<u64, &str> = file
        .images
        .iter()
        .map(|i| (i.id, i.file_name.as_str()))
        .collect();
    let category_names: HashMap<u64, &str> = file
        .categories
        .iter()
        .map(|c| (c.id, c.name.as_str()))
        .collect();

    let mut counts: BTreeMap<(u64, &str), u32> = BTreeMap::new();
    let mut crowded: BTreeSet<(u64, &str)> = BTreeSet::new();
    for ann in &file.annotations {
        let name = category_names
            .get(&ann.category_id)
            .expect("integrity verified: category exists");
        let key = (ann.image_id, *name);
        if ann.iscrowd {
            crowded.insert(key);
        } else {
            *counts.entry(key).or_insert(0) += 1;
        }
    }

    counts
        .into_iter()
        .filter(|(key, _)| !crowded.contains(key))
        .map(|((image_id, category), count)| CountInstance {
            image_id,
            image_ref: image_refs
                .get(&image_id)
                .expect("integrity verified: image exists")
                .to_string(),
            category: category.to_string(),
            count,
        })
        .collect()
}
