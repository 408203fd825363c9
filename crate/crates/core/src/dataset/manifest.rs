use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{clip_box, Annotation, CategoryId, InstanceId};

/// Reserved name of the open-world catch-all class.
pub const UNKNOWN_NAME: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(CategoryId, String)", into = "(CategoryId, String)")]
pub struct Category {
    pub id: CategoryId,
    pub name: String,
}

impl From<(CategoryId, String)> for Category {
    fn from((id, name): (CategoryId, String)) -> Self {
        Category { id, name }
    }
}

impl From<Category> for (CategoryId, String) {
    fn from(c: Category) -> Self {
        (c.id, c.name)
    }
}

/// Accepts either a JSON string or an integer as an identifier.
pub(crate) fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Id {
        S(String),
        N(u64),
    }
    Ok(match Id::deserialize(d)? {
        Id::S(s) => s,
        Id::N(n) => n.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageEntry {
    #[serde(deserialize_with = "string_or_number")]
    pub id: String,
    pub file: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Val,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            other => Err(Error::InvalidConfig(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Deserialize)]
struct RawAnnotation {
    #[serde(deserialize_with = "string_or_number")]
    image_id: String,
    bbox: crate::geometry::BBox,
    category_id: CategoryId,
    instance_id: InstanceId,
}

/// Images, their annotations and the category table of one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub categories: Vec<Category>,
    pub images: Vec<ImageEntry>,
    #[serde(deserialize_with = "de_annotations")]
    pub annotations: Vec<Annotation>,
    #[serde(default)]
    pub split: Split,
    /// Free-form provenance (seed, preset, task, ...). Omitted when empty.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub info: BTreeMap<String, serde_json::Value>,
}

fn de_annotations<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Annotation>, D::Error> {
    let raw = Vec::<RawAnnotation>::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|r| Annotation {
            image_id: r.image_id,
            bbox: r.bbox,
            category_id: r.category_id,
            instance_id: r.instance_id,
        })
        .collect())
}

impl DatasetManifest {
    pub fn new(categories: Vec<Category>, images: Vec<ImageEntry>, annotations: Vec<Annotation>, split: Split) -> Result<Self> {
        let mut m = DatasetManifest {
            categories,
            images,
            annotations,
            split,
            info: BTreeMap::new(),
        };
        m.validate()?;
        Ok(m)
    }

    /// Checks identifier uniqueness and references, and clips every box to
    /// its image frame.
    pub fn validate(&mut self) -> Result<()> {
        let mut cat_ids = HashSet::new();
        let mut cat_names = HashSet::new();
        for c in &self.categories {
            if !cat_ids.insert(c.id) {
                return Err(Error::InvalidManifest(format!("duplicate category id {}", c.id)));
            }
            if !cat_names.insert(c.name.as_str()) {
                return Err(Error::InvalidManifest(format!("duplicate category name `{}`", c.name)));
            }
        }
        let mut frames = HashMap::new();
        for img in &self.images {
            if img.width == 0 || img.height == 0 {
                return Err(Error::InvalidManifest(format!("image `{}` has zero size", img.id)));
            }
            if frames.insert(img.id.as_str(), (img.width, img.height)).is_some() {
                return Err(Error::InvalidManifest(format!("duplicate image id `{}`", img.id)));
            }
        }
        let mut instances = HashSet::new();
        for a in &mut self.annotations {
            let &(w, h) = frames
                .get(a.image_id.as_str())
                .ok_or_else(|| Error::UnknownImageId(a.image_id.clone()))?;
            if !cat_ids.contains(&a.category_id) {
                return Err(Error::InvalidManifest(format!(
                    "annotation {} references unknown category {}",
                    a.instance_id, a.category_id
                )));
            }
            if !instances.insert(a.instance_id) {
                return Err(Error::InvalidManifest(format!("duplicate instance id {}", a.instance_id)));
            }
            a.bbox = clip_box(&a.bbox, w as f64, h as f64)?;
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let mut m: DatasetManifest = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DatasetManifest::from_json_str(&text).map_err(|e| match e {
            Error::Json(j) => Error::Parse {
                path: path.to_path_buf(),
                line: j.line(),
                message: j.to_string(),
            },
            other => other,
        })
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    pub fn category_id(&self, name: &str) -> Option<CategoryId> {
        self.categories.iter().find(|c| c.name == name).map(|c| c.id)
    }

    pub fn category_name(&self, id: CategoryId) -> Option<&str> {
        self.categories.iter().find(|c| c.id == id).map(|c| c.name.as_str())
    }

    pub fn require_category(&self, name: &str) -> Result<CategoryId> {
        self.category_id(name).ok_or_else(|| Error::UnknownCategory(name.to_string()))
    }

    pub fn unknown_category(&self) -> Option<CategoryId> {
        self.category_id(UNKNOWN_NAME)
    }

    /// Id of the category called `name`, appending it (with the next free id)
    /// when missing.
    pub fn ensure_category(&mut self, name: &str) -> CategoryId {
        if let Some(id) = self.category_id(name) {
            return id;
        }
        let id = self.categories.iter().map(|c| c.id).max().map_or(1, |m| m + 1);
        self.categories.push(Category {
            id,
            name: name.to_string(),
        });
        id
    }

    pub fn next_instance_id(&self) -> InstanceId {
        self.annotations.iter().map(|a| a.instance_id).max().map_or(1, |m| m + 1)
    }

    pub fn image(&self, id: &str) -> Option<&ImageEntry> {
        self.images.iter().find(|i| i.id == id)
    }

    /// Annotations grouped per image, in manifest image order.
    pub fn annotations_by_image(&self) -> Vec<(&ImageEntry, Vec<&Annotation>)> {
        let mut groups: HashMap<&str, Vec<&Annotation>> = HashMap::new();
        for a in &self.annotations {
            groups.entry(a.image_id.as_str()).or_default().push(a);
        }
        self.images
            .iter()
            .map(|img| (img, groups.remove(img.id.as_str()).unwrap_or_default()))
            .collect()
    }

    /// Instance count per category name, including zero counts.
    pub fn instance_counts(&self) -> BTreeMap<String, usize> {
        let mut counts: BTreeMap<String, usize> = self.categories.iter().map(|c| (c.name.clone(), 0)).collect();
        for a in &self.annotations {
            if let Some(name) = self.category_name(a.category_id) {
                *counts.get_mut(name).expect("category present") += 1;
            }
        }
        counts
    }

    pub fn count_of(&self, name: &str) -> usize {
        self.category_id(name)
            .map_or(0, |id| self.annotations.iter().filter(|a| a.category_id == id).count())
    }
}
