//! Importer for KITTI object-detection label files.
//!
//! Each `<id>.txt` holds one object per line: `type truncated occluded alpha
//! left top right bottom ...`. `DontCare` lines are skipped.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{clip_box, Annotation, BBox};

use super::manifest::{Category, DatasetManifest, ImageEntry, Split};

pub const KITTI_CLASSES: [&str; 8] = ["car", "van", "truck", "pedestrian", "person_sitting", "cyclist", "tram", "misc"];

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Parses one label file into `(class name, box)` pairs, without clipping.
pub fn parse_label_file(path: &Path) -> Result<Vec<(String, BBox)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 8 {
            return Err(parse_error(path, i + 1, format!("expected at least 8 fields, got {}", fields.len())));
        }
        let class = fields[0].to_ascii_lowercase();
        if class == "dontcare" {
            continue;
        }
        if !KITTI_CLASSES.contains(&class.as_str()) {
            return Err(parse_error(path, i + 1, format!("unknown KITTI class `{}`", fields[0])));
        }
        let mut corners = [0.0; 4];
        for (k, f) in fields[4..8].iter().enumerate() {
            corners[k] = f
                .parse()
                .map_err(|_| parse_error(path, i + 1, format!("bad coordinate `{f}`")))?;
        }
        let [l, t, r, b] = corners;
        let bbox = BBox::from_corners(l, t, r, b).map_err(|e| parse_error(path, i + 1, e.to_string()))?;
        out.push((class, bbox));
    }
    Ok(out)
}

/// Builds a manifest from a KITTI `label_2` directory. Image sizes are read
/// from `<image_dir>/<id>.<image_ext>` headers; the manifest stores image
/// paths as given by `image_dir`.
pub fn import_kitti(label_dir: &Path, image_dir: &Path, image_ext: &str, split: Split) -> Result<DatasetManifest> {
    let mut labels: Vec<PathBuf> = fs::read_dir(label_dir)
        .map_err(|e| Error::io(label_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    labels.sort();

    let categories: Vec<Category> = KITTI_CLASSES
        .iter()
        .enumerate()
        .map(|(i, n)| Category {
            id: i as u32 + 1,
            name: n.to_string(),
        })
        .collect();

    let mut images = Vec::new();
    let mut annotations = Vec::new();
    for label in &labels {
        let stem = label
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| parse_error(label, 0, "non-UTF-8 file name"))?
            .to_string();
        let image_path = image_dir.join(format!("{stem}.{image_ext}"));
        let (w, h) = image::image_dimensions(&image_path).map_err(|source| Error::Decode {
            path: image_path.clone(),
            source,
        })?;
        for (class, bbox) in parse_label_file(label)? {
            let category_id = KITTI_CLASSES.iter().position(|c| *c == class).expect("validated class") as u32 + 1;
            annotations.push(Annotation {
                image_id: stem.clone(),
                bbox: clip_box(&bbox, w as f64, h as f64)?,
                category_id,
                instance_id: annotations.len() as u64 + 1,
            });
        }
        images.push(ImageEntry {
            id: stem,
            file: image_path.to_string_lossy().into_owned(),
            width: w,
            height: h,
        });
    }
    DatasetManifest::new(categories, images, annotations, split)
}
