//! Open-world relabeling of a training set from class-agnostic proposals.
//!
//! Each proposal is compared with the image's ground truth. A proposal whose
//! best IoU is strictly greater than `alpha` duplicates a labeled object and
//! is dropped; every other proposal becomes a new annotation of the reserved
//! `unknown` class. Near-identical unknowns (IoU >= `dedup_iou`) collapse to
//! the first one seen.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{string_or_number, DatasetManifest, UNKNOWN_NAME};
use crate::error::{Error, Result};
use crate::geometry::{clip_box, iou, Annotation, BBox, CategoryId, InstanceId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalSource {
    #[default]
    ExternalDetector,
    PriorKnowledge,
}

/// Class-agnostic boxes for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalSet {
    pub image_id: String,
    pub boxes: Vec<BBox>,
    pub scores: Vec<Option<f64>>,
    pub source: ProposalSource,
}

impl ProposalSet {
    pub fn new(image_id: impl Into<String>, boxes: Vec<BBox>, source: ProposalSource) -> Self {
        let scores = vec![None; boxes.len()];
        ProposalSet {
            image_id: image_id.into(),
            boxes,
            scores,
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelabelConfig {
    pub alpha: f64,
    pub dedup_iou: f64,
}

impl Default for RelabelConfig {
    fn default() -> Self {
        RelabelConfig {
            alpha: 0.3,
            dedup_iou: 0.9,
        }
    }
}

impl RelabelConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        RelabelConfig {
            alpha,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.dedup_iou > 0.0 && self.dedup_iou <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "dedup_iou must lie in (0, 1], got {}",
                self.dedup_iou
            )));
        }
        Ok(())
    }
}

/// Index of the ground-truth box a proposal is matched to, if any: the best
/// IoU must exceed `alpha`; equal IoUs resolve to the earliest box.
pub fn match_known(proposal: &BBox, truth: &[&BBox], alpha: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in truth.iter().enumerate() {
        let v = iou(proposal, t);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.filter(|&(_, v)| v > alpha).map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelabelCounts {
    pub proposals: usize,
    pub known_matched: usize,
    pub unknown_added: usize,
    pub deduped: usize,
    /// Proposals that fell completely outside their image.
    pub outside_frame: usize,
}

impl std::ops::AddAssign for RelabelCounts {
    fn add_assign(&mut self, o: Self) {
        self.proposals += o.proposals;
        self.known_matched += o.known_matched;
        self.unknown_added += o.unknown_added;
        self.deduped += o.deduped;
        self.outside_frame += o.outside_frame;
    }
}

/// Unknown boxes to add for one image, in proposal order.
fn discover_unknowns(
    boxes: &[BBox],
    truth: &[&Annotation],
    cfg: &RelabelConfig,
    unknown: CategoryId,
) -> (Vec<BBox>, RelabelCounts) {
    let truth_boxes: Vec<&BBox> = truth.iter().map(|a| &a.bbox).collect();
    let mut kept: Vec<BBox> = truth.iter().filter(|a| a.category_id == unknown).map(|a| a.bbox).collect();
    let already = kept.len();
    let mut counts = RelabelCounts {
        proposals: boxes.len(),
        ..Default::default()
    };
    for p in boxes {
        if match_known(p, &truth_boxes, cfg.alpha).is_some() {
            counts.known_matched += 1;
        } else if kept.iter().any(|k| iou(p, k) >= cfg.dedup_iou) {
            counts.deduped += 1;
        } else {
            kept.push(*p);
            counts.unknown_added += 1;
        }
    }
    (kept.split_off(already), counts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelabelOutcome {
    /// Ground truth followed by the new unknown annotations.
    pub annotations: Vec<Annotation>,
    pub counts: RelabelCounts,
}

/// Relabels a single image. New unknown annotations get instance ids above
/// the largest one in `truth`.
pub fn relabel_image(
    proposals: &ProposalSet,
    truth: &[Annotation],
    cfg: &RelabelConfig,
    unknown_category: CategoryId,
) -> Result<RelabelOutcome> {
    cfg.validate()?;
    if let Some(a) = truth.iter().find(|a| a.image_id != proposals.image_id) {
        return Err(Error::ImageIdMismatch {
            proposals: proposals.image_id.clone(),
            truth: a.image_id.clone(),
        });
    }
    let refs: Vec<&Annotation> = truth.iter().collect();
    let (unknowns, counts) = discover_unknowns(&proposals.boxes, &refs, cfg, unknown_category);
    let mut next = truth.iter().map(|a| a.instance_id).max().map_or(1, |m| m + 1);
    let mut annotations = truth.to_vec();
    for bbox in unknowns {
        annotations.push(Annotation {
            image_id: proposals.image_id.clone(),
            bbox,
            category_id: unknown_category,
            instance_id: next,
        });
        next += 1;
    }
    Ok(RelabelOutcome { annotations, counts })
}

/// Relabels every image that has proposals. The reserved `unknown` class is
/// appended to the category table if missing; new annotations are appended
/// after the existing ones in manifest image order.
pub fn relabel_dataset(
    manifest: &DatasetManifest,
    proposals: &BTreeMap<String, ProposalSet>,
    cfg: &RelabelConfig,
) -> Result<(DatasetManifest, RelabelCounts)> {
    cfg.validate()?;
    if let Some(id) = proposals.keys().find(|id| manifest.image(id).is_none()) {
        return Err(Error::UnknownImageId(id.clone()));
    }
    let mut out = manifest.clone();
    let unknown = out.ensure_category(UNKNOWN_NAME);

    let per_image = manifest.annotations_by_image();
    let results: Vec<(Vec<BBox>, RelabelCounts)> = per_image
        .par_iter()
        .filter_map(|(img, anns)| proposals.get(&img.id).map(|p| (img, anns, p)))
        .map(|(img, anns, p)| {
            let mut clipped = Vec::with_capacity(p.boxes.len());
            let mut outside = 0;
            for b in &p.boxes {
                match clip_box(b, img.width as f64, img.height as f64) {
                    Ok(c) => clipped.push(c),
                    Err(_) => outside += 1,
                }
            }
            let (found, mut counts) = discover_unknowns(&clipped, anns, cfg, unknown);
            counts.outside_frame = outside;
            counts.proposals += outside;
            (found, counts)
        })
        .collect();

    let with_proposals = per_image.iter().filter(|(img, _)| proposals.contains_key(&img.id));
    let mut next: InstanceId = manifest.next_instance_id();
    let mut total = RelabelCounts::default();
    for ((img, _), (found, counts)) in with_proposals.zip(results) {
        total += counts;
        for bbox in found {
            out.annotations.push(Annotation {
                image_id: img.id.clone(),
                bbox,
                category_id: unknown,
                instance_id: next,
            });
            next += 1;
        }
    }
    Ok((out, total))
}

#[derive(Deserialize)]
struct ProposalLine {
    #[serde(deserialize_with = "string_or_number")]
    image_id: String,
    bbox: BBox,
    #[serde(default)]
    score: Option<f64>,
}

/// Reads proposals from JSON lines `{"image_id", "bbox": [x, y, w, h], "score"?}`.
pub fn read_proposals_jsonl(path: impl AsRef<Path>, source: ProposalSource) -> Result<BTreeMap<String, ProposalSet>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_proposals_jsonl(&text, source).map_err(|(line, message)| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

pub fn parse_proposals_jsonl(
    text: &str,
    source: ProposalSource,
) -> std::result::Result<BTreeMap<String, ProposalSet>, (usize, String)> {
    let mut out: BTreeMap<String, ProposalSet> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: ProposalLine = serde_json::from_str(line).map_err(|e| (i + 1, e.to_string()))?;
        let set = out
            .entry(p.image_id.clone())
            .or_insert_with(|| ProposalSet::new(p.image_id, Vec::new(), source));
        set.boxes.push(p.bbox);
        set.scores.push(p.score);
    }
    Ok(out)
}
