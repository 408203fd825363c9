use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::geometry::{iou, Annotation, BBox, Detection, InstanceId};

/// Indices of `scores` sorted by descending score; equal scores keep input
/// order.
pub fn score_order(scores: impl IntoIterator<Item = f64>) -> Vec<usize> {
    let scores: Vec<f64> = scores.into_iter().collect();
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionMatch {
    /// Position of the detection in the caller's input slice.
    pub det_index: usize,
    pub score: f64,
    /// Matched ground-truth instance.
    pub truth: Option<InstanceId>,
    /// IoU with the matched instance (0 when unmatched).
    pub iou: f64,
    /// Ignored detections count as neither true nor false positives.
    pub ignored: bool,
}

impl DetectionMatch {
    pub fn is_tp(&self) -> bool {
        !self.ignored && self.truth.is_some()
    }

    pub fn is_fp(&self) -> bool {
        !self.ignored && self.truth.is_none()
    }
}

/// One image (and one category, or class-agnostic) at one IoU threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchTable {
    pub iou_threshold: f64,
    /// Detections in processing order (descending score, capped).
    pub detections: Vec<DetectionMatch>,
    /// Non-ignored ground truth left unmatched.
    pub unmatched_truth: Vec<InstanceId>,
    /// Number of non-ignored ground-truth instances.
    pub num_truth: usize,
}

impl MatchTable {
    pub fn true_positives(&self) -> usize {
        self.detections.iter().filter(|d| d.is_tp()).count()
    }

    pub fn false_positives(&self) -> usize {
        self.detections.iter().filter(|d| d.is_fp()).count()
    }

    pub fn false_negatives(&self) -> usize {
        self.unmatched_truth.len()
    }
}

/// Greedy one-to-one assignment with optional ignore handling.
///
/// Detections are processed by descending score (ties in input order) after
/// truncation to `cap`. Each takes the still-unmatched truth with the highest
/// IoU >= `threshold`, earliest truth on ties, preferring non-ignored truth.
/// A detection matched to ignored truth is ignored, as is an unmatched
/// detection for which `det_ignored` holds.
pub(crate) fn match_with_ignores(
    dets: &[(BBox, f64)],
    truth: &[(BBox, InstanceId)],
    truth_ignored: &[bool],
    det_ignored: impl Fn(&BBox) -> bool,
    threshold: f64,
    cap: usize,
) -> MatchTable {
    debug_assert_eq!(truth.len(), truth_ignored.len());
    let order: Vec<usize> = score_order(dets.iter().map(|d| d.1)).into_iter().take(cap).collect();
    let mut taken = vec![false; truth.len()];
    let mut detections = Vec::with_capacity(order.len());

    for &d in &order {
        let (dbox, score) = &dets[d];
        let mut pick: Option<(usize, f64)> = None;
        for pass_ignored in [false, true] {
            for (g, (gbox, _)) in truth.iter().enumerate() {
                if taken[g] || truth_ignored[g] != pass_ignored {
                    continue;
                }
                let v = iou(dbox, gbox);
                if v >= threshold && pick.is_none_or(|(_, best)| v > best) {
                    pick = Some((g, v));
                }
            }
            if pick.is_some() {
                break;
            }
        }
        let m = match pick {
            Some((g, v)) => {
                taken[g] = true;
                DetectionMatch {
                    det_index: d,
                    score: *score,
                    truth: Some(truth[g].1),
                    iou: v,
                    ignored: truth_ignored[g],
                }
            }
            None => DetectionMatch {
                det_index: d,
                score: *score,
                truth: None,
                iou: 0.0,
                ignored: det_ignored(dbox),
            },
        };
        detections.push(m);
    }

    let unmatched_truth = truth
        .iter()
        .zip(&taken)
        .zip(truth_ignored)
        .filter(|((_, &t), &ig)| !t && !ig)
        .map(|((g, _), _)| g.1)
        .collect();
    MatchTable {
        iou_threshold: threshold,
        detections,
        unmatched_truth,
        num_truth: truth_ignored.iter().filter(|&&ig| !ig).count(),
    }
}

/// Greedy matching of one image's detections against its ground truth.
/// Callers pass a single category, or everything for class-agnostic use.
pub fn match_greedy(dets: &[Detection], truth: &[Annotation], iou_threshold: f64, cap: usize) -> MatchTable {
    let d: Vec<(BBox, f64)> = dets.iter().map(|d| (d.bbox, d.score)).collect();
    let t: Vec<(BBox, InstanceId)> = truth.iter().map(|a| (a.bbox, a.instance_id)).collect();
    match_with_ignores(&d, &t, &vec![false; t.len()], |_| false, iou_threshold, cap)
}
