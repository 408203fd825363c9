use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, Annotation, CategoryId, Detection};

use super::matching::score_order;

pub const WI_IOU: f64 = 0.5;
pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.05;
pub const WI_RECALL_LEVEL: f64 = 0.8;

/// `P_K / P_{K∪U} - 1`.
pub fn wilderness_from_precisions(p_known: f64, p_mixed: f64) -> Result<f64> {
    if !(p_mixed > 0.0) {
        return Err(Error::DegenerateDenominator);
    }
    Ok(p_known / p_mixed - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallOperatingPoint {
    pub recall_level: f64,
    /// Highest score cut at which known-class recall reaches the level.
    pub score_threshold: f64,
    pub known_recall: f64,
    pub p_known: f64,
    pub p_mixed: f64,
    /// Absent when `p_mixed` is zero at this cut.
    pub wi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WildernessReport {
    pub iou_threshold: f64,
    pub score_threshold: f64,
    pub detections: usize,
    pub tp_known: usize,
    pub tp_mixed: usize,
    /// Detections whose match against known and unknown truth landed on an
    /// unknown object.
    pub absorbed_by_unknown: usize,
    pub p_known: f64,
    pub p_mixed: f64,
    pub wi: f64,
    pub at_recall: Option<RecallOperatingPoint>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Outcome {
    score: f64,
    tp_known: bool,
    tp_mixed: bool,
    absorbed: bool,
}

fn by_image<'a, T>(items: &'a [T], image: impl Fn(&T) -> &str) -> HashMap<&'a str, Vec<usize>> {
    let mut map: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, it) in items.iter().enumerate() {
        map.entry(image(it)).or_default().push(i);
    }
    map
}

/// Best unmatched candidate at IoU >= `thr`, earliest on ties.
fn best<'a>(
    det: &Detection,
    candidates: impl Iterator<Item = (usize, &'a Annotation)>,
    taken: &[bool],
    thr: f64,
) -> Option<usize> {
    let mut pick: Option<(usize, f64)> = None;
    for (k, a) in candidates {
        if taken[k] {
            continue;
        }
        let v = iou(&det.bbox, &a.bbox);
        if v >= thr && pick.is_none_or(|(_, b)| v > b) {
            pick = Some((k, v));
        }
    }
    pick.map(|p| p.0)
}

/// Matches every detection in score order. Because matching is greedy per
/// image, the outcome of a detection never depends on lower-scored ones, so
/// any score cut is a prefix of this list.
fn outcomes(dets: &[Detection], known: &[Annotation], unknown: &[Annotation]) -> Vec<Outcome> {
    let known_by = by_image(known, |a| &a.image_id);
    let unknown_by = by_image(unknown, |a| &a.image_id);
    let mut taken_k = vec![false; known.len()];
    let mut taken_mk = vec![false; known.len()];
    let mut taken_mu = vec![false; unknown.len()];
    let empty = Vec::new();

    let order = score_order(dets.iter().map(|d| d.score));
    let mut out = Vec::with_capacity(dets.len());
    for i in order {
        let d = &dets[i];
        let ks = known_by.get(d.image_id.as_str()).unwrap_or(&empty);
        let us = unknown_by.get(d.image_id.as_str()).unwrap_or(&empty);
        let same_class = || ks.iter().map(|&k| (k, &known[k])).filter(|(_, a)| a.category_id == d.category_id);

        let tp_known = best(d, same_class(), &taken_k, WI_IOU).inspect(|&k| taken_k[k] = true).is_some();

        let mk = best(d, same_class(), &taken_mk, WI_IOU);
        let mu = best(d, us.iter().map(|&u| (u, &unknown[u])), &taken_mu, WI_IOU);
        let (tp_mixed, absorbed) = match (mk, mu) {
            (Some(k), Some(u)) if iou(&d.bbox, &unknown[u].bbox) > iou(&d.bbox, &known[k].bbox) => {
                taken_mu[u] = true;
                (false, true)
            }
            (Some(k), _) => {
                taken_mk[k] = true;
                (true, false)
            }
            (None, Some(u)) => {
                taken_mu[u] = true;
                (false, true)
            }
            (None, None) => (false, false),
        };
        out.push(Outcome {
            score: d.score,
            tp_known,
            tp_mixed,
            absorbed,
        });
    }
    out
}

fn precisions(prefix: &[Outcome]) -> (usize, usize, usize, f64, f64) {
    let n = prefix.len();
    let tk = prefix.iter().filter(|o| o.tp_known).count();
    let tm = prefix.iter().filter(|o| o.tp_mixed).count();
    let ab = prefix.iter().filter(|o| o.absorbed).count();
    let p = |t: usize| if n == 0 { 0.0 } else { t as f64 / n as f64 };
    (tk, tm, ab, p(tk), p(tm))
}

/// Wilderness impact of the unknown objects on known-class precision at
/// IoU 0.5, for detections scoring at least `score_threshold`.
///
/// `P_K` matches detections against same-class known truth. `P_{K∪U}`
/// matches the same detections against known and unknown truth together; a
/// detection landing on an unknown object is a false positive.
pub fn wilderness_impact(
    dets: &[Detection],
    known: &[Annotation],
    unknown: &[Annotation],
    score_threshold: f64,
) -> Result<WildernessReport> {
    let all = outcomes(dets, known, unknown);
    let cut = all.partition_point(|o| o.score >= score_threshold);
    let (tp_known, tp_mixed, absorbed, p_known, p_mixed) = precisions(&all[..cut]);
    let wi = wilderness_from_precisions(p_known, p_mixed)?;

    let mut at_recall = None;
    if !known.is_empty() {
        let mut hits = 0usize;
        for (i, o) in all.iter().enumerate() {
            hits += o.tp_known as usize;
            let boundary = all.get(i + 1).is_none_or(|next| next.score < o.score);
            let recall = hits as f64 / known.len() as f64;
            if boundary && recall >= WI_RECALL_LEVEL {
                let (_, _, _, pk, pm) = precisions(&all[..=i]);
                at_recall = Some(RecallOperatingPoint {
                    recall_level: WI_RECALL_LEVEL,
                    score_threshold: o.score,
                    known_recall: recall,
                    p_known: pk,
                    p_mixed: pm,
                    wi: wilderness_from_precisions(pk, pm).ok(),
                });
                break;
            }
        }
    }

    Ok(WildernessReport {
        iou_threshold: WI_IOU,
        score_threshold,
        detections: cut,
        tp_known,
        tp_mixed,
        absorbed_by_unknown: absorbed,
        p_known,
        p_mixed,
        wi,
        at_recall,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OseReport {
    pub iou_threshold: f64,
    pub score_threshold: f64,
    pub unknown_truth: usize,
    pub a_ose: usize,
    /// Absorbed unknowns keyed by the detection's known class.
    pub per_class: BTreeMap<CategoryId, usize>,
}

/// Number of unknown objects claimed by a known-class detection: greedy
/// one-to-one matching of detections scoring at least `score_threshold`
/// against unknown truth.
pub fn absolute_open_set_error(
    dets: &[Detection],
    unknown: &[Annotation],
    iou_threshold: f64,
    score_threshold: f64,
) -> OseReport {
    let unknown_by = by_image(unknown, |a| &a.image_id);
    let mut taken = vec![false; unknown.len()];
    let mut per_class: BTreeMap<CategoryId, usize> = BTreeMap::new();
    for i in score_order(dets.iter().map(|d| d.score)) {
        let d = &dets[i];
        if d.score < score_threshold {
            break;
        }
        let Some(us) = unknown_by.get(d.image_id.as_str()) else {
            continue;
        };
        if let Some(u) = best(d, us.iter().map(|&u| (u, &unknown[u])), &taken, iou_threshold) {
            taken[u] = true;
            *per_class.entry(d.category_id).or_default() += 1;
        }
    }
    OseReport {
        iou_threshold,
        score_threshold,
        unknown_truth: unknown.len(),
        a_ose: per_class.values().sum(),
        per_class,
    }
}
