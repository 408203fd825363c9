use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Annotation, BBox, CategoryId, Detection, InstanceId, SizeBucket};

use super::matching::{match_with_ignores, score_order, MatchTable};

pub const DEFAULT_MAX_DETECTIONS: usize = 100;
pub const RECALL_POINTS: usize = 101;

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn default_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CocoParams {
    pub iou_thresholds: Vec<f64>,
    /// Per image and category (per image when class-agnostic).
    pub max_detections: usize,
    pub class_agnostic: bool,
}

impl Default for CocoParams {
    fn default() -> Self {
        CocoParams {
            iou_thresholds: default_thresholds(),
            max_detections: DEFAULT_MAX_DETECTIONS,
            class_agnostic: false,
        }
    }
}

/// Score-ranked true/false positive flags for one category (or the whole
/// dataset when class-agnostic) at one threshold.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrSlice {
    pub scores: Vec<f64>,
    pub tp: Vec<bool>,
    pub num_truth: usize,
}

impl PrSlice {
    /// Concatenates the tables' non-ignored detections in table order, then
    /// stable-sorts them by descending score.
    pub fn from_tables<'a>(tables: impl IntoIterator<Item = &'a MatchTable>) -> PrSlice {
        let mut raw = PrSlice::default();
        for t in tables {
            raw.num_truth += t.num_truth;
            for d in t.detections.iter().filter(|d| !d.ignored) {
                raw.scores.push(d.score);
                raw.tp.push(d.truth.is_some());
            }
        }
        let order = score_order(raw.scores.iter().copied());
        PrSlice {
            scores: order.iter().map(|&i| raw.scores[i]).collect(),
            tp: order.iter().map(|&i| raw.tp[i]).collect(),
            num_truth: raw.num_truth,
        }
    }

    /// (recall, precision) after each ranked detection.
    pub fn pr_curve(&self) -> Vec<(f64, f64)> {
        let n = self.num_truth.max(1) as f64;
        let (mut tp, mut fp) = (0usize, 0usize);
        self.tp
            .iter()
            .map(|&hit| {
                if hit {
                    tp += 1;
                } else {
                    fp += 1;
                }
                (tp as f64 / n, tp as f64 / (tp + fp) as f64)
            })
            .collect()
    }

    /// 101-point interpolated AP; `None` without ground truth.
    pub fn average_precision(&self) -> Option<f64> {
        if self.num_truth == 0 {
            return None;
        }
        let curve = self.pr_curve();
        let mut envelope: Vec<f64> = curve.iter().map(|p| p.1).collect();
        for i in (0..envelope.len().saturating_sub(1)).rev() {
            envelope[i] = envelope[i].max(envelope[i + 1]);
        }
        let sum: f64 = (0..RECALL_POINTS)
            .map(|r| {
                let level = r as f64 / (RECALL_POINTS - 1) as f64;
                let idx = curve.partition_point(|p| p.0 < level);
                envelope.get(idx).copied().unwrap_or(0.0)
            })
            .sum();
        Some(sum / RECALL_POINTS as f64)
    }

    /// Final recall; `None` without ground truth.
    pub fn recall(&self) -> Option<f64> {
        (self.num_truth > 0).then(|| self.tp.iter().filter(|&&t| t).count() as f64 / self.num_truth as f64)
    }
}

fn mean(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Single-slice AP over tables from every image.
pub fn average_precision(tables: &[MatchTable]) -> Option<f64> {
    PrSlice::from_tables(tables).average_precision()
}

/// Categorical AP: per-category AP averaged with equal class weights,
/// skipping categories without ground truth.
pub fn class_mean_average_precision(tables: &[(CategoryId, MatchTable)]) -> Option<f64> {
    let mut by_cat: BTreeMap<CategoryId, Vec<&MatchTable>> = BTreeMap::new();
    for (c, t) in tables {
        by_cat.entry(*c).or_default().push(t);
    }
    mean(by_cat.values().map(|ts| PrSlice::from_tables(ts.iter().copied()).average_precision()))
}

/// Matched-truth fraction averaged over thresholds. `tables[k]` holds every
/// image's table at the k-th threshold.
pub fn average_recall(tables: &[Vec<MatchTable>]) -> Option<f64> {
    mean(tables.iter().map(|ts| PrSlice::from_tables(ts).recall()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub iou_threshold: f64,
    pub ap: Option<f64>,
    pub ar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category_id: CategoryId,
    pub num_truth: usize,
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
}

/// COCO-style summary. `None` marks a cell without ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ap_all: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    pub ap_s: Option<f64>,
    pub ap_m: Option<f64>,
    pub ap_l: Option<f64>,
    pub ar_all: Option<f64>,
    pub ar_s: Option<f64>,
    pub ar_m: Option<f64>,
    pub ar_l: Option<f64>,
    pub per_threshold: Vec<ThresholdRow>,
    pub per_category: Vec<CategoryRow>,
    pub max_detections: usize,
    pub class_agnostic: bool,
    pub num_images: usize,
    pub num_detections: usize,
    pub num_truth: usize,
}

#[derive(Default)]
struct Group {
    dets: Vec<(BBox, f64)>,
    truth: Vec<(BBox, InstanceId)>,
    ignored: Vec<bool>,
}

/// Evaluates `dets` against `truth` at every threshold and size bucket.
pub fn coco_suite(dets: &[Detection], truth: &[Annotation], params: &CocoParams) -> MetricsReport {
    coco_suite_masked(dets, truth, None, params)
}

/// Like [`coco_suite`], with `truth_ignored[i]` marking ground truth that
/// neither counts as a miss nor turns a match into a false positive.
pub fn coco_suite_masked(
    dets: &[Detection],
    truth: &[Annotation],
    truth_ignored: Option<&[bool]>,
    params: &CocoParams,
) -> MetricsReport {
    let cat = |c: CategoryId| if params.class_agnostic { 0 } else { c };
    let mut groups: BTreeMap<(&str, CategoryId), Group> = BTreeMap::new();
    for (i, a) in truth.iter().enumerate() {
        let g = groups.entry((a.image_id.as_str(), cat(a.category_id))).or_default();
        g.truth.push((a.bbox, a.instance_id));
        g.ignored.push(truth_ignored.is_some_and(|m| m[i]));
    }
    for d in dets {
        let g = groups.entry((d.image_id.as_str(), cat(d.category_id))).or_default();
        g.dets.push((d.bbox, d.score));
    }

    let ranges: [Option<SizeBucket>; 4] = [None, Some(SizeBucket::Small), Some(SizeBucket::Medium), Some(SizeBucket::Large)];
    let nt = params.iou_thresholds.len();
    let keys: Vec<&(&str, CategoryId)> = groups.keys().collect();
    let tables: Vec<Vec<MatchTable>> = groups
        .values()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|g| {
            let mut out = Vec::with_capacity(ranges.len() * nt);
            for range in ranges {
                let outside = |b: &BBox| range.is_some_and(|r| SizeBucket::of_area(b.area()) != r);
                let ignored: Vec<bool> = g.truth.iter().zip(&g.ignored).map(|((b, _), &ig)| ig || outside(b)).collect();
                for &thr in &params.iou_thresholds {
                    out.push(match_with_ignores(&g.dets, &g.truth, &ignored, outside, thr, params.max_detections));
                }
            }
            out
        })
        .collect();

    let categories: BTreeSet<CategoryId> = keys.iter().map(|k| k.1).collect();
    // slice[(category, range, threshold)] -> PrSlice
    let slice = |c: CategoryId, r: usize, t: usize| {
        PrSlice::from_tables(
            keys.iter()
                .zip(&tables)
                .filter(|(k, _)| k.1 == c)
                .map(|(_, ts)| &ts[r * nt + t]),
        )
    };
    let mut ap = vec![vec![vec![None; nt]; ranges.len()]; categories.len()];
    let mut ar = ap.clone();
    for (ci, &c) in categories.iter().enumerate() {
        for r in 0..ranges.len() {
            for t in 0..nt {
                let s = slice(c, r, t);
                ap[ci][r][t] = s.average_precision();
                ar[ci][r][t] = s.recall();
            }
        }
    }

    let cell = |m: &Vec<Vec<Vec<Option<f64>>>>, r: usize, t: Option<usize>| {
        mean(m.iter().flat_map(|per_range| {
            per_range[r]
                .iter()
                .enumerate()
                .filter(move |(ti, _)| t.is_none_or(|t| t == *ti))
                .map(|(_, v)| *v)
        }))
    };
    let at = |x: f64| params.iou_thresholds.iter().position(|&t| (t - x).abs() < 1e-9);
    let fixed = |x: f64| at(x).and_then(|t| cell(&ap, 0, Some(t)));

    let per_category = categories
        .iter()
        .enumerate()
        .map(|(ci, &c)| CategoryRow {
            category_id: c,
            num_truth: truth
                .iter()
                .enumerate()
                .filter(|(i, a)| cat(a.category_id) == c && !truth_ignored.is_some_and(|m| m[*i]))
                .count(),
            ap: mean(ap[ci][0].iter().copied()),
            ap50: at(0.5).and_then(|t| ap[ci][0][t]),
        })
        .filter(|row| row.num_truth > 0)
        .collect();

    let images: BTreeSet<&str> = keys.iter().map(|k| k.0).collect();
    MetricsReport {
        ap_all: cell(&ap, 0, None),
        ap50: fixed(0.5),
        ap75: fixed(0.75),
        ap_s: cell(&ap, 1, None),
        ap_m: cell(&ap, 2, None),
        ap_l: cell(&ap, 3, None),
        ar_all: cell(&ar, 0, None),
        ar_s: cell(&ar, 1, None),
        ar_m: cell(&ar, 2, None),
        ar_l: cell(&ar, 3, None),
        per_threshold: params
            .iou_thresholds
            .iter()
            .enumerate()
            .map(|(t, &thr)| ThresholdRow {
                iou_threshold: thr,
                ap: cell(&ap, 0, Some(t)),
                ar: cell(&ar, 0, Some(t)),
            })
            .collect(),
        per_category,
        max_detections: params.max_detections,
        class_agnostic: params.class_agnostic,
        num_images: images.len(),
        num_detections: dets.len(),
        num_truth: truth_ignored.map_or(truth.len(), |m| m.iter().filter(|&&ig| !ig).count()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(img: &str, cat: u32, id: u64, b: [f64; 4]) -> Annotation {
        Annotation {
            image_id: img.into(),
            bbox: BBox::try_from(b).unwrap(),
            category_id: cat,
            instance_id: id,
        }
    }

    fn det(img: &str, cat: u32, score: f64, b: [f64; 4]) -> Detection {
        Detection::new(img, BBox::try_from(b).unwrap(), cat, score).unwrap()
    }

    #[test]
    fn two_detection_pr_example() {
        let truth = [ann("a", 1, 1, [0., 0., 10., 10.])];
        let tp_first = [det("a", 1, 0.9, [0., 0., 10., 10.]), det("a", 1, 0.8, [50., 50., 10., 10.])];
        let fp_first = [det("a", 1, 0.8, [0., 0., 10., 10.]), det("a", 1, 0.9, [50., 50., 10., 10.])];
        let p = CocoParams::default();
        assert_eq!(coco_suite(&tp_first, &truth, &p).ap50, Some(1.0));
        let r = coco_suite(&fp_first, &truth, &p).ap50.unwrap();
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn recall_averaged_over_thresholds() {
        // 2 of 4 truths matched at 0.5..0.70, 1 of 4 at 0.75..0.95
        let slices: Vec<PrSlice> = default_thresholds()
            .iter()
            .map(|&t| PrSlice {
                scores: vec![0.9, 0.8],
                tp: if t < 0.74 { vec![true, true] } else { vec![true, false] },
                num_truth: 4,
            })
            .collect();
        let ar = mean(slices.iter().map(PrSlice::recall)).unwrap();
        assert!((ar - 0.375).abs() < 1e-12);
    }

    #[test]
    fn empty_detections_score_zero() {
        let truth = [ann("a", 1, 1, [0., 0., 10., 10.]), ann("a", 2, 2, [0., 0., 100., 100.])];
        let r = coco_suite(&[], &truth, &CocoParams::default());
        assert_eq!(r.ap_all, Some(0.0));
        assert_eq!(r.ar_all, Some(0.0));
        assert_eq!(r.ap_s, Some(0.0));
        assert_eq!(r.ap_m, None);
    }

    #[test]
    fn no_truth_is_undefined() {
        let r = coco_suite(&[det("a", 1, 0.5, [0., 0., 5., 5.])], &[], &CocoParams::default());
        assert_eq!((r.ap_all, r.ar_all, r.ap50), (None, None, None));
        assert!(r.per_category.is_empty());
    }

    #[test]
    fn perfect_detector() {
        let truth: Vec<_> = [4., 50., 120.]
            .iter()
            .enumerate()
            .map(|(i, &s)| ann("a", 1 + i as u32 % 2, i as u64, [200. * i as f64, 0., s, s]))
            .collect();
        let dets: Vec<_> = truth.iter().map(|a| Detection::new("a", a.bbox, a.category_id, 0.7).unwrap()).collect();
        let r = coco_suite(&dets, &truth, &CocoParams::default());
        for v in [r.ap_all, r.ap50, r.ap75, r.ap_s, r.ap_m, r.ap_l, r.ar_all, r.ar_s, r.ar_m, r.ar_l] {
            assert_eq!(v, Some(1.0));
        }
    }

    #[test]
    fn out_of_bucket_detection_is_ignored() {
        // a small truth and a large false positive: the small bucket ignores
        // the large detection, the large bucket has no truth
        let truth = [ann("a", 1, 1, [0., 0., 10., 10.])];
        let dets = [det("a", 1, 0.9, [100., 100., 200., 200.]), det("a", 1, 0.5, [0., 0., 10., 10.])];
        let r = coco_suite(&dets, &truth, &CocoParams::default());
        assert_eq!(r.ap_s, Some(1.0));
        assert_eq!(r.ap_l, None);
        assert!(r.ap_all.unwrap() < 1.0);
    }

    #[test]
    fn masked_truth_is_neutral() {
        let truth = [ann("a", 1, 1, [0., 0., 10., 10.]), ann("a", 1, 2, [50., 0., 10., 10.])];
        let dets = [det("a", 1, 0.9, [50., 0., 10., 10.]), det("a", 1, 0.8, [0., 0., 10., 10.])];
        let r = coco_suite_masked(&dets, &truth, Some(&[false, true]), &CocoParams::default());
        assert_eq!(r.ap_all, Some(1.0));
        assert_eq!(r.num_truth, 1);
    }

    #[test]
    fn class_agnostic_pools_categories() {
        let truth = [ann("a", 1, 1, [0., 0., 10., 10.])];
        let dets = [det("a", 2, 0.9, [0., 0., 10., 10.])];
        let agnostic = CocoParams {
            class_agnostic: true,
            ..Default::default()
        };
        assert_eq!(coco_suite(&dets, &truth, &agnostic).ap_all, Some(1.0));
        assert_eq!(coco_suite(&dets, &truth, &CocoParams::default()).ap_all, Some(0.0));
    }
}
