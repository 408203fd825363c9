//! Brute-force reference implementations for the acceptance checks. None of
//! this calls into the library.

#![allow(dead_code)]

use std::f64::consts::PI;

pub type Cx = (f64, f64);

fn cmul(a: Cx, b: Cx) -> Cx {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// Direct double-sum 2-D DFT of a row-major `w x h` grid. The inverse is
/// scaled by `1 / (w h)`.
pub fn naive_dft2d(data: &[Cx], w: usize, h: usize, inverse: bool) -> Vec<Cx> {
    let sign = if inverse { 1.0 } else { -1.0 };
    let table = |n: usize| -> Vec<Cx> {
        (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                (a.cos(), sign * a.sin())
            })
            .collect()
    };
    let (tw, th) = (table(w), table(h));
    let scale = if inverse { 1.0 / (w * h) as f64 } else { 1.0 };
    let mut out = vec![(0.0, 0.0); w * h];
    for v in 0..h {
        for u in 0..w {
            let mut acc = (0.0, 0.0);
            for y in 0..h {
                let ty = th[(v * y) % h];
                for x in 0..w {
                    let t = cmul(tw[(u * x) % w], ty);
                    let p = cmul(data[y * w + x], t);
                    acc.0 += p.0;
                    acc.1 += p.1;
                }
            }
            out[v * w + u] = (acc.0 * scale, acc.1 * scale);
        }
    }
    out
}

/// `[x, y, w, h]` boxes.
pub fn box_iou(a: [f64; 4], b: [f64; 4]) -> f64 {
    let ix = (a[0] + a[2]).min(b[0] + b[2]) - a[0].max(b[0]);
    let iy = (a[1] + a[3]).min(b[1] + b[3]) - a[1].max(b[1]);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a[2] * a[3] + b[2] * b[3] - inter)
}

/// Detection indices by descending score, input order on ties.
pub fn rank(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // insertion sort keeps equal scores in input order
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && scores[idx[j - 1]] < scores[idx[j]] {
            idx.swap(j - 1, j);
            j -= 1;
        }
    }
    idx
}

/// Every one-to-one partial assignment of ranked detections to truth with
/// IoU >= `thr`. `visit` receives `assign[k]` for the k-th ranked detection.
fn enumerate(
    dets: &[[f64; 4]],
    order: &[usize],
    truth: &[[f64; 4]],
    thr: f64,
    k: usize,
    used: &mut Vec<bool>,
    assign: &mut Vec<Option<usize>>,
    visit: &mut dyn FnMut(&[Option<usize>]),
) {
    if k == order.len() {
        visit(assign);
        return;
    }
    assign.push(None);
    enumerate(dets, order, truth, thr, k + 1, used, assign, visit);
    assign.pop();
    for g in 0..truth.len() {
        if !used[g] && box_iou(dets[order[k]], truth[g]) >= thr {
            used[g] = true;
            assign.push(Some(g));
            enumerate(dets, order, truth, thr, k + 1, used, assign, visit);
            assign.pop();
            used[g] = false;
        }
    }
}

/// Exhaustive search for the assignment that is lexicographically best in
/// rank order: the top-ranked detection gets the highest IoU it can have
/// (earliest truth on ties), then the next one, and so on.
pub fn priority_assignment(dets: &[[f64; 4]], scores: &[f64], truth: &[[f64; 4]], thr: f64) -> Vec<Option<usize>> {
    let order = rank(scores);
    let key = |a: &[Option<usize>]| -> Vec<(f64, i64)> {
        a.iter()
            .enumerate()
            .map(|(k, m)| match m {
                Some(g) => (box_iou(dets[order[k]], truth[*g]), -(*g as i64)),
                None => (-1.0, 0),
            })
            .collect()
    };
    let mut best: Option<(Vec<(f64, i64)>, Vec<Option<usize>>)> = None;
    let mut visit = |a: &[Option<usize>]| {
        let k = key(a);
        let better = match &best {
            None => true,
            Some((bk, _)) => k.partial_cmp(bk) == Some(std::cmp::Ordering::Greater),
        };
        if better {
            best = Some((k, a.to_vec()));
        }
    };
    enumerate(dets, &order, truth, thr, 0, &mut vec![false; truth.len()], &mut Vec::new(), &mut visit);
    best.map(|b| b.1).unwrap_or_default()
}

/// Largest number of detection/truth pairs that can be matched at once.
pub fn max_cardinality(dets: &[[f64; 4]], scores: &[f64], truth: &[[f64; 4]], thr: f64) -> usize {
    let order = rank(scores);
    let mut best = 0;
    let mut visit = |a: &[Option<usize>]| best = best.max(a.iter().flatten().count());
    enumerate(dets, &order, truth, thr, 0, &mut vec![false; truth.len()], &mut Vec::new(), &mut visit);
    best
}

/// Unknown boxes a relabeling pass should add: a proposal is known when its
/// best IoU with any truth box is strictly above `alpha`; remaining proposals
/// are kept unless they overlap an existing unknown (truth or kept) by at
/// least `dedup`.
pub fn relabel_oracle(
    proposals: &[[f64; 4]],
    truth: &[([f64; 4], bool)],
    alpha: f64,
    dedup: f64,
) -> (Vec<[f64; 4]>, usize) {
    let mut kept: Vec<[f64; 4]> = truth.iter().filter(|t| t.1).map(|t| t.0).collect();
    let seeded = kept.len();
    let mut known = 0;
    for &p in proposals {
        let best = truth.iter().map(|t| box_iou(p, t.0)).fold(f64::NEG_INFINITY, f64::max);
        if best > alpha {
            known += 1;
        } else if !kept.iter().any(|&k| box_iou(p, k) >= dedup) {
            kept.push(p);
        }
    }
    (kept.split_off(seeded), known)
}

/// 101-point interpolated AP from ranked hit flags.
pub fn interpolated_ap(hits: &[bool], num_truth: usize) -> f64 {
    let mut points = Vec::new();
    let (mut tp, mut n) = (0.0, 0.0);
    for &h in hits {
        n += 1.0;
        if h {
            tp += 1.0;
        }
        points.push((tp / num_truth as f64, tp / n));
    }
    (0..=100)
        .map(|r| {
            let level = r as f64 / 100.0;
            points
                .iter()
                .filter(|p| p.0 >= level)
                .map(|p| p.1)
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / 101.0
}
