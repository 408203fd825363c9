//! COCO-style AP/AR and the open-world metrics WI and A-OSE.

mod coco;
mod matching;
mod openworld;
mod report;

use std::fs;
use std::path::Path;

pub use coco::{
    average_precision, average_recall, class_mean_average_precision, coco_suite, coco_suite_masked, default_thresholds,
    CategoryRow, CocoParams, MetricsReport, PrSlice, ThresholdRow, DEFAULT_MAX_DETECTIONS, RECALL_POINTS,
};
pub use matching::{match_greedy, score_order, DetectionMatch, MatchTable};
pub use openworld::{
    absolute_open_set_error, wilderness_from_precisions, wilderness_impact, OseReport, RecallOperatingPoint,
    WildernessReport, DEFAULT_SCORE_THRESHOLD, WI_IOU, WI_RECALL_LEVEL,
};
pub use report::{metrics_table, ose_table, to_fixed_json, wilderness_table, FixedPointFormatter};

use crate::error::{Error, Result};
use crate::geometry::Detection;

/// Parses JSON-lines detections. Blank lines are skipped; errors carry the
/// 1-based line number.
pub fn parse_detections_jsonl(text: &str) -> std::result::Result<Vec<Detection>, (usize, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e.to_string())))
        .collect()
}

pub fn read_detections_jsonl(path: &Path) -> Result<Vec<Detection>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detections_jsonl(&text).map_err(|(line, message)| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}
