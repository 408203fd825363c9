use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::Args;
use owkit_core::dataset::DatasetManifest;
use owkit_core::metrics::{
    absolute_open_set_error, coco_suite, default_thresholds, metrics_table, ose_table, read_detections_jsonl,
    wilderness_impact, wilderness_table, CocoParams, MetricsReport, OseReport, WildernessReport,
    DEFAULT_MAX_DETECTIONS, DEFAULT_SCORE_THRESHOLD, WI_IOU,
};
use owkit_core::{Annotation, CategoryId, Detection};
use serde::Serialize;

use crate::cmd_split::{Mode, ScheduleArgs};
use crate::util::{create_dir, input_error, write_bytes, write_json, CmdResult, InputExt};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ground-truth manifest (for open-world runs, the val view of the task).
    #[arg(long)]
    pub manifest: PathBuf,
    /// JSON-lines detections.
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Comma-separated IoU thresholds; defaults to 0.50:0.05:0.95.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Detections kept per image and category.
    #[arg(long, default_value_t = DEFAULT_MAX_DETECTIONS)]
    pub max_dets: usize,
    /// Pool all categories into one.
    #[arg(long)]
    pub class_agnostic: bool,
    /// Score cut for the open-world metrics.
    #[arg(long, default_value_t = DEFAULT_SCORE_THRESHOLD)]
    pub score_thr: f64,
    /// Output directory for report.json and report.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct OpenWorldReport {
    known: MetricsReport,
    known_ap50: Option<f64>,
    previously_known_ap50: Option<f64>,
    current_ap50: Option<f64>,
    /// Unknown truth against detections labeled unknown, class-agnostic.
    unknown: Option<MetricsReport>,
    wilderness: Option<WildernessReport>,
    wilderness_note: Option<String>,
    a_ose: OseReport,
}

#[derive(Serialize)]
struct Report {
    mode: Mode,
    preset: Option<String>,
    task: Option<u32>,
    #[serde(flatten)]
    body: Body,
}

#[derive(Serialize)]
#[serde(untagged)]
enum Body {
    Closed { metrics: MetricsReport },
    Open(Box<OpenWorldReport>),
}

fn mean_ap50(r: &MetricsReport, ids: &BTreeSet<CategoryId>) -> Option<f64> {
    let v: Vec<f64> = r
        .per_category
        .iter()
        .filter(|c| ids.contains(&c.category_id))
        .filter_map(|c| c.ap50)
        .collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn run(args: &EvaluateArgs) -> CmdResult {
    let truth = DatasetManifest::load(&args.manifest).input()?;
    let dets = read_detections_jsonl(&args.detections).input()?;
    let dangling: BTreeSet<&str> = dets
        .iter()
        .map(|d| d.image_id.as_str())
        .filter(|id| truth.image(id).is_none())
        .collect();
    if !dangling.is_empty() {
        let list: Vec<&str> = dangling.into_iter().collect();
        return Err(input_error(format!(
            "detections reference images missing from the manifest: {}",
            list.join(", ")
        )));
    }
    let params = CocoParams {
        iou_thresholds: args.thresholds.clone().unwrap_or_else(default_thresholds),
        max_detections: args.max_dets,
        class_agnostic: args.class_agnostic,
    };
    if params.iou_thresholds.is_empty() || params.iou_thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(input_error("IoU thresholds must lie in [0, 1]"));
    }
    if params.max_detections == 0 {
        return Err(input_error("--max-dets must be positive"));
    }

    let resolved = args.schedule.resolve()?;
    let task = match (&resolved, args.mode) {
        (Some(r), Mode::Openworld) if args.schedule.task.is_some() => Some(args.schedule.task_in(r)?),
        _ => None,
    };

    let (body, text) = match args.mode {
        Mode::Closeset => {
            let metrics = coco_suite(&dets, &truth.annotations, &params);
            let text = metrics_table(&metrics);
            (Body::Closed { metrics }, text)
        }
        Mode::Openset | Mode::Openworld => {
            let unknown_id = truth.unknown_category();
            let is_unknown = |c: CategoryId| Some(c) == unknown_id;
            let (unk_truth, known_truth): (Vec<Annotation>, Vec<Annotation>) =
                truth.annotations.iter().cloned().partition(|a| is_unknown(a.category_id));
            let (unk_dets, known_dets): (Vec<Detection>, Vec<Detection>) =
                dets.iter().cloned().partition(|d| is_unknown(d.category_id));

            let known = coco_suite(&known_dets, &known_truth, &params);
            let ids = |names: BTreeSet<String>| -> BTreeSet<CategoryId> {
                names.iter().filter_map(|n| truth.category_id(n)).collect()
            };
            let (prev, cur) = match (&resolved, task) {
                (Some(r), Some(t)) => (
                    mean_ap50(&known, &ids(r.schedule.previously_known(t).input()?)),
                    mean_ap50(&known, &ids(r.schedule.introduced(t).input()?)),
                ),
                _ => (None, None),
            };
            let unknown = (!unk_truth.is_empty()).then(|| {
                let agnostic = CocoParams {
                    class_agnostic: true,
                    ..params.clone()
                };
                coco_suite(&unk_dets, &unk_truth, &agnostic)
            });
            let (wilderness, wilderness_note) =
                match wilderness_impact(&known_dets, &known_truth, &unk_truth, args.score_thr) {
                    Ok(w) => (Some(w), None),
                    Err(e) => (None, Some(e.to_string())),
                };
            let a_ose = absolute_open_set_error(&known_dets, &unk_truth, WI_IOU, args.score_thr);

            let mut text = String::from("known classes\n");
            text += &metrics_table(&known);
            if let Some(u) = &unknown {
                text += "\nunknown (class-agnostic)\n";
                text += &metrics_table(u);
            }
            text += "\nwilderness impact\n";
            match (&wilderness, &wilderness_note) {
                (Some(w), _) => text += &wilderness_table(w),
                (None, Some(n)) => text += &format!("undefined: {n}\n"),
                _ => {}
            }
            text += "\nabsolute open-set error\n";
            text += &ose_table(&a_ose);
            let report = OpenWorldReport {
                known_ap50: known.ap50,
                known,
                previously_known_ap50: prev,
                current_ap50: cur,
                unknown,
                wilderness,
                wilderness_note,
                a_ose,
            };
            (Body::Open(Box::new(report)), text)
        }
    };

    let report = Report {
        mode: args.mode,
        preset: resolved.map(|r| r.name),
        task,
        body,
    };
    create_dir(&args.out)?;
    write_json(&args.out.join("report.json"), &report)?;
    write_bytes(&args.out.join("report.txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}
