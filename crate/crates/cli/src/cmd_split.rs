use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use owkit_core::dataset::{
    make_openset_view, make_task_view, merge_classes, select_exemplar_replay, select_proposal_holdout, ClassMergeMap,
    DatasetManifest, Preset, Split, TaskSchedule,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::util::{create_dir, input_error, write_bytes, write_json, CmdResult, Failure, InputExt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Closeset,
    Openset,
    Openworld,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
        }
    }
}

/// Where the task schedule comes from.
#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Built-in schedule: kitti, nuscenes or bdd.
    #[arg(long, conflicts_with = "schedule")]
    pub preset: Option<String>,
    /// JSON task schedule file.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Task number, starting at 1.
    #[arg(long)]
    pub task: Option<u32>,
}

pub struct ResolvedSchedule {
    pub name: String,
    pub merge: ClassMergeMap,
    pub openset_known: BTreeSet<String>,
    pub schedule: TaskSchedule,
}

impl ScheduleArgs {
    pub fn resolve(&self) -> Result<Option<ResolvedSchedule>, Failure> {
        match (&self.preset, &self.schedule) {
            (Some(name), _) => {
                let p = Preset::named(name).input()?;
                Ok(Some(ResolvedSchedule {
                    name: p.name,
                    merge: p.merge,
                    openset_known: p.openset_known,
                    schedule: p.schedule,
                }))
            }
            (None, Some(path)) => {
                let schedule = TaskSchedule::load(path).input()?;
                let openset_known = schedule.introduced(1).input()?;
                Ok(Some(ResolvedSchedule {
                    name: schedule.name.clone(),
                    merge: ClassMergeMap::default(),
                    openset_known,
                    schedule,
                }))
            }
            (None, None) => Ok(None),
        }
    }

    /// The task number, checked against the schedule.
    pub fn task_in(&self, s: &ResolvedSchedule) -> Result<u32, Failure> {
        let t = self.task.ok_or_else(|| input_error("--task is required in openworld mode"))?;
        s.schedule.known_at(t).input()?;
        Ok(t)
    }
}

/// Applies the preset's merge map, restricted to source classes that the
/// manifest actually contains.
pub fn apply_merge(manifest: &DatasetManifest, merge: &ClassMergeMap) -> Result<DatasetManifest, Failure> {
    let present = |n: &str| manifest.category_id(n).is_some();
    let restricted = ClassMergeMap {
        mapping: merge
            .mapping
            .iter()
            .filter(|(s, _)| present(s))
            .map(|(s, t)| (s.clone(), t.clone()))
            .collect(),
        drop: merge.drop.clone(),
    };
    if restricted.is_identity() {
        return Ok(manifest.clone());
    }
    merge_classes(manifest, &restricted).input()
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Split of the produced view; defaults to the manifest's own split.
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    /// Seed for the replay and holdout samplers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Select exemplar-replay images with at least this many instances per
    /// known class (openworld train views).
    #[arg(long)]
    pub replay_min: Option<usize>,
    /// Hold out this many training images for proposal generation.
    #[arg(long)]
    pub holdout: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SplitArgs) -> CmdResult {
    let manifest = DatasetManifest::load(&args.manifest).input()?;
    let split: Split = args.split.map_or(manifest.split, Into::into);
    let resolved = args.schedule.resolve()?;
    if args.mode != Mode::Closeset && resolved.is_none() {
        return Err(input_error("--preset or --schedule is required outside closeset mode"));
    }
    let name = resolved.as_ref().map(|r| r.name.clone());

    let mut info: Vec<(&str, Value)> = vec![
        ("mode", json!(args.mode)),
        ("preset", json!(name)),
        ("seed", json!(args.seed)),
    ];
    let (mut view, known) = match (&resolved, args.mode) {
        (None, _) => {
            let mut v = manifest.clone();
            v.split = split;
            (v, None)
        }
        (Some(r), Mode::Closeset) => {
            let mut v = apply_merge(&manifest, &r.merge)?;
            v.split = split;
            (v, None)
        }
        (Some(r), Mode::Openset) => {
            let merged = apply_merge(&manifest, &r.merge)?;
            let v = make_openset_view(&merged, &r.openset_known, split).input()?;
            (v, Some(r.openset_known.clone()))
        }
        (Some(r), Mode::Openworld) => {
            let t = args.schedule.task_in(r)?;
            info.push(("task", json!(t)));
            let merged = apply_merge(&manifest, &r.merge)?;
            let v = make_task_view(&merged, &r.schedule, t, split).input()?;
            (v, Some(r.schedule.known_at(t).input()?))
        }
    };
    for (k, v) in &info {
        view.info.insert(k.to_string(), v.clone());
    }

    create_dir(&args.out)?;
    write_bytes(&args.out.join("view.json"), view.to_json_string().as_bytes())?;
    let mut summary = format!(
        "split: view with {} images, {} annotations",
        view.images.len(),
        view.annotations.len()
    );

    if let Some(min) = args.replay_min {
        if split != Split::Train {
            return Err(input_error("--replay-min needs a train view"));
        }
        let known = known.unwrap_or_else(|| view.categories.iter().map(|c| c.name.clone()).collect());
        let sel = select_exemplar_replay(&view, &known, min, args.seed).input()?;
        summary += &format!(", replay {} images", sel.images.len());
        write_json(&args.out.join("replay.json"), &with_info(&sel, &info))?;
    }
    if let Some(n) = args.holdout {
        let (sel, remainder) = select_proposal_holdout(&view, n, args.seed).input()?;
        summary += &format!(", holdout {} images", sel.images.len());
        write_json(&args.out.join("holdout.json"), &with_info(&sel, &info))?;
        write_bytes(&args.out.join("remainder.json"), remainder.to_json_string().as_bytes())?;
    }
    println!("{summary}");
    Ok(())
}

fn with_info<T: Serialize>(value: &T, info: &[(&str, Value)]) -> Value {
    let mut v = serde_json::to_value(value).expect("serializable selection");
    if let Value::Object(map) = &mut v {
        for (k, val) in info {
            map.insert(k.to_string(), val.clone());
        }
    }
    v
}
