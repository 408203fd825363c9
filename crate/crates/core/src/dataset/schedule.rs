use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Renames (`mapping`) and removals (`drop`) applied to a category table.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassMergeMap {
    pub mapping: BTreeMap<String, String>,
    pub drop: BTreeSet<String>,
}

impl ClassMergeMap {
    pub fn new<'a>(mapping: impl IntoIterator<Item = (&'a str, &'a str)>, drop: impl IntoIterator<Item = &'a str>) -> Self {
        ClassMergeMap {
            mapping: mapping.into_iter().map(|(s, t)| (s.to_string(), t.to_string())).collect(),
            drop: drop.into_iter().map(str::to_string).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (src, dst) in &self.mapping {
            if src != dst && self.mapping.contains_key(dst) {
                return Err(Error::InvalidMergeMap(format!(
                    "`{src}` maps to `{dst}`, which is itself remapped"
                )));
            }
        }
        if let Some(both) = self.drop.iter().find(|d| self.mapping.contains_key(*d)) {
            return Err(Error::InvalidMergeMap(format!("`{both}` is both mapped and dropped")));
        }
        Ok(())
    }

    pub fn target<'a>(&'a self, name: &'a str) -> &'a str {
        self.mapping.get(name).map_or(name, String::as_str)
    }

    pub fn is_identity(&self) -> bool {
        self.drop.is_empty() && self.mapping.iter().all(|(s, t)| s == t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: u32,
    pub introduced: Vec<String>,
}

/// An ordered sequence of tasks, each introducing a disjoint set of classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSchedule {
    #[serde(default)]
    pub name: String,
    pub tasks: Vec<Task>,
}

impl TaskSchedule {
    pub fn new(name: &str, tasks: &[&[&str]]) -> Result<Self> {
        let s = TaskSchedule {
            name: name.to_string(),
            tasks: tasks
                .iter()
                .enumerate()
                .map(|(i, names)| Task {
                    id: i as u32 + 1,
                    introduced: names.iter().map(|n| n.to_string()).collect(),
                })
                .collect(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::InvalidSchedule("no tasks".into()));
        }
        let mut ids = BTreeSet::new();
        let mut seen = BTreeSet::new();
        for t in &self.tasks {
            if !ids.insert(t.id) {
                return Err(Error::InvalidSchedule(format!("duplicate task id {}", t.id)));
            }
            for c in &t.introduced {
                if !seen.insert(c.as_str()) {
                    return Err(Error::InvalidSchedule(format!("class `{c}` introduced twice")));
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let sched: TaskSchedule = serde_json::from_str(s)?;
        sched.validate()?;
        Ok(sched)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TaskSchedule::from_json_str(&text)
    }

    fn position(&self, t: u32) -> Result<usize> {
        self.tasks.iter().position(|task| task.id == t).ok_or(Error::UnknownTask(t))
    }

    pub fn task_ids(&self) -> Vec<u32> {
        self.tasks.iter().map(|t| t.id).collect()
    }

    pub fn last_task(&self) -> u32 {
        self.tasks.last().expect("validated schedule is non-empty").id
    }

    pub fn introduced(&self, t: u32) -> Result<BTreeSet<String>> {
        let i = self.position(t)?;
        Ok(self.tasks[i].introduced.iter().cloned().collect())
    }

    /// Classes introduced at or before task `t`.
    pub fn known_at(&self, t: u32) -> Result<BTreeSet<String>> {
        let i = self.position(t)?;
        Ok(self.tasks[..=i].iter().flat_map(|t| t.introduced.iter().cloned()).collect())
    }

    /// Classes introduced after task `t`.
    pub fn unknown_at(&self, t: u32) -> Result<BTreeSet<String>> {
        let i = self.position(t)?;
        Ok(self.tasks[i + 1..].iter().flat_map(|t| t.introduced.iter().cloned()).collect())
    }

    /// Classes introduced strictly before task `t`.
    pub fn previously_known(&self, t: u32) -> Result<BTreeSet<String>> {
        let i = self.position(t)?;
        Ok(self.tasks[..i].iter().flat_map(|t| t.introduced.iter().cloned()).collect())
    }

    pub fn all_classes(&self) -> BTreeSet<String> {
        self.tasks.iter().flat_map(|t| t.introduced.iter().cloned()).collect()
    }
}

/// Dataset-specific defaults: class merging, the open-set known classes and
/// the incremental task schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Preset {
    pub name: String,
    pub merge: ClassMergeMap,
    pub openset_known: BTreeSet<String>,
    pub schedule: TaskSchedule,
}

pub const PRESET_NAMES: [&str; 3] = ["kitti", "nuscenes", "bdd"];

fn set(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

impl Preset {
    pub fn named(name: &str) -> Result<Preset> {
        let preset = match name {
            "kitti" => Preset {
                name: name.into(),
                merge: ClassMergeMap::default(),
                openset_known: set(&["car", "truck"]),
                schedule: TaskSchedule::new(
                    "kitti",
                    &[&["car", "truck"], &["tram", "misc", "cyclist"], &["pedestrian", "van"]],
                )?,
            },
            "nuscenes" => Preset {
                name: name.into(),
                merge: ClassMergeMap::new(
                    [
                        ("bicycle", "bike"),
                        ("bicycle rack", "bike"),
                        ("debris", "road objects"),
                        ("pushable-pullable", "road objects"),
                        ("emergency vehicle", "car"),
                    ],
                    ["animal"],
                ),
                openset_known: set(&["car", "pedestrian"]),
                schedule: TaskSchedule::new(
                    "nuscenes",
                    &[
                        &["car", "bus"],
                        &["motor", "bike", "barrier", "traffic cone", "road objects"],
                        &["trailer", "truck", "construction vehicle", "pedestrian"],
                    ],
                )?,
            },
            "bdd" => Preset {
                name: name.into(),
                merge: ClassMergeMap::new([], ["train"]),
                openset_known: set(&["pedestrian", "bus"]),
                schedule: TaskSchedule::new("bdd", &[&["pedestrian", "bus"], &["truck", "bike"], &["car", "motor"]])?,
            },
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        Ok(preset)
    }

    pub fn all() -> Vec<Preset> {
        PRESET_NAMES.iter().map(|n| Preset::named(n).expect("built-in preset")).collect()
    }
}
