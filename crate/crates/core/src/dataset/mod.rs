//! Dataset manifests and the close-set / open-set / open-world views built
//! from them.

mod kitti;
mod manifest;
mod schedule;
mod select;
mod views;

pub use kitti::{import_kitti, parse_label_file, KITTI_CLASSES};
pub use manifest::{Category, DatasetManifest, ImageEntry, Split, UNKNOWN_NAME};
pub use schedule::{ClassMergeMap, Preset, Task, TaskSchedule, PRESET_NAMES};
pub use select::{select_exemplar_replay, select_proposal_holdout, HoldoutSelection, ReplaySelection};
pub use views::{make_openset_view, make_task_view, merge_classes};

pub(crate) use manifest::string_or_number;
