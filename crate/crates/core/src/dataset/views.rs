use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::geometry::CategoryId;

use super::manifest::{Category, DatasetManifest, Split, UNKNOWN_NAME};
use super::schedule::{ClassMergeMap, TaskSchedule};

/// Relabels annotations through `m`, removes dropped classes and rebuilds the
/// category table. Existing names keep their ids; new target names get fresh
/// ids above the current maximum, in order of first appearance.
pub fn merge_classes(manifest: &DatasetManifest, m: &ClassMergeMap) -> Result<DatasetManifest> {
    m.validate()?;
    if let Some(missing) = m.mapping.keys().find(|s| manifest.category_id(s).is_none()) {
        return Err(Error::UnknownSourceClass(missing.clone()));
    }

    let mut next_id = manifest.categories.iter().map(|c| c.id).max().unwrap_or(0) + 1;
    let mut table: Vec<Category> = Vec::new();
    let mut remap: HashMap<CategoryId, Option<CategoryId>> = HashMap::new();
    for c in &manifest.categories {
        if m.drop.contains(&c.name) {
            remap.insert(c.id, None);
            continue;
        }
        let target = m.target(&c.name);
        let id = match table.iter().find(|t| t.name == target) {
            Some(t) => t.id,
            None => {
                let id = manifest.category_id(target).unwrap_or_else(|| {
                    next_id += 1;
                    next_id - 1
                });
                table.push(Category {
                    id,
                    name: target.to_string(),
                });
                id
            }
        };
        remap.insert(c.id, Some(id));
    }

    let annotations = manifest
        .annotations
        .iter()
        .filter_map(|a| {
            remap[&a.category_id].map(|id| {
                let mut a = a.clone();
                a.category_id = id;
                a
            })
        })
        .collect();

    Ok(DatasetManifest {
        categories: table,
        images: manifest.images.clone(),
        annotations,
        split: manifest.split,
        info: manifest.info.clone(),
    })
}

fn resolve(manifest: &DatasetManifest, names: &BTreeSet<String>) -> Result<BTreeSet<CategoryId>> {
    names.iter().map(|n| manifest.require_category(n)).collect()
}

/// Builds a view that keeps `keep` with their labels, relabels `as_unknown`
/// to the reserved class and drops everything else. Annotations already
/// labeled `unknown` are retained.
fn relabeled_view(
    manifest: &DatasetManifest,
    keep: &BTreeSet<CategoryId>,
    as_unknown: &BTreeSet<CategoryId>,
    table_ids: &BTreeSet<CategoryId>,
    split: Split,
) -> DatasetManifest {
    let mut out = DatasetManifest {
        categories: manifest
            .categories
            .iter()
            .filter(|c| table_ids.contains(&c.id))
            .cloned()
            .collect(),
        images: manifest.images.clone(),
        annotations: Vec::new(),
        split,
        info: manifest.info.clone(),
    };
    let existing_unknown = manifest.unknown_category();
    let need_unknown = !as_unknown.is_empty()
        || existing_unknown.is_some_and(|u| manifest.annotations.iter().any(|a| a.category_id == u));
    let unknown_id = if need_unknown {
        match existing_unknown {
            Some(id) => {
                if !out.categories.iter().any(|c| c.id == id) {
                    out.categories.push(Category {
                        id,
                        name: UNKNOWN_NAME.to_string(),
                    });
                }
                Some(id)
            }
            None => Some(out.ensure_category(UNKNOWN_NAME)),
        }
    } else {
        None
    };

    for a in &manifest.annotations {
        let label = if keep.contains(&a.category_id) {
            Some(a.category_id)
        } else if as_unknown.contains(&a.category_id) || Some(a.category_id) == existing_unknown {
            unknown_id
        } else {
            None
        };
        if let Some(id) = label {
            let mut a = a.clone();
            a.category_id = id;
            out.annotations.push(a);
        }
    }
    out
}

/// Open-set view: training keeps only `known`; validation keeps `known` and
/// folds every other class into `unknown`.
pub fn make_openset_view(manifest: &DatasetManifest, known: &BTreeSet<String>, split: Split) -> Result<DatasetManifest> {
    let known_ids = resolve(manifest, known)?;
    let unknown_id = manifest.unknown_category();
    let others: BTreeSet<CategoryId> = manifest
        .categories
        .iter()
        .map(|c| c.id)
        .filter(|id| !known_ids.contains(id) && Some(*id) != unknown_id)
        .collect();
    Ok(match split {
        Split::Train => relabeled_view(manifest, &known_ids, &BTreeSet::new(), &known_ids, split),
        Split::Val => relabeled_view(manifest, &known_ids, &others, &known_ids, split),
    })
}

/// Task view at `t`: training keeps the classes introduced at `t`;
/// validation keeps everything known at `t` and folds future classes into
/// `unknown`. Classes outside the schedule are dropped.
pub fn make_task_view(manifest: &DatasetManifest, schedule: &TaskSchedule, t: u32, split: Split) -> Result<DatasetManifest> {
    schedule.validate()?;
    let introduced = resolve(manifest, &schedule.introduced(t)?)?;
    let known = resolve(manifest, &schedule.known_at(t)?)?;
    let unknown = resolve(manifest, &schedule.unknown_at(t)?)?;
    Ok(match split {
        Split::Train => relabeled_view(manifest, &introduced, &BTreeSet::new(), &known, split),
        Split::Val => relabeled_view(manifest, &known, &unknown, &known, split),
    })
}
