use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CategoryId;

use super::manifest::{DatasetManifest, Split};

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySelection {
    pub seed: u64,
    pub min_instances: usize,
    /// Selected images in selection order.
    pub images: Vec<String>,
    /// Accumulated instances per known class over the selected images.
    pub counts: BTreeMap<String, usize>,
    /// Missing instances for classes that could not reach the quota.
    pub shortfall: BTreeMap<String, usize>,
}

/// Greedy exemplar selection: walk the images in seeded random order and take
/// every image holding a known class that is still below `min_instances`.
pub fn select_exemplar_replay(
    manifest: &DatasetManifest,
    known: &BTreeSet<String>,
    min_instances: usize,
    seed: u64,
) -> Result<ReplaySelection> {
    if min_instances == 0 {
        return Err(Error::InvalidConfig("min_instances must be at least 1".into()));
    }
    let ids: Vec<(CategoryId, &str)> = known
        .iter()
        .map(|n| manifest.require_category(n).map(|id| (id, n.as_str())))
        .collect::<Result<_>>()?;

    let per_image = manifest.annotations_by_image();
    let mut counts: BTreeMap<String, usize> = known.iter().map(|n| (n.clone(), 0)).collect();
    let mut images = Vec::new();
    let below = |counts: &BTreeMap<String, usize>, name: &str| counts[name] < min_instances;

    for i in shuffled_indices(per_image.len(), seed) {
        if ids.iter().all(|(_, n)| !below(&counts, n)) {
            break;
        }
        let (img, anns) = &per_image[i];
        let wanted = ids
            .iter()
            .any(|(id, n)| below(&counts, n) && anns.iter().any(|a| a.category_id == *id));
        if !wanted {
            continue;
        }
        for (id, n) in &ids {
            *counts.get_mut(*n).expect("known class") += anns.iter().filter(|a| a.category_id == *id).count();
        }
        images.push(img.id.clone());
    }

    let shortfall = counts
        .iter()
        .filter(|(_, &c)| c < min_instances)
        .map(|(n, &c)| (n.clone(), min_instances - c))
        .collect();
    Ok(ReplaySelection {
        seed,
        min_instances,
        images,
        counts,
        shortfall,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutSelection {
    pub seed: u64,
    pub requested: usize,
    /// Held-out images in manifest order.
    pub images: Vec<String>,
    /// Number of distinct annotated classes in the manifest.
    pub classes_in_manifest: usize,
    /// Images that contain every annotated class.
    pub full_coverage_images: usize,
    /// Fewest distinct classes among held-out images.
    pub min_coverage: usize,
    /// True when the holdout had to include images lacking some class.
    pub relaxed: bool,
}

/// Samples `n` training images for the proposal holdout, preferring images
/// that contain every annotated class and falling back to the next-best
/// coverage tier. Returns the holdout and the remaining manifest.
pub fn select_proposal_holdout(
    manifest: &DatasetManifest,
    n: usize,
    seed: u64,
) -> Result<(HoldoutSelection, DatasetManifest)> {
    if manifest.split != Split::Train {
        return Err(Error::WrongSplit { expected: "train" });
    }
    if n > manifest.images.len() {
        return Err(Error::InsufficientImages {
            requested: n,
            available: manifest.images.len(),
        });
    }

    let per_image = manifest.annotations_by_image();
    let coverage: Vec<usize> = per_image
        .iter()
        .map(|(_, anns)| anns.iter().map(|a| a.category_id).collect::<HashSet<_>>().len())
        .collect();
    let classes_in_manifest = manifest.annotations.iter().map(|a| a.category_id).collect::<HashSet<_>>().len();
    let full_coverage_images = coverage.iter().filter(|&&c| c == classes_in_manifest).count();

    let mut tiers: BTreeMap<std::cmp::Reverse<usize>, Vec<usize>> = BTreeMap::new();
    for i in shuffled_indices(per_image.len(), seed) {
        tiers.entry(std::cmp::Reverse(coverage[i])).or_default().push(i);
    }
    let mut chosen: Vec<usize> = tiers.into_values().flatten().take(n).collect();
    chosen.sort_unstable();

    let min_coverage = chosen.iter().map(|&i| coverage[i]).min().unwrap_or(0);
    let held: HashSet<&str> = chosen.iter().map(|&i| per_image[i].0.id.as_str()).collect();
    let remainder = DatasetManifest {
        categories: manifest.categories.clone(),
        images: manifest.images.iter().filter(|i| !held.contains(i.id.as_str())).cloned().collect(),
        annotations: manifest
            .annotations
            .iter()
            .filter(|a| !held.contains(a.image_id.as_str()))
            .cloned()
            .collect(),
        split: manifest.split,
        info: manifest.info.clone(),
    };
    let selection = HoldoutSelection {
        seed,
        requested: n,
        images: chosen.iter().map(|&i| per_image[i].0.id.clone()).collect(),
        classes_in_manifest,
        full_coverage_images,
        min_coverage,
        relaxed: n > 0 && min_coverage < classes_in_manifest,
    };
    Ok((selection, remainder))
}
