use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use owkit_core::dataset::DatasetManifest;
use owkit_core::{io, merge, FusionWeights};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::util::{
    create_dir, input_error, report_failures, resolve, unique_stems, write_bytes, write_json, CmdResult, Failure,
    InputExt, ItemFailure,
};

#[derive(Debug, Args)]
pub struct MergeArgs {
    /// Dataset manifest listing the images to fuse.
    #[arg(long)]
    pub manifest: PathBuf,
    /// `index.json` written by the saliency command.
    #[arg(long)]
    pub saliency: PathBuf,
    /// JSON fusion weights; defaults to identity kernels with gamma 0.5.
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Output directory for fused PNGs.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Deserialize)]
struct IndexIn {
    maps: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct MergeIndex {
    weights: FusionWeights,
    images: BTreeMap<String, String>,
    failures: Vec<ItemFailure>,
}

pub fn run(args: &MergeArgs) -> CmdResult {
    let manifest = DatasetManifest::load(&args.manifest).input()?;
    let index_text = std::fs::read_to_string(&args.saliency)
        .map_err(|e| input_error(format!("{}: {e}", args.saliency.display())))?;
    let index: IndexIn = serde_json::from_str(&index_text).input()?;
    let weights = match &args.weights {
        Some(p) => FusionWeights::load(p).input()?,
        None => FusionWeights::default(),
    };
    weights.validate().input()?;

    let results: Vec<Result<Vec<u8>, String>> = manifest
        .images
        .par_iter()
        .map(|entry| {
            let map_file = index
                .maps
                .get(&entry.id)
                .ok_or_else(|| format!("no saliency map for image `{}`", entry.id))?;
            let img = io::read_image(resolve(&args.manifest, &entry.file)).map_err(|e| e.to_string())?;
            let s = io::read_saliency(resolve(&args.saliency, map_file)).map_err(|e| e.to_string())?;
            let fused = merge(&img, &s, &weights).map_err(|e| e.to_string())?;
            io::encode_png(&fused).map_err(|e| e.to_string())
        })
        .collect();

    create_dir(&args.out)?;
    let stems = unique_stems(manifest.images.iter().map(|i| i.id.as_str()));
    let mut images = BTreeMap::new();
    let mut failures = Vec::new();
    for ((entry, stem), res) in manifest.images.iter().zip(&stems).zip(results) {
        match res {
            Ok(bytes) => {
                let name = format!("{stem}.png");
                write_bytes(&args.out.join(&name), &bytes)?;
                images.insert(entry.id.clone(), name);
            }
            Err(error) => failures.push(ItemFailure {
                image_id: entry.id.clone(),
                error,
            }),
        }
    }
    println!("merge: {} images fused, {} failed", images.len(), failures.len());
    write_json(
        &args.out.join("index.json"),
        &MergeIndex {
            weights,
            images,
            failures: failures.clone(),
        },
    )?;
    if failures.is_empty() {
        Ok(())
    } else {
        report_failures(&failures);
        Err(Failure::Items(failures))
    }
}
