use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use owkit_core::dataset::DatasetManifest;
use owkit_core::relabel::read_proposals_jsonl;
use owkit_core::{io, region_saliency, spectral_residual, BBox, SpectralConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::util::{
    create_dir, input_error, report_failures, resolve, unique_stems, write_bytes, write_json, CmdResult, Failure,
    InputExt, ItemFailure,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MapFormat {
    /// Little-endian f32 plane with a 16-byte header.
    Salf,
    /// 8-bit grayscale PNG.
    Png,
}

#[derive(Debug, Args)]
pub struct SaliencyArgs {
    /// Dataset manifest whose images are processed.
    #[arg(long, conflicts_with = "images", required_unless_present = "images")]
    pub manifest: Option<PathBuf>,
    /// Image files to process; the image id is the file stem.
    #[arg(long, num_args = 1..)]
    pub images: Vec<PathBuf>,
    /// JSON-lines proposals; saliency is then computed only inside the boxes.
    #[arg(long)]
    pub proposals: Option<PathBuf>,
    /// JSON file with spectral parameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MapFormat::Salf)]
    pub format: MapFormat,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
pub struct SaliencyIndex {
    pub format: MapFormat,
    pub mode: &'static str,
    pub config: SpectralConfig,
    /// Image id to map file, relative to the index.
    pub maps: BTreeMap<String, String>,
    pub failures: Vec<ItemFailure>,
}

struct Job {
    id: String,
    path: PathBuf,
    regions: Option<Vec<BBox>>,
}

pub fn run(args: &SaliencyArgs) -> CmdResult {
    let cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| input_error(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<SpectralConfig>(&text).input()?
        }
        None => SpectralConfig::default(),
    };
    cfg.validate().input()?;

    let mut jobs: Vec<Job> = match &args.manifest {
        Some(m) => {
            let manifest = DatasetManifest::load(m).input()?;
            manifest
                .images
                .iter()
                .map(|i| Job {
                    id: i.id.clone(),
                    path: resolve(m, &i.file),
                    regions: None,
                })
                .collect()
        }
        None => args
            .images
            .iter()
            .map(|p| Job {
                id: p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
                path: p.clone(),
                regions: None,
            })
            .collect(),
    };
    if let Some(p) = &args.proposals {
        let props = read_proposals_jsonl(p, Default::default()).input()?;
        if let Some(id) = props.keys().find(|id| !jobs.iter().any(|j| &j.id == *id)) {
            return Err(input_error(format!("proposals reference unknown image `{id}`")));
        }
        for j in &mut jobs {
            j.regions = Some(props.get(&j.id).map_or_else(Vec::new, |s| s.boxes.clone()));
        }
    }

    let results: Vec<Result<Vec<u8>, String>> = jobs
        .par_iter()
        .map(|j| {
            let img = io::read_image(&j.path).map_err(|e| e.to_string())?;
            let map = match &j.regions {
                Some(r) => region_saliency(&img, r, &cfg),
                None => spectral_residual(&img, &cfg),
            }
            .map_err(|e| e.to_string())?;
            Ok(match args.format {
                MapFormat::Salf => io::encode_salf(&map),
                MapFormat::Png => {
                    let gray = owkit_core::ImageBuffer::from_gray(map.plane()).map_err(|e| e.to_string())?;
                    io::encode_png(&gray).map_err(|e| e.to_string())?
                }
            })
        })
        .collect();

    create_dir(&args.out)?;
    let ext = match args.format {
        MapFormat::Salf => "salf",
        MapFormat::Png => "png",
    };
    let stems = unique_stems(jobs.iter().map(|j| j.id.as_str()));
    let mut maps = BTreeMap::new();
    let mut failures = Vec::new();
    for ((job, stem), res) in jobs.iter().zip(&stems).zip(results) {
        match res {
            Ok(bytes) => {
                let name = format!("{stem}.{ext}");
                write_bytes(&args.out.join(&name), &bytes)?;
                maps.insert(job.id.clone(), name);
            }
            Err(error) => failures.push(ItemFailure {
                image_id: job.id.clone(),
                error,
            }),
        }
    }
    let index = SaliencyIndex {
        format: args.format,
        mode: if args.proposals.is_some() { "regions" } else { "full" },
        config: cfg,
        maps,
        failures: failures.clone(),
    };
    write_json(&index_path(&args.out), &index)?;
    println!("saliency: {} maps written, {} failed", index.maps.len(), failures.len());
    if failures.is_empty() {
        Ok(())
    } else {
        report_failures(&failures);
        Err(Failure::Items(failures))
    }
}

pub fn index_path(out: &Path) -> PathBuf {
    out.join("index.json")
}
