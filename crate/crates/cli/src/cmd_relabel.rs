use std::path::PathBuf;

use clap::{Args, ValueEnum};
use owkit_core::dataset::DatasetManifest;
use owkit_core::relabel::{read_proposals_jsonl, relabel_dataset, ProposalSource, RelabelConfig};
use serde_json::json;

use crate::util::{write_bytes, CmdResult, InputExt};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SourceArg {
    ExternalDetector,
    PriorKnowledge,
}

impl From<SourceArg> for ProposalSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::ExternalDetector => ProposalSource::ExternalDetector,
            SourceArg::PriorKnowledge => ProposalSource::PriorKnowledge,
        }
    }
}

#[derive(Debug, Args)]
pub struct RelabelArgs {
    /// Training manifest to extend with unknown annotations.
    #[arg(long)]
    pub manifest: PathBuf,
    /// JSON-lines class-agnostic proposals.
    #[arg(long)]
    pub proposals: PathBuf,
    /// A proposal whose best IoU with the ground truth exceeds alpha is dropped.
    #[arg(long, default_value_t = 0.3)]
    pub alpha: f64,
    /// IoU at which two unknown boxes count as duplicates.
    #[arg(long, default_value_t = 0.9)]
    pub dedup_iou: f64,
    #[arg(long, value_enum, default_value_t = SourceArg::ExternalDetector)]
    pub source: SourceArg,
    /// Output manifest path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &RelabelArgs) -> CmdResult {
    let manifest = DatasetManifest::load(&args.manifest).input()?;
    let proposals = read_proposals_jsonl(&args.proposals, args.source.into()).input()?;
    let cfg = RelabelConfig {
        alpha: args.alpha,
        dedup_iou: args.dedup_iou,
    };
    let (mut out, counts) = relabel_dataset(&manifest, &proposals, &cfg).input()?;
    out.info.insert(
        "relabel".into(),
        json!({
            "alpha": cfg.alpha,
            "dedup_iou": cfg.dedup_iou,
            "source": ProposalSource::from(args.source),
            "counts": counts,
        }),
    );
    write_bytes(&args.out, out.to_json_string().as_bytes())?;
    println!(
        "relabel: {} proposals, {} known-matched, {} unknown added, {} deduped, {} outside frame",
        counts.proposals, counts.known_matched, counts.unknown_added, counts.deduped, counts.outside_frame
    );
    Ok(())
}
