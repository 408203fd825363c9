use std::path::PathBuf;

use clap::Args;
use owkit_core::dataset::import_kitti;

use crate::cmd_split::SplitArg;
use crate::util::{write_bytes, CmdResult, InputExt};

#[derive(Debug, Args)]
pub struct ImportKittiArgs {
    /// Directory of KITTI `label_2` text files.
    #[arg(long)]
    pub labels: PathBuf,
    /// Directory of the matching images.
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long, default_value = "png")]
    pub ext: String,
    #[arg(long, value_enum, default_value_t = SplitArg::Train)]
    pub split: SplitArg,
    /// Output manifest path.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &ImportKittiArgs) -> CmdResult {
    let m = import_kitti(&args.labels, &args.images, &args.ext, args.split.into()).input()?;
    write_bytes(&args.out, m.to_json_string().as_bytes())?;
    println!("import-kitti: {} images, {} annotations", m.images.len(), m.annotations.len());
    Ok(())
}
