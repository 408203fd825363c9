use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::Serialize;

/// Why a command stopped. Maps to the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: unreadable or invalid files, unknown names (exit 2).
    Input(anyhow::Error),
    /// Some items failed while the rest were processed (exit 2).
    Items(Vec<ItemFailure>),
    /// Everything else, including failures to write outputs (exit 1).
    Internal(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) | Failure::Items(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Internal(e)
    }
}

pub type CmdResult = Result<(), Failure>;

#[derive(Debug, Clone, Serialize)]
pub struct ItemFailure {
    pub image_id: String,
    pub error: String,
}

pub trait InputExt<T> {
    /// Marks an error as caused by the command's inputs.
    fn input(self) -> Result<T, Failure>;
}

impl<T, E: Display> InputExt<T> for Result<T, E> {
    fn input(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Input(anyhow!("{e}")))
    }
}

pub fn input_error(msg: impl Display) -> Failure {
    Failure::Input(anyhow!("{msg}"))
}

/// Resolves `file` against the directory holding `base` unless absolute.
pub fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new("")).join(p)
    }
}

pub fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Internal(anyhow!("{}: {e}", dir.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    fs::write(path, bytes).map_err(|e| Failure::Internal(anyhow!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = owkit_core::metrics::to_fixed_json(value).map_err(|e| Failure::Internal(e.into()))?;
    write_bytes(path, text.as_bytes())
}

/// Keeps file names portable: anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn file_stem_for(image_id: &str) -> String {
    image_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

pub fn report_failures(failures: &[ItemFailure]) {
    for f in failures {
        eprintln!("failed: {}: {}", f.image_id, f.error);
    }
}

/// Sanitized, collision-free file stems for `ids`, in order.
pub fn unique_stems<'a>(ids: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    ids.into_iter()
        .map(|id| {
            let base = file_stem_for(id);
            let mut stem = base.clone();
            let mut n = 1;
            while !seen.insert(stem.clone()) {
                n += 1;
                stem = format!("{base}-{n}");
            }
            stem
        })
        .collect()
}
