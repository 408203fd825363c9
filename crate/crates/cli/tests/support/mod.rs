//! Synthetic on-disk datasets and a runner for the `owkit` binary.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use owkit_core::dataset::{Category, DatasetManifest, ImageEntry, Split, KITTI_CLASSES};
use owkit_core::{io, Annotation, BBox, ImageBuffer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WIDTH: usize = 96;
pub const HEIGHT: usize = 64;

/// Classes drawn as known objects; all are KITTI names.
pub const DRAWN: [&str; 6] = ["car", "truck", "tram", "pedestrian", "van", "cyclist"];

pub struct Synthetic {
    pub root: PathBuf,
    pub manifest: PathBuf,
    pub proposals: PathBuf,
    /// Perfect detections of the known objects.
    pub detections: PathBuf,
    pub labels_dir: PathBuf,
    pub images_dir: PathBuf,
    pub truth: DatasetManifest,
    /// Boxes of objects that carry no label.
    pub planted: Vec<(String, BBox)>,
    /// Proposals written next to planted objects that should be deduplicated.
    pub near_duplicates: usize,
}

fn overlaps(a: &BBox, others: &[BBox], margin: f64) -> bool {
    others.iter().any(|o| {
        a.x() < o.x_max() + margin && o.x() < a.x_max() + margin && a.y() < o.y_max() + margin && o.y() < a.y_max() + margin
    })
}

fn place(rng: &mut ChaCha8Rng, taken: &[BBox], min: usize, max: usize) -> Option<BBox> {
    for _ in 0..200 {
        let w = rng.random_range(min..=max) as f64;
        let h = rng.random_range(min..=max) as f64;
        let x = rng.random_range(1..(WIDTH - w as usize - 1)) as f64;
        let y = rng.random_range(1..(HEIGHT - h as usize - 1)) as f64;
        let b = BBox::new(x, y, w, h).unwrap();
        if !overlaps(&b, taken, 3.0) {
            return Some(b);
        }
    }
    None
}

/// Writes `n` images with 1-3 labeled rectangles and 0-2 unlabeled discs.
pub fn build(root: &Path, n: usize, seed: u64) -> Synthetic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images_dir = root.join("images");
    let labels_dir = root.join("labels");
    fs::create_dir_all(&images_dir).unwrap();
    fs::create_dir_all(&labels_dir).unwrap();

    let categories: Vec<Category> = KITTI_CLASSES
        .iter()
        .enumerate()
        .map(|(i, c)| Category {
            id: i as u32 + 1,
            name: c.to_string(),
        })
        .collect();
    let cat_id = |name: &str| KITTI_CLASSES.iter().position(|c| *c == name).unwrap() as u32 + 1;

    let mut images = Vec::new();
    let mut annotations = Vec::new();
    let mut planted = Vec::new();
    let mut proposals = String::new();
    let mut detections = String::new();
    let mut near_duplicates = 0;

    for i in 0..n {
        let id = format!("{i:06}");
        let mut taken: Vec<BBox> = Vec::new();
        let mut objects: Vec<(BBox, &str)> = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            if let Some(b) = place(&mut rng, &taken, 8, 20) {
                taken.push(b);
                objects.push((b, DRAWN[rng.random_range(0..DRAWN.len())]));
            }
        }
        let mut discs = Vec::new();
        for _ in 0..rng.random_range(0..=2) {
            if let Some(b) = place(&mut rng, &taken, 8, 14) {
                taken.push(b);
                discs.push(b);
            }
        }

        let phase = rng.random_range(0.0..6.0);
        let mut data = Vec::with_capacity(WIDTH * HEIGHT * 3);
        for y in 0..HEIGHT {
            for x in 0..WIDTH {
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let mut v = [0.35 + 0.05 * ((px / 17.0 + phase).sin()), 0.4, 0.45 - 0.1 * py / HEIGHT as f64];
                for (b, _) in &objects {
                    if px >= b.x() && px < b.x_max() && py >= b.y() && py < b.y_max() {
                        v = [0.9, 0.85, 0.2];
                    }
                }
                for b in &discs {
                    let (cx, cy) = b.center();
                    let r = b.width().min(b.height()) / 2.0;
                    if (px - cx).powi(2) + (py - cy).powi(2) <= r * r {
                        v = [0.1, 0.2, 0.95];
                    }
                }
                data.extend(v.iter().map(|c| (c * 255.0).round() / 255.0));
            }
        }
        let img = ImageBuffer::new(WIDTH, HEIGHT, 3, data).unwrap();
        io::write_png(&img, images_dir.join(format!("{id}.png"))).unwrap();

        let mut label = String::new();
        for (b, class) in &objects {
            let instance_id = annotations.len() as u64 + 1;
            annotations.push(Annotation {
                image_id: id.clone(),
                bbox: *b,
                category_id: cat_id(class),
                instance_id,
            });
            let cap = format!("{}{}", class[..1].to_uppercase(), &class[1..]);
            writeln!(
                label,
                "{cap} 0.00 0 0.00 {:.2} {:.2} {:.2} {:.2} 1.5 1.6 3.7 1.0 1.0 10.0 0.0",
                b.x(),
                b.y(),
                b.x_max(),
                b.y_max()
            )
            .unwrap();
            let j = rng.random_range(-1.0..1.0);
            writeln!(
                proposals,
                "{{\"image_id\":\"{id}\",\"bbox\":[{},{},{},{}],\"score\":0.8}}",
                b.x() + j,
                b.y(),
                b.width(),
                b.height()
            )
            .unwrap();
            writeln!(
                detections,
                "{{\"image_id\":\"{id}\",\"bbox\":[{},{},{},{}],\"category_id\":{},\"score\":{:.3}}}",
                b.x(),
                b.y(),
                b.width(),
                b.height(),
                cat_id(class),
                rng.random_range(0.5..0.99)
            )
            .unwrap();
        }
        fs::write(labels_dir.join(format!("{id}.txt")), label).unwrap();
        for b in &discs {
            writeln!(
                proposals,
                "{{\"image_id\":\"{id}\",\"bbox\":[{},{},{},{}],\"score\":0.6}}",
                b.x(),
                b.y(),
                b.width(),
                b.height()
            )
            .unwrap();
            // a second, near-identical box on the same object
            writeln!(
                proposals,
                "{{\"image_id\":\"{id}\",\"bbox\":[{},{},{},{}],\"score\":0.5}}",
                b.x() + 0.2,
                b.y(),
                b.width(),
                b.height()
            )
            .unwrap();
            near_duplicates += 1;
            planted.push((id.clone(), *b));
        }
        images.push(ImageEntry {
            id: id.clone(),
            file: format!("images/{id}.png"),
            width: WIDTH as u32,
            height: HEIGHT as u32,
        });
    }

    let truth = DatasetManifest::new(categories, images, annotations, Split::Train).unwrap();
    let manifest = root.join("manifest.json");
    truth.save(&manifest).unwrap();
    let proposals_path = root.join("proposals.jsonl");
    fs::write(&proposals_path, proposals).unwrap();
    let detections_path = root.join("detections.jsonl");
    fs::write(&detections_path, detections).unwrap();
    Synthetic {
        root: root.to_path_buf(),
        manifest,
        proposals: proposals_path,
        detections: detections_path,
        labels_dir,
        images_dir,
        truth,
        planted,
        near_duplicates,
    }
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn owkit<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_owkit")).args(args).output().expect("run owkit");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// All files below `dir` as (relative path, bytes), sorted by path.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                let rel = p.strip_prefix(base).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

/// Perfect detections for every annotation of `m`, one JSON line each.
pub fn perfect_detections(m: &DatasetManifest) -> String {
    let mut s = String::new();
    for (k, a) in m.annotations.iter().enumerate() {
        let b = a.bbox.as_array();
        writeln!(
            s,
            "{{\"image_id\":\"{}\",\"bbox\":[{},{},{},{}],\"category_id\":{},\"score\":{:.3}}}",
            a.image_id,
            b[0],
            b[1],
            b[2],
            b[3],
            a.category_id,
            0.99 - 0.9 * (k % 97) as f64 / 97.0
        )
        .unwrap();
    }
    s
}
