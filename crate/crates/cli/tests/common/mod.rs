//! Shared helpers for driving the built binary over synthetic datasets.
#![allow(dead_code)] // each test target uses a subset

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use warpeval_core::raster::{save_image, save_label_map, LabelMap, RasterImage};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_warpeval"))
}

pub fn warpeval(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary should spawn")
}

pub fn warpeval_ok(args: &[&str]) -> Output {
    let out = warpeval(args);
    assert!(
        out.status.success(),
        "command {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Deterministic 32x32 label maps: a class-1 disk and a class-2 bar over a
/// class-0 background, shifted per index.
pub fn write_labels(dir: &Path, count: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for k in 0..count {
        save_label_map(&synthetic_label(k), dir.join(format!("img{k}.png"))).unwrap();
    }
}

/// Deterministically damaged copies of [`write_labels`]: every pixel in the
/// left band gets its class rotated, so each class keeps most of its area.
pub fn write_corrupted_labels(dir: &Path, count: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for k in 0..count {
        let clean = synthetic_label(k);
        let data: Vec<u8> = (0..32 * 32)
            .map(|i| {
                let id = clean.data()[i];
                if i % 32 < 6 {
                    (id + 1) % 3
                } else {
                    id
                }
            })
            .collect();
        let map = LabelMap::new(32, 32, 3, None, data).unwrap();
        save_label_map(&map, dir.join(format!("img{k}.png"))).unwrap();
    }
}

pub fn synthetic_label(k: usize) -> LabelMap {
    let (w, h) = (32usize, 32usize);
    let (cx, cy) = (9 + (k % 5) as isize, 11 + (k % 3) as isize);
    let mut data = vec![0u8; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let id = if (x - cx).pow(2) + (y - cy).pow(2) <= 30 {
                1
            } else if (20..28).contains(&x) && (17 + (k % 4) as isize..30).contains(&y) {
                2
            } else {
                0
            };
            data[(y * w as isize + x) as usize] = id;
        }
    }
    LabelMap::new(w, h, 3, None, data).unwrap()
}

/// Deterministic 32x32 RGB gradients.
pub fn write_images(dir: &Path, count: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for k in 0..count {
        let (w, h) = (32usize, 32usize);
        let data: Vec<f64> = (0..w * h * 3)
            .map(|i| {
                let (pix, c) = (i / 3, i % 3);
                let (x, y) = (pix % w, pix / w);
                ((x * (3 + c) + y * (5 + 2 * c) + k * 17) % 216) as f64 + 20.0
            })
            .collect();
        let image = RasterImage::new(w, h, 3, data).unwrap();
        save_image(&image, dir.join(format!("img{k}.png"))).unwrap();
    }
}

/// All files under `root`, as sorted (relative path, absolute path) pairs.
pub fn walk(root: &Path) -> Vec<(String, PathBuf)> {
    fn visit(root: &Path, dir: &Path, acc: &mut Vec<(String, PathBuf)>) {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                visit(root, &path, acc);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .replace(std::path::MAIN_SEPARATOR, "/");
                acc.push((rel, path));
            }
        }
    }
    let mut acc = Vec::new();
    visit(root, root, &mut acc);
    acc.sort();
    acc
}

pub fn kept(rel: &str, skip: &[&str]) -> bool {
    let name = rel.rsplit('/').next().unwrap_or(rel);
    !skip.contains(&name)
}

/// SHA-256 over every kept file's relative path and bytes, in path order.
pub fn tree_digest(root: &Path, skip: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for (rel, path) in walk(root) {
        if !kept(&rel, skip) {
            continue;
        }
        let bytes = std::fs::read(&path).unwrap();
        hasher.update(rel.as_bytes());
        hasher.update([0u8]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    format!("{:x}", hasher.finalize())
}

/// Byte-compare two output trees, ignoring the file names in `skip`.
pub fn assert_trees_equal(a: &Path, b: &Path, skip: &[&str]) {
    let list_a: Vec<(String, PathBuf)> = walk(a)
        .into_iter()
        .filter(|(rel, _)| kept(rel, skip))
        .collect();
    let list_b: Vec<(String, PathBuf)> = walk(b)
        .into_iter()
        .filter(|(rel, _)| kept(rel, skip))
        .collect();
    let names_a: Vec<&String> = list_a.iter().map(|(r, _)| r).collect();
    let names_b: Vec<&String> = list_b.iter().map(|(r, _)| r).collect();
    assert_eq!(names_a, names_b, "trees hold different file sets");
    for ((rel, pa), (_, pb)) in list_a.iter().zip(&list_b) {
        let ba = std::fs::read(pa).unwrap();
        let bb = std::fs::read(pb).unwrap();
        assert!(ba == bb, "file {rel} differs between the two trees");
    }
}
