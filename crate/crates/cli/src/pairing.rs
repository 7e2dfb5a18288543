//! Deterministic discovery and pairing of input files by shared stem.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// All PNG files in `dir`, keyed by their stem, in stem order.
pub fn png_stems(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let entries = std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?;
    let mut files = BTreeMap::new();
    for entry in entries {
        let path = entry
            .with_context(|| format!("listing {}", dir.display()))?
            .path();
        if path.extension().and_then(|e| e.to_str()) != Some("png") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            bail!("file name {} is not valid UTF-8", path.display());
        };
        files.insert(stem.to_string(), path);
    }
    if files.is_empty() {
        bail!("no PNG files found in {}", dir.display());
    }
    Ok(files)
}

/// Match two directories stem for stem; any one-sided stem is a hard error.
pub fn pair(
    left: &BTreeMap<String, PathBuf>,
    left_name: &str,
    right: &BTreeMap<String, PathBuf>,
    right_name: &str,
) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let only_left: Vec<&str> = left
        .keys()
        .filter(|s| !right.contains_key(*s))
        .map(String::as_str)
        .collect();
    let only_right: Vec<&str> = right
        .keys()
        .filter(|s| !left.contains_key(*s))
        .map(String::as_str)
        .collect();
    if !only_left.is_empty() || !only_right.is_empty() {
        bail!(
            "unpaired files: {} without {} {:?}, {} without {} {:?}",
            left_name,
            right_name,
            only_left,
            right_name,
            left_name,
            only_right
        );
    }
    Ok(left
        .iter()
        .map(|(stem, l)| (stem.clone(), l.clone(), right[stem].clone()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(dir: &Path, name: &str) {
        std::fs::write(dir.join(name), b"x").unwrap();
    }

    #[test]
    fn stems_are_sorted_and_filtered_to_png() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "b.png");
        touch(dir.path(), "a.png");
        touch(dir.path(), "notes.txt");
        let stems = png_stems(dir.path()).unwrap();
        let names: Vec<&String> = stems.keys().collect();
        assert_eq!(names, ["a", "b"]);
    }

    #[test]
    fn empty_directories_are_an_error() {
        let dir = tempfile::tempdir().unwrap();
        touch(dir.path(), "notes.txt");
        assert!(png_stems(dir.path()).is_err());
    }

    #[test]
    fn one_sided_stems_fail_the_pairing() {
        let left_dir = tempfile::tempdir().unwrap();
        let right_dir = tempfile::tempdir().unwrap();
        touch(left_dir.path(), "a.png");
        touch(left_dir.path(), "b.png");
        touch(right_dir.path(), "a.png");
        let left = png_stems(left_dir.path()).unwrap();
        let right = png_stems(right_dir.path()).unwrap();
        let err = pair(&left, "gt", &right, "pred").unwrap_err().to_string();
        assert!(err.contains("\"b\""), "error was: {err}");
        touch(right_dir.path(), "b.png");
        let right = png_stems(right_dir.path()).unwrap();
        let pairs = pair(&left, "gt", &right, "pred").unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].0, "a");
    }
}
