//! Subcommand implementations.

pub mod bias_split;
pub mod evaluate;
pub mod perturb;
pub mod report;
pub mod warp;

/// Print per-file errors and return how many there were.
pub fn surface_errors(errors: &[crate::manifest::FileError]) -> usize {
    for e in errors {
        eprintln!("error: {}: {}", e.file, e.error);
    }
    errors.len()
}

/// Split a `key=value` argument at its first equals sign.
pub fn key_value(raw: &str, what: &str) -> anyhow::Result<(String, String)> {
    match raw.split_once('=') {
        Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => anyhow::bail!("expected {what} as key=value, got {raw:?}"),
    }
}
