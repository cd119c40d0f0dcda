//! Output-directory helpers shared by the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Environment variable consulted when `--out` is not given.
pub const OUT_DIR_ENV: &str = "BMC_OUT_DIR";

/// Resolves the output directory from the flag or the environment and
/// creates it.
pub fn resolve_out_dir(flag: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = match flag {
        Some(dir) => dir.clone(),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .context("no --out directory given and BMC_OUT_DIR is not set")?,
    };
    std::fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).context("serializing JSON output")?;
    write_text(path, &(text + "\n"))
}

/// Comma-separated list parser for flags like `--covariate-cols a,b,c`.
pub fn split_list(raw: &str) -> Vec<String> {
    raw.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}
