use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use redforge_core::jsonl::{self, Parsed, Record};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Parses a JSONL file and prints each rejected line to stderr.
pub fn read_records<T: Record>(path: &Path) -> Result<Parsed<T>> {
    let parsed = jsonl::parse_jsonl::<T>(path)?;
    warn_lines(path, &parsed);
    Ok(parsed)
}

pub fn read_corpus(path: &Path) -> Result<Parsed<redforge_core::Document>> {
    let parsed = jsonl::parse_corpus(path)?;
    warn_lines(path, &parsed);
    Ok(parsed)
}

fn warn_lines<T>(path: &Path, parsed: &Parsed<T>) {
    for e in &parsed.errors {
        eprintln!("warning: {}: {e}", path.display());
    }
}

/// Records keyed `<prefix>:<line>` by their 1-based source line.
pub fn keyed<T>(prefix: &str, parsed: Parsed<T>) -> Vec<(String, T)> {
    parsed.records.into_iter().zip(parsed.lines).map(|(r, line)| (format!("{prefix}:{line}"), r)).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    jsonl::write_jsonl(path, records)?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn digest(path: &Path, shown_as: &str) -> Result<FileDigest> {
    Ok(FileDigest { path: shown_as.to_string(), sha256: sha256_file(path)? })
}

/// Digests every regular file under `dir`, sorted by relative path.
pub fn digest_tree(dir: &Path) -> Result<Vec<FileDigest>> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    files.sort();
    files.iter().map(|rel| digest(&dir.join(rel), rel)).collect()
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("walked path is under root");
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

/// Output directory that only becomes visible under its final name once
/// [`StagingDir::promote`] is called. Dropped without promotion, it is removed.
pub struct StagingDir {
    tmp: PathBuf,
    target: PathBuf,
    promoted: bool,
}

impl StagingDir {
    pub fn new(target: &Path) -> Result<Self> {
        let name = target.file_name().context("stage directory needs a name")?.to_string_lossy();
        let tmp = target.with_file_name(format!(".{name}.tmp"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
        Ok(StagingDir { tmp, target: target.to_path_buf(), promoted: false })
    }

    pub fn path(&self) -> &Path {
        &self.tmp
    }

    pub fn promote(mut self) -> Result<PathBuf> {
        if self.target.exists() {
            fs::remove_dir_all(&self.target)?;
        }
        fs::rename(&self.tmp, &self.target)
            .with_context(|| format!("cannot promote {} to {}", self.tmp.display(), self.target.display()))?;
        self.promoted = true;
        Ok(self.target.clone())
    }
}

impl Drop for StagingDir {
    fn drop(&mut self) {
        if !self.promoted {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}
