//! Newline-delimited JSON reading and writing.
//!
//! Bad lines never abort a read: they are collected with their 1-based line
//! number so callers can report them next to the records that did parse.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::model::{Document, InstructionRecord, PreferencePair, Source, TaskSample};

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("serialize: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    /// 1-based source line of each record, parallel to `records`.
    pub lines: Vec<usize>,
    pub errors: Vec<LineError>,
}

impl<T> Parsed<T> {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

/// A JSONL record kind with record-local invariants beyond the serde schema.
pub trait Record: Serialize + DeserializeOwned + Send {
    fn validate(&self) -> Result<(), String> {
        Ok(())
    }
}

impl Record for Document {
    fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.source == Source::General && self.interactions.is_some() {
            return Err(format!("document {}: general-source records cannot carry interactions", self.id));
        }
        Ok(())
    }
}

impl Record for TaskSample {}

impl Record for InstructionRecord {}

impl Record for PreferencePair {
    fn validate(&self) -> Result<(), String> {
        if self.chosen == self.rejected {
            return Err("chosen equals rejected".into());
        }
        Ok(())
    }
}

/// Parses JSONL text. Blank lines are skipped.
pub fn parse_str<T: Record>(text: &str) -> Parsed<T> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let results: Vec<(usize, Result<T, String>)> = lines
        .par_iter()
        .map(|&(n, line)| {
            let r = serde_json::from_str::<T>(line)
                .map_err(|e| e.to_string())
                .and_then(|rec| rec.validate().map(|_| rec));
            (n, r)
        })
        .collect();

    let mut out = Parsed { records: Vec::new(), lines: Vec::new(), errors: Vec::new() };
    for (line, r) in results {
        match r {
            Ok(rec) => {
                out.records.push(rec);
                out.lines.push(line);
            }
            Err(message) => out.errors.push(LineError { line, message }),
        }
    }
    out
}

/// Reads and parses a JSONL file. A missing or unreadable file is fatal.
pub fn parse_jsonl<T: Record>(path: &Path) -> Result<Parsed<T>, JsonlError> {
    let text = fs::read_to_string(path).map_err(|source| JsonlError::Read { path: path.to_owned(), source })?;
    Ok(parse_str(&text))
}

/// Reads a corpus and enforces id uniqueness: later duplicates become line errors.
pub fn parse_corpus(path: &Path) -> Result<Parsed<Document>, JsonlError> {
    let parsed = parse_jsonl::<Document>(path)?;
    Ok(dedup_ids(parsed))
}

pub fn dedup_ids(parsed: Parsed<Document>) -> Parsed<Document> {
    let mut seen = HashSet::new();
    let mut out = Parsed { records: Vec::new(), lines: Vec::new(), errors: parsed.errors };
    for (doc, line) in parsed.records.into_iter().zip(parsed.lines) {
        if seen.insert(doc.id.clone()) {
            out.records.push(doc);
            out.lines.push(line);
        } else {
            out.errors.push(LineError { line, message: format!("duplicate id {:?}", doc.id) });
        }
    }
    out.errors.sort_by_key(|e| e.line);
    out
}

/// Canonical single-line JSON for one record.
pub fn to_line<T: Serialize>(record: &T) -> Result<String, serde_json::Error> {
    serde_json::to_string(record)
}

pub fn write_records<T: Serialize, W: Write>(mut w: W, records: &[T]) -> io::Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(io::Error::other)?;
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), JsonlError> {
    let file = fs::File::create(path).map_err(|source| JsonlError::Write { path: path.to_owned(), source })?;
    write_records(io::BufWriter::new(file), records)
        .map_err(|source| JsonlError::Write { path: path.to_owned(), source })
}
