//! Article-record ingestion from corpus files and a PubMed-style API.
//!
//! The corpus format is JSONL: one object per line with `pmid`, `year`,
//! `journal`, `authors` and a `mesh` array of `{id, major}` entries.
//! Ingestion is streaming with bounded memory; files can also be split
//! into newline-aligned byte shards whose per-shard stats and accumulators
//! merge associatively.

pub mod fetch;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshRef {
    pub id: String,
    pub major: bool,
}

/// One publication record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub pmid: String,
    pub year: i32,
    #[serde(default)]
    pub journal: String,
    /// Coauthor count; 0 means unknown.
    #[serde(default)]
    pub authors: u32,
    pub mesh: Vec<MeshRef>,
    /// Publication type, when the source records one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ptype: Option<String>,
}

impl ArticleRecord {
    pub fn major_mesh(&self) -> impl Iterator<Item = &str> {
        self.mesh
            .iter()
            .filter(|m| m.major)
            .map(|m| m.id.as_str())
    }

    pub fn mesh_ids(&self) -> impl Iterator<Item = &str> {
        self.mesh.iter().map(|m| m.id.as_str())
    }
}

/// Keep all descriptor references or only the major ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshFilter {
    #[default]
    MajorOnly,
    All,
}

/// What to do with malformed lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorPolicy {
    #[default]
    Skip,
    Fail,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestOptions {
    pub filter: MeshFilter,
    pub on_error: ErrorPolicy,
    /// Inclusive year range; records outside are dropped.
    pub year_range: Option<(i32, i32)>,
    /// Publication-type allowlist. Empty set = no filtering; records
    /// without a type always pass.
    pub publication_types: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub articles_read: u64,
    pub articles_kept: u64,
    pub dropped_no_major_mesh: u64,
    pub dropped_year_range: u64,
    pub dropped_publication_type: u64,
    pub malformed_lines: u64,
    /// Filled downstream when projections meet unknown descriptor ids.
    pub unresolved_mesh_refs: u64,
}

impl CorpusStats {
    pub fn merge(&mut self, other: &CorpusStats) {
        self.articles_read += other.articles_read;
        self.articles_kept += other.articles_kept;
        self.dropped_no_major_mesh += other.dropped_no_major_mesh;
        self.dropped_year_range += other.dropped_year_range;
        self.dropped_publication_type += other.dropped_publication_type;
        self.malformed_lines += other.malformed_lines;
        self.unresolved_mesh_refs += other.unresolved_mesh_refs;
    }
}

/// Streaming JSONL reader applying the ingest filters. Iterate it, then
/// read the final tallies from [`JsonlIngest::stats`].
pub struct JsonlIngest<R> {
    reader: R,
    path: String,
    opts: IngestOptions,
    stats: CorpusStats,
    line_no: usize,
    /// Byte budget for shard reads; `None` reads to EOF.
    remaining: Option<u64>,
    buf: String,
}

impl JsonlIngest<BufReader<File>> {
    pub fn open(path: &Path, opts: IngestOptions) -> Result<Self> {
        let file = File::open(path)?;
        Ok(JsonlIngest::new(
            BufReader::with_capacity(1 << 16, file),
            path.display().to_string(),
            opts,
        ))
    }
}

impl<R: BufRead> JsonlIngest<R> {
    pub fn new(reader: R, path: String, opts: IngestOptions) -> Self {
        JsonlIngest {
            reader,
            path,
            opts,
            stats: CorpusStats::default(),
            line_no: 0,
            remaining: None,
            buf: String::new(),
        }
    }

    pub fn with_byte_budget(mut self, bytes: u64) -> Self {
        self.remaining = Some(bytes);
        self
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn into_stats(self) -> CorpusStats {
        self.stats
    }

    /// Apply the record-level filters. Returns None when dropped.
    fn admit(&mut self, mut rec: ArticleRecord) -> Option<ArticleRecord> {
        if let Some((lo, hi)) = self.opts.year_range {
            if rec.year < lo || rec.year > hi {
                self.stats.dropped_year_range += 1;
                return None;
            }
        }
        if !self.opts.publication_types.is_empty() {
            if let Some(pt) = &rec.ptype {
                if !self.opts.publication_types.contains(pt) {
                    self.stats.dropped_publication_type += 1;
                    return None;
                }
            }
        }
        if self.opts.filter == MeshFilter::MajorOnly {
            rec.mesh.retain(|m| m.major);
            if rec.mesh.is_empty() {
                self.stats.dropped_no_major_mesh += 1;
                return None;
            }
        }
        self.stats.articles_kept += 1;
        Some(rec)
    }
}

impl<R: BufRead> Iterator for JsonlIngest<R> {
    type Item = Result<ArticleRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(0) = self.remaining {
                return None;
            }
            self.buf.clear();
            let read = match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(n) => n,
                Err(e) => return Some(Err(e.into())),
            };
            if let Some(rem) = self.remaining.as_mut() {
                *rem = rem.saturating_sub(read as u64);
            }
            self.line_no += 1;
            let line = self.buf.trim();
            if line.is_empty() {
                continue;
            }
            self.stats.articles_read += 1;
            match serde_json::from_str::<ArticleRecord>(line) {
                Ok(rec) => {
                    if let Some(rec) = self.admit(rec) {
                        return Some(Ok(rec));
                    }
                }
                Err(e) => {
                    self.stats.malformed_lines += 1;
                    if self.opts.on_error == ErrorPolicy::Fail {
                        return Some(Err(Error::Record {
                            path: self.path.clone(),
                            line: self.line_no,
                            message: e.to_string(),
                        }));
                    }
                    log::debug!("{}:{}: skipping malformed line: {e}", self.path, self.line_no);
                }
            }
        }
    }
}

/// Newline-aligned byte ranges splitting a file into about `shards` pieces.
pub fn shard_ranges(path: &Path, shards: usize) -> Result<Vec<(u64, u64)>> {
    let len = std::fs::metadata(path)?.len();
    let shards = shards.max(1) as u64;
    if len == 0 {
        return Ok(vec![]);
    }
    let step = (len / shards).max(1);
    let mut file = BufReader::new(File::open(path)?);
    let mut cuts = vec![0u64];
    for k in 1..shards {
        let target = k * step;
        if target >= len {
            break;
        }
        file.seek(SeekFrom::Start(target))?;
        // advance to the next line start
        let mut sink = Vec::new();
        let skipped = file.read_until(b'\n', &mut sink)? as u64;
        let cut = (target + skipped).min(len);
        if cut > *cuts.last().unwrap() && cut < len {
            cuts.push(cut);
        }
    }
    cuts.push(len);
    Ok(cuts.windows(2).map(|w| (w[0], w[1])).collect())
}

/// Open one shard produced by [`shard_ranges`].
pub fn open_shard(
    path: &Path,
    range: (u64, u64),
    opts: IngestOptions,
) -> Result<JsonlIngest<BufReader<File>>> {
    let mut file = File::open(path)?;
    file.seek(SeekFrom::Start(range.0))?;
    let reader = BufReader::with_capacity(1 << 16, file);
    Ok(
        JsonlIngest::new(reader, format!("{}@{}", path.display(), range.0), opts)
            .with_byte_budget(range.1 - range.0),
    )
}

/// Non-overlapping inclusive year windows routing records to indexes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSet {
    windows: Vec<(i32, i32)>,
}

impl WindowSet {
    pub fn new(mut windows: Vec<(i32, i32)>) -> Result<WindowSet> {
        for &(lo, hi) in &windows {
            if lo > hi {
                return Err(Error::Config(format!("window {lo}-{hi} is inverted")));
            }
        }
        windows.sort();
        for pair in windows.windows(2) {
            if pair[1].0 <= pair[0].1 {
                return Err(Error::Config(format!(
                    "windows {}-{} and {}-{} overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        Ok(WindowSet { windows })
    }

    /// Annual windows covering an inclusive span.
    pub fn annual(span: (i32, i32)) -> Result<WindowSet> {
        if span.0 > span.1 {
            return Err(Error::Config(format!(
                "span {}-{} is inverted",
                span.0, span.1
            )));
        }
        WindowSet::new((span.0..=span.1).map(|y| (y, y)).collect())
    }

    pub fn windows(&self) -> &[(i32, i32)] {
        &self.windows
    }

    /// Index of the window containing `year`, if any.
    pub fn index_of(&self, year: i32) -> Option<usize> {
        self.windows
            .binary_search_by(|&(lo, hi)| {
                if year < lo {
                    std::cmp::Ordering::Greater
                } else if year > hi {
                    std::cmp::Ordering::Less
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .ok()
    }
}

/// Digest a file with SHA-256, streaming.
pub fn file_digest(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex_str(&hasher.finalize()))
}

pub(crate) fn hex_str(bytes: &[u8]) -> String {
    use std::fmt::Write;
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(s, "{b:02x}").unwrap();
    }
    s
}
