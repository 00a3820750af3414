//! Descriptor ontology parsing and subject-area projection.
//!
//! The ontology is a forest of descriptors, each holding one or more tree
//! numbers (locators) such as `C18.654.726.500`. The leading character of a
//! locator names its first-level branch (L1); the full first segment (`C18`)
//! names its second-level heading (L2). A descriptor may carry locators in
//! several branches, so projecting it onto the L1/L2 bases yields a count
//! vector rather than a single category.

mod nlm_xml;

pub use nlm_xml::parse_ontology_xml;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Branch letters retained by default. The excluded branches
/// (H, I, K, M, V, Z) hold non-technical headings.
pub const DEFAULT_BRANCHES: [char; 10] = ['A', 'B', 'C', 'D', 'E', 'F', 'G', 'J', 'L', 'N'];

/// Every branch letter the ontology may use.
pub const ALL_BRANCHES: [char; 16] = [
    'A', 'B', 'C', 'D', 'E', 'F', 'G', 'H', 'I', 'J', 'K', 'L', 'M', 'N', 'V', 'Z',
];

/// Projection level: L1 = branch letters, L2 = second-level headings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    L1,
    L2,
}

impl Level {
    pub fn as_u8(self) -> u8 {
        match self {
            Level::L1 => 1,
            Level::L2 => 2,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Level::L1),
            2 => Ok(Level::L2),
            other => Err(Error::Config(format!("invalid level {other}, expected 1 or 2"))),
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.as_u8())
    }
}

/// One locator path in the ontology tree, e.g. `C18.654.726.500`.
///
/// The first segment is a branch letter followed by a two-digit code and
/// doubles as the locator's L2 heading; later segments are numeric codes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TreeNumber {
    segments: Vec<String>,
}

impl TreeNumber {
    /// Parse a dotted locator. Returns a plain message; callers attach
    /// file/line context.
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty tree number".to_string());
        }
        let segments: Vec<String> = s.split('.').map(str::to_string).collect();
        let head = &segments[0];
        let mut chars = head.chars();
        let branch = chars.next().unwrap();
        if !ALL_BRANCHES.contains(&branch) {
            return Err(format!("unknown branch letter in locator `{s}`"));
        }
        let code = chars.as_str();
        if code.len() != 2 || !code.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!(
                "first segment of `{s}` must be a branch letter plus a two-digit code"
            ));
        }
        for seg in &segments[1..] {
            if seg.is_empty() || !seg.bytes().all(|b| b.is_ascii_digit()) {
                return Err(format!("non-numeric segment `{seg}` in locator `{s}`"));
            }
        }
        Ok(TreeNumber { segments })
    }

    /// The L1 branch letter.
    pub fn branch(&self) -> char {
        self.segments[0].chars().next().unwrap()
    }

    /// The L2 heading code (first segment). A single-segment locator is
    /// itself an L2 node and maps to itself.
    pub fn l2_code(&self) -> &str {
        &self.segments[0]
    }

    /// Number of segments; `C18` has depth 1.
    pub fn depth(&self) -> usize {
        self.segments.len()
    }
}

impl fmt::Display for TreeNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.segments.join("."))
    }
}

impl TryFrom<String> for TreeNumber {
    type Error = String;
    fn try_from(s: String) -> std::result::Result<Self, String> {
        TreeNumber::parse(&s)
    }
}

impl From<TreeNumber> for String {
    fn from(t: TreeNumber) -> String {
        t.to_string()
    }
}

/// A descriptor: an identifier, a display name, and its locator set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Descriptor {
    pub id: String,
    pub name: String,
    pub tree_numbers: Vec<TreeNumber>,
}

/// Tallies collected while building the tree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyStats {
    /// Records seen in the source, including ones later dropped.
    pub descriptors_read: usize,
    pub descriptors_kept: usize,
    /// Descriptors whose every locator fell outside the branch filter.
    pub descriptors_dropped: usize,
    pub locators_read: usize,
    /// Locators pruned because their branch is excluded.
    pub locators_pruned: usize,
    /// Retained locators that are second-level top nodes (one segment).
    pub top_node_locators: usize,
}

/// Per-article count vector over the L1 branch basis or the L2 heading basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaVector {
    pub level: Level,
    pub counts: Vec<u32>,
}

impl SaVector {
    pub fn zero(level: Level, dim: usize) -> Self {
        SaVector {
            level,
            counts: vec![0; dim],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// Indices of the non-zero categories.
    pub fn present(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn add_assign(&mut self, other: &SaVector) -> Result<()> {
        if self.level != other.level || self.counts.len() != other.counts.len() {
            return Err(Error::LevelMismatch {
                expected: self.level.as_u8(),
                found: other.level.as_u8(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }
}

/// Policy for descriptor ids that do not resolve against the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissingPolicy {
    /// Skip the id and count it.
    Skip,
    /// Fail the projection.
    Error,
}

/// An article projection plus the number of ids that did not resolve.
#[derive(Debug, Clone)]
pub struct ArticleProjection {
    pub sa: SaVector,
    pub unresolved: usize,
}

/// The parsed, branch-filtered ontology. Immutable once built; share freely
/// across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OntologyTree {
    descriptors: BTreeMap<String, Descriptor>,
    branch_filter: BTreeSet<char>,
    branches: Vec<char>,
    l2_index: Vec<String>,
    #[serde(skip)]
    l2_pos: HashMap<String, usize>,
    stats: OntologyStats,
}

impl OntologyTree {
    /// Build a tree from raw descriptor records. `line_of` carries source
    /// positions for error reporting; records wholly outside the filter are
    /// dropped and tallied.
    pub fn build(
        records: Vec<(usize, Descriptor)>,
        branch_filter: &BTreeSet<char>,
        path: &str,
    ) -> Result<Self> {
        let mut stats = OntologyStats::default();
        let mut descriptors = BTreeMap::new();
        let mut seen_ids = BTreeSet::new();
        let mut l2_codes = BTreeSet::new();

        for (line, mut desc) in records {
            stats.descriptors_read += 1;
            stats.locators_read += desc.tree_numbers.len();
            if !seen_ids.insert(desc.id.clone()) {
                return Err(Error::DuplicateDescriptor {
                    path: path.to_string(),
                    line,
                    id: desc.id,
                });
            }
            desc.tree_numbers
                .retain(|tn| branch_filter.contains(&tn.branch()));
            if desc.tree_numbers.is_empty() {
                stats.descriptors_dropped += 1;
                continue;
            }
            desc.tree_numbers.sort();
            desc.tree_numbers.dedup();
            stats.top_node_locators += desc
                .tree_numbers
                .iter()
                .filter(|tn| tn.depth() == 1)
                .count();
            for tn in &desc.tree_numbers {
                l2_codes.insert(tn.l2_code().to_string());
            }
            stats.descriptors_kept += 1;
            descriptors.insert(desc.id.clone(), desc);
        }

        let l2_index: Vec<String> = l2_codes.into_iter().collect();
        let l2_pos = l2_index
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let branches: Vec<char> = branch_filter.iter().copied().collect();

        // stats.locators_pruned derived from totals
        let kept_locators: usize = descriptors
            .values()
            .map(|d| d.tree_numbers.len())
            .sum();
        stats.locators_pruned = stats.locators_read.saturating_sub(kept_locators);

        Ok(OntologyTree {
            descriptors,
            branch_filter: branch_filter.clone(),
            branches,
            l2_index,
            l2_pos,
            stats,
        })
    }

    /// Rebuild the derived lookup table after deserialization.
    pub fn rebuild_index(&mut self) {
        self.l2_pos = self
            .l2_index
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
    }

    pub fn branch_filter(&self) -> &BTreeSet<char> {
        &self.branch_filter
    }

    /// The ordered L1 basis (sorted retained branch letters).
    pub fn branches(&self) -> &[char] {
        &self.branches
    }

    /// The ordered L2 basis (sorted second-level heading codes).
    pub fn l2_index(&self) -> &[String] {
        &self.l2_index
    }

    pub fn stats(&self) -> &OntologyStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Descriptor> {
        self.descriptors.get(id)
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &Descriptor> {
        self.descriptors.values()
    }

    fn branch_position(&self, b: char) -> Option<usize> {
        self.branches.binary_search(&b).ok()
    }

    /// Count the descriptor's locators per branch letter.
    pub fn project_l1(&self, id: &str) -> Result<SaVector> {
        let desc = self
            .descriptors
            .get(id)
            .ok_or_else(|| Error::UnknownDescriptor(id.to_string()))?;
        let mut counts = vec![0u32; self.branches.len()];
        for tn in &desc.tree_numbers {
            // retained locators are always inside the filter
            let pos = self.branch_position(tn.branch()).expect("filtered branch");
            counts[pos] += 1;
        }
        Ok(SaVector {
            level: Level::L1,
            counts,
        })
    }

    /// Count the descriptor's locators per L2 heading. Single-segment
    /// locators are L2 nodes and count toward themselves.
    pub fn project_l2(&self, id: &str) -> Result<SaVector> {
        let desc = self
            .descriptors
            .get(id)
            .ok_or_else(|| Error::UnknownDescriptor(id.to_string()))?;
        let mut counts = vec![0u32; self.l2_index.len()];
        for tn in &desc.tree_numbers {
            let pos = *self.l2_pos.get(tn.l2_code()).expect("indexed L2 code");
            counts[pos] += 1;
        }
        Ok(SaVector {
            level: Level::L2,
            counts,
        })
    }

    fn project(&self, id: &str, level: Level) -> Result<SaVector> {
        match level {
            Level::L1 => self.project_l1(id),
            Level::L2 => self.project_l2(id),
        }
    }

    /// Element-wise sum of per-descriptor projections for one article.
    pub fn article_sa<'a, I>(
        &self,
        ids: I,
        level: Level,
        policy: MissingPolicy,
    ) -> Result<ArticleProjection>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let dim = match level {
            Level::L1 => self.branches.len(),
            Level::L2 => self.l2_index.len(),
        };
        let mut sa = SaVector::zero(level, dim);
        let mut unresolved = 0;
        for id in ids {
            match self.project(id, level) {
                Ok(v) => sa.add_assign(&v)?,
                Err(Error::UnknownDescriptor(id)) => match policy {
                    MissingPolicy::Skip => unresolved += 1,
                    MissingPolicy::Error => return Err(Error::UnknownDescriptor(id)),
                },
                Err(e) => return Err(e),
            }
        }
        Ok(ArticleProjection { sa, unresolved })
    }

    /// Labels of the projection basis at a level.
    pub fn labels(&self, level: Level) -> Vec<String> {
        match level {
            Level::L1 => self.branches.iter().map(|c| c.to_string()).collect(),
            Level::L2 => self.l2_index.clone(),
        }
    }
}

/// Parse the simplified tab-separated ontology format:
/// `id<TAB>name<TAB>tree_numbers` with `;`-separated locators and
/// `#`-prefixed comment lines.
pub fn parse_ontology_tsv(
    source: &str,
    branch_filter: &BTreeSet<char>,
    path: &str,
) -> Result<OntologyTree> {
    let mut records = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let (id, name, numbers) = match (fields.next(), fields.next(), fields.next()) {
            (Some(id), Some(name), Some(numbers)) if fields.next().is_none() => {
                (id.trim(), name.trim(), numbers.trim())
            }
            _ => {
                return Err(Error::OntologyParse {
                    path: path.to_string(),
                    line: line_no,
                    message: "expected 3 tab-separated fields: id, name, tree_numbers".to_string(),
                })
            }
        };
        if id.is_empty() {
            return Err(Error::OntologyParse {
                path: path.to_string(),
                line: line_no,
                message: "empty descriptor id".to_string(),
            });
        }
        let mut tree_numbers = Vec::new();
        for part in numbers.split(';') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let tn = TreeNumber::parse(part).map_err(|message| Error::OntologyParse {
                path: path.to_string(),
                line: line_no,
                message,
            })?;
            tree_numbers.push(tn);
        }
        if tree_numbers.is_empty() {
            return Err(Error::OntologyParse {
                path: path.to_string(),
                line: line_no,
                message: format!("descriptor {id} has no tree numbers"),
            });
        }
        records.push((
            line_no,
            Descriptor {
                id: id.to_string(),
                name: name.to_string(),
                tree_numbers,
            },
        ));
    }
    OntologyTree::build(records, branch_filter, path)
}

/// The default branch filter as a set.
pub fn default_branch_filter() -> BTreeSet<char> {
    DEFAULT_BRANCHES.iter().copied().collect()
}
