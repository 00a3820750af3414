//! Declarative pipeline configuration.
//!
//! A single TOML file names the inputs and fixes every analysis knob:
//! windows, levels, seeds, thresholds. CLI flags override individual
//! fields; the digest of the fully resolved config goes into the run
//! manifest, so identical manifests imply identical settings.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{hex_str, ErrorPolicy, MeshFilter, WindowSet};
use crate::diversity::JlRule;
use crate::error::{Error, Result};
use crate::ontology::{Level, DEFAULT_BRANCHES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OntologyFormat {
    #[default]
    Auto,
    Tsv,
    Xml,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsConfig {
    pub ontology: PathBuf,
    #[serde(default)]
    pub corpus: Vec<PathBuf>,
    #[serde(default)]
    pub ontology_format: OntologyFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OntologyConfig {
    pub branches: Vec<char>,
}

impl Default for OntologyConfig {
    fn default() -> Self {
        OntologyConfig {
            branches: DEFAULT_BRANCHES.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusConfig {
    pub mesh_filter: MeshFilter,
    pub year_range: (i32, i32),
    /// Allowlist; records without a recorded type always pass, and an
    /// empty list disables the filter.
    pub publication_types: Vec<String>,
    pub on_error: ErrorPolicy,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            mesh_filter: MeshFilter::MajorOnly,
            year_range: (1970, 2018),
            publication_types: vec!["Journal Article".to_string(), "Review".to_string()],
            on_error: ErrorPolicy::Skip,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowsConfig {
    /// Coarse non-overlapping periods for the exported matrices.
    pub periods: Vec<(i32, i32)>,
    /// Also accumulate 1-year matrices (needed by bridges/continuity).
    pub annual: bool,
}

impl Default for WindowsConfig {
    fn default() -> Self {
        WindowsConfig {
            periods: vec![(1970, 1989), (1990, 1999), (2000, 2009), (2010, 2018)],
            annual: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringConfig {
    pub seed: u64,
    pub resolution: f64,
    pub levels: Vec<u8>,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        ClusteringConfig {
            seed: 42,
            resolution: 1.0,
            levels: vec![1, 2],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BridgesConfig {
    pub level: u8,
    pub top_rank: f64,
    pub min_series_fraction: f64,
    pub p_threshold: f64,
    pub slope_threshold: f64,
    /// Regress the normalized rank instead of the raw within-cluster rank.
    pub use_normalized_rank: bool,
    /// Rank within the whole network instead of within clusters
    /// (exported alongside, never used for detection).
    pub global_ranks: bool,
    /// Centered moving-average window for the smoothed export.
    pub smoothing_window: usize,
    pub ego_k: usize,
    /// Ego-network centers; empty means the detected emerging bridges.
    pub ego_nodes: Vec<String>,
}

impl Default for BridgesConfig {
    fn default() -> Self {
        BridgesConfig {
            level: 2,
            top_rank: 20.0,
            min_series_fraction: 0.5,
            p_threshold: 0.01,
            slope_threshold: 0.1,
            use_normalized_rank: false,
            global_ranks: false,
            smoothing_window: 5,
            ego_k: 10,
            ego_nodes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuityConfig {
    /// Year window the stable cliques are computed over; the whole
    /// observation span when unset.
    pub clique_span: Option<(i32, i32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiversityConfig {
    pub level: u8,
    /// Width of the aggregation windows for means and histograms.
    pub window_years: i32,
    pub core_min: f64,
    pub flag_min: f64,
    pub jl_rule: JlRule,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        DiversityConfig {
            level: 2,
            window_years: 3,
            core_min: 0.5,
            flag_min: 0.25,
            jl_rule: JlRule::CombinedBothPresent,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub inputs: InputsConfig,
    pub ontology: OntologyConfig,
    pub corpus: CorpusConfig,
    pub windows: WindowsConfig,
    pub clustering: ClusteringConfig,
    pub bridges: BridgesConfig,
    pub continuity: ContinuityConfig,
    pub diversity: DiversityConfig,
    pub run: RunConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        let config: Config = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    /// Resolve relative input paths against the config file's directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        if self.inputs.ontology.is_relative() {
            self.inputs.ontology = base.join(&self.inputs.ontology);
        }
        for c in self.inputs.corpus.iter_mut() {
            if c.is_relative() {
                *c = base.join(&*c);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.ontology.as_os_str().is_empty() {
            return Err(Error::Config("inputs.ontology is required".to_string()));
        }
        if self.inputs.corpus.is_empty() {
            return Err(Error::Config("inputs.corpus is required".to_string()));
        }
        for b in &self.ontology.branches {
            if !crate::ontology::ALL_BRANCHES.contains(b) {
                return Err(Error::Config(format!("unknown branch letter {b}")));
            }
        }
        let (lo, hi) = self.corpus.year_range;
        if lo > hi {
            return Err(Error::Config(format!("year_range {lo}-{hi} is inverted")));
        }
        // overlapping periods are rejected here
        WindowSet::new(self.windows.periods.clone())?;
        if self.clustering.levels.is_empty() {
            return Err(Error::Config("clustering.levels must not be empty".to_string()));
        }
        for l in &self.clustering.levels {
            Level::from_u8(*l)?;
        }
        Level::from_u8(self.bridges.level)?;
        Level::from_u8(self.diversity.level)?;
        if !self.clustering.levels.contains(&self.bridges.level) {
            return Err(Error::Config(
                "bridges.level must be one of clustering.levels".to_string(),
            ));
        }
        if self.diversity.window_years < 1 {
            return Err(Error::Config("diversity.window_years must be >= 1".to_string()));
        }
        if !self.windows.annual {
            return Err(Error::Config(
                "windows.annual = false disables bridge and continuity series; \
                 remove the bridges/continuity stages by not running them instead"
                    .to_string(),
            ));
        }
        Ok(())
    }

    pub fn branch_filter(&self) -> BTreeSet<char> {
        self.ontology.branches.iter().copied().collect()
    }

    pub fn levels(&self) -> Vec<Level> {
        let mut seen = BTreeSet::new();
        self.clustering
            .levels
            .iter()
            .filter(|l| seen.insert(**l))
            .map(|&l| Level::from_u8(l).expect("validated"))
            .collect()
    }

    pub fn periods(&self) -> Result<WindowSet> {
        WindowSet::new(self.windows.periods.clone())
    }

    /// Digest of the resolved configuration.
    pub fn digest(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        hex_str(&Sha256::digest(canon.as_bytes()))
    }
}
