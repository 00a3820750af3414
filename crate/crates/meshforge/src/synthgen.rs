//! Seeded synthetic corpus and ontology generation with planted ground
//! truth: block-structured co-occurrence, optional growing bridge nodes,
//! per-journal diversity propensities, and a team-size mix. Used to
//! validate clustering recovery, emerging-bridge detection, and ranking
//! exports at desk scale.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::corpus::{ArticleRecord, MeshRef};
use crate::diversity::diversity_bound;
use crate::error::{Error, Result};
use crate::ontology::TreeNumber;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockSpec {
    /// Second-level heading codes forming one planted cluster.
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BridgeSpec {
    /// Label whose cross-cluster co-occurrence grows over the span.
    pub node: String,
    /// Probability that an article is a bridge article at span start…
    pub start_rate: f64,
    /// …and at span end, interpolated linearly in between.
    pub end_rate: f64,
    /// Constant rate of home-block articles keeping the node anchored in
    /// its own cluster. Bridge nodes are excluded from background draws, so
    /// without cross articles they sit at the bottom of their cluster's
    /// bridge ranking.
    #[serde(default = "default_home_rate")]
    pub home_rate: f64,
}

fn default_home_rate() -> f64 {
    0.02
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JournalSpec {
    pub name: String,
    /// Desired mean diversity; mapped monotonically onto the probability
    /// of drawing from two blocks instead of one.
    pub diversity_target: f64,
    /// Relative share of articles.
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedSpec {
    pub years: (i32, i32),
    pub articles_per_year: usize,
    pub blocks: Vec<BlockSpec>,
    /// Per-article probability of one label swapped into a foreign block;
    /// keeps the network connected without washing out the planting.
    pub between_rate: f64,
    pub bridges: Vec<BridgeSpec>,
    pub journals: Vec<JournalSpec>,
    /// Weights for solo / small / medium / large author counts.
    pub team_weights: [f64; 4],
    /// Mean descriptor count per article.
    pub mean_mesh: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            years: (1970, 2018),
            articles_per_year: 500,
            blocks: Vec::new(),
            between_rate: 0.05,
            bridges: Vec::new(),
            journals: Vec::new(),
            team_weights: [0.1, 0.5, 0.3, 0.1],
            mean_mesh: 4.0,
            seed: 42,
        }
    }
}

impl PlantedSpec {
    /// Load a spec from a TOML file (same config syntax as the pipeline).
    pub fn load(path: &Path) -> Result<PlantedSpec> {
        let text = std::fs::read_to_string(path)?;
        let spec: PlantedSpec = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.years.0 > self.years.1 {
            return Err(Error::Config("year span is inverted".to_string()));
        }
        if self.articles_per_year == 0 {
            return Err(Error::Config("articles_per_year must be positive".to_string()));
        }
        if self.blocks.is_empty() || self.blocks.iter().any(|b| b.labels.is_empty()) {
            return Err(Error::Config("blocks must be non-empty".to_string()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for block in &self.blocks {
            for label in &block.labels {
                TreeNumber::parse(label)
                    .map_err(|m| Error::Config(format!("bad label {label}: {m}")))?;
                if !seen.insert(label.clone()) {
                    return Err(Error::Config(format!("label {label} in two blocks")));
                }
            }
        }
        for rate in [self.between_rate].into_iter().chain(
            self.bridges
                .iter()
                .flat_map(|b| [b.start_rate, b.end_rate, b.home_rate]),
        ) {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("rate {rate} outside [0, 1]")));
            }
        }
        for bridge in &self.bridges {
            if !seen.contains(&bridge.node) {
                return Err(Error::Config(format!(
                    "bridge node {} is not in any block",
                    bridge.node
                )));
            }
        }
        if !self.bridges.is_empty() {
            for (i, block) in self.blocks.iter().enumerate() {
                let background = block
                    .labels
                    .iter()
                    .filter(|l| self.bridges.iter().all(|b| &b.node != *l))
                    .count();
                if background < 2 {
                    return Err(Error::Config(format!(
                        "block {i} needs at least 2 non-bridge labels"
                    )));
                }
            }
        }
        let branches: std::collections::BTreeSet<char> = seen
            .iter()
            .map(|l| l.chars().next().unwrap())
            .collect();
        let bound = diversity_bound(branches.len());
        for journal in &self.journals {
            if journal.diversity_target < 0.0 || journal.diversity_target > bound {
                return Err(Error::Config(format!(
                    "journal {} diversity target {} exceeds the bound {bound:.4} for {} branches",
                    journal.name,
                    journal.diversity_target,
                    branches.len()
                )));
            }
            if journal.weight < 0.0 {
                return Err(Error::Config("journal weight must be non-negative".to_string()));
            }
        }
        if self.mean_mesh < 1.0 {
            return Err(Error::Config("mean_mesh must be at least 1".to_string()));
        }
        if self.team_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Config("team weights must sum to a positive value".to_string()));
        }
        Ok(())
    }

    fn span_years(&self) -> i32 {
        self.years.1 - self.years.0 + 1
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedBridgeTruth {
    pub node: String,
    pub home_block: usize,
    pub start_rate: f64,
    pub end_rate: f64,
}

/// What was planted, for recovery checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema: String,
    pub seed: u64,
    pub years: (i32, i32),
    pub blocks: Vec<Vec<String>>,
    pub bridges: Vec<PlantedBridgeTruth>,
    /// Journal names ordered by descending planted diversity target.
    pub journals_by_target: Vec<String>,
}

pub struct SyntheticCorpus {
    pub ontology_tsv: String,
    pub records: Vec<ArticleRecord>,
    pub ground_truth: GroundTruth,
}

pub struct SyntheticPaths {
    pub corpus: PathBuf,
    pub ontology: PathBuf,
    pub ground_truth: PathBuf,
}

fn ontology_tsv(spec: &PlantedSpec) -> String {
    let mut labels: Vec<&String> = spec.blocks.iter().flat_map(|b| &b.labels).collect();
    labels.sort();
    let mut out = String::from("# synthetic ontology\n");
    for label in labels {
        out.push_str(&format!("{label}\tSynthetic {label}\t{label}\n"));
    }
    out
}

fn ground_truth(spec: &PlantedSpec) -> GroundTruth {
    let home_of = |node: &str| {
        spec.blocks
            .iter()
            .position(|b| b.labels.iter().any(|l| l == node))
            .expect("validated bridge node")
    };
    let mut journals: Vec<&JournalSpec> = spec.journals.iter().collect();
    journals.sort_by(|a, b| {
        b.diversity_target
            .partial_cmp(&a.diversity_target)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.name.cmp(&b.name))
    });
    GroundTruth {
        schema: "meshforge.ground-truth.v1".to_string(),
        seed: spec.seed,
        years: spec.years,
        blocks: spec.blocks.iter().map(|b| b.labels.clone()).collect(),
        bridges: spec
            .bridges
            .iter()
            .map(|b| PlantedBridgeTruth {
                node: b.node.clone(),
                home_block: home_of(&b.node),
                start_rate: b.start_rate,
                end_rate: b.end_rate,
            })
            .collect(),
        journals_by_target: journals.into_iter().map(|j| j.name.clone()).collect(),
    }
}

/// Drive `sink` with every generated record in deterministic order.
pub fn for_each_record<F>(spec: &PlantedSpec, mut sink: F) -> Result<GroundTruth>
where
    F: FnMut(ArticleRecord) -> Result<()>,
{
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let poisson = Poisson::new(spec.mean_mesh.max(1.0)).expect("positive mean");
    let branch_count: std::collections::BTreeSet<char> = spec
        .blocks
        .iter()
        .flat_map(|b| &b.labels)
        .map(|l| l.chars().next().unwrap())
        .collect();
    let bound = diversity_bound(branch_count.len());
    let journal_weights: Vec<f64> = spec.journals.iter().map(|j| j.weight).collect();
    let bridge_home: Vec<usize> = spec
        .bridges
        .iter()
        .map(|b| {
            spec.blocks
                .iter()
                .position(|blk| blk.labels.iter().any(|l| l == &b.node))
                .unwrap()
        })
        .collect();
    // bridge nodes appear only through their dedicated articles
    let background: Vec<Vec<String>> = spec
        .blocks
        .iter()
        .map(|blk| {
            blk.labels
                .iter()
                .filter(|l| spec.bridges.iter().all(|b| &b.node != *l))
                .cloned()
                .collect()
        })
        .collect();
    let span = (spec.span_years() - 1).max(1) as f64;

    let mut seq = 0u64;
    for year in spec.years.0..=spec.years.1 {
        let progress = (year - spec.years.0) as f64 / span;
        for _ in 0..spec.articles_per_year {
            seq += 1;
            let k = (poisson.sample(&mut rng) as usize).clamp(1, 12);

            // journal and its mixing propensity
            let (journal, p_mix) = if spec.journals.is_empty() {
                ("Synth. J.".to_string(), 0.0)
            } else {
                let idx = weighted_index(&journal_weights, &mut rng);
                let j = &spec.journals[idx];
                (j.name.clone(), (j.diversity_target / bound).clamp(0.0, 1.0))
            };

            let authors = sample_team(&spec.team_weights, &mut rng);

            // bridge articles concentrate cross-cluster mass on one node;
            // home-support articles anchor it in its own cluster
            let mut labels: Vec<String> = Vec::with_capacity(k + 1);
            let mut is_bridge = false;
            for (b, bridge) in spec.bridges.iter().enumerate() {
                let rate = bridge.start_rate + (bridge.end_rate - bridge.start_rate) * progress;
                if rng.gen_bool(rate.clamp(0.0, 1.0)) {
                    let foreign = other_block(spec, bridge_home[b], &mut rng);
                    labels.push(bridge.node.clone());
                    labels.extend(pick_labels(&background[foreign], k.max(2) - 1, &mut rng));
                    is_bridge = true;
                } else if rng.gen_bool(bridge.home_rate.clamp(0.0, 1.0)) {
                    labels.push(bridge.node.clone());
                    labels.extend(pick_labels(
                        &background[bridge_home[b]],
                        k.max(2) - 1,
                        &mut rng,
                    ));
                    is_bridge = true;
                }
                if is_bridge {
                    break;
                }
            }

            if !is_bridge {
                let home = rng.gen_range(0..spec.blocks.len());
                if spec.blocks.len() > 1 && rng.gen_bool(p_mix) {
                    let second = other_block(spec, home, &mut rng);
                    let k2 = (k / 2).max(1);
                    let k1 = (k - k2).max(1);
                    labels.extend(pick_labels(&background[home], k1, &mut rng));
                    labels.extend(pick_labels(&background[second], k2, &mut rng));
                } else {
                    labels.extend(pick_labels(&background[home], k, &mut rng));
                    if spec.blocks.len() > 1 && rng.gen_bool(spec.between_rate) {
                        let foreign = other_block(spec, home, &mut rng);
                        let swap = &background[foreign][rng.gen_range(0..background[foreign].len())];
                        let last = labels.len() - 1;
                        labels[last] = swap.clone();
                    }
                }
            }

            labels.sort();
            labels.dedup();
            let mut mesh: Vec<MeshRef> = labels
                .into_iter()
                .map(|id| MeshRef { id, major: true })
                .collect();
            // sprinkle a minor heading so major-only filtering has work to do
            if rng.gen_bool(0.3) {
                let block = rng.gen_range(0..spec.blocks.len());
                let label =
                    spec.blocks[block].labels[rng.gen_range(0..spec.blocks[block].labels.len())].clone();
                mesh.push(MeshRef {
                    id: label,
                    major: false,
                });
            }

            sink(ArticleRecord {
                pmid: format!("S{seq:08}"),
                year,
                journal,
                authors,
                mesh,
                ptype: Some("Journal Article".to_string()),
            })?;
        }
    }
    Ok(ground_truth(spec))
}

/// Generate everything in memory.
pub fn generate(spec: &PlantedSpec) -> Result<SyntheticCorpus> {
    let mut records = Vec::new();
    let ground_truth = for_each_record(spec, |rec| {
        records.push(rec);
        Ok(())
    })?;
    Ok(SyntheticCorpus {
        ontology_tsv: ontology_tsv(spec),
        records,
        ground_truth,
    })
}

/// Stream the corpus straight to `dir` as `corpus.jsonl`, `ontology.tsv`
/// and `ground_truth.json`.
pub fn write_corpus(spec: &PlantedSpec, dir: &Path) -> Result<SyntheticPaths> {
    std::fs::create_dir_all(dir)?;
    let corpus = dir.join("corpus.jsonl");
    let ontology = dir.join("ontology.tsv");
    let truth_path = dir.join("ground_truth.json");

    let mut out = std::io::BufWriter::new(std::fs::File::create(&corpus)?);
    let truth = for_each_record(spec, |rec| {
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
        Ok(())
    })?;
    out.flush()?;

    std::fs::write(&ontology, ontology_tsv(spec))?;
    std::fs::write(&truth_path, serde_json::to_string_pretty(&truth)?)?;
    Ok(SyntheticPaths {
        corpus,
        ontology,
        ground_truth: truth_path,
    })
}

fn weighted_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return 0;
    }
    let mut roll = rng.gen_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if roll < *w {
            return i;
        }
        roll -= w;
    }
    weights.len() - 1
}

fn sample_team(weights: &[f64; 4], rng: &mut ChaCha8Rng) -> u32 {
    match weighted_index(weights, rng) {
        0 => 1,
        1 => rng.gen_range(2..=5),
        2 => rng.gen_range(6..=10),
        _ => rng.gen_range(11..=50),
    }
}

fn other_block(spec: &PlantedSpec, home: usize, rng: &mut ChaCha8Rng) -> usize {
    let n = spec.blocks.len();
    if n <= 1 {
        return home;
    }
    let pick = rng.gen_range(0..n - 1);
    if pick >= home {
        pick + 1
    } else {
        pick
    }
}

/// Up to `k` distinct labels from a pool, uniformly without replacement.
fn pick_labels(pool: &[String], k: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let k = k.min(pool.len());
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    idx.partial_shuffle(rng, k);
    idx[..k].iter().map(|&i| pool[i].clone()).collect()
}

/// A simple three-block layout over branches C, D and N.
pub fn three_block_layout(labels_per_block: usize) -> Vec<BlockSpec> {
    let make = |branch: char| BlockSpec {
        labels: (1..=labels_per_block)
            .map(|i| format!("{branch}{i:02}"))
            .collect(),
    };
    vec![make('C'), make('D'), make('N')]
}
