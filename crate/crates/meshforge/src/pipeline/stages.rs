//! Pipeline stages: ontology parsing, corpus accumulation, clustering,
//! bridge metrics, continuity, and diversity trends.
//!
//! Every stage writes its outputs into a content-addressed cache entry and
//! the run materializes the entry into the output directory, so reruns
//! with unchanged inputs reduce to checksum verification plus file copies.
//! A single streaming pass over the corpus feeds all accumulators; the
//! pass shards by byte ranges and merges shard states in order, keeping
//! exports byte-deterministic regardless of worker count.

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bridges::{
    bridge_scores, detect_emerging, ego_subnetwork, global_ranks, BridgeSeries, EmergingBridge,
    EmergingCriteria,
};
use crate::clusters::{louvain, stable_cliques, Clustering, ContinuityHistogram};
use crate::cooccur::{csv_field, CoocMatrix, MatrixMeta};
use crate::corpus::{
    file_digest, open_shard, shard_ranges, ArticleRecord, CorpusStats, IngestOptions, WindowSet,
};
use crate::diversity::{
    categorical_diversity, convergence_flag, trend_fit, DiversityAggregate, DiversityRecord,
    TeamGroup, XMode, XThresholds, YearlyFraction,
};
use crate::error::{Error, Result};
use crate::ontology::{parse_ontology_tsv, parse_ontology_xml, Level, MissingPolicy, OntologyTree, SaVector};
use crate::pipeline::cache::{materialize, Cache};
use crate::pipeline::config::{Config, OntologyFormat};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The stage to stop after; stages always run in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StageGoal {
    Ontology,
    Accumulate,
    Cluster,
    Bridges,
    Continuity,
    Diversity,
}

pub const ALL_STAGES: StageGoal = StageGoal::Diversity;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub cache_hit: bool,
    pub seconds: f64,
    pub records: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub tool_version: String,
    pub config_digest: String,
    pub ontology_digest: String,
    pub corpus_digests: Vec<(String, String)>,
    pub seed: u64,
    pub stages: Vec<StageReport>,
}

pub struct RunOptions {
    pub config: Config,
    pub out_dir: PathBuf,
    pub cache_dir: PathBuf,
}

const INCOMPLETE_MARKER: &str = ".incomplete";

/// Run the pipeline through `goal`, reusing cached stages, and write all
/// exports plus `manifest.json` into the output directory.
pub fn run_until(opts: &RunOptions, goal: StageGoal) -> Result<RunManifest> {
    let config = &opts.config;
    config.validate()?;

    std::fs::create_dir_all(&opts.out_dir)?;
    std::fs::write(opts.out_dir.join(INCOMPLETE_MARKER), b"run in progress\n")?;

    let cache = Cache::open(&opts.cache_dir)?;
    let config_digest = config.digest();
    let ontology_digest = file_digest(&config.inputs.ontology)
        .map_err(|e| e.in_stage("ontology"))?;
    let mut corpus_digests = Vec::new();
    for path in &config.inputs.corpus {
        let digest = file_digest(path).map_err(|e| e.in_stage("accumulate"))?;
        corpus_digests.push((path.display().to_string(), digest));
    }

    let mut manifest = RunManifest {
        schema: "meshforge.manifest.v1".to_string(),
        tool_version: TOOL_VERSION.to_string(),
        config_digest,
        ontology_digest: ontology_digest.clone(),
        corpus_digests: corpus_digests.clone(),
        seed: config.clustering.seed,
        stages: Vec::new(),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.run.jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let result = pool.install(|| {
        run_stages(
            config,
            &cache,
            &opts.out_dir,
            goal,
            &ontology_digest,
            &corpus_digests,
            &mut manifest,
        )
    });
    match result {
        Ok(()) => {
            write_json(&opts.out_dir.join("manifest.json"), &manifest)?;
            let _ = std::fs::remove_file(opts.out_dir.join(INCOMPLETE_MARKER));
            Ok(manifest)
        }
        Err(e) => Err(e),
    }
}

pub fn run(opts: &RunOptions) -> Result<RunManifest> {
    run_until(opts, ALL_STAGES)
}

#[allow(clippy::too_many_arguments)]
fn run_stages(
    config: &Config,
    cache: &Cache,
    out_dir: &Path,
    goal: StageGoal,
    ontology_digest: &str,
    corpus_digests: &[(String, String)],
    manifest: &mut RunManifest,
) -> Result<()> {
    // --- ontology ---
    let started = Instant::now();
    let ontology_cfg = serde_json::to_string(&(&config.ontology, &config.inputs.ontology_format))?;
    let ontology_key = Cache::key(&["ontology", TOOL_VERSION, &ontology_cfg, ontology_digest]);
    let input = config.inputs.ontology.clone();
    let format = config.inputs.ontology_format;
    let branch_filter = config.branch_filter();
    let (ontology_entry, hit) = cache
        .get_or_build(&ontology_key, |dir| {
            let tree = parse_ontology_file(&input, format, &branch_filter)?;
            std::fs::create_dir_all(dir.join("ontology"))?;
            write_json(&dir.join("ontology/tree.json"), &tree)?;
            std::fs::write(
                dir.join("ontology/tree.digest"),
                format!("{ontology_digest}\n"),
            )?;
            Ok(())
        })
        .map_err(|e| e.in_stage("ontology"))?;
    materialize(&ontology_entry, out_dir)?;
    let tree = load_tree(&ontology_entry).map_err(|e| e.in_stage("ontology"))?;
    manifest.stages.push(StageReport {
        name: "ontology".to_string(),
        cache_hit: hit,
        seconds: started.elapsed().as_secs_f64(),
        records: tree.len() as u64,
    });
    if goal == StageGoal::Ontology {
        return Ok(());
    }

    // --- accumulate ---
    let started = Instant::now();
    let digest_list: Vec<&str> = corpus_digests.iter().map(|(_, d)| d.as_str()).collect();
    let accumulate_cfg = serde_json::to_string(&(
        &config.corpus,
        &config.windows,
        &config.clustering.levels,
        &config.diversity,
    ))?;
    let mut key_parts = vec!["accumulate", TOOL_VERSION, &ontology_key, &accumulate_cfg];
    key_parts.extend(digest_list);
    let accumulate_key = Cache::key(&key_parts);
    let (accumulate_entry, hit) = cache
        .get_or_build(&accumulate_key, |dir| stage_accumulate(config, &tree, dir))
        .map_err(|e| e.in_stage("accumulate"))?;
    materialize(&accumulate_entry, out_dir)?;
    let stats: CorpusStats =
        read_json(&accumulate_entry.join("corpus_stats.json")).map_err(|e| e.in_stage("accumulate"))?;
    manifest.stages.push(StageReport {
        name: "accumulate".to_string(),
        cache_hit: hit,
        seconds: started.elapsed().as_secs_f64(),
        records: stats.articles_kept,
    });
    if goal == StageGoal::Accumulate {
        return Ok(());
    }

    // --- cluster ---
    let started = Instant::now();
    let cluster_cfg = serde_json::to_string(&config.clustering)?;
    let cluster_key = Cache::key(&["cluster", TOOL_VERSION, &accumulate_key, &cluster_cfg]);
    let (cluster_entry, hit) = cache
        .get_or_build(&cluster_key, |dir| {
            stage_cluster(config, &accumulate_entry, dir)
        })
        .map_err(|e| e.in_stage("cluster"))?;
    materialize(&cluster_entry, out_dir)?;
    let clustered = count_files(&cluster_entry.join("clusters"))?;
    manifest.stages.push(StageReport {
        name: "cluster".to_string(),
        cache_hit: hit,
        seconds: started.elapsed().as_secs_f64(),
        records: clustered,
    });
    if goal == StageGoal::Cluster {
        return Ok(());
    }

    // --- bridges ---
    let started = Instant::now();
    let bridges_cfg = serde_json::to_string(&(&config.bridges, config.corpus.year_range))?;
    let bridges_key = Cache::key(&["bridges", TOOL_VERSION, &cluster_key, &bridges_cfg]);
    let (bridges_entry, hit) = cache
        .get_or_build(&bridges_key, |dir| {
            stage_bridges(config, &accumulate_entry, &cluster_entry, dir)
        })
        .map_err(|e| e.in_stage("bridges"))?;
    materialize(&bridges_entry, out_dir)?;
    let series: BridgeSeries =
        read_json(&bridges_entry.join("bridges/series.json")).map_err(|e| e.in_stage("bridges"))?;
    manifest.stages.push(StageReport {
        name: "bridges".to_string(),
        cache_hit: hit,
        seconds: started.elapsed().as_secs_f64(),
        records: series.points.values().map(|v| v.len() as u64).sum(),
    });
    if goal == StageGoal::Bridges {
        return Ok(());
    }

    // --- continuity ---
    let started = Instant::now();
    let continuity_cfg =
        serde_json::to_string(&(&config.clustering.levels, &config.continuity))?;
    let continuity_key = Cache::key(&["continuity", TOOL_VERSION, &cluster_key, &continuity_cfg]);
    let (continuity_entry, hit) = cache
        .get_or_build(&continuity_key, |dir| {
            stage_continuity(config, &cluster_entry, dir)
        })
        .map_err(|e| e.in_stage("continuity"))?;
    materialize(&continuity_entry, out_dir)?;
    manifest.stages.push(StageReport {
        name: "continuity".to_string(),
        cache_hit: hit,
        seconds: started.elapsed().as_secs_f64(),
        records: 0,
    });
    if goal == StageGoal::Continuity {
        return Ok(());
    }

    // --- diversity ---
    let started = Instant::now();
    let diversity_cfg = serde_json::to_string(&config.diversity)?;
    let diversity_key = Cache::key(&["diversity", TOOL_VERSION, &accumulate_key, &diversity_cfg]);
    let (diversity_entry, hit) = cache
        .get_or_build(&diversity_key, |dir| {
            stage_diversity(config, &accumulate_entry, dir)
        })
        .map_err(|e| e.in_stage("diversity"))?;
    materialize(&diversity_entry, out_dir)?;
    manifest.stages.push(StageReport {
        name: "diversity".to_string(),
        cache_hit: hit,
        seconds: started.elapsed().as_secs_f64(),
        records: 0,
    });
    Ok(())
}

pub fn parse_ontology_file(
    path: &Path,
    format: OntologyFormat,
    branch_filter: &std::collections::BTreeSet<char>,
) -> Result<OntologyTree> {
    let text = std::fs::read_to_string(path)?;
    let name = path.display().to_string();
    let format = match format {
        OntologyFormat::Auto => {
            let looks_xml = text.trim_start().starts_with('<');
            if looks_xml {
                OntologyFormat::Xml
            } else {
                OntologyFormat::Tsv
            }
        }
        other => other,
    };
    match format {
        OntologyFormat::Xml => parse_ontology_xml(&text, branch_filter, &name),
        _ => parse_ontology_tsv(&text, branch_filter, &name),
    }
}

pub fn load_tree(entry: &Path) -> Result<OntologyTree> {
    let mut tree: OntologyTree = read_json(&entry.join("ontology/tree.json"))?;
    tree.rebuild_index();
    Ok(tree)
}

// ---------------------------------------------------------------------------
// accumulate
// ---------------------------------------------------------------------------

pub fn matrix_rel_path(level: Level, window: (i32, i32)) -> String {
    if window.0 == window.1 {
        format!("matrices/annual/l{}_{}.json", level.as_u8(), window.0)
    } else {
        format!("matrices/l{}_{}_{}.json", level.as_u8(), window.0, window.1)
    }
}

pub fn clusters_rel_path(level: Level, window: (i32, i32)) -> String {
    if window.0 == window.1 {
        format!("clusters/annual/l{}_{}.json", level.as_u8(), window.0)
    } else {
        format!("clusters/l{}_{}_{}.json", level.as_u8(), window.0, window.1)
    }
}

#[derive(Serialize, Deserialize)]
pub struct FxArtifact {
    pub schema: String,
    pub modes: Vec<(String, YearlyFraction)>,
}

/// All accumulators fed by one pass over a corpus shard.
struct Accum {
    levels: Vec<Level>,
    periods: WindowSet,
    year_range: (i32, i32),
    diversity_level: Level,
    thresholds: XThresholds,
    period_matrices: Vec<Vec<CoocMatrix>>,
    annual_matrices: Vec<Vec<CoocMatrix>>,
    diversity: DiversityAggregate,
    fx: Vec<YearlyFraction>,
    stats: CorpusStats,
    diversity_rows: Vec<u8>,
}

const FX_MODES: [XMode; 3] = [XMode::J, XMode::L, XMode::JPlusL];

impl Accum {
    fn new(config: &Config, tree: &OntologyTree) -> Result<Accum> {
        let levels = config.levels();
        let periods = config.periods()?;
        let year_range = config.corpus.year_range;
        let mut period_matrices = Vec::new();
        let mut annual_matrices = Vec::new();
        for &level in &levels {
            let labels = tree.labels(level);
            period_matrices.push(
                periods
                    .windows()
                    .iter()
                    .map(|&w| CoocMatrix::new(level, labels.clone(), w))
                    .collect(),
            );
            annual_matrices.push(
                (year_range.0..=year_range.1)
                    .map(|y| CoocMatrix::new(level, labels.clone(), (y, y)))
                    .collect(),
            );
        }
        Ok(Accum {
            levels,
            periods,
            year_range,
            diversity_level: Level::from_u8(config.diversity.level)?,
            thresholds: XThresholds {
                core_min: config.diversity.core_min,
                flag_min: config.diversity.flag_min,
                jl_rule: config.diversity.jl_rule,
            },
            period_matrices,
            annual_matrices,
            diversity: DiversityAggregate::new(year_range.0, config.diversity.window_years),
            fx: vec![YearlyFraction::default(); FX_MODES.len()],
            stats: CorpusStats::default(),
            diversity_rows: Vec::new(),
        })
    }

    fn push(&mut self, rec: &ArticleRecord, tree: &OntologyTree) -> Result<()> {
        let ids: Vec<&str> = rec.mesh_ids().collect();
        let l1 = tree.article_sa(ids.iter().copied(), Level::L1, MissingPolicy::Skip)?;
        self.stats.unresolved_mesh_refs += l1.unresolved as u64;
        let need_l2 = self.levels.contains(&Level::L2) || self.diversity_level == Level::L2;
        let l2 = if need_l2 {
            Some(tree.article_sa(ids.iter().copied(), Level::L2, MissingPolicy::Skip)?)
        } else {
            None
        };

        let sa_of = |level: Level| -> &SaVector {
            match level {
                Level::L1 => &l1.sa,
                Level::L2 => &l2.as_ref().expect("projected").sa,
            }
        };

        for (li, &level) in self.levels.iter().enumerate() {
            let sa = sa_of(level);
            if let Some(w) = self.periods.index_of(rec.year) {
                self.period_matrices[li][w].add_article(sa)?;
            }
            let year_idx = (rec.year - self.year_range.0) as usize;
            self.annual_matrices[li][year_idx].add_article(sa)?;
        }

        let div_sa = sa_of(self.diversity_level);
        if let Some(f_d) = categorical_diversity(&div_sa.counts) {
            let record = DiversityRecord {
                pmid: rec.pmid.clone(),
                year: rec.year,
                journal: rec.journal.clone(),
                team_group: TeamGroup::from_author_count(rec.authors),
                f_d,
                level: self.diversity_level,
            };
            self.diversity.push(&record);
            // csv row
            let _ = writeln!(
                self.diversity_rows,
                "{},{},{},{},{},{}",
                csv_field(&record.pmid),
                record.year,
                csv_field(&record.journal),
                record.team_group,
                record.f_d,
                record.level.as_u8(),
            );
        }

        if !l1.sa.is_zero() {
            for (mi, mode) in FX_MODES.iter().enumerate() {
                let flag = convergence_flag(&l1.sa, tree.branches(), *mode, &self.thresholds);
                self.fx[mi].push(rec.year, flag);
            }
        }
        Ok(())
    }

    fn merge(&mut self, other: Accum) -> Result<()> {
        for (mine, theirs) in self
            .period_matrices
            .iter_mut()
            .flatten()
            .zip(other.period_matrices.iter().flatten())
        {
            mine.merge(theirs)?;
        }
        for (mine, theirs) in self
            .annual_matrices
            .iter_mut()
            .flatten()
            .zip(other.annual_matrices.iter().flatten())
        {
            mine.merge(theirs)?;
        }
        self.diversity.merge(&other.diversity);
        for (mine, theirs) in self.fx.iter_mut().zip(&other.fx) {
            mine.merge(theirs);
        }
        self.stats.merge(&other.stats);
        self.diversity_rows.extend_from_slice(&other.diversity_rows);
        Ok(())
    }
}

fn ingest_options(config: &Config) -> IngestOptions {
    IngestOptions {
        filter: config.corpus.mesh_filter,
        on_error: config.corpus.on_error,
        year_range: Some(config.corpus.year_range),
        publication_types: config.corpus.publication_types.iter().cloned().collect(),
    }
}

fn stage_accumulate(config: &Config, tree: &OntologyTree, dir: &Path) -> Result<()> {
    let jobs = rayon::current_num_threads().max(1);
    let opts = ingest_options(config);

    // shard units across all corpus files, merged in deterministic order
    let mut units: Vec<(usize, PathBuf, (u64, u64))> = Vec::new();
    for (fi, path) in config.inputs.corpus.iter().enumerate() {
        for range in shard_ranges(path, jobs)? {
            units.push((fi, path.clone(), range));
        }
    }

    let shards: Vec<Accum> = units
        .par_iter()
        .map(|(_, path, range)| -> Result<Accum> {
            let mut accum = Accum::new(config, tree)?;
            let mut ingest = open_shard(path, *range, opts.clone())?;
            for rec in ingest.by_ref() {
                accum.push(&rec?, tree)?;
            }
            accum.stats.merge(ingest.stats());
            Ok(accum)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut total = Accum::new(config, tree)?;
    for shard in shards {
        total.merge(shard)?;
    }

    write_json(&dir.join("corpus_stats.json"), &total.stats)?;

    for (li, _) in total.levels.iter().enumerate() {
        for m in &total.period_matrices[li] {
            write_matrix(dir, m, true)?;
        }
        for m in &total.annual_matrices[li] {
            write_matrix(dir, m, false)?;
        }
    }

    // per-article diversity export
    let mut out = create_export(dir, "diversity/articles.csv")?;
    writeln!(out, "#schema: meshforge.diversity.v1")?;
    writeln!(out, "pmid,year,journal,team_group,f_d,level")?;
    out.write_all(&total.diversity_rows)?;
    out.flush()?;

    write_json(&dir.join("diversity/aggregate.json"), &total.diversity)?;
    let fx = FxArtifact {
        schema: "meshforge.fx.v1".to_string(),
        modes: FX_MODES
            .iter()
            .zip(&total.fx)
            .map(|(m, yf)| (m.to_string(), yf.clone()))
            .collect(),
    };
    write_json(&dir.join("diversity/fx.json"), &fx)?;
    Ok(())
}

fn write_matrix(dir: &Path, m: &CoocMatrix, with_exports: bool) -> Result<()> {
    let rel = matrix_rel_path(m.level, m.window);
    let path = dir.join(&rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file = std::fs::File::create(&path)?;
    serde_json::to_writer(BufWriter::new(file), m)?;
    if with_exports {
        let base = rel.trim_end_matches(".json").to_string();
        let mut csv = create_export(dir, &format!("{base}.csv"))?;
        m.write_csv(&mut csv)?;
        csv.flush()?;
        let mut edges = create_export(dir, &format!("{base}.edges.tsv"))?;
        m.write_edge_list(&mut edges)?;
        edges.flush()?;
        write_json(&dir.join(format!("{base}.meta.json")), &MatrixMeta::of(m))?;
        if !m.is_all_zero() {
            write_json(&dir.join(format!("{base}.mst.json")), &m.mst_hierarchy()?)?;
        }
    }
    Ok(())
}

pub fn load_matrix(entry: &Path, level: Level, window: (i32, i32)) -> Result<CoocMatrix> {
    read_json(&entry.join(matrix_rel_path(level, window)))
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct ClusterEntry {
    pub id: u32,
    pub size: usize,
    pub members: Vec<String>,
}

#[derive(Serialize, Deserialize)]
pub struct ClusteringArtifact {
    pub schema: String,
    pub level: u8,
    pub window: (i32, i32),
    /// Set for 1-year windows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    pub seed: u64,
    pub resolution: f64,
    pub modularity: f64,
    pub clusters: Vec<ClusterEntry>,
    pub excluded: Vec<String>,
}

impl ClusteringArtifact {
    pub fn from_clustering(c: &Clustering, level: Level, window: (i32, i32)) -> Self {
        let clusters = c
            .cluster_sizes
            .iter()
            .map(|(&id, &size)| ClusterEntry {
                id,
                size,
                members: c.members(id).into_iter().map(str::to_string).collect(),
            })
            .collect();
        ClusteringArtifact {
            schema: "meshforge.clustering.v1".to_string(),
            level: level.as_u8(),
            window,
            year: (window.0 == window.1).then_some(window.0),
            seed: c.seed,
            resolution: c.resolution,
            modularity: c.modularity,
            clusters,
            excluded: c.excluded.clone(),
        }
    }

    pub fn to_clustering(&self) -> Clustering {
        let mut assignment = BTreeMap::new();
        let mut cluster_sizes = BTreeMap::new();
        for entry in &self.clusters {
            cluster_sizes.insert(entry.id, entry.size);
            for m in &entry.members {
                assignment.insert(m.clone(), entry.id);
            }
        }
        Clustering {
            assignment,
            modularity: self.modularity,
            cluster_sizes,
            seed: self.seed,
            resolution: self.resolution,
            excluded: self.excluded.clone(),
        }
    }
}

fn stage_cluster(config: &Config, accumulate_entry: &Path, dir: &Path) -> Result<()> {
    let periods = config.periods()?;
    let (lo, hi) = config.corpus.year_range;
    let mut targets: Vec<(Level, (i32, i32))> = Vec::new();
    for level in config.levels() {
        for &w in periods.windows() {
            targets.push((level, w));
        }
        for y in lo..=hi {
            targets.push((level, (y, y)));
        }
    }

    let results: Vec<(Level, (i32, i32), Option<Clustering>)> = targets
        .par_iter()
        .map(|&(level, window)| -> Result<_> {
            let m = load_matrix(accumulate_entry, level, window)?;
            if m.is_all_zero() {
                return Ok((level, window, None));
            }
            let clustering = louvain(&m, config.clustering.seed, config.clustering.resolution)?;
            Ok((level, window, Some(clustering)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sizes: BTreeMap<Level, Vec<(i32, u32, usize)>> = BTreeMap::new();
    for (level, window, clustering) in &results {
        let Some(clustering) = clustering else {
            continue;
        };
        let artifact = ClusteringArtifact::from_clustering(clustering, *level, *window);
        write_json(&dir.join(clusters_rel_path(*level, *window)), &artifact)?;
        if window.0 == window.1 {
            let rows = sizes.entry(*level).or_default();
            for (&id, &size) in &clustering.cluster_sizes {
                rows.push((window.0, id, size));
            }
        }
    }
    for (level, mut rows) in sizes {
        rows.sort();
        let mut out = create_export(dir, &format!("clusters/sizes_l{}.csv", level.as_u8()))?;
        writeln!(out, "#schema: meshforge.cluster-sizes.v1")?;
        writeln!(out, "year,cluster,size")?;
        for (year, id, size) in rows {
            writeln!(out, "{year},{id},{size}")?;
        }
        out.flush()?;
    }
    Ok(())
}

pub fn load_clustering(entry: &Path, level: Level, window: (i32, i32)) -> Result<Clustering> {
    let artifact: ClusteringArtifact = read_json(&entry.join(clusters_rel_path(level, window)))?;
    Ok(artifact.to_clustering())
}

fn try_load_clustering(entry: &Path, level: Level, window: (i32, i32)) -> Option<Clustering> {
    load_clustering(entry, level, window).ok()
}

// ---------------------------------------------------------------------------
// bridges
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct EmergingArtifact {
    pub schema: String,
    pub span: (i32, i32),
    pub criteria: EmergingCriteria,
    pub bridges: Vec<EmergingBridge>,
}

fn stage_bridges(
    config: &Config,
    accumulate_entry: &Path,
    cluster_entry: &Path,
    dir: &Path,
) -> Result<()> {
    let level = Level::from_u8(config.bridges.level)?;
    let (lo, hi) = config.corpus.year_range;

    let mut series = BridgeSeries::default();
    let mut global_rows: Vec<(String, i32, u32)> = Vec::new();
    for year in lo..=hi {
        let Some(clustering) = try_load_clustering(cluster_entry, level, (year, year)) else {
            continue;
        };
        if clustering.assignment.is_empty() {
            continue;
        }
        let m = load_matrix(accumulate_entry, level, (year, year))?;
        let scores = bridge_scores(&m, &clustering, year)?;
        if config.bridges.global_ranks {
            for (node, rank) in global_ranks(&scores) {
                global_rows.push((node, year, rank));
            }
        }
        series.add_year(&scores);
    }

    write_json(&dir.join("bridges/series.json"), &series)?;

    let mut out = create_export(dir, "bridges/series.csv")?;
    writeln!(out, "#schema: meshforge.bridge-series.v1")?;
    writeln!(out, "node,year,beta,rank,norm_rank,cluster_id,cluster_size")?;
    for (node, points) in &series.points {
        for p in points {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                csv_field(node),
                p.year,
                p.beta,
                p.rank,
                p.norm_rank,
                p.cluster,
                p.cluster_size
            )?;
        }
    }
    out.flush()?;

    let mut out = create_export(dir, "bridges/smoothed.csv")?;
    writeln!(out, "#schema: meshforge.bridge-smoothed.v1")?;
    writeln!(out, "node,year,smoothed_norm_rank")?;
    for node in series.points.keys() {
        for (year, value) in series.smoothed_norm_rank(node, config.bridges.smoothing_window) {
            writeln!(out, "{},{year},{value}", csv_field(node))?;
        }
    }
    out.flush()?;

    if config.bridges.global_ranks {
        global_rows.sort();
        let mut out = create_export(dir, "bridges/global_ranks.csv")?;
        writeln!(out, "#schema: meshforge.bridge-global-ranks.v1")?;
        writeln!(out, "node,year,global_rank")?;
        for (node, year, rank) in global_rows {
            writeln!(out, "{},{year},{rank}", csv_field(&node))?;
        }
        out.flush()?;
    }

    let criteria = EmergingCriteria {
        top_rank: config.bridges.top_rank,
        min_span_fraction: config.bridges.min_series_fraction,
        p_threshold: config.bridges.p_threshold,
        slope_threshold: config.bridges.slope_threshold,
        use_normalized_rank: config.bridges.use_normalized_rank,
    };
    let emerging = detect_emerging(&series, (lo, hi), &criteria);
    let artifact = EmergingArtifact {
        schema: "meshforge.emerging.v1".to_string(),
        span: (lo, hi),
        criteria,
        bridges: emerging,
    };
    write_json(&dir.join("bridges/emerging.json"), &artifact)?;

    // ego neighborhoods per period for the configured or detected centers
    let centers: Vec<String> = if config.bridges.ego_nodes.is_empty() {
        artifact.bridges.iter().map(|b| b.node.clone()).collect()
    } else {
        config.bridges.ego_nodes.clone()
    };
    let periods = config.periods()?;
    for &window in periods.windows() {
        let Some(clustering) = try_load_clustering(cluster_entry, level, window) else {
            continue;
        };
        let m = load_matrix(accumulate_entry, level, window)?;
        for node in &centers {
            if m.label_index(node).is_none() {
                continue;
            }
            let ego = ego_subnetwork(&m, &clustering, node, config.bridges.ego_k)?;
            write_json(
                &dir.join(format!(
                    "bridges/ego/{}_{}_{}.json",
                    sanitize(node),
                    window.0,
                    window.1
                )),
                &ego,
            )?;
        }
    }
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

// ---------------------------------------------------------------------------
// continuity
// ---------------------------------------------------------------------------

fn stage_continuity(config: &Config, cluster_entry: &Path, dir: &Path) -> Result<()> {
    let (lo, hi) = config.corpus.year_range;
    let (clique_lo, clique_hi) = config.continuity.clique_span.unwrap_or((lo, hi));
    for level in config.levels() {
        let mut yearly: Vec<(i32, Clustering)> = Vec::new();
        for year in lo..=hi {
            if let Some(c) = try_load_clustering(cluster_entry, level, (year, year)) {
                yearly.push((year, c));
            }
        }
        if yearly.is_empty() {
            continue;
        }
        let clique_years: Vec<(i32, &Clustering)> = yearly
            .iter()
            .filter(|(y, _)| *y >= clique_lo && *y <= clique_hi)
            .map(|(y, c)| (*y, c))
            .collect();
        if clique_years.is_empty() {
            continue;
        }
        let catalog = stable_cliques(&clique_years)?;
        write_json(
            &dir.join(format!("continuity/cliques_l{}.json", level.as_u8())),
            &catalog,
        )?;

        let mut delta = create_export(dir, &format!("continuity/delta_j_l{}.csv", level.as_u8()))?;
        writeln!(delta, "#schema: meshforge.continuity.v1")?;
        writeln!(delta, "year,node,delta_j")?;
        let mut hist = create_export(
            dir,
            &format!("continuity/histogram_l{}.csv", level.as_u8()),
        )?;
        writeln!(hist, "#schema: meshforge.continuity-histogram.v1")?;
        writeln!(hist, "year,stable,partial,switched,total")?;

        for pair in yearly.windows(2) {
            let (y_from, ref c_from) = pair[0];
            let (y_to, ref c_to) = pair[1];
            if y_to != y_from + 1 {
                continue;
            }
            let mut histogram = ContinuityHistogram::default();
            for node in c_from.assignment.keys() {
                let Some(d) = crate::clusters::continuity(&catalog, c_from, c_to, node) else {
                    continue;
                };
                writeln!(delta, "{y_to},{},{d}", csv_field(node))?;
                histogram.push(d);
            }
            writeln!(
                hist,
                "{y_to},{},{},{},{}",
                histogram.stable,
                histogram.partial,
                histogram.switched,
                histogram.total()
            )?;
        }
        delta.flush()?;
        hist.flush()?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// diversity
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct GroupTrend {
    pub group: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub residual_variance: f64,
    pub n: usize,
}

#[derive(Serialize, Deserialize)]
pub struct TrendsArtifact {
    pub schema: String,
    pub center: f64,
    pub groups: Vec<GroupTrend>,
}

/// Number of journals (by article count) given trend fits.
const TREND_JOURNALS: usize = 10;

fn stage_diversity(config: &Config, accumulate_entry: &Path, dir: &Path) -> Result<()> {
    let aggregate: DiversityAggregate =
        read_json(&accumulate_entry.join("diversity/aggregate.json"))?;
    let fx: FxArtifact = read_json(&accumulate_entry.join("diversity/fx.json"))?;

    // window means with std error bars
    let window_years = aggregate.window_years;
    let (_, hi) = config.corpus.year_range;
    let mut out = create_export(dir, "diversity/windows.csv")?;
    writeln!(out, "#schema: meshforge.diversity-windows.v1")?;
    writeln!(out, "window_start,window_end,mean,std,count")?;
    for (&start, acc) in &aggregate.by_window {
        let end = (start + window_years - 1).min(hi);
        writeln!(out, "{start},{end},{},{},{}", acc.mean(), acc.std(), acc.count)?;
    }
    out.flush()?;

    let mut out = create_export(dir, "diversity/journal_ranking.csv")?;
    writeln!(out, "#schema: meshforge.journal-ranking.v1")?;
    writeln!(out, "journal,mean_f_d,article_count")?;
    for (journal, mean, count) in aggregate.journal_ranking() {
        writeln!(out, "{},{mean},{count}", csv_field(&journal))?;
    }
    out.flush()?;

    let mut out = create_export(dir, "diversity/histograms.csv")?;
    writeln!(out, "#schema: meshforge.diversity-histograms.v1")?;
    writeln!(out, "window_start,bin_lo,bin_hi,count")?;
    for (&start, hist) in &aggregate.histograms {
        writeln!(out, "{start},0,0,{}", hist.zero)?;
        let k = hist.bins.len();
        for (i, &count) in hist.bins.iter().enumerate() {
            let lo = i as f64 / k as f64;
            let hi = (i + 1) as f64 / k as f64;
            writeln!(out, "{start},{lo},{hi},{count}")?;
        }
    }
    out.flush()?;

    let mut out = create_export(dir, "diversity/fx.csv")?;
    writeln!(out, "#schema: meshforge.fx.v1")?;
    writeln!(out, "year,mode,flagged,total,fraction")?;
    for (mode, yf) in &fx.modes {
        for (year, fraction) in yf.series() {
            let flagged = yf.flagged.get(&year).copied().unwrap_or(0);
            let total = yf.total[&year];
            writeln!(out, "{year},{mode},{flagged},{total},{fraction}")?;
        }
    }
    out.flush()?;

    // trend fits for the global series, team groups, and top journals
    let mut groups: Vec<(String, Vec<(i32, f64)>)> = Vec::new();
    let global: Vec<(i32, f64)> = aggregate
        .by_year
        .iter()
        .map(|(&y, acc)| (y, acc.mean()))
        .collect();
    groups.push(("global".to_string(), global));
    for team in TeamGroup::ALL {
        if team == TeamGroup::Unknown {
            continue;
        }
        let series: Vec<(i32, f64)> = aggregate
            .by_team
            .iter()
            .filter(|((g, _), _)| *g == team)
            .map(|((_, y), acc)| (*y, acc.mean()))
            .collect();
        groups.push((format!("team:{team}"), series));
    }
    let mut journals: Vec<(&String, u64)> = aggregate
        .by_journal
        .iter()
        .map(|(j, acc)| (j, acc.count))
        .collect();
    journals.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    for (journal, _) in journals.into_iter().take(TREND_JOURNALS) {
        let series: Vec<(i32, f64)> = aggregate
            .by_journal_year
            .iter()
            .filter(|((j, _), _)| j == journal)
            .map(|((_, y), acc)| (*y, acc.mean()))
            .collect();
        groups.push((format!("journal:{journal}"), series));
    }

    let mut artifact = TrendsArtifact {
        schema: "meshforge.trends.v1".to_string(),
        center: crate::diversity::TREND_CENTER_YEAR,
        groups: Vec::new(),
    };
    let mut curves = create_export(dir, "diversity/trend_curves.csv")?;
    writeln!(curves, "#schema: meshforge.trend-curves.v1")?;
    writeln!(curves, "group,year,mean,fitted,ci99_lo,ci99_hi")?;
    for (name, series) in &groups {
        if series.len() < 4 {
            continue;
        }
        let fit = trend_fit(series)?;
        artifact.groups.push(GroupTrend {
            group: name.clone(),
            a: fit.a,
            b: fit.b,
            c: fit.c,
            d: fit.d,
            residual_variance: fit.residual_variance,
            n: fit.n,
        });
        for &(year, mean) in series {
            let fitted = fit.value(year);
            let (lo, hi) = fit.confidence_band(year, 0.99);
            writeln!(
                curves,
                "{},{year},{mean},{fitted},{lo},{hi}",
                csv_field(name)
            )?;
        }
    }
    curves.flush()?;
    write_json(&dir.join("diversity/trends.json"), &artifact)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = std::fs::File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingArtifact {
                path: path.display().to_string(),
                producer: "meshforge run".to_string(),
            }
        } else {
            e.into()
        }
    })?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

fn create_export(dir: &Path, rel: &str) -> Result<BufWriter<std::fs::File>> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(std::fs::File::create(path)?))
}

fn count_files(dir: &Path) -> Result<u64> {
    let mut count = 0;
    if dir.exists() {
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                count += count_files(&path)?;
            } else {
                count += 1;
            }
        }
    }
    Ok(count)
}
