//! Pipeline orchestration: declarative configuration, content-addressed
//! stage caching, and export emission. See [`run`] for the full chain and
//! [`run_until`] to stop after an intermediate stage.

pub mod cache;
pub mod config;
pub mod plotdata;
pub mod stages;

pub use cache::Cache;
pub use config::{Config, OntologyFormat};
pub use plotdata::export_plotdata;
pub use stages::{
    load_clustering, load_matrix, load_tree, parse_ontology_file, run, run_until, RunManifest,
    RunOptions, StageGoal, StageReport, ALL_STAGES, TOOL_VERSION,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{self, PlantedSpec};
    use std::path::PathBuf;

    fn spec() -> PlantedSpec {
        PlantedSpec {
            years: (1996, 2003),
            articles_per_year: 120,
            blocks: synthgen::three_block_layout(4),
            journals: vec![
                synthgen::JournalSpec {
                    name: "Narrow J".to_string(),
                    diversity_target: 0.05,
                    weight: 1.0,
                },
                synthgen::JournalSpec {
                    name: "Wide J".to_string(),
                    diversity_target: 0.4,
                    weight: 1.0,
                },
            ],
            ..Default::default()
        }
    }

    fn config_for(dir: &std::path::Path) -> Config {
        let mut config = Config::default();
        config.inputs.ontology = dir.join("ontology.tsv");
        config.inputs.corpus = vec![dir.join("corpus.jsonl")];
        config.corpus.year_range = (1996, 2003);
        config.windows.periods = vec![(1996, 1999), (2000, 2003)];
        config.diversity.window_years = 2;
        config.run.jobs = 2;
        config
    }

    #[test]
    fn end_to_end_run_writes_all_exports_and_caches() {
        let dir = tempfile::tempdir().unwrap();
        synthgen::write_corpus(&spec(), dir.path()).unwrap();
        let out_dir = dir.path().join("out");
        let cache_dir = dir.path().join("cache");
        let opts = RunOptions {
            config: config_for(dir.path()),
            out_dir: out_dir.clone(),
            cache_dir: cache_dir.clone(),
        };
        let manifest = run(&opts).unwrap();
        assert_eq!(manifest.stages.len(), 6);
        assert!(manifest.stages.iter().all(|s| !s.cache_hit));

        for rel in [
            "manifest.json",
            "ontology/tree.json",
            "corpus_stats.json",
            "matrices/l2_1996_1999.csv",
            "matrices/l2_2000_2003.meta.json",
            "matrices/annual/l2_1998.json",
            "clusters/annual/l2_1998.json",
            "clusters/sizes_l2.csv",
            "bridges/series.csv",
            "bridges/emerging.json",
            "continuity/delta_j_l2.csv",
            "continuity/histogram_l2.csv",
            "continuity/cliques_l2.json",
            "diversity/articles.csv",
            "diversity/windows.csv",
            "diversity/journal_ranking.csv",
            "diversity/fx.csv",
            "diversity/trend_curves.csv",
            "diversity/trends.json",
        ] {
            assert!(out_dir.join(rel).exists(), "missing export {rel}");
        }
        assert!(!out_dir.join(".incomplete").exists());

        // rerun hits every stage
        let manifest2 = run(&opts).unwrap();
        assert!(manifest2.stages.iter().all(|s| s.cache_hit));

        // journal ranking reflects the planted diversity ordering
        let ranking =
            std::fs::read_to_string(out_dir.join("diversity/journal_ranking.csv")).unwrap();
        let data_rows: Vec<&str> = ranking.lines().skip(2).collect();
        assert!(data_rows[0].starts_with("Wide J,"), "{ranking}");

        // plotdata derives from the artifacts
        export_plotdata(&out_dir, &opts.config).unwrap();
        assert!(out_dir.join("plotdata/heatmap_l2_1996_1999.csv").exists());
        assert!(out_dir.join("plotdata/fx.csv").exists());
        assert!(out_dir.join("plotdata/bridge_rank_series.csv").exists());
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        synthgen::write_corpus(&spec(), dir.path()).unwrap();
        let config = config_for(dir.path());

        let run_once = |tag: &str| -> PathBuf {
            let out_dir = dir.path().join(format!("out-{tag}"));
            let opts = RunOptions {
                config: config.clone(),
                out_dir: out_dir.clone(),
                cache_dir: dir.path().join(format!("cache-{tag}")),
            };
            run(&opts).unwrap();
            out_dir
        };
        let a = run_once("a");
        let b = run_once("b");

        let mut files = Vec::new();
        collect(&a, &a, &mut files);
        assert!(!files.is_empty());
        for rel in files {
            if rel == "manifest.json" {
                continue; // timings differ
            }
            let left = std::fs::read(a.join(&rel)).unwrap();
            let right = std::fs::read(b.join(&rel)).unwrap();
            assert_eq!(left, right, "export {rel} differs between runs");
        }
    }

    fn collect(root: &std::path::Path, dir: &std::path::Path, out: &mut Vec<String>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                collect(root, &path, out);
            } else {
                out.push(
                    path.strip_prefix(root)
                        .unwrap()
                        .to_string_lossy()
                        .to_string(),
                );
            }
        }
    }

    #[test]
    fn stage_failure_names_stage_and_leaves_marker() {
        let dir = tempfile::tempdir().unwrap();
        synthgen::write_corpus(&spec(), dir.path()).unwrap();
        // corrupt the corpus so accumulation fails under fail-fast
        std::fs::write(dir.path().join("corpus.jsonl"), "not json\n").unwrap();
        let mut config = config_for(dir.path());
        config.corpus.on_error = crate::corpus::ErrorPolicy::Fail;
        let out_dir = dir.path().join("out");
        let opts = RunOptions {
            config,
            out_dir: out_dir.clone(),
            cache_dir: dir.path().join("cache"),
        };
        let err = run(&opts).unwrap_err();
        match err {
            crate::Error::Stage { stage, .. } => assert_eq!(stage, "accumulate"),
            other => panic!("unexpected error {other}"),
        }
        assert!(out_dir.join(".incomplete").exists());
    }

    #[test]
    fn corrupted_cache_entry_recomputes_stage() {
        let dir = tempfile::tempdir().unwrap();
        synthgen::write_corpus(&spec(), dir.path()).unwrap();
        let opts = RunOptions {
            config: config_for(dir.path()),
            out_dir: dir.path().join("out"),
            cache_dir: dir.path().join("cache"),
        };
        run(&opts).unwrap();

        // tamper with an artifact inside the cluster stage's entry
        let mut tampered = 0;
        for entry in std::fs::read_dir(&opts.cache_dir).unwrap() {
            let entry = entry.unwrap().path();
            let victim = entry.join("clusters/sizes_l2.csv");
            if victim.exists() {
                std::fs::write(&victim, b"garbage").unwrap();
                tampered += 1;
            }
        }
        assert_eq!(tampered, 1);

        let manifest = run(&opts).unwrap();
        let by_name: std::collections::BTreeMap<&str, bool> = manifest
            .stages
            .iter()
            .map(|s| (s.name.as_str(), s.cache_hit))
            .collect();
        assert!(by_name["ontology"] && by_name["accumulate"]);
        assert!(!by_name["cluster"], "tampered stage must recompute");
        let sizes = std::fs::read_to_string(opts.out_dir.join("clusters/sizes_l2.csv")).unwrap();
        assert!(sizes.starts_with("#schema:"), "export restored after recompute");
    }

    #[test]
    fn empty_corpus_still_produces_valid_exports() {
        let dir = tempfile::tempdir().unwrap();
        synthgen::write_corpus(&spec(), dir.path()).unwrap();
        std::fs::write(dir.path().join("corpus.jsonl"), b"").unwrap();
        let out_dir = dir.path().join("out");
        let opts = RunOptions {
            config: config_for(dir.path()),
            out_dir: out_dir.clone(),
            cache_dir: dir.path().join("cache"),
        };
        run(&opts).unwrap();
        // the bridge series export keeps its header even with no data
        let series = std::fs::read_to_string(out_dir.join("bridges/series.csv")).unwrap();
        let lines: Vec<&str> = series.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("#schema:"));
        assert!(lines[1].starts_with("node,year"));
        let stats =
            std::fs::read_to_string(out_dir.join("corpus_stats.json")).unwrap();
        assert!(stats.contains("\"articles_kept\": 0"));
    }

    #[test]
    fn run_until_stops_early() {
        let dir = tempfile::tempdir().unwrap();
        synthgen::write_corpus(&spec(), dir.path()).unwrap();
        let out_dir = dir.path().join("out");
        let opts = RunOptions {
            config: config_for(dir.path()),
            out_dir: out_dir.clone(),
            cache_dir: dir.path().join("cache"),
        };
        let manifest = run_until(&opts, StageGoal::Accumulate).unwrap();
        assert_eq!(manifest.stages.len(), 2);
        assert!(out_dir.join("matrices/l2_1996_1999.csv").exists());
        assert!(!out_dir.join("bridges").exists());
    }
}
