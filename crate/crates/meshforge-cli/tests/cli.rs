//! End-to-end command-line checks: artifacts, exit codes, stderr shape.

use std::path::Path;
use std::process::Command;

use meshforge::synthgen::{self, PlantedSpec};

fn meshforge_cmd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_meshforge"))
}

const OBESITY_TSV: &str = "\
D009765\tObesity\tC18.654.726.500;C23.888.144.699.500;E01.370.600.115.100.160.120.699.500;G07.100.100.160.120.699.500
D044343\tOvernutrition\tC18.654.726
D007254\tInformation Science\tL01
D001829\tBody Regions\tA01
D008423\tTechnology\tJ01.897
";

const OBESITY_XML: &str = r#"<?xml version="1.0"?>
<DescriptorRecordSet>
  <DescriptorRecord>
    <DescriptorUI>D009765</DescriptorUI>
    <DescriptorName><String>Obesity</String></DescriptorName>
    <TreeNumberList>
      <TreeNumber>C18.654.726.500</TreeNumber>
      <TreeNumber>C23.888.144.699.500</TreeNumber>
      <TreeNumber>E01.370.600.115.100.160.120.699.500</TreeNumber>
      <TreeNumber>G07.100.100.160.120.699.500</TreeNumber>
    </TreeNumberList>
  </DescriptorRecord>
</DescriptorRecordSet>"#;

#[test]
fn ontology_command_writes_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tree.tsv");
    std::fs::write(&input, OBESITY_TSV).unwrap();
    let out = dir.path().join("tree.json");
    let status = meshforge_cmd()
        .args(["ontology", "--input"])
        .arg(&input)
        .args(["--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.exists());
    assert!(out.with_extension("digest").exists());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("D009765"));
}

#[test]
fn ontology_xml_and_tsv_artifacts_agree() {
    let dir = tempfile::tempdir().unwrap();
    let tsv_in = dir.path().join("one.tsv");
    std::fs::write(
        &tsv_in,
        "D009765\tObesity\tC18.654.726.500;C23.888.144.699.500;E01.370.600.115.100.160.120.699.500;G07.100.100.160.120.699.500\n",
    )
    .unwrap();
    let xml_in = dir.path().join("one.xml");
    std::fs::write(&xml_in, OBESITY_XML).unwrap();

    let run = |input: &Path, out: &Path| {
        let status = meshforge_cmd()
            .args(["ontology", "--input"])
            .arg(input)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let tsv_out = dir.path().join("tsv.json");
    let xml_out = dir.path().join("xml.json");
    run(&tsv_in, &tsv_out);
    run(&xml_in, &xml_out);
    assert_eq!(
        std::fs::read(&tsv_out).unwrap(),
        std::fs::read(&xml_out).unwrap()
    );
}

#[test]
fn bad_locator_exits_3_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.tsv");
    std::fs::write(&input, "D1\tOk\tA01.111\nD2\tBad\tA1.23\n").unwrap();
    let output = meshforge_cmd()
        .args(["ontology", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains(":2:"), "stderr: {stderr}");
}

#[test]
fn run_requires_config() {
    let output = meshforge_cmd().arg("run").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("--config"));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("meshforge.toml");
    std::fs::write(
        &config,
        "[inputs]\nontology = \"x.tsv\"\ncorpus = [\"c.jsonl\"]\n[windows]\nperiods = [[1990, 1980]]\n",
    )
    .unwrap();
    let output = meshforge_cmd()
        .args(["run", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

fn write_demo_config(dir: &Path) -> std::path::PathBuf {
    let config = dir.join("meshforge.toml");
    std::fs::write(
        &config,
        r#"
[inputs]
ontology = "ontology.tsv"
corpus = ["corpus.jsonl"]

[corpus]
year_range = [1998, 2005]

[windows]
periods = [[1998, 2001], [2002, 2005]]

[diversity]
window_years = 2
"#,
    )
    .unwrap();
    config
}

#[test]
fn full_run_then_plotdata_and_cache_hits() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PlantedSpec {
        years: (1998, 2005),
        articles_per_year: 80,
        blocks: synthgen::three_block_layout(4),
        ..Default::default()
    };
    synthgen::write_corpus(&spec, dir.path()).unwrap();
    let config = write_demo_config(dir.path());
    let out_dir = dir.path().join("out");

    let run_pipeline = || {
        meshforge_cmd()
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out-dir")
            .arg(&out_dir)
            .output()
            .unwrap()
    };
    let first = run_pipeline();
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(out_dir.join("manifest.json").exists());
    assert!(out_dir.join("bridges/series.csv").exists());

    let second = run_pipeline();
    assert!(second.status.success());
    let stdout = String::from_utf8_lossy(&second.stdout);
    assert!(stdout.contains("cached"), "stdout: {stdout}");
    assert!(!stdout.contains("computed"), "stdout: {stdout}");

    let plot = meshforge_cmd()
        .args(["export-plotdata", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(plot.success());
    assert!(out_dir.join("plotdata/heatmap_l1_1998_2001.csv").exists());
}

#[test]
fn plotdata_without_artifacts_names_producer() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PlantedSpec {
        years: (1998, 1999),
        articles_per_year: 5,
        blocks: synthgen::three_block_layout(3),
        ..Default::default()
    };
    synthgen::write_corpus(&spec, dir.path()).unwrap();
    let config = dir.path().join("meshforge.toml");
    std::fs::write(
        &config,
        r#"
[inputs]
ontology = "ontology.tsv"
corpus = ["corpus.jsonl"]

[corpus]
year_range = [1998, 1999]

[windows]
periods = [[1998, 1999]]
"#,
    )
    .unwrap();
    let output = meshforge_cmd()
        .args(["export-plotdata", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(dir.path().join("empty-out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("meshforge"), "stderr: {stderr}");
}

#[test]
fn ingest_reports_stats_and_writes_filtered_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    std::fs::write(
        &corpus,
        concat!(
            r#"{"pmid":"1","year":1990,"journal":"J","authors":2,"mesh":[{"id":"D1","major":true},{"id":"D2","major":false}]}"#,
            "\n",
            r#"{"pmid":"2","year":1991,"journal":"J","authors":1,"mesh":[{"id":"D3","major":false}]}"#,
            "\n",
        ),
    )
    .unwrap();
    let out = dir.path().join("kept.jsonl");
    let output = meshforge_cmd()
        .args(["ingest", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("\"articles_read\": 2"));
    assert!(stdout.contains("\"articles_kept\": 1"));
    let kept = std::fs::read_to_string(&out).unwrap();
    assert_eq!(kept.lines().count(), 1);
    assert!(kept.contains("\"pmid\":\"1\""));
    assert!(!kept.contains("D2"), "minor heading not filtered: {kept}");
}
