//! Generate a small synthetic dataset plus a matching pipeline config,
//! ready for the CLI:
//!
//! ```text
//! cargo run -p meshforge --example make_demo -- demo
//! cargo run -p meshforge-cli -- run --config demo/meshforge.toml --out-dir demo/out
//! ```

use meshforge::synthgen::{self, BlockSpec, BridgeSpec, JournalSpec, PlantedSpec};

const CONFIG: &str = r#"[inputs]
ontology = "ontology.tsv"
corpus = ["corpus.jsonl"]

[corpus]
year_range = [1970, 2018]

[diversity]
window_years = 3
"#;

fn main() -> meshforge::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "demo".to_string());
    let dir = std::path::PathBuf::from(dir);

    // two core blocks plus a peripheral block whose informatics heading
    // grows into a cross-cluster bridge over the span
    let block = |branch: char, n: usize| BlockSpec {
        labels: (1..=n).map(|i| format!("{branch}{i:02}")).collect(),
    };
    let mut peripheral = block('N', 8);
    peripheral.labels.push("J01".to_string());
    peripheral.labels.push("L01".to_string());

    let spec = PlantedSpec {
        years: (1970, 2018),
        articles_per_year: 600,
        blocks: vec![block('C', 10), block('D', 10), peripheral],
        between_rate: 0.25,
        bridges: vec![BridgeSpec {
            node: "L01".to_string(),
            start_rate: 0.0,
            end_rate: 0.03,
            home_rate: 0.025,
        }],
        journals: vec![
            JournalSpec {
                name: "Ann. Broad Synth.".to_string(),
                diversity_target: 0.35,
                weight: 1.0,
            },
            JournalSpec {
                name: "J. Narrow Synth.".to_string(),
                diversity_target: 0.05,
                weight: 2.0,
            },
        ],
        seed: 42,
        ..Default::default()
    };

    let paths = synthgen::write_corpus(&spec, &dir)?;
    std::fs::write(dir.join("meshforge.toml"), CONFIG)?;
    println!("corpus:       {}", paths.corpus.display());
    println!("ontology:     {}", paths.ontology.display());
    println!("ground truth: {}", paths.ground_truth.display());
    println!("config:       {}", dir.join("meshforge.toml").display());
    println!();
    println!("next: cargo run -p meshforge-cli -- run --config {} --out-dir {}",
        dir.join("meshforge.toml").display(),
        dir.join("out").display());
    Ok(())
}
