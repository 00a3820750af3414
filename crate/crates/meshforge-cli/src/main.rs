//! Command-line front end for the meshforge pipeline.
//!
//! Exit codes: 0 success, 2 configuration error, 3 input parse error,
//! 4 stage failure.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use meshforge::corpus::fetch::{EndpointConfig, HttpTransport, PubmedClient};
use meshforge::corpus::{ErrorPolicy, IngestOptions, JsonlIngest, MeshFilter};
use meshforge::error::Error;
use meshforge::ontology::DEFAULT_BRANCHES;
use meshforge::pipeline::{
    self, export_plotdata, parse_ontology_file, Config, OntologyFormat, RunOptions, StageGoal,
};

#[derive(Parser)]
#[command(
    name = "meshforge",
    version,
    about = "Map classified literature into knowledge networks: subject-area \
             co-occurrence, clustering, bridge and diversity metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for exports and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Stage cache directory; defaults to `<out-dir>/.cache`.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,

    /// Override the clustering seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Log level: error, warn, info, debug, trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Tsv,
    Xml,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    MajorOnly,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a descriptor ontology into an artifact.
    Ontology {
        /// Ontology source file (simplified TSV or descriptor XML).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        /// Retained branch letters, comma separated.
        #[arg(long)]
        branches: Option<String>,
        /// Artifact path; defaults to `<out-dir>/ontology/tree.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stream a corpus file, applying filters, and report statistics.
    Ingest {
        #[arg(long, required = true)]
        corpus: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "major-only")]
        filter: FilterArg,
        /// Fail on the first malformed line instead of skipping.
        #[arg(long)]
        fail_fast: bool,
        /// Write the kept, filtered records as JSONL.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fetch article records from a PubMed-style API into corpus JSONL.
    Fetch {
        /// Ids to fetch (repeatable or comma separated).
        #[arg(long, value_delimiter = ',')]
        ids: Vec<String>,
        /// File with one id per line.
        #[arg(long)]
        id_file: Option<PathBuf>,
        /// Publication date range `FROM:TO` (e.g. 2019/01/01:2019/01/31).
        #[arg(long)]
        date_range: Option<String>,
        /// Maximum ids resolved from a date range.
        #[arg(long, default_value_t = 1000)]
        max: usize,
        /// Requests per second.
        #[arg(long, default_value_t = 3.0)]
        rate_limit: f64,
        /// Output JSONL path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the pipeline through matrix accumulation.
    Cooccur,
    /// Run the pipeline through clustering.
    Cluster,
    /// Run the pipeline through bridge scoring and detection.
    Bridges,
    /// Run the pipeline through cluster-continuity analysis.
    Continuity,
    /// Run the pipeline through diversity trends (the full chain).
    Diversity,
    /// Run every stage.
    Run,
    /// Emit figure-ready data files from existing artifacts.
    ExportPlotdata,
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .init();
    match dispatch(&cli) {
        Ok(()) => {}
        Err(e) => {
            report(&e);
            std::process::exit(exit_code(&e));
        }
    }
}

fn report(e: &Error) {
    eprintln!("error: {e}");
    let mut source = std::error::Error::source(e);
    while let Some(cause) = source {
        eprintln!("  caused by: {cause}");
        source = cause.source();
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::TooFewPoints { .. } => 2,
        Error::OntologyParse { .. }
        | Error::DuplicateDescriptor { .. }
        | Error::Record { .. }
        | Error::Json(_) => 3,
        _ => 4,
    }
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Ontology {
            input,
            format,
            branches,
            out,
        } => cmd_ontology(cli, input, *format, branches.as_deref(), out.as_deref()),
        Command::Ingest {
            corpus,
            filter,
            fail_fast,
            out,
        } => cmd_ingest(corpus, *filter, *fail_fast, out.as_deref()),
        Command::Fetch {
            ids,
            id_file,
            date_range,
            max,
            rate_limit,
            out,
        } => cmd_fetch(cli, ids, id_file.as_deref(), date_range.as_deref(), *max, *rate_limit, out.as_deref()),
        Command::Cooccur => cmd_run(cli, StageGoal::Accumulate),
        Command::Cluster => cmd_run(cli, StageGoal::Cluster),
        Command::Bridges => cmd_run(cli, StageGoal::Bridges),
        Command::Continuity => cmd_run(cli, StageGoal::Continuity),
        Command::Diversity => cmd_run(cli, StageGoal::Diversity),
        Command::Run => cmd_run(cli, pipeline::ALL_STAGES),
        Command::ExportPlotdata => {
            let config = load_config(cli)?;
            export_plotdata(&cli.out_dir, &config)?;
            println!("plot data written to {}", cli.out_dir.join("plotdata").display());
            Ok(())
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".to_string()))?;
    let mut config = Config::load(path)?;
    if let Some(base) = path.parent() {
        config.resolve_paths(base);
    }
    if let Some(seed) = cli.seed {
        config.clustering.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        config.run.jobs = jobs;
    }
    config.validate()?;
    Ok(config)
}

fn cache_dir(cli: &Cli) -> PathBuf {
    cli.cache_dir
        .clone()
        .unwrap_or_else(|| cli.out_dir.join(".cache"))
}

fn cmd_run(cli: &Cli, goal: StageGoal) -> Result<(), Error> {
    let config = load_config(cli)?;
    let opts = RunOptions {
        config,
        out_dir: cli.out_dir.clone(),
        cache_dir: cache_dir(cli),
    };
    let manifest = pipeline::run_until(&opts, goal)?;
    for stage in &manifest.stages {
        println!(
            "stage {:<12} {:>8.2}s  {}{}",
            stage.name,
            stage.seconds,
            if stage.cache_hit { "cached" } else { "computed" },
            if stage.records > 0 {
                format!("  ({} records)", stage.records)
            } else {
                String::new()
            }
        );
    }
    println!("outputs in {}", cli.out_dir.display());
    Ok(())
}

fn parse_branches(arg: Option<&str>) -> Result<BTreeSet<char>, Error> {
    match arg {
        None => Ok(DEFAULT_BRANCHES.iter().copied().collect()),
        Some(list) => {
            let mut set = BTreeSet::new();
            for part in list.split(',') {
                let part = part.trim();
                let mut chars = part.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii_uppercase() => {
                        set.insert(c);
                    }
                    _ => {
                        return Err(Error::Config(format!(
                            "invalid branch letter `{part}` in --branches"
                        )))
                    }
                }
            }
            Ok(set)
        }
    }
}

fn cmd_ontology(
    cli: &Cli,
    input: &Path,
    format: FormatArg,
    branches: Option<&str>,
    out: Option<&Path>,
) -> Result<(), Error> {
    let format = match format {
        FormatArg::Auto => OntologyFormat::Auto,
        FormatArg::Tsv => OntologyFormat::Tsv,
        FormatArg::Xml => OntologyFormat::Xml,
    };
    let filter = parse_branches(branches)?;
    let tree = parse_ontology_file(input, format, &filter)?;
    let out_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cli.out_dir.join("ontology/tree.json"));
    pipeline::stages::write_json(&out_path, &tree)?;
    let digest = meshforge::corpus::file_digest(input)?;
    std::fs::write(out_path.with_extension("digest"), format!("{digest}\n"))?;
    println!(
        "parsed {} descriptors ({} dropped outside branches), {} second-level headings",
        tree.len(),
        tree.stats().descriptors_dropped,
        tree.l2_index().len()
    );
    println!("artifact written to {}", out_path.display());
    Ok(())
}

fn cmd_ingest(
    corpus: &[PathBuf],
    filter: FilterArg,
    fail_fast: bool,
    out: Option<&Path>,
) -> Result<(), Error> {
    let opts = IngestOptions {
        filter: match filter {
            FilterArg::MajorOnly => MeshFilter::MajorOnly,
            FilterArg::All => MeshFilter::All,
        },
        on_error: if fail_fast {
            ErrorPolicy::Fail
        } else {
            ErrorPolicy::Skip
        },
        year_range: None,
        publication_types: BTreeSet::new(),
    };
    let mut sink: Box<dyn Write> = match out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::sink()),
    };
    let mut stats = meshforge::corpus::CorpusStats::default();
    for path in corpus {
        let mut ingest = JsonlIngest::open(path, opts.clone())?;
        for rec in ingest.by_ref() {
            let rec = rec?;
            if out.is_some() {
                serde_json::to_writer(&mut sink, &rec).map_err(Error::Json)?;
                sink.write_all(b"\n")?;
            }
        }
        stats.merge(ingest.stats());
    }
    sink.flush()?;
    println!("{}", serde_json::to_string_pretty(&stats).map_err(Error::Json)?);
    Ok(())
}

fn cmd_fetch(
    cli: &Cli,
    ids: &[String],
    id_file: Option<&Path>,
    date_range: Option<&str>,
    max: usize,
    rate_limit: f64,
    out: Option<&Path>,
) -> Result<(), Error> {
    let mut all_ids: Vec<String> = ids.iter().filter(|s| !s.is_empty()).cloned().collect();
    if let Some(path) = id_file {
        let file = std::fs::File::open(path)?;
        for line in std::io::BufReader::new(file).lines() {
            let line = line?;
            let id = line.trim();
            if !id.is_empty() {
                all_ids.push(id.to_string());
            }
        }
    }
    if all_ids.is_empty() && date_range.is_none() {
        return Err(Error::Config(
            "fetch needs --ids, --id-file, or --date-range".to_string(),
        ));
    }

    let config = EndpointConfig {
        rate_limit_per_sec: rate_limit,
        cache_dir: Some(cache_dir(cli).join("fetch")),
        ..EndpointConfig::default()
    };
    let client = PubmedClient::new(config, HttpTransport::default());

    let mut records = Vec::new();
    if !all_ids.is_empty() {
        records.extend(client.fetch_ids(&all_ids)?);
    }
    if let Some(range) = date_range {
        let (from, to) = range.split_once(':').ok_or_else(|| {
            Error::Config("--date-range must look like FROM:TO".to_string())
        })?;
        records.extend(client.fetch_date_range(from, to, max)?);
    }

    let mut sink: Box<dyn Write> = match out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    for rec in &records {
        serde_json::to_writer(&mut sink, rec).map_err(Error::Json)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    log::info!("fetched {} records", records.len());
    Ok(())
}
