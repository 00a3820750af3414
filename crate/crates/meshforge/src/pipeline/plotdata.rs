//! Figure-ready data exports derived from pipeline artifacts.
//!
//! Reads the artifacts a `run` left in the output directory and emits
//! plain CSV files shaped for plotting tools: cluster-ordered matrix
//! heatmaps, bridge rank series with optional smoothing, convergence
//! fractions, windowed diversity means with error bars, and histograms.

use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;

use crate::bridges::BridgeSeries;
use crate::cooccur::{csv_field, CoocMatrix};
use crate::diversity::DiversityAggregate;
use crate::error::{Error, Result};
use crate::ontology::Level;
use crate::pipeline::config::Config;
use crate::pipeline::stages::{
    clusters_rel_path, matrix_rel_path, ClusteringArtifact, FxArtifact,
};

fn load<T: DeserializeOwned>(out_dir: &Path, rel: &str, producer: &str) -> Result<T> {
    let path = out_dir.join(rel);
    let file = std::fs::File::open(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::MissingArtifact {
                path: path.display().to_string(),
                producer: producer.to_string(),
            }
        } else {
            Error::Io(e)
        }
    })?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

fn create(out_dir: &Path, rel: &str) -> Result<BufWriter<std::fs::File>> {
    let path = out_dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(std::fs::File::create(path)?))
}

/// Emit every plot-data file under `<out_dir>/plotdata/`.
pub fn export_plotdata(out_dir: &Path, config: &Config) -> Result<()> {
    config.validate()?;
    let periods = config.periods()?;

    // cluster-ordered heatmaps per level and period
    for level in config.levels() {
        for &window in periods.windows() {
            let matrix: CoocMatrix = load(
                out_dir,
                &matrix_rel_path(level, window),
                "meshforge cooccur (or meshforge run)",
            )?;
            let clustering: ClusteringArtifact = match load(
                out_dir,
                &clusters_rel_path(level, window),
                "meshforge cluster (or meshforge run)",
            ) {
                Ok(c) => c,
                // a window with no articles has no clustering artifact
                Err(Error::MissingArtifact { .. }) if matrix.is_all_zero() => continue,
                Err(e) => return Err(e),
            };
            write_heatmap(out_dir, level, window, &matrix, &clustering)?;
        }
    }

    // bridge rank series with the smoothing the figures use
    let series: BridgeSeries = load(
        out_dir,
        "bridges/series.json",
        "meshforge bridges (or meshforge run)",
    )?;
    let mut out = create(out_dir, "plotdata/bridge_rank_series.csv")?;
    writeln!(out, "#schema: meshforge.plot-bridge-ranks.v1")?;
    writeln!(out, "node,year,rank,norm_rank,smoothed_norm_rank")?;
    for (node, points) in &series.points {
        let smoothed = series.smoothed_norm_rank(node, config.bridges.smoothing_window);
        for (p, (sy, sv)) in points.iter().zip(smoothed) {
            debug_assert_eq!(p.year, sy);
            writeln!(
                out,
                "{},{},{},{},{sv}",
                csv_field(node),
                p.year,
                p.rank,
                p.norm_rank
            )?;
        }
    }
    out.flush()?;

    // convergence fractions, wide by mode
    let fx: FxArtifact = load(
        out_dir,
        "diversity/fx.json",
        "meshforge cooccur (or meshforge run)",
    )?;
    let mut out = create(out_dir, "plotdata/fx.csv")?;
    writeln!(out, "#schema: meshforge.plot-fx.v1")?;
    let names: Vec<&str> = fx.modes.iter().map(|(m, _)| m.as_str()).collect();
    writeln!(out, "year,{}", names.join(","))?;
    if let Some((_, first)) = fx.modes.first() {
        for &year in first.total.keys() {
            let mut row = year.to_string();
            for (_, yf) in &fx.modes {
                let total = yf.total.get(&year).copied().unwrap_or(0);
                let flagged = yf.flagged.get(&year).copied().unwrap_or(0);
                let fraction = if total == 0 {
                    0.0
                } else {
                    flagged as f64 / total as f64
                };
                row.push_str(&format!(",{fraction}"));
            }
            writeln!(out, "{row}")?;
        }
    }
    out.flush()?;

    // windowed diversity means and histograms
    let aggregate: DiversityAggregate = load(
        out_dir,
        "diversity/aggregate.json",
        "meshforge cooccur (or meshforge run)",
    )?;
    let mut out = create(out_dir, "plotdata/fd_windows.csv")?;
    writeln!(out, "#schema: meshforge.plot-fd-windows.v1")?;
    writeln!(out, "window_start,mean,std,count")?;
    for (&start, acc) in &aggregate.by_window {
        writeln!(out, "{start},{},{},{}", acc.mean(), acc.std(), acc.count)?;
    }
    out.flush()?;

    let mut out = create(out_dir, "plotdata/fd_histograms.csv")?;
    writeln!(out, "#schema: meshforge.plot-fd-histograms.v1")?;
    writeln!(out, "window_start,bin_lo,bin_hi,count,share")?;
    for (&start, hist) in &aggregate.histograms {
        let total = hist.count.max(1) as f64;
        writeln!(out, "{start},0,0,{},{}", hist.zero, hist.zero as f64 / total)?;
        let k = hist.bins.len();
        for (i, &count) in hist.bins.iter().enumerate() {
            let lo = i as f64 / k as f64;
            let hi = (i + 1) as f64 / k as f64;
            writeln!(out, "{start},{lo},{hi},{count},{}", count as f64 / total)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn write_heatmap(
    out_dir: &Path,
    level: Level,
    window: (i32, i32),
    matrix: &CoocMatrix,
    clustering: &ClusteringArtifact,
) -> Result<()> {
    // display order: cluster ascending, then prevalence descending, then label
    let mut order: Vec<(u32, f64, usize)> = Vec::new();
    for entry in &clustering.clusters {
        for member in &entry.members {
            let idx = matrix
                .label_index(member)
                .ok_or_else(|| Error::UnknownNode(member.clone()))?;
            order.push((entry.id, matrix.prevalence(idx), idx));
        }
    }
    order.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal))
            .then_with(|| matrix.labels[a.2].cmp(&matrix.labels[b.2]))
    });

    let rel = format!(
        "plotdata/heatmap_l{}_{}_{}.csv",
        level.as_u8(),
        window.0,
        window.1
    );
    let mut out = create(out_dir, &rel)?;
    writeln!(out, "#schema: meshforge.plot-heatmap.v1")?;
    write!(out, "label,cluster,prevalence")?;
    for &(_, _, idx) in &order {
        write!(out, ",{}", csv_field(&matrix.labels[idx]))?;
    }
    writeln!(out)?;
    for &(cluster, prevalence, i) in &order {
        write!(
            out,
            "{},{cluster},{prevalence}",
            csv_field(&matrix.labels[i])
        )?;
        for &(_, _, j) in &order {
            write!(out, ",{}", matrix.exported(i, j))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
