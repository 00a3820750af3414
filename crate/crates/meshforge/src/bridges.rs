//! Cross-cluster bridge scores, normalized bridge ranks, and
//! emerging-bridge detection.
//!
//! For a node `i` in cluster `I`, the bridge score sums, over every other
//! cluster `J` connected to `I`, the node's weight into `J` divided by the
//! total inter-cluster weight between `I` and `J`. Nodes connected only
//! within their own cluster score zero; unconnected cluster pairs
//! contribute nothing rather than dividing by zero. Scores are converted
//! to within-cluster ranks (1 = strongest bridge) and normalized by
//! cluster size, which keeps the series comparable while the underlying
//! co-occurrence totals grow with publication volume.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clusters::Clustering;
use crate::cooccur::CoocMatrix;
use crate::error::{Error, Result};
use crate::trend::PolyFit;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BridgeScores {
    pub year: i32,
    pub beta: BTreeMap<String, f64>,
    /// Within-cluster rank by descending score; ties break by label.
    pub rank: BTreeMap<String, u32>,
    /// rank / |cluster|, in (0, 1].
    pub norm_rank: BTreeMap<String, f64>,
    pub cluster: BTreeMap<String, u32>,
    pub cluster_sizes: BTreeMap<u32, usize>,
    /// Set when the clustering had fewer than two clusters, in which case
    /// every score is zero.
    pub single_cluster: bool,
}

/// Bridge scores of every clustered node of a co-occurrence network.
pub fn bridge_scores(m: &CoocMatrix, c: &Clustering, year: i32) -> Result<BridgeScores> {
    if c.assignment.is_empty() {
        return Err(Error::EmptyInput("empty clustering".to_string()));
    }
    let mut nodes: Vec<(&String, usize, u32)> = Vec::with_capacity(c.assignment.len());
    for (label, &cl) in &c.assignment {
        let idx = m
            .label_index(label)
            .ok_or_else(|| Error::UnknownNode(label.clone()))?;
        nodes.push((label, idx, cl));
    }

    let cluster_ids: Vec<u32> = c.cluster_sizes.keys().copied().collect();
    let cpos: BTreeMap<u32, usize> = cluster_ids
        .iter()
        .enumerate()
        .map(|(p, &id)| (id, p))
        .collect();
    let k = cluster_ids.len();
    let single_cluster = k < 2;

    // inter-cluster totals and per-node weights into each cluster
    let mut w_between = vec![0.0; k * k];
    let mut w_node = vec![0.0; nodes.len() * k];
    for (a, &(_, i, ci)) in nodes.iter().enumerate() {
        let pi = cpos[&ci];
        for (b, &(_, j, cj)) in nodes.iter().enumerate() {
            if a == b {
                continue;
            }
            let w = m.pair_weight(i, j);
            if w == 0.0 {
                continue;
            }
            let pj = cpos[&cj];
            w_node[a * k + pj] += w;
            if pi != pj {
                // counted once per ordered pair; halve for unordered total
                w_between[pi * k + pj] += w / 2.0;
            }
        }
    }
    // symmetrize the unordered totals
    for x in 0..k {
        for y in x + 1..k {
            let total = w_between[x * k + y] + w_between[y * k + x];
            w_between[x * k + y] = total;
            w_between[y * k + x] = total;
        }
    }

    let mut beta = BTreeMap::new();
    for (a, &(label, _, ci)) in nodes.iter().enumerate() {
        let pi = cpos[&ci];
        let mut score = 0.0;
        for pj in 0..k {
            if pj == pi {
                continue;
            }
            let between = w_between[pi * k + pj];
            if between > 0.0 {
                score += w_node[a * k + pj] / between;
            }
        }
        beta.insert(label.clone(), score);
    }

    // within-cluster ranks, descending score, ties by label order
    let mut rank = BTreeMap::new();
    let mut norm_rank = BTreeMap::new();
    for &cid in &cluster_ids {
        let mut members: Vec<&String> = nodes
            .iter()
            .filter(|&&(_, _, cl)| cl == cid)
            .map(|&(label, _, _)| label)
            .collect();
        members.sort_by(|a, b| {
            beta[*b]
                .partial_cmp(&beta[*a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.cmp(b))
        });
        let size = members.len() as f64;
        for (pos, label) in members.into_iter().enumerate() {
            let r = (pos + 1) as u32;
            rank.insert(label.clone(), r);
            norm_rank.insert(label.clone(), r as f64 / size);
        }
    }

    Ok(BridgeScores {
        year,
        beta,
        rank,
        norm_rank,
        cluster: c.assignment.clone(),
        cluster_sizes: c.cluster_sizes.clone(),
        single_cluster,
    })
}

/// Rank across the whole network instead of within clusters.
pub fn global_ranks(scores: &BridgeScores) -> BTreeMap<String, u32> {
    let mut labels: Vec<&String> = scores.beta.keys().collect();
    labels.sort_by(|a, b| {
        scores.beta[*b]
            .partial_cmp(&scores.beta[*a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.cmp(b))
    });
    labels
        .into_iter()
        .enumerate()
        .map(|(pos, l)| (l.clone(), (pos + 1) as u32))
        .collect()
}

/// One observation of a node's bridge standing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub year: i32,
    pub beta: f64,
    pub rank: u32,
    pub norm_rank: f64,
    pub cluster: u32,
    pub cluster_size: usize,
}

/// Per-node time series assembled from yearly scores.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BridgeSeries {
    pub points: BTreeMap<String, Vec<SeriesPoint>>,
}

impl BridgeSeries {
    pub fn add_year(&mut self, scores: &BridgeScores) {
        for (label, &beta) in &scores.beta {
            let cluster = scores.cluster[label];
            let point = SeriesPoint {
                year: scores.year,
                beta,
                rank: scores.rank[label],
                norm_rank: scores.norm_rank[label],
                cluster,
                cluster_size: scores.cluster_sizes[&cluster],
            };
            let series = self.points.entry(label.clone()).or_default();
            debug_assert!(series.last().is_none_or(|p| p.year < point.year));
            series.push(point);
        }
    }

    /// Centered moving average of the normalized rank, for plotting only.
    pub fn smoothed_norm_rank(&self, node: &str, window: usize) -> Vec<(i32, f64)> {
        let Some(series) = self.points.get(node) else {
            return Vec::new();
        };
        let half = window.max(1) / 2;
        series
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let lo = i.saturating_sub(half);
                let hi = (i + half + 1).min(series.len());
                let mean =
                    series[lo..hi].iter().map(|q| q.norm_rank).sum::<f64>() / (hi - lo) as f64;
                (p.year, mean)
            })
            .collect()
    }
}

/// Detection thresholds; defaults follow the four criteria the pipeline
/// uses for 1970-2018 series.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EmergingCriteria {
    /// Mean within-cluster rank must be at most this.
    pub top_rank: f64,
    /// Series length relative to the observation span.
    pub min_span_fraction: f64,
    pub p_threshold: f64,
    /// Minimum |slope| of the rank trend, in rank units per year.
    pub slope_threshold: f64,
    /// Regress on the normalized rank instead of the raw rank.
    pub use_normalized_rank: bool,
}

impl Default for EmergingCriteria {
    fn default() -> Self {
        EmergingCriteria {
            top_rank: 20.0,
            min_span_fraction: 0.5,
            p_threshold: 0.01,
            slope_threshold: 0.1,
            use_normalized_rank: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmergingBridge {
    pub node: String,
    pub slope: f64,
    pub p_value: f64,
    pub years: usize,
    pub mean_rank: f64,
    /// -1 for falling rank values (rising prominence), +1 for the reverse.
    pub direction: i8,
}

/// Nodes whose rank series passes all four criteria: average standing,
/// series coverage, trend significance, and trend magnitude.
pub fn detect_emerging(
    series: &BridgeSeries,
    span: (i32, i32),
    criteria: &EmergingCriteria,
) -> Vec<EmergingBridge> {
    let span_years = (span.1 - span.0 + 1).max(1) as f64;
    let mut out = Vec::new();
    for (node, points) in &series.points {
        if points.len() < 2 {
            continue;
        }
        let data: Vec<(f64, f64)> = points
            .iter()
            .map(|p| {
                let y = if criteria.use_normalized_rank {
                    p.norm_rank
                } else {
                    p.rank as f64
                };
                (p.year as f64, y)
            })
            .collect();
        let mean_rank =
            points.iter().map(|p| p.rank as f64).sum::<f64>() / points.len() as f64;
        if mean_rank > criteria.top_rank {
            continue;
        }
        if (points.len() as f64) < span_years * criteria.min_span_fraction {
            continue;
        }
        let Ok(fit) = PolyFit::fit(&data, 1, 0.0) else {
            continue;
        };
        let (slope, p_value) = fit.slope();
        if p_value >= criteria.p_threshold || slope.abs() <= criteria.slope_threshold {
            continue;
        }
        out.push(EmergingBridge {
            node: node.clone(),
            slope,
            p_value,
            years: points.len(),
            mean_rank,
            direction: if slope < 0.0 { -1 } else { 1 },
        });
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EgoNeighbor {
    pub label: String,
    /// Co-occurrence weight with the center node.
    pub weight: f64,
    pub cluster: Option<u32>,
    /// First character of the label: its L1 branch for L2 headings.
    pub branch: char,
}

/// Center node, its strongest neighbors in descending co-occurrence order,
/// and the weights among those neighbors. Serializes as node-link JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EgoSubnetwork {
    pub center: String,
    pub window: (i32, i32),
    #[serde(rename = "nodes")]
    pub neighbors: Vec<EgoNeighbor>,
    pub links: Vec<(String, String, f64)>,
}

/// The `k` most frequently co-occurring neighbors of a node plus their
/// pairwise weights. Ties break by label; `k` clamps to the degree.
pub fn ego_subnetwork(
    m: &CoocMatrix,
    c: &Clustering,
    node: &str,
    k: usize,
) -> Result<EgoSubnetwork> {
    let center = m
        .label_index(node)
        .ok_or_else(|| Error::UnknownNode(node.to_string()))?;
    let mut neighbors: Vec<(usize, f64)> = (0..m.n())
        .filter(|&j| j != center)
        .map(|j| (j, m.pair_weight(center, j)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    neighbors.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| m.labels[a.0].cmp(&m.labels[b.0]))
    });
    neighbors.truncate(k);

    let picked: Vec<EgoNeighbor> = neighbors
        .iter()
        .map(|&(j, w)| EgoNeighbor {
            label: m.labels[j].clone(),
            weight: w,
            cluster: c.assignment.get(&m.labels[j]).copied(),
            branch: m.labels[j].chars().next().unwrap_or('?'),
        })
        .collect();

    let mut links = Vec::new();
    for (a, &(i, _)) in neighbors.iter().enumerate() {
        for &(j, _) in &neighbors[a + 1..] {
            let w = m.pair_weight(i, j);
            if w > 0.0 {
                links.push((m.labels[i].clone(), m.labels[j].clone(), w));
            }
        }
    }

    Ok(EgoSubnetwork {
        center: node.to_string(),
        window: m.window,
        neighbors: picked,
        links,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Level;
    use std::collections::BTreeMap;

    /// Build a matrix with explicit unordered pair weights.
    fn matrix(labels: &[&str], pairs: &[(&str, &str, f64)]) -> CoocMatrix {
        let names: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        let n = labels.len();
        let mut w = vec![0.0; n * n];
        for &(a, b, pair) in pairs {
            let i = labels.iter().position(|&l| l == a).unwrap();
            let j = labels.iter().position(|&l| l == b).unwrap();
            assert_ne!(i, j);
            w[i * n + j] += pair / 2.0;
            w[j * n + i] += pair / 2.0;
        }
        CoocMatrix::from_parts(Level::L2, names, (2000, 2000), w, 0, 0).unwrap()
    }

    fn clustering(assign: &[(&str, u32)]) -> Clustering {
        let assignment: BTreeMap<String, u32> =
            assign.iter().map(|&(l, c)| (l.to_string(), c)).collect();
        let mut cluster_sizes: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in assignment.values() {
            *cluster_sizes.entry(c).or_insert(0) += 1;
        }
        Clustering {
            assignment,
            modularity: 0.0,
            cluster_sizes,
            seed: 0,
            resolution: 1.0,
            excluded: Vec::new(),
        }
    }

    #[test]
    fn four_node_fixture_scores() {
        // clusters {1,2} and {3,4}; cross weights W13=2, W23=1
        let m = matrix(
            &["n1", "n2", "n3", "n4"],
            &[
                ("n1", "n2", 5.0),
                ("n3", "n4", 4.0),
                ("n1", "n3", 2.0),
                ("n2", "n3", 1.0),
            ],
        );
        let c = clustering(&[("n1", 1), ("n2", 1), ("n3", 2), ("n4", 2)]);
        let s = bridge_scores(&m, &c, 2000).unwrap();
        assert!((s.beta["n1"] - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.beta["n2"] - 1.0 / 3.0).abs() < 1e-12);
        assert!((s.beta["n3"] - 1.0).abs() < 1e-12);
        assert_eq!(s.beta["n4"], 0.0);
        // node 3 is rank 1 of its 2-node cluster
        assert_eq!(s.rank["n3"], 1);
        assert!((s.norm_rank["n3"] - 0.5).abs() < 1e-12);
        assert_eq!(s.rank["n1"], 1);
        assert_eq!(s.rank["n2"], 2);
    }

    #[test]
    fn internal_only_node_scores_zero() {
        let m = matrix(
            &["a", "b", "c", "d"],
            &[("a", "b", 3.0), ("c", "d", 3.0), ("b", "c", 1.0)],
        );
        let c = clustering(&[("a", 1), ("b", 1), ("c", 2), ("d", 2)]);
        let s = bridge_scores(&m, &c, 2000).unwrap();
        assert_eq!(s.beta["d"], 0.0);
        assert!(s.beta["b"] > 0.0);
    }

    #[test]
    fn uniform_bipartite_cross_weights_tie() {
        let m = matrix(
            &["a", "b", "x", "y"],
            &[
                ("a", "b", 2.0),
                ("x", "y", 2.0),
                ("a", "x", 0.5),
                ("a", "y", 0.5),
                ("b", "x", 0.5),
                ("b", "y", 0.5),
            ],
        );
        let c = clustering(&[("a", 1), ("b", 1), ("x", 2), ("y", 2)]);
        let s = bridge_scores(&m, &c, 2000).unwrap();
        let first = s.beta["a"];
        for n in ["b", "x", "y"] {
            assert!((s.beta[n] - first).abs() < 1e-12);
        }
        // ties rank by label order
        assert_eq!(s.rank["a"], 1);
        assert_eq!(s.rank["b"], 2);
    }

    #[test]
    fn single_cluster_flags_and_zeroes() {
        let m = matrix(&["a", "b"], &[("a", "b", 1.0)]);
        let c = clustering(&[("a", 1), ("b", 1)]);
        let s = bridge_scores(&m, &c, 2000).unwrap();
        assert!(s.single_cluster);
        assert_eq!(s.beta["a"], 0.0);
        assert_eq!(s.beta["b"], 0.0);
        // all-zero cluster still ranks 1..n by label
        assert_eq!(s.rank["a"], 1);
        assert_eq!(s.rank["b"], 2);
        assert!((s.norm_rank["b"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn per_pair_contributions_decompose() {
        let m = matrix(
            &["a", "b", "x", "y", "z"],
            &[
                ("a", "b", 1.0),
                ("x", "y", 1.0),
                ("a", "x", 0.7),
                ("b", "y", 0.3),
                ("a", "z", 0.2),
            ],
        );
        let c = clustering(&[("a", 1), ("b", 1), ("x", 2), ("y", 2), ("z", 3)]);
        let s = bridge_scores(&m, &c, 2000).unwrap();
        // each connected cluster pair contributes exactly 1 across the
        // cluster's members: cluster 1 reaches clusters 2 and 3
        let cluster1_total = s.beta["a"] + s.beta["b"];
        assert!((cluster1_total - 2.0).abs() < 1e-12);
        // and beta for a includes the z-cluster pair fully
        assert!((s.beta["a"] - (0.7 / 1.0 + 0.2 / 0.2)).abs() < 1e-12);
    }

    #[test]
    fn scale_invariance() {
        let labels = ["a", "b", "x", "y"];
        let pairs = [
            ("a", "b", 2.0),
            ("x", "y", 1.0),
            ("a", "x", 0.5),
            ("b", "y", 0.25),
        ];
        let scaled: Vec<(&str, &str, f64)> =
            pairs.iter().map(|&(a, b, w)| (a, b, w * 37.5)).collect();
        let c = clustering(&[("a", 1), ("b", 1), ("x", 2), ("y", 2)]);
        let s1 = bridge_scores(&matrix(&labels, &pairs), &c, 2000).unwrap();
        let s2 = bridge_scores(&matrix(&labels, &scaled), &c, 2000).unwrap();
        for l in labels {
            assert!((s1.beta[l] - s2.beta[l]).abs() < 1e-9);
            assert_eq!(s1.rank[l], s2.rank[l]);
        }
    }

    fn series_from_ranks(node: &str, ranks: &[(i32, u32)], cluster_size: usize) -> BridgeSeries {
        let mut s = BridgeSeries::default();
        for &(year, rank) in ranks {
            s.points.entry(node.to_string()).or_default().push(SeriesPoint {
                year,
                beta: 0.0,
                rank,
                norm_rank: rank as f64 / cluster_size as f64,
                cluster: 1,
                cluster_size,
            });
        }
        s
    }

    #[test]
    fn emerging_detects_linear_riser() {
        // rank falls linearly 30 -> 1 over 49 years
        let ranks: Vec<(i32, u32)> = (0..49)
            .map(|i| (1970 + i, (30.0 - 29.0 * (i as f64) / 48.0).round() as u32))
            .collect();
        let s = series_from_ranks("riser", &ranks, 40);
        let found = detect_emerging(&s, (1970, 2018), &EmergingCriteria::default());
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].node, "riser");
        assert_eq!(found[0].direction, -1);
        assert!(found[0].slope < -0.1);
        assert!(found[0].p_value < 0.01);
    }

    #[test]
    fn emerging_rejects_constant_and_short_series() {
        let flat: Vec<(i32, u32)> = (0..49).map(|i| (1970 + i, 5)).collect();
        let s = series_from_ranks("flat", &flat, 40);
        assert!(detect_emerging(&s, (1970, 2018), &EmergingCriteria::default()).is_empty());

        let short: Vec<(i32, u32)> = (0..20)
            .map(|i| (1970 + i, (30 - i) as u32))
            .collect();
        let s = series_from_ranks("short", &short, 40);
        // 20 years < 49/2
        assert!(detect_emerging(&s, (1970, 2018), &EmergingCriteria::default()).is_empty());

        // a single observation cannot carry a trend at all
        let s = series_from_ranks("dot", &[(1990, 1)], 40);
        assert!(detect_emerging(&s, (1970, 2018), &EmergingCriteria::default()).is_empty());
    }

    #[test]
    fn loosening_criteria_is_monotone() {
        let ranks: Vec<(i32, u32)> = (0..30)
            .map(|i| (1970 + i, (25.0 - 0.5 * i as f64).round() as u32))
            .collect();
        let s = series_from_ranks("node", &ranks, 40);
        let tight = EmergingCriteria::default();
        let detected_tight = detect_emerging(&s, (1970, 2018), &tight);
        for loose in [
            EmergingCriteria { top_rank: 40.0, ..tight },
            EmergingCriteria { min_span_fraction: 0.25, ..tight },
            EmergingCriteria { p_threshold: 0.1, ..tight },
            EmergingCriteria { slope_threshold: 0.01, ..tight },
        ] {
            let detected_loose = detect_emerging(&s, (1970, 2018), &loose);
            for d in &detected_tight {
                assert!(detected_loose.iter().any(|x| x.node == d.node));
            }
        }
    }

    #[test]
    fn ego_network_star_and_clamp() {
        let leaves: Vec<String> = (0..10).map(|i| format!("leaf{i:02}")).collect();
        let mut labels: Vec<&str> = vec!["hub"];
        labels.extend(leaves.iter().map(|s| s.as_str()));
        let pairs: Vec<(&str, &str, f64)> = leaves
            .iter()
            .enumerate()
            .map(|(i, l)| ("hub", l.as_str(), 1.0 + i as f64))
            .collect();
        let m = matrix(&labels, &pairs);
        let mut assign: Vec<(&str, u32)> = vec![("hub", 1)];
        assign.extend(leaves.iter().map(|l| (l.as_str(), 1)));
        let c = clustering(&assign);

        let ego = ego_subnetwork(&m, &c, "hub", 10).unwrap();
        assert_eq!(ego.neighbors.len(), 10);
        // descending by weight: leaf09 first
        assert_eq!(ego.neighbors[0].label, "leaf09");
        assert!(ego.links.is_empty());

        let ego3 = ego_subnetwork(&m, &c, "leaf00", 10).unwrap();
        assert_eq!(ego3.neighbors.len(), 1); // only the hub co-occurs

        assert!(matches!(
            ego_subnetwork(&m, &c, "nope", 5),
            Err(Error::UnknownNode(_))
        ));
    }

    #[test]
    fn ego_orders_ties_by_label() {
        let m = matrix(
            &["c", "b", "a", "center"],
            &[("center", "c", 1.0), ("center", "b", 1.0), ("center", "a", 2.0)],
        );
        let cl = clustering(&[("a", 1), ("b", 1), ("c", 1), ("center", 1)]);
        let ego = ego_subnetwork(&m, &cl, "center", 10).unwrap();
        let names: Vec<&str> = ego.neighbors.iter().map(|n| n.label.as_str()).collect();
        assert_eq!(names, vec!["a", "b", "c"]);
    }
}
