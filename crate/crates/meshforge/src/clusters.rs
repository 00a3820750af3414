//! Modularity clustering of co-occurrence networks and cross-year
//! cluster-continuity tracking.
//!
//! Louvain runs on the doubled-weight adjacency (pair weights off the
//! diagonal, twice the mono-category mass as self-loops) so that the usual
//! weighted-modularity definition applies unchanged. Node visit order is
//! drawn from a seeded generator and every other iteration is over sorted
//! structures, making runs reproducible for a given seed.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cooccur::CoocMatrix;
use crate::error::{Error, Result};

/// A partition of the network nodes, with canonical 1-based cluster ids
/// ordered by descending internal mass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Clustering {
    pub assignment: BTreeMap<String, u32>,
    pub modularity: f64,
    pub cluster_sizes: BTreeMap<u32, usize>,
    pub seed: u64,
    pub resolution: f64,
    /// Labels with zero total weight, left out of the network.
    pub excluded: Vec<String>,
}

impl Clustering {
    pub fn cluster_count(&self) -> usize {
        self.cluster_sizes.len()
    }

    pub fn members(&self, cluster: u32) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &c)| c == cluster)
            .map(|(l, _)| l.as_str())
            .collect()
    }
}

/// Standard weighted modularity of an assignment, recomputed from scratch.
pub fn modularity(
    m: &CoocMatrix,
    assignment: &BTreeMap<String, u32>,
    resolution: f64,
) -> Result<f64> {
    if assignment.is_empty() {
        return Err(Error::EmptyInput("empty assignment".to_string()));
    }
    let mut nodes = Vec::with_capacity(assignment.len());
    for (label, &comm) in assignment {
        let idx = m
            .label_index(label)
            .ok_or_else(|| Error::UnknownNode(label.clone()))?;
        nodes.push((idx, comm));
    }
    let mut two_m = 0.0;
    let mut tot: BTreeMap<u32, f64> = BTreeMap::new();
    let mut internal: BTreeMap<u32, f64> = BTreeMap::new();
    for &(i, ci) in &nodes {
        let mut k = 0.0;
        for &(j, cj) in &nodes {
            let a = 2.0 * m.cell(i, j);
            k += a;
            if ci == cj {
                *internal.entry(ci).or_insert(0.0) += a;
            }
        }
        two_m += k;
        *tot.entry(ci).or_insert(0.0) += k;
    }
    if two_m == 0.0 {
        return Err(Error::EmptyMatrix);
    }
    let mut q = 0.0;
    for (c, &inn) in &internal {
        let t = tot[c] / two_m;
        q += inn / two_m - resolution * t * t;
    }
    // clusters with no internal mass still contribute their null term
    for (c, &t) in &tot {
        if !internal.contains_key(c) {
            let t = t / two_m;
            q -= resolution * t * t;
        }
    }
    Ok(q)
}

struct Graph {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
    strength: Vec<f64>,
    two_m: f64,
}

impl Graph {
    fn from_matrix(m: &CoocMatrix) -> (Graph, Vec<usize>, Vec<String>) {
        let mut kept = Vec::new();
        let mut excluded = Vec::new();
        for i in 0..m.n() {
            if m.strength(i) > 0.0 {
                kept.push(i);
            } else {
                excluded.push(m.labels[i].clone());
            }
        }
        let n = kept.len();
        let mut adj = vec![Vec::new(); n];
        let mut self_loop = vec![0.0; n];
        for (p, &i) in kept.iter().enumerate() {
            self_loop[p] = 2.0 * m.cell(i, i);
        }
        for a in 0..n {
            for b in a + 1..n {
                let w = m.pair_weight(kept[a], kept[b]);
                if w > 0.0 {
                    adj[a].push((b, w));
                    adj[b].push((a, w));
                }
            }
        }
        let mut strength = vec![0.0; n];
        let mut two_m = 0.0;
        for v in 0..n {
            let s: f64 = self_loop[v] + adj[v].iter().map(|&(_, w)| w).sum::<f64>();
            strength[v] = s;
            two_m += s;
        }
        (
            Graph {
                n,
                adj,
                self_loop,
                strength,
                two_m,
            },
            kept,
            excluded,
        )
    }

    /// Collapse communities into meta-nodes. `comm` must hold dense ids.
    fn aggregate(&self, comm: &[usize], comm_count: usize) -> Graph {
        let mut self_loop = vec![0.0; comm_count];
        let mut edge: HashMap<(usize, usize), f64> = HashMap::new();
        for v in 0..self.n {
            let cv = comm[v];
            self_loop[cv] += self.self_loop[v];
            for &(u, w) in &self.adj[v] {
                let cu = comm[u];
                if cu == cv {
                    // each undirected edge visited from both endpoints
                    self_loop[cv] += w;
                } else {
                    let key = (cv.min(cu), cv.max(cu));
                    *edge.entry(key).or_insert(0.0) += w / 2.0;
                }
            }
        }
        let mut adj = vec![Vec::new(); comm_count];
        let mut edges: Vec<((usize, usize), f64)> = edge.into_iter().collect();
        edges.sort_by_key(|&(k, _)| k);
        for ((a, b), w) in edges {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        let mut strength = vec![0.0; comm_count];
        let mut two_m = 0.0;
        for v in 0..comm_count {
            let s: f64 = self_loop[v] + adj[v].iter().map(|&(_, w)| w).sum::<f64>();
            strength[v] = s;
            two_m += s;
        }
        Graph {
            n: comm_count,
            adj,
            self_loop,
            strength,
            two_m,
        }
    }
}

/// One Louvain local-move phase. Returns the number of moves made.
fn local_moves(g: &Graph, comm: &mut [usize], resolution: f64, rng: &mut ChaCha8Rng) -> usize {
    let mut comm_tot: Vec<f64> = vec![0.0; g.n];
    for v in 0..g.n {
        comm_tot[comm[v]] += g.strength[v];
    }
    let mut order: Vec<usize> = (0..g.n).collect();
    order.shuffle(rng);

    let mut total_moves = 0;
    loop {
        let mut moves = 0;
        for &v in &order {
            let cv = comm[v];
            let kv = g.strength[v];
            let mut w_to: HashMap<usize, f64> = HashMap::new();
            for &(u, w) in &g.adj[v] {
                *w_to.entry(comm[u]).or_insert(0.0) += w;
            }
            comm_tot[cv] -= kv;
            let gain_of = |w: f64, tot: f64| w - resolution * kv * tot / g.two_m;
            let stay_w = w_to.get(&cv).copied().unwrap_or(0.0);
            let mut best_c = cv;
            let mut best_gain = gain_of(stay_w, comm_tot[cv]);
            let mut candidates: Vec<usize> = w_to.keys().copied().collect();
            candidates.sort_unstable();
            for c in candidates {
                if c == cv {
                    continue;
                }
                let gain = gain_of(w_to[&c], comm_tot[c]);
                if gain > best_gain {
                    best_gain = gain;
                    best_c = c;
                }
            }
            comm_tot[best_c] += kv;
            if best_c != cv {
                comm[v] = best_c;
                moves += 1;
            }
        }
        total_moves += moves;
        if moves == 0 {
            break;
        }
    }
    total_moves
}

/// Louvain modularity maximization. Deterministic for a given seed; the
/// resolution parameter scales the null-model term.
pub fn louvain(m: &CoocMatrix, seed: u64, resolution: f64) -> Result<Clustering> {
    let (mut graph, kept, excluded) = Graph::from_matrix(m);
    if graph.n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // assignment of original nodes through all aggregation levels
    let mut node_comm: Vec<usize> = (0..graph.n).collect();
    loop {
        let mut comm: Vec<usize> = (0..graph.n).collect();
        let moved = local_moves(&graph, &mut comm, resolution, &mut rng);
        if moved == 0 {
            break;
        }
        // densify community ids in sorted order
        let mut ids: Vec<usize> = comm.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let dense: HashMap<usize, usize> = ids.iter().enumerate().map(|(d, &c)| (c, d)).collect();
        for c in comm.iter_mut() {
            *c = dense[c];
        }
        for nc in node_comm.iter_mut() {
            *nc = comm[*nc];
        }
        if ids.len() == graph.n {
            break;
        }
        graph = graph.aggregate(&comm, ids.len());
    }

    // canonical ids: descending internal mass, then smallest member label
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &c) in node_comm.iter().enumerate() {
        groups.entry(c).or_default().push(v);
    }
    let mut ordered: Vec<(f64, &String, Vec<usize>)> = Vec::new();
    for members in groups.into_values() {
        let mut internal = 0.0;
        for (a, &i) in members.iter().enumerate() {
            internal += m.diagonal(kept[i]);
            for &j in &members[a + 1..] {
                internal += m.pair_weight(kept[i], kept[j]);
            }
        }
        let min_label = members
            .iter()
            .map(|&v| &m.labels[kept[v]])
            .min()
            .expect("non-empty cluster");
        ordered.push((internal, min_label, members));
    }
    ordered.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });

    let mut assignment = BTreeMap::new();
    let mut cluster_sizes = BTreeMap::new();
    for (rank, (_, _, members)) in ordered.into_iter().enumerate() {
        let id = (rank + 1) as u32;
        cluster_sizes.insert(id, members.len());
        for v in members {
            assignment.insert(m.labels[kept[v]].clone(), id);
        }
    }

    let q = modularity(m, &assignment, resolution)?;
    Ok(Clustering {
        assignment,
        modularity: q,
        cluster_sizes,
        seed,
        resolution,
        excluded,
    })
}

/// Table of (year, cluster id, size) rows across yearly clusterings.
pub fn cluster_size_series(years: &[(i32, &Clustering)]) -> Vec<(i32, u32, usize)> {
    let mut rows = Vec::new();
    for (year, clustering) in years {
        for (&id, &size) in &clustering.cluster_sizes {
            rows.push((*year, id, size));
        }
    }
    rows
}

/// Stable cliques: the finest partition whose parts stay together in every
/// yearly clustering (the meet of the yearly partitions). Nodes absent from
/// a year cannot certify co-membership and end up as singletons.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CliqueCatalog {
    /// Sorted member lists, ordered by their smallest member.
    pub cliques: Vec<Vec<String>>,
    pub membership: BTreeMap<String, usize>,
}

pub fn stable_cliques(years: &[(i32, &Clustering)]) -> Result<CliqueCatalog> {
    if years.is_empty() {
        return Err(Error::EmptyInput("no yearly clusterings".to_string()));
    }
    let mut universe: BTreeSet<String> = BTreeSet::new();
    for (_, c) in years {
        universe.extend(c.assignment.keys().cloned());
    }
    // iteratively split blocks by each year's assignment
    let mut block: BTreeMap<&str, u64> = universe
        .iter()
        .map(|l| (l.as_str(), 0u64))
        .collect();
    for (_, clustering) in years {
        let mut renumber: HashMap<(u64, Option<u32>, Option<&str>), u64> = HashMap::new();
        let mut next = 0u64;
        let mut updates: Vec<(&str, u64)> = Vec::new();
        for (&label, &b) in &block {
            let year_comm = clustering.assignment.get(label).copied();
            // absent nodes split into singletons via their own label
            let key = match year_comm {
                Some(c) => (b, Some(c), None),
                None => (b, None, Some(label)),
            };
            let id = *renumber.entry(key).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            updates.push((label, id));
        }
        for (label, id) in updates {
            block.insert(label, id);
        }
    }

    let mut by_block: BTreeMap<u64, Vec<String>> = BTreeMap::new();
    for (label, b) in block {
        by_block.entry(b).or_default().push(label.to_string());
    }
    let mut cliques: Vec<Vec<String>> = by_block.into_values().collect();
    for c in cliques.iter_mut() {
        c.sort();
    }
    cliques.sort_by(|a, b| a[0].cmp(&b[0]));
    let membership = cliques
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |l| (l.clone(), i)))
        .collect();
    Ok(CliqueCatalog { cliques, membership })
}

impl CliqueCatalog {
    /// Ids of the multi-member cliques wholly contained in `node`'s
    /// cluster under `clustering`; `None` when the node is not clustered.
    ///
    /// Singleton parts carry no identification value (a lone mover would
    /// always share its own label across years, making full discontinuity
    /// unobservable), so only cliques of two or more members label a
    /// cluster, and a clique split across clusters labels none.
    pub fn cluster_labels(
        &self,
        clustering: &Clustering,
        node: &str,
    ) -> Option<BTreeSet<usize>> {
        let cluster = *clustering.assignment.get(node)?;
        let mut present = BTreeSet::new();
        for (q, members) in self.cliques.iter().enumerate() {
            if members.len() < 2 {
                continue;
            }
            let mut ids = members
                .iter()
                .filter_map(|l| clustering.assignment.get(l).copied());
            let Some(first) = ids.next() else { continue };
            if first == cluster && ids.all(|c| c == cluster) {
                present.insert(q);
            }
        }
        Some(present)
    }
}

/// Jaccard distance between two label sets; 0 for two empty sets.
pub fn jaccard_distance(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    (union - inter) as f64 / union as f64
}

/// Cluster continuity of a node between two consecutive years: the Jaccard
/// distance between the clique-label sets of its surrounding clusters.
/// `None` when the node is absent from either year.
pub fn continuity(
    catalog: &CliqueCatalog,
    at_t: &Clustering,
    at_next: &Clustering,
    node: &str,
) -> Option<f64> {
    let q_t = catalog.cluster_labels(at_t, node)?;
    let q_next = catalog.cluster_labels(at_next, node)?;
    Some(jaccard_distance(&q_t, &q_next))
}

/// Frequency of the three continuity regimes in one year transition.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ContinuityHistogram {
    pub stable: u64,
    pub partial: u64,
    pub switched: u64,
}

impl ContinuityHistogram {
    pub fn push(&mut self, delta_j: f64) {
        if delta_j <= 0.0 {
            self.stable += 1;
        } else if delta_j >= 1.0 {
            self.switched += 1;
        } else {
            self.partial += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.stable + self.partial + self.switched
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::Level;

    fn matrix_from_pairs(labels: &[&str], pairs: &[(&str, &str, f64)]) -> CoocMatrix {
        let names: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        let mut m = CoocMatrix::new(Level::L2, names, (2000, 2000));
        let mut w = vec![0.0; labels.len() * labels.len()];
        for &(a, b, pair) in pairs {
            let i = labels.iter().position(|&l| l == a).unwrap();
            let j = labels.iter().position(|&l| l == b).unwrap();
            if i == j {
                w[i * labels.len() + i] += pair;
            } else {
                w[i * labels.len() + j] += pair / 2.0;
                w[j * labels.len() + i] += pair / 2.0;
            }
        }
        m = CoocMatrix::from_parts(Level::L2, m.labels.clone(), (2000, 2000), w, 0, 0).unwrap();
        m
    }

    fn clustering_of(assignment: &[(&str, u32)]) -> Clustering {
        let map: BTreeMap<String, u32> = assignment
            .iter()
            .map(|&(l, c)| (l.to_string(), c))
            .collect();
        let mut sizes: BTreeMap<u32, usize> = BTreeMap::new();
        for &c in map.values() {
            *sizes.entry(c).or_insert(0) += 1;
        }
        Clustering {
            assignment: map,
            modularity: 0.0,
            cluster_sizes: sizes,
            seed: 0,
            resolution: 1.0,
            excluded: Vec::new(),
        }
    }

    #[test]
    fn two_cliques_with_weak_bridge_split() {
        let labels = ["a1", "a2", "a3", "b1", "b2", "b3"];
        let mut pairs = vec![
            ("a1", "a2", 1.0),
            ("a1", "a3", 1.0),
            ("a2", "a3", 1.0),
            ("b1", "b2", 1.0),
            ("b1", "b3", 1.0),
            ("b2", "b3", 1.0),
        ];
        pairs.push(("a3", "b1", 0.01));
        let m = matrix_from_pairs(&labels, &pairs);
        let c = louvain(&m, 42, 1.0).unwrap();
        assert_eq!(c.cluster_count(), 2);
        assert_eq!(c.assignment["a1"], c.assignment["a2"]);
        assert_eq!(c.assignment["a1"], c.assignment["a3"]);
        assert_eq!(c.assignment["b1"], c.assignment["b2"]);
        assert_eq!(c.assignment["b1"], c.assignment["b3"]);
        assert_ne!(c.assignment["a1"], c.assignment["b1"]);
    }

    #[test]
    fn single_self_loop_node() {
        let m = matrix_from_pairs(&["x"], &[("x", "x", 3.0)]);
        let c = louvain(&m, 42, 1.0).unwrap();
        assert_eq!(c.cluster_count(), 1);
        assert!(c.modularity.abs() < 1e-12);
    }

    #[test]
    fn zero_weight_nodes_are_excluded() {
        let m = matrix_from_pairs(&["a", "b", "ghost"], &[("a", "b", 1.0)]);
        let c = louvain(&m, 42, 1.0).unwrap();
        assert_eq!(c.excluded, vec!["ghost".to_string()]);
        assert!(!c.assignment.contains_key("ghost"));
    }

    #[test]
    fn all_zero_matrix_is_an_error() {
        let m = CoocMatrix::new(Level::L2, vec!["a".to_string()], (2000, 2000));
        assert!(matches!(louvain(&m, 1, 1.0), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn reported_q_matches_recomputation_and_seeds_agree() {
        let labels = ["a", "b", "c", "d", "e"];
        let m = matrix_from_pairs(
            &labels,
            &[
                ("a", "b", 2.0),
                ("b", "c", 0.5),
                ("c", "d", 1.5),
                ("d", "e", 1.0),
                ("a", "e", 0.25),
                ("c", "c", 0.75),
            ],
        );
        let c1 = louvain(&m, 7, 1.0).unwrap();
        let c2 = louvain(&m, 7, 1.0).unwrap();
        assert_eq!(c1.assignment, c2.assignment);
        let q = modularity(&m, &c1.assignment, 1.0).unwrap();
        assert!((q - c1.modularity).abs() < 1e-12);
        // never below the trivial single-cluster partition
        let single: BTreeMap<String, u32> =
            labels.iter().map(|l| (l.to_string(), 1)).collect();
        let q_single = modularity(&m, &single, 1.0).unwrap();
        assert!(c1.modularity >= q_single - 1e-12);
    }

    #[test]
    fn canonical_ids_order_by_internal_mass() {
        // heavier pair should become cluster 1
        let m = matrix_from_pairs(
            &["x1", "x2", "y1", "y2"],
            &[("x1", "x2", 0.5), ("y1", "y2", 5.0), ("x1", "y1", 0.01)],
        );
        let c = louvain(&m, 42, 1.0).unwrap();
        assert_eq!(c.assignment["y1"], 1);
        assert_eq!(c.assignment["x1"], 2);
    }

    #[test]
    fn size_series_rows() {
        let c1 = clustering_of(&[("a", 1), ("b", 1), ("c", 2)]);
        let rows = cluster_size_series(&[(1990, &c1), (1991, &c1)]);
        assert_eq!(rows, vec![(1990, 1, 2), (1990, 2, 1), (1991, 1, 2), (1991, 2, 1)]);
    }

    #[test]
    fn size_series_shows_merge_event() {
        let split = clustering_of(&[("a", 1), ("b", 1), ("c", 2), ("d", 2)]);
        let joined = clustering_of(&[("a", 1), ("b", 1), ("c", 1), ("d", 1)]);
        let rows = cluster_size_series(&[(2001, &split), (2002, &joined)]);
        let year1: Vec<_> = rows.iter().filter(|r| r.0 == 2001).collect();
        let year2: Vec<_> = rows.iter().filter(|r| r.0 == 2002).collect();
        assert_eq!(year1.len(), 2);
        assert_eq!(year2.len(), 1);
        assert_eq!(year2[0].2, 4);
    }

    #[test]
    fn clique_meet_worked_example() {
        let y1 = clustering_of(&[("A", 1), ("B", 1), ("C", 2)]);
        let y2 = clustering_of(&[("A", 1), ("B", 1), ("C", 1)]);
        let catalog = stable_cliques(&[(1, &y1), (2, &y2)]).unwrap();
        assert_eq!(
            catalog.cliques,
            vec![
                vec!["A".to_string(), "B".to_string()],
                vec!["C".to_string()]
            ]
        );
    }

    #[test]
    fn identical_years_make_cliques_equal_clusters() {
        let y = clustering_of(&[("A", 1), ("B", 1), ("C", 2), ("D", 2)]);
        let catalog = stable_cliques(&[(1, &y), (2, &y), (3, &y)]).unwrap();
        assert_eq!(catalog.cliques.len(), 2);
        assert_eq!(catalog.cliques[0], vec!["A".to_string(), "B".to_string()]);
        assert_eq!(catalog.cliques[1], vec!["C".to_string(), "D".to_string()]);
    }

    #[test]
    fn absent_node_becomes_singleton() {
        let y1 = clustering_of(&[("A", 1), ("B", 1), ("C", 1)]);
        let y2 = clustering_of(&[("A", 1), ("B", 1)]); // C absent
        let catalog = stable_cliques(&[(1, &y1), (2, &y2)]).unwrap();
        assert!(catalog.cliques.contains(&vec!["C".to_string()]));
        assert!(catalog
            .cliques
            .contains(&vec!["A".to_string(), "B".to_string()]));
    }

    #[test]
    fn cliques_refine_every_year() {
        let y1 = clustering_of(&[("A", 1), ("B", 1), ("C", 2), ("D", 2), ("E", 2)]);
        let y2 = clustering_of(&[("A", 1), ("B", 2), ("C", 2), ("D", 1), ("E", 2)]);
        let catalog = stable_cliques(&[(1, &y1), (2, &y2)]).unwrap();
        for clique in &catalog.cliques {
            for year in [&y1, &y2] {
                let ids: BTreeSet<u32> = clique
                    .iter()
                    .map(|l| year.assignment[l])
                    .collect();
                assert_eq!(ids.len(), 1, "clique {:?} split in a year", clique);
            }
        }
    }

    #[test]
    fn jaccard_worked_cases() {
        let s = |v: &[usize]| v.iter().copied().collect::<BTreeSet<usize>>();
        assert_eq!(jaccard_distance(&s(&[1, 2]), &s(&[1, 2])), 0.0);
        assert_eq!(jaccard_distance(&s(&[1]), &s(&[2])), 1.0);
        let d = jaccard_distance(&s(&[1, 2]), &s(&[1, 3]));
        assert!((d - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard_distance(&s(&[]), &s(&[])), 0.0);
    }

    #[test]
    fn continuity_uses_surrounding_cluster() {
        let y1 = clustering_of(&[("A", 1), ("B", 1), ("C", 2), ("D", 2)]);
        let y2 = clustering_of(&[("A", 1), ("B", 1), ("C", 2), ("D", 2)]);
        let catalog = stable_cliques(&[(1, &y1), (2, &y2)]).unwrap();
        assert_eq!(continuity(&catalog, &y1, &y2, "A"), Some(0.0));
        assert_eq!(continuity(&catalog, &y1, &y2, "missing"), None);
        // move A to the other cluster in year 2: full switch
        let y2b = clustering_of(&[("A", 2), ("B", 1), ("C", 2), ("D", 2)]);
        let d = continuity(&catalog, &y1, &y2b, "A").unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn continuity_histogram_bins() {
        let mut h = ContinuityHistogram::default();
        for v in [0.0, 0.0, 0.5, 1.0] {
            h.push(v);
        }
        assert_eq!((h.stable, h.partial, h.switched), (2, 1, 1));
    }
}
