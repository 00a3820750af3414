//! Article-normalized co-occurrence matrices over time windows.
//!
//! Each article contributes total mass 1: with `M >= 2` present categories
//! every unordered pair gets `1/C(M,2)`, stored split across the two
//! symmetric cells; a mono-category article deposits its unit on the
//! diagonal. Accumulators merge by element-wise addition, so shards can be
//! combined in any grouping.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{Level, SaVector};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoocMatrix {
    pub level: Level,
    pub labels: Vec<String>,
    /// Inclusive year window.
    pub window: (i32, i32),
    /// Dense symmetric n*n weights, row-major; off-diagonal pair mass is
    /// split across both cells.
    weights: Vec<f64>,
    pub article_count: u64,
    /// Articles whose projection had no support.
    pub skipped: u64,
}

impl CoocMatrix {
    pub fn new(level: Level, labels: Vec<String>, window: (i32, i32)) -> Self {
        let n = labels.len();
        CoocMatrix {
            level,
            labels,
            window,
            weights: vec![0.0; n * n],
            article_count: 0,
            skipped: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n() + j]
    }

    /// Unordered-pair weight between two distinct categories.
    #[inline]
    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        debug_assert_ne!(i, j);
        2.0 * self.cell(i, j)
    }

    /// Mono-category mass of a label.
    #[inline]
    pub fn diagonal(&self, i: usize) -> f64 {
        self.cell(i, i)
    }

    /// The exported view: pair weight off the diagonal, mono mass on it.
    pub fn exported(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diagonal(i)
        } else {
            self.pair_weight(i, j)
        }
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Add one article's projection. Returns false (and counts a skip)
    /// when the vector has no support.
    pub fn add_article(&mut self, sa: &SaVector) -> Result<bool> {
        if sa.level != self.level || sa.counts.len() != self.n() {
            return Err(Error::LevelMismatch {
                expected: self.level.as_u8(),
                found: sa.level.as_u8(),
            });
        }
        let present = sa.present();
        let m = present.len();
        if m == 0 {
            self.skipped += 1;
            return Ok(false);
        }
        let n = self.n();
        if m == 1 {
            let i = present[0];
            self.weights[i * n + i] += 1.0;
        } else {
            // 1/(M*(M-1)) per symmetric cell totals 1 over all pairs
            let half = 1.0 / ((m * (m - 1)) as f64);
            for (a, &i) in present.iter().enumerate() {
                for &j in &present[a + 1..] {
                    self.weights[i * n + j] += half;
                    self.weights[j * n + i] += half;
                }
            }
        }
        self.article_count += 1;
        Ok(true)
    }

    /// The single-article matrix, mostly useful in tests.
    pub fn article_matrix(
        sa: &SaVector,
        labels: Vec<String>,
        window: (i32, i32),
    ) -> Result<CoocMatrix> {
        let mut m = CoocMatrix::new(sa.level, labels, window);
        m.add_article(sa)?;
        Ok(m)
    }

    /// Element-wise merge of a shard accumulated over the same basis
    /// and window.
    pub fn merge(&mut self, other: &CoocMatrix) -> Result<()> {
        if self.level != other.level || self.labels != other.labels {
            return Err(Error::LabelMismatch);
        }
        if self.window != other.window {
            return Err(Error::WindowMismatch(self.window, other.window));
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        self.article_count += other.article_count;
        self.skipped += other.skipped;
        Ok(())
    }

    /// Total stored mass, Neumaier-compensated. Equals the article count
    /// up to rounding.
    pub fn total_mass(&self) -> f64 {
        let mut sum = 0.0;
        let mut comp = 0.0;
        for &w in &self.weights {
            let t = sum + w;
            if sum.abs() >= w.abs() {
                comp += (sum - t) + w;
            } else {
                comp += (w - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    /// Mass on the diagonal (mono-category articles).
    pub fn diagonal_mass(&self) -> f64 {
        (0..self.n()).map(|i| self.diagonal(i)).sum()
    }

    /// Prevalence of a label: its row sum in the exported view.
    pub fn prevalence(&self, i: usize) -> f64 {
        (0..self.n()).map(|j| self.exported(i, j)).sum()
    }

    /// Row weight in the doubled adjacency convention used by modularity.
    pub fn strength(&self, i: usize) -> f64 {
        (0..self.n()).map(|j| 2.0 * self.cell(i, j)).sum()
    }

    pub fn is_all_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }

    /// Maximum-weight spanning tree over the pair weights, equivalent to a
    /// minimum spanning tree under distance 1/weight. Ties break by label
    /// order; labels with no pair mass are reported as isolated.
    pub fn mst_hierarchy(&self) -> Result<MstHierarchy> {
        if self.n() == 0 || self.is_all_zero() {
            return Err(Error::EmptyMatrix);
        }
        let n = self.n();
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = self.pair_weight(i, j);
                if w > 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
        let mut connected = vec![false; n];
        for &(i, j, _) in &edges {
            connected[i] = true;
            connected[j] = true;
        }
        let isolated: Vec<String> = (0..n)
            .filter(|&i| !connected[i])
            .map(|i| self.labels[i].clone())
            .collect();

        edges.sort_by(|a, b| {
            b.2.partial_cmp(&a.2)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| self.labels[a.0].cmp(&self.labels[b.0]))
                .then_with(|| self.labels[a.1].cmp(&self.labels[b.1]))
        });

        let mut dsu = Dsu::new(n);
        let mut tree = Vec::new();
        for (i, j, w) in edges {
            if dsu.union(i, j) {
                tree.push((self.labels[i].clone(), self.labels[j].clone(), w));
            }
        }
        let support = connected.iter().filter(|&&c| c).count();
        let components = support.saturating_sub(tree.len());
        Ok(MstHierarchy {
            edges: tree,
            isolated,
            components,
        })
    }

    /// Raw weights, for artifact serialization.
    pub fn raw_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn from_parts(
        level: Level,
        labels: Vec<String>,
        window: (i32, i32),
        weights: Vec<f64>,
        article_count: u64,
        skipped: u64,
    ) -> Result<CoocMatrix> {
        if weights.len() != labels.len() * labels.len() {
            return Err(Error::Config(format!(
                "weight vector length {} does not match {} labels",
                weights.len(),
                labels.len()
            )));
        }
        Ok(CoocMatrix {
            level,
            labels,
            window,
            weights,
            article_count,
            skipped,
        })
    }

    /// Full symmetric matrix CSV in the exported view, preceded by a
    /// schema line.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "#schema: meshforge.matrix.v1")?;
        write!(w, "label")?;
        for l in &self.labels {
            write!(w, ",{}", csv_field(l))?;
        }
        writeln!(w)?;
        for i in 0..self.n() {
            write!(w, "{}", csv_field(&self.labels[i]))?;
            for j in 0..self.n() {
                write!(w, ",{}", self.exported(i, j))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Edge list TSV: unordered pairs plus diagonal self-entries.
    pub fn write_edge_list<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "#schema: meshforge.edges.v1")?;
        writeln!(w, "label_a\tlabel_b\tweight")?;
        for i in 0..self.n() {
            let d = self.diagonal(i);
            if d > 0.0 {
                writeln!(w, "{}\t{}\t{}", self.labels[i], self.labels[i], d)?;
            }
            for j in i + 1..self.n() {
                let p = self.pair_weight(i, j);
                if p > 0.0 {
                    writeln!(w, "{}\t{}\t{}", self.labels[i], self.labels[j], p)?;
                }
            }
        }
        Ok(())
    }
}

/// Sidecar metadata for a matrix export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub schema: String,
    pub level: u8,
    pub window: (i32, i32),
    pub article_count: u64,
    pub skipped: u64,
    pub labels: usize,
    pub total_mass: f64,
    /// Mass from mono-category articles, stored on the diagonal.
    pub diagonal_mass: f64,
}

impl MatrixMeta {
    pub fn of(m: &CoocMatrix) -> MatrixMeta {
        MatrixMeta {
            schema: "meshforge.matrix-meta.v1".to_string(),
            level: m.level.as_u8(),
            window: m.window,
            article_count: m.article_count,
            skipped: m.skipped,
            labels: m.n(),
            total_mass: m.total_mass(),
            diagonal_mass: m.diagonal_mass(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MstHierarchy {
    /// (label_a, label_b, pair weight), in insertion order of the maximum
    /// spanning forest.
    pub edges: Vec<(String, String, f64)>,
    pub isolated: Vec<String>,
    /// Connected components among the non-isolated support.
    pub components: usize,
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn sa(level: Level, counts: Vec<u32>) -> SaVector {
        SaVector { level, counts }
    }

    #[test]
    fn three_category_article_gets_thirds() {
        // present categories C, E, G of a 10-branch basis
        let names = labels(&["A", "B", "C", "D", "E", "F", "G", "J", "L", "N"]);
        let mut counts = vec![0u32; 10];
        counts[2] = 2;
        counts[4] = 1;
        counts[6] = 1;
        let m =
            CoocMatrix::article_matrix(&sa(Level::L1, counts), names, (1970, 2018)).unwrap();
        let (c, e, g) = (2, 4, 6);
        for (i, j) in [(c, e), (c, g), (e, g)] {
            assert!((m.pair_weight(i, j) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((m.total_mass() - 1.0).abs() < 1e-12);
        assert_eq!(m.article_count, 1);
    }

    #[test]
    fn mono_category_article_hits_diagonal() {
        let names = labels(&["A", "B", "C", "D"]);
        let m = CoocMatrix::article_matrix(
            &sa(Level::L1, vec![0, 0, 0, 7]),
            names,
            (2000, 2000),
        )
        .unwrap();
        assert_eq!(m.diagonal(3), 1.0);
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn four_present_categories_six_pairs() {
        let names = labels(&["A", "B", "C", "D"]);
        let m = CoocMatrix::article_matrix(
            &sa(Level::L1, vec![1, 1, 1, 1]),
            names,
            (2000, 2000),
        )
        .unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                assert!((m.pair_weight(i, j) - 1.0 / 6.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn all_zero_projection_is_skipped() {
        let names = labels(&["A", "B"]);
        let mut m = CoocMatrix::new(Level::L1, names, (2000, 2000));
        assert!(!m.add_article(&sa(Level::L1, vec![0, 0])).unwrap());
        assert_eq!(m.skipped, 1);
        assert_eq!(m.article_count, 0);
    }

    #[test]
    fn duplicate_article_doubles_mass() {
        let names = labels(&["C", "E", "G"]);
        let v = sa(Level::L1, vec![2, 1, 1]);
        let mut m = CoocMatrix::new(Level::L1, names, (2000, 2000));
        m.add_article(&v).unwrap();
        m.add_article(&v).unwrap();
        assert!((m.pair_weight(0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.total_mass() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_stream_is_zero_matrix() {
        let m = CoocMatrix::new(Level::L1, labels(&["A", "B"]), (2000, 2001));
        assert_eq!(m.article_count, 0);
        assert!(m.is_all_zero());
        assert!(matches!(m.mst_hierarchy(), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn merge_matches_sequential() {
        let names = labels(&["A", "B", "C"]);
        let articles = [
            vec![1, 1, 0],
            vec![0, 2, 1],
            vec![1, 0, 1],
            vec![3, 0, 0],
            vec![1, 1, 1],
        ];
        let mut seq = CoocMatrix::new(Level::L1, names.clone(), (2000, 2000));
        for a in &articles {
            seq.add_article(&sa(Level::L1, a.clone())).unwrap();
        }
        let mut sh1 = CoocMatrix::new(Level::L1, names.clone(), (2000, 2000));
        let mut sh2 = CoocMatrix::new(Level::L1, names, (2000, 2000));
        for a in &articles[..2] {
            sh1.add_article(&sa(Level::L1, a.clone())).unwrap();
        }
        for a in &articles[2..] {
            sh2.add_article(&sa(Level::L1, a.clone())).unwrap();
        }
        sh1.merge(&sh2).unwrap();
        assert_eq!(sh1.article_count, seq.article_count);
        for i in 0..3 {
            for j in 0..3 {
                assert!((sh1.cell(i, j) - seq.cell(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn merge_rejects_mismatched_windows() {
        let a = CoocMatrix::new(Level::L1, labels(&["A"]), (2000, 2000));
        let mut b = CoocMatrix::new(Level::L1, labels(&["A"]), (2001, 2001));
        assert!(matches!(
            b.merge(&a),
            Err(Error::WindowMismatch((2001, 2001), (2000, 2000)))
        ));
    }

    #[test]
    fn mst_picks_heaviest_edges() {
        // weights AB=5, BC=3, AC=1 -> tree {AB, BC}
        let names = labels(&["A", "B", "C"]);
        let mut m = CoocMatrix::new(Level::L1, names, (2000, 2000));
        let n = 3;
        let mut set = |i: usize, j: usize, pair: f64| {
            m.weights[i * n + j] = pair / 2.0;
            m.weights[j * n + i] = pair / 2.0;
        };
        set(0, 1, 5.0);
        set(1, 2, 3.0);
        set(0, 2, 1.0);
        let mst = m.mst_hierarchy().unwrap();
        let mut got: Vec<(String, String)> = mst
            .edges
            .iter()
            .map(|(a, b, _)| (a.clone(), b.clone()))
            .collect();
        got.sort();
        assert_eq!(
            got,
            vec![
                ("A".to_string(), "B".to_string()),
                ("B".to_string(), "C".to_string())
            ]
        );
        assert_eq!(mst.components, 1);
        assert!(mst.isolated.is_empty());
    }

    #[test]
    fn mst_degenerate_cases() {
        let names = labels(&["A", "B"]);
        let mut m = CoocMatrix::new(Level::L1, names, (2000, 2000));
        m.weights[1] = 0.5;
        m.weights[2] = 0.5;
        let mst = m.mst_hierarchy().unwrap();
        assert_eq!(mst.edges.len(), 1);

        // forced chain AB=1, BC=1, AC=0
        let mut m = CoocMatrix::new(Level::L1, labels(&["A", "B", "C"]), (2000, 2000));
        let n = 3;
        m.weights[1] = 0.5;
        m.weights[n] = 0.5;
        m.weights[n + 2] = 0.5;
        m.weights[2 * n + 1] = 0.5;
        let mst = m.mst_hierarchy().unwrap();
        let mut got: Vec<&str> = mst
            .edges
            .iter()
            .flat_map(|(a, b, _)| [a.as_str(), b.as_str()])
            .collect();
        got.sort();
        assert_eq!(got, vec!["A", "B", "B", "C"]);
    }

    #[test]
    fn isolated_labels_reported() {
        let names = labels(&["A", "B", "Z"]);
        let mut m = CoocMatrix::new(Level::L1, names, (2000, 2000));
        m.weights[1] = 0.5;
        m.weights[3] = 0.5;
        m.weights[8] = 1.0; // Z has only diagonal mass
        let mst = m.mst_hierarchy().unwrap();
        assert_eq!(mst.isolated, vec!["Z".to_string()]);
    }

    #[test]
    fn csv_export_has_schema_line() {
        let names = labels(&["A", "B"]);
        let mut m = CoocMatrix::new(Level::L1, names, (2000, 2000));
        m.add_article(&sa(Level::L1, vec![1, 1])).unwrap();
        let mut out = Vec::new();
        m.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("#schema: meshforge.matrix.v1\n"));
        assert!(text.contains("label,A,B"));
        let mut edges = Vec::new();
        m.write_edge_list(&mut edges).unwrap();
        let text = String::from_utf8(edges).unwrap();
        assert!(text.contains("A\tB\t1"));
    }

    proptest! {
        #[test]
        fn mass_is_conserved(articles in proptest::collection::vec(
            proptest::collection::vec(0u32..4, 6), 1..60)
        ) {
            let names = labels(&["A","B","C","D","E","F"]);
            let mut m = CoocMatrix::new(Level::L1, names, (2000, 2000));
            for counts in &articles {
                m.add_article(&sa(Level::L1, counts.clone())).unwrap();
            }
            let total = m.total_mass();
            prop_assert!((total - m.article_count as f64).abs() < 1e-9);
        }

        #[test]
        fn permutation_equivariance(
            articles in proptest::collection::vec(proptest::collection::vec(0u32..3, 5), 1..30),
            swap in (0usize..5, 0usize..5)
        ) {
            let names = labels(&["A","B","C","D","E"]);
            let mut m = CoocMatrix::new(Level::L1, names.clone(), (2000, 2000));
            for counts in &articles {
                m.add_article(&sa(Level::L1, counts.clone())).unwrap();
            }
            // permute categories by one transposition
            let (a, b) = swap;
            let mut perm: Vec<usize> = (0..5).collect();
            perm.swap(a, b);
            let mut pnames = names.clone();
            pnames.swap(a, b);
            let mut pm = CoocMatrix::new(Level::L1, pnames, (2000, 2000));
            for counts in &articles {
                let mut pc = vec![0u32; 5];
                for (i, &c) in counts.iter().enumerate() {
                    pc[perm.iter().position(|&p| p == i).unwrap()] = c;
                }
                pm.add_article(&sa(Level::L1, pc)).unwrap();
            }
            for i in 0..5 {
                for j in 0..5 {
                    let (pi, pj) = (perm.iter().position(|&p| p == i).unwrap(),
                                    perm.iter().position(|&p| p == j).unwrap());
                    prop_assert!((m.cell(i, j) - pm.cell(pi, pj)).abs() < 1e-12);
                }
            }
        }
    }
}
