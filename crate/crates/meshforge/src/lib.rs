//! meshforge maps hierarchically classified literature into knowledge networks.
//!
//! The pipeline ingests article records annotated with descriptor identifiers
//! from a quasi-hierarchical ontology (such as the NLM MeSH tree), projects
//! each article onto first-level branches and second-level headings, and
//! accumulates article-normalized co-occurrence matrices per time window.
//! On top of the matrices it computes:
//!
//! - modularity clusterings (seeded Louvain) and their year-over-year
//!   continuity via stable cliques and Jaccard distances,
//! - cross-cluster bridge scores, normalized bridge ranks, and
//!   emerging-bridge detection from rank trend regression,
//! - per-article categorical diversity, convergence fractions, team-size
//!   and journal disaggregation, and cubic trend fits with confidence bands.
//!
//! The `pipeline` module orchestrates all stages behind a declarative config
//! with content-addressed caching; `synthgen` produces seeded synthetic
//! corpora with planted ground truth for end-to-end validation.

pub mod bridges;
pub mod clusters;
pub mod cooccur;
pub mod corpus;
pub mod diversity;
pub mod error;
pub mod ontology;
pub mod pipeline;
pub mod synthgen;
pub mod trend;

pub use error::{Error, Result};
pub use ontology::{Level, OntologyTree, SaVector};
