//! Embedding trees into host graphs under minimum/maximum degree conditions.
//!
//! The crate provides, at configurable scale:
//!
//! * the host-graph / tree / embedding data model and a validator
//!   ([`graph`], [`tree`]),
//! * generic embedding machinery: connected-frontier greedy embedding,
//!   Hall-theorem completions, BFS blockwise embedding and the star-heavy
//!   shortcut ([`embed`]),
//! * the locally-sparse branch: sparsity certification, blocker-set
//!   expansion and sparse embedding ([`sparse`]),
//! * filling procedures for almost-complete and almost-complete-bipartite
//!   subgraphs ([`fill`]),
//! * dense-subgraph detection, expansions and decomposition plus the leafy
//!   and no-dense-subgraph embeddings ([`dense`]),
//! * end-to-end pipelines, a brute-force oracle, instance generators and a
//!   finite conjecture scanner ([`pipeline`], [`oracle`], [`gen`], [`scan`]).
//!
//! All procedures are deterministic given their inputs (and seed, where one
//! is taken); every success is checkable with [`graph::validate_embedding`].

pub mod constants;
pub mod dense;
pub mod embed;
pub mod error;
pub mod fill;
pub mod gen;
pub mod graph;
pub mod num;
pub mod oracle;
pub mod pipeline;
pub mod scan;
pub mod sparse;
pub mod tree;

pub use constants::Constants;
pub use error::{Error, Result};
pub use graph::{Embedding, Graph, VertexSet};
pub use tree::Tree;
