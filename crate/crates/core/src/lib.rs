//! fiberkb-core: a knowledge store whose facts live in per-domain fibers over
//! a lattice of domain contexts.
//!
//! The pieces, bottom up:
//!
//! * [`domain`]: the path lattice of domain contexts, with declared
//!   generalizations, an enumerated implication, and the axiom validator.
//! * [`meta`]: tier separation and the relation typing table.
//! * [`store`]: per-domain triple fibers with prefix-scan queries.
//! * [`reindex`]: moving triples along the order, inherited queries, and the
//!   abstraction/concretization consistency check.
//! * [`bridge`]: partial concept morphisms across incomparable domains,
//!   structure preservation scoring, composition, fusion, discovery.
//! * [`traverse`]: context-set traversal, closure, cycle detection, tracing.
//! * [`neural`]: the contractive embedding substrate mirroring the store.
//! * [`kb`]: the text format, parser, and canonical serializer.
//! * [`engine`]: a loaded session tying the layers together.
//! * [`validate`]: whole-knowledge-base consistency checking.
//! * [`phq9`]: the depression-screening case study built on the engine.
//! * [`experiments`]: the three reproducible evaluation scenarios.

pub mod bridge;
pub mod domain;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod kb;
pub mod meta;
pub mod neural;
pub mod phq9;
pub mod reindex;
pub mod store;
pub mod traverse;
pub mod validate;

pub use error::{Error, Result};
