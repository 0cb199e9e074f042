//! Crate-wide error type.
//!
//! Every fallible operation in the engine returns [`Result`]. Variants carry
//! enough context (domain, concept, witness) to be actionable without a
//! debugger; the CLI maps them onto its exit-code partition.

use crate::domain::DomainPath;
use crate::meta::Tier;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain `{0}` is not registered in the universe")]
    UnregisteredDomain(DomainPath),

    #[error("declared order contains a cycle through `{a}` and `{b}`")]
    CyclicOrder { a: DomainPath, b: DomainPath },

    #[error("generalization declaration rejected: {0}")]
    DeltaInconsistent(String),

    #[error("domain `{domain}` belongs to the {actual} tier, expected {expected}")]
    TierViolation {
        domain: DomainPath,
        actual: Tier,
        expected: Tier,
    },

    #[error("`{0}` is not a meta-tier domain")]
    NotMetaTier(DomainPath),

    #[error("typing table is sealed for this session")]
    SessionSealed,

    #[error("typing table must be sealed before inherited evaluation")]
    TypingNotSealed,

    #[error("no populated fiber at `{0}`")]
    MissingFiber(DomainPath),

    #[error("relation `{relation}` is declared transitive but fiber `{domain}` contains the cycle {cycle:?}")]
    CyclicRequires {
        relation: String,
        domain: DomainPath,
        cycle: Vec<String>,
    },

    #[error("domains `{a}` and `{b}` are not comparable in the universe order")]
    IncomparableDomains { a: DomainPath, b: DomainPath },

    #[error("concept `{concept}` does not occur in fiber `{domain}`")]
    UnknownConcept { concept: String, domain: DomainPath },

    #[error("bridge endpoints must lie in distinct domains (got `{0}` twice)")]
    SelfBridge(DomainPath),

    #[error("morphism domains do not line up: expected `{expected}`, found `{found}`")]
    DomainMismatch {
        expected: DomainPath,
        found: DomainPath,
    },

    #[error("morphism has an empty domain of definition")]
    EmptyDomainOfDefinition,

    #[error("derived bridge at depth {0} is a hypothesis and cannot be asserted")]
    HypothesisNotAssertable(usize),

    #[error("universe height {height} has reached the bound {h_max}; fuse refused")]
    HeightBoundReached { height: usize, h_max: usize },

    #[error("fuse requires an authorization token")]
    Unauthorized,

    #[error("no embedding stored for {0}")]
    MissingEmbeddings(String),

    #[error("embedding dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value encountered in {0}; iteration aborted")]
    NonFiniteValue(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed domain path `{path}`: {reason}")]
    MalformedPath { path: String, reason: String },
}
