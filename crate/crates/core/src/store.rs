//! Per-domain triple fibers.
//!
//! Every triple is scoped to exactly one domain; the store partitions triples
//! into fibers keyed by domain path. Queries address a domain and scan only
//! that domain's subtree (via a prefix-ordered index), which is where the
//! locality win over one flat pile of triples comes from. The store counts
//! candidate triples touched per query so that claim stays measurable.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};

use crate::domain::{DomainPath, DomainUniverse};
use crate::error::{Error, Result};
use crate::meta::{Tier, TypingTable};

/// Where a triple came from.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Stated directly in the knowledge base.
    Asserted,
    /// Copied down from an ancestor domain by a monotone relation.
    Inherited { origin: DomainPath },
    /// Produced by mapping across a derived bridge; never auto-asserted.
    BridgedHypothesis { depth: usize },
}

/// One domain-scoped edge.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Triple {
    pub source: String,
    pub relation: String,
    pub target: String,
    pub domain: DomainPath,
    pub confidence: f64,
    pub provenance: Provenance,
}

impl Triple {
    pub fn asserted(
        source: impl Into<String>,
        relation: impl Into<String>,
        target: impl Into<String>,
        domain: DomainPath,
    ) -> Self {
        Triple {
            source: source.into(),
            relation: relation.into(),
            target: target.into(),
            domain,
            confidence: 1.0,
            provenance: Provenance::Asserted,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    /// The (source, relation, target) content, ignoring scope and provenance.
    pub fn content(&self) -> (&str, &str, &str) {
        (&self.source, &self.relation, &self.target)
    }
}

/// A recorded utterance-level observation backing screening items: the
/// subject expressed something, some number of times, at some confidence.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct FactRecord {
    pub subject: String,
    pub utterance: String,
    pub target: String,
    pub frequency: u32,
    pub confidence: f64,
    pub domain: DomainPath,
}

/// Index key for prefix scans: the display path with a trailing separator, so
/// `Clinical@S` does not match under `Clinical@Screening`'s subtree.
fn scan_key(d: &DomainPath) -> String {
    format!("{d}@")
}

/// Whether insertion refuses edges that close a cycle in a relation declared
/// transitive. Strict is the default; lax is a load-time opt-out for KBs that
/// are being repaired.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CycleMode {
    #[default]
    Strict,
    Lax,
}

/// The fiber store: triples partitioned by domain.
#[derive(Clone, Debug, Default)]
pub struct FiberStore {
    /// Fibers in prefix-scan order. Keys carry a trailing `@` so range scans
    /// stop at segment boundaries.
    fibers: BTreeMap<String, Fiber>,
    facts: Vec<FactRecord>,
    triple_count: usize,
    cycle_mode: CycleMode,
    /// Candidates touched by the most recent query, for locality reporting.
    last_candidates: Cell<usize>,
}

#[derive(Clone, Debug, Default)]
struct Fiber {
    domain: Option<DomainPath>,
    triples: Vec<Triple>,
    /// Exact-match index for closure inner loops.
    by_source_relation: BTreeMap<(String, String), Vec<usize>>,
}

impl Fiber {
    fn push(&mut self, t: Triple) {
        let key = (t.source.clone(), t.relation.clone());
        self.by_source_relation.entry(key).or_default().push(self.triples.len());
        self.triples.push(t);
    }

    /// Exact duplicate test, all fields included, via the out-edge index.
    fn contains(&self, t: &Triple) -> bool {
        self.by_source_relation
            .get(&(t.source.clone(), t.relation.clone()))
            .is_some_and(|idxs| idxs.iter().any(|&i| &self.triples[i] == t))
    }
}

/// A query result plus the number of stored triples the scan had to look at.
#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub triples: Vec<Triple>,
    pub candidates: usize,
}

impl FiberStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_cycle_mode(mode: CycleMode) -> Self {
        FiberStore {
            cycle_mode: mode,
            ..Default::default()
        }
    }

    pub fn cycle_mode(&self) -> CycleMode {
        self.cycle_mode
    }

    pub fn len(&self) -> usize {
        self.triple_count
    }

    pub fn is_empty(&self) -> bool {
        self.triple_count == 0
    }

    pub fn fiber_count(&self) -> usize {
        self.fibers.len()
    }

    /// Inserts a triple into its domain's fiber. The domain must be a
    /// registered object-tier path; re-inserting an identical triple is a
    /// no-op; and when the relation is declared transitive, insertion that
    /// would close a relation cycle inside the fiber is refused (in strict
    /// mode, which is the default).
    pub fn extend(
        &mut self,
        triple: Triple,
        universe: &DomainUniverse,
        typing: &TypingTable,
    ) -> Result<()> {
        if !triple.domain.is_path() {
            return Err(Error::MalformedPath {
                path: triple.domain.to_string(),
                reason: "triples must be scoped to a concrete domain, not a bound".into(),
            });
        }
        if !universe.is_registered(&triple.domain) {
            return Err(Error::UnregisteredDomain(triple.domain.clone()));
        }
        if typing.tier_of(&triple.domain) == Tier::Meta {
            return Err(Error::TierViolation {
                domain: triple.domain.clone(),
                actual: Tier::Meta,
                expected: Tier::Object,
            });
        }
        if let Some(fiber) = self.fibers.get(&scan_key(&triple.domain)) {
            if fiber.contains(&triple) {
                return Ok(());
            }
        }
        if self.cycle_mode == CycleMode::Strict && typing.is_transitive(&triple.relation) {
            if let Some(cycle) = self.would_close_cycle(&triple) {
                return Err(Error::CyclicRequires {
                    relation: triple.relation.clone(),
                    domain: triple.domain.clone(),
                    cycle,
                });
            }
        }
        self.fibers
            .entry(scan_key(&triple.domain))
            .or_insert_with(|| Fiber {
                domain: Some(triple.domain.clone()),
                ..Default::default()
            })
            .push(triple);
        self.triple_count += 1;
        Ok(())
    }

    /// Walks the new edge's relation within the fiber: does target reach back
    /// to source? Returns the offending concept cycle if so.
    fn would_close_cycle(&self, t: &Triple) -> Option<Vec<String>> {
        let fiber = self.fibers.get(&scan_key(&t.domain))?;
        let mut stack = vec![vec![t.target.clone()]];
        let mut seen = BTreeSet::new();
        while let Some(path) = stack.pop() {
            let here = path.last().unwrap().clone();
            if here == t.source {
                let mut cycle = vec![t.source.clone()];
                cycle.extend(path);
                return Some(cycle);
            }
            if !seen.insert(here.clone()) {
                continue;
            }
            if let Some(idxs) = fiber.by_source_relation.get(&(here, t.relation.clone())) {
                for &i in idxs {
                    let mut next = path.clone();
                    next.push(fiber.triples[i].target.clone());
                    stack.push(next);
                }
            }
        }
        None
    }

    pub fn record_fact(&mut self, fact: FactRecord, universe: &DomainUniverse, typing: &TypingTable) -> Result<()> {
        let triple = Triple {
            source: fact.subject.clone(),
            relation: fact.utterance.clone(),
            target: fact.target.clone(),
            domain: fact.domain.clone(),
            confidence: fact.confidence,
            provenance: Provenance::Asserted,
        };
        self.extend(triple, universe, typing)?;
        self.facts.push(fact);
        Ok(())
    }

    pub fn facts(&self) -> &[FactRecord] {
        &self.facts
    }

    pub fn facts_in(&self, domain: &DomainPath) -> Vec<&FactRecord> {
        self.facts.iter().filter(|f| &f.domain == domain).collect()
    }

    /// The triples asserted exactly at `domain` (no subtree, no inheritance).
    pub fn fiber(&self, domain: &DomainPath) -> &[Triple] {
        self.fibers
            .get(&scan_key(domain))
            .map_or(&[], |f| f.triples.as_slice())
    }

    /// All triples in `domain`'s subtree: the fiber at `domain` plus every
    /// fiber scoped strictly below it by prefix. A range scan over the
    /// prefix-ordered fiber index; nothing outside the subtree is touched.
    pub fn query(&self, domain: &DomainPath, filter: &TripleFilter) -> Result<ScanOutcome> {
        let mut triples = Vec::new();
        let mut candidates = 0;
        match domain {
            DomainPath::Bottom => {}
            DomainPath::Top => {
                for fiber in self.fibers.values() {
                    candidates += fiber.triples.len();
                    triples.extend(fiber.triples.iter().filter(|t| filter.admits(t)).cloned());
                }
            }
            DomainPath::Path(_) => {
                let lo = scan_key(domain);
                // '@' + 1 == 'A'; the half-open range [d@, dA) covers exactly
                // the keys beginning with "d@".
                let hi = format!("{domain}A");
                for (_, fiber) in self.fibers.range(lo..hi) {
                    candidates += fiber.triples.len();
                    triples.extend(fiber.triples.iter().filter(|t| filter.admits(t)).cloned());
                }
            }
        }
        self.last_candidates.set(candidates);
        Ok(ScanOutcome { triples, candidates })
    }

    /// Candidate count from the most recent `query`, for instrumentation.
    pub fn last_candidates(&self) -> usize {
        self.last_candidates.get()
    }

    /// Exact-index lookup: out-edges of `source` under `relation`, within the
    /// single fiber at `domain`. The fast path for closure inner loops; the
    /// scan route must agree with it, and a test holds the two together.
    pub fn out_edges(&self, domain: &DomainPath, source: &str, relation: &str) -> Vec<&Triple> {
        match self.fibers.get(&scan_key(domain)) {
            Some(fiber) => fiber
                .by_source_relation
                .get(&(source.to_owned(), relation.to_owned()))
                .map(|idxs| idxs.iter().map(|&i| &fiber.triples[i]).collect())
                .unwrap_or_default(),
            None => Vec::new(),
        }
    }

    /// Every domain that owns a non-empty fiber, in path order.
    pub fn populated_domains(&self) -> Vec<DomainPath> {
        self.fibers
            .values()
            .filter(|f| !f.triples.is_empty())
            .filter_map(|f| f.domain.clone())
            .collect()
    }

    /// All triples in insertion-independent (domain, position) order.
    pub fn all_triples(&self) -> impl Iterator<Item = &Triple> {
        self.fibers.values().flat_map(|f| f.triples.iter())
    }

    /// Concepts mentioned in the fiber at `domain`.
    pub fn concepts_in(&self, domain: &DomainPath) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in self.fiber(domain) {
            out.insert(t.source.clone());
            out.insert(t.target.clone());
        }
        out
    }
}

/// Field filters applied during a scan. Empty filter admits everything.
#[derive(Clone, Debug, Default)]
pub struct TripleFilter {
    pub source: Option<String>,
    pub relation: Option<String>,
    pub target: Option<String>,
}

impl TripleFilter {
    pub fn any() -> Self {
        Self::default()
    }

    pub fn source(mut self, s: impl Into<String>) -> Self {
        self.source = Some(s.into());
        self
    }

    pub fn relation(mut self, r: impl Into<String>) -> Self {
        self.relation = Some(r.into());
        self
    }

    pub fn target(mut self, t: impl Into<String>) -> Self {
        self.target = Some(t.into());
        self
    }

    pub fn admits(&self, t: &Triple) -> bool {
        self.source.as_deref().is_none_or(|s| s == t.source)
            && self.relation.as_deref().is_none_or(|r| r == t.relation)
            && self.target.as_deref().is_none_or(|x| x == t.target)
    }
}
