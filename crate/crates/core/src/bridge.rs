//! Bridges: partial concept mappings between incomparable domains.
//!
//! A bridge never moves facts by itself. Crossing one during traversal yields
//! hypotheses, tagged as such; composing bridges yields narrower bridges with
//! a recorded derivation depth; and the only way a bridge becomes order
//! structure is an explicitly authorized fuse, which registers a fresh common
//! generalization above the two domains.
//!
//! `structure_preservation` measures how much of the source domain's edge
//! structure survives the mapping, which is the score everything else ranks
//! bridges by.

use std::collections::BTreeMap;

use crate::domain::{DomainPath, DomainUniverse, DEFAULT_GROWTH_ALERT};
use crate::error::{Error, Result};
use crate::meta::TypingTable;
use crate::neural::{cosine, EmbeddingStore};
use crate::store::FiberStore;

/// A partial mapping of concepts from one domain's fiber into another's.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PartialMorphism {
    pub source_domain: DomainPath,
    pub target_domain: DomainPath,
    pub mapping: BTreeMap<String, String>,
    /// 1 for declared bridges; composition adds one per step.
    pub derivation_depth: usize,
    /// Last structure-preservation score computed for this morphism, if any.
    pub spr_cache: Option<f64>,
}

impl PartialMorphism {
    pub fn declared(
        source_domain: DomainPath,
        target_domain: DomainPath,
        mapping: BTreeMap<String, String>,
    ) -> Self {
        PartialMorphism {
            source_domain,
            target_domain,
            mapping,
            derivation_depth: 1,
            spr_cache: None,
        }
    }

    /// Concepts the mapping is defined on.
    pub fn domain_of_definition(&self) -> impl Iterator<Item = &str> {
        self.mapping.keys().map(String::as_str)
    }

    pub fn apply(&self, concept: &str) -> Option<&str> {
        self.mapping.get(concept).map(String::as_str)
    }

    /// Anything beyond depth 1 is derived, not declared, and its products
    /// stay hypotheses until someone validates them by hand.
    pub fn is_hypothesis(&self) -> bool {
        self.derivation_depth > 1
    }

    /// Scores the morphism and remembers the result in `spr_cache`.
    pub fn score(&mut self, store: &FiberStore, typing: &TypingTable) -> Result<f64> {
        let v = structure_preservation(self, store, typing)?;
        self.spr_cache = Some(v);
        Ok(v)
    }
}

/// The asserted bridges of a knowledge base, one merged morphism per ordered
/// domain pair.
///
/// Declared single-pair bridges accumulate into the pair's morphism, always
/// at depth 1. Derived morphisms are refused at the door: a composition is a
/// hypothesis and stays outside the asserted set until someone re-declares
/// its pairs explicitly.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct BridgeSet {
    morphisms: BTreeMap<(DomainPath, DomainPath), PartialMorphism>,
}

impl BridgeSet {
    pub fn new() -> Self {
        BridgeSet::default()
    }

    /// Asserts one concept correspondence. Both endpoints must already occur
    /// in their fibers, and the two domains must differ. Re-bridging a source
    /// concept replaces its image, keeping the mapping a function.
    pub fn add_bridge(
        &mut self,
        store: &FiberStore,
        c1: &str,
        d1: &DomainPath,
        c2: &str,
        d2: &DomainPath,
    ) -> Result<&PartialMorphism> {
        if d1 == d2 {
            return Err(Error::SelfBridge(d1.clone()));
        }
        if !store.concepts_in(d1).contains(c1) {
            return Err(Error::UnknownConcept {
                concept: c1.to_owned(),
                domain: d1.clone(),
            });
        }
        if !store.concepts_in(d2).contains(c2) {
            return Err(Error::UnknownConcept {
                concept: c2.to_owned(),
                domain: d2.clone(),
            });
        }
        let key = (d1.clone(), d2.clone());
        let entry = self.morphisms.entry(key).or_insert_with(|| {
            PartialMorphism::declared(d1.clone(), d2.clone(), BTreeMap::new())
        });
        entry.mapping.insert(c1.to_owned(), c2.to_owned());
        entry.spr_cache = None;
        Ok(entry)
    }

    /// Accepts a whole morphism (say, collapsed discovery proposals) into the
    /// asserted set. Hypotheses are refused: only depth-1 morphisms may be
    /// asserted, which is what keeps composition products out of the store.
    pub fn adopt(&mut self, m: PartialMorphism) -> Result<()> {
        if m.is_hypothesis() {
            return Err(Error::HypothesisNotAssertable(m.derivation_depth));
        }
        if m.source_domain == m.target_domain {
            return Err(Error::SelfBridge(m.source_domain));
        }
        let key = (m.source_domain.clone(), m.target_domain.clone());
        match self.morphisms.get_mut(&key) {
            Some(existing) => {
                existing.mapping.extend(m.mapping);
                existing.spr_cache = None;
            }
            None => {
                self.morphisms.insert(key, m);
            }
        }
        Ok(())
    }

    pub fn morphism(&self, d1: &DomainPath, d2: &DomainPath) -> Option<&PartialMorphism> {
        self.morphisms.get(&(d1.clone(), d2.clone()))
    }

    pub fn morphisms(&self) -> impl Iterator<Item = &PartialMorphism> {
        self.morphisms.values()
    }

    pub fn len(&self) -> usize {
        self.morphisms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.morphisms.is_empty()
    }

    /// Total number of concept correspondences across all morphisms.
    pub fn pair_count(&self) -> usize {
        self.morphisms.values().map(|m| m.mapping.len()).sum()
    }
}

/// How much a composition narrowed the mapping.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ShrinkageReport {
    pub left_size: usize,
    pub right_size: usize,
    pub composed_size: usize,
    /// Concepts the relay loses: defined on the left, but their images fall
    /// outside the right mapping, so their neighborhoods arrive incomplete.
    pub dropped: Vec<String>,
}

/// Composes two bridges. The left's target domain must be the right's source
/// domain; the composed mapping is defined exactly where the relay works. A
/// fully shrunk (empty) composition is still returned: it only turns into an
/// error when something tries to score or traverse it.
pub fn compose(
    left: &PartialMorphism,
    right: &PartialMorphism,
) -> Result<(PartialMorphism, ShrinkageReport)> {
    if left.target_domain != right.source_domain {
        return Err(Error::DomainMismatch {
            expected: left.target_domain.clone(),
            found: right.source_domain.clone(),
        });
    }
    let mut mapping = BTreeMap::new();
    let mut dropped = Vec::new();
    for (c, mid) in &left.mapping {
        match right.mapping.get(mid) {
            Some(end) => {
                mapping.insert(c.clone(), end.clone());
            }
            None => dropped.push(c.clone()),
        }
    }
    let report = ShrinkageReport {
        left_size: left.mapping.len(),
        right_size: right.mapping.len(),
        composed_size: mapping.len(),
        dropped,
    };
    let composed = PartialMorphism {
        source_domain: left.source_domain.clone(),
        target_domain: right.target_domain.clone(),
        mapping,
        derivation_depth: left.derivation_depth.max(right.derivation_depth) + 1,
        spr_cache: None,
    };
    Ok((composed, report))
}

/// Fraction of mapped edge structure that survives the bridge.
///
/// For each concept the mapping is defined on, look at its out-edges inside
/// the source fiber whose targets are also mapped; the concept's score is the
/// fraction of those edges with a counterpart edge between the images in the
/// target fiber, where a counterpart may use any relation with the same
/// monotonicity class. Concepts with nothing mapped to check score 1: an edge
/// the bridge never claimed to carry cannot count against it. The total is
/// the mean over mapped concepts.
pub fn structure_preservation(
    morphism: &PartialMorphism,
    store: &FiberStore,
    typing: &TypingTable,
) -> Result<f64> {
    if morphism.mapping.is_empty() {
        return Err(Error::EmptyDomainOfDefinition);
    }
    let source_fiber = store.fiber(&morphism.source_domain);
    let target_fiber = store.fiber(&morphism.target_domain);
    let mut concept_scores = Vec::with_capacity(morphism.mapping.len());
    for (c, image) in &morphism.mapping {
        let mut out_edges = 0usize;
        let mut preserved = 0usize;
        for edge in source_fiber.iter().filter(|t| &t.source == c) {
            out_edges += 1;
            // An edge to a concept outside the mapping is structure the
            // analogy cannot carry; it counts against the score.
            let Some(target_image) = morphism.mapping.get(&edge.target) else {
                continue;
            };
            let class = typing.tau(&edge.relation);
            let survives = target_fiber.iter().any(|t| {
                &t.source == image
                    && &t.target == target_image
                    && typing.tau(&t.relation) == class
            });
            if survives {
                preserved += 1;
            }
        }
        concept_scores.push(if out_edges == 0 {
            1.0
        } else {
            preserved as f64 / out_edges as f64
        });
    }
    Ok(concept_scores.iter().sum::<f64>() / concept_scores.len() as f64)
}

/// Proof that a human signed off on turning a bridge into order structure.
#[derive(Clone, Debug, serde::Serialize)]
pub struct FuseAuthorization {
    pub authorized_by: String,
}

/// Outcome of a fuse: the grown universe plus growth bookkeeping.
#[derive(Debug)]
pub struct FuseOutcome {
    pub universe: DomainUniverse,
    pub fused_domain: DomainPath,
    pub growth_ratio: f64,
    /// Set when the universe has grown past the alert multiple of its
    /// original size. An alert, not an error: the fuse still happened.
    pub growth_alert: bool,
}

/// Registers a fresh common generalization above two bridged domains.
///
/// Requires explicit authorization, distinct endpoints, and headroom under
/// the height bound. The returned universe supersedes the old one (its
/// version is bumped); the caller decides when to swap it in.
pub fn fuse(
    universe: &DomainUniverse,
    left: &DomainPath,
    right: &DomainPath,
    name: &str,
    authorization: Option<&FuseAuthorization>,
    growth_alert_multiple: f64,
) -> Result<FuseOutcome> {
    if authorization.is_none() {
        return Err(Error::Unauthorized);
    }
    if left == right {
        return Err(Error::SelfBridge(left.clone()));
    }
    let height = universe.height()?;
    if height >= universe.h_max() {
        return Err(Error::HeightBoundReached {
            height,
            h_max: universe.h_max(),
        });
    }
    let fused_universe = universe.fused(name, left, right)?;
    let ratio = fused_universe.growth_ratio();
    Ok(FuseOutcome {
        fused_domain: DomainPath::parse(name)?,
        growth_ratio: ratio,
        growth_alert: ratio > growth_alert_multiple,
        universe: fused_universe,
    })
}

/// Convenience wrapper using the default alert multiple.
pub fn fuse_default(
    universe: &DomainUniverse,
    left: &DomainPath,
    right: &DomainPath,
    name: &str,
    authorization: Option<&FuseAuthorization>,
) -> Result<FuseOutcome> {
    fuse(universe, left, right, name, authorization, DEFAULT_GROWTH_ALERT)
}

/// One suggested concept correspondence, scored by embedding similarity.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct BridgeProposal {
    pub source_concept: String,
    pub target_concept: String,
    pub similarity: f64,
}

/// Scans all concept pairs across two fibers and proposes the ones whose
/// domain-conditioned embeddings align above `threshold`, best first. Both
/// fibers' concepts must already be embedded; nothing is asserted, the caller
/// decides what to accept.
pub fn discover_bridges(
    embeddings: &EmbeddingStore,
    store: &FiberStore,
    source_domain: &DomainPath,
    target_domain: &DomainPath,
    threshold: f64,
) -> Result<Vec<BridgeProposal>> {
    let mut sources = Vec::new();
    for c in store.concepts_in(source_domain) {
        let v = embeddings.embed_concept(&c, source_domain)?;
        sources.push((c, v));
    }
    let mut targets = Vec::new();
    for c in store.concepts_in(target_domain) {
        let v = embeddings.embed_concept(&c, target_domain)?;
        targets.push((c, v));
    }
    let mut proposals = Vec::new();
    for (c1, v1) in &sources {
        for (c2, v2) in &targets {
            let similarity = cosine(v1, v2);
            if similarity > threshold {
                proposals.push(BridgeProposal {
                    source_concept: c1.clone(),
                    target_concept: c2.clone(),
                    similarity,
                });
            }
        }
    }
    proposals.sort_by(|a, b| {
        b.similarity
            .partial_cmp(&a.similarity)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.source_concept.cmp(&b.source_concept))
            .then_with(|| a.target_concept.cmp(&b.target_concept))
    });
    Ok(proposals)
}

/// Collapses proposals into a declared-shape morphism, keeping the best
/// target per source concept.
pub fn proposals_to_morphism(
    proposals: &[BridgeProposal],
    source_domain: DomainPath,
    target_domain: DomainPath,
) -> Result<PartialMorphism> {
    let mut mapping = BTreeMap::new();
    for p in proposals {
        // Proposals arrive best-first, so the first win per source stands.
        mapping
            .entry(p.source_concept.clone())
            .or_insert_with(|| p.target_concept.clone());
    }
    if mapping.is_empty() {
        return Err(Error::EmptyDomainOfDefinition);
    }
    Ok(PartialMorphism::declared(source_domain, target_domain, mapping))
}
