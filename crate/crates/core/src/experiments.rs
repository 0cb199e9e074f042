//! The three bundled studies, each exercising one layer of the engine.
//!
//! The first contrasts untyped inheritance with typed reindexing on a small
//! four-level lattice. The second measures how structure preservation
//! degrades when cross-fiber bridges compose. The third probes fixed-point
//! convergence of the neural substrate under three edge-map constructions.
//! Each runner loads its bundled fixture, computes the reported quantities,
//! and states in the report whether the expected pattern held, leaving exit
//! decisions to the caller.

use serde::Serialize;

use crate::bridge::{compose, structure_preservation, PartialMorphism};
use crate::domain::{DomainPath, DomainUniverse};
use crate::engine::{KnowledgeBase, LoadOptions};
use crate::error::{Error, Result};
use crate::neural::{
    fixed_point, fixed_point_dense, ConvergenceReport, DenseMaps, EmbeddingConfig,
    EmbeddingStore, FixedPointConfig,
};
use crate::reindex::inherited_query;
use crate::store::{FiberStore, Provenance, Triple, TripleFilter};

pub const EXPERIMENT1_KB: &str = include_str!("../fixtures/experiment1.kb");
pub const EXPERIMENT2_KB: &str = include_str!("../fixtures/experiment2.kb");
pub const EXPERIMENT3_KB: &str = include_str!("../fixtures/experiment3.kb");
pub const PHQ9_P001_KB: &str = include_str!("../fixtures/phq9_p001.kb");

fn path(s: &str) -> DomainPath {
    DomainPath::parse(s).expect("fixture path")
}

/// Inheritance that ignores relation typing: the fiber plus every ancestor
/// triple re-scoped downward, the way an untyped message pass would move
/// them. The baseline the first study contrasts against.
pub fn untyped_inherited(
    store: &FiberStore,
    universe: &DomainUniverse,
    domain: &DomainPath,
    filter: &TripleFilter,
) -> Result<Vec<Triple>> {
    let mut out: Vec<Triple> = store
        .fiber(domain)
        .iter()
        .filter(|t| filter.admits(t))
        .cloned()
        .collect();
    for ancestor in universe.ancestors(domain)? {
        for t in store.fiber(&ancestor) {
            if !filter.admits(t) {
                continue;
            }
            if out.iter().any(|have| have.content() == t.content()) {
                continue;
            }
            out.push(Triple {
                domain: domain.clone(),
                provenance: Provenance::Inherited {
                    origin: t.domain.clone(),
                },
                ..t.clone()
            });
        }
    }
    Ok(out)
}

/// One row of the inheritance table: did each edge reach the query domain?
#[derive(Clone, Debug, Serialize)]
pub struct InheritanceRow {
    pub method: String,
    pub is_a_inherited: bool,
    pub contrasts_with_inherited: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Experiment1Report {
    pub query_domain: DomainPath,
    pub rows: Vec<InheritanceRow>,
    /// The expected pattern: the untyped baseline inherits both edges, the
    /// typed discipline inherits the monotone one only.
    pub pattern_ok: bool,
}

pub fn run_experiment1() -> Result<Experiment1Report> {
    let kb = KnowledgeBase::from_text(EXPERIMENT1_KB, &LoadOptions::default())?;
    let quantum = path("Science@Physics@Quantum");

    let finds = |triples: &[Triple], relation: &str| -> bool {
        triples.iter().any(|t| t.relation == relation)
    };

    let untyped = untyped_inherited(&kb.store, &kb.universe, &quantum, &TripleFilter::any())?;
    let typed = inherited_query(
        &kb.store,
        &kb.universe,
        &kb.typing,
        &quantum,
        &TripleFilter::any(),
    )?;

    let rows = vec![
        InheritanceRow {
            method: "untyped propagation".to_owned(),
            is_a_inherited: finds(&untyped, "is_a"),
            contrasts_with_inherited: finds(&untyped, "contrasts_with"),
        },
        InheritanceRow {
            method: "typed reindexing".to_owned(),
            is_a_inherited: finds(&typed, "is_a"),
            contrasts_with_inherited: finds(&typed, "contrasts_with"),
        },
    ];
    let pattern_ok = rows[0].is_a_inherited
        && rows[0].contrasts_with_inherited
        && rows[1].is_a_inherited
        && !rows[1].contrasts_with_inherited;

    Ok(Experiment1Report {
        query_domain: quantum,
        rows,
        pattern_ok,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Experiment2Report {
    pub spr_direct_12: f64,
    pub spr_direct_23: f64,
    pub spr_composed: f64,
    pub dom_size_12: usize,
    pub dom_size_23: usize,
    pub dom_size_composed: usize,
    /// Concepts the composition cannot carry: their images have no onward
    /// mapping, so their neighborhoods arrive incomplete.
    pub dropped: Vec<String>,
    /// Direct rates inside their published bands and the composed rate
    /// inside its own.
    pub ranges_ok: bool,
    /// Composed rate strictly below both direct rates.
    pub degradation_strict: bool,
    /// Composition lost at least one concept from the left domain.
    pub shrinkage_strict: bool,
}

pub fn run_experiment2() -> Result<Experiment2Report> {
    let kb = KnowledgeBase::from_text(EXPERIMENT2_KB, &LoadOptions::default())?;
    let ml = path("CS@ML");
    let neuro = path("Biology@Neuro");
    let social = path("Sociology@Networks");

    let phi12 = kb
        .bridges
        .morphism(&ml, &neuro)
        .ok_or_else(|| Error::MissingFiber(ml.clone()))?;
    let phi23 = kb
        .bridges
        .morphism(&neuro, &social)
        .ok_or_else(|| Error::MissingFiber(neuro.clone()))?;
    let (composed, shrinkage) = compose(phi12, phi23)?;

    let spr = |m: &PartialMorphism| structure_preservation(m, &kb.store, &kb.typing);
    let spr_direct_12 = spr(phi12)?;
    let spr_direct_23 = spr(phi23)?;
    let spr_composed = spr(&composed)?;

    let ranges_ok = (0.75..=0.85).contains(&spr_direct_12)
        && (0.55..=0.70).contains(&spr_direct_23)
        && (0.30..=0.50).contains(&spr_composed);
    let degradation_strict = spr_composed < spr_direct_12.min(spr_direct_23);
    let shrinkage_strict = shrinkage.composed_size < shrinkage.left_size;

    Ok(Experiment2Report {
        spr_direct_12,
        spr_direct_23,
        spr_composed,
        dom_size_12: shrinkage.left_size,
        dom_size_23: shrinkage.right_size,
        dom_size_composed: shrinkage.composed_size,
        dropped: shrinkage.dropped,
        ranges_ok,
        degradation_strict,
        shrinkage_strict,
    })
}

/// Knobs for the convergence study.
#[derive(Clone, Debug)]
pub struct Experiment3Config {
    pub seeds: usize,
    pub dim: usize,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub base_seed: u64,
    /// Spectral radius forced onto the unconstrained dense maps.
    pub dense_radius: f64,
    /// Contraction target enforced in the normalized condition.
    pub spectral_target: f64,
    /// Rescale applied to relation vectors in both rank-1 conditions before
    /// any norm control. Initialization samples coordinates uniformly on
    /// (-0.5, 0.5); multiplying by 2*sqrt(3) restores unit variance, so the
    /// raw contraction bounds land on both sides of one instead of clustering
    /// just above it.
    pub raw_scale: f64,
}

impl Default for Experiment3Config {
    fn default() -> Self {
        Experiment3Config {
            seeds: 100,
            dim: 16,
            epsilon: 1e-6,
            max_iterations: 400,
            base_seed: 42,
            dense_radius: 1.5,
            spectral_target: 0.95,
            raw_scale: 2.0 * 3.0_f64.sqrt(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub final_delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    pub converged_seeds: usize,
    pub total_seeds: usize,
    pub outcomes: Vec<SeedOutcome>,
}

impl ConditionReport {
    fn tally(condition: &str, outcomes: Vec<SeedOutcome>) -> Self {
        ConditionReport {
            condition: condition.to_owned(),
            converged_seeds: outcomes.iter().filter(|o| o.converged).count(),
            total_seeds: outcomes.len(),
            outcomes,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Experiment3Report {
    pub unconstrained: ConditionReport,
    pub rank_one_raw: ConditionReport,
    pub rank_one_normalized: ConditionReport,
    /// The normalized condition converged on every seed.
    pub normalized_always_converges: bool,
    /// The unconstrained condition failed on at least one seed.
    pub unconstrained_fails: bool,
}

fn outcome_of(seed: u64, report: &ConvergenceReport) -> SeedOutcome {
    SeedOutcome {
        seed,
        converged: report.converged,
        iterations: report.iterations,
        final_delta: report.final_delta,
    }
}

pub fn run_experiment3(config: &Experiment3Config) -> Result<Experiment3Report> {
    let kb = KnowledgeBase::from_text(EXPERIMENT3_KB, &LoadOptions::default())?;
    let relations: Vec<String> = {
        let mut rels: Vec<String> = kb
            .store
            .all_triples()
            .map(|t| t.relation.clone())
            .collect();
        rels.sort();
        rels.dedup();
        rels
    };
    let fp = FixedPointConfig {
        epsilon: config.epsilon,
        max_iterations: config.max_iterations,
        update_relations: false,
        ..Default::default()
    };

    let fresh = |seed: u64| -> Result<EmbeddingStore> {
        let mut e = EmbeddingStore::new(EmbeddingConfig {
            dim: config.dim,
            seed,
            ..Default::default()
        })?;
        e.init_from_store(&kb.store);
        Ok(e)
    };

    let mut unconstrained = Vec::with_capacity(config.seeds);
    let mut raw = Vec::with_capacity(config.seeds);
    let mut normalized = Vec::with_capacity(config.seeds);
    for i in 0..config.seeds {
        let seed = config.base_seed.wrapping_add(i as u64);

        // Unconstrained: dense random maps forced to an expanding radius.
        let mut e = fresh(seed)?;
        let rels: Vec<&str> = relations.iter().map(String::as_str).collect();
        let maps = DenseMaps::random_with_radius(&rels, config.dim, config.dense_radius, seed)?;
        let report = fixed_point_dense(&mut e, &kb.store, &kb.universe, &maps, &fp)?;
        unconstrained.push(outcome_of(seed, &report));

        // Rank-1 maps at unit-variance scale, no norm control.
        let mut e = fresh(seed)?;
        e.scale_relations(config.raw_scale)?;
        let report = fixed_point(&mut e, &kb.store, &kb.universe, &fp)?;
        raw.push(outcome_of(seed, &report));

        // Same construction with every contraction bound pulled under the
        // target.
        let mut e = fresh(seed)?;
        e.scale_relations(config.raw_scale)?;
        e.spectral_normalize(config.spectral_target)?;
        let report = fixed_point(&mut e, &kb.store, &kb.universe, &fp)?;
        normalized.push(outcome_of(seed, &report));
    }

    let unconstrained = ConditionReport::tally("unconstrained dense", unconstrained);
    let rank_one_raw = ConditionReport::tally("rank-1 raw", raw);
    let rank_one_normalized = ConditionReport::tally("rank-1 normalized", normalized);
    let normalized_always_converges =
        rank_one_normalized.converged_seeds == rank_one_normalized.total_seeds;
    let unconstrained_fails = unconstrained.converged_seeds < unconstrained.total_seeds;

    Ok(Experiment3Report {
        unconstrained,
        rank_one_raw,
        rank_one_normalized,
        normalized_always_converges,
        unconstrained_fails,
    })
}
