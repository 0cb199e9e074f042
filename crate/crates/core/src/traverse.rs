//! Traversal over concepts in context.
//!
//! A traversal state is a set of (concept, domain) pairs, not a set of bare
//! concepts: the same name can mean different things in different fibers, so
//! every hop must say where it landed. Steps are arrows from one pair to a
//! set of pairs; `bind` lifts them over whole sets, and the unit/bind pair
//! obeys the usual identity and associativity laws, which is what makes
//! multi-step traversal composable without bookkeeping leaks.
//!
//! `transitive_closure` is the workhorse: breadth-first reachability along a
//! relation, drawing on direct edges, inherited edges from ancestor fibers,
//! and asserted bridges, with every crossing recorded so provenance survives
//! into the output. Steps can be traced as structured records per layer:
//! order logic (L1), fiber scans (L2), inheritance (L3), bridges (L4),
//! embeddings (L5).

use std::collections::{BTreeSet, VecDeque};

use crate::bridge::BridgeSet;
use crate::domain::{DomainPath, DomainUniverse};
use crate::error::{Error, Result};
use crate::meta::TypingTable;
use crate::reindex::inherited_query;
use crate::store::{FiberStore, Provenance, TripleFilter};

/// One traversal position: a concept read inside a particular domain.
pub type Context = (String, DomainPath);

/// The traversal state.
pub type ContextSet = BTreeSet<Context>;

/// Singleton state.
pub fn unit(concept: &str, domain: &DomainPath) -> ContextSet {
    BTreeSet::from([(concept.to_owned(), domain.clone())])
}

/// Applies an arrow to every pair in the set and unions the results.
pub fn bind(
    set: &ContextSet,
    arrow: impl Fn(&str, &DomainPath) -> Result<ContextSet>,
) -> Result<ContextSet> {
    let mut out = ContextSet::new();
    for (c, d) in set {
        out.extend(arrow(c, d)?);
    }
    Ok(out)
}

/// Composition of arrows: run `f`, then `g` from everywhere `f` landed.
pub fn kleisli_compose<'a>(
    f: impl Fn(&str, &DomainPath) -> Result<ContextSet> + 'a,
    g: impl Fn(&str, &DomainPath) -> Result<ContextSet> + 'a,
) -> impl Fn(&str, &DomainPath) -> Result<ContextSet> + 'a {
    move |c, d| bind(&f(c, d)?, &g)
}

/// The single-relation step arrow at a fixed domain. From any position on
/// concept `c` it follows every `relation` edge visible at `domain`, direct
/// or inherited, and lands on (target, origin): the domain of the supporting
/// triple, so an inherited hop surfaces where its evidence actually lives.
///
/// The arrow reads only its own domain; where the previous step landed does
/// not move the lens. That is what lets a path prescribe its domains up
/// front and keeps the composition laws exact.
pub fn kleisli_step<'a>(
    store: &'a FiberStore,
    universe: &'a DomainUniverse,
    typing: &'a TypingTable,
    relation: &'a str,
    domain: DomainPath,
) -> impl Fn(&str, &DomainPath) -> Result<ContextSet> + 'a {
    move |concept, _incoming| {
        let filter = TripleFilter::any().source(concept).relation(relation);
        let mut out = ContextSet::new();
        for t in inherited_query(store, universe, typing, &domain, &filter)? {
            let origin = match &t.provenance {
                Provenance::Inherited { origin } => origin.clone(),
                _ => domain.clone(),
            };
            out.insert((t.target, origin));
        }
        Ok(out)
    }
}

/// Folds fixed-domain step arrows over a start pair, optionally tracing each
/// hop. The start context sits at `start_domain`; each step then reads at
/// its own declared domain.
pub fn traverse_path(
    store: &FiberStore,
    universe: &DomainUniverse,
    typing: &TypingTable,
    start: &str,
    start_domain: &DomainPath,
    steps: &[(String, DomainPath)],
    mut trace: Option<&mut Vec<TraceStep>>,
) -> Result<ContextSet> {
    let mut state = unit(start, start_domain);
    for (relation, domain) in steps {
        let arrow = kleisli_step(store, universe, typing, relation, domain.clone());
        let before = state.clone();
        state = bind(&state, arrow)?;
        if let Some(sink) = trace.as_deref_mut() {
            sink.push(TraceStep {
                layer: Layer::Fibers,
                operation: format!("step:{relation}@{domain}"),
                input: render_set(&before),
                outputs: state.iter().map(render_context).collect(),
                provenance: "direct+inherited".into(),
            });
        }
    }
    Ok(state)
}

/// How a closure node was reached.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepKind {
    Start,
    Direct,
    Inherited { origin: DomainPath },
    Bridged { depth: usize },
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ClosureNode {
    pub concept: String,
    pub domain: DomainPath,
    pub hops: usize,
    /// True once any bridge crossing sits on the path that reached this node.
    pub hypothesis: bool,
    pub via: StepKind,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ClosureOutcome {
    pub nodes: Vec<ClosureNode>,
    /// Frontier pops the breadth-first loop performed.
    pub expansions: usize,
    /// Triples inspected across all fiber and inheritance scans.
    pub edges_scanned: usize,
}

impl ClosureOutcome {
    pub fn concepts(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.concept.as_str()).collect()
    }

    pub fn contains(&self, concept: &str, domain: &DomainPath) -> bool {
        self.nodes
            .iter()
            .any(|n| n.concept == concept && &n.domain == domain)
    }
}

/// Breadth-first reachability along one relation.
///
/// From each frontier pair, three edge sources feed the next frontier:
///
/// 1. direct edges in the pair's own fiber;
/// 2. edges inherited from ancestors (monotone relations only), kept only
///    when the landing concept is already part of the local fiber's
///    discourse, since inheritance specializes statements rather than
///    importing foreign vocabulary;
/// 3. asserted bridges out of the pair's domain, which cross into the
///    bridged domain and mark everything downstream as hypothesis.
///
/// When the relation is declared transitive, the starting fiber must be
/// acyclic in it; a cycle is reported as an error with its witness path.
/// Composed bridges (depth above 1) cannot enter a [`BridgeSet`], so nothing
/// here ever follows one.
#[allow(clippy::too_many_arguments)]
pub fn transitive_closure(
    store: &FiberStore,
    universe: &DomainUniverse,
    typing: &TypingTable,
    start: &str,
    domain: &DomainPath,
    relation: &str,
    bridges: &BridgeSet,
    mut trace: Option<&mut Vec<TraceStep>>,
) -> Result<ClosureOutcome> {
    if typing.is_transitive(relation) {
        if let Some(cycle) = cycle_check(store, domain, relation) {
            return Err(Error::CyclicRequires {
                relation: relation.to_owned(),
                domain: domain.clone(),
                cycle,
            });
        }
    }

    let mut nodes = vec![ClosureNode {
        concept: start.to_owned(),
        domain: domain.clone(),
        hops: 0,
        hypothesis: false,
        via: StepKind::Start,
    }];
    let mut visited: BTreeSet<Context> = BTreeSet::from([(start.to_owned(), domain.clone())]);
    let mut queue: VecDeque<(String, DomainPath, usize, bool)> =
        VecDeque::from([(start.to_owned(), domain.clone(), 0, false)]);
    let mut expansions = 0usize;
    let mut edges_scanned = 0usize;

    while let Some((concept, here, hops, hypothesis)) = queue.pop_front() {
        expansions += 1;
        // Direct and inherited edges, via the same lookup queries use.
        let filter = TripleFilter::any().source(&concept).relation(relation);
        let mut direct_hits = Vec::new();
        let mut inherited_hits = Vec::new();
        let local_concepts = store.concepts_in(&here);
        for t in inherited_query(store, universe, typing, &here, &filter)? {
            edges_scanned += 1;
            match &t.provenance {
                Provenance::Inherited { origin } => {
                    if local_concepts.contains(&t.target) {
                        inherited_hits.push((t.target.clone(), origin.clone()));
                    }
                }
                _ => direct_hits.push(t.target.clone()),
            }
        }
        direct_hits.sort();
        inherited_hits.sort();

        let mut emitted: Vec<String> = Vec::new();
        for target in direct_hits {
            let key = (target.clone(), here.clone());
            if visited.insert(key) {
                emitted.push(render_context(&(target.clone(), here.clone())));
                nodes.push(ClosureNode {
                    concept: target.clone(),
                    domain: here.clone(),
                    hops: hops + 1,
                    hypothesis,
                    via: StepKind::Direct,
                });
                queue.push_back((target, here.clone(), hops + 1, hypothesis));
            }
        }
        for (target, origin) in inherited_hits {
            let key = (target.clone(), here.clone());
            if visited.insert(key) {
                emitted.push(render_context(&(target.clone(), here.clone())));
                nodes.push(ClosureNode {
                    concept: target.clone(),
                    domain: here.clone(),
                    hops: hops + 1,
                    hypothesis,
                    via: StepKind::Inherited { origin },
                });
                queue.push_back((target, here.clone(), hops + 1, hypothesis));
            }
        }

        let mut bridged: Vec<(String, DomainPath, usize)> = Vec::new();
        for bridge in bridges.morphisms() {
            if bridge.source_domain != here || bridge.is_hypothesis() {
                continue;
            }
            if let Some(image) = bridge.apply(&concept) {
                bridged.push((
                    image.to_owned(),
                    bridge.target_domain.clone(),
                    bridge.derivation_depth,
                ));
            }
        }
        bridged.sort();
        for (image, there, depth) in bridged {
            let key = (image.clone(), there.clone());
            if visited.insert(key) {
                emitted.push(render_context(&(image.clone(), there.clone())));
                nodes.push(ClosureNode {
                    concept: image.clone(),
                    domain: there.clone(),
                    hops: hops + 1,
                    hypothesis: true,
                    via: StepKind::Bridged { depth },
                });
                queue.push_back((image, there, hops + 1, true));
            }
        }

        if let Some(sink) = trace.as_deref_mut() {
            if !emitted.is_empty() {
                sink.push(TraceStep {
                    layer: Layer::Fibers,
                    operation: format!("closure:{relation}"),
                    input: render_context(&(concept, here)),
                    outputs: emitted,
                    provenance: if hypothesis { "hypothesis".into() } else { "grounded".into() },
                });
            }
        }
    }

    if let Some(sink) = trace.as_deref_mut() {
        sink.push(TraceStep {
            layer: Layer::Fibers,
            operation: format!("closure-summary:{relation}"),
            input: render_context(&(start.to_owned(), domain.clone())),
            outputs: vec![
                format!("nodes:{}", nodes.len()),
                format!("expansions:{expansions}"),
                format!("edges-scanned:{edges_scanned}"),
            ],
            provenance: "summary".into(),
        });
    }

    Ok(ClosureOutcome {
        nodes,
        expansions,
        edges_scanned,
    })
}

/// Looks for a cycle of `relation` edges inside one fiber. Returns the first
/// witness found in deterministic order, as a concept path that closes on
/// itself.
pub fn cycle_check(store: &FiberStore, domain: &DomainPath, relation: &str) -> Option<Vec<String>> {
    let fiber = store.fiber(domain);
    let mut sources: Vec<&str> = fiber
        .iter()
        .filter(|t| t.relation == relation)
        .map(|t| t.source.as_str())
        .collect();
    sources.sort();
    sources.dedup();

    // Iterative DFS with an explicit path, three-color style.
    let mut done: BTreeSet<&str> = BTreeSet::new();
    for &root in &sources {
        if done.contains(root) {
            continue;
        }
        let mut path: Vec<&str> = Vec::new();
        let mut on_path: BTreeSet<&str> = BTreeSet::new();
        let mut stack: Vec<(&str, bool)> = vec![(root, false)];
        while let Some((node, leaving)) = stack.pop() {
            if leaving {
                path.pop();
                on_path.remove(node);
                done.insert(node);
                continue;
            }
            if on_path.contains(node) {
                let start = path.iter().position(|&x| x == node).unwrap();
                let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(node.to_owned());
                return Some(cycle);
            }
            if done.contains(node) {
                continue;
            }
            path.push(node);
            on_path.insert(node);
            stack.push((node, true));
            let mut targets: Vec<&str> = fiber
                .iter()
                .filter(|t| t.relation == relation && t.source == node)
                .map(|t| t.target.as_str())
                .collect();
            targets.sort();
            for t in targets.into_iter().rev() {
                stack.push((t, false));
            }
        }
    }
    None
}

/// Which architectural layer produced a trace record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Layer {
    #[serde(rename = "L1")]
    Order,
    #[serde(rename = "L2")]
    Fibers,
    #[serde(rename = "L3")]
    Reindexing,
    #[serde(rename = "L4")]
    Bridges,
    #[serde(rename = "L5")]
    Embeddings,
}

/// One structured trace record; the CLI emits these as JSON lines.
#[derive(Clone, Debug, serde::Serialize)]
pub struct TraceStep {
    pub layer: Layer,
    pub operation: String,
    pub input: String,
    pub outputs: Vec<String>,
    pub provenance: String,
}

fn render_context((c, d): &Context) -> String {
    format!("{c} [{d}]")
}

fn render_set(set: &ContextSet) -> String {
    let parts: Vec<String> = set.iter().map(render_context).collect();
    format!("{{{}}}", parts.join(", "))
}
