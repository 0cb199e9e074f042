//! Moving triples along the domain order.
//!
//! Abstraction looks *up*: the more general counterpart of a triple is
//! whatever the ancestor fiber already asserts with the same content. It is a
//! lookup, not a rewrite; if the general level says nothing, abstraction is
//! undefined there. Concretization pushes *down*: a copy scoped to a more
//! specific domain, permitted only for relations the typing table marks
//! monotone, and stamped with inherited provenance so nothing downstream
//! mistakes it for an assertion.
//!
//! `inherited_query` is the operation everything user-facing leans on: the
//! fiber at a domain plus whatever its ancestors pass down. `galois_check`
//! verifies that the up and down movements stay adjoint on a loaded store.

use std::collections::BTreeMap;

use crate::domain::{DomainPath, DomainUniverse};
use crate::error::{Error, Result};
use crate::meta::TypingTable;
use crate::store::{FiberStore, Provenance, Triple, TripleFilter};

/// Order on triples induced by the domain order: same content, comparable
/// scope. Scope-incomparable or content-distinct triples are incomparable.
pub fn triple_leq(universe: &DomainUniverse, a: &Triple, b: &Triple) -> Result<bool> {
    Ok(a.content() == b.content() && universe.leq(&a.domain, &b.domain)?)
}

/// The more general counterpart of `triple` at `to`, if the fiber there
/// asserts one. `to` must sit at or above the triple's own domain.
pub fn abstraction(
    store: &FiberStore,
    universe: &DomainUniverse,
    triple: &Triple,
    to: &DomainPath,
) -> Result<Option<Triple>> {
    if !universe.leq(&triple.domain, to)? {
        return Err(Error::IncomparableDomains {
            a: triple.domain.clone(),
            b: to.clone(),
        });
    }
    if to == &triple.domain {
        return Ok(Some(triple.clone()));
    }
    Ok(store
        .fiber(to)
        .iter()
        .find(|t| t.content() == triple.content())
        .cloned())
}

/// A copy of `triple` scoped down to `to`, defined only when the relation is
/// monotone. `to` must sit at or below the triple's own domain, and the
/// typing table must be sealed first, so what counts as monotone cannot
/// change while inherited content is being materialized.
pub fn concretization(
    universe: &DomainUniverse,
    typing: &TypingTable,
    triple: &Triple,
    to: &DomainPath,
) -> Result<Option<Triple>> {
    if !typing.is_sealed() {
        return Err(Error::TypingNotSealed);
    }
    if !universe.leq(to, &triple.domain)? {
        return Err(Error::IncomparableDomains {
            a: triple.domain.clone(),
            b: to.clone(),
        });
    }
    if to == &triple.domain {
        return Ok(Some(triple.clone()));
    }
    if !typing.is_monotone(&triple.relation) {
        return Ok(None);
    }
    Ok(Some(Triple {
        domain: to.clone(),
        provenance: Provenance::Inherited {
            origin: triple.domain.clone(),
        },
        ..triple.clone()
    }))
}

/// The fiber at `domain` plus everything its ancestors pass down via monotone
/// relations. Direct triples shadow inherited ones with the same content;
/// among ancestors, the most specific origin wins. The walk consults one
/// fiber per strict ancestor, so its cost is bounded by the lattice height.
pub fn inherited_query(
    store: &FiberStore,
    universe: &DomainUniverse,
    typing: &TypingTable,
    domain: &DomainPath,
    filter: &TripleFilter,
) -> Result<Vec<Triple>> {
    let mut seen: BTreeMap<(String, String, String), usize> = BTreeMap::new();
    let mut out = Vec::new();
    for t in store.fiber(domain) {
        if filter.admits(t) {
            let key = (t.source.clone(), t.relation.clone(), t.target.clone());
            if !seen.contains_key(&key) {
                seen.insert(key, out.len());
                out.push(t.clone());
            }
        }
    }
    // Most specific ancestors first, so closer origins shadow farther ones.
    for ancestor in universe.ancestors(domain)? {
        for t in store.fiber(&ancestor) {
            if !filter.admits(t) {
                continue;
            }
            let key = (t.source.clone(), t.relation.clone(), t.target.clone());
            if seen.contains_key(&key) {
                continue;
            }
            if let Some(copy) = concretization(universe, typing, t, domain)? {
                seen.insert(key, out.len());
                out.push(copy);
            }
        }
    }
    Ok(out)
}

/// Result of the adjunction audit over a loaded store.
#[derive(Clone, Debug, serde::Serialize)]
pub struct GaloisReport {
    /// Cross-scope triple pairs where both movements were defined.
    pub pairs_checked: usize,
    /// Triples whose up-then-down round trip was defined.
    pub round_trips_checked: usize,
    pub adjunction_ok: bool,
    pub closure_ok: bool,
    pub witnesses: Vec<String>,
}

impl GaloisReport {
    pub fn ok(&self) -> bool {
        self.adjunction_ok && self.closure_ok
    }
}

/// Audits the adjunction on every applicable pair in the store: moving a
/// specific triple up relates it to a general one exactly when moving the
/// general one down relates it back. Also checks that the up-then-down round
/// trip behaves as a closure: it covers the original, preserves the triple
/// order, and going around twice adds nothing.
pub fn galois_check(
    store: &FiberStore,
    universe: &DomainUniverse,
    typing: &TypingTable,
) -> Result<GaloisReport> {
    let all: Vec<Triple> = store.all_triples().cloned().collect();
    let mut witnesses = Vec::new();
    let mut pairs_checked = 0;
    let mut round_trips_checked = 0;

    for child in &all {
        for parent in &all {
            if child.domain == parent.domain
                || !universe.leq(&child.domain, &parent.domain)?
            {
                continue;
            }
            let up = abstraction(store, universe, child, &parent.domain)?;
            let down = concretization(universe, typing, parent, &child.domain)?;
            let (Some(up), Some(down)) = (up, down) else {
                continue;
            };
            pairs_checked += 1;
            let lhs = triple_leq(universe, child, &down)?;
            let rhs = triple_leq(universe, &up, parent)?;
            if lhs != rhs {
                witnesses.push(format!(
                    "({} {} {} @ {}) vs ({} {} {} @ {}): downward comparison {lhs}, upward {rhs}",
                    child.source, child.relation, child.target, child.domain,
                    parent.source, parent.relation, parent.target, parent.domain,
                ));
            }
        }
    }
    let adjunction_ok = witnesses.is_empty();

    let mut closure_witnesses = Vec::new();
    for t in &all {
        for ancestor in universe.ancestors(&t.domain)? {
            let Some(up) = abstraction(store, universe, t, &ancestor)? else {
                continue;
            };
            let Some(round) = concretization(universe, typing, &up, &t.domain)? else {
                continue;
            };
            round_trips_checked += 1;
            if !triple_leq(universe, t, &round)? {
                closure_witnesses.push(format!(
                    "round trip of ({} {} {} @ {}) via {ancestor} does not cover the original",
                    t.source, t.relation, t.target, t.domain
                ));
            }
            // Idempotence: a second round trip through the same ancestor
            // reproduces the same triple content and scope.
            if let Some(up2) = abstraction(store, universe, &round, &ancestor)? {
                if let Some(round2) = concretization(universe, typing, &up2, &t.domain)? {
                    if round2.content() != round.content() || round2.domain != round.domain {
                        closure_witnesses.push(format!(
                            "second round trip of ({} {} {} @ {}) via {ancestor} moved",
                            t.source, t.relation, t.target, t.domain
                        ));
                    }
                }
            }
        }
    }
    let closure_ok = closure_witnesses.is_empty();
    witnesses.extend(closure_witnesses);

    Ok(GaloisReport {
        pairs_checked,
        round_trips_checked,
        adjunction_ok,
        closure_ok,
        witnesses,
    })
}
