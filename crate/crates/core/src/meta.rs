//! Tier separation: object-level content versus meta-level vocabulary that
//! *governs* object-level content.
//!
//! Some domains are reserved for talking about the engine's own vocabulary.
//! A statement like "requires is monotone", scoped to the `Logic` domain,
//! lives in the meta tier and governs object domains through a projection
//! map. The typing table records which domains are meta, where each projects,
//! and which property tokens each meta entry grants to a relation. Relation
//! typing is the union of every declaration anywhere, so a relation is
//! monotone as soon as one meta entry says so, and non-monotone by closed
//! default when nobody declared anything.
//!
//! The table seals once a session starts evaluating, so typing cannot shift
//! under live queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::domain::{DomainPath, DomainUniverse};
use crate::error::{Error, Result};

pub const PROP_MONOTONE: &str = "monotone";
pub const PROP_TRANSITIVE: &str = "transitive";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Object,
    Meta,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Object => "object",
            Tier::Meta => "meta",
        })
    }
}

/// How inheritance along the domain order treats a relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Monotone,
    NonMonotone,
}

impl fmt::Display for Monotonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Monotonicity::Monotone => "monotone",
            Monotonicity::NonMonotone => "non-monotone",
        })
    }
}

/// The session's typing table: meta-tier domains, their projections onto the
/// object tier, and the property tokens declared per (relation, meta domain).
///
/// Lookups never fail: an undeclared domain is object-tier, and an undeclared
/// relation carries no properties, so it is non-monotone and non-transitive.
/// That closed default is what makes the alert-propagation guarantee hold for
/// vocabulary nobody remembered to type.
#[derive(Clone, Debug, Default)]
pub struct TypingTable {
    /// Meta-tier domains and where each projects on the object tier.
    /// Absence means object tier.
    projections: BTreeMap<DomainPath, DomainPath>,
    /// Property tokens per (relation, declaring meta domain).
    properties: BTreeMap<(String, DomainPath), BTreeSet<String>>,
    /// Union of property tokens per relation, kept in step with `properties`
    /// so monotonicity lookups stay constant-time.
    by_relation: BTreeMap<String, BTreeSet<String>>,
    sealed: bool,
}

impl TypingTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Moves `domain` into the meta tier, projecting onto `scope`. The bounds
    /// stay shared between tiers, every other domain is meta or object, never
    /// both. Redeclaring with the same scope is a no-op.
    pub fn declare_meta_domain(&mut self, domain: DomainPath, scope: DomainPath) -> Result<()> {
        if self.sealed {
            return Err(Error::SessionSealed);
        }
        if matches!(domain, DomainPath::Bottom | DomainPath::Top) {
            return Err(Error::InvalidConfig(
                "the lattice bounds cannot move to the meta tier".into(),
            ));
        }
        if self.projections.contains_key(&scope) {
            return Err(Error::TierViolation {
                domain: scope,
                actual: Tier::Meta,
                expected: Tier::Object,
            });
        }
        match self.projections.get(&domain) {
            Some(existing) if *existing == scope => Ok(()),
            Some(existing) => Err(Error::InvalidConfig(format!(
                "meta domain {domain} already projects to {existing}, cannot re-project to {scope}"
            ))),
            None => {
                self.projections.insert(domain, scope);
                Ok(())
            }
        }
    }

    pub fn tier_of(&self, domain: &DomainPath) -> Tier {
        if self.projections.contains_key(domain) {
            Tier::Meta
        } else {
            Tier::Object
        }
    }

    /// Object-tier scope a meta domain governs. `Logic`-style vocabulary that
    /// governs everything projects to `⊤`.
    pub fn project(&self, domain: &DomainPath) -> Result<DomainPath> {
        self.projections
            .get(domain)
            .cloned()
            .ok_or_else(|| Error::NotMetaTier(domain.clone()))
    }

    /// Grants `property` to `relation`, declared from the meta domain
    /// `d_meta`. The declaring domain must already be in the meta tier.
    pub fn declare_meta(&mut self, relation: &str, property: &str, d_meta: &DomainPath) -> Result<()> {
        if self.sealed {
            return Err(Error::SessionSealed);
        }
        if self.tier_of(d_meta) != Tier::Meta {
            return Err(Error::NotMetaTier(d_meta.clone()));
        }
        self.properties
            .entry((relation.to_owned(), d_meta.clone()))
            .or_default()
            .insert(property.to_owned());
        self.by_relation
            .entry(relation.to_owned())
            .or_default()
            .insert(property.to_owned());
        Ok(())
    }

    /// Inheritance typing for a relation: monotone as soon as any meta entry
    /// declares it so, non-monotone otherwise.
    pub fn tau(&self, relation: &str) -> Monotonicity {
        if self.is_monotone(relation) {
            Monotonicity::Monotone
        } else {
            Monotonicity::NonMonotone
        }
    }

    pub fn is_monotone(&self, relation: &str) -> bool {
        self.has_property(relation, PROP_MONOTONE)
    }

    /// Closure may chain this relation through intermediate concepts.
    pub fn is_transitive(&self, relation: &str) -> bool {
        self.has_property(relation, PROP_TRANSITIVE)
    }

    pub fn has_property(&self, relation: &str, property: &str) -> bool {
        self.by_relation
            .get(relation)
            .is_some_and(|props| props.contains(property))
    }

    /// Property tokens granted to `relation` by entries whose projection
    /// covers `at`: an entry governs a domain exactly when that domain sits
    /// at or below the entry's scope, and overlapping grants union.
    pub fn properties_governing(
        &self,
        relation: &str,
        at: &DomainPath,
        universe: &DomainUniverse,
    ) -> Result<BTreeSet<String>> {
        let mut out = BTreeSet::new();
        for ((rel, d_meta), props) in &self.properties {
            if rel != relation {
                continue;
            }
            let scope = self.project(d_meta)?;
            if universe.leq(at, &scope)? {
                out.extend(props.iter().cloned());
            }
        }
        Ok(out)
    }

    /// Every (relation, meta domain, property) declaration, for reports.
    pub fn declarations(&self) -> impl Iterator<Item = (&str, &DomainPath, &str)> {
        self.properties.iter().flat_map(|((rel, d), props)| {
            props.iter().map(move |p| (rel.as_str(), d, p.as_str()))
        })
    }

    /// Meta entries that declare `property` on `relation`, as witnesses.
    pub fn entries_declaring(&self, relation: &str, property: &str) -> Vec<DomainPath> {
        self.properties
            .iter()
            .filter(|((rel, _), props)| rel == relation && props.contains(property))
            .map(|((_, d), _)| d.clone())
            .collect()
    }

    pub fn meta_domains(&self) -> impl Iterator<Item = (&DomainPath, &DomainPath)> {
        self.projections.iter()
    }

    pub fn relations(&self) -> impl Iterator<Item = &str> {
        self.by_relation.keys().map(String::as_str)
    }

    /// Freezes the table for the rest of the session.
    pub fn seal(&mut self) {
        self.sealed = true;
    }

    /// Reopens a sealed table, for staged loading before evaluation resumes.
    pub fn unseal(&mut self) {
        self.sealed = false;
    }

    pub fn is_sealed(&self) -> bool {
        self.sealed
    }

    pub fn declaration_count(&self) -> usize {
        self.properties.values().map(BTreeSet::len).sum()
    }

    pub fn meta_domain_count(&self) -> usize {
        self.projections.len()
    }
}
