//! Loading parsed knowledge-base documents into a live engine.
//!
//! `KnowledgeBase` bundles everything a reasoning session needs: the domain
//! universe, the sealed relation typing, the fiber store, the asserted
//! bridges, and the subject facts. `load` performs the whole front-to-back
//! construction with the declaration discipline the statement kinds imply:
//! domains and generalizations first, then the typing tier, then data.
//!
//! Aliases expand on the leading path segment, and later aliases may build
//! on earlier ones; expansion happens once, at load.

use std::collections::BTreeMap;

use crate::bridge::BridgeSet;
use crate::domain::{DomainPath, DomainUniverse, UniverseBuilder, DEFAULT_H_MAX};
use crate::error::{Error, Result};
use crate::kb::{parse_kb, Document, Statement};
use crate::meta::TypingTable;
use crate::store::{CycleMode, FactRecord, FiberStore, Triple};

/// Knobs for `KnowledgeBase::load`.
#[derive(Clone, Debug)]
pub struct LoadOptions {
    /// Height bound for the domain universe.
    pub h_max: usize,
    /// Strict mode refuses cyclic transitive relations at insert; lax mode
    /// admits them so repair tooling can look at the damage.
    pub strict_cycles: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            h_max: DEFAULT_H_MAX,
            strict_cycles: true,
        }
    }
}

/// A fully loaded knowledge base.
#[derive(Debug)]
pub struct KnowledgeBase {
    pub universe: DomainUniverse,
    pub typing: TypingTable,
    pub store: FiberStore,
    pub bridges: BridgeSet,
    pub aliases: BTreeMap<String, DomainPath>,
    /// Normalized token → original quoted spelling, merged across inputs.
    pub symbols: BTreeMap<String, String>,
}

impl KnowledgeBase {
    /// Builds a knowledge base from parsed documents. Statement order inside
    /// a document does not matter; declarations are gathered before data.
    pub fn load(documents: &[Document], options: &LoadOptions) -> Result<KnowledgeBase> {
        let statements: Vec<&Statement> =
            documents.iter().flat_map(|d| d.statements.iter()).collect();

        // Aliases first; each may lean on those declared before it.
        let mut aliases: BTreeMap<String, DomainPath> = BTreeMap::new();
        for s in &statements {
            if let Statement::Alias { name, path } = s {
                let expanded = expand_alias(path, &aliases);
                aliases.insert(name.clone(), expanded);
            }
        }
        let expand = |path: &DomainPath| expand_alias(path, &aliases);

        // The universe: declared domains, plus everything a delta or tier
        // statement names, so order declarations never dangle.
        let mut builder = UniverseBuilder::new().h_max(options.h_max);
        for s in &statements {
            match s {
                Statement::Domain { path } => builder = builder.domain(expand(path)),
                Statement::Delta { left, right, join } => {
                    builder = builder
                        .domain(expand(left))
                        .domain(expand(right))
                        .domain(expand(join))
                        .declare(expand(left), expand(right), expand(join));
                }
                Statement::TierMeta { domain, scope } => {
                    builder = builder.domain(expand(domain));
                    if scope.is_path() {
                        builder = builder.domain(expand(scope));
                    }
                }
                _ => {}
            }
        }
        let universe = builder.build();

        // The typing tier, sealed before any data needs it.
        let mut typing = TypingTable::new();
        for s in &statements {
            if let Statement::TierMeta { domain, scope } = s {
                typing.declare_meta_domain(expand(domain), expand(scope))?;
            }
        }
        for s in &statements {
            if let Statement::Meta {
                relation,
                property,
                domain,
            } = s
            {
                typing.declare_meta(relation, property, &expand(domain))?;
            }
        }
        typing.seal();

        // Data: triples, then bridges (whose endpoints must already exist),
        // then facts.
        let cycle_mode = if options.strict_cycles {
            CycleMode::Strict
        } else {
            CycleMode::Lax
        };
        let mut store = FiberStore::with_cycle_mode(cycle_mode);
        for s in &statements {
            if let Statement::Triple {
                relation,
                source,
                target,
                domain,
                conf,
            } = s
            {
                check_confidence(*conf, || format!("triple {relation}({source}, {target})"))?;
                let triple = Triple::asserted(source, relation, target, expand(domain))
                    .with_confidence(*conf);
                store.extend(triple, &universe, &typing)?;
            }
        }

        let mut bridges = BridgeSet::new();
        for s in &statements {
            if let Statement::Bridge {
                concept1,
                domain1,
                concept2,
                domain2,
            } = s
            {
                bridges.add_bridge(&store, concept1, &expand(domain1), concept2, &expand(domain2))?;
            }
        }

        for s in &statements {
            if let Statement::Fact {
                subject,
                token,
                domain,
                concept,
                conf,
                freq,
            } = s
            {
                check_confidence(*conf, || format!("fact {subject} {token}"))?;
                store.record_fact(
                    FactRecord {
                        subject: subject.clone(),
                        utterance: token.clone(),
                        target: concept.clone(),
                        frequency: *freq,
                        confidence: *conf,
                        domain: expand(domain),
                    },
                    &universe,
                    &typing,
                )?;
            }
        }

        let mut symbols = BTreeMap::new();
        for d in documents {
            for (token, original) in &d.symbols {
                symbols.entry(token.clone()).or_insert_with(|| original.clone());
            }
        }

        Ok(KnowledgeBase {
            universe,
            typing,
            store,
            bridges,
            aliases,
            symbols,
        })
    }

    /// Parses and loads a single text. Parse diagnostics of error severity
    /// reject the whole text, since a partially missing KB is worse than no
    /// KB during programmatic loads; callers who want salvage semantics can
    /// parse first and inspect the document themselves.
    pub fn from_text(text: &str, options: &LoadOptions) -> Result<KnowledgeBase> {
        let doc = parse_kb(text);
        if doc.has_errors() {
            let lines: Vec<String> = doc.errors().map(|d| d.to_string()).collect();
            return Err(Error::InvalidConfig(lines.join("; ")));
        }
        KnowledgeBase::load(&[doc], options)
    }

    /// Expands a caller-supplied path through the loaded alias table, for
    /// CLI arguments and query surfaces.
    pub fn expand_path(&self, path: &DomainPath) -> DomainPath {
        expand_alias(path, &self.aliases)
    }

    /// Facts scoped to one subject, in file order.
    pub fn facts_for(&self, subject: &str) -> Vec<&FactRecord> {
        self.store.facts().iter().filter(|f| f.subject == subject).collect()
    }
}

fn check_confidence(conf: f64, what: impl Fn() -> String) -> Result<()> {
    if !(0.0..=1.0).contains(&conf) {
        return Err(Error::InvalidConfig(format!(
            "confidence {conf} outside [0, 1] on {}",
            what()
        )));
    }
    Ok(())
}

/// Replaces a leading alias segment, if any. Bounds pass through untouched.
fn expand_alias(path: &DomainPath, aliases: &BTreeMap<String, DomainPath>) -> DomainPath {
    let DomainPath::Path(segments) = path else {
        return path.clone();
    };
    let Some(target) = aliases.get(&segments[0]) else {
        return path.clone();
    };
    match target {
        DomainPath::Path(lead) => {
            let mut out = lead.clone();
            out.extend(segments[1..].iter().cloned());
            DomainPath::Path(out)
        }
        bound => {
            if segments.len() == 1 {
                bound.clone()
            } else {
                path.clone()
            }
        }
    }
}
