//! Command-line surface for the fiber knowledge-base engine.
//!
//! Every subcommand is a thin wrapper over one library operation: load the
//! named KB files, run the operation, print one JSON document (or a text
//! summary with `--output text`). Exit codes partition failures: 0 success,
//! 1 validation or assertion failure, 2 parse failure, 3 missing
//! authorization, 4 divergence or numeric failure. Identical inputs and
//! flags produce byte-identical output; all randomness flows through the
//! seed flags.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fiberkb_core::bridge::{
    compose, discover_bridges, fuse_default, structure_preservation, FuseAuthorization,
};
use fiberkb_core::domain::DomainPath;
use fiberkb_core::engine::{KnowledgeBase, LoadOptions};
use fiberkb_core::error::Error;
use fiberkb_core::experiments::{
    run_experiment1, run_experiment2, run_experiment3, Experiment3Config, PHQ9_P001_KB,
};
use fiberkb_core::kb::parse_kb;
use fiberkb_core::neural::{fixed_point, EmbeddingConfig, EmbeddingStore, FixedPointConfig};
use fiberkb_core::phq9::{alert_propagation_check, score_assessment};
use fiberkb_core::reindex::inherited_query;
use fiberkb_core::store::TripleFilter;
use fiberkb_core::traverse::{transitive_closure, traverse_path, TraceStep};
use fiberkb_core::validate::validate;

#[derive(Parser)]
#[command(
    name = "fiberkb",
    version,
    about = "Domain-scoped concept graph engine",
    propagate_version = true
)]
struct Cli {
    /// Knowledge-base files, repeatable (or comma-separated via env).
    #[arg(long = "kb", global = true, env = "FIBERKB_KB", value_delimiter = ',')]
    kb: Vec<PathBuf>,

    /// Height bound for the domain universe.
    #[arg(long, global = true, env = "FIBERKB_H_MAX", default_value_t = 16)]
    h_max: usize,

    /// Admit cyclic transitive relations at load (they still fail validate).
    #[arg(long, global = true, env = "FIBERKB_LAX_CYCLES")]
    lax_cycles: bool,

    #[arg(long, global = true, env = "FIBERKB_OUTPUT", value_enum, default_value_t = Output::Json)]
    output: Output,

    /// Stream per-step trace records as JSON lines before the result.
    #[arg(long, global = true, env = "FIBERKB_TRACE")]
    trace: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Text,
}

#[derive(Args)]
struct SeededArgs {
    /// Seed for every random draw in this command.
    #[arg(long, env = "FIBERKB_SEED", default_value_t = 42)]
    seed: u64,

    /// Embedding dimension.
    #[arg(long, env = "FIBERKB_DIM", default_value_t = 16)]
    dim: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full structural checklist over the loaded knowledge base.
    Validate,

    /// Run one of the three bundled studies (1, 2, or 3).
    Experiment {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        number: u8,

        /// Seeds per condition (study 3).
        #[arg(long, default_value_t = 100)]
        seeds: usize,

        #[command(flatten)]
        seeded: SeededArgs,

        /// Convergence threshold (study 3).
        #[arg(long, env = "FIBERKB_EPSILON", default_value_t = 1e-6)]
        epsilon: f64,

        /// Sweep budget per run (study 3).
        #[arg(long, env = "FIBERKB_MAX_ITER", default_value_t = 400)]
        max_iter: usize,
    },

    /// Concepts reachable from one concept over one relation, with
    /// inheritance from more general domains.
    Query {
        concept: String,
        relation: String,
        domain: String,
    },

    /// Transitive closure of a relation from a start concept.
    Closure {
        concept: String,
        relation: String,
        domain: String,
    },

    /// Multi-step contextual traversal; each step is RELATION@DOMAIN.
    Traverse {
        concept: String,
        domain: String,
        /// Steps in order, e.g. --step is_a@Science@Physics.
        #[arg(long = "step", required = true)]
        steps: Vec<String>,
    },

    /// Cross-fiber bridge operations.
    #[command(subcommand)]
    Bridge(BridgeCommand),

    /// Register a common generalization above two bridged domains.
    Fuse {
        left: String,
        right: String,
        /// Name for the fused domain.
        name: String,
        /// Sign-off identity; fusing is refused without it.
        #[arg(long)]
        authorize: Option<String>,
    },

    /// Run embedding propagation to a fixed point over the loaded store.
    Neural {
        #[command(flatten)]
        seeded: SeededArgs,

        #[arg(long, env = "FIBERKB_EPSILON", default_value_t = 1e-6)]
        epsilon: f64,

        #[arg(long, env = "FIBERKB_MAX_ITER", default_value_t = 400)]
        max_iter: usize,

        /// Pull every contraction bound under this target before iterating.
        #[arg(long)]
        normalize: Option<f64>,

        /// Test hook: replace the rank-1 maps with dense random matrices
        /// forced to this spectral radius.
        #[arg(long)]
        dense_radius: Option<f64>,
    },

    /// Score a subject's screening corpus and audit alert containment.
    Phq9Score {
        subject: String,
    },
}

#[derive(Subcommand)]
enum BridgeCommand {
    /// Structure preservation rate of the declared bridge between two domains.
    Score { source: String, target: String },

    /// Compose the bridges source→mid and mid→target; report preservation
    /// and shrinkage.
    Compose {
        source: String,
        mid: String,
        target: String,
    },

    /// Propose bridges between two fibers from embedding similarity.
    Discover {
        source: String,
        target: String,

        /// Similarity threshold for proposals.
        #[arg(long, default_value_t = 0.8)]
        theta: f64,

        #[command(flatten)]
        seeded: SeededArgs,
    },
}

/// A failure with its exit code; message goes to stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Unauthorized => 3,
            Error::NonFiniteValue(_) | Error::MissingEmbeddings(_) => 4,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_kb(cli: &Cli) -> Result<KnowledgeBase, Failure> {
    let options = LoadOptions {
        h_max: cli.h_max,
        strict_cycles: !cli.lax_cycles,
    };
    if cli.kb.is_empty() {
        // The screening command falls back to its bundled corpus; everything
        // else needs input.
        if matches!(cli.command, Command::Phq9Score { .. }) {
            return KnowledgeBase::load(&[parse_kb(PHQ9_P001_KB)], &options).map_err(Into::into);
        }
        return Err(Failure::new(2, "no knowledge-base files given (use --kb)"));
    }
    let mut documents = Vec::new();
    for path in &cli.kb {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
        let doc = parse_kb(&text);
        if doc.has_errors() {
            let mut lines: Vec<String> = doc.errors().map(|d| d.to_string()).collect();
            lines.insert(0, format!("{} failed to parse:", path.display()));
            return Err(Failure::new(2, lines.join("\n")));
        }
        documents.push(doc);
    }
    KnowledgeBase::load(&documents, &options).map_err(Into::into)
}

fn parse_path(kb: &KnowledgeBase, s: &str) -> Result<DomainPath, Failure> {
    let raw = DomainPath::parse(s).map_err(|e| Failure::new(1, e.to_string()))?;
    Ok(kb.expand_path(&raw))
}

fn emit(cli: &Cli, value: &Value, text: impl FnOnce() -> Vec<String>) {
    match cli.output {
        Output::Json => println!("{}", serde_json::to_string_pretty(value).expect("serializable")),
        Output::Text => {
            for line in text() {
                println!("{line}");
            }
        }
    }
}

fn emit_trace(cli: &Cli, trace: &[TraceStep]) {
    if cli.trace {
        for step in trace {
            println!("{}", serde_json::to_string(step).expect("serializable"));
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Validate => {
            let kb = load_kb(&cli)?;
            let report = validate(&kb);
            emit(&cli, &serde_json::to_value(&report).expect("serializable"), || report.summary_lines());
            Ok(if report.passed() { 0 } else { 1 })
        }

        Command::Experiment {
            number,
            seeds,
            seeded,
            epsilon,
            max_iter,
        } => match number {
            1 => {
                let report = run_experiment1()?;
                emit(&cli, &serde_json::to_value(&report).expect("serializable"), || {
                    let mut lines = vec![format!("query domain: {}", report.query_domain)];
                    for row in &report.rows {
                        lines.push(format!(
                            "{}: is_a {}, contrasts_with {}",
                            row.method,
                            if row.is_a_inherited { "inherited" } else { "blocked" },
                            if row.contrasts_with_inherited { "inherited" } else { "blocked" },
                        ));
                    }
                    lines.push(format!("expected pattern: {}", verdict(report.pattern_ok)));
                    lines
                });
                Ok(if report.pattern_ok { 0 } else { 1 })
            }
            2 => {
                let report = run_experiment2()?;
                let ok =
                    report.ranges_ok && report.degradation_strict && report.shrinkage_strict;
                emit(&cli, &serde_json::to_value(&report).expect("serializable"), || {
                    vec![
                        format!("direct 1->2: {:.4}", report.spr_direct_12),
                        format!("direct 2->3: {:.4}", report.spr_direct_23),
                        format!("composed 1->3: {:.4}", report.spr_composed),
                        format!(
                            "domain shrinkage: {} -> {} (dropped: {})",
                            report.dom_size_12,
                            report.dom_size_composed,
                            report.dropped.join(", "),
                        ),
                        format!("expected pattern: {}", verdict(ok)),
                    ]
                });
                Ok(if ok { 0 } else { 1 })
            }
            3 => {
                let config = Experiment3Config {
                    seeds: *seeds,
                    dim: seeded.dim,
                    epsilon: *epsilon,
                    max_iterations: *max_iter,
                    base_seed: seeded.seed,
                    ..Default::default()
                };
                let report = run_experiment3(&config)?;
                let ok = report.normalized_always_converges && report.unconstrained_fails;
                emit(&cli, &serde_json::to_value(&report).expect("serializable"), || {
                    let mut lines = Vec::new();
                    for c in [
                        &report.unconstrained,
                        &report.rank_one_raw,
                        &report.rank_one_normalized,
                    ] {
                        lines.push(format!(
                            "{}: {}/{} converged",
                            c.condition, c.converged_seeds, c.total_seeds
                        ));
                    }
                    lines.push(format!("expected pattern: {}", verdict(ok)));
                    lines
                });
                Ok(if ok { 0 } else { 1 })
            }
            _ => unreachable!("clap range"),
        },

        Command::Query {
            concept,
            relation,
            domain,
        } => {
            let kb = load_kb(&cli)?;
            let at = parse_path(&kb, domain)?;
            let filter = TripleFilter::any().source(concept).relation(relation);
            let results = inherited_query(&kb.store, &kb.universe, &kb.typing, &at, &filter)
                .map_err(Failure::from)?;
            let scan = kb.store.query(&at, &filter).map_err(Failure::from)?;
            let mut targets: Vec<&str> = results.iter().map(|t| t.target.as_str()).collect();
            targets.sort_unstable();
            targets.dedup();
            let value = json!({
                "targets": targets,
                "results": results,
                "stats": { "candidates": scan.candidates },
            });
            emit(&cli, &value, || {
                let mut lines =
                    vec![format!("{concept} {relation} @ {at} -> {}", targets.join(", "))];
                lines.push(format!("candidates scanned: {}", scan.candidates));
                lines
            });
            Ok(0)
        }

        Command::Closure {
            concept,
            relation,
            domain,
        } => {
            let kb = load_kb(&cli)?;
            let at = parse_path(&kb, domain)?;
            let mut trace = Vec::new();
            let outcome = transitive_closure(
                &kb.store,
                &kb.universe,
                &kb.typing,
                concept,
                &at,
                relation,
                &kb.bridges,
                cli.trace.then_some(&mut trace),
            )
            .map_err(Failure::from)?;
            emit_trace(&cli, &trace);
            let value = json!({
                "closure": serde_json::to_value(&outcome).expect("serializable"),
                "stats": {
                    "expansions": outcome.expansions,
                    "edges_scanned": outcome.edges_scanned,
                },
            });
            emit(&cli, &value, || {
                let mut lines = vec![format!(
                    "{} nodes, {} expansions, {} edges scanned",
                    outcome.nodes.len(),
                    outcome.expansions,
                    outcome.edges_scanned
                )];
                for n in &outcome.nodes {
                    lines.push(format!(
                        "  {} [{}] hops {}{}",
                        n.concept,
                        n.domain,
                        n.hops,
                        if n.hypothesis { " (hypothesis)" } else { "" }
                    ));
                }
                lines
            });
            Ok(0)
        }

        Command::Traverse {
            concept,
            domain,
            steps,
        } => {
            let kb = load_kb(&cli)?;
            let start = parse_path(&kb, domain)?;
            let mut parsed = Vec::new();
            for s in steps {
                let Some((relation, d)) = s.split_once('@') else {
                    return Err(Failure::new(2, format!("step {s} is not RELATION@DOMAIN")));
                };
                parsed.push((relation.to_owned(), parse_path(&kb, d)?));
            }
            let mut trace = Vec::new();
            let contexts = traverse_path(
                &kb.store,
                &kb.universe,
                &kb.typing,
                concept,
                &start,
                &parsed,
                cli.trace.then_some(&mut trace),
            )
            .map_err(Failure::from)?;
            emit_trace(&cli, &trace);
            let listed: Vec<Value> = contexts
                .iter()
                .map(|(c, d)| json!({ "concept": c, "domain": d }))
                .collect();
            let value = json!({ "contexts": listed });
            emit(&cli, &value, || {
                contexts
                    .iter()
                    .map(|(c, d)| format!("{c} [{d}]"))
                    .collect()
            });
            Ok(0)
        }

        Command::Bridge(bridge) => run_bridge(&cli, bridge),

        Command::Fuse {
            left,
            right,
            name,
            authorize,
        } => {
            let kb = load_kb(&cli)?;
            let l = parse_path(&kb, left)?;
            let r = parse_path(&kb, right)?;
            let auth = authorize.as_ref().map(|who| FuseAuthorization {
                authorized_by: who.clone(),
            });
            let outcome =
                fuse_default(&kb.universe, &l, &r, name, auth.as_ref()).map_err(Failure::from)?;
            let value = json!({
                "fused_domain": outcome.fused_domain,
                "height": outcome.universe.height().ok(),
                "growth_ratio": outcome.growth_ratio,
                "growth_alert": outcome.growth_alert,
            });
            emit(&cli, &value, || {
                vec![format!(
                    "fused {l} with {r} into {} (growth ratio {:.2}{})",
                    outcome.fused_domain,
                    outcome.growth_ratio,
                    if outcome.growth_alert { ", growth alert" } else { "" }
                )]
            });
            Ok(0)
        }

        Command::Neural {
            seeded,
            epsilon,
            max_iter,
            normalize,
            dense_radius,
        } => {
            let kb = load_kb(&cli)?;
            let mut embeddings = EmbeddingStore::new(EmbeddingConfig {
                dim: seeded.dim,
                seed: seeded.seed,
                ..Default::default()
            })
            .map_err(Failure::from)?;
            embeddings.init_from_store(&kb.store);
            let mut normalization = None;
            if let Some(target) = normalize {
                normalization = Some(embeddings.spectral_normalize(*target).map_err(Failure::from)?);
            }
            let config = FixedPointConfig {
                epsilon: *epsilon,
                max_iterations: *max_iter,
                update_relations: false,
                ..Default::default()
            };
            let report = if let Some(radius) = dense_radius {
                let relations: Vec<String> = {
                    let mut rels: Vec<String> =
                        kb.store.all_triples().map(|t| t.relation.clone()).collect();
                    rels.sort();
                    rels.dedup();
                    rels
                };
                let rels: Vec<&str> = relations.iter().map(String::as_str).collect();
                let maps = fiberkb_core::neural::DenseMaps::random_with_radius(
                    &rels,
                    seeded.dim,
                    *radius,
                    seeded.seed,
                )
                .map_err(Failure::from)?;
                fiberkb_core::neural::fixed_point_dense(
                    &mut embeddings,
                    &kb.store,
                    &kb.universe,
                    &maps,
                    &config,
                )
                .map_err(Failure::from)?
            } else {
                fixed_point(&mut embeddings, &kb.store, &kb.universe, &config)
                    .map_err(Failure::from)?
            };
            let value = json!({
                "seed": seeded.seed,
                "normalization": normalization,
                "report": report,
            });
            emit(&cli, &value, || {
                vec![format!(
                    "{} after {} iterations (final delta {:.3e})",
                    if report.converged { "converged" } else { "did not converge" },
                    report.iterations,
                    report.final_delta
                )]
            });
            Ok(if report.converged { 0 } else { 4 })
        }

        Command::Phq9Score { subject } => {
            let mut kb = load_kb(&cli)?;
            let assessment = score_assessment(&mut kb, subject).map_err(Failure::from)?;
            let containment = alert_propagation_check(&kb).map_err(Failure::from)?;
            let value = json!({
                "assessment": assessment,
                "alert_containment": containment,
            });
            emit(&cli, &value, || {
                let mut lines = vec![
                    format!("subject: {}", assessment.subject),
                    format!(
                        "items: {}",
                        assessment
                            .item_scores
                            .iter()
                            .map(|s| format!("{s}"))
                            .collect::<Vec<_>>()
                            .join(" ")
                    ),
                    format!("total: {}", assessment.total),
                    format!("severity: {:?}", assessment.severity),
                ];
                match &assessment.alert {
                    Some(alert) => lines.push(format!(
                        "alert: {} ({:?})",
                        alert.concern, alert.level
                    )),
                    None => lines.push("alert: none".to_owned()),
                }
                lines.push(format!("alert containment: {}", verdict(containment.passed)));
                lines
            });
            Ok(if containment.passed { 0 } else { 1 })
        }
    }
}

fn run_bridge(cli: &Cli, command: &BridgeCommand) -> Result<u8, Failure> {
    let kb = load_kb(cli)?;
    match command {
        BridgeCommand::Score { source, target } => {
            let s = parse_path(&kb, source)?;
            let t = parse_path(&kb, target)?;
            let morphism = kb
                .bridges
                .morphism(&s, &t)
                .ok_or_else(|| Failure::new(1, format!("no bridge declared from {s} to {t}")))?;
            let spr =
                structure_preservation(morphism, &kb.store, &kb.typing).map_err(Failure::from)?;
            let value = json!({
                "source": s,
                "target": t,
                "mapped_concepts": morphism.mapping.len(),
                "preservation": spr,
            });
            emit(cli, &value, || {
                vec![format!("{s} -> {t}: preservation {spr:.4}")]
            });
            Ok(0)
        }

        BridgeCommand::Compose {
            source,
            mid,
            target,
        } => {
            let s = parse_path(&kb, source)?;
            let m = parse_path(&kb, mid)?;
            let t = parse_path(&kb, target)?;
            let left = kb
                .bridges
                .morphism(&s, &m)
                .ok_or_else(|| Failure::new(1, format!("no bridge declared from {s} to {m}")))?;
            let right = kb
                .bridges
                .morphism(&m, &t)
                .ok_or_else(|| Failure::new(1, format!("no bridge declared from {m} to {t}")))?;
            let (composed, shrinkage) = compose(left, right).map_err(Failure::from)?;
            let preservation = structure_preservation(&composed, &kb.store, &kb.typing).ok();
            let value = json!({
                "source": s,
                "target": t,
                "depth": composed.derivation_depth,
                "hypothesis": composed.is_hypothesis(),
                "mapping": composed.mapping,
                "shrinkage": shrinkage,
                "preservation": preservation,
            });
            emit(cli, &value, || {
                vec![
                    format!(
                        "{s} -> {t} via {m}: {} of {} concepts survive",
                        shrinkage.composed_size, shrinkage.left_size
                    ),
                    format!("dropped: {}", shrinkage.dropped.join(", ")),
                    match preservation {
                        Some(p) => format!("preservation {p:.4} (hypothesis, depth {})", composed.derivation_depth),
                        None => "preservation undefined (empty mapping)".to_owned(),
                    },
                ]
            });
            Ok(0)
        }

        BridgeCommand::Discover {
            source,
            target,
            theta,
            seeded,
        } => {
            let s = parse_path(&kb, source)?;
            let t = parse_path(&kb, target)?;
            let mut embeddings = EmbeddingStore::new(EmbeddingConfig {
                dim: seeded.dim,
                seed: seeded.seed,
                ..Default::default()
            })
            .map_err(Failure::from)?;
            embeddings.init_from_store(&kb.store);
            let proposals =
                discover_bridges(&embeddings, &kb.store, &s, &t, *theta).map_err(Failure::from)?;
            let value = json!({
                "source": s,
                "target": t,
                "theta": theta,
                "seed": seeded.seed,
                "proposals": proposals,
            });
            emit(cli, &value, || {
                if proposals.is_empty() {
                    vec!["no proposals above the threshold".to_owned()]
                } else {
                    proposals
                        .iter()
                        .map(|p| {
                            format!(
                                "{} ~ {} (similarity {:.4})",
                                p.source_concept, p.target_concept, p.similarity
                            )
                        })
                        .collect()
                }
            });
            Ok(0)
        }
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "held"
    } else {
        "violated"
    }
}
