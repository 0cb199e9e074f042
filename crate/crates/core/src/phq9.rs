//! PHQ-9 depression screening on top of the engine's public operations.
//!
//! Nine items, each backed by a clinical concept; subject facts map
//! utterance tokens to those concepts with a frequency (0 to 3) and a
//! confidence. An item scores the confidence-weighted frequency of its
//! evidence, capped at the instrument's per-item maximum of 3, and the
//! severity bands are the standard published ones (closed on the left).
//!
//! Item 9 is special: positive evidence activates an alert pathway that
//! bypasses scoring entirely, recorded as a `conflict_with` edge in the
//! screening fiber. The alert must stay in that fiber; `alert_propagation_check`
//! verifies both that the general psychology view inherits no alert edge and
//! that nothing in the typing table would let one propagate.

use crate::domain::DomainPath;
use crate::engine::KnowledgeBase;
use crate::error::{Error, Result};
use crate::meta::{Monotonicity, PROP_MONOTONE};
use crate::reindex::inherited_query;
use crate::store::{FactRecord, Triple, TripleFilter};

/// Clinical concept behind each PHQ-9 item, in item order 1 through 9.
pub const ITEM_CONCEPTS: [&str; 9] = [
    "Anhedonia",
    "DepressedMood",
    "SleepDisturbance",
    "Fatigue",
    "AppetiteChange",
    "Worthlessness",
    "ConcentrationDifficulty",
    "PsychomotorChange",
    "SuicidalIdeation",
];

/// The relation the alert pathway asserts through.
pub const ALERT_RELATION: &str = "conflict_with";

/// Per-item score ceiling from the instrument's frequency scale.
pub const ITEM_CAP: f64 = 3.0;

/// The screening fiber and its general parent.
pub fn screening_domain() -> DomainPath {
    DomainPath::parse("Psychology@PHQ9").expect("constant path")
}

pub fn general_domain() -> DomainPath {
    DomainPath::parse("Psychology").expect("constant path")
}

/// Standard severity bands, closed on the left.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Minimal,
    Mild,
    Moderate,
    ModeratelySevere,
    Severe,
}

pub fn severity_of(total: f64) -> Severity {
    if total < 5.0 {
        Severity::Minimal
    } else if total < 10.0 {
        Severity::Mild
    } else if total < 15.0 {
        Severity::Moderate
    } else if total < 20.0 {
        Severity::ModeratelySevere
    } else {
        Severity::Severe
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlertLevel {
    Moderate,
    High,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Alert {
    pub concern: String,
    pub level: AlertLevel,
}

/// One scored screening.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Phq9Assessment {
    pub subject: String,
    pub item_scores: [f64; 9],
    pub total: f64,
    pub severity: Severity,
    pub alert: Option<Alert>,
}

/// Confidence-weighted item scores over the given facts, capped per item.
/// Pure arithmetic; domain scoping happens in the caller.
pub fn weighted_item_scores(facts: &[&FactRecord]) -> [f64; 9] {
    let mut scores = [0.0f64; 9];
    for fact in facts {
        if let Some(i) = ITEM_CONCEPTS.iter().position(|c| *c == fact.target) {
            scores[i] += f64::from(fact.frequency) * fact.confidence;
        }
    }
    for s in &mut scores {
        *s = s.min(ITEM_CAP);
    }
    scores
}

/// Scores one subject from the facts in the screening fiber (and any of its
/// sub-fibers). Item-9 evidence with frequency ≥ 1 activates the alert
/// pathway regardless of the numeric score, asserting a `conflict_with`
/// edge in the screening fiber.
pub fn score_assessment(kb: &mut KnowledgeBase, subject: &str) -> Result<Phq9Assessment> {
    let phq9 = screening_domain();
    if !kb.universe.is_registered(&phq9) {
        return Err(Error::MissingFiber(phq9));
    }

    let facts: Vec<&FactRecord> = kb
        .store
        .facts()
        .iter()
        .filter(|f| f.subject == subject)
        .filter(|f| kb.universe.leq(&f.domain, &phq9).unwrap_or(false))
        .collect();

    let item_scores = weighted_item_scores(&facts);
    let total: f64 = item_scores.iter().sum();
    let severity = severity_of(total);

    let item9_attested = facts
        .iter()
        .any(|f| f.target == ITEM_CONCEPTS[8] && f.frequency >= 1);
    let alert = if item9_attested {
        let weighted: f64 = facts
            .iter()
            .filter(|f| f.target == ITEM_CONCEPTS[8])
            .map(|f| f64::from(f.frequency) * f.confidence)
            .sum();
        let level = if weighted >= 2.0 {
            AlertLevel::High
        } else {
            AlertLevel::Moderate
        };
        Some(Alert {
            concern: ITEM_CONCEPTS[8].to_owned(),
            level,
        })
    } else {
        None
    };

    if alert.is_some() {
        raise_alert(kb, subject)?;
    }

    Ok(Phq9Assessment {
        subject: subject.to_owned(),
        item_scores,
        total,
        severity,
        alert,
    })
}

/// Asserts the alert edge for `subject` in the screening fiber. Idempotent:
/// re-scoring the same subject does not duplicate the edge.
pub fn raise_alert(kb: &mut KnowledgeBase, subject: &str) -> Result<()> {
    let triple = Triple::asserted(subject, ALERT_RELATION, ITEM_CONCEPTS[8], screening_domain());
    kb.store.extend(triple, &kb.universe, &kb.typing)?;
    Ok(())
}

/// Outcome of the non-propagation audit.
#[derive(Clone, Debug, serde::Serialize)]
pub struct AlertPropagationReport {
    /// Alert edges present in the screening fiber.
    pub alerts_raised: usize,
    /// Alert edges visible in the general fiber's inherited view. Must stay
    /// empty.
    pub leaked: Vec<String>,
    /// Typing entries that (wrongly) declare the alert relation monotone.
    pub offending_declarations: Vec<DomainPath>,
    pub passed: bool,
}

/// Verifies alerts cannot leave the screening fiber: the general psychology
/// view inherits no alert edge, and the typing table keeps the alert
/// relation non-monotone. Vacuously passes when no alert was raised.
pub fn alert_propagation_check(kb: &KnowledgeBase) -> Result<AlertPropagationReport> {
    let filter = TripleFilter::any().relation(ALERT_RELATION);
    let alerts_raised = kb
        .store
        .fiber(&screening_domain())
        .iter()
        .filter(|t| filter.admits(t))
        .count();

    let leaked: Vec<String> = inherited_query(
        &kb.store,
        &kb.universe,
        &kb.typing,
        &general_domain(),
        &filter,
    )?
    .into_iter()
    .map(|t| format!("{}({}, {}) @ {}", t.relation, t.source, t.target, t.domain))
    .collect();

    let offending_declarations = kb.typing.entries_declaring(ALERT_RELATION, PROP_MONOTONE);
    let typing_ok = kb.typing.tau(ALERT_RELATION) == Monotonicity::NonMonotone;

    Ok(AlertPropagationReport {
        alerts_raised,
        passed: leaked.is_empty() && typing_ok && offending_declarations.is_empty(),
        leaked,
        offending_declarations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::LoadOptions;
    use proptest::prelude::*;

    fn p001_base() -> KnowledgeBase {
        KnowledgeBase::from_text(crate::experiments::PHQ9_P001_KB, &LoadOptions::default())
            .unwrap()
    }

    #[test]
    fn p001_scores_fourteen_moderate_with_a_high_alert() {
        let mut kb = p001_base();
        let a = score_assessment(&mut kb, "P001").unwrap();
        assert_eq!(a.item_scores, [2.0, 2.0, 1.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert!((a.total - 14.0).abs() < 1e-12);
        assert_eq!(a.severity, Severity::Moderate);
        assert_eq!(
            a.alert,
            Some(Alert {
                concern: "SuicidalIdeation".to_owned(),
                level: AlertLevel::High
            })
        );
        // The alert pathway left a concrete edge in the screening fiber.
        let alerts: Vec<_> = kb
            .store
            .fiber(&screening_domain())
            .iter()
            .filter(|t| t.relation == ALERT_RELATION)
            .collect();
        assert_eq!(alerts.len(), 1);
        assert_eq!(alerts[0].source, "P001");
    }

    #[test]
    fn rescoring_does_not_duplicate_the_alert_edge() {
        let mut kb = p001_base();
        score_assessment(&mut kb, "P001").unwrap();
        score_assessment(&mut kb, "P001").unwrap();
        let alerts = kb
            .store
            .fiber(&screening_domain())
            .iter()
            .filter(|t| t.relation == ALERT_RELATION)
            .count();
        assert_eq!(alerts, 1);
    }

    #[test]
    fn an_unknown_subject_scores_zero_minimal_no_alert() {
        let mut kb = p001_base();
        let a = score_assessment(&mut kb, "P999").unwrap();
        assert_eq!(a.total, 0.0);
        assert_eq!(a.severity, Severity::Minimal);
        assert!(a.alert.is_none());
    }

    #[test]
    fn a_missing_screening_fiber_is_an_error() {
        let mut kb =
            KnowledgeBase::from_text("domain Psychology\n", &LoadOptions::default()).unwrap();
        let err = score_assessment(&mut kb, "P001").unwrap_err();
        assert!(matches!(err, Error::MissingFiber(_)));
    }

    #[test]
    fn weighting_multiplies_frequency_by_confidence() {
        let mut kb = KnowledgeBase::from_text(
            "domain Psychology\n\
             domain Psychology@PHQ9\n\
             fact S tired_all_day @ Psychology@PHQ9 -> Anhedonia conf=0.5 freq=3\n",
            &LoadOptions::default(),
        )
        .unwrap();
        let a = score_assessment(&mut kb, "S").unwrap();
        assert!((a.item_scores[0] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn item_scores_cap_at_the_instrument_maximum() {
        let mut kb = KnowledgeBase::from_text(
            "domain Psychology\n\
             domain Psychology@PHQ9\n\
             fact S token_one @ Psychology@PHQ9 -> Fatigue freq=3\n\
             fact S token_two @ Psychology@PHQ9 -> Fatigue freq=3\n",
            &LoadOptions::default(),
        )
        .unwrap();
        let a = score_assessment(&mut kb, "S").unwrap();
        assert_eq!(a.item_scores[3], 3.0);
        assert_eq!(a.total, 3.0);
    }

    #[test]
    fn the_alert_fires_independently_of_the_total() {
        // Confidence zero keeps every score at zero, yet attested item-9
        // evidence still activates the pathway.
        let mut kb = KnowledgeBase::from_text(
            "domain Psychology\n\
             domain Psychology@PHQ9\n\
             fact S thoughts_of_self_harm @ Psychology@PHQ9 -> SuicidalIdeation conf=0.0\n",
            &LoadOptions::default(),
        )
        .unwrap();
        let a = score_assessment(&mut kb, "S").unwrap();
        assert_eq!(a.total, 0.0);
        assert_eq!(a.severity, Severity::Minimal);
        assert_eq!(a.alert.unwrap().level, AlertLevel::Moderate);
    }

    #[test]
    fn severity_bands_are_closed_on_the_left() {
        assert_eq!(severity_of(0.0), Severity::Minimal);
        assert_eq!(severity_of(4.999), Severity::Minimal);
        assert_eq!(severity_of(5.0), Severity::Mild);
        assert_eq!(severity_of(10.0), Severity::Moderate);
        assert_eq!(severity_of(14.0), Severity::Moderate);
        assert_eq!(severity_of(15.0), Severity::ModeratelySevere);
        assert_eq!(severity_of(20.0), Severity::Severe);
        assert_eq!(severity_of(27.0), Severity::Severe);
    }

    #[test]
    fn alerts_stay_inside_the_screening_fiber() {
        let mut kb = p001_base();
        score_assessment(&mut kb, "P001").unwrap();
        let report = alert_propagation_check(&kb).unwrap();
        assert_eq!(report.alerts_raised, 1);
        assert!(report.leaked.is_empty());
        assert!(report.offending_declarations.is_empty());
        assert!(report.passed);
    }

    #[test]
    fn no_alert_passes_vacuously() {
        let kb = p001_base();
        let report = alert_propagation_check(&kb).unwrap();
        assert_eq!(report.alerts_raised, 0);
        assert!(report.passed);
    }

    #[test]
    fn a_monotone_alert_declaration_fails_the_audit_with_a_witness() {
        let text = format!(
            "{}meta conflict_with monotone @ Clinical\n",
            crate::experiments::PHQ9_P001_KB
        );
        let mut kb = KnowledgeBase::from_text(&text, &LoadOptions::default()).unwrap();
        score_assessment(&mut kb, "P001").unwrap();
        let report = alert_propagation_check(&kb).unwrap();
        assert!(!report.passed);
        assert_eq!(report.offending_declarations.len(), 1);
        assert_eq!(report.offending_declarations[0].to_string(), "Clinical");
    }

    fn fact(target: &str, frequency: u32, confidence: f64) -> FactRecord {
        FactRecord {
            subject: "S".to_owned(),
            utterance: "tok".to_owned(),
            target: target.to_owned(),
            frequency,
            confidence,
            domain: screening_domain(),
        }
    }

    proptest! {
        /// Raising any single fact's confidence never lowers any item score.
        #[test]
        fn scoring_is_monotone_in_confidence(
            picks in proptest::collection::vec((0usize..9, 0u32..=3, 0.0f64..=1.0), 1..8),
            bump_idx in 0usize..8,
            bump in 0.0f64..=0.5,
        ) {
            let facts: Vec<FactRecord> = picks
                .iter()
                .map(|(item, freq, conf)| fact(ITEM_CONCEPTS[*item], *freq, *conf))
                .collect();
            let mut bumped = facts.clone();
            let i = bump_idx % bumped.len();
            bumped[i].confidence = (bumped[i].confidence + bump).min(1.0);

            let before = weighted_item_scores(&facts.iter().collect::<Vec<_>>());
            let after = weighted_item_scores(&bumped.iter().collect::<Vec<_>>());
            for (b, a) in before.iter().zip(after.iter()) {
                prop_assert!(a >= b, "score dropped: {b} -> {a}");
            }
        }
    }
}
