//! Translation cross-validation: run the oracle on both sides of a
//! satisfiability-preservation claim over a corpus and classify each row.

use std::time::Instant;

use serde_json::json;
use thiserror::Error;

use super::{bounded_sat, OracleError, OracleResult, SearchBudget};
use crate::logic::LogicSpec;
use crate::syntax::{render, Arena, FormulaId};
use crate::translations::{TranslationError, TranslationKind, TranslationRequest};

/// How one corpus formula's two verdicts relate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckClassification {
    /// Verdicts are consistent with the preservation claim.
    Agree,
    /// A missing model inside the bound the claim guarantees.
    Disagree,
    /// A budget ran out, or the claimed model may exceed the bound.
    Inconclusive,
}

impl CheckClassification {
    pub fn label(self) -> &'static str {
        match self {
            CheckClassification::Agree => "agree",
            CheckClassification::Disagree => "disagree",
            CheckClassification::Inconclusive => "inconclusive",
        }
    }
}

/// One corpus formula's cross-check outcome.
#[derive(Clone, Debug)]
pub struct CheckRecord {
    pub formula: String,
    pub source_verdict: String,
    pub target_verdict: String,
    pub classification: CheckClassification,
    pub source_micros: u64,
    pub target_micros: u64,
}

/// All rows for one translation run.
#[derive(Clone, Debug)]
pub struct CrossCheckReport {
    pub translation: String,
    pub records: Vec<CheckRecord>,
}

impl CrossCheckReport {
    /// (agree, disagree, inconclusive) row counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for r in &self.records {
            match r.classification {
                CheckClassification::Agree => c.0 += 1,
                CheckClassification::Disagree => c.1 += 1,
                CheckClassification::Inconclusive => c.2 += 1,
            }
        }
        c
    }

    pub fn disagreements(&self) -> usize {
        self.counts().1
    }

    /// One JSON object per record, newline separated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let line = json!({
                "formula": r.formula,
                "source_verdict": r.source_verdict,
                "target_verdict": r.target_verdict,
                "classification": r.classification.label(),
                "timings": {
                    "source_micros": r.source_micros,
                    "target_micros": r.target_micros,
                },
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

/// Why a cross-check run stopped.
#[derive(Debug, Error)]
pub enum CrossCheckError {
    #[error(transparent)]
    Translate(#[from] TranslationError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// States a source witness guarantees in the target, per the preservation
/// proof's model construction; `None` when no bound is claimed.
fn forward_factor(request: &TranslationRequest) -> Option<usize> {
    match request.kind {
        TranslationKind::OneStep
        | TranslationKind::Serial
        | TranslationKind::Reflexive
        | TranslationKind::Transitive => Some(1),
        TranslationKind::Symmetric => None,
        TranslationKind::Embed => Some(request.label_range.labels().len()),
    }
}

/// Same bound in the other direction: target witness to source model.
fn backward_factor(request: &TranslationRequest) -> Option<usize> {
    match request.kind {
        TranslationKind::OneStep | TranslationKind::Symmetric => None,
        TranslationKind::Serial
        | TranslationKind::Reflexive
        | TranslationKind::Transitive
        | TranslationKind::Embed => Some(1),
    }
}

fn classify(
    request: &TranslationRequest,
    src: &OracleResult,
    tgt: &OracleResult,
) -> CheckClassification {
    use OracleResult::*;
    match (src, tgt) {
        (BudgetExhausted { .. }, _) | (_, BudgetExhausted { .. }) => {
            CheckClassification::Inconclusive
        }
        (Witness(..), Witness(..)) => CheckClassification::Agree,
        (NoModelUpTo(_), NoModelUpTo(_)) => CheckClassification::Agree,
        (Witness(m, _), NoModelUpTo(bound)) => match forward_factor(request) {
            Some(k) if k * m.n_states() <= *bound => CheckClassification::Disagree,
            _ => CheckClassification::Inconclusive,
        },
        (NoModelUpTo(bound), Witness(m, _)) => match backward_factor(request) {
            Some(k) if k * m.n_states() <= *bound => CheckClassification::Disagree,
            _ => CheckClassification::Inconclusive,
        },
    }
}

/// Decide every corpus formula under the source logic and its translation
/// under the target logic, recording verdicts, timings, and classifications.
pub fn cross_check_translation(
    arena: &mut Arena,
    request: &TranslationRequest,
    source: &LogicSpec,
    target: &LogicSpec,
    corpus: &[FormulaId],
    budget_source: &SearchBudget,
    budget_target: &SearchBudget,
) -> Result<CrossCheckReport, CrossCheckError> {
    let mut records = Vec::with_capacity(corpus.len());
    for &f in corpus {
        let translated = request.apply(arena, f)?;
        let started = Instant::now();
        let src = bounded_sat(arena, f, source, budget_source)?;
        let source_micros = started.elapsed().as_micros() as u64;
        let started = Instant::now();
        let tgt = bounded_sat(arena, translated, target, budget_target)?;
        let target_micros = started.elapsed().as_micros() as u64;
        records.push(CheckRecord {
            formula: render(arena, f),
            source_verdict: src.label(),
            target_verdict: tgt.label(),
            classification: classify(request, &src, &tgt),
            source_micros,
            target_micros,
        });
    }
    Ok(CrossCheckReport {
        translation: request.kind.name().to_string(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::KripkeModel;
    use crate::oracle::enumerate_formulas;
    use crate::syntax::{parse, AgentSet};
    use crate::translations::LabelRange;

    fn request(arena: &mut Arena, kind: TranslationKind) -> (TranslationRequest, AgentSet) {
        let a = arena.name("a");
        let all = AgentSet::from_ids(vec![a]).expect("one agent");
        (TranslationRequest::new(kind, vec![a], all.clone()), all)
    }

    #[test]
    fn reflexive_translation_agrees_on_the_mu_box_loop() {
        let mut arena = Arena::new();
        let (req, agents) = request(&mut arena, TranslationKind::Reflexive);
        let source = LogicSpec::parse(&mut arena, "a:T").expect("spec");
        let target = LogicSpec::parse(&mut arena, "a:K").expect("spec");
        let f = parse(&mut arena, &agents, "mu X.[a]X").expect("parses");
        let report = cross_check_translation(
            &mut arena,
            &req,
            &source,
            &target,
            &[f],
            &SearchBudget::up_to(3),
            &SearchBudget::up_to(3),
        )
        .expect("runs");
        assert_eq!(report.records.len(), 1);
        let row = &report.records[0];
        assert_eq!(row.classification, CheckClassification::Agree);
        assert_eq!(row.source_verdict, "unsat<=3");
        assert_eq!(row.target_verdict, "unsat<=3");
    }

    #[test]
    fn serial_translation_cross_checks_cleanly_on_small_formulas() {
        let mut arena = Arena::new();
        let (req, _) = request(&mut arena, TranslationKind::Serial);
        let a = arena.name("a");
        let p = arena.name("p");
        let corpus = enumerate_formulas(&mut arena, &[a], &[p], 2);
        let source = LogicSpec::parse(&mut arena, "a:D").expect("spec");
        let target = LogicSpec::parse(&mut arena, "a:K").expect("spec");
        let report = cross_check_translation(
            &mut arena,
            &req,
            &source,
            &target,
            &corpus,
            &SearchBudget::up_to(3),
            &SearchBudget::up_to(3),
        )
        .expect("runs");
        assert_eq!(report.records.len(), corpus.len());
        assert_eq!(report.disagreements(), 0);
        let (agree, _, _) = report.counts();
        assert!(agree > 0);
    }

    #[test]
    fn embed_translation_stays_disagreement_free() {
        let mut arena = Arena::new();
        let (req, _) = request(&mut arena, TranslationKind::Embed);
        assert_eq!(req.label_range, LabelRange::ThreeCycle);
        let a = arena.name("a");
        let p = arena.name("p");
        let corpus = enumerate_formulas(&mut arena, &[a], &[p], 2);
        let source = LogicSpec::parse(&mut arena, "a:K").expect("spec");
        let target = LogicSpec::parse(&mut arena, "a:T").expect("spec");
        let report = cross_check_translation(
            &mut arena,
            &req,
            &source,
            &target,
            &corpus,
            &SearchBudget::up_to(2),
            &SearchBudget::up_to(3),
        )
        .expect("runs");
        assert_eq!(report.disagreements(), 0);
        let (agree, _, _) = report.counts();
        assert!(agree > 0, "satisfiable rows should agree within the bound");
    }

    #[test]
    fn classification_covers_the_asymmetric_cases() {
        let mut arena = Arena::new();
        let (serial, _) = request(&mut arena, TranslationKind::Serial);
        let (symmetric, _) = request(&mut arena, TranslationKind::Symmetric);
        let (embed, _) = request(&mut arena, TranslationKind::Embed);
        let a = arena.lookup_name("a").expect("interned");
        let one = KripkeModel::new(1, &[a]).expect("model");
        let two = KripkeModel::new(2, &[a]).expect("model");
        let witness_one = OracleResult::Witness(one, 0);
        let witness_two = OracleResult::Witness(two, 0);
        let exhausted = OracleResult::BudgetExhausted {
            states_completed: 1,
            candidates_tried: 7,
        };
        // Factor one and a covering bound: a genuine disagreement.
        assert_eq!(
            classify(&serial, &witness_one, &OracleResult::NoModelUpTo(3)),
            CheckClassification::Disagree
        );
        // No claimed factor for the symmetric translation.
        assert_eq!(
            classify(&symmetric, &witness_one, &OracleResult::NoModelUpTo(3)),
            CheckClassification::Inconclusive
        );
        // Three-cycle labels triple the claimed model, beyond this bound.
        assert_eq!(
            classify(&embed, &witness_two, &OracleResult::NoModelUpTo(5)),
            CheckClassification::Inconclusive
        );
        assert_eq!(
            classify(&embed, &witness_two, &OracleResult::NoModelUpTo(6)),
            CheckClassification::Disagree
        );
        // Backward direction uses the backward factor.
        assert_eq!(
            classify(&serial, &OracleResult::NoModelUpTo(2), &witness_one),
            CheckClassification::Disagree
        );
        assert_eq!(
            classify(&embed, &exhausted.clone(), &witness_one),
            CheckClassification::Inconclusive
        );
        assert_eq!(
            classify(&serial, &witness_one, &exhausted),
            CheckClassification::Inconclusive
        );
    }

    #[test]
    fn jsonl_report_has_one_well_formed_line_per_record() {
        let mut arena = Arena::new();
        let (req, agents) = request(&mut arena, TranslationKind::Reflexive);
        let source = LogicSpec::parse(&mut arena, "a:T").expect("spec");
        let target = LogicSpec::parse(&mut arena, "a:K").expect("spec");
        let f = parse(&mut arena, &agents, "p | [a]p").expect("parses");
        let g = parse(&mut arena, &agents, "p & !p").expect("parses");
        let report = cross_check_translation(
            &mut arena,
            &req,
            &source,
            &target,
            &[f, g],
            &SearchBudget::up_to(2),
            &SearchBudget::up_to(2),
        )
        .expect("runs");
        let jsonl = report.to_jsonl();
        let lines: Vec<&str> = jsonl.lines().collect();
        assert_eq!(lines.len(), 2);
        for line in lines {
            let v: serde_json::Value = serde_json::from_str(line).expect("valid JSON");
            for key in ["formula", "source_verdict", "target_verdict", "classification"] {
                assert!(v.get(key).is_some(), "missing {key}");
            }
            assert!(v["timings"].get("source_micros").is_some());
            assert!(v["timings"].get("target_micros").is_some());
        }
    }
}
