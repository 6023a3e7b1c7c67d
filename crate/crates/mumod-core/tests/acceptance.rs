//! Acceptance suite: one test per numbered criterion, each printing a
//! `criterion N: ...` line with its measured runtime.  The tests share a lock
//! so the wall-clock limits are honest on a single core.

use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mumod_core::kripke::{
    check_frame_condition, close_frame, eval_set, model_check, Environment, KripkeModel, StateSet,
};
use mumod_core::oracle::{
    bounded_sat, cross_check_translation, enumerate_formulas, generate_corpus, CorpusFilter,
    OracleResult, SearchBudget,
};
use mumod_core::syntax::{build_eve, build_inv, formula_size, negate, parse, render};
use mumod_core::tableau::{run_tableau, TableauBounds, Verdict};
use mumod_core::translations::{LabelRange, TranslationKind, TranslationRequest};
use mumod_core::{AgentSet, Arena, FormulaId, FrameCondition, LogicSpec, NameId, Node};

static SERIAL: Mutex<()> = Mutex::new(());

/// Criterion 4 panics while holding the lock; the rest must still run.
fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn assert_within(criterion: u32, elapsed: Duration, limit_secs: u64) {
    assert!(
        elapsed < Duration::from_secs(limit_secs),
        "criterion {criterion}: runtime {:.2}s exceeds the {limit_secs}s limit",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_1_worked_examples_decide_exactly() {
    let _guard = serial();
    let started = Instant::now();
    let mut arena = Arena::new();

    let spec1 = LogicSpec::parse(&mut arena, "a:K").unwrap();
    let f1 = parse(&mut arena, &spec1.agent_set(), "(p & <a>p) & mu X.(!p | [a]X)").unwrap();
    let bounds = TableauBounds::for_formula(&arena, f1);
    let v1 = run_tableau(&arena, f1, &spec1, &bounds).unwrap();
    let Verdict::Sat { model, .. } = v1 else {
        panic!("criterion 1: first example should be sat, got {}", v1.tag());
    };
    let s = model.designated().unwrap();
    assert!(model_check(&model, &arena, s, f1).unwrap(), "criterion 1: witness fails model check");

    let spec2 = LogicSpec::parse(&mut arena, "b:K5").unwrap();
    let f2 = parse(&mut arena, &spec2.agent_set(), "<b>p & mu X.([b]!p | [b]X)").unwrap();
    let bounds = TableauBounds::for_formula(&arena, f2);
    let v2 = run_tableau(&arena, f2, &spec2, &bounds).unwrap();
    assert_eq!(v2.tag(), "unsat", "criterion 1: second example should be unsat");

    let elapsed = started.elapsed();
    assert_within(1, elapsed, 1);
    println!("criterion 1: pass ({:.2}s) sat with checked witness, unsat twin", elapsed.as_secs_f64());
}

#[test]
fn criterion_2_tableau_and_oracle_agree_on_the_small_corpus() {
    let _guard = serial();
    let started = Instant::now();
    let mut arena = Arena::new();
    let seed_spec = LogicSpec::parse(&mut arena, "a:K").unwrap();
    let _ = parse(&mut arena, &seed_spec.agent_set(), "p").unwrap();
    let a = arena.lookup_name("a").unwrap();
    let p = arena.lookup_name("p").unwrap();
    let corpus = enumerate_formulas(&mut arena, &[a], &[p], 5);

    let budget = SearchBudget::up_to(3);
    let mut contradictions = Vec::new();
    let mut rows = 0usize;
    for name in ["K", "D", "T", "B", "K4", "S4", "K5", "S5"] {
        let spec = LogicSpec::parse(&mut arena, &format!("a:{name}")).unwrap();
        for &f in &corpus {
            rows += 1;
            let bounds = TableauBounds::for_formula(&arena, f);
            match run_tableau(&arena, f, &spec, &bounds).unwrap() {
                Verdict::Sat { model, .. } => {
                    let s = model.designated().unwrap_or(0);
                    if !model_check(&model, &arena, s, f).unwrap() {
                        contradictions
                            .push(format!("{name}: bad witness for {}", render(&arena, f)));
                    }
                }
                Verdict::Unsat { .. } => {
                    let r = bounded_sat(&arena, f, &spec, &budget).unwrap();
                    if matches!(r, OracleResult::Witness(..)) {
                        contradictions
                            .push(format!("{name}: oracle witness vs unsat for {}", render(&arena, f)));
                    }
                }
                Verdict::Unknown { .. } => {}
            }
        }
    }

    let elapsed = started.elapsed();
    assert_within(2, elapsed, 300);
    assert!(
        contradictions.is_empty(),
        "criterion 2: {} contradictions\n{}",
        contradictions.len(),
        contradictions.join("\n")
    );
    println!(
        "criterion 2: pass ({:.1}s) {} formulas x 8 logics = {rows} rows, 0 contradictions",
        elapsed.as_secs_f64(),
        corpus.len()
    );
}

#[test]
fn criterion_3_translations_transfer_satisfiability() {
    let _guard = serial();
    let started = Instant::now();
    let mut arena = Arena::new();
    let a = arena.name("a");
    let p = arena.name("p");
    let all = AgentSet::from_ids(vec![a]).unwrap();

    struct Leg {
        kind: TranslationKind,
        condition: Option<FrameCondition>,
        label_range: LabelRange,
        filter: CorpusFilter,
        source: &'static str,
        target: &'static str,
        target_budget: SearchBudget,
    }
    let legs = [
        Leg {
            kind: TranslationKind::OneStep,
            condition: Some(FrameCondition::Reflexive),
            label_range: LabelRange::ThreeCycle,
            filter: CorpusFilter::RecursionFree,
            source: "a:T",
            target: "a:K",
            target_budget: SearchBudget::up_to(3),
        },
        Leg {
            kind: TranslationKind::Serial,
            condition: None,
            label_range: LabelRange::ThreeCycle,
            filter: CorpusFilter::Any,
            source: "a:D",
            target: "a:K",
            target_budget: SearchBudget::up_to(3),
        },
        Leg {
            kind: TranslationKind::Reflexive,
            condition: None,
            label_range: LabelRange::ThreeCycle,
            filter: CorpusFilter::Any,
            source: "a:T",
            target: "a:K",
            target_budget: SearchBudget::up_to(3),
        },
        Leg {
            kind: TranslationKind::Transitive,
            condition: None,
            label_range: LabelRange::ThreeCycle,
            filter: CorpusFilter::Any,
            source: "a:K4",
            target: "a:K",
            target_budget: SearchBudget::up_to(3),
        },
        Leg {
            kind: TranslationKind::Symmetric,
            condition: None,
            label_range: LabelRange::ThreeCycle,
            filter: CorpusFilter::MuFree,
            source: "a:B",
            target: "a:K",
            target_budget: SearchBudget::up_to(3),
        },
        // The embedding multiplies states by the three label classes, so a
        // three-state source witness needs up to nine target states.  Nine is
        // far past what exhaustive enumeration can finish; the budget keeps
        // the stated bound and caps the candidate count, so oversized rows
        // come back inconclusive instead of pretending to be exhaustive.
        Leg {
            kind: TranslationKind::Embed,
            condition: None,
            label_range: LabelRange::ThreeCycle,
            filter: CorpusFilter::Any,
            source: "a:K",
            target: "a:TB",
            target_budget: SearchBudget {
                max_states: 9,
                max_propositions: 4,
                enumeration_cap: 50_000,
                modulo_isomorphism: false,
            },
        },
    ];

    let mut summary = Vec::new();
    for (i, leg) in legs.iter().enumerate() {
        let corpus = generate_corpus(&mut arena, &[a], &[p], 6, 11 + i as u64, 400, leg.filter);
        assert!(corpus.len() >= 200, "{} corpus too small: {}", leg.kind.name(), corpus.len());
        let mut request = TranslationRequest::new(leg.kind, vec![a], all.clone());
        request.condition = leg.condition;
        request.label_range = leg.label_range;
        let source = LogicSpec::parse(&mut arena, leg.source).unwrap();
        let target = LogicSpec::parse(&mut arena, leg.target).unwrap();
        let report = cross_check_translation(
            &mut arena,
            &request,
            &source,
            &target,
            &corpus,
            &SearchBudget::up_to(3),
            &leg.target_budget,
        )
        .unwrap();
        let (agree, disagree, inconclusive) = report.counts();
        summary.push(format!(
            "{}: {} rows, {agree} agree, {disagree} disagree, {inconclusive} inconclusive",
            leg.kind.name(),
            report.records.len()
        ));
        let bad: Vec<String> = report
            .records
            .iter()
            .filter(|r| r.classification == mumod_core::oracle::CheckClassification::Disagree)
            .map(|r| format!("{} [{} vs {}]", r.formula, r.source_verdict, r.target_verdict))
            .collect();
        assert_eq!(
            disagree,
            0,
            "criterion 3: {} disagreements under {}\n{}",
            disagree,
            leg.kind.name(),
            bad.join("\n")
        );
    }

    let elapsed = started.elapsed();
    assert_within(3, elapsed, 600);
    println!("criterion 3: pass ({:.1}s)", elapsed.as_secs_f64());
    for line in summary {
        println!("  {line}");
    }
}

fn cond_name(c: FrameCondition) -> &'static str {
    match c {
        FrameCondition::Serial => "serial",
        FrameCondition::Reflexive => "reflexive",
        FrameCondition::Symmetric => "symmetric",
        FrameCondition::Transitive => "transitive",
        FrameCondition::Euclidean => "euclidean",
    }
}

fn frame_from_mask(a: NameId, n: usize, mask: u32) -> KripkeModel {
    let mut m = KripkeModel::new(n, &[a]).unwrap();
    for s in 0..n {
        let mut row = StateSet::EMPTY;
        for t in 0..n {
            if mask & (1 << (s * n + t)) != 0 {
                row.insert(t);
            }
        }
        m.set_row(a, s, row);
    }
    m
}

fn frame_edges(m: &KripkeModel, a: NameId) -> Vec<(usize, usize)> {
    let n = m.n_states();
    let mut edges = Vec::new();
    for s in 0..n {
        for t in m.successors(a, s).iter(n) {
            edges.push((s, t));
        }
    }
    edges
}

fn render_frame(m: &KripkeModel, a: NameId) -> String {
    let body: Vec<String> =
        frame_edges(m, a).into_iter().map(|(s, t)| format!("({s},{t})")).collect();
    format!("{{{}}}", body.join(","))
}

/// Edge set with states renamed a, b, c, ... in ascending (out-degree,
/// in-degree) order, so the smallest witnesses read canonically.
fn render_frame_lettered(m: &KripkeModel, a: NameId) -> String {
    let n = m.n_states();
    let out_deg = |s: usize| m.successors(a, s).len();
    let in_deg = |s: usize| (0..n).filter(|&u| m.successors(a, u).contains(s)).count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&s| (out_deg(s), in_deg(s), s));
    let mut letter = vec![' '; n];
    for (i, &s) in order.iter().enumerate() {
        letter[s] = (b'a' + i as u8) as char;
    }
    let mut edges: Vec<String> = frame_edges(m, a)
        .into_iter()
        .map(|(s, t)| format!("({},{})", letter[s], letter[t]))
        .collect();
    edges.sort();
    format!("{{{}}}", edges.join(","))
}

/// Smallest frame (state count, then edge-mask order) satisfying `x` whose
/// closure under `y` no longer does.
fn minimal_broken_frame(a: NameId, x: FrameCondition, y: FrameCondition) -> Option<KripkeModel> {
    for n in 1..=3usize {
        for mask in 0u32..(1u32 << (n * n)) {
            let m = frame_from_mask(a, n, mask);
            if check_frame_condition(&m, a, x)
                && !check_frame_condition(&close_frame(&m, a, y), a, x)
            {
                return Some(m);
            }
        }
    }
    None
}

#[test]
fn criterion_4_closure_preservation_matrix() {
    let _guard = serial();
    let started = Instant::now();
    let mut arena = Arena::new();
    let a = arena.name("a");

    use FrameCondition::*;
    // Claimed-preserving pairs (x, y): x survives closure under y.
    let claimed = [
        (Reflexive, Serial),
        (Reflexive, Symmetric),
        (Reflexive, Transitive),
        (Serial, Reflexive),
        (Serial, Symmetric),
        (Serial, Transitive),
        (Serial, Euclidean),
        (Symmetric, Reflexive),
        (Symmetric, Serial),
        (Transitive, Reflexive),
        (Transitive, Serial),
        (Transitive, Euclidean),
        (Euclidean, Serial),
        (Euclidean, Transitive),
    ];
    let excluded = [(Transitive, Symmetric), (Euclidean, Reflexive), (Euclidean, Symmetric)];

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations: Vec<String> = Vec::new();
    for &(x, y) in &claimed {
        let mut failures = 0usize;
        let mut example = None;
        for _ in 0..500 {
            let n = rng.random_range(1..=5);
            let density: f64 = rng.random();
            let mut raw = KripkeModel::new(n, &[a]).unwrap();
            for s in 0..n {
                let mut row = StateSet::EMPTY;
                for t in 0..n {
                    if rng.random::<f64>() < density {
                        row.insert(t);
                    }
                }
                raw.set_row(a, s, row);
            }
            let frame = close_frame(&raw, a, x);
            assert!(check_frame_condition(&frame, a, x), "closure under {} failed", cond_name(x));
            if !check_frame_condition(&close_frame(&frame, a, y), a, x) {
                failures += 1;
                example.get_or_insert_with(|| render_frame(&frame, a));
            }
        }
        if failures > 0 {
            let minimal = minimal_broken_frame(a, x, y)
                .map(|m| {
                    let closed = close_frame(&m, a, y);
                    format!(
                        "minimal counterexample {} -> {} closure {}",
                        render_frame(&m, a),
                        cond_name(y),
                        render_frame(&closed, a)
                    )
                })
                .unwrap_or_else(|| "no counterexample within 3 states".to_string());
            violations.push(format!(
                "{} is not preserved by {} closure: {failures}/500 random frames broke it; \
                 first sampled {}; {minimal}",
                cond_name(x),
                cond_name(y),
                example.unwrap()
            ));
        }
    }

    for &(x, y) in &excluded {
        let w = minimal_broken_frame(a, x, y).unwrap_or_else(|| {
            panic!(
                "criterion 4: no non-preservation witness found for {} under {} closure",
                cond_name(x),
                cond_name(y)
            )
        });
        println!(
            "  {} broken by {} closure at {}",
            cond_name(x),
            cond_name(y),
            render_frame_lettered(&w, a)
        );
        if (x, y) == (Euclidean, Reflexive) {
            assert_eq!(
                render_frame_lettered(&w, a),
                "{(a,b),(b,b)}",
                "criterion 4: euclidean/reflexive witness is not the canonical two-state frame"
            );
        }
    }

    let elapsed = started.elapsed();
    assert_within(4, elapsed, 60);
    if violations.is_empty() {
        println!("criterion 4: pass ({:.2}s) 14 preserving pairs, 3 searched witnesses", elapsed.as_secs_f64());
    } else {
        println!("criterion 4: FAIL ({:.2}s)", elapsed.as_secs_f64());
        for v in &violations {
            println!("  {v}");
        }
        panic!(
            "criterion 4: {} preservation pair(s) refuted\n{}",
            violations.len(),
            violations.join("\n")
        );
    }
}

#[test]
fn criterion_5_semantic_invariants_hold() {
    let _guard = serial();
    let started = Instant::now();
    let mut arena = Arena::new();
    let a = arena.name("a");
    let b = arena.name("b");
    let p = arena.name("p");
    let q = arena.name("q");
    let agents = AgentSet::from_ids(vec![a, b]).unwrap();
    let corpus = generate_corpus(&mut arena, &[a, b], &[p, q], 6, 29, 1000, CorpusFilter::Any);
    assert!(corpus.len() >= 1000, "corpus too small: {}", corpus.len());

    let p_lit = arena.lit(p, true);
    let inv_p = build_inv(&mut arena, p_lit, &agents);
    let eve_p = build_eve(&mut arena, p_lit, &agents);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut fixpoint_pairs = 0usize;
    for &f in corpus.iter().take(1000) {
        let n = rng.random_range(1..=6);
        let mut model = KripkeModel::new(n, &[a, b]).unwrap();
        let low = (1u64 << n) - 1;
        for agent in [a, b] {
            for s in 0..n {
                model.set_row(agent, s, StateSet(rng.random::<u64>() & low));
            }
        }
        for prop in [p, q] {
            model.set_prop(prop, StateSet(rng.random::<u64>() & low));
        }
        let w = StateSet::full(n);

        let truth = eval_set(&model, &arena, f, &mut Environment::new());
        let nf = negate(&mut arena, f);
        let complement = eval_set(&model, &arena, nf, &mut Environment::new());
        assert_eq!(
            complement,
            w.minus(truth),
            "negation duality broke on {}",
            render(&arena, f)
        );

        let inv_states = eval_set(&model, &arena, inv_p, &mut Environment::new());
        let eve_states = eval_set(&model, &arena, eve_p, &mut Environment::new());
        let p_states = model.prop_states(p);
        for s in 0..n {
            let reach = model.reachable_from(s);
            assert_eq!(
                inv_states.contains(s),
                reach.subset_of(p_states),
                "invariance disagrees with reachability at state {s}"
            );
            assert_eq!(
                eve_states.contains(s),
                !reach.inter(p_states).is_empty(),
                "eventuality disagrees with reachability at state {s}"
            );
        }

        match arena.node(f) {
            Node::Mu { var, body } => {
                let twin = arena.nu(var, body);
                let nu_side = eval_set(&model, &arena, twin, &mut Environment::new());
                assert!(
                    truth.subset_of(nu_side),
                    "least fixpoint exceeds greatest on {}",
                    render(&arena, f)
                );
                fixpoint_pairs += 1;
            }
            Node::Nu { var, body } => {
                let twin = arena.mu(var, body);
                let mu_side = eval_set(&model, &arena, twin, &mut Environment::new());
                assert!(
                    mu_side.subset_of(truth),
                    "least fixpoint exceeds greatest on {}",
                    render(&arena, f)
                );
                fixpoint_pairs += 1;
            }
            _ => {}
        }
    }

    let elapsed = started.elapsed();
    assert_within(5, elapsed, 60);
    println!(
        "criterion 5: pass ({:.2}s) 1000 models, duality + reachability exact, {fixpoint_pairs} mu/nu pairs ordered",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_6_translation_sizes_stay_bounded() {
    let _guard = serial();
    let started = Instant::now();
    let mut arena = Arena::new();
    let a = arena.name("a");
    let p = arena.name("p");
    let all = AgentSet::from_ids(vec![a]).unwrap();

    // (kind, one-step axiom, label range, corpus filter, quadratic bound)
    let legs = [
        (TranslationKind::OneStep, Some(FrameCondition::Transitive), LabelRange::ThreeCycle, CorpusFilter::RecursionFree, true),
        (TranslationKind::Serial, None, LabelRange::ThreeCycle, CorpusFilter::Any, false),
        (TranslationKind::Reflexive, None, LabelRange::ThreeCycle, CorpusFilter::Any, false),
        (TranslationKind::Transitive, None, LabelRange::ThreeCycle, CorpusFilter::Any, false),
        (TranslationKind::Symmetric, None, LabelRange::ThreeCycle, CorpusFilter::MuFree, true),
        (TranslationKind::Embed, None, LabelRange::TwoCycle, CorpusFilter::Any, false),
    ];

    for (i, &(kind, condition, label_range, filter, quadratic)) in legs.iter().enumerate() {
        // Single atoms carry the fixed setup cost alone, which says nothing
        // about growth; the corpus starts at two nodes.
        let corpus: Vec<FormulaId> =
            generate_corpus(&mut arena, &[a], &[p], 6, 61 + i as u64, 1100, filter)
                .into_iter()
                .filter(|&f| formula_size(&arena, f) >= 2)
                .take(1000)
                .collect();
        assert_eq!(corpus.len(), 1000, "{}: corpus too small", kind.name());

        let mut request = TranslationRequest::new(kind, vec![a], all.clone());
        request.condition = condition;
        request.label_range = label_range;

        let mut worst = 0.0f64;
        for &f in &corpus {
            let out = request.apply(&mut arena, f).unwrap();
            let n_in = formula_size(&arena, f);
            let n_out = formula_size(&arena, out);
            let cap = if quadratic { 10 * n_in * n_in } else { 10 * n_in };
            assert!(
                n_out <= cap,
                "criterion 6: {} blew its {} bound on {} ({n_in} -> {n_out} nodes)",
                kind.name(),
                if quadratic { "quadratic" } else { "linear" },
                render(&arena, f)
            );
            let denom = if quadratic { (n_in * n_in) as f64 } else { n_in as f64 };
            worst = worst.max(n_out as f64 / denom);
        }
        println!(
            "  {}: worst {} factor {worst:.2} over 1000 inputs",
            kind.name(),
            if quadratic { "quadratic" } else { "linear" }
        );
    }

    let elapsed = started.elapsed();
    println!("criterion 6: pass ({:.1}s)", elapsed.as_secs_f64());
}

#[test]
fn criterion_7_reflexive_refutation_sentinel() {
    let _guard = serial();
    let started = Instant::now();
    let mut arena = Arena::new();
    let spec_k = LogicSpec::parse(&mut arena, "a:K").unwrap();
    let spec_t = LogicSpec::parse(&mut arena, "a:T").unwrap();
    let a = arena.lookup_name("a").unwrap();
    let f = parse(&mut arena, &spec_k.agent_set(), "mu X.[a]X").unwrap();
    let bounds = TableauBounds::for_formula(&arena, f);

    let v = run_tableau(&arena, f, &spec_k, &bounds).unwrap();
    let Verdict::Sat { model, .. } = v else {
        panic!("criterion 7: tableau should find the dead-end witness, got {}", v.tag());
    };
    assert_eq!(model.n_states(), 1);
    assert!(model.successors(a, 0).is_empty(), "witness must be a dead end");
    assert!(model_check(&model, &arena, 0, f).unwrap());

    let v = run_tableau(&arena, f, &spec_t, &bounds).unwrap();
    assert_eq!(v.tag(), "unsat", "criterion 7: reflexive frames must refute it");

    let budget = SearchBudget::up_to(3);
    let r = bounded_sat(&arena, f, &spec_k, &budget).unwrap();
    let OracleResult::Witness(m, s) = r else {
        panic!("criterion 7: oracle should find the dead-end witness, got {}", r.label());
    };
    assert_eq!((m.n_states(), s), (1, 0));
    assert!(m.successors(a, 0).is_empty());

    let r = bounded_sat(&arena, f, &spec_t, &budget).unwrap();
    assert_eq!(r, OracleResult::NoModelUpTo(3), "criterion 7: oracle must refute up to the bound");

    let elapsed = started.elapsed();
    assert_within(7, elapsed, 1);
    println!("criterion 7: pass ({:.2}s) both engines split K from T", elapsed.as_secs_f64());
}
