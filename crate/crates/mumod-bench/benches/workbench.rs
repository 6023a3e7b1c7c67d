//! Desk-scale benchmarks over the hot paths: parsing, fixpoint evaluation,
//! frame closures, the tableau on the worked examples, and the oracle.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mumod_core::kripke::{close_frame, eval_set, Environment, KripkeModel, StateSet};
use mumod_core::oracle::{bounded_sat, SearchBudget};
use mumod_core::syntax::{parse, render};
use mumod_core::tableau::{run_tableau, TableauBounds};
use mumod_core::{AgentSet, Arena, FrameCondition, LogicSpec};

const SAT_EXAMPLE: &str = "(p & <a>p) & mu X.(!p | [a]X)";
const UNSAT_EXAMPLE: &str = "<b>p & mu X.([b]!p | [b]X)";

fn bench_parse(c: &mut Criterion) {
    let mut arena = Arena::new();
    let agents = AgentSet::new(&mut arena, &["a", "b"]).unwrap();
    let f = parse(&mut arena, &agents, SAT_EXAMPLE).unwrap();
    let rendered = render(&arena, f);
    c.bench_function("parse_round_trip", |b| {
        b.iter_batched(
            || (Arena::new(), rendered.clone()),
            |(mut ar, text)| {
                let ags = AgentSet::new(&mut ar, &["a", "b"]).unwrap();
                let g = parse(&mut ar, &ags, &text).unwrap();
                render(&ar, g)
            },
            BatchSize::SmallInput,
        )
    });
}

fn bench_eval(c: &mut Criterion) {
    let mut arena = Arena::new();
    let agents = AgentSet::new(&mut arena, &["a"]).unwrap();
    let a = arena.lookup_name("a").unwrap();
    let f = parse(&mut arena, &agents, "mu X.(p | <a>X)").unwrap();
    // A 32-state cycle with p true only at the far end.
    let mut model = KripkeModel::new(32, &[a]).unwrap();
    for s in 0..32 {
        model.add_edge(a, s, (s + 1) % 32).unwrap();
    }
    let p = arena.name("p");
    model.set_prop(p, StateSet::singleton(31));
    c.bench_function("eval_reachability_cycle", |b| {
        b.iter(|| eval_set(&model, &arena, f, &mut Environment::new()))
    });
}

fn bench_closure(c: &mut Criterion) {
    let mut arena = Arena::new();
    let a = arena.name("a");
    let mut model = KripkeModel::new(24, &[a]).unwrap();
    for s in 0..23 {
        model.add_edge(a, s, s + 1).unwrap();
    }
    c.bench_function("euclidean_closure_chain", |b| {
        b.iter(|| close_frame(&model, a, FrameCondition::Euclidean))
    });
}

fn bench_tableau(c: &mut Criterion) {
    let mut arena = Arena::new();
    let spec_sat = LogicSpec::parse(&mut arena, "a:K").unwrap();
    let spec_unsat = LogicSpec::parse(&mut arena, "b:K5").unwrap();
    let sat = parse(&mut arena, &spec_sat.agent_set(), SAT_EXAMPLE).unwrap();
    let unsat = parse(&mut arena, &spec_unsat.agent_set(), UNSAT_EXAMPLE).unwrap();
    let sat_bounds = TableauBounds::for_formula(&arena, sat);
    let unsat_bounds = TableauBounds::for_formula(&arena, unsat);
    c.bench_function("tableau_open_branch", |b| {
        b.iter(|| run_tableau(&arena, sat, &spec_sat, &sat_bounds).unwrap())
    });
    c.bench_function("tableau_all_closed", |b| {
        b.iter(|| run_tableau(&arena, unsat, &spec_unsat, &unsat_bounds).unwrap())
    });
}

fn bench_oracle(c: &mut Criterion) {
    let mut arena = Arena::new();
    let spec = LogicSpec::parse(&mut arena, "a:T").unwrap();
    let f = parse(&mut arena, &spec.agent_set(), "mu X.[a]X").unwrap();
    let budget = SearchBudget::up_to(3);
    c.bench_function("oracle_exhaust_reflexive", |b| {
        b.iter(|| bounded_sat(&arena, f, &spec, &budget).unwrap())
    });
}

criterion_group!(
    benches,
    bench_parse,
    bench_eval,
    bench_closure,
    bench_tableau,
    bench_oracle
);
criterion_main!(benches);
