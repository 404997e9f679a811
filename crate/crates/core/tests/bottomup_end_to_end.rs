use pacr_core::bottomup::{run_bottom_up, BuProposal, Decomposition, DecompositionOracle, ExactOracle};
use pacr_core::dsl::{parse_function, Value, DEFAULT_FUEL};
use pacr_core::harness::experiments::{estimate_error, upper_tolerance};
use pacr_core::harness::tasks::{
    arith_pipeline_plan, arith_pipeline_scripted_actor, arith_pipeline_task, EnumerativeActor, ScriptedBottomUpActor,
};
use pacr_core::search::{Outcome, SearchConfig, SearchEvent, Strategy};
use pacr_core::stats::{BudgetMode, PrecisionBudget};

const EPS: f64 = 0.1;
const DELTA: f64 = 0.05;

fn budget(k_max: u64, class_size: u64) -> PrecisionBudget {
    PrecisionBudget::new(BudgetMode::BottomUp, EPS, DELTA, k_max, class_size).unwrap()
}

fn proposal(f: &str, parents: &[usize], ev: &str) -> BuProposal {
    BuProposal {
        function: parse_function(f).unwrap(),
        parents: parents.to_vec(),
        ev: parse_function(ev).unwrap(),
    }
}

#[test]
fn enumerative_actor_finds_three_step_chain() {
    let task = arith_pipeline_task();
    let mut actor = EnumerativeActor::new(arith_pipeline_plan());
    let b = budget(3, actor.class_size() as u64);
    let oracle = ExactOracle::for_task(&task, &b, 11, DEFAULT_FUEL);
    let report = run_bottom_up(&task, &mut actor, &oracle, &b, &SearchConfig::default(), 11).unwrap();
    let (d, cert) = report.outcome.accepted().expect("accepted");
    assert_eq!(cert.k, 3);
    assert_eq!(d.graph.len(), 3);
    assert_eq!(d.graph.run(&Value::Int(3), DEFAULT_FUEL).unwrap(), Value::Int(11));
    let n = 10_000;
    assert!(estimate_error(d, &task, n, 11, DEFAULT_FUEL) <= upper_tolerance(EPS, n));
    assert!(matches!(report.events.first(), Some(SearchEvent::Started { .. })));
    assert!(matches!(report.events.last(), Some(SearchEvent::Accepted { k: 3, .. })));
}

#[test]
fn bfs_reaches_the_same_chain() {
    let task = arith_pipeline_task();
    let mut actor = arith_pipeline_scripted_actor();
    let b = budget(3, 2);
    let oracle = ExactOracle::for_task(&task, &b, 2, DEFAULT_FUEL);
    let config = SearchConfig {
        strategy: Strategy::Bfs,
        ..SearchConfig::default()
    };
    let report = run_bottom_up(&task, &mut actor, &oracle, &b, &config, 2).unwrap();
    let (d, _) = report.outcome.accepted().expect("accepted");
    assert_eq!(d.graph.run(&Value::Int(-7), DEFAULT_FUEL).unwrap(), Value::Int(-9));
}

#[test]
fn ev_failing_actor_gives_i_dont_know() {
    let task = arith_pipeline_task();
    let mut actor = ScriptedBottomUpActor {
        steps: vec![vec![proposal("fn f(x) = x + 1", &[], "fn ev(a, y) = y == a + 2")]],
    };
    let b = budget(3, 1);
    let oracle = ExactOracle::for_task(&task, &b, 1, DEFAULT_FUEL);
    let report = run_bottom_up(&task, &mut actor, &oracle, &b, &SearchConfig::default(), 1).unwrap();
    assert!(matches!(report.outcome, Outcome::IDontKnow { .. }));
}

#[test]
fn k_max_one_cannot_reach_the_target() {
    let task = arith_pipeline_task();
    let mut actor = EnumerativeActor::new(arith_pipeline_plan());
    let b = budget(1, 200);
    let oracle = ExactOracle::for_task(&task, &b, 5, DEFAULT_FUEL);
    let report = run_bottom_up(&task, &mut actor, &oracle, &b, &SearchConfig::default(), 5).unwrap();
    assert!(matches!(report.outcome, Outcome::IDontKnow { .. }));
    assert!(report
        .events
        .iter()
        .any(|e| matches!(e, SearchEvent::OracleVerdict { approved: false, .. })));
}

#[test]
fn node_budget_exhaustion_gives_i_dont_know() {
    let task = arith_pipeline_task();
    let mut actor = EnumerativeActor::new(arith_pipeline_plan());
    let b = budget(3, 200);
    let oracle = ExactOracle::for_task(&task, &b, 5, DEFAULT_FUEL);
    let config = SearchConfig {
        node_budget: 1,
        ..SearchConfig::default()
    };
    let report = run_bottom_up(&task, &mut actor, &oracle, &b, &config, 5).unwrap();
    assert!(matches!(report.outcome, Outcome::IDontKnow { .. }));
    assert_eq!(report.nodes_expanded, 1);
}

fn chain(steps: &[(&str, &str)]) -> Decomposition {
    let mut d: Option<Decomposition> = None;
    for (i, (f, ev)) in steps.iter().enumerate() {
        let parents: Vec<usize> = if i == 0 { vec![] } else { vec![i] };
        let p = proposal(f, &parents, ev);
        d = Some(match d {
            None => Decomposition::start(&p).unwrap(),
            Some(d) => d.extend(&p).unwrap(),
        });
    }
    d.unwrap()
}

#[test]
fn exact_oracle_examples() {
    let task = arith_pipeline_task();
    let oracle = ExactOracle::for_task(&task, &budget(3, 200), 3, DEFAULT_FUEL);
    let correct = chain(&[
        ("fn inc(a) = a + 1", "fn ev(a, y) = y == a + 1"),
        ("fn dbl(a) = 2 * a", "fn ev(a, y) = y == 2 * a"),
        ("fn add3(a) = a + 3", "fn ev(a, y) = y == a + 3"),
    ]);
    assert!(oracle.approve(&correct));
    let off_by_one = chain(&[
        ("fn inc(a) = a + 1", "fn ev(a, y) = y == a + 1"),
        ("fn dbl(a) = 2 * a", "fn ev(a, y) = y == 2 * a"),
        ("fn add4(a) = a + 4", "fn ev(a, y) = y == a + 4"),
    ]);
    assert!(!oracle.approve(&off_by_one));
    let whole = chain(&[("fn pipeline(x) = 2 * (x + 1) + 3", "fn ev(a, y) = true")]);
    assert!(oracle.approve(&whole));
}
