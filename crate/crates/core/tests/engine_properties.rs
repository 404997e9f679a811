use pacr_core::bottomup::critic_survivors;
use pacr_core::dsl::{parse_function, Value, DEFAULT_FUEL};
use pacr_core::graph::ComputationGraph;
use pacr_core::harness::experiments::{make_threshold_class, three_sigma, SyntheticProposalSpec};
use pacr_core::harness::tasks::{merge_declaration, merge_sort_impl, merge_sort_task};
use pacr_core::topdown::{expand_td_node, run_with_logging, TdNode, TdProposal};
use proptest::prelude::*;

const OPS: [&str; 4] = ["a + 3", "a * 2", "a - 7", "max(a, 10)"];

fn graph_from(steps: &[(usize, usize)]) -> ComputationGraph {
    let mut g = ComputationGraph::start(&parse_function("fn v1(x) = x + 1").unwrap()).unwrap();
    for (i, &(op, parent)) in steps.iter().enumerate() {
        let f = parse_function(&format!("fn s{i}(a) = {}", OPS[op])).unwrap();
        g = g.append_function(&f, &[parent % g.len() + 1]).unwrap();
    }
    g
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn appending_keeps_earlier_outputs(
        steps in prop::collection::vec((0..4usize, 0..8usize), 0..6),
        extra in (0..4usize, 0..8usize),
        x in -1000i64..1000,
    ) {
        let g = graph_from(&steps);
        let mut longer = steps.clone();
        longer.push(extra);
        let h = graph_from(&longer);
        let x = Value::Int(x);
        let a = g.execute(&x, DEFAULT_FUEL).unwrap();
        let b = h.execute(&x, DEFAULT_FUEL).unwrap();
        prop_assert_eq!(&b.outputs[..g.len()], &a.outputs[..]);
        prop_assert_eq!(a, g.execute(&x, DEFAULT_FUEL).unwrap());
    }

    #[test]
    fn critic_is_monotone_and_order_preserving(
        levels in prop::collection::vec(0..100i64, 0..12),
        s1 in prop::collection::vec(0..100i64, 0..20),
        s2 in prop::collection::vec(0..100i64, 0..20),
    ) {
        let levels: Vec<f64> = levels.iter().map(|&t| t as f64 / 100.0).collect();
        let (_, props) = make_threshold_class(&levels, 100).unwrap();
        let s1: Vec<Value> = s1.into_iter().map(Value::Int).collect();
        let s2: Vec<Value> = s2.into_iter().map(Value::Int).collect();
        let both: Vec<Value> = s1.iter().chain(&s2).cloned().collect();
        let k1 = critic_survivors(&props, &s1, None, DEFAULT_FUEL);
        let k12 = critic_survivors(&props, &both, None, DEFAULT_FUEL);
        prop_assert!(k1.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(k12.iter().all(|i| k1.contains(i)));
        prop_assert_eq!(critic_survivors(&props, &[], None, DEFAULT_FUEL).len(), props.len());
    }

    #[test]
    fn call_logs_are_deterministic(xs in prop::collection::vec(0..99i64, 0..12)) {
        let root = TdNode::root(&merge_sort_task());
        let p = TdProposal {
            target: "merge_sort".into(),
            implementation: merge_sort_impl(),
            helpers: vec![merge_declaration()],
        };
        let node = expand_td_node(&root, &p).unwrap();
        let x = Value::int_list(xs.iter().copied());
        let a = run_with_logging(&node, &x, DEFAULT_FUEL).unwrap();
        let b = run_with_logging(&node, &x, DEFAULT_FUEL).unwrap();
        let mut sorted = xs.clone();
        sorted.sort();
        prop_assert_eq!(&a.0, &Value::int_list(sorted));
        prop_assert_eq!(a.1.count("merge") >= 1, xs.len() >= 2);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn synthetic_errors_are_calibrated() {
    let n = 100_000;
    for (i, level) in [0.0, 0.05, 0.2, 0.3].into_iter().enumerate() {
        let spec = SyntheticProposalSpec::new(level, 100).unwrap();
        let rate = spec.empirical_failure_rate(n, 40 + i as u64);
        assert!(
            (rate - level).abs() <= three_sigma(level, n),
            "level {level}: observed {rate}"
        );
    }
}
