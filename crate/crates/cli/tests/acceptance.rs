//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any failed.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use pacr_core::bottomup::{run_bottom_up, ExactOracle};
use pacr_core::dsl::arbitrary::{random_args, random_program};
use pacr_core::dsl::{eval_function, parse_program, print_program, EvalErrorKind, Evaluator, Value, DEFAULT_FUEL};
use pacr_core::harness::experiments::{
    estimate_error, run_decay_experiment, run_lemma1_trials, run_lemma2_trials, TrialSettings,
};
use pacr_core::harness::seed::{stream_rng, STREAM_HELDOUT};
use pacr_core::harness::tasks::{
    arith_pipeline_plan, arith_pipeline_task, merge_declaration, merge_sort_impl, merge_sort_task, EnumerativeActor,
};
use pacr_core::search::SearchConfig;
use pacr_core::stats::{self, BudgetMode, PrecisionBudget};
use pacr_core::topdown::{expand_td_node, run_with_logging, TdNode, TdProposal};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sigma3(p: f64, n: f64) -> f64 {
    3.0 * (p * (1.0 - p) / n).sqrt()
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn pacr(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pacr"))
        .args(args)
        .output()
        .expect("pacr runs");
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn config(name: &str) -> String {
    repo_root().join("configs").join(name).to_string_lossy().into_owned()
}

fn sample_complexity() -> Check {
    let lemma = stats::sample_complexity_lemma(100_000, 0.1, 0.01).map_err(|e| e.to_string())?;
    let bu = stats::sample_complexity_bottomup(100, 5, 0.2, 0.05).map_err(|e| e.to_string())?;
    let td = stats::sample_complexity_topdown(100, 5, 0.2, 0.05).map_err(|e| e.to_string())?;
    ensure((lemma, bu, td) == (162, 461, 231), || {
        format!("got {lemma}, {bu}, {td}")
    })?;
    Ok(format!("m = {lemma}, {bu}, {td}"))
}

fn decay_law() -> Check {
    let eps = 0.1;
    let trials = 10_000;
    let report = run_decay_experiment(eps, &[1, 5, 10, 50], trials, 20).map_err(String::from)?;
    let mut detail = vec![];
    for row in &report.rows {
        let expected = (1.0 - eps).powi(row.k as i32);
        let tol = sigma3(expected, trials as f64);
        ensure((row.exact - expected).abs() < 1e-12, || {
            format!("k = {}: exact {}", row.k, row.exact)
        })?;
        ensure((row.empirical - expected).abs() <= tol, || {
            format!(
                "k = {}: empirical {} vs {expected:.5} +- {tol:.5}",
                row.k, row.empirical
            )
        })?;
        detail.push(format!("k={}: {:.4}", row.k, row.empirical));
    }
    let mut rng = stream_rng(21, &[]);
    for _ in 0..1000 {
        let len = rng.gen_range(0..60);
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
        let c = stats::chain_success(&v).map_err(|e| e.to_string())?;
        let bound = (-v.iter().sum::<f64>()).exp();
        ensure(c.exact <= bound + 1e-15, || {
            format!("exact {} > exp bound {bound}", c.exact)
        })?;
    }
    Ok(detail.join(", ") + "; exact <= exp(-sum) on 1000 vectors")
}

fn lemma_trials(second: bool) -> Check {
    let (eps, delta, t) = (0.1, 0.05, 2000u64);
    let settings = TrialSettings::standard(eps, delta, t, if second { 42 } else { 41 });
    ensure(settings.error_levels.len() == 50, || "class is not 50 proposals".into())?;
    let report = if second {
        run_lemma2_trials(&settings)
    } else {
        run_lemma1_trials(&settings)
    }?;
    let m = stats::sample_complexity_lemma(50, eps, delta).map_err(|e| e.to_string())?;
    ensure(report.m == m, || format!("m = {} instead of {m}", report.m))?;
    let bound = delta + sigma3(delta, t as f64);
    ensure(report.bad_survival_rate <= bound, || {
        format!("bad-survival rate {} > {bound:.4}", report.bad_survival_rate)
    })?;
    if second {
        ensure(report.vacuous_control_survived == Some(true), || {
            "uncalled helper was filtered out".into()
        })?;
    }
    Ok(format!(
        "rate {:.4} <= {bound:.4} (m = {m}){}",
        report.bad_survival_rate,
        if second { ", uncalled helper survived" } else { "" }
    ))
}

fn bottom_up_end_to_end() -> Check {
    let (eps, delta) = (0.1, 0.05);
    let task = arith_pipeline_task();
    let mut actor = EnumerativeActor::new(arith_pipeline_plan());
    let size = actor.class_size() as u64;
    ensure(size <= 200, || format!("class size {size}"))?;
    let budget = PrecisionBudget::new(BudgetMode::BottomUp, eps, delta, 3, size).map_err(|e| e.to_string())?;
    let oracle = ExactOracle::for_task(&task, &budget, 31, DEFAULT_FUEL);
    let report =
        run_bottom_up(&task, &mut actor, &oracle, &budget, &SearchConfig::default(), 31).map_err(|e| e.to_string())?;
    let (d, cert) = report.outcome.accepted().ok_or("not accepted")?;
    ensure(cert.k == 3, || format!("k = {}", cert.k))?;
    let n = 10_000u64;
    let err = estimate_error(d, &task, n, 31, DEFAULT_FUEL);
    let bound = eps + sigma3(eps, n as f64);
    ensure(err <= bound, || format!("held-out error {err} > {bound}"))?;
    Ok(format!("accepted, k = 3, held-out error {err} <= {bound:.4}"))
}

fn is_sorted_permutation(x: &[i64], y: &Value) -> bool {
    let mut want = x.to_vec();
    want.sort();
    *y == Value::int_list(want)
}

fn top_down_merge_sort() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_string_lossy().into_owned();
    let (code, text) = pacr(&["run", &config("merge_sort_topdown.json"), "-o", &out]);
    ensure(code == 0, || format!("exit {code}: {text}"))?;
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("certificate.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let (k, eps) = (
        cert["certificate"]["k"].as_u64(),
        cert["certificate"]["epsilon"].as_f64().unwrap_or(0.0),
    );
    ensure(k == Some(2), || format!("certificate k = {k:?}"))?;

    let node = expand_td_node(
        &TdNode::root(&merge_sort_task()),
        &TdProposal {
            target: "merge_sort".into(),
            implementation: merge_sort_impl(),
            helpers: vec![merge_declaration()],
        },
    )
    .map_err(|e| e.to_string())?;
    let task = merge_sort_task();
    let mut long = 0;
    for i in 0..300 {
        let x = task.sample(5, STREAM_HELDOUT, i);
        if x.as_list().map_or(0, |l| l.len()) >= 3 {
            long += 1;
            let (_, log) = run_with_logging(&node, &x, DEFAULT_FUEL).map_err(|e| e.to_string())?;
            ensure(log.count("merge") >= 2, || {
                format!("{x}: {} merge calls", log.count("merge"))
            })?;
        }
    }

    let program_text = std::fs::read_to_string(dir.path().join("program.pacl")).map_err(|e| e.to_string())?;
    let program = parse_program(&program_text).map_err(|e| e.to_string())?;
    ensure(program.len() == 2, || format!("{} functions", program.len()))?;
    let n = 1000;
    let mut rng = stream_rng(77, &[]);
    let mut sorted = 0;
    for _ in 0..n {
        let len = rng.gen_range(0..=16);
        let xs: Vec<i64> = (0..len).map(|_| rng.gen_range(0..=99)).collect();
        let y = eval_function(&program, "merge_sort", vec![Value::int_list(xs.clone())], DEFAULT_FUEL);
        if matches!(&y, Ok(v) if is_sorted_permutation(&xs, v)) {
            sorted += 1;
        }
    }
    let frac = sorted as f64 / n as f64;
    let need = 1.0 - eps - sigma3(eps, n as f64);
    ensure(frac >= need, || format!("sorted {frac} < {need}"))?;
    Ok(format!(
        "exit 0, k = 2, >= 2 merge calls on all {long} arrays of length >= 3, sorted {sorted}/{n}"
    ))
}

fn honest_failure() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().to_string_lossy().into_owned();
    let (code, text) = pacr(&["run", &config("merge_sort_kmax1.json"), "-o", &out]);
    ensure(code == 2, || format!("k_max = 1: exit {code}: {text}"))?;
    let outcome = std::fs::read_to_string(dir.path().join("outcome.json")).map_err(|e| e.to_string())?;
    ensure(outcome.contains("\"i_dont_know\""), || outcome.clone())?;
    ensure(!dir.path().join("certificate.json").exists(), || {
        "certificate written".into()
    })?;
    let budget_dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let budget_cfg = budget_dir.path().join("budget.json");
    std::fs::write(
        &budget_cfg,
        r#"{"task": "arith_pipeline", "mode": "bottom-up", "epsilon": 0.1, "delta": 0.05,
            "k_max": 3, "seed": 1, "actor": "enumerative", "node_budget": 2}"#,
    )
    .map_err(|e| e.to_string())?;
    let (code, text) = pacr(&[
        "run",
        &budget_cfg.to_string_lossy(),
        "-o",
        &budget_dir.path().join("out").to_string_lossy(),
    ]);
    ensure(code == 2, || format!("node budget: exit {code}: {text}"))?;
    Ok("k_max and node-budget exhaustion both exit 2 with I don't know".into())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut csvs = vec![];
    for (i, workers) in ["1", "4", "4"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let (code, text) = pacr(&[
            "validate-bounds",
            &config("lemma1.json"),
            "-o",
            &out.to_string_lossy(),
            "--workers",
            workers,
        ]);
        ensure(code == 0, || format!("exit {code}: {text}"))?;
        csvs.push(std::fs::read(out.join("lemma1.csv")).map_err(|e| e.to_string())?);
    }
    ensure(csvs.windows(2).all(|w| w[0] == w[1]), || "CSV reports differ".into())?;
    Ok(format!(
        "3 runs (1, 4, 4 workers), {} identical bytes each",
        csvs[0].len()
    ))
}

fn parser_evaluator() -> Check {
    let mut rng = stream_rng(99, &[]);
    let mut evaluated = 0;
    let mut errored = 0;
    for i in 0..1000 {
        let g = random_program(&mut rng, 4, 5);
        let text = print_program(&g.program);
        let back = parse_program(&text).map_err(|e| format!("ast {i}: {e}"))?;
        ensure(back == g.program, || format!("ast {i} did not round-trip:\n{text}"))?;
        ensure(print_program(&back) == text, || format!("ast {i}: printing not stable"))?;

        let args = random_args(&mut rng, &g.params);
        let a = eval_function(&g.program, &g.entry, args.clone(), 100_000);
        let b = eval_function(&g.program, &g.entry, args.clone(), 100_000);
        ensure(a == b, || format!("pair {i}: nondeterministic"))?;
        let mut ev = Evaluator::new(&g.program, 100_000);
        if let Ok(v) = ev.call(&g.entry, args.clone()) {
            evaluated += 1;
            let used = 100_000 - ev.remaining_fuel();
            for fuel in [used, used + 1, used * 2 + 17] {
                let r = eval_function(&g.program, &g.entry, args.clone(), fuel);
                ensure(r.as_ref() == Ok(&v), || format!("pair {i}: fuel {fuel} gave {r:?}"))?;
            }
            if used > 1 {
                let r = eval_function(&g.program, &g.entry, args.clone(), used - 1);
                ensure(r.is_err(), || format!("pair {i}: succeeded with less fuel"))?;
            }
        } else if let Err(e) = &a {
            if e.kind() != EvalErrorKind::FuelExhausted {
                errored += 1;
                let r = eval_function(&g.program, &g.entry, args.clone(), 1_000_000);
                ensure(r.as_ref().err() == Some(e), || {
                    format!("pair {i}: more fuel gave {r:?}")
                })?;
            }
        }
    }
    Ok(format!(
        "1000 ASTs round-trip; 1000 pairs deterministic; fuel monotone on {evaluated} results and {errored} errors"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check, u64); 9] = [
        ("sample-complexity exactness", sample_complexity, 1),
        ("decay law", decay_law, 10),
        ("lemma 1 validation", || lemma_trials(false), 60),
        ("lemma 2 validation", || lemma_trials(true), 60),
        ("end-to-end bottom-up", bottom_up_end_to_end, 30),
        ("end-to-end top-down merge_sort", top_down_merge_sort, 30),
        ("honest failure", honest_failure, 5),
        ("determinism", determinism, 60),
        ("parser/evaluator suite", parser_evaluator, 60),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>())));
        let elapsed = start.elapsed();
        let result = result.and_then(|d| {
            if elapsed > Duration::from_secs(*limit) {
                Err(format!("{d}; took {elapsed:.1?}, limit {limit} s"))
            } else {
                Ok(d)
            }
        });
        match result {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
