//! Monte Carlo validation of the sample-complexity lemmas and of the chain
//! decay law, plus held-out error estimation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seed::{mix_seed, stream_rng, STREAM_HELDOUT, STREAM_TRIALS};
use super::task::{InputDistribution, TaskSpec};
use super::tasks::def;
use crate::bottomup::{critic_survivors, BuProposal, Decomposition};
use crate::dsl::{Evaluator, FunctionDef, NoFunctions, Program, Value, DEFAULT_FUEL};
use crate::graph::ComputationGraph;
use crate::stats::{self, StatsError};
use crate::topdown::{critic_survivors_td, Declaration, Implementation, TdNode, TdProposal};

/// Three binomial standard deviations of a rate `p` estimated from `n` draws.
pub fn three_sigma(p: f64, n: u64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// `p + 3 sqrt(p (1 - p) / n)`.
pub fn upper_tolerance(p: f64, n: u64) -> f64 {
    p + three_sigma(p, n)
}

/// A proposal whose EV fails exactly on `x < threshold` for `x` uniform on
/// `0..domain_size`, so its true error is `threshold / domain_size`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProposalSpec {
    pub true_error: f64,
    pub threshold: i64,
    pub domain_size: i64,
}

impl SyntheticProposalSpec {
    pub fn new(true_error: f64, domain_size: i64) -> Result<Self, String> {
        let scaled = true_error * domain_size as f64;
        let threshold = scaled.round();
        if !(0.0..=1.0).contains(&true_error) || (scaled - threshold).abs() > 1e-9 {
            return Err(format!("error level {true_error} is not a multiple of 1/{domain_size}"));
        }
        Ok(SyntheticProposalSpec {
            true_error,
            threshold: threshold as i64,
            domain_size,
        })
    }

    pub fn distribution(&self) -> InputDistribution {
        InputDistribution::UniformInt {
            lo: 0,
            hi: self.domain_size - 1,
        }
    }

    pub fn ev(&self) -> FunctionDef {
        def(&format!("fn threshold_ev(a, y) = a >= {}", self.threshold))
    }

    pub fn proposal(&self) -> BuProposal {
        BuProposal {
            function: def("fn id(x) = x"),
            parents: vec![],
            ev: self.ev(),
        }
    }

    /// Fraction of `n` fresh draws on which the EV rejects.
    pub fn empirical_failure_rate(&self, n: u64, seed: u64) -> f64 {
        let mut rng = stream_rng(seed, &[STREAM_TRIALS]);
        let dist = self.distribution();
        let ev = self.ev();
        let failures = (0..n)
            .filter(|_| {
                let x = dist.sample(&mut rng);
                Evaluator::new(&NoFunctions, DEFAULT_FUEL).apply(&ev, vec![x.clone(), x]) != Ok(Value::Bool(true))
            })
            .count();
        failures as f64 / n as f64
    }
}

/// One proposal per level, proposal `i` failing on exactly an
/// `error_levels[i]` mass of the uniform distribution on `0..domain_size`.
pub fn make_threshold_class(
    error_levels: &[f64],
    domain_size: i64,
) -> Result<(Vec<SyntheticProposalSpec>, Vec<BuProposal>), String> {
    let specs = error_levels
        .iter()
        .map(|&e| SyntheticProposalSpec::new(e, domain_size))
        .collect::<Result<Vec<_>, _>>()?;
    let proposals = specs.iter().map(SyntheticProposalSpec::proposal).collect();
    Ok((specs, proposals))
}

/// `count` levels evenly spread over `[0, max]`, rounded to multiples of
/// `1/domain_size`.
pub fn spread_levels(count: usize, max: f64, domain_size: i64) -> Vec<f64> {
    let n = domain_size as f64;
    (0..count)
        .map(|i| {
            let frac = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            (frac * max * n).round() / n
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub survivors: Vec<usize>,
    pub survivor_errors: Vec<f64>,
    pub bad_survivor: bool,
}

impl TrialRecord {
    pub fn max_survivor_error(&self) -> f64 {
        self.survivor_errors.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub experiment: String,
    pub epsilon: f64,
    pub delta: f64,
    pub class_size: usize,
    pub m: u64,
    pub master_seed: u64,
    pub trial_count: u64,
    pub bad_survivals: u64,
    pub bad_survival_rate: f64,
    /// `delta + 3 sqrt(delta (1 - delta) / T)`.
    pub tolerance: f64,
    /// Whether the vacuous-log control proposal survived every trial, when
    /// the experiment has one.
    pub vacuous_control_survived: Option<bool>,
    pub passed: bool,
    pub trials: Vec<TrialRecord>,
}

impl TrialReport {
    pub const CSV_HEADER: [&'static str; 6] = [
        "trial",
        "seed",
        "survivor_count",
        "survivors",
        "max_survivor_error",
        "bad_survivor",
    ];

    /// One row per trial, in trial order.
    pub fn csv_rows(&self) -> Vec<[String; 6]> {
        self.trials
            .iter()
            .map(|t| {
                [
                    t.trial.to_string(),
                    t.seed.to_string(),
                    t.survivors.len().to_string(),
                    t.survivors.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
                    format!("{:.6}", t.max_survivor_error()),
                    t.bad_survivor.to_string(),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSettings {
    pub error_levels: Vec<f64>,
    pub domain_size: i64,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; `None` uses all cores. Results do not depend on it.
    pub workers: Option<usize>,
}

impl TrialSettings {
    /// 50 levels spanning `[0, 0.3]` over `0..1000`.
    pub fn standard(epsilon: f64, delta: f64, trials: u64, seed: u64) -> Self {
        TrialSettings {
            error_levels: spread_levels(50, 0.3, 1000),
            domain_size: 1000,
            epsilon,
            delta,
            trials,
            seed,
            workers: None,
        }
    }
}

fn run_trials<T, F>(workers: Option<usize>, trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    let go = || (0..trials).into_par_iter().map(&f).collect::<Vec<_>>();
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(go),
        None => go(),
    }
}

fn trial_samples(dist: &InputDistribution, seed: u64, trial: u64, m: u64) -> (u64, Vec<Value>) {
    let trial_seed = mix_seed(seed, &[STREAM_TRIALS, trial]);
    let mut rng = stream_rng(trial_seed, &[]);
    (trial_seed, (0..m).map(|_| dist.sample(&mut rng)).collect())
}

fn summarize(
    experiment: &str,
    settings: &TrialSettings,
    class_size: usize,
    m: u64,
    trials: Vec<TrialRecord>,
    vacuous_control_survived: Option<bool>,
) -> TrialReport {
    let bad = trials.iter().filter(|t| t.bad_survivor).count() as u64;
    let rate = bad as f64 / settings.trials as f64;
    let tolerance = upper_tolerance(settings.delta, settings.trials);
    TrialReport {
        experiment: experiment.to_string(),
        epsilon: settings.epsilon,
        delta: settings.delta,
        class_size,
        m,
        master_seed: settings.seed,
        trial_count: settings.trials,
        bad_survivals: bad,
        bad_survival_rate: rate,
        tolerance,
        vacuous_control_survived,
        passed: rate <= tolerance && vacuous_control_survived != Some(false),
        trials,
    }
}

fn check_settings(s: &TrialSettings) -> Result<(), String> {
    if s.trials == 0 {
        return Err("trials must be at least 1".into());
    }
    if s.error_levels.is_empty() {
        return Err("error_levels must not be empty".into());
    }
    Ok(())
}

fn record(trial: u64, seed: u64, survivors: Vec<usize>, specs: &[SyntheticProposalSpec], eps: f64) -> TrialRecord {
    let survivor_errors: Vec<f64> = survivors.iter().map(|&i| specs[i].true_error).collect();
    TrialRecord {
        trial,
        seed,
        bad_survivor: survivor_errors.iter().any(|&e| e > eps),
        survivors,
        survivor_errors,
    }
}

/// Bottom-up critic on a threshold class: each trial draws
/// `m = ceil(ln(|P|/delta)/epsilon)` fresh samples, filters, and records
/// whether a proposal with true error above epsilon survived.
pub fn run_lemma1_trials(settings: &TrialSettings) -> Result<TrialReport, String> {
    check_settings(settings)?;
    let (specs, proposals) = make_threshold_class(&settings.error_levels, settings.domain_size)?;
    let m = stats::sample_complexity_lemma(specs.len() as u64, settings.epsilon, settings.delta)
        .map_err(|e: StatsError| e.to_string())?;
    let dist = specs[0].distribution();
    let trials = run_trials(settings.workers, settings.trials, |t| {
        let (seed, samples) = trial_samples(&dist, settings.seed, t, m);
        let survivors = critic_survivors(&proposals, &samples, None, DEFAULT_FUEL);
        record(t, seed, survivors, &specs, settings.epsilon)
    });
    Ok(summarize("lemma1", settings, specs.len(), m, trials, None))
}

/// The synthetic top-down node used for the second lemma:
/// `g(x) = h(x) + h(x + N) + h(x + 2N)` with `h` and an uncalled `unused`
/// helper both unimplemented and backed by identity RIs.
pub fn lemma2_node(domain_size: i64) -> TdNode {
    let n = domain_size;
    let identity = |name: &str| {
        Declaration::new(
            name,
            def(&format!("fn {name}_ev(a, y) = y == a")),
            def(&format!("fn {name}(a) = a")),
        )
    };
    TdNode::new(
        "g",
        Program::new().with(def(&format!("fn g(x) = h(x) + h(x + {n}) + h(x + {})", 2 * n))),
        vec![identity("h"), identity("unused")],
    )
    .expect("synthetic node is well formed")
}

/// An implementation of `h` that is wrong exactly on arguments
/// `>= 3N - threshold`, so only the third call can fail and it fails iff
/// `x >= N - threshold`: a call-failure mass of `threshold / N`.
pub fn lemma2_proposal(spec: &SyntheticProposalSpec) -> TdProposal {
    let cut = 3 * spec.domain_size - spec.threshold;
    TdProposal {
        target: "h".into(),
        implementation: def(&format!("fn h(a) = if a >= {cut} then a + 1 else a")),
        helpers: vec![],
    }
}

/// A wrong implementation of the never-called helper.
pub fn vacuous_control_proposal() -> TdProposal {
    TdProposal {
        target: "unused".into(),
        implementation: def("fn unused(a) = a + 1"),
        helpers: vec![],
    }
}

/// Top-down critic on [`lemma2_node`], same protocol as
/// [`run_lemma1_trials`]. Every trial also filters the vacuous control,
/// which must survive.
pub fn run_lemma2_trials(settings: &TrialSettings) -> Result<TrialReport, String> {
    check_settings(settings)?;
    let specs = settings
        .error_levels
        .iter()
        .map(|&e| SyntheticProposalSpec::new(e, settings.domain_size))
        .collect::<Result<Vec<_>, _>>()?;
    let proposals: Vec<TdProposal> = specs.iter().map(lemma2_proposal).collect();
    let control = [vacuous_control_proposal()];
    let node = lemma2_node(settings.domain_size);
    let m = stats::sample_complexity_lemma(specs.len() as u64, settings.epsilon, settings.delta)
        .map_err(|e| e.to_string())?;
    let dist = specs[0].distribution();
    let results = run_trials(settings.workers, settings.trials, |t| {
        let (seed, samples) = trial_samples(&dist, settings.seed, t, m);
        let survivors = critic_survivors_td(&proposals, &samples, &node, DEFAULT_FUEL).expect("targets are pending");
        let kept = critic_survivors_td(&control, &samples, &node, DEFAULT_FUEL).expect("targets are pending");
        (record(t, seed, survivors, &specs, settings.epsilon), kept == [0])
    });
    let control_ok = results.iter().all(|(_, c)| *c);
    let trials = results.into_iter().map(|(r, _)| r).collect();
    Ok(summarize("lemma2", settings, specs.len(), m, trials, Some(control_ok)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub k: u64,
    pub empirical: f64,
    pub exact: f64,
    pub approx: f64,
    pub tolerance: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub epsilon: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub rows: Vec<DecayRow>,
    pub passed: bool,
}

impl DecayReport {
    pub const CSV_HEADER: [&'static str; 6] = ["k", "empirical", "exact", "approx", "tolerance", "within"];

    pub fn csv_rows(&self) -> Vec<[String; 6]> {
        self.rows
            .iter()
            .map(|r| {
                [
                    r.k.to_string(),
                    format!("{:.6}", r.empirical),
                    format!("{:.6}", r.exact),
                    format!("{:.6}", r.approx),
                    format!("{:.6}", r.tolerance),
                    r.within.to_string(),
                ]
            })
            .collect()
    }
}

/// Simulates `trials` chains of `k` steps, each step failing independently
/// with probability `epsilon`, and compares the success rate with
/// `(1 - epsilon)^k` at a 3-sigma tolerance.
pub fn run_decay_experiment(epsilon: f64, k_values: &[u64], trials: u64, seed: u64) -> Result<DecayReport, String> {
    if trials == 0 {
        return Err("trials must be at least 1".into());
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(format!("epsilon must lie in [0, 1), got {epsilon}"));
    }
    let rows = k_values
        .iter()
        .map(|&k| {
            let successes = (0..trials)
                .into_par_iter()
                .filter(|&t| {
                    let mut rng = stream_rng(seed, &[STREAM_TRIALS, k, t]);
                    (0..k).all(|_| !rng.gen_bool(epsilon))
                })
                .count();
            let empirical = successes as f64 / trials as f64;
            let chain = stats::chain_success(&vec![epsilon; k as usize]).map_err(|e| e.to_string())?;
            let tolerance = three_sigma(chain.exact, trials);
            Ok(DecayRow {
                k,
                empirical,
                exact: chain.exact,
                approx: chain.approx,
                tolerance,
                within: (empirical - chain.exact).abs() <= tolerance + 1e-12,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(DecayReport {
        epsilon,
        trials,
        master_seed: seed,
        passed: rows.iter().all(|r| r.within),
        rows,
    })
}

/// Anything that maps an input of `g` to an output.
pub trait Candidate: Sync {
    fn output(&self, x: &Value, fuel: u64) -> Option<Value>;
}

impl Candidate for Implementation {
    fn output(&self, x: &Value, fuel: u64) -> Option<Value> {
        self.run(x, fuel).ok()
    }
}

impl Candidate for ComputationGraph {
    fn output(&self, x: &Value, fuel: u64) -> Option<Value> {
        self.run(x, fuel).ok()
    }
}

impl Candidate for Decomposition {
    fn output(&self, x: &Value, fuel: u64) -> Option<Value> {
        self.graph.run(x, fuel).ok()
    }
}

/// Fraction of `n` held-out samples on which `candidate` disagrees with the
/// task's reference (an evaluation error counts as disagreement).
pub fn estimate_error(candidate: &dyn Candidate, task: &TaskSpec, n: u64, seed: u64, fuel: u64) -> f64 {
    assert!(n >= 1, "n must be at least 1");
    let wrong = (0..n)
        .into_par_iter()
        .filter(|&i| {
            let x = task.sample(seed, STREAM_HELDOUT, i);
            let want = task.reference_output(&x, fuel).ok();
            want.is_none() || candidate.output(&x, fuel) != want
        })
        .count();
    wrong as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::tasks::arith_pipeline_task;

    #[test]
    fn threshold_class_errors_are_exact() {
        let (specs, props) = make_threshold_class(&[0.0, 0.05, 0.2], 100).unwrap();
        assert_eq!(props.len(), 3);
        assert_eq!(specs.iter().map(|s| s.threshold).collect::<Vec<_>>(), [0, 5, 20]);
        for s in &specs {
            let xs: Vec<Value> = (0..100).map(Value::Int).collect();
            let failing = xs
                .iter()
                .filter(|x| critic_survivors(&[s.proposal()], &[(*x).clone()], None, DEFAULT_FUEL).is_empty())
                .count();
            assert_eq!(failing as f64 / 100.0, s.true_error);
        }
        assert!(make_threshold_class(&[0.123], 100).is_err());
    }

    #[test]
    fn spread_levels_cover_range() {
        let l = spread_levels(50, 0.3, 1000);
        assert_eq!(l.len(), 50);
        assert_eq!(l[0], 0.0);
        assert!((l[49] - 0.3).abs() < 1e-12);
        assert!(l.iter().all(|&e| SyntheticProposalSpec::new(e, 1000).is_ok()));
    }

    #[test]
    fn zero_error_class_never_has_bad_survivors() {
        let mut s = TrialSettings::standard(0.1, 0.05, 50, 1);
        s.error_levels = vec![0.0];
        let r = run_lemma1_trials(&s).unwrap();
        assert_eq!(r.bad_survivals, 0);
        assert!(r.trials.iter().all(|t| t.survivors == [0]));
    }

    #[test]
    fn lemma2_control_survives_and_third_call_matters() {
        let node = lemma2_node(100);
        let spec = SyntheticProposalSpec::new(0.3, 100).unwrap();
        let p = [lemma2_proposal(&spec)];
        let at = |x: i64| critic_survivors_td(&p, &[Value::Int(x)], &node, DEFAULT_FUEL).unwrap();
        assert_eq!(at(69), [0]);
        assert!(at(70).is_empty());
        let control = [vacuous_control_proposal()];
        let all: Vec<Value> = (0..100).map(Value::Int).collect();
        assert_eq!(critic_survivors_td(&control, &all, &node, DEFAULT_FUEL).unwrap(), [0]);
    }

    #[test]
    fn trials_are_independent_of_worker_count() {
        let mut s = TrialSettings::standard(0.1, 0.05, 40, 9);
        s.workers = Some(1);
        let a = run_lemma1_trials(&s).unwrap();
        s.workers = Some(3);
        let b = run_lemma1_trials(&s).unwrap();
        assert_eq!(a, b);
        let mut s = TrialSettings::standard(0.1, 0.05, 20, 9);
        s.workers = Some(1);
        let a = run_lemma2_trials(&s).unwrap();
        s.workers = Some(4);
        assert_eq!(a, run_lemma2_trials(&s).unwrap());
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(run_lemma1_trials(&TrialSettings::standard(0.1, 0.05, 0, 1)).is_err());
        assert!(run_decay_experiment(0.1, &[1], 0, 1).is_err());
    }

    #[test]
    fn decay_without_failures_is_certain() {
        let r = run_decay_experiment(0.0, &[1, 7, 30], 200, 3).unwrap();
        assert!(r.rows.iter().all(|row| row.empirical == 1.0 && row.within));
    }

    #[test]
    fn error_estimates_for_exact_and_shifted_candidates() {
        let task = arith_pipeline_task();
        let exact = Implementation {
            entry: "pipeline".into(),
            program: Program::new().with(task.ground_truth.clone()),
        };
        assert_eq!(estimate_error(&exact, &task, 500, 1, DEFAULT_FUEL), 0.0);
        let shifted = Implementation {
            entry: "pipeline".into(),
            program: Program::new().with(def("fn pipeline(x) = 2 * (x + 1) + 4")),
        };
        assert_eq!(estimate_error(&shifted, &task, 500, 1, DEFAULT_FUEL), 1.0);
    }
}
