//! Experiment configuration files and the dispatch from a configuration to
//! a search run or a bound-validation experiment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::experiments::{
    estimate_error, run_decay_experiment, run_lemma1_trials, run_lemma2_trials, spread_levels, DecayReport,
    TrialReport, TrialSettings,
};
use super::external::ExternalActor;
use super::tasks::{
    arith_pipeline_plan, arith_pipeline_scripted_actor, bundled_task, merge_sort_actor, sum_list_actor,
    EnumerativeActor, ScriptedTopDownActor,
};
use crate::bottomup::{run_bottom_up, BottomUpActor, Decomposition, ExactOracle};
use crate::dsl::DEFAULT_FUEL;
use crate::search::{RunError, RunReport, SearchConfig, Strategy, DEFAULT_NODE_BUDGET};
use crate::stats::{BudgetMode, PrecisionBudget};
use crate::topdown::{run_top_down, Implementation, TopDownActor};

pub const DEFAULT_HELDOUT: u64 = 1000;
pub const DEFAULT_EXTERNAL_CAP: u64 = 64;
pub const DEFAULT_DECAY_K: [u64; 4] = [1, 5, 10, 50];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorConfig {
    #[default]
    Scripted,
    Enumerative,
    External {
        endpoint: String,
        timeout_ms: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// A bundled task for `run`; `lemma1`, `lemma2` or `decay` for bound
    /// validation.
    pub task: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<BudgetMode>,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub seed: u64,
    #[serde(default)]
    pub actor: ActorConfig,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel: Option<u64>,
    /// Proposal cap `|P|` used in the sample bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heldout: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_values: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_size: Option<i64>,
    /// Worker threads for trials. Left out of reports: it cannot change them.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Run(#[from] RunError),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            strategy: self.strategy,
            node_budget: self.node_budget.unwrap_or(DEFAULT_NODE_BUDGET),
            fuel: self.fuel.unwrap_or(DEFAULT_FUEL),
        }
    }

    fn fuel(&self) -> u64 {
        self.fuel.unwrap_or(DEFAULT_FUEL)
    }

    fn trials(&self) -> Result<u64, ConfigError> {
        match self.trials {
            Some(0) => Err(invalid("trials must be at least 1")),
            Some(t) => Ok(t),
            None => Err(invalid("trials is required")),
        }
    }
}

/// Result of `run` for either search mode.
#[derive(Debug, Clone)]
pub enum RunArtifacts {
    BottomUp(RunReport<Decomposition>),
    TopDown(RunReport<Implementation>),
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub budget: PrecisionBudget,
    pub artifacts: RunArtifacts,
    /// Held-out error of the accepted result, if any.
    pub heldout_error: Option<f64>,
    pub heldout_samples: u64,
}

impl RunResult {
    pub fn accepted(&self) -> bool {
        match &self.artifacts {
            RunArtifacts::BottomUp(r) => r.outcome.is_accepted(),
            RunArtifacts::TopDown(r) => r.outcome.is_accepted(),
        }
    }
}

enum Actor {
    BottomUp(Box<dyn BottomUpActor>, u64),
    TopDown(Box<dyn TopDownActor>, u64),
}

fn td_scripted(task: &str) -> Option<ScriptedTopDownActor> {
    match task {
        "merge_sort" => Some(merge_sort_actor()),
        "sum_list" => Some(sum_list_actor()),
        _ => None,
    }
}

fn build_actor(cfg: &ExperimentConfig, mode: BudgetMode) -> Result<Actor, ConfigError> {
    let cap = |own: u64| cfg.class_size.unwrap_or(own);
    match (&cfg.actor, mode) {
        (ActorConfig::External { endpoint, timeout_ms }, _) => {
            let c = cap(DEFAULT_EXTERNAL_CAP);
            let a = ExternalActor::new(endpoint, *timeout_ms, c);
            Ok(match mode {
                BudgetMode::TopDown => Actor::TopDown(Box::new(a), c),
                _ => Actor::BottomUp(Box::new(a), c),
            })
        }
        (ActorConfig::Enumerative, BudgetMode::BottomUp) if cfg.task == "arith_pipeline" => {
            let a = EnumerativeActor::new(arith_pipeline_plan());
            let size = a.class_size() as u64;
            Ok(Actor::BottomUp(Box::new(a), cap(size)))
        }
        (ActorConfig::Scripted, BudgetMode::BottomUp) if cfg.task == "arith_pipeline" => {
            let a = arith_pipeline_scripted_actor();
            let size = a.steps.iter().map(Vec::len).max().unwrap_or(0) as u64;
            Ok(Actor::BottomUp(Box::new(a), cap(size)))
        }
        (ActorConfig::Scripted, BudgetMode::TopDown) => {
            let a = td_scripted(&cfg.task)
                .ok_or_else(|| invalid(format!("no scripted top-down actor for `{}`", cfg.task)))?;
            let size = a.class_size() as u64;
            Ok(Actor::TopDown(Box::new(a), cap(size)))
        }
        (actor, mode) => Err(invalid(format!(
            "no {actor:?} actor for task `{}` in {mode:?} mode",
            cfg.task
        ))),
    }
}

fn default_k_max(task: &str) -> u64 {
    match task {
        "arith_pipeline" => 3,
        "merge_sort" => 2,
        _ => 1,
    }
}

/// Runs the search described by `cfg` on a bundled task and measures the
/// held-out error of an accepted result.
pub fn run_config(cfg: &ExperimentConfig) -> Result<RunResult, ConfigError> {
    let task = bundled_task(&cfg.task).ok_or_else(|| invalid(format!("unknown task `{}`", cfg.task)))?;
    let mode = cfg.mode.ok_or_else(|| invalid("mode is required for run"))?;
    if mode == BudgetMode::LemmaOnly {
        return Err(invalid("run needs mode bottom-up or top-down"));
    }
    let k_max = cfg.k_max.unwrap_or_else(|| default_k_max(&cfg.task));
    let actor = build_actor(cfg, mode)?;
    let class_size = match &actor {
        Actor::BottomUp(_, c) | Actor::TopDown(_, c) => *c,
    };
    let budget = PrecisionBudget::new(mode, cfg.epsilon, cfg.delta, k_max, class_size.max(1))
        .map_err(|e| invalid(e.to_string()))?;
    let search = cfg.search_config();
    let heldout = cfg.heldout.unwrap_or(DEFAULT_HELDOUT);
    if heldout == 0 {
        return Err(invalid("heldout must be at least 1"));
    }
    let (artifacts, heldout_error) = match actor {
        Actor::BottomUp(mut a, _) => {
            let oracle = ExactOracle::for_task(&task, &budget, cfg.seed, cfg.fuel());
            let report = run_bottom_up(&task, a.as_mut(), &oracle, &budget, &search, cfg.seed)?;
            let err = report
                .outcome
                .accepted()
                .map(|(d, _)| estimate_error(d, &task, heldout, cfg.seed, cfg.fuel()));
            (RunArtifacts::BottomUp(report), err)
        }
        Actor::TopDown(mut a, _) => {
            let report = run_top_down(&task, a.as_mut(), &budget, &search, cfg.seed)?;
            let err = report
                .outcome
                .accepted()
                .map(|(g, _)| estimate_error(g, &task, heldout, cfg.seed, cfg.fuel()));
            (RunArtifacts::TopDown(report), err)
        }
    };
    Ok(RunResult {
        budget,
        artifacts,
        heldout_error,
        heldout_samples: heldout,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundsReport {
    Trials(TrialReport),
    Decay(DecayReport),
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        match self {
            BoundsReport::Trials(r) => r.passed,
            BoundsReport::Decay(r) => r.passed,
        }
    }

    pub fn csv(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        match self {
            BoundsReport::Trials(r) => (
                TrialReport::CSV_HEADER.to_vec(),
                r.csv_rows().into_iter().map(Vec::from).collect(),
            ),
            BoundsReport::Decay(r) => (
                DecayReport::CSV_HEADER.to_vec(),
                r.csv_rows().into_iter().map(Vec::from).collect(),
            ),
        }
    }
}

/// Runs the bound-validation experiment named by `cfg.task`.
pub fn validate_bounds(cfg: &ExperimentConfig) -> Result<BoundsReport, ConfigError> {
    let trials = cfg.trials()?;
    match cfg.task.as_str() {
        "lemma1" | "lemma2" => {
            let domain_size = cfg.domain_size.unwrap_or(1000);
            if domain_size < 1 {
                return Err(invalid("domain_size must be positive"));
            }
            let settings = TrialSettings {
                error_levels: cfg
                    .error_levels
                    .clone()
                    .unwrap_or_else(|| spread_levels(50, 0.3, domain_size)),
                domain_size,
                epsilon: cfg.epsilon,
                delta: cfg.delta,
                trials,
                seed: cfg.seed,
                workers: cfg.workers,
            };
            let report = if cfg.task == "lemma1" {
                run_lemma1_trials(&settings)
            } else {
                run_lemma2_trials(&settings)
            };
            report.map(BoundsReport::Trials).map_err(invalid)
        }
        "decay" => {
            let ks = cfg.k_values.clone().unwrap_or_else(|| DEFAULT_DECAY_K.to_vec());
            run_decay_experiment(cfg.epsilon, &ks, trials, cfg.seed)
                .map(BoundsReport::Decay)
                .map_err(invalid)
        }
        other => Err(invalid(format!(
            "unknown experiment `{other}` (expected lemma1, lemma2 or decay)"
        ))),
    }
}
