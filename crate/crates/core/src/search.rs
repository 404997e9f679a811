//! Types shared by the bottom-up and top-down search drivers: configuration,
//! certificates, outcomes, errors, and the JSON event log.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::DEFAULT_FUEL;
use crate::stats::{BudgetMode, PrecisionBudget};

/// Free-text information handed to the actor.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Context(pub String);

impl Context {
    pub fn new(text: impl Into<String>) -> Self {
        Context(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Dfs,
    Bfs,
}

pub const DEFAULT_NODE_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub strategy: Strategy,
    /// Maximum number of nodes handed to the actor for expansion.
    pub node_budget: usize,
    /// Step budget for each single evaluation (one vertex, one EV, one run).
    pub fuel: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            strategy: Strategy::Dfs,
            node_budget: DEFAULT_NODE_BUDGET,
            fuel: DEFAULT_FUEL,
        }
    }
}

/// Precision guarantee attached to an accepted result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub epsilon: f64,
    pub delta: f64,
    pub m: u64,
    pub k: usize,
    pub seed: u64,
    pub mode: BudgetMode,
    pub k_max: u64,
    pub class_size: u64,
    pub per_vertex_epsilon: f64,
    pub per_vertex_delta: f64,
}

impl Certificate {
    pub fn new(budget: &PrecisionBudget, k: usize, seed: u64) -> Self {
        Certificate {
            epsilon: budget.epsilon,
            delta: budget.delta,
            m: budget.m,
            k,
            seed,
            mode: budget.mode,
            k_max: budget.k_max,
            class_size: budget.class_size,
            per_vertex_epsilon: budget.per_vertex_epsilon,
            per_vertex_delta: budget.per_vertex_delta,
        }
    }
}

/// Failure of the actor itself, as opposed to a search that found nothing.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActorError {
    #[error("actor returned {size} proposals, more than the cap of {cap}")]
    Oversized { size: usize, cap: u64 },
    #[error("invalid proposal: {0}")]
    InvalidProposal(String),
    #[error("actor transport: {0}")]
    Transport(String),
    #[error("malformed actor response: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("actor protocol violation: {0}")]
    Protocol(#[from] ActorError),
    #[error("task: {0}")]
    Task(String),
}

/// Node labels: vertex count for bottom-up, `(I, U)` for top-down.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeLabel {
    Graph {
        vertices: usize,
    },
    Functions {
        implemented: Vec<String>,
        unimplemented: Vec<String>,
    },
}

/// One entry of a run transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SearchEvent {
    Started {
        mode: BudgetMode,
        m: u64,
        seed: u64,
    },
    NodeExpanded {
        node: usize,
        depth: usize,
        label: NodeLabel,
        target: Option<String>,
        class_size: usize,
        survivors: Vec<usize>,
    },
    Pruned {
        node: usize,
        depth: usize,
        reason: String,
    },
    OracleVerdict {
        node: usize,
        depth: usize,
        approved: bool,
    },
    Accepted {
        node: usize,
        k: usize,
    },
    Exhausted {
        reason: String,
    },
}

/// Terminal result of a search.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    Accepted { result: T, certificate: Certificate },
    IDontKnow { reason: String },
}

impl<T> Outcome<T> {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Outcome::Accepted { .. })
    }

    pub fn accepted(&self) -> Option<(&T, &Certificate)> {
        match self {
            Outcome::Accepted { result, certificate } => Some((result, certificate)),
            Outcome::IDontKnow { .. } => None,
        }
    }
}

/// Outcome plus transcript of a run.
#[derive(Debug, Clone)]
pub struct RunReport<T> {
    pub outcome: Outcome<T>,
    pub events: Vec<SearchEvent>,
    pub nodes_expanded: usize,
}

/// The open list for DFS (stack) or BFS (queue).
pub(crate) struct Frontier<N> {
    strategy: Strategy,
    items: std::collections::VecDeque<N>,
}

impl<N> Frontier<N> {
    pub(crate) fn new(strategy: Strategy, root: N) -> Self {
        Frontier {
            strategy,
            items: std::collections::VecDeque::from([root]),
        }
    }

    pub(crate) fn pop(&mut self) -> Option<N> {
        match self.strategy {
            Strategy::Dfs => self.items.pop_back(),
            Strategy::Bfs => self.items.pop_front(),
        }
    }

    /// Adds children so that they are visited in the given order.
    pub(crate) fn extend(&mut self, children: Vec<N>) {
        match self.strategy {
            Strategy::Dfs => self.items.extend(children.into_iter().rev()),
            Strategy::Bfs => self.items.extend(children),
        }
    }
}
