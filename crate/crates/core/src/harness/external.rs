//! Actor backed by a remote generator over HTTP.
//!
//! Request: `POST {context, mode, node_state, proposal_cap}`.
//! Response: `{proposals: [{fn_text, parents?, target?, ev_text, ri_text?}]}`
//! with all function texts in DSL syntax. For top-down proposals `fn_text`
//! is the implementation of the target, and `ri_text` / `ev_text` hold one
//! function per new helper: the RI is named after the helper and its EV is
//! named `<helper>_ev` (any name if there is a single helper).

use std::time::Duration;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::bottomup::{BottomUpActor, BuProposal, Decomposition};
use crate::dsl::{parse_function, parse_program, print_function, print_program, FunctionDef, Program};
use crate::search::{ActorError, Context};
use crate::stats::BudgetMode;
use crate::topdown::{Declaration, TdNode, TdProposal, TopDownActor};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireVertex {
    #[serde(rename = "fn")]
    pub fn_name: String,
    pub parents: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireDeclaration {
    pub name: String,
    pub arity: usize,
    pub ev_text: String,
    pub ri_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeState {
    Graph {
        vertices: Vec<WireVertex>,
        program: String,
        evs: Vec<String>,
    },
    Functions {
        implemented: String,
        unimplemented: Vec<WireDeclaration>,
        target: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorRequest {
    pub context: String,
    pub mode: BudgetMode,
    pub node_state: NodeState,
    pub proposal_cap: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireProposal {
    pub fn_text: String,
    #[serde(default)]
    pub parents: Option<Vec<usize>>,
    #[serde(default)]
    pub target: Option<String>,
    pub ev_text: String,
    #[serde(default)]
    pub ri_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorResponse {
    pub proposals: Vec<WireProposal>,
}

#[derive(Debug, Clone)]
pub struct ExternalActor {
    pub endpoint: String,
    pub timeout: Duration,
    pub proposal_cap: u64,
    agent: ureq::Agent,
}

impl ExternalActor {
    pub fn new(endpoint: &str, timeout_ms: u64, proposal_cap: u64) -> Self {
        let timeout = Duration::from_millis(timeout_ms);
        ExternalActor {
            endpoint: endpoint.to_string(),
            timeout,
            proposal_cap,
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    /// Sends one request and returns the raw proposals, enforcing the cap.
    pub fn request(&self, request: &ActorRequest) -> Result<Vec<WireProposal>, ActorError> {
        let response = self
            .agent
            .post(&self.endpoint)
            .send_json(request)
            .map_err(|e| ActorError::Transport(e.to_string()))?;
        let body = response
            .into_string()
            .map_err(|e| ActorError::Transport(e.to_string()))?;
        let parsed: ActorResponse = serde_json::from_str(&body).map_err(|e| ActorError::Malformed(e.to_string()))?;
        if parsed.proposals.len() as u64 > self.proposal_cap {
            return Err(ActorError::Oversized {
                size: parsed.proposals.len(),
                cap: self.proposal_cap,
            });
        }
        Ok(parsed.proposals)
    }
}

fn graph_state(current: Option<&Decomposition>) -> NodeState {
    match current {
        None => NodeState::Graph {
            vertices: vec![],
            program: String::new(),
            evs: vec![],
        },
        Some(d) => NodeState::Graph {
            vertices: d
                .graph
                .vertices()
                .iter()
                .map(|v| WireVertex {
                    fn_name: v.fn_name.clone(),
                    parents: v.parents.clone(),
                })
                .collect(),
            program: print_program(d.graph.program()),
            evs: d.evs.iter().map(print_function).collect(),
        },
    }
}

fn functions_state(node: &TdNode, target: &str) -> NodeState {
    NodeState::Functions {
        implemented: print_program(&node.implemented),
        unimplemented: node
            .pending
            .iter()
            .map(|d| WireDeclaration {
                name: d.name.clone(),
                arity: d.arity,
                ev_text: print_function(&d.ev),
                ri_text: print_function(&d.ri),
            })
            .collect(),
        target: target.to_string(),
    }
}

/// Converts a wire proposal for a graph with `vertices` vertices.
pub fn parse_bu_proposal(w: &WireProposal, vertices: usize) -> Result<BuProposal, String> {
    let function = parse_function(&w.fn_text).map_err(|e| format!("fn_text: {e}"))?;
    let ev = parse_function(&w.ev_text).map_err(|e| format!("ev_text: {e}"))?;
    let p = BuProposal {
        function,
        parents: w.parents.clone().unwrap_or_default(),
        ev,
    };
    p.check(vertices).map_err(|e| e.to_string())?;
    Ok(p)
}

fn helper_ev(evs: &Program, helper: &str, helpers: usize) -> Option<FunctionDef> {
    evs.get(&format!("{helper}_ev")).cloned().or_else(|| {
        (helpers == 1 && evs.len() == 1)
            .then(|| evs.functions.values().next().cloned())
            .flatten()
    })
}

/// Converts a wire proposal for `target` at `node`.
pub fn parse_td_proposal(w: &WireProposal, node: &TdNode, target: &str) -> Result<TdProposal, String> {
    let implementation = parse_function(&w.fn_text).map_err(|e| format!("fn_text: {e}"))?;
    let ris = match &w.ri_text {
        Some(text) => parse_program(text).map_err(|e| format!("ri_text: {e}"))?,
        None => Program::new(),
    };
    let evs = if ris.is_empty() {
        Program::new()
    } else {
        parse_program(&w.ev_text).map_err(|e| format!("ev_text: {e}"))?
    };
    let helpers = ris
        .functions
        .values()
        .map(|ri| {
            let ev = helper_ev(&evs, &ri.name, ris.len()).ok_or_else(|| format!("no EV for helper `{}`", ri.name))?;
            Ok(Declaration::new(&ri.name, ev, ri.clone()))
        })
        .collect::<Result<Vec<_>, String>>()?;
    let p = TdProposal {
        target: w.target.clone().unwrap_or_else(|| target.to_string()),
        implementation,
        helpers,
    };
    if p.target != target {
        return Err(format!("targets `{}` instead of `{target}`", p.target));
    }
    node.check_proposal(&p).map_err(|e| e.to_string())?;
    Ok(p)
}

fn keep_valid<T>(raw: Vec<WireProposal>, parse: impl Fn(&WireProposal) -> Result<T, String>) -> Vec<T> {
    raw.iter()
        .enumerate()
        .filter_map(|(i, w)| match parse(w) {
            Ok(p) => Some(p),
            Err(e) => {
                warn!("dropping invalid proposal {i} from external actor: {e}");
                None
            }
        })
        .collect()
}

impl BottomUpActor for ExternalActor {
    fn propose(&mut self, context: &Context, current: Option<&Decomposition>) -> Result<Vec<BuProposal>, ActorError> {
        let raw = self.request(&ActorRequest {
            context: context.0.clone(),
            mode: BudgetMode::BottomUp,
            node_state: graph_state(current),
            proposal_cap: self.proposal_cap,
        })?;
        let vertices = current.map_or(0, |d| d.graph.len());
        Ok(keep_valid(raw, |w| parse_bu_proposal(w, vertices)))
    }

    /// The wire protocol has no completion flag, so every node is offered
    /// to the decomposition oracle.
    fn claims_complete(&mut self, _context: &Context, _current: &Decomposition) -> bool {
        true
    }
}

impl TopDownActor for ExternalActor {
    fn propose(&mut self, context: &Context, node: &TdNode, target: &str) -> Result<Vec<TdProposal>, ActorError> {
        let raw = self.request(&ActorRequest {
            context: context.0.clone(),
            mode: BudgetMode::TopDown,
            node_state: functions_state(node, target),
            proposal_cap: self.proposal_cap,
        })?;
        Ok(keep_valid(raw, |w| parse_td_proposal(w, node, target)))
    }
}
