//! Top-down reasoning. Search nodes are labeled by the implemented functions
//! `I` and the declared-but-unimplemented functions `U`. Each declaration in
//! `U` carries an EV and a Reference Implementation (RI); running a node's
//! program dispatches calls to `U`-names to their RIs and logs the argument
//! tuples, and the critic checks a proposed implementation against its EV on
//! every logged call.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::dsl::{self, Builtin, EvalError, Evaluator, FunctionDef, NoFunctions, Program, Resolver, Value};
use crate::harness::seed::STREAM_CRITIC;
use crate::harness::task::TaskSpec;
use crate::search::{
    ActorError, Certificate, Context, Frontier, NodeLabel, Outcome, RunError, RunReport, SearchConfig, SearchEvent,
};
use crate::stats::PrecisionBudget;

/// A declared function: signature, Example Validator, and Reference
/// Implementation. `ev` takes the arguments followed by a candidate output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub name: String,
    pub arity: usize,
    pub ev: FunctionDef,
    pub ri: FunctionDef,
}

impl Declaration {
    pub fn new(name: &str, ev: FunctionDef, ri: FunctionDef) -> Self {
        Declaration {
            name: name.to_string(),
            arity: ri.arity(),
            ev,
            ri,
        }
    }

    fn check(&self) -> Result<(), String> {
        if self.ri.arity() != self.arity {
            return Err(format!(
                "RI of `{}` has arity {}, expected {}",
                self.name,
                self.ri.arity(),
                self.arity
            ));
        }
        if self.ev.arity() != self.arity + 1 {
            return Err(format!(
                "EV of `{}` has arity {}, expected {}",
                self.name,
                self.ev.arity(),
                self.arity + 1
            ));
        }
        for (what, def) in [("RI", &self.ri), ("EV", &self.ev)] {
            if let Some((callee, _)) = def.callees().first() {
                return Err(format!(
                    "{what} of `{}` must be self-contained but calls `{callee}`",
                    self.name
                ));
            }
        }
        Ok(())
    }
}

/// An implementation of `target` (a name in `U`) that may declare new helpers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdProposal {
    pub target: String,
    pub implementation: FunctionDef,
    pub helpers: Vec<Declaration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TdError {
    #[error("`{0}` is not an unimplemented function of this node")]
    NotPending(String),
    #[error("helper name `{0}` collides with an existing function")]
    NameCollision(String),
    #[error("invalid proposal for `{target}`: {reason}")]
    Invalid { target: String, reason: String },
}

impl From<TdError> for ActorError {
    fn from(e: TdError) -> Self {
        ActorError::InvalidProposal(e.to_string())
    }
}

/// A search node `(I, U)`. `pending` is `U` in order of declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TdNode {
    pub entry: String,
    pub implemented: Program,
    pub pending: Vec<Declaration>,
}

impl TdNode {
    /// `I = {}`, `U = {g}` with the task's EV and its trusted reference as RI.
    pub fn root(task: &TaskSpec) -> Self {
        let name = task.target_name();
        TdNode {
            entry: name.to_string(),
            implemented: Program::new(),
            pending: vec![Declaration::new(name, task.ev_for_g.clone(), task.ground_truth.clone())],
        }
    }

    /// Builds an arbitrary node, checking the node invariants.
    pub fn new(entry: &str, implemented: Program, pending: Vec<Declaration>) -> Result<Self, TdError> {
        let node = TdNode {
            entry: entry.to_string(),
            implemented,
            pending,
        };
        let invalid = |reason: String| TdError::Invalid {
            target: entry.to_string(),
            reason,
        };
        let mut seen = BTreeSet::new();
        for d in &node.pending {
            d.check().map_err(invalid)?;
            if node.implemented.contains(&d.name) || !seen.insert(d.name.as_str()) {
                return Err(TdError::NameCollision(d.name.clone()));
            }
        }
        if !node.implemented.contains(entry) && !seen.contains(entry) {
            return Err(invalid(format!("entry `{entry}` is neither in I nor U")));
        }
        node.implemented
            .validate_with(&node.externs())
            .map_err(|e| invalid(e.to_string()))?;
        Ok(node)
    }

    pub fn is_terminal(&self) -> bool {
        self.pending.is_empty()
    }

    /// Number of implemented functions.
    pub fn k(&self) -> usize {
        self.implemented.len()
    }

    pub fn implemented_names(&self) -> Vec<String> {
        self.implemented.names().map(str::to_string).collect()
    }

    pub fn unimplemented_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.pending.iter().map(|d| d.name.clone()).collect();
        names.sort();
        names
    }

    pub fn label(&self) -> NodeLabel {
        NodeLabel::Functions {
            implemented: self.implemented_names(),
            unimplemented: self.unimplemented_names(),
        }
    }

    pub fn declaration(&self, name: &str) -> Option<&Declaration> {
        self.pending.iter().find(|d| d.name == name)
    }

    /// The function to implement next: the earliest declared one.
    pub fn next_target(&self) -> Option<&Declaration> {
        self.pending.first()
    }

    fn externs(&self) -> BTreeMap<String, usize> {
        self.pending.iter().map(|d| (d.name.clone(), d.arity)).collect()
    }

    fn name_taken(&self, name: &str) -> bool {
        self.implemented.contains(name)
            || self.declaration(name).is_some()
            || Builtin::from_name(name).is_some()
            || dsl::KEYWORDS.contains(&name)
    }

    /// Checks that `p` could be installed at this node.
    pub fn check_proposal(&self, p: &TdProposal) -> Result<(), TdError> {
        let decl = self
            .declaration(&p.target)
            .ok_or_else(|| TdError::NotPending(p.target.clone()))?;
        let invalid = |reason: String| TdError::Invalid {
            target: p.target.clone(),
            reason,
        };
        if p.implementation.name != p.target {
            return Err(invalid(format!("implementation is named `{}`", p.implementation.name)));
        }
        if p.implementation.arity() != decl.arity {
            return Err(invalid(format!(
                "implementation has arity {}, declared {}",
                p.implementation.arity(),
                decl.arity
            )));
        }
        let mut fresh = BTreeSet::new();
        for h in &p.helpers {
            if h.name == p.target || self.name_taken(&h.name) || !fresh.insert(h.name.as_str()) {
                return Err(TdError::NameCollision(h.name.clone()));
            }
            h.check().map_err(invalid)?;
        }
        let mut externs = self.externs();
        externs.remove(&p.target);
        externs.extend(p.helpers.iter().map(|h| (h.name.clone(), h.arity)));
        let program = self.implemented.clone().with(p.implementation.clone());
        program.validate_with(&externs).map_err(|e| invalid(e.to_string()))
    }
}

/// Moves the proposal's target from `U` to `I` and appends its helpers to `U`.
pub fn expand_td_node(node: &TdNode, p: &TdProposal) -> Result<TdNode, TdError> {
    node.check_proposal(p)?;
    let mut pending: Vec<Declaration> = node.pending.iter().filter(|d| d.name != p.target).cloned().collect();
    pending.extend(p.helpers.iter().cloned());
    Ok(TdNode {
        entry: node.entry.clone(),
        implemented: node.implemented.clone().with(p.implementation.clone()),
        pending,
    })
}

/// `S(x)` for every `U`-name: the distinct argument tuples of all calls made
/// while running on one input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallLog {
    calls: BTreeMap<String, BTreeSet<Vec<Value>>>,
}

impl CallLog {
    pub fn calls(&self, name: &str) -> impl Iterator<Item = &Vec<Value>> {
        self.calls.get(name).into_iter().flatten()
    }

    pub fn count(&self, name: &str) -> usize {
        self.calls.get(name).map_or(0, BTreeSet::len)
    }

    pub fn is_empty(&self) -> bool {
        self.calls.values().all(BTreeSet::is_empty)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.calls.keys().map(String::as_str)
    }
}

/// Resolves names at a node: an optional proposal overlay first, then `I`
/// bodies, then RIs for `U`.
struct NodeResolver<'a> {
    node: &'a TdNode,
    overlay: Option<&'a TdProposal>,
    log: Option<RefCell<CallLog>>,
    stack: RefCell<Vec<String>>,
}

impl<'a> NodeResolver<'a> {
    fn new(node: &'a TdNode, overlay: Option<&'a TdProposal>, logging: bool) -> Self {
        NodeResolver {
            node,
            overlay,
            log: logging.then(RefCell::default),
            stack: RefCell::default(),
        }
    }
}

impl Resolver for NodeResolver<'_> {
    fn resolve(&self, name: &str) -> Option<&FunctionDef> {
        if let Some(p) = self.overlay {
            if p.target == name {
                return Some(&p.implementation);
            }
            if let Some(h) = p.helpers.iter().find(|h| h.name == name) {
                return Some(&h.ri);
            }
        }
        self.node
            .implemented
            .get(name)
            .or_else(|| self.node.declaration(name).map(|d| &d.ri))
    }

    fn enter(&self, name: &str, args: &[Value]) {
        self.stack.borrow_mut().push(name.to_string());
        if let Some(log) = &self.log {
            let overridden = self.overlay.is_some_and(|p| p.target == name);
            if !overridden && self.node.declaration(name).is_some() {
                log.borrow_mut()
                    .calls
                    .entry(name.to_string())
                    .or_default()
                    .insert(args.to_vec());
            }
        }
    }

    fn exit(&self, _name: &str) {
        self.stack.borrow_mut().pop();
    }
}

/// An evaluation error during a logging run, with the call path at the point
/// of failure (outermost first) and the calls logged before it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{error} (in {})", call_path.join(" -> "))]
pub struct LoggedFailure {
    pub error: EvalError,
    pub call_path: Vec<String>,
    pub partial_log: CallLog,
}

impl LoggedFailure {
    /// The function executing when the error occurred.
    pub fn failing_function(&self) -> Option<&str> {
        self.call_path.last().map(String::as_str)
    }
}

/// Runs the node's entry function on `x`, dispatching `U`-names to their RIs
/// and logging every call to them.
pub fn run_with_logging(node: &TdNode, x: &Value, fuel: u64) -> Result<(Value, CallLog), LoggedFailure> {
    let resolver = NodeResolver::new(node, None, true);
    let result = Evaluator::new(&resolver, fuel).call(&node.entry, vec![x.clone()]);
    let log = resolver.log.map(RefCell::into_inner).unwrap_or_default();
    match result {
        Ok(v) => Ok((v, log)),
        Err(error) => Err(LoggedFailure {
            error,
            call_path: resolver.stack.into_inner(),
            partial_log: log,
        }),
    }
}

/// Whether `p`'s implementation, run on `args` (helpers via their RIs), gives
/// an output accepted by the target's EV. Errors count as `false`.
pub fn proposal_passes(node: &TdNode, p: &TdProposal, args: &[Value], fuel: u64) -> bool {
    let Some(decl) = node.declaration(&p.target) else {
        return false;
    };
    let resolver = NodeResolver::new(node, Some(p), false);
    let Ok(y) = Evaluator::new(&resolver, fuel).apply(&p.implementation, args.to_vec()) else {
        return false;
    };
    let mut ev_args = args.to_vec();
    ev_args.push(y);
    matches!(
        Evaluator::new(&NoFunctions, fuel).apply(&decl.ev, ev_args),
        Ok(Value::Bool(true))
    )
}

/// Indices of proposals whose implementation passes its target's EV on every
/// logged call `s` in `S(x_t)` for every sample, in order.
///
/// If a logging run fails inside a target (its RI, or an RI it called), that
/// sample counts as a failure for every proposal of that target; otherwise
/// the calls logged before the failure are used.
pub fn critic_survivors_td(
    proposals: &[TdProposal],
    samples: &[Value],
    node: &TdNode,
    fuel: u64,
) -> Result<Vec<usize>, TdError> {
    for p in proposals {
        if node.declaration(&p.target).is_none() {
            return Err(TdError::NotPending(p.target.clone()));
        }
    }
    let mut alive: Vec<usize> = (0..proposals.len()).collect();
    for x in samples {
        if alive.is_empty() {
            break;
        }
        let (log, failed_in) = match run_with_logging(node, x, fuel) {
            Ok((_, log)) => (log, None),
            Err(f) => {
                let top = f
                    .call_path
                    .iter()
                    .rev()
                    .find(|n| node.declaration(n).is_some())
                    .cloned();
                (f.partial_log, top)
            }
        };
        alive.retain(|&i| {
            let p = &proposals[i];
            failed_in.as_deref() != Some(p.target.as_str())
                && log.calls(&p.target).all(|args| proposal_passes(node, p, args, fuel))
        });
    }
    Ok(alive)
}

/// The surviving proposals themselves.
pub fn critic_filter_td(
    proposals: &[TdProposal],
    samples: &[Value],
    node: &TdNode,
    fuel: u64,
) -> Result<Vec<TdProposal>, TdError> {
    Ok(critic_survivors_td(proposals, samples, node, fuel)?
        .into_iter()
        .map(|i| proposals[i].clone())
        .collect())
}

pub trait TopDownActor {
    /// Proposes implementations of `target`, a name in the node's `U`.
    fn propose(&mut self, context: &Context, node: &TdNode, target: &str) -> Result<Vec<TdProposal>, ActorError>;
}

/// A complete implementation `ĝ`: the entry name and all its functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Implementation {
    pub entry: String,
    pub program: Program,
}

impl Implementation {
    pub fn run(&self, x: &Value, fuel: u64) -> Result<Value, EvalError> {
        dsl::eval_function(&self.program, &self.entry, vec![x.clone()], fuel)
    }
}

/// Runs the top-down search for `task` from the root `I = {}`, `U = {g}`.
///
/// Samples are drawn once and shared by all critic calls. The target of each
/// expansion is the earliest declared unimplemented function. Children that
/// would need more than `k_max` functions are pruned.
pub fn run_top_down(
    task: &TaskSpec,
    actor: &mut dyn TopDownActor,
    budget: &PrecisionBudget,
    config: &SearchConfig,
    seed: u64,
) -> Result<RunReport<Implementation>, RunError> {
    let context = Context::new(task.description.clone());
    let samples = task.samples(seed, STREAM_CRITIC, budget.m);
    let k_max = budget.k_max as usize;
    let mut events = vec![SearchEvent::Started {
        mode: budget.mode,
        m: budget.m,
        seed,
    }];
    let mut frontier = Frontier::new(config.strategy, TdNode::root(task));
    let mut visited = 0usize;
    let mut expanded = 0usize;

    while let Some(node) = frontier.pop() {
        let id = visited;
        visited += 1;
        let depth = node.k();
        if node.is_terminal() {
            events.push(SearchEvent::Accepted { node: id, k: depth });
            let certificate = Certificate::new(budget, depth, seed);
            return Ok(RunReport {
                outcome: Outcome::Accepted {
                    result: Implementation {
                        entry: node.entry,
                        program: node.implemented,
                    },
                    certificate,
                },
                events,
                nodes_expanded: expanded,
            });
        }
        if expanded >= config.node_budget {
            let reason = format!("node budget of {} exhausted", config.node_budget);
            events.push(SearchEvent::Exhausted { reason: reason.clone() });
            return Ok(RunReport {
                outcome: Outcome::IDontKnow { reason },
                events,
                nodes_expanded: expanded,
            });
        }
        expanded += 1;

        let target = node.next_target().expect("non-terminal").name.clone();
        let proposals = actor.propose(&context, &node, &target)?;
        if proposals.len() as u64 > budget.class_size {
            return Err(ActorError::Oversized {
                size: proposals.len(),
                cap: budget.class_size,
            }
            .into());
        }
        for p in &proposals {
            if p.target != target {
                return Err(ActorError::InvalidProposal(format!(
                    "proposal targets `{}` while expanding `{target}`",
                    p.target
                ))
                .into());
            }
            node.check_proposal(p).map_err(ActorError::from)?;
        }
        let survivors = critic_survivors_td(&proposals, &samples, &node, config.fuel).map_err(ActorError::from)?;
        events.push(SearchEvent::NodeExpanded {
            node: id,
            depth,
            label: node.label(),
            target: Some(target.clone()),
            class_size: proposals.len(),
            survivors: survivors.clone(),
        });
        let mut children = Vec::new();
        for &i in &survivors {
            let child = expand_td_node(&node, &proposals[i]).map_err(ActorError::from)?;
            let needed = child.k() + child.pending.len();
            if needed > k_max {
                events.push(SearchEvent::Pruned {
                    node: id,
                    depth: depth + 1,
                    reason: format!("proposal {i} needs at least {needed} functions, k_max = {k_max}"),
                });
                continue;
            }
            children.push(child);
        }
        frontier.extend(children);
    }

    let reason = format!("search space exhausted within k_max = {k_max}");
    events.push(SearchEvent::Exhausted { reason: reason.clone() });
    Ok(RunReport {
        outcome: Outcome::IDontKnow { reason },
        events,
        nodes_expanded: expanded,
    })
}
