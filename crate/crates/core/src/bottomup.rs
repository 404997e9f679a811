//! Bottom-up reasoning: grow a computation graph one vertex at a time. The
//! actor proposes `(f, J, EV)` triples, the critic keeps those whose EV holds
//! on every shared sample, and a decomposition oracle decides when a graph
//! computes the target.

use crate::dsl::{Evaluator, FunctionDef, NoFunctions, Resolver, Value};
use crate::graph::{ComputationGraph, ExecutionTrace};
use crate::harness::seed::{STREAM_CRITIC, STREAM_ORACLE};
use crate::harness::task::TaskSpec;
use crate::search::{
    ActorError, Certificate, Context, Frontier, NodeLabel, Outcome, RunError, RunReport, SearchConfig, SearchEvent,
};
use crate::stats::{self, PrecisionBudget};

/// A candidate next vertex: function, ordered parent list `J`, and EV.
///
/// The EV receives the inputs of `function` followed by the candidate output
/// and returns a boolean.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuProposal {
    pub function: FunctionDef,
    pub parents: Vec<usize>,
    pub ev: FunctionDef,
}

impl BuProposal {
    /// Checks arities against a graph that currently has `vertices` vertices.
    pub fn check(&self, vertices: usize) -> Result<(), ActorError> {
        let inputs = if self.parents.is_empty() { 1 } else { self.parents.len() };
        let bad = |msg: String| Err(ActorError::InvalidProposal(format!("{}: {msg}", self.function.name)));
        if vertices > 0 && self.parents.is_empty() {
            return bad("only the first vertex may have no parents".into());
        }
        if vertices == 0 && !self.parents.is_empty() {
            return bad("the first vertex takes the input and no parents".into());
        }
        if let Some(p) = self.parents.iter().find(|&&p| p == 0 || p > vertices) {
            return bad(format!("parent {p} does not exist"));
        }
        if self.function.arity() != inputs {
            return bad(format!(
                "arity {} does not match {inputs} input(s)",
                self.function.arity()
            ));
        }
        if self.ev.arity() != inputs + 1 {
            return bad(format!(
                "EV `{}` has arity {}, expected {}",
                self.ev.name,
                self.ev.arity(),
                inputs + 1
            ));
        }
        Ok(())
    }
}

/// A graph together with the EV of each vertex (`evs[i]` for vertex `i + 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub graph: ComputationGraph,
    pub evs: Vec<FunctionDef>,
}

impl Decomposition {
    pub fn start(p: &BuProposal) -> Result<Self, ActorError> {
        p.check(0)?;
        let graph = ComputationGraph::start(&p.function).map_err(|e| ActorError::InvalidProposal(e.to_string()))?;
        Ok(Decomposition {
            graph,
            evs: vec![p.ev.clone()],
        })
    }

    pub fn extend(&self, p: &BuProposal) -> Result<Self, ActorError> {
        p.check(self.graph.len())?;
        let graph = self
            .graph
            .append_function(&p.function, &p.parents)
            .map_err(|e| ActorError::InvalidProposal(e.to_string()))?;
        let mut evs = self.evs.clone();
        evs.push(p.ev.clone());
        Ok(Decomposition { graph, evs })
    }

    /// True iff the EV of every vertex accepts that vertex's output on the
    /// recorded trace.
    pub fn all_evs_hold(&self, trace: &ExecutionTrace, fuel: u64) -> bool {
        self.evs
            .iter()
            .zip(trace.inputs.iter().zip(&trace.outputs))
            .all(|(ev, (args, out))| validator_accepts(ev, args, out, self.graph.program(), fuel))
    }
}

fn validator_accepts(ev: &FunctionDef, args: &[Value], output: &Value, resolver: &dyn Resolver, fuel: u64) -> bool {
    let mut ev_args = args.to_vec();
    ev_args.push(output.clone());
    matches!(Evaluator::new(resolver, fuel).apply(ev, ev_args), Ok(Value::Bool(true)))
}

/// Evaluates `p` on the inputs it would receive for sample `x` and asks its
/// EV whether the output is correct. Any evaluation error counts as `false`.
///
/// `trace` is the current graph's trace on `x` (`None` before the first vertex).
pub fn ev_holds(
    p: &BuProposal,
    x: &Value,
    trace: Option<&ExecutionTrace>,
    graph: Option<&ComputationGraph>,
    fuel: u64,
) -> bool {
    let args = match trace {
        Some(t) => t.inputs_for(x, &p.parents),
        None if p.parents.is_empty() => Some(vec![x.clone()]),
        None => None,
    };
    let Some(args) = args else {
        return false;
    };
    let resolver: &dyn Resolver = match graph {
        Some(g) => g.program(),
        None => &NoFunctions,
    };
    match Evaluator::new(resolver, fuel).apply(&p.function, args.clone()) {
        Ok(y) => validator_accepts(&p.ev, &args, &y, resolver, fuel),
        Err(_) => false,
    }
}

/// Indices of the proposals whose EV holds on every sample, in order.
///
/// A sample on which the current graph itself fails to execute eliminates
/// every proposal.
pub fn critic_survivors(
    proposals: &[BuProposal],
    samples: &[Value],
    graph: Option<&ComputationGraph>,
    fuel: u64,
) -> Vec<usize> {
    let mut alive: Vec<usize> = (0..proposals.len()).collect();
    for x in samples {
        if alive.is_empty() {
            break;
        }
        let trace = match graph {
            Some(g) => match g.execute(x, fuel) {
                Ok(t) => Some(t),
                Err(_) => return Vec::new(),
            },
            None => None,
        };
        alive.retain(|&i| ev_holds(&proposals[i], x, trace.as_ref(), graph, fuel));
    }
    alive
}

/// The proposals with zero EV failures across `samples`, order preserved.
pub fn critic_filter(
    proposals: &[BuProposal],
    samples: &[Value],
    graph: Option<&ComputationGraph>,
    fuel: u64,
) -> Vec<BuProposal> {
    critic_survivors(proposals, samples, graph, fuel)
        .into_iter()
        .map(|i| proposals[i].clone())
        .collect()
}

pub trait BottomUpActor {
    /// Proposes possible next vertices for the graph built so far (`None` at
    /// the root).
    fn propose(&mut self, context: &Context, current: Option<&Decomposition>) -> Result<Vec<BuProposal>, ActorError>;

    /// Whether the actor believes `current` is a complete decomposition and
    /// wants the decomposition oracle consulted.
    fn claims_complete(&mut self, context: &Context, current: &Decomposition) -> bool;
}

pub trait DecompositionOracle {
    fn approve(&self, decomposition: &Decomposition) -> bool;
}

/// Approves a decomposition iff, on every one of a fixed set of fresh
/// samples where all vertex EVs pass, the last output equals the trusted
/// reference output.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    pub reference: FunctionDef,
    pub samples: Vec<Value>,
    pub fuel: u64,
}

impl ExactOracle {
    pub fn new(reference: FunctionDef, samples: Vec<Value>, fuel: u64) -> Self {
        ExactOracle {
            reference,
            samples,
            fuel,
        }
    }

    /// Draws `ceil(ln(1/delta) / (epsilon/2))` samples from the oracle
    /// stream of `task`, disjoint from the critic's stream.
    pub fn for_task(task: &TaskSpec, budget: &PrecisionBudget, seed: u64, fuel: u64) -> Self {
        let n = stats::sample_complexity_lemma(1, budget.epsilon / 2.0, budget.delta)
            .expect("budget parameters were validated");
        ExactOracle::new(task.ground_truth.clone(), task.samples(seed, STREAM_ORACLE, n), fuel)
    }
}

impl DecompositionOracle for ExactOracle {
    fn approve(&self, d: &Decomposition) -> bool {
        self.samples.iter().all(|x| {
            let Ok(trace) = d.graph.execute(x, self.fuel) else {
                return true;
            };
            if !d.all_evs_hold(&trace, self.fuel) {
                return true;
            }
            let expected = Evaluator::new(&NoFunctions, self.fuel).apply(&self.reference, vec![x.clone()]);
            matches!(expected, Ok(ref y) if Some(y) == trace.last())
        })
    }
}

struct Node {
    depth: usize,
    decomposition: Option<Decomposition>,
}

/// Runs the bottom-up search for `task`.
///
/// Samples `x_1..x_m` (with `m = budget.m`) are drawn once from the task's
/// critic stream and shared by every critic call. Returns `IDontKnow` when
/// the node budget runs out or no node within depth `k_max` is approved.
pub fn run_bottom_up(
    task: &TaskSpec,
    actor: &mut dyn BottomUpActor,
    oracle: &dyn DecompositionOracle,
    budget: &PrecisionBudget,
    config: &SearchConfig,
    seed: u64,
) -> Result<RunReport<Decomposition>, RunError> {
    let context = Context::new(task.description.clone());
    let samples = task.samples(seed, STREAM_CRITIC, budget.m);
    let k_max = budget.k_max as usize;
    let mut events = vec![SearchEvent::Started {
        mode: budget.mode,
        m: budget.m,
        seed,
    }];
    let mut frontier = Frontier::new(
        config.strategy,
        Node {
            depth: 0,
            decomposition: None,
        },
    );
    let mut visited = 0usize;
    let mut expanded = 0usize;
    let finish = |outcome, events, expanded| {
        Ok(RunReport {
            outcome,
            events,
            nodes_expanded: expanded,
        })
    };

    while let Some(node) = frontier.pop() {
        let id = visited;
        visited += 1;
        if let Some(d) = &node.decomposition {
            if actor.claims_complete(&context, d) {
                let approved = oracle.approve(d);
                events.push(SearchEvent::OracleVerdict {
                    node: id,
                    depth: node.depth,
                    approved,
                });
                if approved {
                    events.push(SearchEvent::Accepted {
                        node: id,
                        k: node.depth,
                    });
                    let certificate = Certificate::new(budget, node.depth, seed);
                    let result = node.decomposition.expect("checked above");
                    return finish(Outcome::Accepted { result, certificate }, events, expanded);
                }
            }
        }
        if node.depth >= k_max {
            events.push(SearchEvent::Pruned {
                node: id,
                depth: node.depth,
                reason: format!("depth limit k_max = {k_max}"),
            });
            continue;
        }
        if expanded >= config.node_budget {
            let reason = format!("node budget of {} exhausted", config.node_budget);
            events.push(SearchEvent::Exhausted { reason: reason.clone() });
            return finish(Outcome::IDontKnow { reason }, events, expanded);
        }
        expanded += 1;

        let proposals = actor.propose(&context, node.decomposition.as_ref())?;
        if proposals.len() as u64 > budget.class_size {
            return Err(ActorError::Oversized {
                size: proposals.len(),
                cap: budget.class_size,
            }
            .into());
        }
        let vertices = node.decomposition.as_ref().map_or(0, |d| d.graph.len());
        for p in &proposals {
            p.check(vertices)?;
        }
        let graph = node.decomposition.as_ref().map(|d| &d.graph);
        let survivors = critic_survivors(&proposals, &samples, graph, config.fuel);
        events.push(SearchEvent::NodeExpanded {
            node: id,
            depth: node.depth,
            label: NodeLabel::Graph { vertices },
            target: None,
            class_size: proposals.len(),
            survivors: survivors.clone(),
        });
        let children = survivors
            .iter()
            .map(|&i| {
                let p = &proposals[i];
                let decomposition = match &node.decomposition {
                    Some(d) => d.extend(p)?,
                    None => Decomposition::start(p)?,
                };
                Ok(Node {
                    depth: node.depth + 1,
                    decomposition: Some(decomposition),
                })
            })
            .collect::<Result<Vec<_>, ActorError>>()?;
        frontier.extend(children);
    }

    let reason = format!("search space exhausted within k_max = {k_max}");
    events.push(SearchEvent::Exhausted { reason: reason.clone() });
    finish(Outcome::IDontKnow { reason }, events, expanded)
}
