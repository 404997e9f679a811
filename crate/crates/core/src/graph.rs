//! Computation graphs: a topologically ordered DAG whose vertex `i` applies
//! `f_i` to the outputs of its parents, with vertex 1 applied to the input.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{self, EvalError, FunctionDef, Program, Value};

/// One vertex. Its 1-based index is its position in the graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    #[serde(rename = "fn")]
    pub fn_name: String,
    /// Ordered parent indices; argument order of `fn_name` follows it.
    pub parents: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphViolation {
    #[error("graph has no vertices")]
    Empty,
    #[error("vertex 1 must have no parents")]
    FirstHasParents,
    #[error("vertex {vertex}: only vertex 1 may be sourceless")]
    Sourceless { vertex: usize },
    #[error("vertex {vertex}: parent {parent} not < index")]
    ParentNotBefore { vertex: usize, parent: usize },
    #[error("vertex {vertex}: duplicate parent {parent}")]
    DuplicateParent { vertex: usize, parent: usize },
    #[error("vertex {vertex}: unknown function `{name}`")]
    UnknownFunction { vertex: usize, name: String },
    #[error("vertex {vertex}: `{name}` takes {arity} argument(s) but has {inputs} input(s)")]
    Arity {
        vertex: usize,
        name: String,
        arity: usize,
        inputs: usize,
    },
    #[error("invalid program: {0}")]
    Program(#[from] dsl::ValidationError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("vertex {vertex}: {source}")]
pub struct VertexError {
    pub vertex: usize,
    #[source]
    pub source: EvalError,
}

/// Per-vertex inputs `a_i(x)` and outputs `o_i(x)`, both indexed from 0 for
/// vertex 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub inputs: Vec<Vec<Value>>,
    pub outputs: Vec<Value>,
}

impl ExecutionTrace {
    /// Output of the 1-based vertex `index`.
    pub fn output(&self, index: usize) -> Option<&Value> {
        index.checked_sub(1).and_then(|i| self.outputs.get(i))
    }

    pub fn last(&self) -> Option<&Value> {
        self.outputs.last()
    }

    /// The argument tuple a new vertex with these parents would receive on
    /// the same input; `x` itself when `parents` is empty.
    pub fn inputs_for(&self, x: &Value, parents: &[usize]) -> Option<Vec<Value>> {
        if parents.is_empty() {
            return Some(vec![x.clone()]);
        }
        parents.iter().map(|&j| self.output(j).cloned()).collect()
    }
}

/// A computation graph. Cloning is cheap and `append_*` returns a new graph,
/// leaving the original untouched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComputationGraph {
    program: Arc<Program>,
    vertices: Arc<Vec<Vertex>>,
}

impl ComputationGraph {
    /// A single-vertex graph computing `fn_name(x)`.
    pub fn single(program: Program, fn_name: &str) -> Result<Self, GraphViolation> {
        let g = Self::from_parts(
            program,
            vec![Vertex {
                fn_name: fn_name.to_string(),
                parents: Vec::new(),
            }],
        );
        g.validate()?;
        Ok(g)
    }

    /// Assembles a graph without checking it; see [`ComputationGraph::validate`].
    pub fn from_parts(program: Program, vertices: Vec<Vertex>) -> Self {
        ComputationGraph {
            program: Arc::new(program),
            vertices: Arc::new(vertices),
        }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Reports the first violated structural invariant.
    pub fn validate(&self) -> Result<(), GraphViolation> {
        if self.vertices.is_empty() {
            return Err(GraphViolation::Empty);
        }
        for (i, v) in self.vertices.iter().enumerate() {
            let index = i + 1;
            if index == 1 && !v.parents.is_empty() {
                return Err(GraphViolation::FirstHasParents);
            }
            if index > 1 && v.parents.is_empty() {
                return Err(GraphViolation::Sourceless { vertex: index });
            }
            for (pos, &parent) in v.parents.iter().enumerate() {
                if parent == 0 || parent >= index {
                    return Err(GraphViolation::ParentNotBefore { vertex: index, parent });
                }
                if v.parents[..pos].contains(&parent) {
                    return Err(GraphViolation::DuplicateParent { vertex: index, parent });
                }
            }
            let def = self
                .program
                .get(&v.fn_name)
                .ok_or_else(|| GraphViolation::UnknownFunction {
                    vertex: index,
                    name: v.fn_name.clone(),
                })?;
            let inputs = if index == 1 { 1 } else { v.parents.len() };
            if def.arity() != inputs {
                return Err(GraphViolation::Arity {
                    vertex: index,
                    name: v.fn_name.clone(),
                    arity: def.arity(),
                    inputs,
                });
            }
        }
        self.program.validate()?;
        Ok(())
    }

    /// Appends a vertex applying an existing program function to `parents`.
    pub fn append_vertex(&self, fn_name: &str, parents: &[usize]) -> Result<Self, GraphViolation> {
        let index = self.vertices.len() + 1;
        if parents.is_empty() {
            return Err(GraphViolation::Sourceless { vertex: index });
        }
        let mut vertices = (*self.vertices).clone();
        vertices.push(Vertex {
            fn_name: fn_name.to_string(),
            parents: parents.to_vec(),
        });
        let g = ComputationGraph {
            program: Arc::clone(&self.program),
            vertices: Arc::new(vertices),
        };
        g.validate()?;
        Ok(g)
    }

    /// Adds `def` to the program and appends a vertex applying it. If the name
    /// is already taken by a different definition it is renamed `v{index}_{name}`.
    pub fn append_function(&self, def: &FunctionDef, parents: &[usize]) -> Result<Self, GraphViolation> {
        let index = self.vertices.len() + 1;
        let def = self.fresh_def(def, index);
        let mut program = (*self.program).clone();
        let name = def.name.clone();
        program.insert(def);
        let g = ComputationGraph {
            program: Arc::new(program),
            vertices: Arc::clone(&self.vertices),
        };
        g.append_vertex(&name, parents)
    }

    /// Starts a graph from a vertex-1 definition.
    pub fn start(def: &FunctionDef) -> Result<Self, GraphViolation> {
        Self::single(Program::new().with(def.clone()), &def.name)
    }

    fn fresh_def(&self, def: &FunctionDef, index: usize) -> FunctionDef {
        match self.program.get(&def.name) {
            Some(existing) if existing != def => FunctionDef {
                name: format!("v{index}_{}", def.name),
                ..def.clone()
            },
            _ => def.clone(),
        }
    }

    /// Runs the graph on `x`. Each vertex gets its own `fuel` budget.
    pub fn execute(&self, x: &Value, fuel: u64) -> Result<ExecutionTrace, VertexError> {
        let mut trace = ExecutionTrace {
            inputs: Vec::with_capacity(self.vertices.len()),
            outputs: Vec::with_capacity(self.vertices.len()),
        };
        for (i, v) in self.vertices.iter().enumerate() {
            let vertex = i + 1;
            let args = trace.inputs_for(x, &v.parents).ok_or(VertexError {
                vertex,
                source: EvalError::Type("parent index out of range".into()),
            })?;
            let out = dsl::eval_function(&self.program, &v.fn_name, args.clone(), fuel)
                .map_err(|source| VertexError { vertex, source })?;
            trace.inputs.push(args);
            trace.outputs.push(out);
        }
        Ok(trace)
    }

    /// Output of the last vertex on `x`.
    pub fn run(&self, x: &Value, fuel: u64) -> Result<Value, VertexError> {
        let mut trace = self.execute(x, fuel)?;
        Ok(trace.outputs.pop().expect("validated graphs are non-empty"))
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            vertices: (*self.vertices).clone(),
            program: dsl::print_program(&self.program),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("graph documents serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphDocumentError> {
        let doc: GraphDocument = serde_json::from_str(text)?;
        doc.into_graph()
    }
}

/// JSON form of a graph: `{"vertices": [{"fn", "parents"}], "program": "<dsl text>"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub vertices: Vec<Vertex>,
    pub program: String,
}

#[derive(Debug, Error)]
pub enum GraphDocumentError {
    #[error("malformed graph JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("graph program: {0}")]
    Parse(#[from] dsl::ParseError),
    #[error(transparent)]
    Invalid(#[from] GraphViolation),
}

impl GraphDocument {
    pub fn into_graph(self) -> Result<ComputationGraph, GraphDocumentError> {
        let program = dsl::parse_program(&self.program)?;
        let g = ComputationGraph::from_parts(program, self.vertices);
        g.validate()?;
        Ok(g)
    }
}
