//! Bundled tasks and the actors that ship with them.

use std::collections::BTreeMap;

use crate::bottomup::{BottomUpActor, BuProposal, Decomposition};
use crate::dsl::{parse_function, FunctionDef};
use crate::search::{ActorError, Context};
use crate::topdown::{Declaration, TdNode, TdProposal, TopDownActor};

use super::task::{InputDistribution, TaskSpec};

pub(crate) fn def(text: &str) -> FunctionDef {
    parse_function(text).unwrap_or_else(|e| panic!("bundled function does not parse: {e}\n{text}"))
}

// Sorting.

const SORT_REFERENCE: &str = "
fn merge_sort(arr) =
  for i in 0 .. len(arr) with acc = [] do
    let v = arr[i] in
    let pos = for j in 0 .. len(acc) with p = 0 do if acc[j] <= v then j + 1 else p in
    acc[0:pos] ++ [v] ++ acc[pos:len(acc)]
";

const SORT_EV: &str = "
fn merge_sort_ev(arr, y) =
  len(y) == len(arr)
  && (for i in 1 .. len(y) with ok = true do ok && y[i - 1] <= y[i])
  && (for i in 0 .. len(arr) with ok = true do
        ok && (for j in 0 .. len(arr) with c = 0 do if arr[j] == arr[i] then c + 1 else c)
           == (for j in 0 .. len(y) with c = 0 do if y[j] == arr[i] then c + 1 else c))
";

/// Brute force: insertion sort of the concatenation.
const MERGE_RI: &str = "
fn merge(left, right) =
  let all = left ++ right in
  for i in 0 .. len(all) with acc = [] do
    let v = all[i] in
    let pos = for j in 0 .. len(acc) with p = 0 do if acc[j] <= v then j + 1 else p in
    acc[0:pos] ++ [v] ++ acc[pos:len(acc)]
";

/// Output is a permutation of the inputs, and sorted whenever both inputs are.
const MERGE_EV: &str = "
fn merge_ev(left, right, y) =
  let all = left ++ right in
  let sorted_left = for i in 1 .. len(left) with ok = true do ok && left[i - 1] <= left[i] in
  let sorted_right = for i in 1 .. len(right) with ok = true do ok && right[i - 1] <= right[i] in
  len(y) == len(all)
  && (!(sorted_left && sorted_right)
      || (for i in 1 .. len(y) with ok = true do ok && y[i - 1] <= y[i]))
  && (for i in 0 .. len(all) with ok = true do
        ok && (for j in 0 .. len(all) with c = 0 do if all[j] == all[i] then c + 1 else c)
           == (for j in 0 .. len(y) with c = 0 do if y[j] == all[i] then c + 1 else c))
";

/// Iterative merge sort; `LOOP_BOUND` is substituted for the pass condition.
const MERGE_SORT_TEMPLATE: &str = "
fn merge_sort(arr) =
  if len(arr) <= 1 then arr else
  let st = for level in 0 .. len(arr) with s = (arr, 1) do
    let a = s.0 in
    let size = s.1 in
    if size < LOOP_BOUND then
      (for p in 0 .. len(a) with b = a do
         let start = p * 2 * size in
         if start < len(b) - size then
           let mid = start + size in
           let stop = min(start + 2 * size, len(b)) in
           b[0:start] ++ merge(b[start:mid], b[mid:stop]) ++ b[stop:len(b)]
         else b,
       size * 2)
    else s
  in st.0
";

const MERGE_TEMPLATE: &str = "
fn merge(left, right) =
  let st = for t in 0 .. len(left) + len(right) with s = (0, 0, []) do
    let i = s.0 in
    let j = s.1 in
    if j >= len(right) || (i < len(left) && left[i] <= right[j])
    then (i + 1, j, append(s.2, left[i]))
    else (i, j + 1, append(s.2, right[j]))
  in RESULT
";

/// The merge sort with the pass condition `size < len(a)`.
pub fn merge_sort_impl() -> FunctionDef {
    def(&MERGE_SORT_TEMPLATE.replace("LOOP_BOUND", "len(a)"))
}

/// Literal transcription of the original listing, whose pass condition
/// `size < len(a) - 1` skips the final merge for some lengths (2, 3, 5, 9).
pub fn merge_sort_literal() -> FunctionDef {
    def(&MERGE_SORT_TEMPLATE.replace("LOOP_BOUND", "len(a) - 1"))
}

pub fn merge_impl() -> FunctionDef {
    def(&MERGE_TEMPLATE.replace("RESULT", "st.2"))
}

pub fn merge_declaration() -> Declaration {
    Declaration::new("merge", def(MERGE_EV), def(MERGE_RI))
}

pub fn merge_sort_task() -> TaskSpec {
    TaskSpec {
        name: "merge_sort".into(),
        distribution: InputDistribution::IntArray {
            max_len: 16,
            lo: 0,
            hi: 99,
        },
        ground_truth: def(SORT_REFERENCE),
        ev_for_g: def(SORT_EV),
        description: "Sort an array of integers in ascending order. \
                      merge_sort may rely on a helper merge(left, right) that merges two sorted lists."
            .into(),
    }
}

/// Actor for the sorting task: the two-function decomposition
/// `merge_sort -> merge` together with distractors.
pub fn merge_sort_actor() -> ScriptedTopDownActor {
    let with_merge = |implementation| TdProposal {
        target: "merge_sort".into(),
        implementation,
        helpers: vec![merge_declaration()],
    };
    let merge = |implementation| TdProposal {
        target: "merge".into(),
        implementation,
        helpers: vec![],
    };
    let root = vec![
        with_merge(merge_sort_literal()),
        TdProposal {
            target: "merge_sort".into(),
            implementation: def("fn merge_sort(arr) = arr"),
            helpers: vec![],
        },
        with_merge(merge_sort_impl()),
    ];
    let merges = vec![
        merge(def(&MERGE_TEMPLATE.replace("RESULT", "st.2[0:len(st.2) - 1]"))),
        merge(def("fn merge(left, right) = left ++ right")),
        merge(def(&format!(
            "fn merge(left, right) = if len(left) + len(right) == 16 then left ++ right else {}",
            crate::dsl::print_expr(&merge_impl().body)
        ))),
        merge(merge_impl()),
    ];
    ScriptedTopDownActor::new([("merge_sort", root), ("merge", merges)])
}

// Summation: implementable without helpers.

pub fn sum_list_task() -> TaskSpec {
    TaskSpec {
        name: "sum_list".into(),
        distribution: InputDistribution::IntArray {
            max_len: 10,
            lo: -50,
            hi: 50,
        },
        ground_truth: def("fn sum_list(xs) = for i in 0 .. len(xs) with s = 0 do s + xs[i]"),
        ev_for_g: def("fn sum_list_ev(xs, y) = y == (for i in 0 .. len(xs) with s = 0 do s + xs[i])"),
        description: "Return the sum of a list of integers.".into(),
    }
}

pub fn sum_list_actor() -> ScriptedTopDownActor {
    let p = |text: &str| TdProposal {
        target: "sum_list".into(),
        implementation: def(text),
        helpers: vec![],
    };
    ScriptedTopDownActor::new([(
        "sum_list",
        vec![
            p("fn sum_list(xs) = for i in 1 .. len(xs) with s = xs[0] do s + xs[i]"),
            p("fn sum_list(xs) = for i in 1 .. len(xs) with s = 0 do s + xs[i]"),
            p("fn sum_list(xs) = for i in 0 .. len(xs) with s = 0 do s + xs[len(xs) - 1 - i]"),
        ],
    )])
}

// Arithmetic pipeline g(x) = 2(x + 1) + 3.

pub fn arith_pipeline_task() -> TaskSpec {
    TaskSpec {
        name: "arith_pipeline".into(),
        distribution: InputDistribution::UniformInt { lo: -1000, hi: 1000 },
        ground_truth: def("fn pipeline(x) = 2 * (x + 1) + 3"),
        ev_for_g: def("fn pipeline_ev(x, y) = y == 2 * (x + 1) + 3"),
        description: "Compute 2 * (x + 1) + 3 in three steps: increment, double, add three.".into(),
    }
}

/// EVs of the three planned steps.
pub fn arith_pipeline_plan() -> Vec<FunctionDef> {
    vec![
        def("fn add_one_ev(a, y) = y == a + 1"),
        def("fn double_ev(a, y) = y == 2 * a"),
        def("fn add_three_ev(a, y) = y == a + 3"),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOp {
    Add,
    Sub,
    Mul,
    Max,
}

impl StepOp {
    pub const ALL: [StepOp; 4] = [StepOp::Add, StepOp::Sub, StepOp::Mul, StepOp::Max];

    fn function(self, c: i64) -> FunctionDef {
        match self {
            StepOp::Add => def(&format!("fn add_{c}(a) = a + {c}")),
            StepOp::Sub => def(&format!("fn sub_{c}(a) = a - {c}")),
            StepOp::Mul => def(&format!("fn mul_{c}(a) = a * {c}")),
            StepOp::Max => def(&format!("fn max_{c}(a) = max(a, {c})")),
        }
    }
}

/// Enumerates `op(a, c)` for every op and constant as a chain step. Step `i`
/// takes vertex `i - 1` as its only parent and carries the `i`-th plan EV.
/// It claims completion at every node, leaving the verdict to the oracle.
#[derive(Debug, Clone)]
pub struct EnumerativeActor {
    pub plan: Vec<FunctionDef>,
    pub constants: std::ops::Range<i64>,
}

impl EnumerativeActor {
    pub fn new(plan: Vec<FunctionDef>) -> Self {
        EnumerativeActor { plan, constants: 0..50 }
    }

    pub fn class_size(&self) -> usize {
        StepOp::ALL.len() * self.constants.clone().count()
    }
}

impl BottomUpActor for EnumerativeActor {
    fn propose(&mut self, _context: &Context, current: Option<&Decomposition>) -> Result<Vec<BuProposal>, ActorError> {
        let depth = current.map_or(0, |d| d.graph.len());
        let Some(ev) = self.plan.get(depth) else {
            return Ok(vec![]);
        };
        let parents = if depth == 0 { vec![] } else { vec![depth] };
        Ok(StepOp::ALL
            .iter()
            .flat_map(|op| self.constants.clone().map(move |c| op.function(c)))
            .map(|function| BuProposal {
                function,
                parents: parents.clone(),
                ev: ev.clone(),
            })
            .collect())
    }

    fn claims_complete(&mut self, _context: &Context, _current: &Decomposition) -> bool {
        true
    }
}

/// Returns a fixed class for each depth and claims completion at every node.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBottomUpActor {
    pub steps: Vec<Vec<BuProposal>>,
}

impl BottomUpActor for ScriptedBottomUpActor {
    fn propose(&mut self, _context: &Context, current: Option<&Decomposition>) -> Result<Vec<BuProposal>, ActorError> {
        let depth = current.map_or(0, |d| d.graph.len());
        Ok(self.steps.get(depth).cloned().unwrap_or_default())
    }

    fn claims_complete(&mut self, _context: &Context, _current: &Decomposition) -> bool {
        true
    }
}

/// The correct chain for the arithmetic pipeline, each step preceded by a
/// distractor.
pub fn arith_pipeline_scripted_actor() -> ScriptedBottomUpActor {
    let plan = arith_pipeline_plan();
    let step = |texts: [&str; 2], i: usize| {
        texts
            .iter()
            .map(|t| BuProposal {
                function: def(t),
                parents: if i == 0 { vec![] } else { vec![i] },
                ev: plan[i].clone(),
            })
            .collect()
    };
    ScriptedBottomUpActor {
        steps: vec![
            step(["fn inc(a) = max(a, 1)", "fn inc(a) = a + 1"], 0),
            step(["fn double(a) = a * a", "fn double(a) = a + a"], 1),
            step(["fn add_three(a) = a + 3 * (a % 2)", "fn add_three(a) = a + 3"], 2),
        ],
    }
}

/// Returns a fixed class for each target name.
#[derive(Debug, Clone, Default)]
pub struct ScriptedTopDownActor {
    pub by_target: BTreeMap<String, Vec<TdProposal>>,
}

impl ScriptedTopDownActor {
    pub fn new<'a>(classes: impl IntoIterator<Item = (&'a str, Vec<TdProposal>)>) -> Self {
        ScriptedTopDownActor {
            by_target: classes.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    /// Largest class this actor ever returns.
    pub fn class_size(&self) -> usize {
        self.by_target.values().map(Vec::len).max().unwrap_or(0)
    }
}

impl TopDownActor for ScriptedTopDownActor {
    fn propose(&mut self, _context: &Context, _node: &TdNode, target: &str) -> Result<Vec<TdProposal>, ActorError> {
        Ok(self.by_target.get(target).cloned().unwrap_or_default())
    }
}

/// A bundled task by name.
pub fn bundled_task(name: &str) -> Option<TaskSpec> {
    match name {
        "merge_sort" => Some(merge_sort_task()),
        "sum_list" => Some(sum_list_task()),
        "arith_pipeline" => Some(arith_pipeline_task()),
        _ => None,
    }
}

pub const BUNDLED_TASKS: [&str; 3] = ["merge_sort", "sum_list", "arith_pipeline"];
