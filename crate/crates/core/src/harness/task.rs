use rand::Rng;
use serde::{Deserialize, Serialize};

use super::seed::stream_rng;
use crate::dsl::{EvalError, Evaluator, FunctionDef, NoFunctions, Value};

/// Input distribution `D` of a task. Bounds are inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputDistribution {
    UniformInt { lo: i64, hi: i64 },
    IntArray { max_len: usize, lo: i64, hi: i64 },
}

impl InputDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match *self {
            InputDistribution::UniformInt { lo, hi } => Value::Int(rng.gen_range(lo..=hi)),
            InputDistribution::IntArray { max_len, lo, hi } => {
                let n = rng.gen_range(0..=max_len);
                Value::int_list((0..n).map(|_| rng.gen_range(lo..=hi)))
            }
        }
    }
}

/// A target function `g` with its input distribution, a trusted reference
/// implementation, and an Example Validator `ev(x, y)` for its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub name: String,
    pub distribution: InputDistribution,
    pub ground_truth: FunctionDef,
    pub ev_for_g: FunctionDef,
    pub description: String,
}

impl TaskSpec {
    /// Sample `index` of `stream`; a pure function of `(seed, stream, index)`.
    pub fn sample(&self, seed: u64, stream: u64, index: u64) -> Value {
        self.distribution.sample(&mut stream_rng(seed, &[stream, index]))
    }

    pub fn samples(&self, seed: u64, stream: u64, n: u64) -> Vec<Value> {
        (0..n).map(|i| self.sample(seed, stream, i)).collect()
    }

    pub fn reference_output(&self, x: &Value, fuel: u64) -> Result<Value, EvalError> {
        Evaluator::new(&NoFunctions, fuel).apply(&self.ground_truth, vec![x.clone()])
    }

    /// Name of the function being synthesized.
    pub fn target_name(&self) -> &str {
        &self.ground_truth.name
    }
}
