//! The expression language in which task functions, Example Validators, and
//! Reference Implementations are written.

#[cfg(any(test, feature = "testing"))]
pub mod arbitrary;
mod ast;
mod eval;
mod parser;
mod printer;
mod value;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use ast::{BinOp, Builtin, Expr, FunctionDef, Program, UnaryOp};
pub use eval::{
    eval_closed, eval_function, EvalError, EvalErrorKind, Evaluator, NoFunctions, Resolver, DEFAULT_FUEL,
    MAX_CALL_DEPTH,
};
pub use parser::{parse_expr, parse_function, parse_program, ParseError, KEYWORDS};
pub use printer::{print_expr, print_function, print_program};
pub use value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("`{caller}` calls unknown function `{callee}`")]
    UnknownFunction { caller: String, callee: String },
    #[error("`{caller}` calls `{callee}` with {got} argument(s), expected {expected}")]
    Arity {
        caller: String,
        callee: String,
        expected: usize,
        got: usize,
    },
    #[error("recursive call chain: {}", .0.join(" -> "))]
    Recursion(Vec<String>),
}

impl Program {
    /// Checks that every call resolves to a function of this program with the
    /// right arity and that the call graph is acyclic.
    pub fn validate(&self) -> Result<(), ValidationError> {
        self.validate_with(&BTreeMap::new())
    }

    /// Like [`Program::validate`], additionally accepting calls to the
    /// declared-but-unimplemented names in `externs` (name to arity).
    pub fn validate_with(&self, externs: &BTreeMap<String, usize>) -> Result<(), ValidationError> {
        for def in self.functions.values() {
            for (callee, got) in def.callees() {
                let expected = match (self.get(callee), externs.get(callee)) {
                    (Some(f), _) => f.arity(),
                    (None, Some(&n)) => n,
                    (None, None) => {
                        return Err(ValidationError::UnknownFunction {
                            caller: def.name.clone(),
                            callee: callee.to_string(),
                        })
                    }
                };
                if expected != got {
                    return Err(ValidationError::Arity {
                        caller: def.name.clone(),
                        callee: callee.to_string(),
                        expected,
                        got,
                    });
                }
            }
        }
        match self.find_cycle() {
            Some(cycle) => Err(ValidationError::Recursion(cycle)),
            None => Ok(()),
        }
    }

    /// Returns a call cycle among this program's own functions, if any.
    pub fn find_cycle(&self) -> Option<Vec<String>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Active,
            Done,
        }
        fn visit<'a>(
            p: &'a Program,
            name: &'a str,
            marks: &mut BTreeMap<&'a str, Mark>,
            path: &mut Vec<&'a str>,
        ) -> Option<Vec<String>> {
            match marks.get(name) {
                Some(Mark::Done) => return None,
                Some(Mark::Active) => {
                    let start = path.iter().position(|n| *n == name).unwrap_or(0);
                    let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(name.to_string());
                    return Some(cycle);
                }
                None => {}
            }
            marks.insert(name, Mark::Active);
            path.push(name);
            if let Some(def) = p.get(name) {
                for (callee, _) in def.callees() {
                    if p.contains(callee) {
                        if let Some(c) = visit(p, callee, marks, path) {
                            return Some(c);
                        }
                    }
                }
            }
            path.pop();
            marks.insert(name, Mark::Done);
            None
        }
        let mut marks = BTreeMap::new();
        for name in self.functions.keys() {
            if let Some(c) = visit(self, name, &mut marks, &mut Vec::new()) {
                return Some(c);
            }
        }
        None
    }

    /// Names called anywhere in the program that it does not define.
    pub fn free_calls(&self) -> BTreeSet<String> {
        self.functions
            .values()
            .flat_map(|d| d.callees())
            .filter(|(n, _)| !self.contains(n))
            .map(|(n, _)| n.to_string())
            .collect()
    }
}

/// Parses a literal value such as `[1, 2, (3, true)]`.
pub fn parse_value(text: &str) -> Result<Value, String> {
    let e = parse_expr(text).map_err(|e| e.to_string())?;
    eval_closed(&e, DEFAULT_FUEL).map_err(|e| e.to_string())
}
