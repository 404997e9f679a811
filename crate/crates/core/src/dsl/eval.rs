//! Fuel-bounded evaluator.
//!
//! Every expression node costs one unit of fuel, and operations that build
//! lists additionally cost the length of the list they produce. Since loops
//! have a fixed trip count and the language has no recursion, evaluation
//! always halts; fuel bounds how long that takes.

use thiserror::Error;

use super::ast::{BinOp, Builtin, Expr, FunctionDef, Program, UnaryOp};
use super::value::Value;

pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Nested user-function calls allowed before evaluation is aborted.
pub const MAX_CALL_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("fuel exhausted")]
    FuelExhausted,
    #[error("type error: {0}")]
    Type(String),
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: i64, len: usize },
    #[error("integer overflow")]
    Overflow,
    #[error("division by zero")]
    DivisionByZero,
    #[error("call to unimplemented function `{0}`")]
    Unimplemented(String),
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("call depth limit exceeded")]
    DepthLimit,
}

/// Stable category names for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalErrorKind {
    FuelExhausted,
    Type,
    IndexOutOfRange,
    Overflow,
    DivisionByZero,
    Unimplemented,
    Arity,
    UnboundVariable,
    DepthLimit,
}

impl EvalError {
    pub fn kind(&self) -> EvalErrorKind {
        match self {
            EvalError::FuelExhausted => EvalErrorKind::FuelExhausted,
            EvalError::Type(_) => EvalErrorKind::Type,
            EvalError::IndexOutOfRange { .. } => EvalErrorKind::IndexOutOfRange,
            EvalError::Overflow => EvalErrorKind::Overflow,
            EvalError::DivisionByZero => EvalErrorKind::DivisionByZero,
            EvalError::Unimplemented(_) => EvalErrorKind::Unimplemented,
            EvalError::Arity { .. } => EvalErrorKind::Arity,
            EvalError::UnboundVariable(_) => EvalErrorKind::UnboundVariable,
            EvalError::DepthLimit => EvalErrorKind::DepthLimit,
        }
    }
}

/// Supplies definitions for user-function calls.
///
/// `enter` and `exit` bracket every successful call; on error `exit` is not
/// invoked, so a resolver tracking a call stack sees the failing path.
pub trait Resolver {
    fn resolve(&self, name: &str) -> Option<&FunctionDef>;

    fn enter(&self, _name: &str, _args: &[Value]) {}

    fn exit(&self, _name: &str) {}
}

impl Resolver for Program {
    fn resolve(&self, name: &str) -> Option<&FunctionDef> {
        self.get(name)
    }
}

/// Resolves nothing; for self-contained definitions.
pub struct NoFunctions;

impl Resolver for NoFunctions {
    fn resolve(&self, _name: &str) -> Option<&FunctionDef> {
        None
    }
}

pub struct Evaluator<'r> {
    resolver: &'r dyn Resolver,
    fuel: u64,
    depth: usize,
}

type Env<'e> = Vec<(&'e str, Value)>;

fn type_error<T>(what: &str, got: &Value) -> Result<T, EvalError> {
    Err(EvalError::Type(format!("{what}, got {}", got.kind())))
}

fn expect_int(v: &Value, ctx: &str) -> Result<i64, EvalError> {
    match v {
        Value::Int(n) => Ok(*n),
        other => type_error(&format!("{ctx} expects int"), other),
    }
}

fn expect_bool(v: &Value, ctx: &str) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => type_error(&format!("{ctx} expects bool"), other),
    }
}

fn index_of(list: &[Value], index: i64) -> Result<&Value, EvalError> {
    usize::try_from(index)
        .ok()
        .and_then(|i| list.get(i))
        .ok_or(EvalError::IndexOutOfRange { index, len: list.len() })
}

fn slice_of(list: &[Value], lo: i64, hi: i64) -> Result<&[Value], EvalError> {
    let len = list.len();
    let check = |i: i64| {
        usize::try_from(i)
            .ok()
            .filter(|&u| u <= len)
            .ok_or(EvalError::IndexOutOfRange { index: i, len })
    };
    let (lo_u, hi_u) = (check(lo)?, check(hi)?);
    if lo_u > hi_u {
        return Err(EvalError::IndexOutOfRange { index: lo, len });
    }
    Ok(&list[lo_u..hi_u])
}

fn lookup<'a>(env: &'a Env<'_>, name: &str) -> Result<&'a Value, EvalError> {
    env.iter()
        .rev()
        .find(|(n, _)| *n == name)
        .map(|(_, v)| v)
        .ok_or_else(|| EvalError::UnboundVariable(name.to_string()))
}

impl<'r> Evaluator<'r> {
    pub fn new(resolver: &'r dyn Resolver, fuel: u64) -> Self {
        Evaluator {
            resolver,
            fuel,
            depth: 0,
        }
    }

    pub fn remaining_fuel(&self) -> u64 {
        self.fuel
    }

    fn charge(&mut self, units: u64) -> Result<(), EvalError> {
        if self.fuel < units {
            self.fuel = 0;
            return Err(EvalError::FuelExhausted);
        }
        self.fuel -= units;
        Ok(())
    }

    /// Calls a function by name through the resolver.
    pub fn call(&mut self, name: &str, args: Vec<Value>) -> Result<Value, EvalError> {
        let resolver = self.resolver;
        let def = resolver
            .resolve(name)
            .ok_or_else(|| EvalError::Unimplemented(name.to_string()))?;
        if def.arity() != args.len() {
            return Err(EvalError::Arity {
                name: name.to_string(),
                expected: def.arity(),
                got: args.len(),
            });
        }
        self.charge(1)?;
        if self.depth >= MAX_CALL_DEPTH {
            return Err(EvalError::DepthLimit);
        }
        resolver.enter(name, &args);
        self.depth += 1;
        let result = self.apply(def, args);
        self.depth -= 1;
        if result.is_ok() {
            resolver.exit(name);
        }
        result
    }

    /// Applies a definition directly, bypassing name resolution for the
    /// outermost call. Nested calls still go through the resolver.
    pub fn apply(&mut self, def: &FunctionDef, args: Vec<Value>) -> Result<Value, EvalError> {
        if def.arity() != args.len() {
            return Err(EvalError::Arity {
                name: def.name.clone(),
                expected: def.arity(),
                got: args.len(),
            });
        }
        let mut env: Env<'_> = def.params.iter().map(String::as_str).zip(args).collect();
        self.eval(&def.body, &mut env)
    }

    /// Evaluates an expression under the given variable bindings.
    pub fn eval_expr<'e>(&mut self, e: &'e Expr, bindings: &[(&'e str, Value)]) -> Result<Value, EvalError> {
        let mut env: Env<'e> = bindings.to_vec();
        self.eval(e, &mut env)
    }

    fn eval<'e>(&mut self, e: &'e Expr, env: &mut Env<'e>) -> Result<Value, EvalError> {
        self.charge(1)?;
        match e {
            Expr::Int(n) => Ok(Value::Int(*n)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Var(name) => lookup(env, name).cloned(),
            Expr::List(items) => {
                let values = self.eval_all(items, env)?;
                self.charge(values.len() as u64)?;
                Ok(Value::List(values))
            }
            Expr::Tuple(items) => Ok(Value::Tuple(self.eval_all(items, env)?)),
            Expr::Let { name, value, body } => {
                let v = self.eval(value, env)?;
                env.push((name, v));
                let r = self.eval(body, env);
                env.pop();
                r
            }
            Expr::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = self.eval(cond, env)?;
                if expect_bool(&c, "if")? {
                    self.eval(then_branch, env)
                } else {
                    self.eval(else_branch, env)
                }
            }
            Expr::Unary(op, inner) => {
                let v = self.eval(inner, env)?;
                match op {
                    UnaryOp::Neg => expect_int(&v, "negation")?
                        .checked_neg()
                        .map(Value::Int)
                        .ok_or(EvalError::Overflow),
                    UnaryOp::Not => Ok(Value::Bool(!expect_bool(&v, "`!`")?)),
                }
            }
            Expr::Binary(op, lhs, rhs) => self.binary(*op, lhs, rhs, env),
            Expr::Index(base, index) => {
                let i = self.eval(index, env)?;
                let i = expect_int(&i, "indexing")?;
                self.with_value(base, env, |v| match v {
                    Value::List(xs) => index_of(xs, i).cloned(),
                    other => type_error("indexing expects list", other),
                })
            }
            Expr::Slice { base, lo, hi } => {
                let lo = self.eval(lo, env)?;
                let lo = expect_int(&lo, "slicing")?;
                let hi = self.eval(hi, env)?;
                let hi = expect_int(&hi, "slicing")?;
                let out = self.with_value(base, env, |v| match v {
                    Value::List(xs) => slice_of(xs, lo, hi).map(<[Value]>::to_vec),
                    other => type_error("slicing expects list", other),
                })?;
                self.charge(out.len() as u64)?;
                Ok(Value::List(out))
            }
            Expr::Project(base, field) => self.with_value(base, env, |v| match v {
                Value::Tuple(xs) => xs.get(*field).cloned().ok_or(EvalError::IndexOutOfRange {
                    index: *field as i64,
                    len: xs.len(),
                }),
                other => type_error("projection expects tuple", other),
            }),
            Expr::BuiltinCall(b, args) => self.builtin(*b, args, env),
            Expr::Call(name, args) => {
                let values = self.eval_all(args, env)?;
                self.call(name, values)
            }
            Expr::For {
                var,
                lo,
                hi,
                acc,
                init,
                body,
            } => {
                let lo = self.eval(lo, env)?;
                let lo = expect_int(&lo, "for range")?;
                let hi = self.eval(hi, env)?;
                let hi = expect_int(&hi, "for range")?;
                let mut state = self.eval(init, env)?;
                let mut i = lo;
                while i < hi {
                    self.charge(1)?;
                    env.push((var, Value::Int(i)));
                    env.push((acc, state));
                    let r = self.eval(body, env);
                    env.pop();
                    env.pop();
                    state = r?;
                    i += 1;
                }
                Ok(state)
            }
        }
    }

    fn eval_all<'e>(&mut self, items: &'e [Expr], env: &mut Env<'e>) -> Result<Vec<Value>, EvalError> {
        items.iter().map(|x| self.eval(x, env)).collect()
    }

    /// Runs `f` on the value of `e`, borrowing variables instead of cloning.
    fn with_value<'e, T>(
        &mut self,
        e: &'e Expr,
        env: &mut Env<'e>,
        f: impl FnOnce(&Value) -> Result<T, EvalError>,
    ) -> Result<T, EvalError> {
        if let Expr::Var(name) = e {
            self.charge(1)?;
            f(lookup(env, name)?)
        } else {
            let v = self.eval(e, env)?;
            f(&v)
        }
    }

    fn binary<'e>(&mut self, op: BinOp, lhs: &'e Expr, rhs: &'e Expr, env: &mut Env<'e>) -> Result<Value, EvalError> {
        match op {
            BinOp::And | BinOp::Or => {
                let l = self.eval(lhs, env)?;
                let l = expect_bool(&l, op.symbol())?;
                if (op == BinOp::And && !l) || (op == BinOp::Or && l) {
                    return Ok(Value::Bool(l));
                }
                let r = self.eval(rhs, env)?;
                Ok(Value::Bool(expect_bool(&r, op.symbol())?))
            }
            _ => {
                let l = self.eval(lhs, env)?;
                let r = self.eval(rhs, env)?;
                match op {
                    BinOp::Eq => Ok(Value::Bool(l == r)),
                    BinOp::Ne => Ok(Value::Bool(l != r)),
                    BinOp::Concat => match (l, r) {
                        (Value::List(mut a), Value::List(b)) => {
                            a.extend(b);
                            self.charge(a.len() as u64)?;
                            Ok(Value::List(a))
                        }
                        (a, b) => Err(EvalError::Type(format!(
                            "`++` expects lists, got {} and {}",
                            a.kind(),
                            b.kind()
                        ))),
                    },
                    _ => {
                        let a = expect_int(&l, op.symbol())?;
                        let b = expect_int(&r, op.symbol())?;
                        arith(op, a, b)
                    }
                }
            }
        }
    }

    fn builtin<'e>(&mut self, b: Builtin, args: &'e [Expr], env: &mut Env<'e>) -> Result<Value, EvalError> {
        if args.len() != b.arity() {
            return Err(EvalError::Arity {
                name: b.name().to_string(),
                expected: b.arity(),
                got: args.len(),
            });
        }
        match b {
            Builtin::Len => self.with_value(&args[0], env, |v| match v {
                Value::List(xs) => Ok(Value::Int(xs.len() as i64)),
                Value::Tuple(xs) => Ok(Value::Int(xs.len() as i64)),
                other => type_error("len expects list or tuple", other),
            }),
            Builtin::Append => {
                let list = self.eval(&args[0], env)?;
                let item = self.eval(&args[1], env)?;
                match list {
                    Value::List(mut xs) => {
                        xs.push(item);
                        self.charge(xs.len() as u64)?;
                        Ok(Value::List(xs))
                    }
                    other => type_error("append expects list", &other),
                }
            }
            Builtin::Min | Builtin::Max => {
                let a = self.eval(&args[0], env)?;
                let a = expect_int(&a, b.name())?;
                let c = self.eval(&args[1], env)?;
                let c = expect_int(&c, b.name())?;
                Ok(Value::Int(if b == Builtin::Min { a.min(c) } else { a.max(c) }))
            }
            Builtin::Abs => {
                let a = self.eval(&args[0], env)?;
                expect_int(&a, "abs")?
                    .checked_abs()
                    .map(Value::Int)
                    .ok_or(EvalError::Overflow)
            }
        }
    }
}

fn arith(op: BinOp, a: i64, b: i64) -> Result<Value, EvalError> {
    let int = |r: Option<i64>| r.map(Value::Int).ok_or(EvalError::Overflow);
    match op {
        BinOp::Add => int(a.checked_add(b)),
        BinOp::Sub => int(a.checked_sub(b)),
        BinOp::Mul => int(a.checked_mul(b)),
        BinOp::Div | BinOp::Mod if b == 0 => Err(EvalError::DivisionByZero),
        // truncating division, like the host integer semantics
        BinOp::Div => int(a.checked_div(b)),
        BinOp::Mod => int(a.checked_rem(b)),
        BinOp::Lt => Ok(Value::Bool(a < b)),
        BinOp::Le => Ok(Value::Bool(a <= b)),
        BinOp::Gt => Ok(Value::Bool(a > b)),
        BinOp::Ge => Ok(Value::Bool(a >= b)),
        BinOp::And | BinOp::Or | BinOp::Eq | BinOp::Ne | BinOp::Concat => {
            unreachable!("handled by caller")
        }
    }
}

/// Evaluates `name` from `program` on `args` with a fresh fuel budget.
pub fn eval_function(program: &Program, name: &str, args: Vec<Value>, fuel: u64) -> Result<Value, EvalError> {
    Evaluator::new(program, fuel).call(name, args)
}

/// Evaluates a closed expression (literal syntax for values).
pub fn eval_closed(e: &Expr, fuel: u64) -> Result<Value, EvalError> {
    Evaluator::new(&NoFunctions, fuel).eval_expr(e, &[])
}
