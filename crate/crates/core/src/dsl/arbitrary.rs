//! Random generation of valid programs and inputs for property tests.
//!
//! Generated programs are well scoped, call only previously generated
//! functions (so the call graph is acyclic), and are well typed modulo
//! runtime errors such as division by zero or out-of-range indexing.

use rand::seq::SliceRandom;
use rand::Rng;

use super::ast::{BinOp, Builtin, Expr, FunctionDef, Program, UnaryOp};
use super::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Int,
    Bool,
    IntList,
}

#[derive(Debug, Clone)]
struct Sig {
    name: String,
    params: Vec<Ty>,
    ret: Ty,
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    scope: Vec<(String, Ty)>,
    sigs: Vec<Sig>,
    fresh: usize,
}

const NAMES: [&str; 6] = ["a", "b", "xs", "acc", "n", "v"];

impl<R: Rng> Gen<'_, R> {
    fn fresh_name(&mut self) -> String {
        self.fresh += 1;
        format!("{}{}", NAMES.choose(self.rng).unwrap(), self.fresh)
    }

    fn var_of(&mut self, ty: Ty) -> Option<Expr> {
        let vars: Vec<&String> = self.scope.iter().filter(|(_, t)| *t == ty).map(|(n, _)| n).collect();
        vars.choose(self.rng).map(|n| Expr::Var((*n).clone()))
    }

    fn leaf(&mut self, ty: Ty) -> Expr {
        if self.rng.gen_bool(0.5) {
            if let Some(v) = self.var_of(ty) {
                return v;
            }
        }
        match ty {
            Ty::Int => Expr::Int(self.rng.gen_range(-20..=20)),
            Ty::Bool => Expr::Bool(self.rng.gen()),
            Ty::IntList => {
                let n = self.rng.gen_range(0..4);
                Expr::List((0..n).map(|_| Expr::Int(self.rng.gen_range(-9..=9))).collect())
            }
        }
    }

    fn with_binding<T>(&mut self, bindings: &[(String, Ty)], f: impl FnOnce(&mut Self) -> T) -> T {
        let depth = self.scope.len();
        self.scope.extend(bindings.iter().cloned());
        let r = f(self);
        self.scope.truncate(depth);
        r
    }

    fn any_ty(&mut self) -> Ty {
        *[Ty::Int, Ty::Bool, Ty::IntList].choose(self.rng).unwrap()
    }

    fn expr(&mut self, ty: Ty, depth: u32) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return self.leaf(ty);
        }
        let d = depth - 1;
        // shared forms
        match self.rng.gen_range(0..10) {
            0 => {
                let bound_ty = self.any_ty();
                let value = self.expr(bound_ty, d);
                let name = self.fresh_name();
                let body = self.with_binding(&[(name.clone(), bound_ty)], |g| g.expr(ty, d));
                return Expr::Let {
                    name,
                    value: Box::new(value),
                    body: Box::new(body),
                };
            }
            1 => {
                return Expr::If {
                    cond: Box::new(self.expr(Ty::Bool, d)),
                    then_branch: Box::new(self.expr(ty, d)),
                    else_branch: Box::new(self.expr(ty, d)),
                }
            }
            2 => {
                let var = self.fresh_name();
                let acc = self.fresh_name();
                let lo = self.expr(Ty::Int, d.min(1));
                let hi = self.expr(Ty::Int, d.min(1));
                let init = self.expr(ty, d);
                let body = self.with_binding(&[(var.clone(), Ty::Int), (acc.clone(), ty)], |g| g.expr(ty, d));
                return Expr::For {
                    var,
                    lo: Box::new(lo),
                    hi: Box::new(hi),
                    acc,
                    init: Box::new(init),
                    body: Box::new(body),
                };
            }
            3 => {
                // projection out of a tuple literal
                let other = self.any_ty();
                let items = vec![self.expr(ty, d), self.expr(other, d)];
                let (items, field) = if self.rng.gen() {
                    (items, 0)
                } else {
                    (items.into_iter().rev().collect(), 1)
                };
                return Expr::Project(Box::new(Expr::Tuple(items)), field);
            }
            4 => {
                let callable: Vec<Sig> = self.sigs.iter().filter(|s| s.ret == ty).cloned().collect();
                if let Some(sig) = callable.choose(self.rng) {
                    let args = sig.params.iter().map(|&t| self.expr(t, d)).collect();
                    return Expr::Call(sig.name.clone(), args);
                }
            }
            _ => {}
        }
        match ty {
            Ty::Int => match self.rng.gen_range(0..7) {
                0 | 1 => {
                    let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Mod]
                        .choose(self.rng)
                        .unwrap();
                    Expr::binary(op, self.expr(Ty::Int, d), self.expr(Ty::Int, d))
                }
                2 => Expr::Unary(UnaryOp::Neg, Box::new(self.expr(Ty::Int, d))),
                3 => Expr::BuiltinCall(Builtin::Len, vec![self.expr(Ty::IntList, d)]),
                4 => Expr::Index(Box::new(self.expr(Ty::IntList, d)), Box::new(self.expr(Ty::Int, d))),
                5 => {
                    let b = *[Builtin::Min, Builtin::Max].choose(self.rng).unwrap();
                    Expr::BuiltinCall(b, vec![self.expr(Ty::Int, d), self.expr(Ty::Int, d)])
                }
                _ => Expr::BuiltinCall(Builtin::Abs, vec![self.expr(Ty::Int, d)]),
            },
            Ty::Bool => match self.rng.gen_range(0..4) {
                0 => {
                    let op = *[BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne]
                        .choose(self.rng)
                        .unwrap();
                    Expr::binary(op, self.expr(Ty::Int, d), self.expr(Ty::Int, d))
                }
                1 => {
                    let op = *[BinOp::And, BinOp::Or].choose(self.rng).unwrap();
                    Expr::binary(op, self.expr(Ty::Bool, d), self.expr(Ty::Bool, d))
                }
                2 => Expr::Unary(UnaryOp::Not, Box::new(self.expr(Ty::Bool, d))),
                _ => Expr::binary(BinOp::Eq, self.expr(Ty::IntList, d), self.expr(Ty::IntList, d)),
            },
            Ty::IntList => match self.rng.gen_range(0..4) {
                0 => Expr::binary(BinOp::Concat, self.expr(Ty::IntList, d), self.expr(Ty::IntList, d)),
                1 => Expr::BuiltinCall(Builtin::Append, vec![self.expr(Ty::IntList, d), self.expr(Ty::Int, d)]),
                2 => Expr::Slice {
                    base: Box::new(self.expr(Ty::IntList, d)),
                    lo: Box::new(self.expr(Ty::Int, d)),
                    hi: Box::new(self.expr(Ty::Int, d)),
                },
                _ => Expr::List((0..self.rng.gen_range(0..3)).map(|_| self.expr(Ty::Int, d)).collect()),
            },
        }
    }
}

/// A generated program together with the signature of its entry function.
#[derive(Debug, Clone)]
pub struct GeneratedProgram {
    pub program: Program,
    pub entry: String,
    pub params: Vec<Ty>,
}

/// Generates a valid program of `1..=max_functions` functions; the last one
/// generated is the entry point.
pub fn random_program<R: Rng>(rng: &mut R, max_functions: usize, depth: u32) -> GeneratedProgram {
    let count = rng.gen_range(1..=max_functions.max(1));
    let mut g = Gen {
        rng,
        scope: Vec::new(),
        sigs: Vec::new(),
        fresh: 0,
    };
    let mut program = Program::new();
    for i in 0..count {
        let arity = g.rng.gen_range(0..=3);
        let params: Vec<(String, Ty)> = (0..arity)
            .map(|_| {
                let ty = g.any_ty();
                (g.fresh_name(), ty)
            })
            .collect();
        let ret = g.any_ty();
        let body = g.with_binding(&params, |g| g.expr(ret, depth));
        let name = format!("f{i}");
        program.insert(FunctionDef {
            name: name.clone(),
            params: params.iter().map(|(n, _)| n.clone()).collect(),
            body,
        });
        g.sigs.push(Sig {
            name,
            params: params.iter().map(|(_, t)| *t).collect(),
            ret,
        });
    }
    let last = g.sigs.last().cloned().expect("at least one function");
    GeneratedProgram {
        program,
        entry: last.name,
        params: last.params,
    }
}

pub fn random_value<R: Rng>(rng: &mut R, ty: Ty) -> Value {
    match ty {
        Ty::Int => Value::Int(rng.gen_range(-50..=50)),
        Ty::Bool => Value::Bool(rng.gen()),
        Ty::IntList => {
            let n = rng.gen_range(0..6);
            Value::int_list((0..n).map(|_| rng.gen_range(-50..=50)))
        }
    }
}

pub fn random_args<R: Rng>(rng: &mut R, params: &[Ty]) -> Vec<Value> {
    params.iter().map(|&t| random_value(rng, t)).collect()
}
