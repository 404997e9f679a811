use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Concat,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
}

impl BinOp {
    pub const ALL: [BinOp; 14] = [
        BinOp::Or,
        BinOp::And,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Concat,
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Mod,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Concat => "++",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
        }
    }

    /// Binding strength; all binary operators are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Concat => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }
}

/// Built-in functions, callable with ordinary call syntax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Len,
    Append,
    Min,
    Max,
    Abs,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [Builtin::Len, Builtin::Append, Builtin::Min, Builtin::Max, Builtin::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Len => "len",
            Builtin::Append => "append",
            Builtin::Min => "min",
            Builtin::Max => "max",
            Builtin::Abs => "abs",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Len | Builtin::Abs => 1,
            Builtin::Append | Builtin::Min | Builtin::Max => 2,
        }
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    Let {
        name: String,
        value: Box<Expr>,
        body: Box<Expr>,
    },
    If {
        cond: Box<Expr>,
        then_branch: Box<Expr>,
        else_branch: Box<Expr>,
    },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Slice {
        base: Box<Expr>,
        lo: Box<Expr>,
        hi: Box<Expr>,
    },
    Project(Box<Expr>, usize),
    BuiltinCall(Builtin, Vec<Expr>),
    Call(String, Vec<Expr>),
    /// `for var in lo .. hi with acc = init do body`; the range is evaluated
    /// once, so the iteration count is fixed before the loop starts.
    For {
        var: String,
        lo: Box<Expr>,
        hi: Box<Expr>,
        acc: String,
        init: Box<Expr>,
        body: Box<Expr>,
    },
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Calls `visit` with the name and arity of every user-function call.
    pub fn for_each_call<'a>(&'a self, visit: &mut impl FnMut(&'a str, usize)) {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => {}
            Expr::List(xs) | Expr::Tuple(xs) | Expr::BuiltinCall(_, xs) => {
                xs.iter().for_each(|x| x.for_each_call(visit))
            }
            Expr::Call(name, args) => {
                visit(name, args.len());
                args.iter().for_each(|x| x.for_each_call(visit));
            }
            Expr::Let { value, body, .. } => {
                value.for_each_call(visit);
                body.for_each_call(visit);
            }
            Expr::If {
                cond,
                then_branch,
                else_branch,
            } => {
                cond.for_each_call(visit);
                then_branch.for_each_call(visit);
                else_branch.for_each_call(visit);
            }
            Expr::Unary(_, e) | Expr::Project(e, _) => e.for_each_call(visit),
            Expr::Binary(_, a, b) | Expr::Index(a, b) => {
                a.for_each_call(visit);
                b.for_each_call(visit);
            }
            Expr::Slice { base, lo, hi } => {
                base.for_each_call(visit);
                lo.for_each_call(visit);
                hi.for_each_call(visit);
            }
            Expr::For { lo, hi, init, body, .. } => {
                lo.for_each_call(visit);
                hi.for_each_call(visit);
                init.for_each_call(visit);
                body.for_each_call(visit);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Expr,
}

impl FunctionDef {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// Distinct names of user functions called from the body, in first-call order.
    pub fn callees(&self) -> Vec<(&str, usize)> {
        let mut out: Vec<(&str, usize)> = Vec::new();
        self.body.for_each_call(&mut |name, arity| {
            if !out.iter().any(|(n, _)| *n == name) {
                out.push((name, arity));
            }
        });
        out
    }
}

/// A set of function definitions keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub functions: BTreeMap<String, FunctionDef>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.functions.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.functions.keys().map(String::as_str)
    }

    /// Inserts a definition, returning the one it replaced.
    pub fn insert(&mut self, def: FunctionDef) -> Option<FunctionDef> {
        self.functions.insert(def.name.clone(), def)
    }

    pub fn with(mut self, def: FunctionDef) -> Self {
        self.insert(def);
        self
    }
}
