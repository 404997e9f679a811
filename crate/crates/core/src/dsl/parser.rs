//! Lexer and recursive-descent parser for `.pacl` text.
//!
//! Grammar (whitespace-insensitive, `#` starts a comment to end of line):
//!
//! ```text
//! program  := fndef*
//! fndef    := "fn" IDENT "(" [IDENT ("," IDENT)*] ")" "=" expr
//! expr     := "let" IDENT "=" expr "in" expr
//!           | "if" expr "then" expr "else" expr
//!           | "for" IDENT "in" expr ".." expr "with" IDENT "=" expr "do" expr
//!           | binary
//! binary   := unary (BINOP unary)*        -- precedence climbing, left-assoc
//! unary    := "-" INT postfix* | "-" unary | "!" unary | postfix
//! postfix  := primary ("[" expr "]" | "[" expr ":" expr "]" | "." INT)*
//! primary  := INT | "true" | "false" | IDENT | IDENT "(" args ")"
//!           | "[" args "]" | "(" ")" | "(" expr ")" | "(" expr "," [args] ")"
//!           | "let" ... | "if" ... | "for" ...
//! ```
//!
//! Binary operators from loosest to tightest: `||`, `&&`,
//! `== != < <= > >=`, `++`, `+ -`, `* / %`.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ast::{BinOp, Builtin, Expr, FunctionDef, Program, UnaryOp};

pub const KEYWORDS: [&str; 12] = [
    "fn", "let", "in", "if", "then", "else", "for", "with", "do", "true", "false", "_",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("{line}:{col}: duplicate function `{name}`")]
    DuplicateFunction { line: usize, col: usize, name: String },
    #[error("{line}:{col}: unbound variable `{name}`")]
    UnboundVariable { line: usize, col: usize, name: String },
}

impl ParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ParseError::Syntax { line, col, .. }
            | ParseError::DuplicateFunction { line, col, .. }
            | ParseError::UnboundVariable { line, col, .. } => (*line, *col),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(u64),
    Ident(String),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 24] = [
    "==", "!=", "<=", ">=", "&&", "||", "++", "..", "(", ")", "[", "]", ",", "=", ".", ":", "<", ">", "+", "-", "*",
    "/", "%", "!",
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_digit() {
            let mut n: u64 = 0;
            while i < chars.len() && chars[i].is_ascii_digit() {
                let d = chars[i] as u64 - '0' as u64;
                n = n
                    .checked_mul(10)
                    .and_then(|n| n.checked_add(d))
                    .ok_or_else(|| ParseError::Syntax {
                        line: start_line,
                        col: start_col,
                        message: "integer literal out of range".into(),
                    })?;
                i += 1;
                col += 1;
            }
            out.push(Token {
                tok: Tok::Int(n),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token {
                tok: Tok::Ident(s),
                line: start_line,
                col: start_col,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                i += sym.len();
                col += sym.len();
                out.push(Token {
                    tok: Tok::Sym(sym),
                    line: start_line,
                    col: start_col,
                });
            }
            None => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    scope: Vec<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.col)
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::Syntax {
            line,
            col,
            message: message.into(),
        })
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), ParseError> {
        if self.is_sym(sym) {
            self.advance();
            Ok(())
        } else {
            self.error(format!("expected `{sym}`, found {}", Self::describe(self.peek())))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            self.error(format!("expected `{kw}`, found {}", Self::describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                Ok(s)
            }
            other => self.error(format!("expected identifier, found {}", Self::describe(&other))),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut functions = BTreeMap::new();
        while *self.peek() != Tok::Eof {
            let (line, col) = self.here();
            self.expect_keyword("fn")?;
            let name_pos = self.here();
            let def = self.function_rest()?;
            if Builtin::from_name(&def.name).is_some() {
                return Err(ParseError::Syntax {
                    line: name_pos.0,
                    col: name_pos.1,
                    message: format!("`{}` is a builtin and cannot be redefined", def.name),
                });
            }
            if functions.contains_key(&def.name) {
                return Err(ParseError::DuplicateFunction {
                    line,
                    col,
                    name: def.name,
                });
            }
            functions.insert(def.name.clone(), def);
        }
        Ok(Program { functions })
    }

    fn function_rest(&mut self) -> Result<FunctionDef, ParseError> {
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params: Vec<String> = Vec::new();
        if !self.is_sym(")") {
            loop {
                let at = self.here();
                let p = self.ident()?;
                if params.contains(&p) {
                    return Err(ParseError::Syntax {
                        line: at.0,
                        col: at.1,
                        message: format!("duplicate parameter `{p}`"),
                    });
                }
                params.push(p);
                if self.is_sym(",") {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        self.expect_sym("=")?;
        self.scope = params.clone();
        let body = self.expr()?;
        self.scope.clear();
        Ok(FunctionDef { name, params, body })
    }

    fn scoped<T>(
        &mut self,
        names: &[&str],
        f: impl FnOnce(&mut Self) -> Result<T, ParseError>,
    ) -> Result<T, ParseError> {
        let depth = self.scope.len();
        self.scope.extend(names.iter().map(|s| s.to_string()));
        let r = f(self);
        self.scope.truncate(depth);
        r
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.is_keyword("let") {
            self.advance();
            let name = self.ident()?;
            self.expect_sym("=")?;
            let value = self.expr()?;
            self.expect_keyword("in")?;
            let body = self.scoped(&[&name], |p| p.expr())?;
            return Ok(Expr::Let {
                name,
                value: Box::new(value),
                body: Box::new(body),
            });
        }
        if self.is_keyword("if") {
            self.advance();
            let cond = self.expr()?;
            self.expect_keyword("then")?;
            let then_branch = self.expr()?;
            self.expect_keyword("else")?;
            let else_branch = self.expr()?;
            return Ok(Expr::If {
                cond: Box::new(cond),
                then_branch: Box::new(then_branch),
                else_branch: Box::new(else_branch),
            });
        }
        if self.is_keyword("for") {
            self.advance();
            let var = self.ident()?;
            self.expect_keyword("in")?;
            let lo = self.expr()?;
            self.expect_sym("..")?;
            let hi = self.expr()?;
            self.expect_keyword("with")?;
            let acc = self.ident()?;
            self.expect_sym("=")?;
            let init = self.expr()?;
            self.expect_keyword("do")?;
            let body = self.scoped(&[&var, &acc], |p| p.expr())?;
            return Ok(Expr::For {
                var,
                lo: Box::new(lo),
                hi: Box::new(hi),
                acc,
                init: Box::new(init),
                body: Box::new(body),
            });
        }
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Sym(s) => BinOp::ALL.into_iter().find(|op| op.symbol() == *s),
            _ => None,
        }
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.is_sym("-") {
            if let Tok::Int(n) = *self.peek_at(1) {
                self.advance();
                self.advance();
                let value = if n == i64::MIN.unsigned_abs() {
                    i64::MIN
                } else if n <= i64::MAX as u64 {
                    -(n as i64)
                } else {
                    return self.error("integer literal out of range");
                };
                return self.postfix(Expr::Int(value));
            }
            self.advance();
            let e = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(e)));
        }
        if self.is_sym("!") {
            self.advance();
            let e = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(e)));
        }
        let base = self.primary()?;
        self.postfix(base)
    }

    fn postfix(&mut self, mut base: Expr) -> Result<Expr, ParseError> {
        loop {
            if self.is_sym("[") {
                self.advance();
                let index = self.expr()?;
                if self.is_sym(":") {
                    self.advance();
                    let hi = self.expr()?;
                    self.expect_sym("]")?;
                    base = Expr::Slice {
                        base: Box::new(base),
                        lo: Box::new(index),
                        hi: Box::new(hi),
                    };
                } else {
                    self.expect_sym("]")?;
                    base = Expr::Index(Box::new(base), Box::new(index));
                }
            } else if self.is_sym(".") {
                self.advance();
                match *self.peek() {
                    Tok::Int(n) => {
                        self.advance();
                        base = Expr::Project(Box::new(base), n as usize);
                    }
                    ref other => {
                        return self.error(format!("expected tuple field number, found {}", Self::describe(other)))
                    }
                }
            } else {
                return Ok(base);
            }
        }
    }

    fn args(&mut self, close: &str) -> Result<Vec<Expr>, ParseError> {
        let mut out = Vec::new();
        if self.is_sym(close) {
            self.advance();
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.is_sym(",") {
                self.advance();
                if self.is_sym(close) {
                    self.advance();
                    return Ok(out);
                }
            } else {
                self.expect_sym(close)?;
                return Ok(out);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.advance();
                if n > i64::MAX as u64 {
                    return Err(ParseError::Syntax {
                        line,
                        col,
                        message: "integer literal out of range".into(),
                    });
                }
                Ok(Expr::Int(n as i64))
            }
            Tok::Ident(s) if s == "true" => {
                self.advance();
                Ok(Expr::Bool(true))
            }
            Tok::Ident(s) if s == "false" => {
                self.advance();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(s) if s == "let" || s == "if" || s == "for" => self.expr(),
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.advance();
                if self.is_sym("(") {
                    self.advance();
                    let args = self.args(")")?;
                    if let Some(b) = Builtin::from_name(&s) {
                        if args.len() != b.arity() {
                            return Err(ParseError::Syntax {
                                line,
                                col,
                                message: format!("builtin `{s}` takes {} argument(s), got {}", b.arity(), args.len()),
                            });
                        }
                        return Ok(Expr::BuiltinCall(b, args));
                    }
                    return Ok(Expr::Call(s, args));
                }
                if !self.scope.iter().any(|v| *v == s) {
                    return Err(ParseError::UnboundVariable { line, col, name: s });
                }
                Ok(Expr::Var(s))
            }
            Tok::Sym("[") => {
                self.advance();
                Ok(Expr::List(self.args("]")?))
            }
            Tok::Sym("(") => {
                self.advance();
                if self.is_sym(")") {
                    self.advance();
                    return Ok(Expr::Tuple(Vec::new()));
                }
                let first = self.expr()?;
                if self.is_sym(")") {
                    self.advance();
                    return Ok(first);
                }
                self.expect_sym(",")?;
                let mut items = vec![first];
                if self.is_sym(")") {
                    self.advance();
                } else {
                    items.extend(self.args(")")?);
                }
                Ok(Expr::Tuple(items))
            }
            other => self.error(format!("unexpected {}", Self::describe(&other))),
        }
    }
}

/// Parses a whole program. Calls to functions not defined in the text are
/// accepted here and resolved later against the caller's context.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        scope: Vec::new(),
    };
    p.program()
}

/// Parses a program that must contain exactly one function.
pub fn parse_function(text: &str) -> Result<FunctionDef, ParseError> {
    let program = parse_program(text)?;
    let count = program.len();
    let mut defs = program.functions.into_values();
    match (defs.next(), count) {
        (Some(def), 1) => Ok(def),
        _ => Err(ParseError::Syntax {
            line: 1,
            col: 1,
            message: format!("expected exactly one function definition, found {count}"),
        }),
    }
}

/// Parses a closed expression (no free variables).
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let tokens = lex(text)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        scope: Vec::new(),
    };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("trailing input: {}", Parser::describe(p.peek())));
    }
    Ok(e)
}
