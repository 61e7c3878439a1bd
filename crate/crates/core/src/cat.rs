//! The relational model language: parser, monotonicity check, evaluator.
//!
//! Grammar (see `docs/model-format.md`):
//!
//! ```text
//! model  ::= [ "arch" IDENT ] stmt*
//! stmt   ::= "let" IDENT "=" expr
//!          | "let" "rec" IDENT "=" expr ( "and" IDENT "=" expr )*
//!          | ( "acyclic" | "irreflexive" ) expr [ "as" IDENT ]
//! expr   ::= diff ( "|" diff )*
//! diff   ::= inter ( "\" inter )*
//! inter  ::= seq ( "&" seq )*
//! seq    ::= post ( ";" post )*
//! post   ::= atom ( "+" | "*" | "?" | "^-1" )*
//! atom   ::= "0" | IDENT | DIR "(" expr ")" | "(" expr ")"
//! ```

use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::{ModelError, Pos};
use crate::event::{Arch, DirectionClass, FenceKind};
use crate::exec::Candidate;
use crate::litmus::Program;
use crate::relation::{EventId, Relation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Empty,
    Name(String, Pos),
    Union(Box<Expr>, Box<Expr>),
    Inter(Box<Expr>, Box<Expr>),
    Diff(Box<Expr>, Box<Expr>),
    Seq(Box<Expr>, Box<Expr>),
    Plus(Box<Expr>),
    Star(Box<Expr>),
    Opt(Box<Expr>),
    Inverse(Box<Expr>),
    Filter(DirectionClass, DirectionClass, Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Empty => f.write_str("0"),
            Expr::Name(n, _) => f.write_str(n),
            Expr::Union(a, b) => write!(f, "({a}|{b})"),
            Expr::Inter(a, b) => write!(f, "({a}&{b})"),
            Expr::Diff(a, b) => write!(f, "({a}\\{b})"),
            Expr::Seq(a, b) => write!(f, "({a};{b})"),
            Expr::Plus(a) => write!(f, "({a})+"),
            Expr::Star(a) => write!(f, "({a})*"),
            Expr::Opt(a) => write!(f, "({a})?"),
            Expr::Inverse(a) => write!(f, "({a})^-1"),
            Expr::Filter(s, t, a) => write!(f, "{}{}({a})", dir_char(*s), dir_char(*t)),
        }
    }
}

fn dir_char(d: DirectionClass) -> char {
    match d {
        DirectionClass::R => 'R',
        DirectionClass::W => 'W',
        DirectionClass::M => 'M',
        DirectionClass::B => 'B',
        DirectionClass::F => 'F',
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckKind {
    Acyclic,
    Irreflexive,
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckKind::Acyclic => "acyclic",
            CheckKind::Irreflexive => "irreflexive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Let { name: String, expr: Expr, pos: Pos },
    LetRec { bindings: Vec<(String, Expr, Pos)> },
    Check { kind: CheckKind, expr: Expr, name: String, pos: Pos },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelAst {
    pub arch: Arch,
    pub stmts: Vec<Stmt>,
}

impl ModelAst {
    pub fn check_names(&self) -> Vec<&str> {
        self.stmts
            .iter()
            .filter_map(|s| match s {
                Stmt::Check { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect()
    }

    pub fn binds(&self, name: &str) -> bool {
        self.stmts.iter().any(|s| match s {
            Stmt::Let { name: n, .. } => n == name,
            Stmt::LetRec { bindings } => bindings.iter().any(|(n, _, _)| n == name),
            Stmt::Check { .. } => false,
        })
    }
}

// ---------------------------------------------------------------------------
// Lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Zero,
    Sym(char),
    Inverse,
    Comment(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

fn lex(text: &str) -> Result<Vec<Token>, ModelError> {
    let cs: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let bump = |i: &mut usize, line: &mut usize, col: &mut usize| {
        if cs[*i] == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };
    while i < cs.len() {
        let c = cs[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump(&mut i, &mut line, &mut col);
        } else if c == '(' && cs.get(i + 1) == Some(&'*') {
            bump(&mut i, &mut line, &mut col);
            bump(&mut i, &mut line, &mut col);
            let mut body = String::new();
            let mut depth = 1;
            loop {
                if i >= cs.len() {
                    return Err(ModelError::Syntax { pos, msg: "unterminated comment".into() });
                }
                if cs[i] == '(' && cs.get(i + 1) == Some(&'*') {
                    depth += 1;
                } else if cs[i] == '*' && cs.get(i + 1) == Some(&')') {
                    depth -= 1;
                    if depth == 0 {
                        bump(&mut i, &mut line, &mut col);
                        bump(&mut i, &mut line, &mut col);
                        break;
                    }
                }
                body.push(cs[i]);
                bump(&mut i, &mut line, &mut col);
            }
            out.push(Token { tok: Tok::Comment(body.trim().to_string()), pos });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < cs.len() {
                let d = cs[i];
                let inner = d.is_ascii_alphanumeric() || matches!(d, '_' | '.' | '-');
                // `+` belongs to names like `ctrl+isync`; otherwise it is a closure
                let plus = d == '+' && cs.get(i + 1).is_some_and(|n| n.is_ascii_alphabetic());
                if !(inner || plus) {
                    break;
                }
                s.push(d);
                bump(&mut i, &mut line, &mut col);
            }
            out.push(Token { tok: Tok::Ident(s), pos });
        } else if c == '0' {
            bump(&mut i, &mut line, &mut col);
            out.push(Token { tok: Tok::Zero, pos });
        } else if c == '^' && cs.get(i + 1) == Some(&'-') && cs.get(i + 2) == Some(&'1') {
            for _ in 0..3 {
                bump(&mut i, &mut line, &mut col);
            }
            out.push(Token { tok: Tok::Inverse, pos });
        } else if "|&;\\+*?()=".contains(c) {
            bump(&mut i, &mut line, &mut col);
            out.push(Token { tok: Tok::Sym(c), pos });
        } else {
            return Err(ModelError::Syntax { pos, msg: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parsing

/// Names bound by [`builtin_env`], with the architectures that provide them.
fn builtin_available(name: &str, arch: Arch) -> Option<bool> {
    const COMMON: [&str; 17] = [
        "po", "po-loc", "rf", "rfe", "rfi", "co", "coe", "coi", "fr", "fre", "fri", "com", "addr", "data", "ctrl",
        "ctrl+cfence", "id",
    ];
    if COMMON.contains(&name) {
        return Some(true);
    }
    if let Some(k) = FenceKind::from_name(name) {
        return Some(arch.allows(k));
    }
    match name {
        "ctrl+isync" => Some(arch.allows(FenceKind::Isync)),
        "ctrl+isb" => Some(arch.allows(FenceKind::Isb)),
        _ => None,
    }
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    arch: Arch,
    bound: HashSet<String>,
    eof: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|t| t.pos).unwrap_or(self.eof)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ModelError> {
        Err(ModelError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn skip_comments(&mut self) {
        while let Some(Tok::Comment(_)) = self.peek() {
            self.i += 1;
        }
    }

    fn next_tok(&mut self) -> Option<Tok> {
        self.skip_comments();
        let t = self.peek().cloned();
        if t.is_some() {
            self.i += 1;
        }
        t
    }

    fn peek_tok(&mut self) -> Option<Tok> {
        self.skip_comments();
        self.peek().cloned()
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek_tok() == Some(Tok::Sym(c)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek_tok() == Some(Tok::Ident(kw.into())) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), ModelError> {
        self.skip_comments();
        let pos = self.pos();
        match self.next_tok() {
            Some(Tok::Ident(s)) => Ok((s, pos)),
            _ => Err(ModelError::Syntax { pos, msg: "expected identifier".into() }),
        }
    }

    fn bind(&mut self, name: &str, pos: Pos) -> Result<(), ModelError> {
        if builtin_available(name, Arch::Generic).is_some() || !self.bound.insert(name.to_string()) {
            return Err(ModelError::Duplicate { pos, name: name.to_string() });
        }
        Ok(())
    }

    fn resolve(&self, name: &str, pos: Pos) -> Result<(), ModelError> {
        if self.bound.contains(name) {
            return Ok(());
        }
        match builtin_available(name, self.arch) {
            Some(true) => Ok(()),
            Some(false) => Err(ModelError::ForeignFence { pos, name: name.into(), arch: self.arch.to_string() }),
            None => Err(ModelError::Unbound { pos, name: name.into() }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ModelError> {
        let mut e = self.diff()?;
        while self.eat_sym('|') {
            e = Expr::Union(Box::new(e), Box::new(self.diff()?));
        }
        Ok(e)
    }

    fn diff(&mut self) -> Result<Expr, ModelError> {
        let mut e = self.inter()?;
        while self.eat_sym('\\') {
            e = Expr::Diff(Box::new(e), Box::new(self.inter()?));
        }
        Ok(e)
    }

    fn inter(&mut self) -> Result<Expr, ModelError> {
        let mut e = self.seq()?;
        while self.eat_sym('&') {
            e = Expr::Inter(Box::new(e), Box::new(self.seq()?));
        }
        Ok(e)
    }

    fn seq(&mut self) -> Result<Expr, ModelError> {
        let mut e = self.post()?;
        while self.eat_sym(';') {
            e = Expr::Seq(Box::new(e), Box::new(self.post()?));
        }
        Ok(e)
    }

    fn post(&mut self) -> Result<Expr, ModelError> {
        let mut e = self.atom()?;
        loop {
            if self.eat_sym('+') {
                e = Expr::Plus(Box::new(e));
            } else if self.eat_sym('*') {
                e = Expr::Star(Box::new(e));
            } else if self.eat_sym('?') {
                e = Expr::Opt(Box::new(e));
            } else if self.peek_tok() == Some(Tok::Inverse) {
                self.i += 1;
                e = Expr::Inverse(Box::new(e));
            } else {
                return Ok(e);
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ModelError> {
        self.skip_comments();
        let pos = self.pos();
        match self.next_tok() {
            Some(Tok::Zero) => Ok(Expr::Empty),
            Some(Tok::Sym('(')) => {
                let e = self.expr()?;
                if !self.eat_sym(')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                let dirs: Vec<Option<DirectionClass>> = name.chars().map(DirectionClass::from_char).collect();
                if dirs.len() == 2 && dirs.iter().all(|d| d.is_some()) && self.peek_tok() == Some(Tok::Sym('(')) {
                    self.i += 1;
                    let e = self.expr()?;
                    if !self.eat_sym(')') {
                        return self.err("expected `)`");
                    }
                    return Ok(Expr::Filter(dirs[0].expect("dir"), dirs[1].expect("dir"), Box::new(e)));
                }
                self.resolve(&name, pos)?;
                Ok(Expr::Name(name, pos))
            }
            _ => Err(ModelError::Syntax { pos, msg: "expected a relation".into() }),
        }
    }
}

fn normalise_check_name(comment: &str) -> String {
    comment.split_whitespace().map(|w| w.to_ascii_lowercase()).collect::<Vec<_>>().join("-")
}

/// Parse a model. Identifiers are resolved against builtins and prior bindings.
pub fn parse_model(text: &str) -> Result<ModelAst, ModelError> {
    let toks = lex(text)?;
    let eof = toks.last().map(|t| t.pos).unwrap_or_default();
    let mut p = Parser { toks, i: 0, arch: Arch::Generic, bound: HashSet::new(), eof };
    if p.eat_kw("arch") {
        let (a, pos) = p.ident()?;
        p.arch = a.parse().map_err(|msg| ModelError::Syntax { pos, msg })?;
    }
    let mut stmts = Vec::new();
    let mut nchecks = 0;
    let mut last_check = 0;
    loop {
        p.skip_comments();
        let pos = p.pos();
        let Some(tok) = p.next_tok() else { break };
        match tok {
            Tok::Ident(kw) if kw == "let" => {
                if p.eat_kw("rec") {
                    let mut heads = Vec::new();
                    let mut bodies_at = Vec::new();
                    // bind all names of the group first so bodies may refer to each other
                    loop {
                        let (name, npos) = p.ident()?;
                        p.bind(&name, npos)?;
                        if !p.eat_sym('=') {
                            return p.err("expected `=`");
                        }
                        bodies_at.push(p.i);
                        skip_expr(&mut p)?;
                        heads.push((name, npos));
                        if !p.eat_kw("and") {
                            break;
                        }
                    }
                    let resume = p.i;
                    let mut bindings = Vec::new();
                    for ((name, npos), at) in heads.into_iter().zip(bodies_at) {
                        p.i = at;
                        bindings.push((name, p.expr()?, npos));
                    }
                    p.i = resume;
                    stmts.push(Stmt::LetRec { bindings });
                } else {
                    let (name, npos) = p.ident()?;
                    if !p.eat_sym('=') {
                        return p.err("expected `=`");
                    }
                    let expr = p.expr()?;
                    p.bind(&name, npos)?;
                    stmts.push(Stmt::Let { name, expr, pos: npos });
                }
            }
            Tok::Ident(kw) if kw == "acyclic" || kw == "irreflexive" => {
                // the last comment since the previous check names this one
                let comment = p.toks[last_check..p.i - 1].iter().rev().find_map(|t| match &t.tok {
                    Tok::Comment(c) => Some(c.clone()),
                    _ => None,
                });
                last_check = p.i;
                let kind = if kw == "acyclic" { CheckKind::Acyclic } else { CheckKind::Irreflexive };
                let expr = p.expr()?;
                nchecks += 1;
                let name = if p.eat_kw("as") {
                    p.ident()?.0
                } else if let Some(c) = comment {
                    normalise_check_name(&c)
                } else {
                    format!("{kind}-{nchecks}")
                };
                stmts.push(Stmt::Check { kind, expr, name, pos });
            }
            _ => return Err(ModelError::Syntax { pos, msg: "expected `let`, `acyclic` or `irreflexive`".into() }),
        }
    }
    let ast = ModelAst { arch: p.arch, stmts };
    check_recursive_monotone(&ast)?;
    Ok(ast)
}

/// Advance over one expression without resolving names (used for forward
/// references inside a `let rec` group).
fn skip_expr(p: &mut Parser) -> Result<(), ModelError> {
    let mut depth = 0i32;
    loop {
        match p.peek_tok() {
            None => return Ok(()),
            Some(Tok::Sym('(')) => depth += 1,
            Some(Tok::Sym(')')) => {
                if depth == 0 {
                    return Ok(());
                }
                depth -= 1;
            }
            Some(Tok::Ident(k)) if depth == 0 && matches!(k.as_str(), "and" | "let" | "acyclic" | "irreflexive" | "as") => {
                return Ok(())
            }
            _ => {}
        }
        p.i += 1;
    }
}

/// Reject a recursive name under `\` inside its own `let rec` group.
pub fn check_recursive_monotone(ast: &ModelAst) -> Result<(), ModelError> {
    fn walk(e: &Expr, group: &HashSet<&str>, under_diff: bool) -> Result<(), ModelError> {
        match e {
            Expr::Empty => Ok(()),
            Expr::Name(n, pos) => {
                if under_diff && group.contains(n.as_str()) {
                    Err(ModelError::NonMonotone { pos: *pos, name: n.clone() })
                } else {
                    Ok(())
                }
            }
            Expr::Diff(a, b) => {
                walk(a, group, true)?;
                walk(b, group, true)
            }
            Expr::Union(a, b) | Expr::Inter(a, b) | Expr::Seq(a, b) => {
                walk(a, group, under_diff)?;
                walk(b, group, under_diff)
            }
            Expr::Plus(a) | Expr::Star(a) | Expr::Opt(a) | Expr::Inverse(a) | Expr::Filter(_, _, a) => {
                walk(a, group, under_diff)
            }
        }
    }
    for s in &ast.stmts {
        if let Stmt::LetRec { bindings } = s {
            let group: HashSet<&str> = bindings.iter().map(|(n, _, _)| n.as_str()).collect();
            for (_, e, _) in bindings {
                walk(e, &group, false)?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Evaluation

pub type Env = HashMap<String, Relation>;

/// Builtin relations of a candidate, restricted to those available on `arch`.
pub fn builtin_env(prog: &Program, cand: &Candidate, arch: Arch) -> Env {
    let mut env = Env::new();
    let n = prog.len();
    env.insert("po".into(), prog.po.clone());
    env.insert("po-loc".into(), prog.po_loc.clone());
    env.insert("rf".into(), cand.rf.clone());
    env.insert("rfe".into(), cand.rfe.clone());
    env.insert("rfi".into(), cand.rfi.clone());
    env.insert("co".into(), cand.co.clone());
    env.insert("coe".into(), cand.coe.clone());
    env.insert("coi".into(), cand.coi.clone());
    env.insert("fr".into(), cand.fr.clone());
    env.insert("fre".into(), cand.fre.clone());
    env.insert("fri".into(), cand.fri.clone());
    env.insert("com".into(), cand.com.clone());
    env.insert("addr".into(), prog.addr.clone());
    env.insert("data".into(), prog.data.clone());
    env.insert("ctrl".into(), prog.ctrl.clone());
    env.insert("id".into(), Relation::identity(n));
    let cf = |k: FenceKind| prog.ctrl_cfence.get(&k).cloned().unwrap_or_else(|| Relation::empty(n));
    let mut cfence = Relation::empty(n);
    if arch.allows(FenceKind::Isync) {
        env.insert("ctrl+isync".into(), cf(FenceKind::Isync));
        cfence.union_in_place(&cf(FenceKind::Isync));
    }
    if arch.allows(FenceKind::Isb) {
        env.insert("ctrl+isb".into(), cf(FenceKind::Isb));
        cfence.union_in_place(&cf(FenceKind::Isb));
    }
    env.insert("ctrl+cfence".into(), cfence);
    for &k in arch.fences() {
        env.insert(k.name().into(), prog.fence(k));
    }
    env
}

#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    /// Bindings forced to the empty relation (e.g. `rdw` and `detour`).
    pub zeroed: Vec<String>,
}

impl EvalOptions {
    pub fn static_ppo() -> Self {
        EvalOptions { zeroed: vec!["rdw".into(), "detour".into()] }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    pub passed: bool,
    /// A cycle (acyclic) or a single reflexive event (irreflexive).
    pub witness: Vec<EventId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub allowed: bool,
    pub checks: Vec<CheckResult>,
}

impl Verdict {
    pub fn failed(&self) -> impl Iterator<Item = &str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str())
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn eval(e: &Expr, env: &Env, prog: &Program) -> Relation {
    let n = prog.len();
    match e {
        Expr::Empty => Relation::empty(n),
        Expr::Name(name, _) => env.get(name).cloned().unwrap_or_else(|| Relation::empty(n)),
        Expr::Union(a, b) => eval(a, env, prog).union(&eval(b, env, prog)),
        Expr::Inter(a, b) => eval(a, env, prog).inter(&eval(b, env, prog)),
        Expr::Diff(a, b) => eval(a, env, prog).diff(&eval(b, env, prog)),
        Expr::Seq(a, b) => eval(a, env, prog).seq(&eval(b, env, prog)),
        Expr::Plus(a) => eval(a, env, prog).plus(),
        Expr::Star(a) => eval(a, env, prog).star(),
        Expr::Opt(a) => eval(a, env, prog).union(&Relation::identity(n)),
        Expr::Inverse(a) => eval(a, env, prog).inverse(),
        Expr::Filter(s, t, a) => crate::event::restrict(&eval(a, env, prog), &prog.events, *s, *t),
    }
}

/// Evaluate every statement; returns the verdict and the final environment.
pub fn evaluate(ast: &ModelAst, prog: &Program, cand: &Candidate, opts: &EvalOptions) -> (Verdict, Env) {
    let mut env = builtin_env(prog, cand, ast.arch);
    let n = prog.len();
    let mut checks = Vec::new();
    for s in &ast.stmts {
        match s {
            Stmt::Let { name, expr, .. } => {
                let v = if opts.zeroed.contains(name) { Relation::empty(n) } else { eval(expr, &env, prog) };
                env.insert(name.clone(), v);
            }
            Stmt::LetRec { bindings } => {
                for (name, _, _) in bindings {
                    env.insert(name.clone(), Relation::empty(n));
                }
                loop {
                    let next: Vec<Relation> = bindings
                        .iter()
                        .map(|(name, e, _)| if opts.zeroed.contains(name) { Relation::empty(n) } else { eval(e, &env, prog) })
                        .collect();
                    let mut changed = false;
                    for ((name, _, _), v) in bindings.iter().zip(next) {
                        if env[name] != v {
                            changed = true;
                            env.insert(name.clone(), v);
                        }
                    }
                    if !changed {
                        break;
                    }
                }
            }
            Stmt::Check { kind, expr, name, .. } => {
                let r = eval(expr, &env, prog);
                let (passed, witness) = match kind {
                    CheckKind::Acyclic => match r.check_acyclic() {
                        Ok(()) => (true, Vec::new()),
                        Err(c) => (false, c),
                    },
                    CheckKind::Irreflexive => match r.check_irreflexive() {
                        Ok(()) => (true, Vec::new()),
                        Err(x) => (false, vec![x]),
                    },
                };
                checks.push(CheckResult { name: name.clone(), kind: *kind, passed, witness });
            }
        }
    }
    let allowed = checks.iter().all(|c| c.passed);
    (Verdict { allowed, checks }, env)
}

pub fn eval_model(ast: &ModelAst, prog: &Program, cand: &Candidate) -> Verdict {
    evaluate(ast, prog, cand, &EvalOptions::default()).0
}
