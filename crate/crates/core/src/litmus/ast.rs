use std::fmt;

use crate::error::Pos;
use crate::event::{Arch, FenceKind, Reg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchCond {
    Ne,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instr {
    MovConst { dst: Reg, value: i64 },
    Load { dst: Reg, addr: Reg },
    Store { addr: Reg, src: Reg },
    Xor { dst: Reg, a: Reg, b: Reg },
    Add { dst: Reg, a: Reg, b: Reg },
    Cmp { reg: Reg, value: i64 },
    Branch { cond: BranchCond, label: String },
    Fence(FenceKind),
    Label(String),
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::MovConst { dst, value } => write!(f, "mov {dst}, {value}"),
            Instr::Load { dst, addr } => write!(f, "ld {dst}, [{addr}]"),
            Instr::Store { addr, src } => write!(f, "st [{addr}], {src}"),
            Instr::Xor { dst, a, b } => write!(f, "xor {dst}, {a}, {b}"),
            Instr::Add { dst, a, b } => write!(f, "add {dst}, {a}, {b}"),
            Instr::Cmp { reg, value } => write!(f, "cmp {reg}, {value}"),
            Instr::Branch { cond: BranchCond::Ne, label } => write!(f, "bne {label}"),
            Instr::Branch { cond: BranchCond::Eq, label } => write!(f, "beq {label}"),
            Instr::Fence(k) => write!(f, "{k}"),
            Instr::Label(l) => write!(f, "{l}:"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum InitVal {
    Int(i64),
    Addr(String),
}

impl fmt::Display for InitVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitVal::Int(v) => write!(f, "{v}"),
            InitVal::Addr(l) => write!(f, "&{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observable {
    Reg { thread: usize, reg: Reg },
    Loc(String),
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Reg { thread, reg } => write!(f, "T{thread}:{reg}"),
            Observable::Loc(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Clause {
    True,
    Atom(Observable, i64),
    Not(Box<Clause>),
    And(Vec<Clause>),
    Or(Vec<Clause>),
}

impl Clause {
    pub fn observables(&self, out: &mut Vec<Observable>) {
        match self {
            Clause::True => {}
            Clause::Atom(o, _) => {
                if !out.contains(o) {
                    out.push(o.clone());
                }
            }
            Clause::Not(c) => c.observables(out),
            Clause::And(cs) | Clause::Or(cs) => cs.iter().for_each(|c| c.observables(out)),
        }
    }

    pub fn eval(&self, lookup: &impl Fn(&Observable) -> Option<i64>) -> bool {
        match self {
            Clause::True => true,
            Clause::Atom(o, v) => lookup(o) == Some(*v),
            Clause::Not(c) => !c.eval(lookup),
            Clause::And(cs) => cs.iter().all(|c| c.eval(lookup)),
            Clause::Or(cs) => cs.iter().any(|c| c.eval(lookup)),
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join(f: &mut fmt::Formatter<'_>, cs: &[Clause], op: &str) -> fmt::Result {
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                match c {
                    Clause::And(_) | Clause::Or(_) => write!(f, "({c})")?,
                    _ => write!(f, "{c}")?,
                }
            }
            Ok(())
        }
        match self {
            Clause::True => f.write_str("true"),
            Clause::Atom(o, v) => write!(f, "{o}={v}"),
            Clause::Not(c) => write!(f, "~({c})"),
            Clause::And(cs) => join(f, cs, "/\\"),
            Clause::Or(cs) => join(f, cs, "\\/"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Exists,
    Forall,
    /// No predicate: report the listed observables.
    Observed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalCondition {
    pub quantifier: Quantifier,
    pub clause: Clause,
    /// Observables making up a final state; for `exists`/`forall` these are
    /// the ones mentioned by the clause.
    pub observed: Vec<Observable>,
}

impl FinalCondition {
    pub fn observed_only(observed: Vec<Observable>) -> Self {
        FinalCondition { quantifier: Quantifier::Observed, clause: Clause::True, observed }
    }
}

impl fmt::Display for FinalCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.quantifier {
            Quantifier::Exists => write!(f, "final exists ({})", self.clause),
            Quantifier::Forall => write!(f, "final forall ({})", self.clause),
            Quantifier::Observed => {
                write!(f, "final observed {{")?;
                for (i, o) in self.observed.iter().enumerate() {
                    write!(f, "{}{o}", if i > 0 { "; " } else { " " })?;
                }
                write!(f, " }}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Allowed,
    Forbidden,
}

impl Expectation {
    pub fn from_bool(allowed: bool) -> Self {
        if allowed {
            Expectation::Allowed
        } else {
            Expectation::Forbidden
        }
    }

    pub fn is_allowed(self) -> bool {
        self == Expectation::Allowed
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expectation::Allowed => "allowed",
            Expectation::Forbidden => "forbidden",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegInit {
    /// `None` binds the register in every thread.
    pub thread: Option<usize>,
    pub reg: Reg,
    pub value: InitVal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LitmusTest {
    pub name: String,
    pub arch: Arch,
    pub init_mem: Vec<(String, i64)>,
    pub init_regs: Vec<RegInit>,
    pub threads: Vec<Vec<Instr>>,
    /// Source positions parallel to `threads`.
    pub positions: Vec<Vec<Pos>>,
    pub final_cond: FinalCondition,
    pub expect: Vec<(String, Expectation)>,
}

impl LitmusTest {
    pub fn expectation(&self, model: &str) -> Option<Expectation> {
        self.expect.iter().find(|(m, _)| m == model).map(|(_, e)| *e)
    }
}

impl fmt::Display for LitmusTest {
    /// Block-form printer; its output parses back to an equal test (modulo positions).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.name, self.arch)?;
        write!(f, "init {{")?;
        for (l, v) in &self.init_mem {
            write!(f, " {l}={v};")?;
        }
        for ri in &self.init_regs {
            match ri.thread {
                Some(t) => write!(f, " T{t}:{}={};", ri.reg, ri.value)?,
                None => write!(f, " {}={};", ri.reg, ri.value)?,
            }
        }
        writeln!(f, " }}")?;
        for (t, body) in self.threads.iter().enumerate() {
            writeln!(f, "thread T{t} {{")?;
            for i in body {
                writeln!(f, "  {i}")?;
            }
            writeln!(f, "}}")?;
        }
        writeln!(f, "{}", self.final_cond)?;
        if !self.expect.is_empty() {
            write!(f, "expect {{")?;
            for (m, e) in &self.expect {
                write!(f, " {m}: {e};")?;
            }
            writeln!(f, " }}")?;
        }
        Ok(())
    }
}
