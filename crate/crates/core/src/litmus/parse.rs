//! Litmus text format. See `docs/litmus-format.md` for the grammar.

use crate::error::{LitmusError, Pos};
use crate::event::{Arch, FenceKind};

use super::ast::*;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Newline,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || c == '%'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-' | '+' | '%')
}

fn lex(text: &str, first_line: usize) -> Result<Vec<Token>, LitmusError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, first_line, 1);
    macro_rules! adv {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            out.push(Token { tok: Tok::Newline, pos });
            adv!();
        } else if c.is_whitespace() {
            adv!();
        } else if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                adv!();
            }
        } else if c == '(' && chars.get(i + 1) == Some(&'*') {
            adv!();
            adv!();
            loop {
                if i + 1 >= chars.len() {
                    return Err(LitmusError::Syntax { pos, msg: "unterminated comment".into() });
                }
                if chars[i] == '*' && chars[i + 1] == ')' {
                    adv!();
                    adv!();
                    break;
                }
                adv!();
            }
        } else if is_ident_start(c) {
            let mut s = String::new();
            while i < chars.len() && is_ident_char(chars[i]) {
                s.push(chars[i]);
                adv!();
            }
            out.push(Token { tok: Tok::Ident(s), pos });
        } else if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut s = String::new();
            s.push(c);
            adv!();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                adv!();
            }
            let v = s
                .parse()
                .map_err(|_| LitmusError::Syntax { pos, msg: format!("bad integer `{s}`") })?;
            out.push(Token { tok: Tok::Int(v), pos });
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let sym: &'static str = match two.as_str() {
                "/\\" => "/\\",
                "\\/" => "\\/",
                _ => match c {
                    '{' => "{",
                    '}' => "}",
                    '(' => "(",
                    ')' => ")",
                    '[' => "[",
                    ']' => "]",
                    ',' => ",",
                    ';' => ";",
                    ':' => ":",
                    '=' => "=",
                    '&' => "&",
                    '|' => "|",
                    '~' => "~",
                    _ => {
                        return Err(LitmusError::Syntax { pos, msg: format!("unexpected character `{c}`") })
                    }
                },
            };
            for _ in 0..sym.chars().count() {
                adv!();
            }
            out.push(Token { tok: Tok::Sym(sym), pos });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    eof: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|t| t.pos).unwrap_or(self.eof)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LitmusError> {
        Err(LitmusError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn skip_nl(&mut self) {
        while self.peek() == Some(&Tok::Newline) {
            self.i += 1;
        }
    }

    fn skip_seps(&mut self) {
        while matches!(self.peek(), Some(Tok::Newline) | Some(Tok::Sym(";"))) {
            self.i += 1;
        }
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.peek() == Some(&Tok::Sym(leak(s))) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), LitmusError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            None => "end of input".into(),
            Some(Tok::Ident(s)) => format!("`{s}`"),
            Some(Tok::Int(v)) => format!("`{v}`"),
            Some(Tok::Sym(s)) => format!("`{s}`"),
            Some(Tok::Newline) => "end of line".into(),
        }
    }

    fn peek_ident(&self) -> Option<&str> {
        match self.peek() {
            Some(Tok::Ident(s)) => Some(s),
            _ => None,
        }
    }

    fn ident(&mut self) -> Result<String, LitmusError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.i += 1;
                Ok(s)
            }
            _ => self.err(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn int(&mut self) -> Result<i64, LitmusError> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.i += 1;
                Ok(v)
            }
            _ => self.err(format!("expected integer, found {}", self.describe())),
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_ident() == Some(kw) {
            self.i += 1;
            true
        } else {
            false
        }
    }
}

fn leak(s: &str) -> &'static str {
    const SYMS: [&str; 15] = ["/\\", "\\/", "{", "}", "(", ")", "[", "]", ",", ";", ":", "=", "&", "|", "~"];
    SYMS.iter().copied().find(|x| *x == s).expect("known symbol")
}

/// `T3`, `P3` or `3`.
fn thread_index(tok: &Tok) -> Option<usize> {
    match tok {
        Tok::Int(v) if *v >= 0 => Some(*v as usize),
        Tok::Ident(s) => {
            let rest = s.strip_prefix('T').or_else(|| s.strip_prefix('P'))?;
            rest.parse().ok()
        }
        _ => None,
    }
}

/// Parse a litmus test from text.
pub fn parse_litmus(text: &str) -> Result<LitmusTest, LitmusError> {
    // header: first non-blank, non-comment line is `name arch`
    let mut header_line = 0;
    let mut header = None;
    for (n, l) in text.lines().enumerate() {
        let t = l.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with("//") {
            continue;
        }
        header_line = n;
        header = Some(t);
        break;
    }
    let header = header.ok_or(LitmusError::Syntax { pos: Pos { line: 1, col: 1 }, msg: "empty input".into() })?;
    let hpos = Pos { line: header_line + 1, col: 1 };
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(LitmusError::Syntax { pos: hpos, msg: "header must be `name arch`".into() });
    }
    let name = parts[0].to_string();
    let arch: Arch = parts[1].parse().map_err(|msg| LitmusError::Syntax { pos: hpos, msg })?;

    let rest: String = text.lines().skip(header_line + 1).collect::<Vec<_>>().join("\n");
    let toks = lex(&rest, header_line + 2)?;
    let eof = toks.last().map(|t| t.pos).unwrap_or(hpos);
    let mut p = Parser { toks, i: 0, eof };

    let mut test = LitmusTest {
        name,
        arch,
        init_mem: Vec::new(),
        init_regs: Vec::new(),
        threads: Vec::new(),
        positions: Vec::new(),
        final_cond: FinalCondition::observed_only(Vec::new()),
        expect: Vec::new(),
    };

    p.skip_nl();
    if p.eat_keyword("init") {
        parse_init(&mut p, &mut test)?;
    }
    p.skip_nl();
    if p.peek_ident() == Some("thread") {
        while p.eat_keyword("thread") {
            let pos = p.pos();
            let t = p.peek().and_then(thread_index);
            let Some(t) = t else { return p.err("expected thread name like T0") };
            p.i += 1;
            if t != test.threads.len() {
                return Err(LitmusError::Syntax { pos, msg: format!("expected thread T{}", test.threads.len()) });
            }
            p.skip_nl();
            p.expect_sym("{")?;
            let (body, poss) = parse_block(&mut p, arch)?;
            test.threads.push(body);
            test.positions.push(poss);
            p.skip_nl();
        }
    } else if p.peek().and_then(thread_index).is_some() {
        parse_columns(&mut p, &mut test, arch)?;
    }
    if test.threads.is_empty() {
        return Err(LitmusError::NoThreads);
    }
    p.skip_nl();
    if p.peek_ident() == Some("final") || matches!(p.peek_ident(), Some("exists" | "forall" | "observed")) {
        p.eat_keyword("final");
        test.final_cond = parse_final(&mut p)?;
    }
    p.skip_nl();
    if p.eat_keyword("expect") {
        p.skip_nl();
        p.expect_sym("{")?;
        loop {
            p.skip_seps();
            if p.eat_sym("}") {
                break;
            }
            let model = p.ident()?;
            p.expect_sym(":")?;
            let v = p.ident()?;
            let e = match v.as_str() {
                "allowed" => Expectation::Allowed,
                "forbidden" => Expectation::Forbidden,
                _ => return p.err(format!("expected allowed or forbidden, found `{v}`")),
            };
            test.expect.push((model, e));
        }
    }
    p.skip_nl();
    if p.peek().is_some() {
        return p.err(format!("unexpected {}", p.describe()));
    }
    check_observables(&test)?;
    check_branches(&test)?;
    Ok(test)
}

fn parse_init(p: &mut Parser, test: &mut LitmusTest) -> Result<(), LitmusError> {
    p.skip_nl();
    p.expect_sym("{")?;
    loop {
        p.skip_seps();
        if p.eat_sym("}") {
            return Ok(());
        }
        // `T0:r1=..`, `0:r1=..`, `r1=&x` or `x=0`
        let first = p.peek().cloned();
        let qualified = matches!(p.toks.get(p.i + 1).map(|t| &t.tok), Some(Tok::Sym(":")));
        if qualified {
            let Some(t) = first.as_ref().and_then(thread_index) else { return p.err("bad thread name") };
            p.i += 2;
            let reg = p.ident()?;
            p.expect_sym("=")?;
            let value = parse_init_val(p)?;
            test.init_regs.push(RegInit { thread: Some(t), reg, value });
        } else {
            let name = p.ident()?;
            p.expect_sym("=")?;
            let value = parse_init_val(p)?;
            match value {
                InitVal::Addr(_) => test.init_regs.push(RegInit { thread: None, reg: name, value }),
                InitVal::Int(v) => test.init_mem.push((name, v)),
            }
        }
    }
}

fn parse_init_val(p: &mut Parser) -> Result<InitVal, LitmusError> {
    if p.eat_sym("&") {
        Ok(InitVal::Addr(p.ident()?))
    } else {
        Ok(InitVal::Int(p.int()?))
    }
}

fn parse_block(p: &mut Parser, arch: Arch) -> Result<(Vec<Instr>, Vec<Pos>), LitmusError> {
    let mut body = Vec::new();
    let mut poss = Vec::new();
    loop {
        p.skip_seps();
        if p.eat_sym("}") {
            return Ok((body, poss));
        }
        if p.peek().is_none() {
            return p.err("unterminated thread block");
        }
        parse_instrs(p, arch, &mut body, &mut poss)?;
    }
}

/// One instruction, possibly preceded by a label.
fn parse_instrs(p: &mut Parser, arch: Arch, body: &mut Vec<Instr>, poss: &mut Vec<Pos>) -> Result<(), LitmusError> {
    let pos = p.pos();
    let op = p.ident()?;
    if p.eat_sym(":") {
        body.push(Instr::Label(op));
        poss.push(pos);
        if matches!(p.peek(), Some(Tok::Ident(_))) {
            return parse_instrs(p, arch, body, poss);
        }
        return Ok(());
    }
    let reg = |p: &mut Parser| p.ident();
    let instr = match op.as_str() {
        "mov" | "li" => {
            let dst = reg(p)?;
            p.expect_sym(",")?;
            Instr::MovConst { dst, value: p.int()? }
        }
        "ld" | "load" => {
            let dst = reg(p)?;
            p.expect_sym(",")?;
            p.expect_sym("[")?;
            let addr = reg(p)?;
            p.expect_sym("]")?;
            Instr::Load { dst, addr }
        }
        "st" | "store" => {
            p.expect_sym("[")?;
            let addr = reg(p)?;
            p.expect_sym("]")?;
            p.expect_sym(",")?;
            Instr::Store { addr, src: reg(p)? }
        }
        "xor" | "add" => {
            let dst = reg(p)?;
            p.expect_sym(",")?;
            let a = reg(p)?;
            p.expect_sym(",")?;
            let b = reg(p)?;
            if op == "xor" {
                Instr::Xor { dst, a, b }
            } else {
                Instr::Add { dst, a, b }
            }
        }
        "cmp" => {
            let r = reg(p)?;
            p.expect_sym(",")?;
            Instr::Cmp { reg: r, value: p.int()? }
        }
        "bne" | "beq" => {
            let cond = if op == "bne" { BranchCond::Ne } else { BranchCond::Eq };
            Instr::Branch { cond, label: p.ident()? }
        }
        _ => match FenceKind::from_name(&op) {
            Some(k) => {
                if !arch.allows(k) {
                    return Err(LitmusError::ForeignFence { pos, fence: op, arch: arch.to_string() });
                }
                Instr::Fence(k)
            }
            None if is_predicated(&op) => {
                return Err(LitmusError::Syntax {
                    pos,
                    msg: format!("unsupported instruction `{op}` (conditional execution is not modelled)"),
                })
            }
            None => return Err(LitmusError::Syntax { pos, msg: format!("unknown instruction `{op}`") }),
        },
    };
    body.push(instr);
    poss.push(pos);
    Ok(())
}

/// ARM-style conditionally executed forms such as `moveq` or `ldne`.
fn is_predicated(op: &str) -> bool {
    const BASES: [&str; 8] = ["mov", "li", "ld", "st", "xor", "add", "load", "store"];
    const CONDS: [&str; 4] = ["eq", "ne", "gt", "lt"];
    CONDS.iter().any(|c| op.strip_suffix(c).is_some_and(|b| BASES.contains(&b)))
}

fn parse_columns(p: &mut Parser, test: &mut LitmusTest, arch: Arch) -> Result<(), LitmusError> {
    // header row: T0 | T1 | ... ;
    let mut n = 0;
    loop {
        let pos = p.pos();
        let Some(t) = p.peek().and_then(thread_index) else { return p.err("expected thread name") };
        if t != n {
            return Err(LitmusError::Syntax { pos, msg: format!("expected thread T{n}") });
        }
        p.i += 1;
        n += 1;
        if !p.eat_sym("|") {
            break;
        }
    }
    p.eat_sym(";");
    test.threads = vec![Vec::new(); n];
    test.positions = vec![Vec::new(); n];
    loop {
        p.skip_nl();
        if p.peek().is_none() || matches!(p.peek_ident(), Some("final" | "exists" | "forall" | "observed" | "expect")) {
            return Ok(());
        }
        // collect one line of tokens
        let start = p.i;
        while !matches!(p.peek(), None | Some(Tok::Newline)) {
            p.i += 1;
        }
        let line: Vec<Token> = p.toks[start..p.i].to_vec();
        let mut cells: Vec<Vec<Token>> = vec![Vec::new()];
        for t in line {
            match t.tok {
                Tok::Sym("|") => cells.push(Vec::new()),
                _ => cells.last_mut().expect("cell").push(t),
            }
        }
        if let Some(last) = cells.last_mut() {
            if matches!(last.last().map(|t| &t.tok), Some(Tok::Sym(";"))) {
                last.pop();
            }
        }
        if cells.len() != n {
            return Err(LitmusError::Syntax {
                pos: p.toks[start].pos,
                msg: format!("row has {} cells, expected {n}", cells.len()),
            });
        }
        for (t, cell) in cells.into_iter().enumerate() {
            if cell.is_empty() {
                continue;
            }
            let mut sub = Parser { toks: cell, i: 0, eof: p.eof };
            while sub.peek().is_some() {
                parse_instrs(&mut sub, arch, &mut test.threads[t], &mut test.positions[t])?;
                sub.skip_seps();
            }
        }
    }
}

fn parse_final(p: &mut Parser) -> Result<FinalCondition, LitmusError> {
    let q = p.ident()?;
    match q.as_str() {
        "exists" | "forall" => {
            let clause = parse_or(p)?;
            let mut observed = Vec::new();
            clause.observables(&mut observed);
            let quantifier = if q == "exists" { Quantifier::Exists } else { Quantifier::Forall };
            Ok(FinalCondition { quantifier, clause, observed })
        }
        "observed" => {
            p.expect_sym("{")?;
            let mut observed = Vec::new();
            loop {
                p.skip_seps();
                if p.eat_sym("}") {
                    break;
                }
                observed.push(parse_observable(p)?);
            }
            Ok(FinalCondition::observed_only(observed))
        }
        _ => p.err(format!("unknown quantifier `{q}`")),
    }
}

fn parse_or(p: &mut Parser) -> Result<Clause, LitmusError> {
    let mut cs = vec![parse_and(p)?];
    while p.eat_sym("\\/") {
        cs.push(parse_and(p)?);
    }
    Ok(if cs.len() == 1 { cs.pop().expect("one") } else { Clause::Or(cs) })
}

fn parse_and(p: &mut Parser) -> Result<Clause, LitmusError> {
    let mut cs = vec![parse_unary(p)?];
    while p.eat_sym("/\\") {
        cs.push(parse_unary(p)?);
    }
    Ok(if cs.len() == 1 { cs.pop().expect("one") } else { Clause::And(cs) })
}

fn parse_unary(p: &mut Parser) -> Result<Clause, LitmusError> {
    p.skip_nl();
    if p.eat_sym("~") {
        return Ok(Clause::Not(Box::new(parse_unary(p)?)));
    }
    if p.eat_sym("(") {
        let c = parse_or(p)?;
        p.skip_nl();
        p.expect_sym(")")?;
        return Ok(c);
    }
    if p.eat_keyword("true") {
        return Ok(Clause::True);
    }
    let o = parse_observable(p)?;
    p.expect_sym("=")?;
    Ok(Clause::Atom(o, p.int()?))
}

fn parse_observable(p: &mut Parser) -> Result<Observable, LitmusError> {
    let qualified = matches!(p.toks.get(p.i + 1).map(|t| &t.tok), Some(Tok::Sym(":")));
    if qualified {
        let Some(thread) = p.peek().and_then(thread_index) else { return p.err("bad thread name") };
        p.i += 2;
        Ok(Observable::Reg { thread, reg: p.ident()? })
    } else {
        Ok(Observable::Loc(p.ident()?))
    }
}

fn check_observables(test: &LitmusTest) -> Result<(), LitmusError> {
    for o in &test.final_cond.observed {
        let known = match o {
            Observable::Loc(l) => {
                test.init_mem.iter().any(|(m, _)| m == l)
                    || test.init_regs.iter().any(|r| r.value == InitVal::Addr(l.clone()))
            }
            Observable::Reg { thread, reg } => {
                *thread < test.threads.len()
                    && (test.threads[*thread].iter().any(|i| writes_reg(i) == Some(reg))
                        || test.init_regs.iter().any(|r| &r.reg == reg && r.thread.is_none_or(|t| t == *thread)))
            }
        };
        if !known {
            return Err(LitmusError::UnknownObservable(o.to_string()));
        }
    }
    Ok(())
}

pub(crate) fn writes_reg(i: &Instr) -> Option<&String> {
    match i {
        Instr::MovConst { dst, .. } | Instr::Load { dst, .. } | Instr::Xor { dst, .. } | Instr::Add { dst, .. } => {
            Some(dst)
        }
        _ => None,
    }
}

fn check_branches(test: &LitmusTest) -> Result<(), LitmusError> {
    for (body, poss) in test.threads.iter().zip(&test.positions) {
        let mut seen = std::collections::HashSet::new();
        for (k, i) in body.iter().enumerate() {
            if let Instr::Label(l) = i {
                if !seen.insert(l) {
                    return Err(LitmusError::Syntax { pos: poss[k], msg: format!("duplicate label `{l}`") });
                }
            }
        }
        for (k, i) in body.iter().enumerate() {
            if let Instr::Branch { label, .. } = i {
                if !seen.contains(label) {
                    return Err(LitmusError::UndefinedLabel { pos: poss[k], label: label.clone() });
                }
                if body.get(k + 1) != Some(&Instr::Label(label.clone())) {
                    return Err(LitmusError::NonLocalBranch { pos: poss[k], label: label.clone() });
                }
            }
        }
    }
    Ok(())
}
