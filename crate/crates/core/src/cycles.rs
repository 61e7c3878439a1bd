//! Static critical cycles: search over per-thread access sequences,
//! reduction, naming and classification by axiom.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CycleError;
use crate::event::{FenceKind, ThreadId};
use crate::litmus::Program;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dir {
    R,
    W,
}

impl Dir {
    fn letter(self) -> char {
        match self {
            Dir::R => 'r',
            Dir::W => 'w',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dep {
    Addr,
    Data,
    Ctrl,
    /// Control dependency followed by a control fence (isync, isb).
    CtrlCfence(FenceKind),
}

impl Dep {
    pub fn token(self) -> String {
        match self {
            Dep::Addr => "addr".into(),
            Dep::Data => "data".into(),
            Dep::Ctrl => "ctrl".into(),
            Dep::CtrlCfence(f) => format!("ctrl{}", f.name()),
        }
    }

    pub fn from_token(s: &str) -> Option<Dep> {
        match s {
            "addr" => Some(Dep::Addr),
            "data" => Some(Dep::Data),
            "ctrl" => Some(Dep::Ctrl),
            _ => s.strip_prefix("ctrl").and_then(FenceKind::from_name).filter(|f| f.is_control()).map(Dep::CtrlCfence),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StaticAccess {
    pub thread: ThreadId,
    pub po_index: usize,
    pub dir: Dir,
    pub loc: String,
    /// Fences between the previous access of the thread and this one.
    pub fences_before: Vec<FenceKind>,
    /// po-later accesses of the same thread (by `po_index`) depending on this one.
    pub deps: Vec<(usize, Dep)>,
}

/// Per-thread access sequences, sorted by thread then `po_index`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StaticProgram {
    pub name: String,
    pub accesses: Vec<StaticAccess>,
}

impl StaticProgram {
    pub fn from_program(prog: &Program) -> Self {
        let mut ids: Vec<usize> = (prog.n_init..prog.len()).collect();
        ids.sort_by_key(|&e| (prog.events[e].thread, prog.events[e].po_index));
        let mut accesses = Vec::new();
        for (k, &e) in ids.iter().enumerate() {
            let ev = &prog.events[e];
            let prev = ids[..k].iter().rev().find(|&&p| prog.events[p].thread == ev.thread).copied();
            let fences_before = match prev {
                Some(p) => FenceKind::ALL.iter().copied().filter(|&f| prog.fence(f).contains(p, e)).collect(),
                None => Vec::new(),
            };
            let mut deps = Vec::new();
            for &later in &ids[k + 1..] {
                let lev = &prog.events[later];
                if lev.thread != ev.thread {
                    continue;
                }
                let cfence = prog.ctrl_cfence.iter().find(|(_, r)| r.contains(e, later)).map(|(f, _)| *f);
                let dep = if prog.addr.contains(e, later) {
                    Some(Dep::Addr)
                } else if prog.data.contains(e, later) {
                    Some(Dep::Data)
                } else if let Some(f) = cfence {
                    Some(Dep::CtrlCfence(f))
                } else if prog.ctrl.contains(e, later) {
                    Some(Dep::Ctrl)
                } else {
                    None
                };
                if let Some(d) = dep {
                    deps.push((lev.po_index, d));
                }
            }
            accesses.push(StaticAccess {
                thread: ev.thread,
                po_index: ev.po_index,
                dir: if ev.is_write() { Dir::W } else { Dir::R },
                loc: prog.locs[ev.loc().expect("memory event")].clone(),
                fences_before,
                deps,
            });
        }
        StaticProgram { name: prog.name.clone(), accesses }
    }

    /// Parse the thread-IR format:
    ///
    /// ```text
    /// name mp+lwsync+addr
    /// T0: W x; lwsync; W y
    /// T1: R y; addr; R x
    /// ```
    ///
    /// A fence name sits between the accesses it separates; a dependency
    /// token links the access before it to the access after it.
    pub fn parse(default_name: &str, text: &str) -> Result<Self, CycleError> {
        let mut name = default_name.to_string();
        let mut accesses = Vec::new();
        let mut seen_threads = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| CycleError::Syntax { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(n) = line.strip_prefix("name ") {
                name = n.trim().to_string();
                continue;
            }
            let (head, body) = line.split_once(':').ok_or_else(|| err("expected `T<n>: ...`".into()))?;
            let thread: ThreadId = head
                .trim()
                .strip_prefix('T')
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| err(format!("bad thread name `{}`", head.trim())))?;
            if !seen_threads.insert(thread) {
                return Err(err(format!("thread T{thread} given twice")));
            }
            let mut fences = Vec::new();
            let mut pending_dep: Option<Dep> = None;
            let mut po_index = 0;
            let first = accesses.len();
            for item in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let mut words = item.split_whitespace();
                let head = words.next().expect("non-empty item");
                match (head, words.next(), words.next()) {
                    ("R" | "W", Some(loc), None) => {
                        if let Some(d) = pending_dep.take() {
                            let prev: &mut StaticAccess = accesses[first..]
                                .last_mut()
                                .ok_or_else(|| err(format!("`{}` has no access before it", d.token())))?;
                            prev.deps.push((po_index, d));
                        }
                        accesses.push(StaticAccess {
                            thread,
                            po_index,
                            dir: if head == "R" { Dir::R } else { Dir::W },
                            loc: loc.to_string(),
                            fences_before: std::mem::take(&mut fences),
                            deps: Vec::new(),
                        });
                        po_index += 1;
                    }
                    (tok, None, None) => {
                        if let Some(f) = FenceKind::from_name(tok) {
                            fences.push(f);
                        } else if let Some(d) = Dep::from_token(tok) {
                            pending_dep = Some(d);
                        } else {
                            return Err(err(format!("unknown item `{tok}`")));
                        }
                    }
                    _ => return Err(err(format!("cannot read `{item}`"))),
                }
            }
            if let Some(d) = pending_dep {
                return Err(err(format!("`{}` has no access after it", d.token())));
            }
        }
        accesses.sort_by_key(|a| (a.thread, a.po_index));
        Ok(StaticProgram { name, accesses })
    }

    /// Fences and dependency on the po edge from access `a` to access `b`.
    fn po_annotation(&self, a: usize, b: usize) -> (Vec<FenceKind>, Option<Dep>) {
        let (x, y) = (&self.accesses[a], &self.accesses[b]);
        let mut fences: Vec<FenceKind> = self
            .accesses
            .iter()
            .filter(|z| z.thread == x.thread && z.po_index > x.po_index && z.po_index <= y.po_index)
            .flat_map(|z| z.fences_before.iter().copied())
            .collect();
        fences.sort();
        fences.dedup();
        let dep = x.deps.iter().find(|(t, _)| *t == y.po_index).map(|(_, d)| *d);
        (fences, dep)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Edge {
    Po { fences: Vec<FenceKind>, dep: Option<Dep>, same_loc: bool },
    /// A competing pair not yet resolved to rf, fr or co.
    Cmp,
    Rf { ext: bool },
    Fr { ext: bool },
    Co { ext: bool },
}

impl Edge {
    fn is_com(&self) -> bool {
        matches!(self, Edge::Rf { .. } | Edge::Fr { .. } | Edge::Co { .. })
    }

    /// Token used in pattern suffixes: strongest fence, else dependency, else `po`.
    fn suffix_token(&self) -> Option<String> {
        match self {
            Edge::Po { fences, dep, .. } => Some(
                fences
                    .iter()
                    .find(|f| !f.is_control())
                    .map(|f| f.name().to_string())
                    .or_else(|| dep.map(Dep::token))
                    .unwrap_or_else(|| "po".into()),
            ),
            _ => None,
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = |ext: &bool| if *ext { "e" } else { "i" };
        match self {
            Edge::Po { .. } => f.write_str(&self.suffix_token().expect("po token")),
            Edge::Cmp => f.write_str("cmp"),
            Edge::Rf { ext } => write!(f, "rf{}", e(ext)),
            Edge::Fr { ext } => write!(f, "fr{}", e(ext)),
            Edge::Co { ext } => write!(f, "co{}", e(ext)),
        }
    }
}

/// `edges[i]` goes from `nodes[i]` to `nodes[(i + 1) % len]`; nodes index `StaticProgram::accesses`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledCycle {
    pub nodes: Vec<usize>,
    pub edges: Vec<Edge>,
}

impl LabeledCycle {
    pub fn edge_string(&self) -> String {
        self.edges.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";")
    }

    /// Rotate so that the smallest node comes first.
    fn normalised(mut self) -> Self {
        if let Some(k) = (0..self.nodes.len()).min_by_key(|&i| self.nodes[i]) {
            self.nodes.rotate_left(k);
            self.edges.rotate_left(k);
        }
        self
    }

    /// Coherence shapes are cycles whose po edges all stay on one location.
    pub fn is_coherence(&self) -> bool {
        self.edges.iter().all(|e| e.is_com() || matches!(e, Edge::Po { same_loc: true, .. }))
    }
}

fn com_edge(sp: &StaticProgram, a: usize, b: usize) -> Edge {
    let (x, y) = (&sp.accesses[a], &sp.accesses[b]);
    let ext = x.thread != y.thread;
    match (x.dir, y.dir) {
        (Dir::W, Dir::R) => Edge::Rf { ext },
        (Dir::R, Dir::W) => Edge::Fr { ext },
        (Dir::W, Dir::W) => Edge::Co { ext },
        (Dir::R, Dir::R) => Edge::Cmp,
    }
}

fn competing(sp: &StaticProgram, a: usize, b: usize) -> bool {
    let (x, y) = (&sp.accesses[a], &sp.accesses[b]);
    x.thread != y.thread && x.loc == y.loc && (x.dir == Dir::W || y.dir == Dir::W)
}

fn po_edge(sp: &StaticProgram, a: usize, b: usize) -> Edge {
    let (fences, dep) = sp.po_annotation(a, b);
    Edge::Po { fences, dep, same_loc: sp.accesses[a].loc == sp.accesses[b].loc }
}

fn distinct<T: Ord>(v: &[T]) -> bool {
    v.iter().collect::<BTreeSet<_>>().len() == v.len()
}

/// Conditions (i) and (ii): per thread at most two accesses at distinct
/// locations; per location at most three accesses from distinct threads.
pub fn is_critical(sp: &StaticProgram, c: &LabeledCycle) -> bool {
    let mut per_thread: BTreeMap<ThreadId, Vec<&str>> = BTreeMap::new();
    let mut per_loc: BTreeMap<&str, Vec<ThreadId>> = BTreeMap::new();
    for &n in &c.nodes {
        let a = &sp.accesses[n];
        per_thread.entry(a.thread).or_default().push(&a.loc);
        per_loc.entry(&a.loc).or_default().push(a.thread);
    }
    per_thread.values().all(|v| v.len() <= 2 && distinct(v)) && per_loc.values().all(|v| v.len() <= 3 && distinct(v))
}

struct Search<'a> {
    sp: &'a StaticProgram,
    start: usize,
    path: Vec<usize>,
    edges: Vec<Edge>,
    threads: BTreeSet<ThreadId>,
    loc_count: BTreeMap<&'a str, usize>,
    out: Vec<LabeledCycle>,
}

impl<'a> Search<'a> {
    fn push(&mut self, n: usize, edge: Option<Edge>) {
        let a = &self.sp.accesses[n];
        self.path.push(n);
        if let Some(e) = edge {
            self.edges.push(e);
        }
        self.threads.insert(a.thread);
        *self.loc_count.entry(&a.loc).or_default() += 1;
    }

    fn pop(&mut self, had_edge: bool) {
        let n = self.path.pop().expect("non-empty path");
        if had_edge {
            self.edges.pop();
        }
        let a = &self.sp.accesses[n];
        // the thread stays visited while an earlier node of the path is on it
        if !self.path.iter().any(|&m| self.sp.accesses[m].thread == a.thread) {
            self.threads.remove(&a.thread);
        }
        *self.loc_count.get_mut(a.loc.as_str()).expect("counted") -= 1;
    }

    fn loc_full(&self, n: usize) -> bool {
        self.loc_count.get(self.sp.accesses[n].loc.as_str()).copied().unwrap_or(0) >= 3
    }

    /// `entered_by_cmp`: the current node was reached by a competing edge
    /// (or is the start), so a po step inside its thread is still possible.
    fn dfs(&mut self, entered_by_cmp: bool) {
        let sp = self.sp;
        let cur = *self.path.last().expect("non-empty path");
        let here = &sp.accesses[cur];
        if entered_by_cmp {
            for next in cur + 1..sp.accesses.len() {
                let t = &sp.accesses[next];
                if t.thread != here.thread {
                    break;
                }
                if t.loc == here.loc || self.loc_full(next) {
                    continue;
                }
                self.push(next, Some(po_edge(sp, cur, next)));
                self.dfs(false);
                self.pop(true);
            }
        }
        // close the cycle
        if self.path.len() > 1
            && competing(sp, cur, self.start)
            && self.edges.iter().any(|e| matches!(e, Edge::Po { .. }))
        {
            let mut edges = self.edges.clone();
            edges.push(com_edge(sp, cur, self.start));
            self.out.push(LabeledCycle { nodes: self.path.clone(), edges });
        }
        for next in self.start + 1..sp.accesses.len() {
            let t = &sp.accesses[next];
            if self.threads.contains(&t.thread) || !competing(sp, cur, next) || self.loc_full(next) {
                continue;
            }
            self.push(next, Some(com_edge(sp, cur, next)));
            self.dfs(true);
            self.pop(true);
        }
    }
}

fn coherence_shapes(sp: &StaticProgram) -> Vec<LabeledCycle> {
    let mut out = Vec::new();
    let acc = &sp.accesses;
    for i in 0..acc.len() {
        for j in i + 1..acc.len() {
            let (a, b) = (&acc[i], &acc[j]);
            if a.thread != b.thread {
                break;
            }
            if a.loc != b.loc {
                continue;
            }
            let po = po_edge(sp, i, j);
            let externals = || {
                (0..acc.len()).filter(move |&k| acc[k].thread != a.thread && acc[k].loc == a.loc && acc[k].dir == Dir::W)
            };
            match (a.dir, b.dir) {
                (Dir::W, Dir::W) => out.push(LabeledCycle { nodes: vec![i, j], edges: vec![po, Edge::Co { ext: false }] }),
                (Dir::R, Dir::W) => {
                    out.push(LabeledCycle { nodes: vec![i, j], edges: vec![po.clone(), Edge::Rf { ext: false }] });
                    for k in externals() {
                        out.push(LabeledCycle {
                            nodes: vec![i, j, k],
                            edges: vec![po.clone(), Edge::Co { ext: true }, Edge::Rf { ext: true }],
                        });
                    }
                }
                (Dir::W, Dir::R) => out.push(LabeledCycle { nodes: vec![i, j], edges: vec![po, Edge::Fr { ext: false }] }),
                (Dir::R, Dir::R) => {
                    for k in externals() {
                        out.push(LabeledCycle {
                            nodes: vec![i, j, k],
                            edges: vec![po.clone(), Edge::Fr { ext: true }, Edge::Rf { ext: true }],
                        });
                    }
                }
            }
        }
    }
    out
}

/// Critical cycles of `(cmp | po)+`, found by an elementary-circuit search
/// with the per-thread and per-location limits applied while searching,
/// followed by the coherence shapes.
pub fn find_critical_cycles(sp: &StaticProgram) -> Vec<LabeledCycle> {
    let mut out = Vec::new();
    for start in 0..sp.accesses.len() {
        let mut s = Search {
            sp,
            start,
            path: Vec::new(),
            edges: Vec::new(),
            threads: BTreeSet::new(),
            loc_count: BTreeMap::new(),
            out: Vec::new(),
        };
        s.push(start, None);
        s.dfs(true);
        out.extend(s.out);
    }
    out.extend(coherence_shapes(sp));
    out
}

/// Positions `i` where `edges[i];edges[i+1]` matches a reduction rule.
fn redexes(c: &LabeledCycle) -> Vec<usize> {
    let n = c.edges.len();
    if n <= 2 {
        return Vec::new();
    }
    (0..n)
        .filter(|&i| {
            matches!(
                (&c.edges[i], &c.edges[(i + 1) % n]),
                (Edge::Co { .. }, Edge::Co { .. }) | (Edge::Rf { .. }, Edge::Fr { .. }) | (Edge::Fr { .. }, Edge::Co { .. })
            )
        })
        .collect()
}

fn apply_redex(sp: &StaticProgram, c: &LabeledCycle, i: usize) -> LabeledCycle {
    let n = c.edges.len();
    let j = (i + 1) % n;
    let (from, to) = (c.nodes[i], c.nodes[(j + 1) % n]);
    let ext = sp.accesses[from].thread != sp.accesses[to].thread;
    let merged = match &c.edges[i] {
        Edge::Fr { .. } => Edge::Fr { ext },
        _ => Edge::Co { ext },
    };
    let mut nodes = c.nodes.clone();
    let mut edges = c.edges.clone();
    edges[i] = merged;
    nodes.remove(j);
    edges.remove(j);
    LabeledCycle { nodes, edges }.normalised()
}

/// Rewrite with `co;co = co`, `rf;fr = co`, `fr;co = fr` until no rule applies.
pub fn reduce_cycle(sp: &StaticProgram, c: &LabeledCycle) -> LabeledCycle {
    reduce_cycle_by(sp, c, |_| 0)
}

/// As [`reduce_cycle`], with `pick(k)` choosing which of `k` redexes to rewrite next.
pub fn reduce_cycle_by(sp: &StaticProgram, c: &LabeledCycle, mut pick: impl FnMut(usize) -> usize) -> LabeledCycle {
    let mut cur = c.clone().normalised();
    loop {
        let rs = redexes(&cur);
        if rs.is_empty() {
            return cur;
        }
        let k = pick(rs.len()) % rs.len();
        cur = apply_redex(sp, &cur, rs[k]);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternName {
    pub systematic: String,
    pub classic: Option<String>,
    /// Classic name (or systematic when there is none) plus fence/dependency suffix.
    pub full: String,
}

/// Classic names of the common shapes, keyed by systematic name.
pub const CLASSIC: &[(&str, &str)] = &[
    ("ww+rr", "mp"),
    ("wr+wr", "sb"),
    ("rw+rw", "lb"),
    ("w+rw+rr", "wrc"),
    ("ww+rw+rr", "isa2"),
    ("ww+ww", "2+2w"),
    ("w+rw+ww", "w+rw+2w"),
    ("w+rr+wr", "rwc"),
    ("ww+wr", "r"),
    ("ww+rw", "s"),
    ("ww+rr+wr", "w+rwc"),
    ("w+rr+w+rr", "iriw"),
];

/// Thread segments of the cycle: runs of consecutive nodes on one thread.
fn segments(sp: &StaticProgram, c: &LabeledCycle) -> Vec<(String, Option<String>)> {
    let n = c.nodes.len();
    let th = |i: usize| sp.accesses[c.nodes[i % n]].thread;
    // start at a node entered from another thread
    let Some(first) = (0..n).find(|&i| th(i + n - 1) != th(i)) else {
        let dirs: String = c.nodes.iter().map(|&x| sp.accesses[x].dir.letter()).collect();
        return vec![(dirs, c.edges.iter().find_map(|e| e.suffix_token()))];
    };
    let mut out = Vec::new();
    let mut i = first;
    while i < first + n {
        let mut dirs = String::from(sp.accesses[c.nodes[i % n]].dir.letter());
        let mut token = None;
        while i + 1 < first + n && th(i + 1) == th(i) {
            token = c.edges[i % n].suffix_token();
            i += 1;
            dirs.push(sp.accesses[c.nodes[i % n]].dir.letter());
        }
        out.push((dirs, token));
        i += 1;
    }
    out
}

fn coherence_name(sp: &StaticProgram, c: &LabeledCycle) -> Option<&'static str> {
    let k = c.edges.iter().position(|e| matches!(e, Edge::Po { .. }))?;
    let (a, b) = (sp.accesses[c.nodes[k]].dir, sp.accesses[c.nodes[(k + 1) % c.nodes.len()]].dir);
    Some(match (a, b, c.nodes.len()) {
        (Dir::W, Dir::W, _) => "coWW",
        (Dir::R, Dir::W, 2) => "coRW1",
        (Dir::R, Dir::W, _) => "coRW2",
        (Dir::W, Dir::R, _) => "coWR",
        (Dir::R, Dir::R, _) => "coRR",
    })
}

pub fn name_pattern(sp: &StaticProgram, c: &LabeledCycle) -> PatternName {
    let segs = segments(sp, c);
    let key = |rot: &[(String, Option<String>)]| {
        let dirs: Vec<Vec<u8>> =
            rot.iter().map(|(d, _)| d.bytes().map(|b| if b == b'w' { 0 } else { 1 }).collect()).collect();
        let toks: Vec<String> = rot.iter().map(|(_, t)| t.clone().unwrap_or_default()).collect();
        (dirs, toks)
    };
    let best = (0..segs.len())
        .map(|k| {
            let mut r = segs.clone();
            r.rotate_left(k);
            r
        })
        .min_by_key(|r| key(r))
        .unwrap_or_default();
    let systematic = best.iter().map(|(d, _)| d.as_str()).collect::<Vec<_>>().join("+");
    let classic = if c.is_coherence() {
        coherence_name(sp, c).map(str::to_string)
    } else {
        CLASSIC.iter().find(|(s, _)| *s == systematic).map(|(_, n)| n.to_string())
    };
    let tokens: Vec<&str> = best.iter().filter_map(|(_, t)| t.as_deref()).collect();
    let suffix = if c.is_coherence() || tokens.iter().all(|t| *t == "po") {
        String::new()
    } else if tokens.len() > 1 && tokens.iter().all(|t| *t == tokens[0]) {
        format!("+{}s", tokens[0])
    } else {
        tokens.iter().map(|t| format!("+{t}")).collect()
    };
    let full = format!("{}{}", classic.as_deref().unwrap_or(&systematic), suffix);
    PatternName { systematic, classic, full }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    ScPerLocation,
    NoThinAir,
    Observation,
    Propagation,
}

impl Axiom {
    pub fn as_str(self) -> &'static str {
        match self {
            Axiom::ScPerLocation => "sc-per-location",
            Axiom::NoThinAir => "no-thin-air",
            Axiom::Observation => "observation",
            Axiom::Propagation => "propagation",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Categorise a cycle under the SC instance of the model: `hb = po | fences | rfe`,
/// `prop = po | fences | rf | fr`.
pub fn classify(c: &LabeledCycle) -> Result<Axiom, CycleError> {
    if let Some(index) = c.edges.iter().position(|e| *e == Edge::Cmp) {
        return Err(CycleError::Unresolved { index });
    }
    let in_hb = |e: &Edge| matches!(e, Edge::Po { .. } | Edge::Rf { ext: true });
    let in_prop = |e: &Edge| matches!(e, Edge::Po { .. } | Edge::Rf { .. } | Edge::Fr { .. });
    if c.is_coherence() {
        return Ok(Axiom::ScPerLocation);
    }
    if c.edges.iter().all(in_hb) {
        return Ok(Axiom::NoThinAir);
    }
    let n = c.edges.len();
    let observation = (0..n).any(|k| {
        c.edges[k] == Edge::Fr { ext: true }
            && n >= 2
            && in_prop(&c.edges[(k + 1) % n])
            && (2..n).all(|d| in_hb(&c.edges[(k + d) % n]))
    });
    Ok(if observation { Axiom::Observation } else { Axiom::Propagation })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRef {
    pub thread: ThreadId,
    pub idx: usize,
    pub dir: Dir,
    pub loc: String,
}

/// One line of the cycle report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub input: String,
    pub name: String,
    pub systematic: String,
    pub classic: Option<String>,
    pub axiom: Axiom,
    pub edges: String,
    pub accesses: Vec<AccessRef>,
}

/// Find, reduce, deduplicate, name and classify the cycles of a program.
pub fn mine(sp: &StaticProgram) -> Vec<CycleRecord> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for raw in find_critical_cycles(sp) {
        let c = reduce_cycle(sp, &raw);
        if !seen.insert((c.nodes.clone(), c.edge_string())) {
            continue;
        }
        let name = name_pattern(sp, &c);
        let axiom = classify(&c).expect("mined cycles have resolved edges");
        out.push(CycleRecord {
            input: sp.name.clone(),
            name: name.full,
            systematic: name.systematic,
            classic: name.classic,
            axiom,
            edges: c.edge_string(),
            accesses: c
                .nodes
                .iter()
                .map(|&n| {
                    let a = &sp.accesses[n];
                    AccessRef { thread: a.thread, idx: a.po_index, dir: a.dir, loc: a.loc.clone() }
                })
                .collect(),
        });
    }
    out
}

/// Pattern frequencies, most frequent first, then by name.
pub fn frequency_table(records: &[CycleRecord]) -> Vec<(String, Axiom, usize)> {
    let mut counts: BTreeMap<(String, Axiom), usize> = BTreeMap::new();
    for r in records {
        let base = r.classic.clone().unwrap_or_else(|| r.systematic.clone());
        *counts.entry((base, r.axiom)).or_default() += 1;
    }
    let mut rows: Vec<_> = counts.into_iter().map(|((n, a), k)| (n, a, k)).collect();
    rows.sort_by(|x, y| y.2.cmp(&x.2).then_with(|| x.0.cmp(&y.0)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ir(text: &str) -> StaticProgram {
        StaticProgram::parse("t", text).unwrap()
    }

    #[test]
    fn parse_annotations() {
        let sp = ir("T0: W x; lwsync; W y\nT1: R y; addr; R x\n");
        assert_eq!(sp.accesses.len(), 4);
        assert_eq!(sp.accesses[1].fences_before, vec![FenceKind::Lwsync]);
        assert_eq!(sp.accesses[2].deps, vec![(1, Dep::Addr)]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(StaticProgram::parse("t", "T0: W x; frob"), Err(CycleError::Syntax { line: 1, .. })));
        assert!(StaticProgram::parse("t", "T0: addr; W x").is_err());
        assert!(StaticProgram::parse("t", "T0: W x\nT0: W y").is_err());
    }

    #[test]
    fn one_thread_distinct_locations() {
        assert!(find_critical_cycles(&ir("T0: W x; W y; R z")).is_empty());
    }

    #[test]
    fn single_thread_coww() {
        let sp = ir("T0: W x; W x");
        let recs = mine(&sp);
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].name, "coWW");
        assert_eq!(recs[0].axiom, Axiom::ScPerLocation);
    }

    #[test]
    fn mp_named_with_suffix() {
        let recs = mine(&ir("T0: W x; lwsync; W y\nT1: R y; addr; R x"));
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].name, "mp+lwsync+addr");
        assert_eq!(recs[0].systematic, "ww+rr");
        assert_eq!(recs[0].axiom, Axiom::Observation);
        assert_eq!(recs[0].edges, "lwsync;rfe;addr;fre");
    }

    #[test]
    fn co_chain_keeps_extremities() {
        let sp = ir("T0: W x; W y\nT1: W y\nT2: W y; W x");
        let c = LabeledCycle {
            nodes: vec![0, 1, 2, 3, 4],
            edges: vec![
                po_edge(&sp, 0, 1),
                Edge::Co { ext: true },
                Edge::Co { ext: true },
                po_edge(&sp, 3, 4),
                Edge::Co { ext: true },
            ],
        };
        let r = reduce_cycle(&sp, &c);
        assert_eq!(r.nodes, vec![0, 1, 3, 4]);
        assert_eq!(r.edge_string(), "po;coe;po;coe");
        assert_eq!(reduce_cycle(&sp, &r), r);
    }

    #[test]
    fn unresolved_edge_is_an_error() {
        let c = LabeledCycle { nodes: vec![0, 1], edges: vec![Edge::Cmp, Edge::Fr { ext: true }] };
        assert_eq!(classify(&c), Err(CycleError::Unresolved { index: 0 }));
    }
}
