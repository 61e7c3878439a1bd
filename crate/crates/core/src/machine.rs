//! The intermediate machine: a path acceptor over commit, coherence-point,
//! satisfy and commit-read labels, plus witness paths and path enumeration.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use crate::cat::{evaluate, EvalOptions, ModelAst};
use crate::error::MachineError;
use crate::exec::{build_candidates, final_state, Candidate, FinalState};
use crate::litmus::Program;
use crate::relation::{EventId, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    CommitWrite(EventId),
    CoherencePoint(EventId),
    SatisfyRead { w: EventId, r: EventId },
    CommitRead { w: EventId, r: EventId },
}

impl Label {
    pub fn render(&self, prog: &Program) -> String {
        let n = |e: EventId| prog.event_name(e);
        match *self {
            Label::CommitWrite(w) => format!("c({})", n(w)),
            Label::CoherencePoint(w) => format!("cp({})", n(w)),
            Label::SatisfyRead { w, r } => format!("s({},{})", n(w), n(r)),
            Label::CommitRead { w, r } => format!("c({},{})", n(w), n(r)),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Label::CommitWrite(w) => write!(f, "c(w{w})"),
            Label::CoherencePoint(w) => write!(f, "cp(w{w})"),
            Label::SatisfyRead { w, r } => write!(f, "s(w{w},r{r})"),
            Label::CommitRead { w, r } => write!(f, "c(w{w},r{r})"),
        }
    }
}

/// Machine premises, named after the rule they belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Premise {
    CwCoWW,
    CwProp,
    CwFences,
    SrProp,
    CpCommitted,
    CpCoWW,
    CpProp,
    SrLocalOrCommitted,
    SrPpo,
    SrObservation,
    CrSatisfied,
    CrVisible,
    CrPpoRW,
    CrPpoRR,
    /// A label repeated, or a label naming the wrong kind of event.
    Malformed,
}

impl Premise {
    pub fn id(self) -> &'static str {
        match self {
            Premise::CwCoWW => "cw:coWW",
            Premise::CwProp => "cw:prop",
            Premise::CwFences => "cw:fences",
            Premise::CpCommitted => "cp:committed",
            Premise::CpCoWW => "cp:coWW",
            Premise::CpProp => "cp:prop",
            Premise::SrLocalOrCommitted => "sr:local-or-committed",
            Premise::SrPpo => "sr:ppo",
            Premise::SrObservation => "sr:observation",
            Premise::SrProp => "sr:prop",
            Premise::CrSatisfied => "cr:satisfied",
            Premise::CrVisible => "cr:visible",
            Premise::CrPpoRW => "cr:ppo-rw",
            Premise::CrPpoRR => "cr:ppo-rr",
            Premise::Malformed => "malformed",
        }
    }
}

impl fmt::Display for Premise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MachineOptions {
    /// Record the write of each committed read and refuse coRR at commit.
    pub corr: bool,
    /// Check the propagation premises against `prop+` (reflexively) and
    /// order satisfied reads along `prop+`. Without this a cycle of `prop`
    /// through reads alone, as in iriw+syncs, goes unnoticed.
    pub prop_closure: bool,
}

impl Default for MachineOptions {
    fn default() -> Self {
        MachineOptions { corr: true, prop_closure: true }
    }
}

/// Relations a path is checked against, computed from the candidate the path denotes.
#[derive(Debug, Clone)]
pub struct Context {
    pub po_loc: Relation,
    pub ppo: Relation,
    pub fences: Relation,
    pub prop: Relation,
    pub hb: Relation,
    pub co: Relation,
    pub rf: Relation,
    ppo_fences: Relation,
    prop_hb: Relation,
    /// `prop`, or `prop+` under `prop_closure`.
    prop_check: Relation,
    pub opts: MachineOptions,
}

impl Context {
    pub fn new(
        prog: &Program,
        cand: &Candidate,
        ppo: Relation,
        fences: Relation,
        prop: Relation,
        hb: Relation,
        opts: MachineOptions,
    ) -> Self {
        let ppo_fences = ppo.union(&fences);
        let prop_hb = prop.seq(&hb.star());
        let prop_check = if opts.prop_closure { prop.plus() } else { prop.clone() };
        Context {
            po_loc: prog.po_loc.clone(),
            ppo,
            fences,
            prop,
            hb,
            co: cand.co.clone(),
            rf: cand.rf.clone(),
            ppo_fences,
            prop_hb,
            prop_check,
            opts,
        }
    }

    /// Take `ppo`, `fence` (or `fences`), `prop` and `hb` from the model's bindings.
    pub fn from_model(
        prog: &Program,
        cand: &Candidate,
        model: &ModelAst,
        eval: &EvalOptions,
        opts: MachineOptions,
    ) -> Self {
        let (_, env) = evaluate(model, prog, cand, eval);
        let get = |names: &[&str]| {
            names.iter().find_map(|n| env.get(*n).cloned()).unwrap_or_else(|| Relation::empty(prog.len()))
        };
        let ppo = get(&["ppo"]);
        let fences = get(&["fence", "fences"]);
        let prop = get(&["prop"]);
        let hb = get(&["hb"]);
        Context::new(prog, cand, ppo, fences, prop, hb, opts)
    }

    fn self_prop(&self, e: EventId) -> bool {
        self.opts.prop_closure && self.prop_check.contains(e, e)
    }

    /// visible(w, r), with the coRR strengthening when enabled.
    fn visible(&self, prog: &Program, state: &MachineState, w: EventId, r: EventId) -> bool {
        let writes_po_loc = |before: bool| {
            prog.writes().filter(move |&x| if before { self.po_loc.contains(x, r) } else { self.po_loc.contains(r, x) })
        };
        // po is total per thread, so the last po-loc-before write is the one
        // with no po-loc-later write still before r
        let wb = writes_po_loc(true).find(|&x| !writes_po_loc(true).any(|y| self.po_loc.contains(x, y)));
        let wa = writes_po_loc(false).find(|&x| !writes_po_loc(false).any(|y| self.po_loc.contains(y, x)));
        if let Some(wb) = wb {
            if w != wb && !self.co.contains(wb, w) {
                return false;
            }
        }
        if !self.po_loc.contains(w, r) {
            if let Some(wa) = wa {
                if !self.co.contains(w, wa) {
                    return false;
                }
            }
        }
        if self.opts.corr {
            for (w2, r2) in &state.cr {
                if self.po_loc.contains(*r2, r) && self.co.contains(w, *w2) {
                    return false;
                }
                if self.po_loc.contains(r, *r2) && self.co.contains(*w2, w) {
                    return false;
                }
            }
        }
        true
    }
}

/// `(buff, rcp, sr, cr)`; init writes start committed and at their coherence point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    pub buff: BTreeSet<EventId>,
    pub rcp: Vec<EventId>,
    pub sr: BTreeSet<EventId>,
    /// Committed reads with the write they read from.
    pub cr: BTreeSet<(EventId, EventId)>,
}

impl MachineState {
    pub fn initial(prog: &Program) -> Self {
        let inits: Vec<EventId> = (0..prog.n_init).collect();
        MachineState { buff: inits.iter().copied().collect(), rcp: inits, sr: BTreeSet::new(), cr: BTreeSet::new() }
    }

    fn committed_read(&self, r: EventId) -> bool {
        self.cr.iter().any(|(_, x)| *x == r)
    }
}

/// One machine transition; returns the violated premise when it blocks.
pub fn step(prog: &Program, ctx: &Context, state: &MachineState, label: Label) -> Result<MachineState, Premise> {
    let mut next = state.clone();
    match label {
        Label::CommitWrite(w) => {
            if !prog.events[w].is_write() || state.buff.contains(&w) {
                return Err(Premise::Malformed);
            }
            if state.buff.iter().any(|&x| ctx.po_loc.contains(w, x)) {
                return Err(Premise::CwCoWW);
            }
            if state.buff.iter().any(|&x| ctx.prop_check.contains(w, x)) || ctx.self_prop(w) {
                return Err(Premise::CwProp);
            }
            if state.sr.iter().any(|&r| ctx.fences.contains(w, r)) {
                return Err(Premise::CwFences);
            }
            next.buff.insert(w);
        }
        Label::CoherencePoint(w) => {
            if !prog.events[w].is_write() || state.rcp.contains(&w) {
                return Err(Premise::Malformed);
            }
            if !state.buff.contains(&w) {
                return Err(Premise::CpCommitted);
            }
            if state.rcp.iter().any(|&x| ctx.po_loc.contains(w, x)) {
                return Err(Premise::CpCoWW);
            }
            if state.rcp.iter().any(|&x| ctx.prop_check.contains(w, x)) || ctx.self_prop(w) {
                return Err(Premise::CpProp);
            }
            next.rcp.push(w);
        }
        Label::SatisfyRead { w, r } => {
            if !prog.events[r].is_read() || !prog.events[w].is_write() || state.sr.contains(&r) {
                return Err(Premise::Malformed);
            }
            if !(ctx.po_loc.contains(w, r) || state.buff.contains(&w)) {
                return Err(Premise::SrLocalOrCommitted);
            }
            if state.sr.iter().any(|&x| ctx.ppo_fences.contains(r, x)) {
                return Err(Premise::SrPpo);
            }
            if ctx.co.successors(w).any(|x| ctx.prop_hb.contains(x, r)) {
                return Err(Premise::SrObservation);
            }
            if ctx.opts.prop_closure && (ctx.self_prop(r) || state.sr.iter().any(|&x| ctx.prop_check.contains(r, x))) {
                return Err(Premise::SrProp);
            }
            next.sr.insert(r);
        }
        Label::CommitRead { w, r } => {
            if !prog.events[r].is_read() || !prog.events[w].is_write() || state.committed_read(r) {
                return Err(Premise::Malformed);
            }
            if !state.sr.contains(&r) {
                return Err(Premise::CrSatisfied);
            }
            if !ctx.visible(prog, state, w, r) {
                return Err(Premise::CrVisible);
            }
            if state.buff.iter().any(|&x| ctx.ppo_fences.contains(r, x)) {
                return Err(Premise::CrPpoRW);
            }
            if state.sr.iter().any(|&x| ctx.ppo_fences.contains(r, x)) {
                return Err(Premise::CrPpoRR);
            }
            next.cr.insert((w, r));
        }
    }
    Ok(next)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Path(pub Vec<Label>);

impl Path {
    /// Do coherence-point labels occur in the same order as the commits of their writes?
    pub fn is_fifo(&self) -> bool {
        let pos = |l: Label| self.0.iter().position(|x| *x == l);
        let cps: Vec<EventId> = self
            .0
            .iter()
            .filter_map(|l| match l {
                Label::CoherencePoint(w) => Some(*w),
                _ => None,
            })
            .collect();
        cps.iter().enumerate().all(|(i, &a)| {
            cps[i + 1..].iter().all(|&b| pos(Label::CommitWrite(a)) < pos(Label::CommitWrite(b)))
        })
    }

    pub fn render(&self, prog: &Program) -> String {
        self.0.iter().map(|l| l.render(prog)).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// co from the order of coherence-point labels, rf from commit-read labels.
pub fn derive_from_path(prog: &Program, path: &Path) -> Result<(Relation, Relation), MachineError> {
    let n = prog.len();
    let count = |f: &dyn Fn(&Label) -> bool| path.0.iter().filter(|l| f(l)).count();
    for w in prog.writes().filter(|&w| !prog.events[w].is_init()) {
        if count(&|l| *l == Label::CommitWrite(w)) != 1 || count(&|l| *l == Label::CoherencePoint(w)) != 1 {
            return Err(MachineError::Malformed(format!("write {} needs one c and one cp label", prog.event_name(w))));
        }
    }
    let mut rf = Relation::empty(n);
    for r in prog.reads() {
        let sat: Vec<EventId> = path
            .0
            .iter()
            .filter_map(|l| match *l {
                Label::SatisfyRead { w, r: x } if x == r => Some(w),
                _ => None,
            })
            .collect();
        let com: Vec<EventId> = path
            .0
            .iter()
            .filter_map(|l| match *l {
                Label::CommitRead { w, r: x } if x == r => Some(w),
                _ => None,
            })
            .collect();
        if sat.len() != 1 || com.len() != 1 {
            return Err(MachineError::Malformed(format!("read {} needs one s and one c label", prog.event_name(r))));
        }
        let w = com[0];
        if sat[0] != w || !prog.events[w].is_write() || !prog.same_loc(w, r) {
            return Err(MachineError::ValueMismatch { write: w, read: r });
        }
        rf.insert(w, r);
    }
    let mut co = Relation::empty(n);
    let mut order: Vec<EventId> = (0..prog.n_init).collect();
    order.extend(path.0.iter().filter_map(|l| match l {
        Label::CoherencePoint(w) => Some(*w),
        _ => None,
    }));
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            if prog.same_loc(a, b) {
                co.insert(a, b);
            }
        }
    }
    Ok((co, rf))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blocked {
    pub index: usize,
    pub label: Label,
    pub premise: Premise,
}

/// Run a path from the initial state against a fixed context.
pub fn run(prog: &Program, ctx: &Context, path: &Path) -> Result<MachineState, Blocked> {
    let mut state = MachineState::initial(prog);
    for (index, &label) in path.0.iter().enumerate() {
        state = step(prog, ctx, &state, label).map_err(|premise| Blocked { index, label, premise })?;
    }
    Ok(state)
}

/// Does the machine accept `path`? The context comes from the candidate the path denotes.
pub fn accepts(
    prog: &Program,
    model: &ModelAst,
    path: &Path,
    opts: MachineOptions,
) -> Result<Result<(), Blocked>, MachineError> {
    let (co, rf) = derive_from_path(prog, path)?;
    let cand = Candidate::new(prog, rf, co);
    let ctx = Context::from_model(prog, &cand, model, &EvalOptions::default(), opts);
    Ok(run(prog, &ctx, path).map(|_| ()))
}

/// Trace dump: a header, then one label per line with its outcome.
pub fn trace(prog: &Program, ctx: &Context, path: &Path) -> String {
    let mut out = format!("# machine {}\n", prog.name);
    let mut state = MachineState::initial(prog);
    for &label in &path.0 {
        match step(prog, ctx, &state, label) {
            Ok(s) => {
                out.push_str(&format!("{} ok\n", label.render(prog)));
                state = s;
            }
            Err(p) => {
                out.push_str(&format!("{} blocked {p}\n", label.render(prog)));
                return out;
            }
        }
    }
    out.push_str("accepted\n");
    out
}

fn read_labels(rf: &Relation, r: EventId) -> (Label, Label) {
    let w = rf.predecessors(r).next().expect("every read has an rf source");
    (Label::SatisfyRead { w, r }, Label::CommitRead { w, r })
}

/// Build an accepted path for an axiomatically valid candidate.
///
/// Commit and satisfy labels are ordered first by topological sort of the
/// ordering constraints between them; coherence points follow in an order
/// extending `(co | prop)+`, ties broken by commit order. The result is fifo
/// whenever commits can follow co.
pub fn witness_path(prog: &Program, ctx: &Context) -> Result<Path, MachineError> {
    let writes: Vec<EventId> = prog.writes().filter(|&w| !prog.events[w].is_init()).collect();
    let reads: Vec<EventId> = prog.reads().collect();
    // node ids: c(w) for writes, then s(r) and c(r) for reads
    let mut nodes: Vec<Label> = writes.iter().map(|&w| Label::CommitWrite(w)).collect();
    for &r in &reads {
        let (s, c) = read_labels(&ctx.rf, r);
        nodes.push(s);
        nodes.push(c);
    }
    let idx = |l: Label| nodes.iter().position(|x| *x == l).expect("label node");
    let cw = |w: EventId| Label::CommitWrite(w);
    let sr = |r: EventId| read_labels(&ctx.rf, r).0;
    let cr = |r: EventId| read_labels(&ctx.rf, r).1;
    let mut g = Relation::empty(nodes.len());
    for &r in &reads {
        g.insert(idx(sr(r)), idx(cr(r)));
    }
    for (a, b) in ctx.fences.pairs() {
        if prog.events[a].is_write() && prog.events[b].is_read() && !prog.events[a].is_init() {
            g.insert(idx(cw(a)), idx(sr(b)));
        }
    }
    for &r in &reads {
        for w in ctx.rf.predecessors(r) {
            if !prog.events[w].is_init() && prog.thread_of(w) != prog.thread_of(r) {
                g.insert(idx(cw(w)), idx(sr(r)));
            }
        }
    }
    for (a, b) in ctx.ppo_fences.pairs() {
        if !prog.events[a].is_read() {
            continue;
        }
        if prog.events[b].is_read() {
            g.insert(idx(cr(a)), idx(sr(b)));
        } else if prog.events[b].is_write() {
            g.insert(idx(cr(a)), idx(cw(b)));
        }
    }
    for (a, b) in ctx.po_loc.union(&ctx.prop_check).pairs() {
        if writes.contains(&a) && writes.contains(&b) {
            g.insert(idx(cw(a)), idx(cw(b)));
        }
    }
    if ctx.opts.prop_closure {
        for (a, b) in ctx.prop_check.pairs() {
            if prog.events[a].is_read() && prog.events[b].is_read() {
                g.insert(idx(sr(a)), idx(sr(b)));
            }
        }
    }
    // commits in co order make the path fifo; some candidates make that
    // impossible (a co edge against an hb chain), then drop it
    let mut fifo = g.clone();
    for (a, b) in ctx.co.pairs() {
        if writes.contains(&a) && writes.contains(&b) {
            fifo.insert(idx(cw(a)), idx(cw(b)));
        }
    }
    let order = topo_sort(&fifo, |i| i)
        .or_else(|| topo_sort(&g, |i| i))
        .ok_or(MachineError::WitnessCycle)?;
    let mut labels: Vec<Label> = order.iter().map(|&i| nodes[i]).collect();

    let commit_rank = |w: EventId| labels.iter().position(|l| *l == Label::CommitWrite(w)).expect("committed");
    let mut cpg = Relation::empty(writes.len());
    for (i, &a) in writes.iter().enumerate() {
        for (j, &b) in writes.iter().enumerate() {
            if ctx.co.contains(a, b) || ctx.prop_check.contains(a, b) {
                cpg.insert(i, j);
            }
        }
    }
    let cp_order = topo_sort(&cpg, |i| commit_rank(writes[i])).ok_or(MachineError::WitnessCycle)?;
    labels.extend(cp_order.into_iter().map(|i| Label::CoherencePoint(writes[i])));
    Ok(Path(labels))
}

/// Kahn's algorithm, picking the ready node of least `key`.
fn topo_sort(g: &Relation, key: impl Fn(usize) -> usize) -> Option<Vec<usize>> {
    let n = g.universe();
    let mut indeg: Vec<usize> = (0..n).map(|j| g.predecessors(j).count()).collect();
    let mut done = vec![false; n];
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let next = (0..n).filter(|&i| !done[i] && indeg[i] == 0).min_by_key(|&i| (key(i), i))?;
        done[next] = true;
        out.push(next);
        for s in g.successors(next) {
            indeg[s] -= 1;
        }
    }
    Some(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MachineOutcome {
    /// Indices (in enumeration order) of candidates with an accepted path.
    pub accepted: BTreeSet<usize>,
    pub states: BTreeSet<FinalState>,
    pub candidates: usize,
    /// One accepted path per accepted candidate, same order as `accepted`.
    pub paths: Vec<Path>,
}

/// Search for an accepted path whose cp labels follow `ctx.co`.
pub fn find_path(prog: &Program, ctx: &Context) -> Option<Path> {
    let mut labels = Vec::new();
    for w in prog.writes().filter(|&w| !prog.events[w].is_init()) {
        labels.push(Label::CommitWrite(w));
        labels.push(Label::CoherencePoint(w));
    }
    for r in prog.reads() {
        let (s, c) = read_labels(&ctx.rf, r);
        labels.push(s);
        labels.push(c);
    }
    assert!(labels.len() < 64, "label set too large for the search");
    let full: u64 = if labels.len() == 64 { u64::MAX } else { (1u64 << labels.len()) - 1 };
    let mut dead = HashSet::new();
    let mut path = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        prog: &Program,
        ctx: &Context,
        labels: &[Label],
        full: u64,
        mask: u64,
        state: &MachineState,
        dead: &mut HashSet<u64>,
        path: &mut Vec<Label>,
    ) -> bool {
        if mask == full {
            return true;
        }
        if dead.contains(&mask) {
            return false;
        }
        for (i, &l) in labels.iter().enumerate() {
            if mask & (1 << i) != 0 {
                continue;
            }
            if let Label::CoherencePoint(w) = l {
                // coherence points must realise the candidate's co
                if ctx.co.predecessors(w).any(|x| !prog.events[x].is_init() && !state.rcp.contains(&x)) {
                    continue;
                }
            }
            if let Ok(next) = step(prog, ctx, state, l) {
                path.push(l);
                if dfs(prog, ctx, labels, full, mask | (1 << i), &next, dead, path) {
                    return true;
                }
                path.pop();
            }
        }
        dead.insert(mask);
        false
    }
    let init = MachineState::initial(prog);
    dfs(prog, ctx, &labels, full, 0, &init, &mut dead, &mut path).then_some(Path(path))
}

/// Every candidate of `prog` for which the machine accepts some path.
pub fn enumerate_accepted(
    prog: &Program,
    model: &ModelAst,
    bound: usize,
    opts: MachineOptions,
) -> Result<MachineOutcome, MachineError> {
    let events = prog.program_events();
    if events > bound {
        return Err(MachineError::BoundExceeded { events, bound });
    }
    let mut out = MachineOutcome::default();
    for (i, cand) in build_candidates(prog).enumerate() {
        out.candidates += 1;
        let ctx = Context::from_model(prog, &cand, model, &EvalOptions::default(), opts);
        if let Some(p) = find_path(prog, &ctx) {
            out.accepted.insert(i);
            out.states.insert(final_state(prog, &cand));
            out.paths.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::litmus::load_program;
    use crate::models::load_builtin;

    const MP: &str = "mp Power
init { x=0; y=0; r10=&x; r11=&y; }
thread T0 {
  mov r1, 1
  st [r10], r1
  st [r11], r1
}
thread T1 {
  ld r1, [r11]
  ld r2, [r10]
}
final exists (T1:r1=1 /\\ T1:r2=0)
";

    fn ctx_for(prog: &Program, rf: &[(EventId, EventId)]) -> Context {
        let power = load_builtin("power").unwrap();
        let cand = build_candidates(prog)
            .find(|c| rf.iter().all(|&(w, r)| c.rf.contains(w, r)))
            .expect("candidate");
        Context::from_model(prog, &cand, &power.ast, &EvalOptions::default(), MachineOptions::default())
    }

    #[test]
    fn empty_path_on_empty_program() {
        let prog = load_program("e generic\ninit { x=0; }\nthread T0 {\n}\n").unwrap();
        let power = load_builtin("power").unwrap();
        assert_eq!(accepts(&prog, &power.ast, &Path::default(), MachineOptions::default()).unwrap(), Ok(()));
    }

    #[test]
    fn co_ww_blocks() {
        let prog = load_program("t generic\ninit { x=0; r1=&x; }\nthread T0 {\n mov r2, 1\n st [r1], r2\n mov r2, 2\n st [r1], r2\n}\n").unwrap();
        let (w1, w2) = (prog.n_init, prog.n_init + 1);
        let ctx = ctx_for(&prog, &[]);
        let s = step(&prog, &ctx, &MachineState::initial(&prog), Label::CommitWrite(w2)).unwrap();
        assert_eq!(step(&prog, &ctx, &s, Label::CommitWrite(w1)), Err(Premise::CwCoWW));
    }

    #[test]
    fn local_uncommitted_write_satisfies() {
        let prog = load_program("t generic\ninit { x=0; r1=&x; }\nthread T0 {\n mov r2, 1\n st [r1], r2\n ld r3, [r1]\n}\n").unwrap();
        let (w, r) = (prog.n_init, prog.n_init + 1);
        let ctx = ctx_for(&prog, &[(w, r)]);
        assert!(step(&prog, &ctx, &MachineState::initial(&prog), Label::SatisfyRead { w, r }).is_ok());
    }

    #[test]
    fn single_write_witness() {
        let prog = load_program("t generic\ninit { x=0; r1=&x; }\nthread T0 {\n mov r2, 1\n st [r1], r2\n}\n").unwrap();
        let w = prog.n_init;
        let ctx = ctx_for(&prog, &[]);
        assert_eq!(witness_path(&prog, &ctx).unwrap(), Path(vec![Label::CommitWrite(w), Label::CoherencePoint(w)]));
    }

    #[test]
    fn mp_sc_witness_orders_commits() {
        let prog = load_program(MP).unwrap();
        let (a, b, c, d) = (prog.n_init, prog.n_init + 1, prog.n_init + 2, prog.n_init + 3);
        let ctx = ctx_for(&prog, &[(b, c), (a, d)]);
        let p = witness_path(&prog, &ctx).unwrap();
        let pos = |l: Label| p.0.iter().position(|x| *x == l).unwrap();
        assert!(pos(Label::CommitWrite(b)) < pos(Label::SatisfyRead { w: b, r: c }));
        assert!(run(&prog, &ctx, &p).is_ok());
        assert_eq!(derive_from_path(&prog, &p).unwrap(), (ctx.co.clone(), ctx.rf.clone()));
    }

    #[test]
    fn missing_cp_is_malformed() {
        let prog = load_program("t generic\ninit { x=0; r1=&x; }\nthread T0 {\n mov r2, 1\n st [r1], r2\n}\n").unwrap();
        let p = Path(vec![Label::CommitWrite(prog.n_init)]);
        assert!(matches!(derive_from_path(&prog, &p), Err(MachineError::Malformed(_))));
    }
}
