//! Instruction event graphs, dependencies and projection to memory events.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::error::LitmusError;
use crate::event::{Action, Arch, Event, FenceKind, Loc, Port, Reg, ThreadId, INIT_THREAD};
use crate::relation::{EventId, Relation};

use super::ast::{FinalCondition, InitVal, Instr, LitmusTest, Observable};
use super::parse::writes_reg;

/// Flag register written by `cmp` and read by branches.
pub const FLAG_REG: &str = "%flag";

/// Concrete register or memory value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Val {
    Int(i64),
    Addr(Loc),
}

impl Val {
    pub fn as_int(self) -> Option<i64> {
        match self {
            Val::Int(v) => Some(v),
            Val::Addr(_) => None,
        }
    }
}

/// Statically known value, or one that depends on memory reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SVal {
    Known(Val),
    Dyn,
}

fn xor_val(a: Val, b: Val) -> Option<Val> {
    match (a, b) {
        (Val::Int(x), Val::Int(y)) => Some(Val::Int(x ^ y)),
        (Val::Addr(x), Val::Addr(y)) if x == y => Some(Val::Int(0)),
        _ => None,
    }
}

fn add_val(a: Val, b: Val) -> Option<Val> {
    match (a, b) {
        (Val::Int(x), Val::Int(y)) => Some(Val::Int(x.wrapping_add(y))),
        (Val::Int(0), Val::Addr(l)) | (Val::Addr(l), Val::Int(0)) => Some(Val::Addr(l)),
        _ => None,
    }
}

/// All events of a test with intra-instruction and register data flow.
#[derive(Debug, Clone)]
pub struct EventStructure {
    pub events: Vec<Event>,
    pub po: Relation,
    pub iico: Relation,
    pub rf_reg: Relation,
    pub nthreads: usize,
    pub locs: Vec<String>,
    /// Memory-event id produced by each instruction, per thread.
    pub instr_mem: Vec<Vec<Option<EventId>>>,
}

/// Dependency relations over the events of an [`EventStructure`].
#[derive(Debug, Clone)]
pub struct Dependencies {
    pub addr: Relation,
    pub data: Relation,
    pub ctrl: Relation,
    /// Keyed by control fence kind (isync, isb).
    pub ctrl_cfence: BTreeMap<FenceKind, Relation>,
    pub dd_reg: Relation,
}

impl Dependencies {
    pub fn dp(&self) -> Relation {
        self.addr.union(&self.data)
    }
}

/// Location table: init declarations first, then `&x` mentions.
fn location_table(test: &LitmusTest) -> Vec<String> {
    let mut locs: Vec<String> = Vec::new();
    for (l, _) in &test.init_mem {
        if !locs.contains(l) {
            locs.push(l.clone());
        }
    }
    for ri in &test.init_regs {
        if let InitVal::Addr(l) = &ri.value {
            if !locs.contains(l) {
                locs.push(l.clone());
            }
        }
    }
    for o in &test.final_cond.observed {
        if let Observable::Loc(l) = o {
            if !locs.contains(l) {
                locs.push(l.clone());
            }
        }
    }
    locs
}

fn init_regs_of(test: &LitmusTest, locs: &[String], thread: usize) -> HashMap<Reg, Val> {
    let mut m = HashMap::new();
    for ri in &test.init_regs {
        if ri.thread.is_none_or(|t| t == thread) {
            let v = match &ri.value {
                InitVal::Int(v) => Val::Int(*v),
                InitVal::Addr(l) => Val::Addr(locs.iter().position(|x| x == l).expect("location in table")),
            };
            m.insert(ri.reg.clone(), v);
        }
    }
    m
}

struct ThreadBuilder<'a> {
    thread: usize,
    events: &'a mut Vec<Event>,
    iico: &'a mut Vec<(EventId, EventId)>,
    rf_reg: &'a mut Vec<(EventId, EventId)>,
    mine: Vec<EventId>,
    regs: HashMap<Reg, (SVal, Option<EventId>)>,
}

impl ThreadBuilder<'_> {
    fn event(&mut self, action: Action, origin: usize) -> EventId {
        let id = self.events.len();
        let po_index = self.mine.len();
        self.events.push(Event { id, thread: self.thread, po_index, action, origin });
        self.mine.push(id);
        id
    }

    fn read(&mut self, reg: &str, port: Port, origin: usize) -> Result<(EventId, SVal), LitmusError> {
        let Some(&(v, writer)) = self.regs.get(reg) else {
            let shown = if reg == FLAG_REG { "flag (no preceding cmp)".to_string() } else { reg.to_string() };
            return Err(LitmusError::UndefinedRegister { thread: self.thread, reg: shown });
        };
        let e = self.event(Action::RegRead { reg: reg.to_string(), port }, origin);
        if let Some(w) = writer {
            self.rf_reg.push((w, e));
        }
        Ok((e, v))
    }

    fn write(&mut self, reg: &str, v: SVal, origin: usize) -> EventId {
        let w = self.event(Action::RegWrite { reg: reg.to_string() }, origin);
        self.regs.insert(reg.to_string(), (v, Some(w)));
        w
    }
}

/// Build the event graph of every instruction, in program order.
pub fn elaborate(test: &LitmusTest) -> Result<EventStructure, LitmusError> {
    let locs = location_table(test);
    let mut events: Vec<Event> = Vec::new();
    let mut iico_pairs = Vec::new();
    let mut rf_pairs = Vec::new();
    let mut instr_mem = Vec::new();
    let mut thread_events: Vec<Vec<EventId>> = Vec::new();

    for (t, body) in test.threads.iter().enumerate() {
        let regs = init_regs_of(test, &locs, t).into_iter().map(|(r, v)| (r, (SVal::Known(v), None))).collect();
        let mut b = ThreadBuilder {
            thread: t,
            events: &mut events,
            iico: &mut iico_pairs,
            rf_reg: &mut rf_pairs,
            mine: Vec::new(),
            regs,
        };
        let mut mem_of = Vec::new();
        for (k, instr) in body.iter().enumerate() {
            let mut mem = None;
            match instr {
                Instr::MovConst { dst, value } => {
                    b.write(dst, SVal::Known(Val::Int(*value)), k);
                }
                Instr::Load { dst, addr } => {
                    let (ra, av) = b.read(addr, Port::Address, k)?;
                    let loc = static_addr(t, addr, av)?;
                    let m = b.event(Action::MemRead { loc }, k);
                    let w = b.write(dst, SVal::Dyn, k);
                    b.iico.extend([(ra, m), (m, w)]);
                    mem = Some(m);
                }
                Instr::Store { addr, src } => {
                    let (ra, av) = b.read(addr, Port::Address, k)?;
                    let (rv, vv) = b.read(src, Port::Value, k)?;
                    let loc = static_addr(t, addr, av)?;
                    let value = match vv {
                        SVal::Known(Val::Int(v)) => v,
                        SVal::Known(Val::Addr(_)) => {
                            return Err(LitmusError::Address { thread: t, msg: format!("storing an address from `{src}`") })
                        }
                        SVal::Dyn => {
                            return Err(LitmusError::Address {
                                thread: t,
                                msg: format!("stored value in `{src}` is not statically known"),
                            })
                        }
                    };
                    let m = b.event(Action::MemWrite { loc, value }, k);
                    b.iico.extend([(ra, m), (rv, m)]);
                    mem = Some(m);
                }
                Instr::Xor { dst, a, b: rb } | Instr::Add { dst, a, b: rb } => {
                    let (ea, va) = b.read(a, Port::Value, k)?;
                    let (eb, vb) = b.read(rb, Port::Value, k)?;
                    let is_xor = matches!(instr, Instr::Xor { .. });
                    let v = if is_xor && a == rb {
                        SVal::Known(Val::Int(0))
                    } else {
                        match (va, vb) {
                            (SVal::Known(x), SVal::Known(y)) => {
                                let r = if is_xor { xor_val(x, y) } else { add_val(x, y) };
                                match r {
                                    Some(v) => SVal::Known(v),
                                    None => {
                                        return Err(LitmusError::Address {
                                            thread: t,
                                            msg: format!("unsupported address arithmetic in `{instr}`"),
                                        })
                                    }
                                }
                            }
                            _ => SVal::Dyn,
                        }
                    };
                    let w = b.write(dst, v, k);
                    b.iico.extend([(ea, w), (eb, w)]);
                }
                Instr::Cmp { reg, .. } => {
                    let (e, _) = b.read(reg, Port::Value, k)?;
                    let w = b.write(FLAG_REG, SVal::Dyn, k);
                    b.iico.push((e, w));
                }
                Instr::Branch { .. } => {
                    let (e, _) = b.read(FLAG_REG, Port::Test, k)?;
                    let br = b.event(Action::Branch, k);
                    b.iico.push((e, br));
                }
                Instr::Fence(kind) => {
                    b.event(Action::Fence(*kind), k);
                }
                Instr::Label(_) => {}
            }
            mem_of.push(mem);
        }
        thread_events.push(b.mine);
        instr_mem.push(mem_of);
    }

    let n = events.len();
    let mut po = Relation::empty(n);
    for te in &thread_events {
        for (i, &a) in te.iter().enumerate() {
            for &b in &te[i + 1..] {
                po.insert(a, b);
            }
        }
    }
    Ok(EventStructure {
        events,
        po,
        iico: Relation::from_pairs(n, iico_pairs),
        rf_reg: Relation::from_pairs(n, rf_pairs),
        nthreads: test.threads.len(),
        locs,
        instr_mem,
    })
}

fn static_addr(thread: usize, reg: &Reg, v: SVal) -> Result<Loc, LitmusError> {
    match v {
        SVal::Known(Val::Addr(l)) => Ok(l),
        SVal::Known(Val::Int(_)) => {
            Err(LitmusError::Address { thread, msg: format!("register `{reg}` does not hold an address") })
        }
        SVal::Dyn => {
            Err(LitmusError::Address { thread, msg: format!("address in `{reg}` is not statically resolved") })
        }
    }
}

/// Register data flow from each memory read, then addr/data/ctrl by target port.
///
/// Chains run over register events only: a path stops at the first memory
/// access or branch it reaches.
pub fn compute_dependencies(es: &EventStructure) -> Dependencies {
    let n = es.events.len();
    let step = es.rf_reg.union(&es.iico);
    let mut dd_reg = Relation::empty(n);
    let mut addr = Relation::empty(n);
    let mut data = Relation::empty(n);
    let mut dd_rb = Relation::empty(n);
    for r in (0..n).filter(|&e| es.events[e].is_read()) {
        let mut seen = vec![false; n];
        let mut queue: VecDeque<EventId> = step.successors(r).collect();
        while let Some(x) = queue.pop_front() {
            if seen[x] {
                continue;
            }
            seen[x] = true;
            dd_reg.insert(r, x);
            let ev = &es.events[x];
            if ev.is_mem() || matches!(ev.action, Action::Branch) {
                continue;
            }
            queue.extend(step.successors(x));
        }
        for p in (0..n).filter(|&p| seen[p]) {
            let Action::RegRead { port, .. } = es.events[p].action else { continue };
            for e in es.iico.successors(p) {
                let target = &es.events[e];
                match port {
                    Port::Address if target.is_mem() => addr.insert(r, e),
                    Port::Value if target.is_write() => data.insert(r, e),
                    Port::Test if matches!(target.action, Action::Branch) => dd_rb.insert(r, e),
                    _ => {}
                }
            }
        }
    }
    let is_mem = |e: EventId| es.events[e].is_mem();
    let ctrl = dd_rb.seq(&es.po).filter(|_| true, is_mem);
    let mut ctrl_cfence = BTreeMap::new();
    for kind in [FenceKind::Isync, FenceKind::Isb] {
        let cf = es
            .po
            .filter(|b| matches!(es.events[b].action, Action::Branch), |f| es.events[f].action == Action::Fence(kind))
            .seq(&es.po)
            .filter(|_| true, is_mem);
        ctrl_cfence.insert(kind, dd_rb.seq(&cf));
    }
    Dependencies { addr, data, ctrl, ctrl_cfence, dd_reg }
}

/// Register replay used to compute final register values once rf is fixed.
#[derive(Debug, Clone)]
pub struct RegProgram {
    threads: Vec<Vec<(Instr, Option<EventId>)>>,
    init: Vec<HashMap<Reg, Val>>,
}

impl RegProgram {
    /// Final register file of every thread, given each memory read's value.
    pub fn run(&self, read_value: impl Fn(EventId) -> i64) -> Vec<HashMap<Reg, Val>> {
        let mut out = Vec::new();
        for (t, body) in self.threads.iter().enumerate() {
            let mut regs = self.init[t].clone();
            let get = |regs: &HashMap<Reg, Val>, r: &Reg| regs.get(r).copied().unwrap_or(Val::Int(0));
            for (instr, mem) in body {
                match instr {
                    Instr::MovConst { dst, value } => {
                        regs.insert(dst.clone(), Val::Int(*value));
                    }
                    Instr::Load { dst, .. } => {
                        let e = mem.expect("load has a memory event");
                        regs.insert(dst.clone(), Val::Int(read_value(e)));
                    }
                    Instr::Xor { dst, a, b } => {
                        let v = if a == b {
                            Val::Int(0)
                        } else {
                            xor_val(get(&regs, a), get(&regs, b)).unwrap_or(Val::Int(0))
                        };
                        regs.insert(dst.clone(), v);
                    }
                    Instr::Add { dst, a, b } => {
                        let v = add_val(get(&regs, a), get(&regs, b)).unwrap_or(Val::Int(0));
                        regs.insert(dst.clone(), v);
                    }
                    _ => {}
                }
            }
            out.push(regs);
        }
        out
    }
}

/// A test projected onto its memory events: the input of enumeration and models.
#[derive(Debug, Clone)]
pub struct Program {
    pub name: String,
    pub arch: Arch,
    pub locs: Vec<String>,
    /// Init writes first (one per location), then program memory events.
    pub events: Vec<Event>,
    pub n_init: usize,
    pub nthreads: usize,
    pub po: Relation,
    pub po_loc: Relation,
    pub addr: Relation,
    pub data: Relation,
    pub ctrl: Relation,
    pub ctrl_cfence: BTreeMap<FenceKind, Relation>,
    pub fences: BTreeMap<FenceKind, Relation>,
    pub final_cond: FinalCondition,
    pub expect: Vec<(String, super::ast::Expectation)>,
    pub regs: RegProgram,
    pub warnings: Vec<String>,
}

impl Program {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Number of program (non-init) memory events.
    pub fn program_events(&self) -> usize {
        self.events.len() - self.n_init
    }

    pub fn reads(&self) -> impl Iterator<Item = EventId> + '_ {
        (0..self.events.len()).filter(|&e| self.events[e].is_read())
    }

    pub fn writes(&self) -> impl Iterator<Item = EventId> + '_ {
        (0..self.events.len()).filter(|&e| self.events[e].is_write())
    }

    pub fn thread_of(&self, e: EventId) -> ThreadId {
        self.events[e].thread
    }

    pub fn same_loc(&self, a: EventId, b: EventId) -> bool {
        self.events[a].loc().is_some() && self.events[a].loc() == self.events[b].loc()
    }

    pub fn fence(&self, k: FenceKind) -> Relation {
        self.fences.get(&k).cloned().unwrap_or_else(|| Relation::empty(self.len()))
    }

    pub fn dp(&self) -> Relation {
        self.addr.union(&self.data)
    }

    pub fn loc_index(&self, name: &str) -> Option<Loc> {
        self.locs.iter().position(|l| l == name)
    }

    /// Short human name of a memory event, e.g. `c:Ry` or `init:x`.
    pub fn event_name(&self, e: EventId) -> String {
        let ev = &self.events[e];
        let loc = &self.locs[ev.loc().expect("memory event")];
        if ev.is_init() {
            return format!("init:{loc}");
        }
        let letter = if e - self.n_init < 26 {
            ((b'a' + (e - self.n_init) as u8) as char).to_string()
        } else {
            format!("e{}", e - self.n_init)
        };
        match ev.action {
            Action::MemRead { .. } => format!("{letter}:R{loc}"),
            Action::MemWrite { value, .. } => format!("{letter}:W{loc}={value}"),
            _ => unreachable!("memory event"),
        }
    }
}

/// Keep memory events, add init writes, and carry dependencies and fences over.
pub fn project(test: &LitmusTest, es: &EventStructure, deps: &Dependencies) -> Program {
    let nloc = es.locs.len();
    let mem: Vec<EventId> = (0..es.events.len()).filter(|&e| es.events[e].is_mem()).collect();
    let mut renum: HashMap<EventId, EventId> = HashMap::new();
    let mut events = Vec::new();
    for l in 0..nloc {
        let value = test.init_mem.iter().find(|(m, _)| *m == es.locs[l]).map(|(_, v)| *v).unwrap_or(0);
        events.push(Event { id: l, thread: INIT_THREAD, po_index: 0, action: Action::MemWrite { loc: l, value }, origin: usize::MAX });
    }
    for &e in &mem {
        let id = events.len();
        renum.insert(e, id);
        let mut ev = es.events[e].clone();
        ev.id = id;
        events.push(ev);
    }
    let n = events.len();
    let lift = |r: &Relation| {
        Relation::from_pairs(
            n,
            r.pairs().filter_map(|(a, b)| Some((*renum.get(&a)?, *renum.get(&b)?))),
        )
    };
    let po = lift(&es.po);
    let po_loc = po.filter_pairs(|a, b| events[a].loc() == events[b].loc());
    let mut fences = BTreeMap::new();
    for kind in FenceKind::ALL {
        let fence_events: Vec<EventId> =
            (0..es.events.len()).filter(|&f| es.events[f].action == Action::Fence(kind)).collect();
        let mut r = Relation::empty(n);
        for &f in &fence_events {
            for &a in &mem {
                if !es.po.contains(a, f) {
                    continue;
                }
                for &b in &mem {
                    if es.po.contains(f, b) {
                        r.insert(renum[&a], renum[&b]);
                    }
                }
            }
        }
        fences.insert(kind, r);
    }
    let ctrl_cfence = deps.ctrl_cfence.iter().map(|(k, r)| (*k, lift(r))).collect();

    let mut warnings = Vec::new();
    for l in 0..nloc {
        let mut vals: Vec<i64> = events.iter().filter(|e| e.loc() == Some(l)).filter_map(|e| e.write_value()).collect();
        let before = vals.len();
        vals.sort_unstable();
        vals.dedup();
        if vals.len() != before {
            warnings.push(format!("location {} has several writes of the same value", es.locs[l]));
        }
    }

    let threads = test
        .threads
        .iter()
        .enumerate()
        .map(|(t, body)| {
            body.iter()
                .cloned()
                .zip(es.instr_mem[t].iter().map(|m| m.map(|e| renum[&e])))
                .collect()
        })
        .collect();
    let init = (0..test.threads.len()).map(|t| init_regs_of(test, &es.locs, t)).collect();

    Program {
        name: test.name.clone(),
        arch: test.arch,
        locs: es.locs.clone(),
        events,
        n_init: nloc,
        nthreads: es.nthreads,
        po,
        po_loc,
        addr: lift(&deps.addr),
        data: lift(&deps.data),
        ctrl: lift(&deps.ctrl),
        ctrl_cfence,
        fences,
        final_cond: test.final_cond.clone(),
        expect: test.expect.clone(),
        regs: RegProgram { threads, init },
        warnings,
    }
}

/// Elaborate, compute dependencies, project.
pub fn prepare(test: &LitmusTest) -> Result<Program, LitmusError> {
    let es = elaborate(test)?;
    let deps = compute_dependencies(&es);
    let prog = project(test, &es, &deps);
    for o in &prog.final_cond.observed {
        if let Observable::Reg { thread, reg } = o {
            let written = test.threads[*thread].iter().any(|i| writes_reg(i) == Some(reg));
            if !written && !prog.regs.init[*thread].contains_key(reg) {
                return Err(LitmusError::UnknownObservable(o.to_string()));
            }
        }
    }
    Ok(prog)
}
