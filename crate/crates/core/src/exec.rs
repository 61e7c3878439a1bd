//! Candidate executions: enumeration of rf and co, derived relations, final states.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cat::{evaluate, EvalOptions, ModelAst};
use crate::error::LitmusError;
use crate::event::Loc;
use crate::litmus::{Expectation, FinalCondition, Observable, Program, Quantifier, Val};
use crate::relation::{derive_fr, split_scope, EventId, Relation};

/// An execution witness `(E, po, rf, co)` with its derived relations cached.
/// `E` and `po` live in the [`Program`] it was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub rf: Relation,
    pub co: Relation,
    pub fr: Relation,
    pub com: Relation,
    pub rfe: Relation,
    pub rfi: Relation,
    pub coe: Relation,
    pub coi: Relation,
    pub fre: Relation,
    pub fri: Relation,
    /// rf source of each read, indexed by event id.
    pub rf_source: Vec<Option<EventId>>,
}

impl Candidate {
    pub fn new(prog: &Program, rf: Relation, co: Relation) -> Self {
        let fr = derive_fr(&rf, &co);
        let com = co.union(&rf).union(&fr);
        let thread = |e: EventId| prog.events[e].thread;
        let (rfi, rfe) = split_scope(&rf, thread);
        let (coi, coe) = split_scope(&co, thread);
        let (fri, fre) = split_scope(&fr, thread);
        let mut rf_source = vec![None; prog.len()];
        for (w, r) in rf.pairs() {
            rf_source[r] = Some(w);
        }
        Candidate { rf, co, fr, com, rfe, rfi, coe, coi, fre, fri, rf_source }
    }

    pub fn read_value(&self, prog: &Program, r: EventId) -> i64 {
        let w = self.rf_source[r].expect("read has an rf source");
        prog.events[w].write_value().expect("rf source is a write")
    }

    /// Check the well-formedness conditions on rf and co.
    pub fn check_well_formed(&self, prog: &Program) -> Result<(), String> {
        for r in prog.reads() {
            let srcs: Vec<_> = self.rf.predecessors(r).collect();
            if srcs.len() != 1 {
                return Err(format!("read {} has {} rf sources", prog.event_name(r), srcs.len()));
            }
            if !prog.same_loc(srcs[0], r) || !prog.events[srcs[0]].is_write() {
                return Err(format!("rf into {} crosses locations", prog.event_name(r)));
            }
        }
        for (a, b) in self.co.pairs() {
            if !prog.same_loc(a, b) || !prog.events[a].is_write() || !prog.events[b].is_write() {
                return Err("co relates events that are not same-location writes".into());
            }
        }
        if !self.co.is_acyclic() || self.co.plus() != self.co {
            return Err("co is not a strict order".into());
        }
        for a in prog.writes() {
            for b in prog.writes() {
                if a != b && prog.same_loc(a, b) && !self.co.contains(a, b) && !self.co.contains(b, a) {
                    return Err("co is not total per location".into());
                }
            }
            if prog.events[a].is_init() && self.co.predecessors(a).next().is_some() {
                return Err("init write is not co-first".into());
            }
        }
        Ok(())
    }

    /// Final value of each location: the co-maximal write.
    pub fn final_memory(&self, prog: &Program) -> Vec<i64> {
        (0..prog.locs.len())
            .map(|l| {
                let w = prog
                    .writes()
                    .filter(|&w| prog.events[w].loc() == Some(l))
                    .find(|&w| !self.co.has_successor(w))
                    .expect("each location has an init write");
                prog.events[w].write_value().expect("write")
            })
            .collect()
    }
}

/// Values of the observed registers and locations.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FinalState(pub BTreeMap<Observable, Val>);

impl FinalState {
    pub fn get(&self, o: &Observable) -> Option<i64> {
        self.0.get(o).and_then(|v| v.as_int())
    }

    pub fn render(&self, prog: &Program) -> String {
        let mut s = String::new();
        for (i, (o, v)) in self.0.iter().enumerate() {
            if i > 0 {
                s.push_str("; ");
            }
            match v {
                Val::Int(x) => s.push_str(&format!("{o}={x}")),
                Val::Addr(l) => s.push_str(&format!("{o}=&{}", prog.locs[*l])),
            }
        }
        s
    }
}

impl fmt::Display for FinalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (o, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match v {
                Val::Int(x) => write!(f, "{o}={x}")?,
                Val::Addr(l) => write!(f, "{o}=&{l}")?,
            }
        }
        Ok(())
    }
}

/// Final state of a candidate over the test's observables.
pub fn final_state(prog: &Program, cand: &Candidate) -> FinalState {
    let regs = prog.regs.run(|r| cand.read_value(prog, r));
    let mem = cand.final_memory(prog);
    let mut m = BTreeMap::new();
    for o in &prog.final_cond.observed {
        let v = match o {
            Observable::Reg { thread, reg } => regs[*thread].get(reg).copied().unwrap_or(Val::Int(0)),
            Observable::Loc(l) => Val::Int(prog.loc_index(l).map(|i| mem[i]).unwrap_or(0)),
        };
        m.insert(o.clone(), v);
    }
    FinalState(m)
}

/// Does the clause of `cond` hold on this candidate?
pub fn evaluate_final(prog: &Program, cand: &Candidate, cond: &FinalCondition) -> Result<bool, String> {
    let regs = prog.regs.run(|r| cand.read_value(prog, r));
    let mem = cand.final_memory(prog);
    let mut obs = Vec::new();
    cond.clause.observables(&mut obs);
    for o in &obs {
        match o {
            Observable::Reg { thread, .. } if *thread >= prog.nthreads => return Err(format!("unknown register {o}")),
            Observable::Loc(l) if prog.loc_index(l).is_none() => return Err(format!("unknown location {o}")),
            _ => {}
        }
    }
    let lookup = |o: &Observable| match o {
        Observable::Reg { thread, reg } => regs[*thread].get(reg).and_then(|v| v.as_int()),
        Observable::Loc(l) => prog.loc_index(l).map(|i| mem[i]),
    };
    Ok(cond.clause.eval(&lookup))
}

/// Combine per-candidate clause results under the quantifier.
pub fn condition_holds(quantifier: Quantifier, satisfied_by_allowed: impl Iterator<Item = bool>) -> bool {
    let v: Vec<bool> = satisfied_by_allowed.collect();
    match quantifier {
        Quantifier::Exists => v.iter().any(|b| *b),
        Quantifier::Forall => v.iter().all(|b| *b),
        Quantifier::Observed => !v.is_empty(),
    }
}

/// Lexicographic permutations of `items`, in rank order.
pub fn permutations<T: Clone + Ord>(items: &[T]) -> Vec<Vec<T>> {
    let mut cur: Vec<T> = items.to_vec();
    cur.sort();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else { return out };
        let j = (i..cur.len()).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// Every choice of rf: one same-location write per read.
pub fn enumerate_rf(prog: &Program) -> Vec<Relation> {
    let reads: Vec<EventId> = prog.reads().collect();
    let options: Vec<Vec<EventId>> =
        reads.iter().map(|&r| prog.writes().filter(|&w| prog.same_loc(w, r)).collect()).collect();
    odometer(&options)
        .into_iter()
        .map(|choice| Relation::from_pairs(prog.len(), choice.into_iter().zip(reads.iter().copied())))
        .collect()
}

/// Every choice of co: per location, each permutation of program writes after the init write.
pub fn enumerate_co(prog: &Program) -> Vec<Relation> {
    let per_loc: Vec<Vec<Vec<EventId>>> = (0..prog.locs.len())
        .map(|l| {
            let ws: Vec<EventId> =
                prog.writes().filter(|&w| !prog.events[w].is_init() && prog.events[w].loc() == Some(l)).collect();
            permutations(&ws)
        })
        .collect();
    let idx: Vec<Vec<usize>> = per_loc.iter().map(|p| (0..p.len()).collect()).collect();
    odometer(&idx)
        .into_iter()
        .map(|choice| {
            let mut co = Relation::empty(prog.len());
            for (l, &k) in choice.iter().enumerate() {
                let mut order = vec![l as Loc];
                order.extend(per_loc[l][k].iter().copied());
                for i in 0..order.len() {
                    for j in i + 1..order.len() {
                        co.insert(order[i], order[j]);
                    }
                }
            }
            co
        })
        .collect()
}

/// Cartesian product, first position most significant.
fn odometer<T: Clone>(options: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for opts in options {
        let mut next = Vec::with_capacity(out.len() * opts.len());
        for prefix in &out {
            for o in opts {
                let mut v = prefix.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Closed-form number of candidates: co permutations times rf choices.
pub fn candidate_count(prog: &Program) -> usize {
    let fact = |k: usize| (1..=k).product::<usize>();
    let co: usize = (0..prog.locs.len())
        .map(|l| fact(prog.writes().filter(|&w| !prog.events[w].is_init() && prog.events[w].loc() == Some(l)).count()))
        .product();
    let rf: usize = prog.reads().map(|r| prog.writes().filter(|&w| prog.same_loc(w, r)).count()).product();
    co * rf
}

/// Lazy stream of candidates, co-major then rf.
pub struct CandidateStream<'a> {
    prog: &'a Program,
    cos: Vec<Relation>,
    rfs: Vec<Relation>,
    next: usize,
    pub generated: usize,
    pub well_formed: usize,
}

impl<'a> Iterator for CandidateStream<'a> {
    type Item = Candidate;
    fn next(&mut self) -> Option<Candidate> {
        let total = self.cos.len() * self.rfs.len();
        if self.next >= total {
            return None;
        }
        let (ci, ri) = (self.next / self.rfs.len(), self.next % self.rfs.len());
        self.next += 1;
        self.generated += 1;
        self.well_formed += 1;
        Some(Candidate::new(self.prog, self.rfs[ri].clone(), self.cos[ci].clone()))
    }
}

pub fn build_candidates(prog: &Program) -> CandidateStream<'_> {
    CandidateStream { prog, cos: enumerate_co(prog), rfs: enumerate_rf(prog), next: 0, generated: 0, well_formed: 0 }
}

/// The SC oracle: `acyclic(po | com)`.
pub fn sc_oracle(prog: &Program, cand: &Candidate) -> bool {
    prog.po.union(&cand.com).is_acyclic()
}

/// The TSO oracle: sc per location, and `acyclic((po \ WR) | co | rfe | fr | mfence)`.
///
/// The global check sees only `rfe`, so without the per-location part it
/// would accept a read from a po-later write (coRW1) and the like.
pub fn tso_oracle(prog: &Program, cand: &Candidate) -> bool {
    sc_per_location(prog, cand) && tso_global(prog, cand)
}

/// `acyclic((po \ WR) | co | rfe | fr | mfence)` alone.
pub fn tso_global(prog: &Program, cand: &Candidate) -> bool {
    let ppo = prog.po.filter_pairs(|a, b| !(prog.events[a].is_write() && prog.events[b].is_read()));
    ppo.union(&cand.co)
        .union(&cand.rfe)
        .union(&cand.fr)
        .union(&prog.fence(crate::event::FenceKind::Mfence))
        .is_acyclic()
}

/// Is `acyclic(po-loc | com)`?
pub fn sc_per_location(prog: &Program, cand: &Candidate) -> bool {
    prog.po_loc.union(&cand.com).is_acyclic()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub eval: EvalOptions,
    /// Reject candidates failing `acyclic(po-loc|com)` before the model runs.
    pub prune_sc_per_location: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateResult {
    pub index: usize,
    pub allowed: bool,
    /// Names of failing checks; `sc-per-location` alone when pruned.
    pub failed: Vec<String>,
    pub pruned: bool,
    pub state: FinalState,
    /// Does the final clause hold on this candidate?
    pub satisfies: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestVerdict {
    /// Some allowed candidate satisfies the clause.
    pub condition_reachable: bool,
    /// The condition under its quantifier.
    pub condition_holds: bool,
    pub allowed_states: BTreeSet<FinalState>,
    pub per_candidate: Vec<CandidateResult>,
    pub generated: usize,
    pub allowed_count: usize,
    pub check_failures: BTreeMap<String, usize>,
}

impl TestVerdict {
    /// `allowed` iff the final condition holds under its quantifier.
    pub fn outcome(&self) -> Expectation {
        Expectation::from_bool(self.condition_holds)
    }

    /// Failing checks of the candidates that satisfy the clause.
    pub fn blocking_checks(&self) -> BTreeSet<String> {
        self.per_candidate.iter().filter(|c| c.satisfies && !c.allowed).flat_map(|c| c.failed.iter().cloned()).collect()
    }
}

/// Run every candidate of `prog` through `model`.
pub fn verdict(prog: &Program, model: &ModelAst, opts: &RunOptions) -> Result<TestVerdict, LitmusError> {
    let mut per_candidate = Vec::new();
    let mut check_failures = BTreeMap::new();
    let mut stream = build_candidates(prog);
    for (index, cand) in stream.by_ref().enumerate() {
        let satisfies = evaluate_final(prog, &cand, &prog.final_cond).map_err(LitmusError::UnknownObservable)?;
        let state = final_state(prog, &cand);
        let (allowed, failed, pruned) = if opts.prune_sc_per_location && !sc_per_location(prog, &cand) {
            (false, vec!["sc-per-location".to_string()], true)
        } else {
            let (v, _) = evaluate(model, prog, &cand, &opts.eval);
            (v.allowed, v.failed().map(str::to_string).collect(), false)
        };
        for f in &failed {
            *check_failures.entry(f.clone()).or_insert(0) += 1;
        }
        per_candidate.push(CandidateResult { index, allowed, failed, pruned, state, satisfies });
    }
    let allowed: Vec<&CandidateResult> = per_candidate.iter().filter(|c| c.allowed).collect();
    let condition_reachable = allowed.iter().any(|c| c.satisfies);
    let condition_holds = condition_holds(prog.final_cond.quantifier, allowed.iter().map(|c| c.satisfies));
    Ok(TestVerdict {
        condition_reachable,
        condition_holds,
        allowed_states: allowed.iter().map(|c| c.state.clone()).collect(),
        allowed_count: allowed.len(),
        generated: stream.generated,
        per_candidate,
        check_failures,
    })
}
