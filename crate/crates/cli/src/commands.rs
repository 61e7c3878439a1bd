use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use memcat_core::exec::CandidateResult;
use memcat_core::machine::trace;
use memcat_core::models::bundled_litmus_dir;
use memcat_core::{
    build_candidates, enumerate_accepted, load_program, mine, parse_litmus, verdict, BuiltinModel, Context,
    EvalOptions, Expectation, FinalState, MachineError, MachineOptions, Program, RunOptions, StaticProgram,
};
use rayon::prelude::*;

use crate::record::{CompareRecord, ErrorRecord, InputRecord, MachineRecord, Record, RunRecord, Status};

/// Expand files, directories and glob patterns. Directories contribute the
/// files whose extension is in `exts`.
pub fn expand_inputs(args: &[String], bundled: bool, exts: &[&str]) -> (Vec<PathBuf>, Vec<Record>) {
    let mut files = BTreeSet::new();
    let mut errors = Vec::new();
    let add_dir = |dir: &Path, files: &mut BTreeSet<PathBuf>, errors: &mut Vec<Record>| match std::fs::read_dir(dir) {
        Ok(rd) => {
            for e in rd.flatten() {
                let p = e.path();
                if p.extension().is_some_and(|x| exts.iter().any(|e| x == *e)) {
                    files.insert(p);
                }
            }
        }
        Err(e) => errors.push(error(dir, e)),
    };
    if bundled {
        add_dir(&bundled_litmus_dir(), &mut files, &mut errors);
    }
    for a in args {
        let p = Path::new(a);
        if p.is_dir() {
            add_dir(p, &mut files, &mut errors);
        } else if p.exists() {
            files.insert(p.to_path_buf());
        } else if a.contains(['*', '?', '[']) {
            match glob::glob(a) {
                Ok(paths) => {
                    let before = files.len();
                    files.extend(paths.flatten().filter(|p| p.is_file()));
                    if files.len() == before {
                        errors.push(error(p, "pattern matches no files"));
                    }
                }
                Err(e) => errors.push(error(p, e)),
            }
        } else {
            errors.push(error(p, "no such file"));
        }
    }
    (files.into_iter().collect(), errors)
}

fn error(file: &Path, e: impl std::fmt::Display) -> Record {
    Record::Error(failure(file, e))
}

fn failure(file: &Path, e: impl std::fmt::Display) -> ErrorRecord {
    ErrorRecord { file: file.display().to_string(), error: e.to_string() }
}

fn read(file: &Path) -> Result<String, ErrorRecord> {
    std::fs::read_to_string(file).map_err(|e| failure(file, e))
}

fn load(file: &Path) -> Result<(Program, Vec<(String, Expectation)>), ErrorRecord> {
    let text = read(file)?;
    let test = parse_litmus(&text).map_err(|e| failure(file, e))?;
    let prog = load_program(&text).map_err(|e| failure(file, e))?;
    Ok((prog, test.expect))
}

fn states(prog: &Program, s: &BTreeSet<FinalState>) -> Vec<String> {
    s.iter().map(|x| x.render(prog)).collect()
}

/// Run `f` over `files` in parallel; groups come out sorted by their first record.
fn each<F>(files: &[PathBuf], mut records: Vec<Record>, f: F) -> Vec<Record>
where
    F: Fn(&Path) -> Vec<Record> + Sync,
{
    let mut per_file: Vec<Vec<Record>> = files.par_iter().map(|p| f(p)).collect();
    per_file.sort_by(|a, b| a.first().map(Record::key).cmp(&b.first().map(Record::key)));
    records.extend(per_file.into_iter().flatten());
    records
}

pub fn run(model: &BuiltinModel, opts: &RunOptions, files: &[PathBuf], errors: Vec<Record>) -> Vec<Record> {
    each(files, errors, |file| {
        let (prog, expect) = match load(file) {
            Ok(x) => x,
            Err(e) => return vec![Record::Error(e)],
        };
        let v = match verdict(&prog, &model.ast, opts) {
            Ok(v) => v,
            Err(e) => return vec![error(file, e)],
        };
        let expected = expect.iter().find(|(m, _)| *m == model.name).map(|(_, e)| *e);
        let status = match expected {
            None => Status::Unchecked,
            Some(e) if e == v.outcome() => Status::Pass,
            Some(_) => Status::Fail,
        };
        vec![Record::Run(RunRecord {
            test: prog.name.clone(),
            file: file.display().to_string(),
            model: model.name.clone(),
            verdict: v.outcome(),
            expected,
            status,
            candidates: v.generated,
            allowed: v.allowed_count,
            states: states(&prog, &v.allowed_states),
            check_failures: v.check_failures.clone(),
            blocking: v.blocking_checks().into_iter().collect(),
        })]
    })
}

/// Checks failed by candidates whose state lies in `only`.
fn failing_on(per: &[CandidateResult], only: &BTreeSet<FinalState>) -> Vec<String> {
    let set: BTreeSet<String> =
        per.iter().filter(|c| only.contains(&c.state)).flat_map(|c| c.failed.iter().cloned()).collect();
    set.into_iter().collect()
}

pub fn compare(
    a: &BuiltinModel,
    b: &BuiltinModel,
    opts: &RunOptions,
    files: &[PathBuf],
    errors: Vec<Record>,
) -> Vec<Record> {
    each(files, errors, |file| {
        let (prog, _) = match load(file) {
            Ok(x) => x,
            Err(e) => return vec![Record::Error(e)],
        };
        let (va, vb) = match (verdict(&prog, &a.ast, opts), verdict(&prog, &b.ast, opts)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(e), _) | (_, Err(e)) => return vec![error(file, e)],
        };
        let only_a: BTreeSet<FinalState> = va.allowed_states.difference(&vb.allowed_states).cloned().collect();
        let only_b: BTreeSet<FinalState> = vb.allowed_states.difference(&va.allowed_states).cloned().collect();
        vec![Record::Compare(CompareRecord {
            test: prog.name.clone(),
            file: file.display().to_string(),
            model_a: a.name.clone(),
            model_b: b.name.clone(),
            verdict_a: va.outcome(),
            verdict_b: vb.outcome(),
            checks_a: failing_on(&va.per_candidate, &only_b),
            checks_b: failing_on(&vb.per_candidate, &only_a),
            diverges: va.outcome() != vb.outcome() || !only_a.is_empty() || !only_b.is_empty(),
            only_a: states(&prog, &only_a),
            only_b: states(&prog, &only_b),
        })]
    })
}

pub fn machine(
    model: &BuiltinModel,
    bound: usize,
    opts: MachineOptions,
    with_trace: bool,
    files: &[PathBuf],
    errors: Vec<Record>,
) -> Vec<Record> {
    each(files, errors, |file| {
        let (prog, _) = match load(file) {
            Ok(x) => x,
            Err(e) => return vec![Record::Error(e)],
        };
        let mut rec = MachineRecord {
            test: prog.name.clone(),
            file: file.display().to_string(),
            model: model.name.clone(),
            status: Status::Skipped,
            events: prog.program_events(),
            bound,
            candidates: 0,
            machine_states: Vec::new(),
            axiomatic_states: Vec::new(),
            traces: Vec::new(),
        };
        let m = match enumerate_accepted(&prog, &model.ast, bound, opts) {
            Ok(m) => m,
            Err(e @ MachineError::BoundExceeded { .. }) => {
                eprintln!("warning: skipping {}: {e}", prog.name);
                return vec![Record::Machine(rec)];
            }
            Err(e) => return vec![error(file, e)],
        };
        let v = match verdict(&prog, &model.ast, &RunOptions::default()) {
            Ok(v) => v,
            Err(e) => return vec![error(file, e)],
        };
        rec.status = if m.states == v.allowed_states { Status::Pass } else { Status::Fail };
        rec.candidates = m.candidates;
        rec.machine_states = states(&prog, &m.states);
        rec.axiomatic_states = states(&prog, &v.allowed_states);
        if with_trace {
            let cands: Vec<_> = build_candidates(&prog).collect();
            for (&i, path) in m.accepted.iter().zip(&m.paths) {
                let ctx = Context::from_model(&prog, &cands[i], &model.ast, &EvalOptions::default(), opts);
                rec.traces.push(trace(&prog, &ctx, path));
            }
        }
        vec![Record::Machine(rec)]
    })
}

fn static_program(file: &Path) -> Result<StaticProgram, ErrorRecord> {
    let text = read(file)?;
    if file.extension().is_some_and(|e| e == "litmus") {
        let prog = load_program(&text).map_err(|e| failure(file, e))?;
        Ok(StaticProgram::from_program(&prog))
    } else {
        let stem = file.file_stem().map_or_else(|| "input".to_string(), |s| s.to_string_lossy().into_owned());
        StaticProgram::parse(&stem, &text).map_err(|e| failure(file, e))
    }
}

pub fn cycles(files: &[PathBuf], errors: Vec<Record>) -> Vec<Record> {
    each(files, errors, |file| {
        let sp = match static_program(file) {
            Ok(sp) => sp,
            Err(e) => return vec![Record::Error(e)],
        };
        let found = mine(&sp);
        let mut out = vec![Record::Input(InputRecord {
            input: sp.name.clone(),
            file: file.display().to_string(),
            cycles: found.len(),
        })];
        out.extend(found.into_iter().map(Record::Cycle));
        out
    })
}
