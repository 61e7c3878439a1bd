//! Report records and the table renderer.
//!
//! `--format jsonl` prints one record per line. `--format table` prints
//! `render_table` of the same records, so the table never carries
//! information the records lack.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use memcat_core::cycles::frequency_table;
use memcat_core::{CycleRecord, Expectation};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// No expectation for this model in the test file.
    Unchecked,
    /// Over the machine bound.
    Skipped,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Unchecked => "-",
            Status::Skipped => "SKIP",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub test: String,
    pub file: String,
    pub model: String,
    pub verdict: Expectation,
    pub expected: Option<Expectation>,
    pub status: Status,
    pub candidates: usize,
    pub allowed: usize,
    /// Allowed final states.
    pub states: Vec<String>,
    pub check_failures: BTreeMap<String, usize>,
    /// Checks failed by candidates that satisfy the final clause.
    pub blocking: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareRecord {
    pub test: String,
    pub file: String,
    pub model_a: String,
    pub model_b: String,
    pub verdict_a: Expectation,
    pub verdict_b: Expectation,
    /// States allowed by a only.
    pub only_a: Vec<String>,
    pub only_b: Vec<String>,
    /// Checks of a failing on the states only b allows.
    pub checks_a: Vec<String>,
    pub checks_b: Vec<String>,
    pub diverges: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineRecord {
    pub test: String,
    pub file: String,
    pub model: String,
    pub status: Status,
    pub events: usize,
    pub bound: usize,
    pub candidates: usize,
    pub machine_states: Vec<String>,
    pub axiomatic_states: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<String>,
}

/// One cycles input and how many cycles it produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub input: String,
    pub file: String,
    pub cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub file: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Record {
    Run(RunRecord),
    Compare(CompareRecord),
    Machine(MachineRecord),
    Input(InputRecord),
    Cycle(CycleRecord),
    Error(ErrorRecord),
}

impl Record {
    /// Sort key for deterministic output.
    pub fn key(&self) -> (&str, &str) {
        match self {
            Record::Run(r) => (&r.test, &r.file),
            Record::Compare(r) => (&r.test, &r.file),
            Record::Machine(r) => (&r.test, &r.file),
            Record::Input(r) => (&r.input, &r.file),
            Record::Cycle(r) => (&r.input, "~"),
            Record::Error(r) => ("", &r.file),
        }
    }
}

/// 2 on any error record, else 1 on any mismatch or divergence, else 0.
pub fn exit_code(records: &[Record]) -> i32 {
    if records.iter().any(|r| matches!(r, Record::Error(_))) {
        return 2;
    }
    let bad = records.iter().any(|r| match r {
        Record::Run(r) => r.status == Status::Fail,
        Record::Machine(r) => r.status == Status::Fail,
        Record::Compare(r) => r.diverges,
        _ => false,
    });
    i32::from(bad)
}

pub fn to_jsonl(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<Record>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}

fn columns(rows: &[Vec<String>]) -> String {
    let n = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..n).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in rows {
        let mut line = String::new();
        for (c, cell) in r.iter().enumerate() {
            if c + 1 == r.len() {
                line.push_str(cell);
            } else {
                let _ = write!(line, "{cell:<w$}  ", w = widths[c]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn join_or_dash(v: &[String]) -> String {
    if v.is_empty() {
        "-".to_string()
    } else {
        v.join(",")
    }
}

fn row(cells: &[&str]) -> Vec<String> {
    cells.iter().map(|s| s.to_string()).collect()
}

fn render_runs(out: &mut String, runs: &[&RunRecord]) {
    let mut rows =
        vec![row(&["test", "model", "verdict", "expected", "status", "allowed/cand", "failures", "blocking"])];
    for r in runs {
        let failures: Vec<String> = r.check_failures.iter().map(|(k, v)| format!("{k}={v}")).collect();
        rows.push(vec![
            r.test.clone(),
            r.model.clone(),
            r.verdict.to_string(),
            r.expected.map_or("-".to_string(), |e| e.to_string()),
            r.status.as_str().to_string(),
            format!("{}/{}", r.allowed, r.candidates),
            join_or_dash(&failures),
            join_or_dash(&r.blocking),
        ]);
    }
    out.push_str(&columns(&rows));
    for r in runs {
        let _ = writeln!(out, "\n{} allowed states:", r.test);
        for s in &r.states {
            let _ = writeln!(out, "  {s}");
        }
    }
    let count = |s: Status| runs.iter().filter(|r| r.status == s).count();
    let _ = writeln!(
        out,
        "\n{} tests: {} pass, {} fail, {} unchecked",
        runs.len(),
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Unchecked)
    );
}

fn render_compares(out: &mut String, cmps: &[&CompareRecord]) {
    let (a, b) = cmps.first().map_or(("a", "b"), |c| (c.model_a.as_str(), c.model_b.as_str()));
    let mut rows = vec![row(&["test", a, b, "diverges"])];
    for c in cmps {
        rows.push(vec![
            c.test.clone(),
            c.verdict_a.to_string(),
            c.verdict_b.to_string(),
            if c.diverges { "yes" } else { "no" }.to_string(),
        ]);
    }
    out.push_str(&columns(&rows));
    for c in cmps.iter().filter(|c| c.diverges) {
        let _ = writeln!(out, "\n{}:", c.test);
        for s in &c.only_a {
            let _ = writeln!(out, "  only {}: {s}", c.model_a);
        }
        for s in &c.only_b {
            let _ = writeln!(out, "  only {}: {s}", c.model_b);
        }
        if !c.checks_a.is_empty() {
            let _ = writeln!(out, "  {} fails: {}", c.model_a, c.checks_a.join(","));
        }
        if !c.checks_b.is_empty() {
            let _ = writeln!(out, "  {} fails: {}", c.model_b, c.checks_b.join(","));
        }
    }
    let n = cmps.iter().filter(|c| c.diverges).count();
    let _ = writeln!(out, "\n{} tests, {n} divergent", cmps.len());
}

fn render_machines(out: &mut String, ms: &[&MachineRecord]) {
    let mut rows = vec![row(&["test", "events", "status", "machine", "axiomatic"])];
    for m in ms {
        let (mach, ax) = if m.status == Status::Skipped {
            ("-".to_string(), "-".to_string())
        } else {
            (m.machine_states.len().to_string(), m.axiomatic_states.len().to_string())
        };
        rows.push(vec![m.test.clone(), m.events.to_string(), m.status.as_str().to_string(), mach, ax]);
    }
    out.push_str(&columns(&rows));
    for m in ms.iter().filter(|m| m.status == Status::Fail) {
        let _ = writeln!(out, "\n{}:", m.test);
        for s in m.machine_states.iter().filter(|s| !m.axiomatic_states.contains(s)) {
            let _ = writeln!(out, "  machine only: {s}");
        }
        for s in m.axiomatic_states.iter().filter(|s| !m.machine_states.contains(s)) {
            let _ = writeln!(out, "  axiomatic only: {s}");
        }
    }
    for m in ms {
        for t in &m.traces {
            out.push('\n');
            out.push_str(t);
        }
    }
    let count = |s: Status| ms.iter().filter(|m| m.status == s).count();
    let _ = writeln!(
        out,
        "\n{} tests: {} pass, {} fail, {} skipped (bound {})",
        ms.len(),
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Skipped),
        ms.first().map_or(0, |m| m.bound)
    );
}

fn render_cycles(out: &mut String, inputs: &[&InputRecord], cycles: &[CycleRecord]) {
    let mut rows = vec![row(&["input", "name", "axiom", "cycle"])];
    for c in cycles {
        rows.push(vec![c.input.clone(), c.name.clone(), c.axiom.as_str().to_string(), c.edges.clone()]);
    }
    out.push_str(&columns(&rows));
    let empty: Vec<&str> = inputs.iter().filter(|i| i.cycles == 0).map(|i| i.input.as_str()).collect();
    if !empty.is_empty() {
        let _ = writeln!(out, "\nno cycles: {}", empty.join(", "));
    }
    let mut rows = vec![row(&["pattern", "axiom", "count"])];
    for (name, axiom, n) in frequency_table(cycles) {
        rows.push(vec![name, axiom.as_str().to_string(), n.to_string()]);
    }
    out.push('\n');
    out.push_str(&columns(&rows));
    let _ = writeln!(out, "\n{} inputs, {} cycles", inputs.len(), cycles.len());
}

/// The table view of a record stream.
pub fn render_table(records: &[Record]) -> String {
    let mut out = String::new();
    let runs: Vec<&RunRecord> =
        records.iter().filter_map(|r| if let Record::Run(x) = r { Some(x) } else { None }).collect();
    let cmps: Vec<&CompareRecord> =
        records.iter().filter_map(|r| if let Record::Compare(x) = r { Some(x) } else { None }).collect();
    let ms: Vec<&MachineRecord> =
        records.iter().filter_map(|r| if let Record::Machine(x) = r { Some(x) } else { None }).collect();
    let inputs: Vec<&InputRecord> =
        records.iter().filter_map(|r| if let Record::Input(x) = r { Some(x) } else { None }).collect();
    let cycles: Vec<CycleRecord> =
        records.iter().filter_map(|r| if let Record::Cycle(x) = r { Some(x.clone()) } else { None }).collect();
    if !runs.is_empty() {
        render_runs(&mut out, &runs);
    }
    if !cmps.is_empty() {
        render_compares(&mut out, &cmps);
    }
    if !ms.is_empty() {
        render_machines(&mut out, &ms);
    }
    if !inputs.is_empty() || !cycles.is_empty() {
        render_cycles(&mut out, &inputs, &cycles);
    }
    for r in records {
        if let Record::Error(e) = r {
            let _ = writeln!(out, "error: {}: {}", e.file, e.error);
        }
    }
    out
}
