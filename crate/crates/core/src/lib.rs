//! Axiomatic and operational checking of litmus tests against weak memory models.

pub mod cat;
pub mod cycles;
pub mod error;
pub mod event;
pub mod exec;
pub mod litmus;
pub mod machine;
pub mod models;
pub mod relation;

pub use error::{CycleError, Error, LitmusError, MachineError, ModelError, Pos, RelError};
pub use event::{Action, Arch, Class, DirectionClass, Event, FenceKind, Loc, Port, ThreadId, INIT_THREAD};
pub use cat::{parse_model, EvalOptions, ModelAst, Verdict};
pub use exec::{build_candidates, final_state, verdict, Candidate, FinalState, RunOptions, TestVerdict};
pub use models::{load_builtin, load_model, BuiltinModel};
pub use litmus::{load_program, parse_litmus, Expectation, LitmusTest, Program};
pub use relation::{EventId, Relation};
pub use machine::{
    accepts, derive_from_path, enumerate_accepted, step, witness_path, Context, Label, MachineOptions, MachineOutcome,
    MachineState, Path, Premise,
};
pub use cycles::{
    classify, find_critical_cycles, mine, name_pattern, reduce_cycle, Axiom, CycleRecord, LabeledCycle, StaticProgram,
};
