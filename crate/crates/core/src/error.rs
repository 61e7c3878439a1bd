use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelError {
    #[error("universe mismatch: {left} vs {right} events")]
    UniverseMismatch { left: usize, right: usize },
}

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LitmusError {
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: fence `{fence}` is not available on {arch}")]
    ForeignFence { pos: Pos, fence: String, arch: String },
    #[error("{pos}: branch target `{label}` is not defined")]
    UndefinedLabel { pos: Pos, label: String },
    #[error("{pos}: branch target `{label}` must be the label immediately after the branch")]
    NonLocalBranch { pos: Pos, label: String },
    #[error("test has no threads")]
    NoThreads,
    #[error("thread {thread}: register `{reg}` read before any write or init")]
    UndefinedRegister { thread: usize, reg: String },
    #[error("thread {thread}: {msg}")]
    Address { thread: usize, msg: String },
    #[error("unknown register or location in final condition: {0}")]
    UnknownObservable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: unbound identifier `{name}`")]
    Unbound { pos: Pos, name: String },
    #[error("{pos}: duplicate binding `{name}`")]
    Duplicate { pos: Pos, name: String },
    #[error("{pos}: recursive name `{name}` occurs under `\\` in its own let rec group")]
    NonMonotone { pos: Pos, name: String },
    #[error("{pos}: relation `{name}` is foreign to architecture {arch}")]
    ForeignFence { pos: Pos, name: String, arch: String },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("cannot read model file {path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("malformed path: {0}")]
    Malformed(String),
    #[error("value mismatch: read {read} cannot take its value from write {write}")]
    ValueMismatch { write: usize, read: usize },
    #[error("constraint cycle while linearising the witness relation")]
    WitnessCycle,
    #[error("candidate is not allowed by the model; no witness path")]
    NotAllowed,
    #[error("test has {events} memory events, bound is {bound}")]
    BoundExceeded { events: usize, bound: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CycleError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("edge {index} of the cycle is an unresolved competing pair")]
    Unresolved { index: usize },
}

/// Umbrella error for the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Relation(#[from] RelError),
    #[error(transparent)]
    Litmus(#[from] LitmusError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
}
