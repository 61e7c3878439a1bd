//! Events, their classification, and architectures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::relation::EventId;

/// Thread index; init writes live on [`INIT_THREAD`].
pub type ThreadId = usize;

/// Reserved pseudo-thread of the init writes.
pub const INIT_THREAD: ThreadId = usize::MAX;

/// Index into a test's location table.
pub type Loc = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Arch {
    SC,
    TSO,
    Power,
    ARM,
    Generic,
}

impl Arch {
    pub fn fences(self) -> &'static [FenceKind] {
        use FenceKind::*;
        match self {
            Arch::SC => &[],
            Arch::TSO => &[Mfence],
            Arch::Power => &[Sync, Lwsync, Eieio, Isync],
            Arch::ARM => &[Dmb, Dsb, DmbSt, DsbSt, Isb],
            Arch::Generic => &FenceKind::ALL,
        }
    }

    pub fn allows(self, f: FenceKind) -> bool {
        self.fences().contains(&f)
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arch::SC => "SC",
            Arch::TSO => "TSO",
            Arch::Power => "Power",
            Arch::ARM => "ARM",
            Arch::Generic => "generic",
        })
    }
}

impl FromStr for Arch {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "sc" => Ok(Arch::SC),
            "tso" | "x86" => Ok(Arch::TSO),
            "power" | "ppc" => Ok(Arch::Power),
            "arm" => Ok(Arch::ARM),
            "generic" => Ok(Arch::Generic),
            _ => Err(format!("unknown architecture `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FenceKind {
    Sync,
    Lwsync,
    Eieio,
    Isync,
    Mfence,
    Dmb,
    Dsb,
    DmbSt,
    DsbSt,
    Isb,
}

impl FenceKind {
    pub const ALL: [FenceKind; 10] = [
        FenceKind::Sync,
        FenceKind::Lwsync,
        FenceKind::Eieio,
        FenceKind::Isync,
        FenceKind::Mfence,
        FenceKind::Dmb,
        FenceKind::Dsb,
        FenceKind::DmbSt,
        FenceKind::DsbSt,
        FenceKind::Isb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FenceKind::Sync => "sync",
            FenceKind::Lwsync => "lwsync",
            FenceKind::Eieio => "eieio",
            FenceKind::Isync => "isync",
            FenceKind::Mfence => "mfence",
            FenceKind::Dmb => "dmb",
            FenceKind::Dsb => "dsb",
            FenceKind::DmbSt => "dmb.st",
            FenceKind::DsbSt => "dsb.st",
            FenceKind::Isb => "isb",
        }
    }

    pub fn from_name(s: &str) -> Option<FenceKind> {
        FenceKind::ALL.iter().copied().find(|f| f.name() == s)
    }

    /// Control fences: isync and isb.
    pub fn is_control(self) -> bool {
        matches!(self, FenceKind::Isync | FenceKind::Isb)
    }
}

impl fmt::Display for FenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which input of an instruction a register read feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Port {
    Address,
    Value,
    Test,
}

/// Register names are thread-local.
pub type Reg = String;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    /// The read value is not stored: it is determined by an rf choice.
    MemRead { loc: Loc },
    MemWrite { loc: Loc, value: i64 },
    RegRead { reg: Reg, port: Port },
    RegWrite { reg: Reg },
    Branch,
    Fence(FenceKind),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub id: EventId,
    pub thread: ThreadId,
    pub po_index: usize,
    pub action: Action,
    /// Index of the source instruction in its thread (`usize::MAX` for init).
    pub origin: usize,
}

impl Event {
    pub fn is_read(&self) -> bool {
        matches!(self.action, Action::MemRead { .. })
    }

    pub fn is_write(&self) -> bool {
        matches!(self.action, Action::MemWrite { .. })
    }

    pub fn is_mem(&self) -> bool {
        self.is_read() || self.is_write()
    }

    pub fn is_init(&self) -> bool {
        self.thread == INIT_THREAD
    }

    pub fn loc(&self) -> Option<Loc> {
        match self.action {
            Action::MemRead { loc } | Action::MemWrite { loc, .. } => Some(loc),
            _ => None,
        }
    }

    pub fn write_value(&self) -> Option<i64> {
        match self.action {
            Action::MemWrite { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn class(&self) -> Class {
        match self.action {
            Action::MemRead { .. } => Class::R,
            Action::MemWrite { .. } => Class::W,
            Action::Branch => Class::B,
            Action::Fence(_) => Class::F,
            Action::RegRead { .. } | Action::RegWrite { .. } => Class::Reg,
        }
    }
}

/// Kind of a single event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Class {
    R,
    W,
    B,
    F,
    Reg,
}

/// Endpoint filter of a direction restriction; `M` matches reads and writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectionClass {
    R,
    W,
    M,
    B,
    F,
}

impl DirectionClass {
    pub fn matches(self, c: Class) -> bool {
        matches!(
            (self, c),
            (DirectionClass::R, Class::R)
                | (DirectionClass::W, Class::W)
                | (DirectionClass::M, Class::R | Class::W)
                | (DirectionClass::B, Class::B)
                | (DirectionClass::F, Class::F)
        )
    }

    pub fn from_char(c: char) -> Option<Self> {
        Some(match c {
            'R' => DirectionClass::R,
            'W' => DirectionClass::W,
            'M' => DirectionClass::M,
            'B' => DirectionClass::B,
            'F' => DirectionClass::F,
            _ => return None,
        })
    }
}

/// Restrict `r` to pairs whose endpoints classify as `src` and `tgt`.
pub fn restrict(
    r: &crate::relation::Relation,
    events: &[Event],
    src: DirectionClass,
    tgt: DirectionClass,
) -> crate::relation::Relation {
    r.filter(|x| src.matches(events[x].class()), |y| tgt.matches(events[y].class()))
}
