//! Event trace: one line per event, `CLOCK<TAB>CORE<TAB>EVENT<TAB>DETAIL`.

use std::fmt;

use crate::cpu::CoreState;
use crate::isa::{Instr, MassMode, Meta};
use crate::mask::{CoreId, CoreMask};

/// Either side of a data movement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Core(CoreId),
    Sv,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Core(c) => write!(f, "core{c}"),
            Endpoint::Sv => f.write_str("SV"),
        }
    }
}

/// What a transfer carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    /// Register file, flags and pc.
    Glue,
    ForChild,
    FromParent,
    ForParent,
    FromChild,
    Link,
    /// A SUMUP summand on its way to the parent's adder.
    Summand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockReason {
    Allocate,
    Prealloc,
    Wait,
    Terminate,
    Halt,
    Mass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Exec { pc: u32, instr: Instr, clocks: u32 },
    MetaRaised { pc: u32, meta: Meta },
    Halt { pc: u32 },
    /// The supervisor dequeued one operation.
    SvOp { meta: Meta },
    State { from: CoreState, to: CoreState },
    Allocate { parent: CoreId, offset: u32 },
    Terminate { parent: Option<CoreId>, children: CoreMask },
    Block { reason: BlockReason },
    Transfer { from: Endpoint, to: Endpoint, payload: Payload, value: Option<u32> },
    /// Core moved from the pool into a parent's preallocated set.
    Reserve { parent: CoreId },
    /// Core moved from a preallocated set back to the pool.
    Release,
    MassBegin { mode: MassMode, count: u32, addr: u32 },
    MassLaunch { child: CoreId, addr: u32, remaining: u32 },
    MassStall,
    Accumulate { value: u32, total: u32 },
    MassRetire { result: u32 },
    Finish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEvent {
    pub clock: u64,
    /// `None` for supervisor-level events.
    pub core: Option<CoreId>,
    pub kind: EventKind,
}

impl TraceEvent {
    pub fn name(&self) -> &'static str {
        match self.kind {
            EventKind::Exec { .. } => "exec",
            EventKind::MetaRaised { .. } => "meta",
            EventKind::Halt { .. } => "halt",
            EventKind::SvOp { .. } => "sv-op",
            EventKind::State { .. } => "state",
            EventKind::Allocate { .. } => "allocate",
            EventKind::Terminate { .. } => "terminate",
            EventKind::Block { .. } => "block",
            EventKind::Transfer { .. } => "transfer",
            EventKind::Reserve { .. } => "reserve",
            EventKind::Release => "release",
            EventKind::MassBegin { .. } => "mass-begin",
            EventKind::MassLaunch { .. } => "mass-launch",
            EventKind::MassStall => "mass-stall",
            EventKind::Accumulate { .. } => "accumulate",
            EventKind::MassRetire { .. } => "mass-retire",
            EventKind::Finish => "finish",
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t", self.clock)?;
        match self.core {
            Some(c) => write!(f, "{c}")?,
            None => f.write_str("SV")?,
        }
        write!(f, "\t{}\t", self.name())?;
        match self.kind {
            EventKind::Exec { pc, instr, clocks } => write!(f, "pc={pc:#06x} {instr} ({clocks})"),
            EventKind::MetaRaised { pc, meta } => write!(f, "pc={pc:#06x} {meta}"),
            EventKind::Halt { pc } => write!(f, "pc={pc:#06x}"),
            EventKind::SvOp { meta } => write!(f, "{}", meta.mnemonic()),
            EventKind::State { from, to } => write!(f, "{from}->{to}"),
            EventKind::Allocate { parent, offset } => write!(f, "parent={parent} offset={offset:#06x}"),
            EventKind::Terminate { parent, children } => match parent {
                Some(p) => write!(f, "parent={p} children={children}"),
                None => write!(f, "root children={children}"),
            },
            EventKind::Block { reason } => write!(f, "{reason:?}"),
            EventKind::Transfer { from, to, payload, value } => {
                write!(f, "{from}->{to} {payload:?}")?;
                match value {
                    Some(v) => write!(f, "={v:#x}"),
                    None => Ok(()),
                }
            }
            EventKind::Reserve { parent } => write!(f, "for={parent}"),
            EventKind::Release => Ok(()),
            EventKind::MassBegin { mode, count, addr } => write!(f, "{mode} count={count} addr={addr:#06x}"),
            EventKind::MassLaunch { child, addr, remaining } => {
                write!(f, "child={child} addr={addr:#06x} remaining={remaining}")
            }
            EventKind::MassStall => Ok(()),
            EventKind::Accumulate { value, total } => write!(f, "value={value:#x} total={total:#x}"),
            EventKind::MassRetire { result } => write!(f, "result={result:#x}"),
            EventKind::Finish => Ok(()),
        }
    }
}

/// Renders a trace in the line format.
pub fn render(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        use fmt::Write as _;
        let _ = writeln!(out, "{e}");
    }
    out
}
