//! Structural checks run after every clock when enabled.

use thiserror::Error;

use crate::cpu::CoreState;
use crate::isa::MassMode;
use crate::mask::{CoreId, CoreMask};
use crate::supervisor::Supervisor;
use crate::trace::{Endpoint, EventKind, TraceEvent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invariant violated at clock {clock}: {what}")]
pub struct InvariantViolation {
    pub clock: u64,
    pub what: String,
}

/// Checks the supervisor state and the events of one clock.
pub fn check(sv: &Supervisor, clock: u64, events: &[TraceEvent]) -> Result<(), InvariantViolation> {
    let fail = |what: String| Err(InvariantViolation { clock, what });
    let n = sv.cores.len();
    let all = CoreMask::first(n);

    let mut reserved = CoreMask::EMPTY;
    let mut rented = CoreMask::EMPTY;
    for (i, c) in sv.cores.iter().enumerate() {
        if c.identity != CoreId::new(i) || !c.identity.mask().is_one_hot() {
            return fail(format!("core {i} has identity {}", c.identity));
        }
        if c.parent.count() > 1 {
            return fail(format!("core {i} has parent mask {}", c.parent));
        }
        if !(reserved & c.preallocated).is_empty() {
            return fail(format!("core {i} shares preallocated cores"));
        }
        reserved |= c.preallocated;
        if c.state != CoreState::Created {
            rented.insert(c.identity);
        }
        if (c.state == CoreState::Blocked) != sv.blocked[i].is_some() {
            return fail(format!("core {i} is {} but block record is {:?}", c.state, sv.blocked[i]));
        }
        for ch in c.children.iter() {
            if ch.index() >= n || sv.cores[ch.index()].parent != c.identity.mask() {
                return fail(format!("core {i} lists child {ch} that does not name it"));
            }
        }
        if let Some(p) = c.parent_id() {
            if !sv.cores[p.index()].children.contains(c.identity) {
                return fail(format!("core {i} names parent {p} that does not list it"));
            }
            if c.state == CoreState::Created {
                return fail(format!("core {i} is Created but has a parent"));
            }
        }
    }
    let sets = [sv.pool, reserved, rented];
    for (a, x) in sets.iter().enumerate() {
        for y in &sets[a + 1..] {
            if !(*x & *y).is_empty() {
                return fail(format!("pool {} / reserved {reserved} / rented {rented} overlap", sv.pool));
            }
        }
    }
    if (sv.pool | reserved | rented) != all {
        return fail(format!("pool {} / reserved {reserved} / rented {rented} do not cover {all}", sv.pool));
    }
    if sv.ops_this_clock > 1 {
        return fail(format!("{} operations dequeued in one clock", sv.ops_this_clock));
    }
    let window = sv.timing().sumup_window as usize;
    for ctrl in sv.controllers.values() {
        if ctrl.mode == MassMode::Sumup && ctrl.active.count() > window {
            return fail(format!("SUMUP has {} children, window is {window}", ctrl.active.count()));
        }
    }
    for e in events {
        match e.kind {
            EventKind::Transfer { from, to, .. } => {
                if (from == Endpoint::Sv) == (to == Endpoint::Sv) {
                    return fail(format!("transfer {from}->{to} bypasses the supervisor"));
                }
            }
            EventKind::Terminate { children, .. } if !children.is_empty() => {
                return fail(format!("core {:?} terminated with children {children}", e.core));
            }
            _ => {}
        }
    }
    Ok(())
}
