use thiserror::Error;

use crate::cpu::Fault;
use crate::invariants::InvariantViolation;
use crate::memory::MemoryError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Fault(#[from] Fault),
    #[error("deadlock at clock {clock}: {detail}")]
    Deadlock { clock: u64, detail: String },
    #[error("clock budget of {0} exceeded")]
    ClockBudget(u64),
    #[error("machine has already finished")]
    Finished,
    #[error("pool size {0} is outside 1..=64")]
    PoolSize(usize),
    #[error("loading image: {0}")]
    Load(#[from] MemoryError),
    #[error(transparent)]
    Invariant(#[from] InvariantViolation),
}
