//! Clock-driven top level: loads an image, runs core and supervisor phases
//! each clock, and reports total clocks and peak core usage.

use crate::cpu::{step_core, ConditionCodes, CoreEvent, CoreRecord, CoreState, Fault, FaultKind, LatchSet, RegisterFile, SvRequest};
use crate::error::SimError;
use crate::invariants;
use crate::isa::ObjectImage;
use crate::mask::{CoreId, MAX_CORES};
use crate::memory::{Memory, DEFAULT_MEMORY_SIZE};
use crate::supervisor::Supervisor;
use crate::timing::TimingConfig;
use crate::trace::{BlockReason, EventKind, TraceEvent};

pub const DEFAULT_POOL: usize = 32;
pub const DEFAULT_CLOCK_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub pool: usize,
    pub trace: bool,
    pub check_invariants: bool,
    pub clock_limit: u64,
    pub memory_size: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            pool: DEFAULT_POOL,
            trace: false,
            check_invariants: false,
            clock_limit: DEFAULT_CLOCK_LIMIT,
            memory_size: DEFAULT_MEMORY_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    /// Stamp of the finish event.
    pub clocks: u64,
    /// Peak number of cores not in the pool.
    pub peak_cores: usize,
    pub regs: RegisterFile,
    pub cc: ConditionCodes,
    pub latches: LatchSet,
    pub memory: Memory,
    pub trace: Vec<TraceEvent>,
    /// Clocks each core spent executing instructions.
    pub busy_clocks: Vec<u64>,
    pub sv_ops: u64,
    pub peak_sumup_children: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Running,
    Finished,
}

#[derive(Debug, Clone)]
pub struct Machine {
    sv: Supervisor,
    mem: Memory,
    timing: TimingConfig,
    options: RunOptions,
    clock: u64,
    peak: usize,
    trace: Vec<TraceEvent>,
    root_final: Option<CoreRecord>,
}

impl Machine {
    pub fn new(image: &ObjectImage, timing: TimingConfig, options: RunOptions) -> Result<Machine, SimError> {
        if !(1..=MAX_CORES).contains(&options.pool) {
            return Err(SimError::PoolSize(options.pool));
        }
        let mut mem = Memory::new(options.memory_size);
        mem.load(image)?;
        let record = options.trace || options.check_invariants;
        let sv = Supervisor::new(options.pool, image.entry, timing.clone(), record);
        let peak = sv.in_use();
        Ok(Machine { sv, mem, timing, options, clock: 0, peak, trace: Vec::new(), root_final: None })
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn supervisor(&self) -> &Supervisor {
        &self.sv
    }

    pub fn memory(&self) -> &Memory {
        &self.mem
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn is_finished(&self) -> bool {
        self.root_final.is_some()
    }

    /// Advances one clock.
    pub fn step(&mut self) -> Result<StepOutcome, SimError> {
        if self.is_finished() {
            return Err(SimError::Finished);
        }
        let t = self.clock;
        self.sv.begin_clock(t);
        for i in 0..self.sv.cores.len() {
            self.core_phase(CoreId::new(i), t)?;
        }
        self.sv.sv_phase()?;
        self.peak = self.peak.max(self.sv.in_use());
        if self.sv.finish_at == Some(t) {
            self.root_final = Some(self.sv.core(self.sv.root).clone());
            self.sv.finish()?;
        }
        let events = self.sv.take_events();
        if self.options.check_invariants {
            invariants::check(&self.sv, t, &events)?;
        }
        if self.options.trace {
            self.trace.extend(events);
        }
        if self.is_finished() {
            return Ok(StepOutcome::Finished);
        }
        if self.sv.is_stuck(t) {
            return Err(SimError::Deadlock { clock: t, detail: self.sv.blocked_summary() });
        }
        self.clock += 1;
        if self.clock > self.options.clock_limit {
            return Err(SimError::ClockBudget(self.options.clock_limit));
        }
        Ok(StepOutcome::Running)
    }

    fn core_phase(&mut self, c: CoreId, t: u64) -> Result<(), SimError> {
        let core = &mut self.sv.cores[c.index()];
        if core.state != CoreState::Enabled || core.ready_at > t || self.sv.awaiting.contains(c) {
            return Ok(());
        }
        let pc = core.pc;
        match step_core(core, &mut self.mem, &self.timing)? {
            CoreEvent::Executed { instr, clocks, request } => {
                core.ready_at = t + u64::from(clocks);
                self.sv.emit(Some(c), EventKind::Exec { pc, instr, clocks });
                if let Some(SvRequest::TransferToParent { value }) = request {
                    self.sv.summand(c, value);
                }
            }
            CoreEvent::MetaRaised { meta, len } => {
                self.sv.emit(Some(c), EventKind::MetaRaised { pc, meta });
                self.sv.raise(c, meta, len);
            }
            CoreEvent::Halted { clocks } => {
                self.sv.emit(Some(c), EventKind::Halt { pc });
                if c != self.sv.root {
                    return Err(Fault { core: c, pc, kind: FaultKind::HaltInChild }.into());
                }
                if self.sv.core(c).children.is_empty() {
                    self.sv.finish_at = Some(t + u64::from(clocks));
                    self.sv.core_mut(c).ready_at = u64::MAX;
                } else {
                    self.sv.block(c, BlockReason::Halt, None)?;
                }
            }
            CoreEvent::BlockedNoProgress => {}
        }
        Ok(())
    }

    /// Runs to completion.
    pub fn run(mut self) -> Result<RunReport, SimError> {
        while self.step()? == StepOutcome::Running {}
        Ok(self.into_report())
    }

    fn into_report(self) -> RunReport {
        let root = self.root_final.expect("finished machine has a root snapshot");
        RunReport {
            clocks: self.clock,
            peak_cores: self.peak,
            regs: root.regs,
            cc: root.cc,
            latches: root.latches,
            memory: self.mem,
            trace: self.trace,
            busy_clocks: self.sv.cores.iter().map(|c| c.busy_clocks).collect(),
            sv_ops: self.sv.ops_total,
            peak_sumup_children: self.sv.peak_sumup_active,
        }
    }
}

pub fn run_image(image: &ObjectImage, timing: &TimingConfig, options: &RunOptions) -> Result<RunReport, SimError> {
    Machine::new(image, timing.clone(), options.clone())?.run()
}
