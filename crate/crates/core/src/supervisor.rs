//! The supervisor: owns the core pool, serializes metainstruction
//! operations through a FIFO (at most one dequeued per control clock) and
//! runs the mass-processing controllers.

use std::collections::{BTreeMap, VecDeque};

use crate::cpu::{access_register, clone_from, Access, CoreMode, CoreRecord, CoreState, Fault, FaultKind, RegAccess, LINK_REGISTER};
use crate::isa::{MassMode, MassSpec, Meta, Reg};
use crate::mask::{CoreId, CoreMask, MAX_CORES};
use crate::timing::TimingConfig;
use crate::trace::{BlockReason, Endpoint, EventKind, Payload, TraceEvent};

/// One queued metainstruction operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SvOp {
    pub core: CoreId,
    pub meta: Meta,
    /// Encoded length, used to advance the pc once the op completes.
    pub len: u32,
    pub raised_at: u64,
}

/// Why a core is blocked, plus the op to re-enqueue when it may proceed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub reason: BlockReason,
    pub retry: Option<(Meta, u32)>,
}

/// State of one running FOR or SUMUP mass operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MassController {
    pub mode: MassMode,
    pub parent: CoreId,
    pub count: u32,
    pub remaining: u32,
    /// Address handed to the next launched child.
    pub addr: u32,
    pub stride: i32,
    pub body: u32,
    /// Length of the QMass item, skipped when the parent resumes.
    pub len: u32,
    pub accumulator: u32,
    /// Children currently running.
    pub active: CoreMask,
    /// Cores the controller moved into the parent's reservation.
    pub topup: CoreMask,
    /// A FOR child wrote its parent latch.
    pub broke: bool,
    /// The single core a FOR controller reuses.
    pub for_child: Option<CoreId>,
    pub summands: VecDeque<u32>,
    pub launches: u32,
    pub peak_active: usize,
    next_launch_at: u64,
    adder_free_at: u64,
    stalled: bool,
}

impl MassController {
    fn finished(&self) -> bool {
        (self.remaining == 0 || self.broke) && self.active.is_empty() && self.summands.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Supervisor {
    pub cores: Vec<CoreRecord>,
    pub pool: CoreMask,
    pub queue: VecDeque<SvOp>,
    /// Cores with an op queued or in service.
    pub awaiting: CoreMask,
    pub blocked: Vec<Option<Block>>,
    /// Running mass operations keyed by parent.
    pub controllers: BTreeMap<CoreId, MassController>,
    pub root: CoreId,
    pub finish_at: Option<u64>,
    /// Ops dequeued during the current clock.
    pub ops_this_clock: u32,
    pub ops_total: u64,
    /// Largest number of cores a SUMUP controller had running at once.
    pub peak_sumup_active: usize,
    busy_until: u64,
    clock: u64,
    timing: TimingConfig,
    record: bool,
    events: Vec<TraceEvent>,
}

impl Supervisor {
    /// Creates a pool of `n` cores and rents core 0 as the root quasi-thread
    /// starting at `entry`.
    pub fn new(n: usize, entry: u32, timing: TimingConfig, record: bool) -> Supervisor {
        assert!((1..=MAX_CORES).contains(&n), "pool size {n} out of range");
        let cores: Vec<CoreRecord> = (0..n).map(|i| CoreRecord::new(CoreId::new(i))).collect();
        let mut sv = Supervisor {
            cores,
            pool: CoreMask::first(n),
            queue: VecDeque::new(),
            awaiting: CoreMask::EMPTY,
            blocked: vec![None; n],
            controllers: BTreeMap::new(),
            root: CoreId::new(0),
            finish_at: None,
            ops_this_clock: 0,
            ops_total: 0,
            peak_sumup_active: 0,
            busy_until: 0,
            clock: 0,
            timing,
            record,
            events: Vec::new(),
        };
        let root = sv.pool.pop_lowest().expect("pool is not empty");
        let r = &mut sv.cores[root.index()];
        r.state = CoreState::Enabled;
        r.pc = entry;
        r.offset = entry;
        sv
    }

    pub fn timing(&self) -> &TimingConfig {
        &self.timing
    }

    pub fn core(&self, c: CoreId) -> &CoreRecord {
        &self.cores[c.index()]
    }

    pub fn core_mut(&mut self, c: CoreId) -> &mut CoreRecord {
        &mut self.cores[c.index()]
    }

    /// Cores currently unavailable to new requests.
    pub fn in_use(&self) -> usize {
        self.cores.len() - self.pool.count()
    }

    pub fn sv_idle_at(&self, t: u64) -> bool {
        self.busy_until <= t
    }

    pub fn begin_clock(&mut self, t: u64) {
        self.clock = t;
        self.ops_this_clock = 0;
    }

    pub fn emit(&mut self, core: Option<CoreId>, kind: EventKind) {
        if self.record {
            self.events.push(TraceEvent { clock: self.clock, core, kind });
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn take_events(&mut self) -> Vec<TraceEvent> {
        std::mem::take(&mut self.events)
    }

    fn fault(&self, c: CoreId, kind: FaultKind) -> Fault {
        Fault { core: c, pc: self.cores[c.index()].pc, kind }
    }

    fn transition(&mut self, c: CoreId, to: CoreState) -> Result<(), Fault> {
        let from = self.cores[c.index()].state;
        self.cores[c.index()].set_state(to).map_err(|e| self.fault(c, e.into()))?;
        self.emit(Some(c), EventKind::State { from, to });
        Ok(())
    }

    fn transfer(&mut self, from: Endpoint, to: Endpoint, payload: Payload, value: Option<u32>) {
        let core = match (from, to) {
            (Endpoint::Core(c), _) | (_, Endpoint::Core(c)) => Some(c),
            _ => None,
        };
        self.emit(core, EventKind::Transfer { from, to, payload, value });
    }

    /// Queues a metainstruction raised by `c` during the core phase.
    pub fn raise(&mut self, c: CoreId, meta: Meta, len: u32) {
        self.awaiting.insert(c);
        self.queue.push_back(SvOp { core: c, meta, len, raised_at: self.clock });
    }

    /// A SUMUP child handed a summand to its parent's adder.
    pub fn summand(&mut self, child: CoreId, value: u32) {
        let Some(p) = self.cores[child.index()].parent_id() else { return };
        self.transfer(Endpoint::Core(child), Endpoint::Sv, Payload::Summand, Some(value));
        if let Some(ctrl) = self.controllers.get_mut(&p) {
            ctrl.summands.push_back(value);
        }
    }

    pub fn block(&mut self, c: CoreId, reason: BlockReason, retry: Option<(Meta, u32)>) -> Result<(), Fault> {
        if self.cores[c.index()].state == CoreState::Enabled {
            self.transition(c, CoreState::Blocked)?;
        }
        let was = self.blocked[c.index()].replace(Block { reason, retry });
        if was.map(|b| b.reason) != Some(reason) {
            self.emit(Some(c), EventKind::Block { reason });
        }
        Ok(())
    }

    /// Lets `c` continue past the item of length `len` after `cost` clocks.
    fn resume(&mut self, c: CoreId, len: u32, cost: u32) -> Result<(), Fault> {
        if self.cores[c.index()].state == CoreState::Blocked {
            self.transition(c, CoreState::Enabled)?;
        }
        self.blocked[c.index()] = None;
        let t = self.clock;
        let core = &mut self.cores[c.index()];
        core.pc = core.pc.wrapping_add(len);
        core.ready_at = t + u64::from(cost);
        Ok(())
    }

    fn op_cost(&self, meta: &Meta) -> u32 {
        let t = &self.timing;
        match meta {
            Meta::Create { .. } => t.qcreate,
            Meta::Term => t.qterm,
            Meta::Wait => t.qwait,
            Meta::Prealloc { .. } => t.qprealloc,
            Meta::Mass(_) => t.qmass,
            Meta::Fwd => t.qfwd,
        }
    }

    /// Supervisor phase of one clock: dequeue at most one op, then let every
    /// mass controller act.
    pub fn sv_phase(&mut self) -> Result<(), Fault> {
        if self.busy_until <= self.clock {
            if let Some(op) = self.queue.pop_front() {
                self.apply(op)?;
            }
        }
        self.step_controllers()
    }

    fn apply(&mut self, op: SvOp) -> Result<(), Fault> {
        self.ops_this_clock += 1;
        self.ops_total += 1;
        self.emit(Some(op.core), EventKind::SvOp { meta: op.meta });
        self.busy_until = self.clock + u64::from(self.op_cost(&op.meta));
        self.awaiting.remove(op.core);
        match op.meta {
            Meta::Create { target } => self.op_create(op.core, target, op.len),
            Meta::Term => self.op_term(op.core),
            Meta::Wait => self.op_wait(op.core, op.len),
            Meta::Prealloc { count } => self.op_prealloc(op.core, u32::from(count), op.len),
            Meta::Mass(spec) => self.op_mass(op.core, spec, op.len),
            Meta::Fwd => self.op_fwd(op.core, op.len),
        }
    }

    /// Moves a Created core under `p`: allocated, glued and enabled.
    fn rent(&mut self, p: CoreId, child: CoreId, offset: u32, mode: CoreMode, ready_in: u32) -> Result<(), Fault> {
        self.transition(child, CoreState::Allocated)?;
        self.emit(Some(child), EventKind::Allocate { parent: p, offset });
        self.glue(p, child, offset, mode, ready_in)?;
        self.cores[p.index()].children.insert(child);
        self.cores[child.index()].parent = p.mask();
        Ok(())
    }

    /// Clones the parent glue into an Allocated child and enables it.
    fn glue(&mut self, p: CoreId, child: CoreId, offset: u32, mode: CoreMode, ready_in: u32) -> Result<(), Fault> {
        let parent = self.cores[p.index()].clone();
        {
            let c = &mut self.cores[child.index()];
            clone_from(&parent, c, offset);
            c.latches.for_parent = None;
            c.mode = mode;
            c.ready_at = self.clock + u64::from(ready_in);
        }
        self.transfer(Endpoint::Core(p), Endpoint::Sv, Payload::Glue, None);
        self.transfer(Endpoint::Sv, Endpoint::Core(child), Payload::Glue, None);
        if parent.latches.for_child.is_some() {
            self.transfer(Endpoint::Sv, Endpoint::Core(child), Payload::FromParent, parent.latches.for_child);
        }
        self.transition(child, CoreState::Enabled)
    }

    fn op_create(&mut self, p: CoreId, target: u32, len: u32) -> Result<(), Fault> {
        let child = match self.cores[p.index()].preallocated.pop_lowest() {
            Some(c) => c,
            None => match self.pool.pop_lowest() {
                Some(c) => c,
                None => return self.block(p, BlockReason::Allocate, Some((Meta::Create { target }, len))),
            },
        };
        self.rent(p, child, target, CoreMode::Normal, self.timing.clone)?;
        self.resume(p, len, self.timing.qcreate)
    }

    /// Returns a core to the Created state with no relations.
    fn dismiss(&mut self, c: CoreId) -> Result<(), Fault> {
        if self.cores[c.index()].state == CoreState::Blocked {
            self.transition(c, CoreState::Enabled)?;
        }
        if self.cores[c.index()].state == CoreState::Enabled {
            self.transition(c, CoreState::Allocated)?;
        }
        self.transition(c, CoreState::Created)?;
        let reserved = self.cores[c.index()].preallocated;
        for r in reserved.iter() {
            self.pool.insert(r);
            self.emit(Some(r), EventKind::Release);
        }
        self.blocked[c.index()] = None;
        let fresh = CoreRecord::new(c);
        self.cores[c.index()] = CoreRecord { busy_clocks: self.cores[c.index()].busy_clocks, ..fresh };
        Ok(())
    }

    fn op_term(&mut self, c: CoreId) -> Result<(), Fault> {
        let children = self.cores[c.index()].children;
        if !children.is_empty() {
            return self.block(c, BlockReason::Terminate, Some((Meta::Term, 1)));
        }
        if c == self.root {
            self.emit(Some(c), EventKind::Terminate { parent: None, children });
            self.finish_at = Some(self.clock + u64::from(self.timing.qterm));
            self.cores[c.index()].ready_at = u64::MAX;
            return Ok(());
        }
        let p = self.cores[c.index()].parent_id().expect("non-root core has a parent");
        match self.cores[c.index()].mode {
            CoreMode::ForChild => return self.for_child_done(p, c),
            CoreMode::SumupChild => return self.sumup_child_done(p, c),
            _ => {}
        }
        let child = &self.cores[c.index()];
        let link = child.regs.get(LINK_REGISTER);
        let (payload, value) = match child.latches.for_parent {
            Some(v) => (Payload::ForParent, v),
            None => (Payload::Link, link),
        };
        self.transfer(Endpoint::Core(c), Endpoint::Sv, payload, Some(value));
        self.transfer(Endpoint::Sv, Endpoint::Core(p), Payload::FromChild, Some(value));
        {
            let parent = &mut self.cores[p.index()];
            parent.latches.from_child = Some(value);
            parent.latches.link = Some(link);
            parent.children.remove(c);
        }
        self.emit(Some(c), EventKind::Terminate { parent: Some(p), children });
        self.dismiss(c)?;
        self.pool.insert(c);
        self.children_changed(p)?;
        self.pool_grew();
        Ok(())
    }

    /// Reacts to `p` losing a child.
    fn children_changed(&mut self, p: CoreId) -> Result<(), Fault> {
        let core = &self.cores[p.index()];
        if !core.children.is_empty() {
            return Ok(());
        }
        let Some(b) = self.blocked[p.index()] else { return Ok(()) };
        match b.reason {
            BlockReason::Wait => self.resume(p, 1, self.timing.qwait),
            BlockReason::Halt => {
                self.transition(p, CoreState::Enabled)?;
                self.blocked[p.index()] = None;
                self.cores[p.index()].ready_at = self.clock + 1;
                Ok(())
            }
            BlockReason::Terminate => {
                self.enqueue_retry(p);
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn enqueue_retry(&mut self, c: CoreId) {
        if self.awaiting.contains(c) {
            return;
        }
        if let Some((meta, len)) = self.blocked[c.index()].and_then(|b| b.retry) {
            self.raise(c, meta, len);
        }
    }

    /// Re-enqueues requests that were waiting for free cores.
    fn pool_grew(&mut self) {
        if self.pool.is_empty() {
            return;
        }
        for i in 0..self.cores.len() {
            if let Some(b) = self.blocked[i] {
                if matches!(b.reason, BlockReason::Allocate | BlockReason::Prealloc) {
                    self.enqueue_retry(CoreId::new(i));
                }
            }
        }
    }

    fn op_wait(&mut self, p: CoreId, len: u32) -> Result<(), Fault> {
        if self.cores[p.index()].children.is_empty() {
            self.resume(p, len, self.timing.qwait)
        } else {
            self.block(p, BlockReason::Wait, None)
        }
    }

    fn op_prealloc(&mut self, p: CoreId, count: u32, len: u32) -> Result<(), Fault> {
        let mut got = 0;
        while got < count {
            let Some(c) = self.pool.pop_lowest() else { break };
            self.cores[p.index()].preallocated.insert(c);
            self.emit(Some(c), EventKind::Reserve { parent: p });
            got += 1;
        }
        if got < count {
            let rest = (count - got) as u8;
            self.block(p, BlockReason::Prealloc, Some((Meta::Prealloc { count: rest }, len)))
        } else {
            self.resume(p, len, self.timing.qprealloc)
        }
    }

    fn op_fwd(&mut self, c: CoreId, len: u32) -> Result<(), Fault> {
        let l = &mut self.cores[c.index()].latches;
        if let Some(v) = l.from_child {
            l.for_parent = Some(v);
        } else if let Some(v) = l.from_parent {
            l.for_child = Some(v);
        } else {
            return Err(self.fault(c, FaultKind::UninitializedPseudo));
        }
        self.resume(c, len, self.timing.qfwd)
    }

    fn read_operand(&mut self, c: CoreId, r: Reg) -> Result<u32, Fault> {
        match access_register(&mut self.cores[c.index()], r, Access::Read) {
            Ok(RegAccess::Value(v)) => Ok(v),
            Ok(_) => unreachable!("reads return values"),
            Err(k) => Err(self.fault(c, k)),
        }
    }

    fn op_mass(&mut self, p: CoreId, spec: MassSpec, len: u32) -> Result<(), Fault> {
        if self.cores[p.index()].preallocated.is_empty() {
            return Err(self.fault(p, FaultKind::MassWithoutPreallocation));
        }
        let count = self.read_operand(p, spec.count_reg)?;
        let addr = self.read_operand(p, spec.addr_reg)?;
        self.emit(Some(p), EventKind::MassBegin { mode: spec.mode, count, addr });
        if count == 0 {
            self.cores[p.index()].latches.from_child = Some(0);
            self.emit(Some(p), EventKind::MassRetire { result: 0 });
            return self.resume(p, len, self.timing.qmass);
        }
        self.block(p, BlockReason::Mass, None)?;
        let mut ctrl = MassController {
            mode: spec.mode,
            parent: p,
            count,
            remaining: count,
            addr,
            stride: spec.stride,
            body: spec.body,
            len,
            accumulator: 0,
            active: CoreMask::EMPTY,
            topup: CoreMask::EMPTY,
            broke: false,
            for_child: None,
            summands: VecDeque::new(),
            launches: 0,
            peak_active: 0,
            next_launch_at: self.clock + u64::from(self.timing.qmass),
            adder_free_at: 0,
            stalled: false,
        };
        match spec.mode {
            MassMode::For => {
                let core = &mut self.cores[p.index()];
                core.mode = CoreMode::ForParent;
                core.latches.from_child = Some(count);
            }
            MassMode::Sumup => {
                self.cores[p.index()].mode = CoreMode::SumupParent;
                let want = count.min(self.timing.sumup_window) as usize;
                while self.cores[p.index()].preallocated.count() < want {
                    let Some(c) = self.pool.pop_lowest() else { break };
                    self.cores[p.index()].preallocated.insert(c);
                    ctrl.topup.insert(c);
                    self.emit(Some(c), EventKind::Reserve { parent: p });
                }
            }
        }
        self.controllers.insert(p, ctrl);
        Ok(())
    }

    fn for_child_done(&mut self, p: CoreId, c: CoreId) -> Result<(), Fault> {
        let link = self.cores[c.index()].regs.get(LINK_REGISTER);
        self.transfer(Endpoint::Core(c), Endpoint::Sv, Payload::Link, Some(link));
        self.transfer(Endpoint::Sv, Endpoint::Core(p), Payload::Link, Some(link));
        self.cores[p.index()].regs.set(LINK_REGISTER, link);
        let brk = self.cores[c.index()].latches.for_parent.take();
        if let Some(v) = brk {
            self.transfer(Endpoint::Core(c), Endpoint::Sv, Payload::ForParent, Some(v));
            self.transfer(Endpoint::Sv, Endpoint::Core(p), Payload::FromChild, Some(v));
            self.cores[p.index()].latches.from_child = Some(v);
        }
        let children = self.cores[c.index()].children;
        self.emit(Some(c), EventKind::Terminate { parent: Some(p), children });
        if self.cores[c.index()].state == CoreState::Blocked {
            self.transition(c, CoreState::Enabled)?;
            self.blocked[c.index()] = None;
        }
        self.transition(c, CoreState::Allocated)?;
        let ctrl = self.controllers.get_mut(&p).expect("FOR child has a controller");
        ctrl.active.remove(c);
        ctrl.broke |= brk.is_some();
        Ok(())
    }

    fn sumup_child_done(&mut self, p: CoreId, c: CoreId) -> Result<(), Fault> {
        let children = self.cores[c.index()].children;
        self.emit(Some(c), EventKind::Terminate { parent: Some(p), children });
        self.dismiss(c)?;
        let parent = &mut self.cores[p.index()];
        parent.children.remove(c);
        parent.preallocated.insert(c);
        self.controllers.get_mut(&p).expect("SUMUP child has a controller").active.remove(c);
        Ok(())
    }

    fn step_controllers(&mut self) -> Result<(), Fault> {
        let parents: Vec<CoreId> = self.controllers.keys().copied().collect();
        for p in parents {
            self.step_controller(p)?;
        }
        Ok(())
    }

    fn step_controller(&mut self, p: CoreId) -> Result<(), Fault> {
        let t = self.clock;
        let mut ctrl = self.controllers.remove(&p).expect("listed controller");
        if ctrl.mode == MassMode::Sumup && ctrl.adder_free_at <= t {
            if let Some(v) = ctrl.summands.pop_front() {
                ctrl.accumulator = ctrl.accumulator.wrapping_add(v);
                ctrl.adder_free_at = t + u64::from(self.timing.mass_accumulate);
                self.emit(Some(p), EventKind::Accumulate { value: v, total: ctrl.accumulator });
            }
        }
        if ctrl.remaining > 0 && !ctrl.broke && ctrl.next_launch_at <= t {
            match ctrl.mode {
                MassMode::For => {
                    if ctrl.active.is_empty() {
                        self.launch_for(&mut ctrl)?;
                    }
                }
                MassMode::Sumup => match self.sumup_core(&mut ctrl) {
                    Some(c) => self.launch_sumup(&mut ctrl, c)?,
                    None => {
                        if !ctrl.stalled {
                            ctrl.stalled = true;
                            self.emit(Some(p), EventKind::MassStall);
                        }
                    }
                },
            }
        }
        if ctrl.finished() {
            return self.retire(ctrl);
        }
        self.controllers.insert(p, ctrl);
        Ok(())
    }

    fn launch_for(&mut self, ctrl: &mut MassController) -> Result<(), Fault> {
        let p = ctrl.parent;
        let addr = ctrl.addr;
        self.cores[p.index()].latches.for_child = Some(addr);
        self.transfer(Endpoint::Sv, Endpoint::Core(p), Payload::ForChild, Some(addr));
        let t = self.timing.mass_launch;
        match ctrl.for_child {
            Some(c) => self.glue(p, c, ctrl.body, CoreMode::ForChild, t)?,
            None => {
                let c = self.cores[p.index()].preallocated.pop_lowest().expect("checked at begin");
                self.rent(p, c, ctrl.body, CoreMode::ForChild, t)?;
                ctrl.for_child = Some(c);
            }
        }
        let c = ctrl.for_child.expect("just set");
        self.launched(ctrl, c);
        self.cores[p.index()].latches.from_child = Some(ctrl.remaining);
        Ok(())
    }

    fn sumup_core(&mut self, ctrl: &mut MassController) -> Option<CoreId> {
        let p = ctrl.parent;
        if let Some(c) = self.cores[p.index()].preallocated.pop_lowest() {
            return Some(c);
        }
        if (ctrl.active.count() as u32) < self.timing.sumup_window {
            let c = self.pool.pop_lowest()?;
            ctrl.topup.insert(c);
            return Some(c);
        }
        None
    }

    fn launch_sumup(&mut self, ctrl: &mut MassController, c: CoreId) -> Result<(), Fault> {
        let p = ctrl.parent;
        ctrl.stalled = false;
        self.cores[p.index()].latches.for_child = Some(ctrl.addr);
        self.transfer(Endpoint::Sv, Endpoint::Core(p), Payload::ForChild, Some(ctrl.addr));
        self.rent(p, c, ctrl.body, CoreMode::SumupChild, self.timing.mass_launch)?;
        self.launched(ctrl, c);
        self.peak_sumup_active = self.peak_sumup_active.max(ctrl.active.count());
        Ok(())
    }

    fn launched(&mut self, ctrl: &mut MassController, c: CoreId) {
        ctrl.remaining -= 1;
        ctrl.launches += 1;
        ctrl.active.insert(c);
        ctrl.peak_active = ctrl.peak_active.max(ctrl.active.count());
        ctrl.next_launch_at = self.clock + u64::from(self.timing.mass_launch);
        self.emit(Some(c), EventKind::MassLaunch { child: c, addr: ctrl.addr, remaining: ctrl.remaining });
        ctrl.addr = ctrl.addr.wrapping_add(ctrl.stride as u32);
    }

    fn retire(&mut self, ctrl: MassController) -> Result<(), Fault> {
        let p = ctrl.parent;
        let (result, cost) = match ctrl.mode {
            MassMode::For => {
                if let Some(c) = ctrl.for_child {
                    self.transition(c, CoreState::Created)?;
                    let busy = self.cores[c.index()].busy_clocks;
                    self.cores[c.index()] = CoreRecord { busy_clocks: busy, ..CoreRecord::new(c) };
                    let parent = &mut self.cores[p.index()];
                    parent.children.remove(c);
                    parent.preallocated.insert(c);
                }
                let r = self.cores[p.index()].latches.from_child.unwrap_or(0);
                (r, self.timing.mass_launch)
            }
            MassMode::Sumup => {
                self.cores[p.index()].latches.from_child = Some(ctrl.accumulator);
                self.transfer(Endpoint::Sv, Endpoint::Core(p), Payload::FromChild, Some(ctrl.accumulator));
                for c in ctrl.topup.iter() {
                    self.cores[p.index()].preallocated.remove(c);
                    self.pool.insert(c);
                    self.emit(Some(c), EventKind::Release);
                }
                (ctrl.accumulator, self.timing.mass_accumulate)
            }
        };
        self.emit(Some(p), EventKind::MassRetire { result });
        self.cores[p.index()].mode = CoreMode::Normal;
        self.resume(p, ctrl.len, cost)?;
        self.pool_grew();
        Ok(())
    }

    /// Ends the program: the root is disabled and every core returns to the pool.
    pub fn finish(&mut self) -> Result<(), Fault> {
        let root = self.root;
        self.dismiss(root)?;
        self.pool.insert(root);
        self.emit(Some(root), EventKind::Finish);
        Ok(())
    }

    /// True when nothing can change any more without outside help.
    pub fn is_stuck(&self, t: u64) -> bool {
        if self.finish_at.is_some() || !self.queue.is_empty() || self.busy_until > t + 1 {
            return false;
        }
        if self.cores.iter().any(|c| c.state == CoreState::Enabled && c.ready_at != u64::MAX) {
            return false;
        }
        self.controllers.values().all(|c| {
            if !c.summands.is_empty() || c.finished() || c.next_launch_at > t + 1 {
                return false;
            }
            let launchable = match c.mode {
                MassMode::For => c.active.is_empty(),
                MassMode::Sumup => {
                    !self.cores[c.parent.index()].preallocated.is_empty()
                        || (!self.pool.is_empty() && (c.active.count() as u32) < self.timing.sumup_window)
                }
            };
            !(c.remaining > 0 && !c.broke && launchable)
        })
    }

    /// Human-readable summary of blocked cores.
    pub fn blocked_summary(&self) -> String {
        let parts: Vec<String> = self
            .blocked
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.map(|b| format!("core {i} blocked on {:?}", b.reason)))
            .collect();
        if parts.is_empty() {
            "no runnable core".to_string()
        } else {
            parts.join(", ")
        }
    }
}
