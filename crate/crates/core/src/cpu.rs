//! One core: architectural state, latch registers, the core-level state
//! machine, and execution of a single item per step.

use std::fmt;

use thiserror::Error;

use crate::isa::{decode, AluOp, Cond, DecodeError, Instr, Item, Meta, Reg};
use crate::mask::{CoreId, CoreMask};
use crate::memory::{Memory, MemoryError};
use crate::timing::TimingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RegisterFile(pub [u32; 8]);

impl RegisterFile {
    /// Reads an architectural register. Panics on the pseudo-register, which
    /// has no slot in the file.
    pub fn get(&self, r: Reg) -> u32 {
        assert!(!r.is_pseudo(), "pseudo-register is not in the register file");
        self.0[r.id() as usize]
    }

    pub fn set(&mut self, r: Reg, v: u32) {
        assert!(!r.is_pseudo(), "pseudo-register is not in the register file");
        self.0[r.id() as usize] = v;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConditionCodes {
    pub zf: bool,
    pub sf: bool,
    pub of: bool,
}

impl Default for ConditionCodes {
    /// Y86 reset state.
    fn default() -> Self {
        ConditionCodes { zf: true, sf: false, of: false }
    }
}

impl ConditionCodes {
    pub fn holds(&self, cond: Cond) -> bool {
        let lt = self.sf != self.of;
        match cond {
            Cond::Always => true,
            Cond::Le => lt || self.zf,
            Cond::L => lt,
            Cond::E => self.zf,
            Cond::Ne => !self.zf,
            Cond::Ge => !lt,
            Cond::G => !lt && !self.zf,
        }
    }
}

/// `b OP a` with Y86 flag semantics.
pub fn alu(op: AluOp, a: u32, b: u32) -> (u32, ConditionCodes) {
    let (t, of) = match op {
        AluOp::Add => {
            let t = b.wrapping_add(a);
            (t, ((a as i32) < 0) == ((b as i32) < 0) && ((t as i32) < 0) != ((a as i32) < 0))
        }
        AluOp::Sub => {
            let t = b.wrapping_sub(a);
            (t, ((a as i32) < 0) != ((b as i32) < 0) && ((t as i32) < 0) != ((b as i32) < 0))
        }
        AluOp::And => (b & a, false),
        AluOp::Xor => (b ^ a, false),
    };
    (t, ConditionCodes { zf: t == 0, sf: (t as i32) < 0, of })
}

/// A latch register: a value plus its valid flag.
pub type Latch = Option<u32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct LatchSet {
    pub for_child: Latch,
    pub from_child: Latch,
    pub for_parent: Latch,
    pub from_parent: Latch,
    /// Link-register value returned by the most recently terminated child.
    pub link: Latch,
}

/// Register whose value a terminating child hands back to its parent.
pub const LINK_REGISTER: Reg = Reg::Eax;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoreState {
    /// In the pool (or reserved for a parent), not running.
    Created,
    Allocated,
    Enabled,
    Blocked,
}

impl CoreState {
    /// The six legal core-level edges.
    pub fn can_become(self, to: CoreState) -> bool {
        use CoreState::*;
        matches!(
            (self, to),
            (Created, Allocated)
                | (Allocated, Created)
                | (Allocated, Enabled)
                | (Enabled, Allocated)
                | (Enabled, Blocked)
                | (Blocked, Enabled)
        )
    }
}

impl fmt::Display for CoreState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoreMode {
    Normal,
    ForChild,
    SumupChild,
    ForParent,
    SumupParent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("illegal core transition {from} -> {to}")]
pub struct IllegalTransition {
    pub from: CoreState,
    pub to: CoreState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreRecord {
    pub identity: CoreId,
    pub parent: CoreMask,
    pub children: CoreMask,
    pub preallocated: CoreMask,
    /// Code address of the quasi-thread this core runs.
    pub offset: u32,
    pub state: CoreState,
    pub pc: u32,
    pub regs: RegisterFile,
    pub cc: ConditionCodes,
    pub latches: LatchSet,
    pub mode: CoreMode,
    /// Clock at which the core may issue its next item.
    pub ready_at: u64,
    /// Clocks spent executing instructions.
    pub busy_clocks: u64,
}

impl CoreRecord {
    pub fn new(identity: CoreId) -> CoreRecord {
        CoreRecord {
            identity,
            parent: CoreMask::EMPTY,
            children: CoreMask::EMPTY,
            preallocated: CoreMask::EMPTY,
            offset: 0,
            state: CoreState::Created,
            pc: 0,
            regs: RegisterFile::default(),
            cc: ConditionCodes::default(),
            latches: LatchSet::default(),
            mode: CoreMode::Normal,
            ready_at: 0,
            busy_clocks: 0,
        }
    }

    pub fn set_state(&mut self, to: CoreState) -> Result<(), IllegalTransition> {
        if !self.state.can_become(to) {
            return Err(IllegalTransition { from: self.state, to });
        }
        self.state = to;
        Ok(())
    }

    pub fn parent_id(&self) -> Option<CoreId> {
        self.parent.lowest()
    }

    fn is_child_role(&self) -> bool {
        match self.mode {
            CoreMode::ForChild | CoreMode::SumupChild => true,
            CoreMode::ForParent | CoreMode::SumupParent => false,
            CoreMode::Normal => !self.parent.is_empty() && self.children.is_empty(),
        }
    }
}

/// A latch movement the supervisor must carry out on behalf of a core.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvRequest {
    /// The child's `for_parent` latch was written and must reach the parent
    /// now rather than at termination.
    TransferToParent { value: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreEvent {
    Executed { instr: Instr, clocks: u32, request: Option<SvRequest> },
    /// A metainstruction was found during fetch; nothing was executed.
    MetaRaised { meta: Meta, len: u32 },
    Halted { clocks: u32 },
    BlockedNoProgress,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FaultKind {
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error("uninitialized pseudo-register")]
    UninitializedPseudo,
    #[error("operation not supported on the pseudo-register in this mode")]
    UnsupportedPseudoOp,
    #[error("halt outside the root quasi-thread")]
    HaltInChild,
    #[error("mass processing started without a preallocated core")]
    MassWithoutPreallocation,
    #[error(transparent)]
    State(#[from] IllegalTransition),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("core {core} at pc {pc:#06x}: {kind}")]
pub struct Fault {
    pub core: CoreId,
    pub pc: u32,
    pub kind: FaultKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Read,
    Write(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegAccess {
    Value(u32),
    Written,
    Request(SvRequest),
}

/// Reads or writes a register operand.
///
/// Ids 0..=7 go to the register file. The pseudo-register is routed to a
/// latch by role: a core acting as child reads `from_parent` and writes
/// `for_parent`; a core acting as parent reads `from_child` and writes
/// `for_child`. In normal mode a read prefers `from_child` when it holds a
/// value. Only SUMUP children request an immediate parent transfer; other
/// `for_parent` values travel when the child terminates.
pub fn access_register(core: &mut CoreRecord, reg: Reg, access: Access) -> Result<RegAccess, FaultKind> {
    if !reg.is_pseudo() {
        return Ok(match access {
            Access::Read => RegAccess::Value(core.regs.get(reg)),
            Access::Write(v) => {
                core.regs.set(reg, v);
                RegAccess::Written
            }
        });
    }
    let l = &mut core.latches;
    match access {
        Access::Read => {
            let latch = match core.mode {
                CoreMode::ForChild | CoreMode::SumupChild => l.from_parent,
                CoreMode::ForParent | CoreMode::SumupParent => l.from_child,
                CoreMode::Normal => l.from_child.or(l.from_parent),
            };
            latch.map(RegAccess::Value).ok_or(FaultKind::UninitializedPseudo)
        }
        Access::Write(v) => {
            if core.mode == CoreMode::SumupChild {
                core.latches.for_parent = Some(v);
                Ok(RegAccess::Request(SvRequest::TransferToParent { value: v }))
            } else if core.is_child_role() {
                core.latches.for_parent = Some(v);
                Ok(RegAccess::Written)
            } else {
                core.latches.for_child = Some(v);
                Ok(RegAccess::Written)
            }
        }
    }
}

/// Copies the parent's glue (registers, flags and the outgoing latch) into a
/// freshly allocated child and points it at `offset`.
pub fn clone_from(parent: &CoreRecord, child: &mut CoreRecord, offset: u32) {
    child.regs = parent.regs;
    child.cc = parent.cc;
    child.pc = offset;
    child.offset = offset;
    if parent.latches.for_child.is_some() {
        child.latches.from_parent = parent.latches.for_child;
    }
}

fn read(core: &mut CoreRecord, r: Reg) -> Result<u32, FaultKind> {
    match access_register(core, r, Access::Read)? {
        RegAccess::Value(v) => Ok(v),
        _ => unreachable!("reads return values"),
    }
}

fn write(core: &mut CoreRecord, r: Reg, v: u32) -> Result<Option<SvRequest>, FaultKind> {
    Ok(match access_register(core, r, Access::Write(v))? {
        RegAccess::Request(req) => Some(req),
        _ => None,
    })
}

fn effective_address(core: &mut CoreRecord, base: Option<Reg>, disp: u32) -> Result<u32, FaultKind> {
    let b = match base {
        Some(r) => read(core, r)?,
        None => 0,
    };
    Ok(b.wrapping_add(disp))
}

/// Executes the item at `pc`. Metainstructions are reported without any
/// architectural effect; the supervisor advances the pc.
pub fn step_core(core: &mut CoreRecord, mem: &mut Memory, timing: &TimingConfig) -> Result<CoreEvent, Fault> {
    if core.state != CoreState::Enabled {
        return Ok(CoreEvent::BlockedNoProgress);
    }
    let pc = core.pc;
    let fault = |kind: FaultKind| Fault { core: core.identity, pc, kind };
    let (item, len) = decode(mem.as_bytes(), pc).map_err(|e| fault(e.into()))?;
    let instr = match item {
        Item::Meta(meta) => return Ok(CoreEvent::MetaRaised { meta, len: len as u32 }),
        Item::Exec(i) => i,
    };
    let clocks = timing.instr_cost(instr.class());
    if instr == Instr::Halt {
        return Ok(CoreEvent::Halted { clocks });
    }
    let request = execute(core, mem, instr, pc.wrapping_add(len as u32)).map_err(|k| Fault {
        core: core.identity,
        pc,
        kind: k,
    })?;
    core.busy_clocks += u64::from(clocks);
    Ok(CoreEvent::Executed { instr, clocks, request })
}

fn execute(core: &mut CoreRecord, mem: &mut Memory, instr: Instr, next_pc: u32) -> Result<Option<SvRequest>, FaultKind> {
    let mut new_pc = next_pc;
    let mut request = None;
    match instr {
        Instr::Halt | Instr::Nop => {}
        Instr::Move { cond, src, dst } => {
            if core.cc.holds(cond) {
                let v = read(core, src)?;
                request = write(core, dst, v)?;
            }
        }
        Instr::Irmovl { imm, dst } => request = write(core, dst, imm)?,
        Instr::Rmmovl { src, base, disp } => {
            let addr = effective_address(core, base, disp)?;
            let v = read(core, src)?;
            mem.write_word(addr, v)?;
        }
        Instr::Mrmovl { dst, base, disp } => {
            let addr = effective_address(core, base, disp)?;
            let v = mem.read_word(addr)?;
            request = write(core, dst, v)?;
        }
        Instr::Op { op, src, dst } => {
            let a = read(core, src)?;
            if dst.is_pseudo() && core.mode == CoreMode::SumupChild {
                // The adder sits in the parent: only the summand leaves.
                if op != AluOp::Add {
                    return Err(FaultKind::UnsupportedPseudoOp);
                }
                request = write(core, dst, a)?;
            } else {
                let b = read(core, dst)?;
                let (t, cc) = alu(op, a, b);
                core.cc = cc;
                request = write(core, dst, t)?;
            }
        }
        Instr::Iaddl { imm, dst } => {
            let b = read(core, dst)?;
            let (t, cc) = alu(AluOp::Add, imm, b);
            core.cc = cc;
            request = write(core, dst, t)?;
        }
        Instr::Jump { cond, target } => {
            if core.cc.holds(cond) {
                new_pc = target;
            }
        }
        Instr::Call { target } => {
            let sp = core.regs.get(Reg::Esp).wrapping_sub(4);
            mem.write_word(sp, next_pc)?;
            core.regs.set(Reg::Esp, sp);
            new_pc = target;
        }
        Instr::Ret => {
            let sp = core.regs.get(Reg::Esp);
            new_pc = mem.read_word(sp)?;
            core.regs.set(Reg::Esp, sp.wrapping_add(4));
        }
        Instr::Pushl { src } => {
            let v = read(core, src)?;
            let sp = core.regs.get(Reg::Esp).wrapping_sub(4);
            mem.write_word(sp, v)?;
            core.regs.set(Reg::Esp, sp);
        }
        Instr::Popl { dst } => {
            let sp = core.regs.get(Reg::Esp);
            let v = mem.read_word(sp)?;
            core.regs.set(Reg::Esp, sp.wrapping_add(4));
            request = write(core, dst, v)?;
        }
    }
    core.pc = new_pc;
    Ok(request)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::assemble;

    fn enabled_core() -> CoreRecord {
        let mut c = CoreRecord::new(CoreId::new(0));
        c.set_state(CoreState::Allocated).unwrap();
        c.set_state(CoreState::Enabled).unwrap();
        c
    }

    fn memory_with(src: &str) -> Memory {
        let mut m = Memory::default();
        m.load(&assemble(src).unwrap()).unwrap();
        m
    }

    #[test]
    fn irmovl_sets_register_and_advances_pc() {
        let mut c = enabled_core();
        let mut m = memory_with("irmovl $5, %eax");
        let ev = step_core(&mut c, &mut m, &TimingConfig::default()).unwrap();
        assert_eq!(c.regs.get(Reg::Eax), 5);
        assert_eq!(c.pc, 6);
        assert!(matches!(ev, CoreEvent::Executed { clocks: 4, request: None, .. }));
    }

    #[test]
    fn meta_leaves_architectural_state_untouched() {
        let mut c = enabled_core();
        c.regs.set(Reg::Ebx, 9);
        let before = c.clone();
        let mut m = memory_with("QTerm");
        let ev = step_core(&mut c, &mut m, &TimingConfig::default()).unwrap();
        assert_eq!(ev, CoreEvent::MetaRaised { meta: Meta::Term, len: 1 });
        assert_eq!(c, before);
    }

    #[test]
    fn non_enabled_core_makes_no_progress() {
        let mut c = CoreRecord::new(CoreId::new(1));
        let mut m = memory_with("nop");
        assert_eq!(step_core(&mut c, &mut m, &TimingConfig::default()).unwrap(), CoreEvent::BlockedNoProgress);
    }

    #[test]
    fn invalid_opcode_faults_with_core_and_pc() {
        let mut c = enabled_core();
        c.pc = 1;
        let mut m = memory_with("nop\n.long 0xeeeeeeee");
        let f = step_core(&mut c, &mut m, &TimingConfig::default()).unwrap_err();
        assert_eq!((f.core, f.pc), (CoreId::new(0), 1));
        assert!(matches!(f.kind, FaultKind::Decode(DecodeError::InvalidInstruction { .. })));
    }

    #[test]
    fn out_of_range_access_faults() {
        let mut c = enabled_core();
        let mut m = memory_with("irmovl $0xfffffff0, %ecx\nmrmovl 0(%ecx), %eax");
        let t = TimingConfig::default();
        step_core(&mut c, &mut m, &t).unwrap();
        let f = step_core(&mut c, &mut m, &t).unwrap_err();
        assert!(matches!(f.kind, FaultKind::Memory(_)));
        assert_eq!(f.pc, 6);
    }

    #[test]
    fn clone_copies_glue_and_isolates() {
        let mut parent = enabled_core();
        parent.regs.set(Reg::Ecx, 100);
        parent.latches.for_child = Some(0x1000);
        let mut child = CoreRecord::new(CoreId::new(1));
        child.set_state(CoreState::Allocated).unwrap();
        clone_from(&parent, &mut child, 0x40);
        assert_eq!(child.regs, parent.regs);
        assert_eq!(child.cc, parent.cc);
        assert_eq!((child.pc, child.offset), (0x40, 0x40));
        assert_eq!(child.latches.from_parent, Some(0x1000));
        child.regs.set(Reg::Eax, 77);
        assert_eq!(parent.regs.get(Reg::Eax), 0);
    }

    #[test]
    fn architectural_register_access() {
        let mut c = enabled_core();
        assert_eq!(access_register(&mut c, Reg::Eax, Access::Write(7)), Ok(RegAccess::Written));
        assert_eq!(access_register(&mut c, Reg::Eax, Access::Read), Ok(RegAccess::Value(7)));
    }

    #[test]
    fn uninitialized_pseudo_read_faults() {
        let mut c = enabled_core();
        assert_eq!(access_register(&mut c, Reg::Pseudo, Access::Read), Err(FaultKind::UninitializedPseudo));
    }

    #[test]
    fn sumup_child_add_to_pseudo_requests_transfer() {
        let mut c = enabled_core();
        c.mode = CoreMode::SumupChild;
        c.parent = CoreId::new(3).mask();
        c.regs.set(Reg::Esi, 9);
        let mut m = memory_with("addl %esi, %pr");
        let ev = step_core(&mut c, &mut m, &TimingConfig::default()).unwrap();
        assert_eq!(c.latches.for_parent, Some(9));
        assert!(matches!(
            ev,
            CoreEvent::Executed { request: Some(SvRequest::TransferToParent { value: 9 }), .. }
        ));
    }

    #[test]
    fn parent_reads_latched_child_value() {
        let mut c = enabled_core();
        c.latches.from_child = Some(42);
        assert_eq!(access_register(&mut c, Reg::Pseudo, Access::Read), Ok(RegAccess::Value(42)));
        c.mode = CoreMode::SumupParent;
        assert_eq!(access_register(&mut c, Reg::Pseudo, Access::Read), Ok(RegAccess::Value(42)));
        // Reads do not clear validity.
        assert_eq!(c.latches.from_child, Some(42));
    }

    #[test]
    fn pseudo_write_routes_by_role() {
        let mut root = enabled_core();
        access_register(&mut root, Reg::Pseudo, Access::Write(5)).unwrap();
        assert_eq!(root.latches.for_child, Some(5));
        let mut child = enabled_core();
        child.parent = CoreId::new(4).mask();
        access_register(&mut child, Reg::Pseudo, Access::Write(6)).unwrap();
        assert_eq!(child.latches.for_parent, Some(6));
        assert_eq!(child.latches.for_child, None);
    }

    #[test]
    fn only_the_six_edges_are_legal() {
        use CoreState::*;
        let all = [Created, Allocated, Enabled, Blocked];
        let legal: usize = all.iter().map(|a| all.iter().filter(|b| a.can_become(**b)).count()).sum();
        assert_eq!(legal, 6);
        let mut c = CoreRecord::new(CoreId::new(0));
        assert_eq!(c.set_state(Enabled), Err(IllegalTransition { from: Created, to: Enabled }));
    }

    #[test]
    fn flags_follow_y86_rules() {
        let (t, cc) = alu(AluOp::Add, 1, i32::MAX as u32);
        assert_eq!(t, 0x8000_0000);
        assert!(cc.of && cc.sf && !cc.zf);
        let (t, cc) = alu(AluOp::Sub, 1, 1);
        assert_eq!(t, 0);
        assert!(cc.zf && !cc.of);
        let (_, cc) = alu(AluOp::Sub, 1, 0x8000_0000);
        assert!(cc.of);
        assert!(cc.holds(Cond::L) == (cc.sf != cc.of));
    }
}
