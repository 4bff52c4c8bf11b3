//! Y86 instruction set extended with supervisor metainstructions.
//!
//! Executable instructions use the standard Y86 (IA32 flavour) encoding with
//! little-endian 32-bit constants. Metainstructions live in the otherwise
//! unused `0xF` opcode nibble; the low nibble selects the kind. The exact
//! metainstruction encoding is local to this toolchain.

mod asm;
mod object;

pub use asm::{assemble, AsmError, AsmErrorKind};
pub use object::{ObjectImage, ObjectParseError};

use std::fmt;

use thiserror::Error;

/// A register operand: one of the eight architectural registers or the
/// pseudo-register that is routed to the latch set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Reg {
    Eax = 0,
    Ecx = 1,
    Edx = 2,
    Ebx = 3,
    Esp = 4,
    Ebp = 5,
    Esi = 6,
    Edi = 7,
    /// Register id 8: not part of the register file.
    Pseudo = 8,
}

/// Register nibble meaning "no register".
pub const NO_REG: u8 = 0xF;

impl Reg {
    pub const ARCHITECTURAL: [Reg; 8] = [
        Reg::Eax,
        Reg::Ecx,
        Reg::Edx,
        Reg::Ebx,
        Reg::Esp,
        Reg::Ebp,
        Reg::Esi,
        Reg::Edi,
    ];

    pub fn from_id(id: u8) -> Option<Reg> {
        match id {
            0..=7 => Some(Reg::ARCHITECTURAL[id as usize]),
            8 => Some(Reg::Pseudo),
            _ => None,
        }
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn is_pseudo(self) -> bool {
        self == Reg::Pseudo
    }

    pub fn name(self) -> &'static str {
        match self {
            Reg::Eax => "%eax",
            Reg::Ecx => "%ecx",
            Reg::Edx => "%edx",
            Reg::Ebx => "%ebx",
            Reg::Esp => "%esp",
            Reg::Ebp => "%ebp",
            Reg::Esi => "%esi",
            Reg::Edi => "%edi",
            Reg::Pseudo => "%pr",
        }
    }

    pub fn from_name(name: &str) -> Option<Reg> {
        let r = match name {
            "%eax" => Reg::Eax,
            "%ecx" => Reg::Ecx,
            "%edx" => Reg::Edx,
            "%ebx" => Reg::Ebx,
            "%esp" => Reg::Esp,
            "%ebp" => Reg::Ebp,
            "%esi" => Reg::Esi,
            "%edi" => Reg::Edi,
            "%pr" => Reg::Pseudo,
            _ => return None,
        };
        Some(r)
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Branch / conditional-move condition (the `ifun` nibble of jXX and cmovXX).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Cond {
    Always = 0,
    Le = 1,
    L = 2,
    E = 3,
    Ne = 4,
    Ge = 5,
    G = 6,
}

impl Cond {
    pub const ALL: [Cond; 7] = [
        Cond::Always,
        Cond::Le,
        Cond::L,
        Cond::E,
        Cond::Ne,
        Cond::Ge,
        Cond::G,
    ];

    fn from_fn(f: u8) -> Option<Cond> {
        Cond::ALL.get(f as usize).copied()
    }

    fn suffix(self) -> &'static str {
        match self {
            Cond::Always => "",
            Cond::Le => "le",
            Cond::L => "l",
            Cond::E => "e",
            Cond::Ne => "ne",
            Cond::Ge => "ge",
            Cond::G => "g",
        }
    }

    fn from_suffix(s: &str) -> Option<Cond> {
        Cond::ALL.iter().copied().find(|c| c.suffix() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum AluOp {
    Add = 0,
    Sub = 1,
    And = 2,
    Xor = 3,
}

impl AluOp {
    pub const ALL: [AluOp; 4] = [AluOp::Add, AluOp::Sub, AluOp::And, AluOp::Xor];

    pub fn mnemonic(self) -> &'static str {
        match self {
            AluOp::Add => "addl",
            AluOp::Sub => "subl",
            AluOp::And => "andl",
            AluOp::Xor => "xorl",
        }
    }
}

/// Executable instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instr {
    Halt,
    Nop,
    /// `rrmovl` when `cond` is [`Cond::Always`], otherwise `cmovXX`.
    Move { cond: Cond, src: Reg, dst: Reg },
    Irmovl { imm: u32, dst: Reg },
    Rmmovl { src: Reg, base: Option<Reg>, disp: u32 },
    Mrmovl { dst: Reg, base: Option<Reg>, disp: u32 },
    Op { op: AluOp, src: Reg, dst: Reg },
    Iaddl { imm: u32, dst: Reg },
    Jump { cond: Cond, target: u32 },
    Call { target: u32 },
    Ret,
    Pushl { src: Reg },
    Popl { dst: Reg },
}

/// Instruction class used for timing lookups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstrClass {
    Halt,
    Nop,
    Rrmovl,
    Irmovl,
    Rmmovl,
    Mrmovl,
    Opl,
    Iaddl,
    Jxx,
    Call,
    Ret,
    Pushl,
    Popl,
}

impl Instr {
    pub fn class(&self) -> InstrClass {
        match self {
            Instr::Halt => InstrClass::Halt,
            Instr::Nop => InstrClass::Nop,
            Instr::Move { .. } => InstrClass::Rrmovl,
            Instr::Irmovl { .. } => InstrClass::Irmovl,
            Instr::Rmmovl { .. } => InstrClass::Rmmovl,
            Instr::Mrmovl { .. } => InstrClass::Mrmovl,
            Instr::Op { .. } => InstrClass::Opl,
            Instr::Iaddl { .. } => InstrClass::Iaddl,
            Instr::Jump { .. } => InstrClass::Jxx,
            Instr::Call { .. } => InstrClass::Call,
            Instr::Ret => InstrClass::Ret,
            Instr::Pushl { .. } => InstrClass::Pushl,
            Instr::Popl { .. } => InstrClass::Popl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MassMode {
    For,
    Sumup,
}

impl fmt::Display for MassMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MassMode::For => "FOR",
            MassMode::Sumup => "SUMUP",
        })
    }
}

/// Operands of a mass-processing metainstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MassSpec {
    pub mode: MassMode,
    /// Register holding the iteration count.
    pub count_reg: Reg,
    /// Register holding the address of the first element.
    pub addr_reg: Reg,
    /// Byte distance between consecutive elements; never zero.
    pub stride: i32,
    /// Code address of the per-element quasi-thread.
    pub body: u32,
}

/// Metainstruction, executed by the supervisor instead of the core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Meta {
    Create { target: u32 },
    Term,
    Wait,
    Prealloc { count: u8 },
    Mass(MassSpec),
    /// Copy the input pseudo-register latch to the output latch.
    Fwd,
}

impl Meta {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Meta::Create { .. } => "QCreate",
            Meta::Term => "QTerm",
            Meta::Wait => "QWait",
            Meta::Prealloc { .. } => "QPrealloc",
            Meta::Mass(_) => "QMass",
            Meta::Fwd => "QFwd",
        }
    }
}

/// One decoded item of the instruction stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Item {
    Exec(Instr),
    Meta(Meta),
}

impl From<Instr> for Item {
    fn from(i: Instr) -> Self {
        Item::Exec(i)
    }
}

impl From<Meta> for Item {
    fn from(m: Meta) -> Self {
        Item::Meta(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ItemKind {
    Executable,
    Meta,
}

/// Opcode nibble reserved for metainstructions.
pub const META_ICODE: u8 = 0xF;

const META_CREATE: u8 = 0x0;
const META_TERM: u8 = 0x1;
const META_WAIT: u8 = 0x2;
const META_PREALLOC: u8 = 0x3;
const META_MASS_FOR: u8 = 0x4;
const META_MASS_SUMUP: u8 = 0x5;
const META_FWD: u8 = 0x6;

/// Classifies an opcode byte and returns the encoded length of the item it
/// starts. `None` means the byte is not a valid opcode.
pub fn classify(opcode: u8) -> Option<(ItemKind, usize)> {
    let icode = opcode >> 4;
    let ifun = opcode & 0xF;
    let exec = |len| Some((ItemKind::Executable, len));
    match (icode, ifun) {
        (0x0, 0) | (0x1, 0) | (0x9, 0) => exec(1),
        (0x2, 0..=6) => exec(2),
        (0x3, 0) | (0x4, 0) | (0x5, 0) | (0xC, 0) => exec(6),
        (0x6, 0..=3) => exec(2),
        (0x7, 0..=6) => exec(5),
        (0x8, 0) => exec(5),
        (0xA, 0) | (0xB, 0) => exec(2),
        (META_ICODE, f) => {
            let len = match f {
                META_CREATE => 5,
                META_TERM | META_WAIT | META_FWD => 1,
                META_PREALLOC => 2,
                META_MASS_FOR | META_MASS_SUMUP => 10,
                _ => return None,
            };
            Some((ItemKind::Meta, len))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("invalid instruction byte {byte:#04x} at {addr:#06x}")]
    InvalidInstruction { addr: u32, byte: u8 },
    #[error("invalid operand encoding at {addr:#06x}")]
    InvalidOperand { addr: u32 },
    #[error("instruction at {addr:#06x} runs past the end of memory")]
    Truncated { addr: u32 },
}

fn pack(hi: u8, lo: u8) -> u8 {
    (hi << 4) | (lo & 0xF)
}

fn opt_reg_id(r: Option<Reg>) -> u8 {
    r.map_or(NO_REG, Reg::id)
}

/// Encodes an item into its byte representation.
pub fn encode(item: &Item) -> Vec<u8> {
    let mut out = Vec::with_capacity(10);
    match *item {
        Item::Exec(i) => match i {
            Instr::Halt => out.push(0x00),
            Instr::Nop => out.push(0x10),
            Instr::Move { cond, src, dst } => {
                out.push(pack(0x2, cond as u8));
                out.push(pack(src.id(), dst.id()));
            }
            Instr::Irmovl { imm, dst } => {
                out.push(0x30);
                out.push(pack(NO_REG, dst.id()));
                out.extend_from_slice(&imm.to_le_bytes());
            }
            Instr::Rmmovl { src, base, disp } => {
                out.push(0x40);
                out.push(pack(src.id(), opt_reg_id(base)));
                out.extend_from_slice(&disp.to_le_bytes());
            }
            Instr::Mrmovl { dst, base, disp } => {
                out.push(0x50);
                out.push(pack(dst.id(), opt_reg_id(base)));
                out.extend_from_slice(&disp.to_le_bytes());
            }
            Instr::Op { op, src, dst } => {
                out.push(pack(0x6, op as u8));
                out.push(pack(src.id(), dst.id()));
            }
            Instr::Iaddl { imm, dst } => {
                out.push(0xC0);
                out.push(pack(NO_REG, dst.id()));
                out.extend_from_slice(&imm.to_le_bytes());
            }
            Instr::Jump { cond, target } => {
                out.push(pack(0x7, cond as u8));
                out.extend_from_slice(&target.to_le_bytes());
            }
            Instr::Call { target } => {
                out.push(0x80);
                out.extend_from_slice(&target.to_le_bytes());
            }
            Instr::Ret => out.push(0x90),
            Instr::Pushl { src } => {
                out.push(0xA0);
                out.push(pack(src.id(), NO_REG));
            }
            Instr::Popl { dst } => {
                out.push(0xB0);
                out.push(pack(dst.id(), NO_REG));
            }
        },
        Item::Meta(m) => match m {
            Meta::Create { target } => {
                out.push(pack(META_ICODE, META_CREATE));
                out.extend_from_slice(&target.to_le_bytes());
            }
            Meta::Term => out.push(pack(META_ICODE, META_TERM)),
            Meta::Wait => out.push(pack(META_ICODE, META_WAIT)),
            Meta::Prealloc { count } => {
                out.push(pack(META_ICODE, META_PREALLOC));
                out.push(count);
            }
            Meta::Mass(spec) => {
                let f = match spec.mode {
                    MassMode::For => META_MASS_FOR,
                    MassMode::Sumup => META_MASS_SUMUP,
                };
                out.push(pack(META_ICODE, f));
                out.push(pack(spec.count_reg.id(), spec.addr_reg.id()));
                out.extend_from_slice(&spec.stride.to_le_bytes());
                out.extend_from_slice(&spec.body.to_le_bytes());
            }
            Meta::Fwd => out.push(pack(META_ICODE, META_FWD)),
        },
    }
    debug_assert_eq!(Some(out.len()), classify(out[0]).map(|(_, l)| l));
    out
}

/// Decodes the item starting at `addr`. Returns the item and its length.
pub fn decode(bytes: &[u8], addr: u32) -> Result<(Item, usize), DecodeError> {
    let start = addr as usize;
    let opcode = *bytes.get(start).ok_or(DecodeError::Truncated { addr })?;
    let (kind, len) = classify(opcode).ok_or(DecodeError::InvalidInstruction { addr, byte: opcode })?;
    let raw = bytes
        .get(start..start + len)
        .ok_or(DecodeError::Truncated { addr })?;
    let bad = DecodeError::InvalidOperand { addr };
    let word = |at: usize| u32::from_le_bytes([raw[at], raw[at + 1], raw[at + 2], raw[at + 3]]);
    let reg = |nib: u8| Reg::from_id(nib).ok_or(bad.clone());
    let none = |nib: u8| if nib == NO_REG { Ok(()) } else { Err(bad.clone()) };
    let opt_reg = |nib: u8| {
        if nib == NO_REG {
            Ok(None)
        } else {
            Reg::from_id(nib).map(Some).ok_or(bad.clone())
        }
    };
    let ifun = opcode & 0xF;
    let (ra, rb) = if len >= 2 { (raw[1] >> 4, raw[1] & 0xF) } else { (0, 0) };

    let item = match kind {
        ItemKind::Executable => Item::Exec(match opcode >> 4 {
            0x0 => Instr::Halt,
            0x1 => Instr::Nop,
            0x2 => Instr::Move {
                cond: Cond::from_fn(ifun).ok_or(bad.clone())?,
                src: reg(ra)?,
                dst: reg(rb)?,
            },
            0x3 => {
                none(ra)?;
                Instr::Irmovl { imm: word(2), dst: reg(rb)? }
            }
            0x4 => Instr::Rmmovl { src: reg(ra)?, base: opt_reg(rb)?, disp: word(2) },
            0x5 => Instr::Mrmovl { dst: reg(ra)?, base: opt_reg(rb)?, disp: word(2) },
            0x6 => Instr::Op {
                op: AluOp::ALL[ifun as usize],
                src: reg(ra)?,
                dst: reg(rb)?,
            },
            0x7 => Instr::Jump {
                cond: Cond::from_fn(ifun).ok_or(bad.clone())?,
                target: word(1),
            },
            0x8 => Instr::Call { target: word(1) },
            0x9 => Instr::Ret,
            0xA => {
                none(rb)?;
                Instr::Pushl { src: reg(ra)? }
            }
            0xB => {
                none(rb)?;
                Instr::Popl { dst: reg(ra)? }
            }
            0xC => {
                none(ra)?;
                Instr::Iaddl { imm: word(2), dst: reg(rb)? }
            }
            _ => unreachable!("classified as executable"),
        }),
        ItemKind::Meta => Item::Meta(match ifun {
            META_CREATE => Meta::Create { target: word(1) },
            META_TERM => Meta::Term,
            META_WAIT => Meta::Wait,
            META_PREALLOC => {
                if raw[1] == 0 {
                    return Err(bad);
                }
                Meta::Prealloc { count: raw[1] }
            }
            META_MASS_FOR | META_MASS_SUMUP => {
                let count_reg = reg(ra)?;
                let addr_reg = reg(rb)?;
                let stride = i32::from_le_bytes([raw[2], raw[3], raw[4], raw[5]]);
                if count_reg.is_pseudo() || addr_reg.is_pseudo() || stride == 0 {
                    return Err(bad);
                }
                Meta::Mass(MassSpec {
                    mode: if ifun == META_MASS_FOR { MassMode::For } else { MassMode::Sumup },
                    count_reg,
                    addr_reg,
                    stride,
                    body: word(6),
                })
            }
            META_FWD => Meta::Fwd,
            _ => unreachable!("classified as meta"),
        }),
    };
    Ok((item, len))
}

fn fmt_mem(f: &mut fmt::Formatter<'_>, disp: u32, base: Option<Reg>) -> fmt::Result {
    match base {
        Some(b) => write!(f, "{}({})", disp as i32, b),
        None => write!(f, "{disp:#x}"),
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Instr::Halt => f.write_str("halt"),
            Instr::Nop => f.write_str("nop"),
            Instr::Move { cond: Cond::Always, src, dst } => write!(f, "rrmovl {src}, {dst}"),
            Instr::Move { cond, src, dst } => write!(f, "cmov{} {src}, {dst}", cond.suffix()),
            Instr::Irmovl { imm, dst } => write!(f, "irmovl ${}, {dst}", imm as i32),
            Instr::Rmmovl { src, base, disp } => {
                write!(f, "rmmovl {src}, ")?;
                fmt_mem(f, disp, base)
            }
            Instr::Mrmovl { dst, base, disp } => {
                f.write_str("mrmovl ")?;
                fmt_mem(f, disp, base)?;
                write!(f, ", {dst}")
            }
            Instr::Op { op, src, dst } => write!(f, "{} {src}, {dst}", op.mnemonic()),
            Instr::Iaddl { imm, dst } => write!(f, "iaddl ${}, {dst}", imm as i32),
            Instr::Jump { cond: Cond::Always, target } => write!(f, "jmp {target:#x}"),
            Instr::Jump { cond, target } => write!(f, "j{} {target:#x}", cond.suffix()),
            Instr::Call { target } => write!(f, "call {target:#x}"),
            Instr::Ret => f.write_str("ret"),
            Instr::Pushl { src } => write!(f, "pushl {src}"),
            Instr::Popl { dst } => write!(f, "popl {dst}"),
        }
    }
}

impl fmt::Display for Meta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Meta::Create { target } => write!(f, "QCreate {target:#x}"),
            Meta::Prealloc { count } => write!(f, "QPrealloc {count}"),
            Meta::Mass(s) => write!(
                f,
                "QMass {}, {}, {}, {}, {:#x}",
                s.mode, s.count_reg, s.addr_reg, s.stride, s.body
            ),
            other => f.write_str(other.mnemonic()),
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Exec(i) => i.fmt(f),
            Item::Meta(m) => m.fmt(f),
        }
    }
}

pub(crate) fn jump_mnemonic(name: &str) -> Option<Cond> {
    match name {
        "jmp" => Some(Cond::Always),
        _ => name.strip_prefix('j').and_then(Cond::from_suffix).filter(|c| *c != Cond::Always),
    }
}

pub(crate) fn cmov_mnemonic(name: &str) -> Option<Cond> {
    match name {
        "rrmovl" => Some(Cond::Always),
        _ => name
            .strip_prefix("cmov")
            .and_then(Cond::from_suffix)
            .filter(|c| *c != Cond::Always),
    }
}
