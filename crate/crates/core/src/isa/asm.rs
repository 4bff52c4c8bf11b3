//! Two-pass assembler for `.eys` sources.
//!
//! Syntax follows the Y86 `yas` conventions: `#` starts a comment, labels end
//! with `:`, immediates may carry a `$` prefix, memory operands are written
//! `D(%reg)`, `(%reg)` or a bare absolute `D`. Supported directives are
//! `.pos`, `.align` and `.long`. Metainstruction mnemonics are matched
//! case-insensitively:
//!
//! ```text
//! QCreate label      QTerm      QWait      QFwd
//! QPrealloc count    QMass FOR|SUMUP, %count, %addr, stride, body
//! ```

use std::collections::BTreeMap;

use thiserror::Error;

use super::object::{ListingLine, ObjectImage};
use super::{cmov_mnemonic, encode, jump_mnemonic, AluOp, Instr, Item, MassMode, MassSpec, Meta, Reg};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct AsmError {
    pub line: usize,
    pub kind: AsmErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmErrorKind {
    #[error("undefined label `{0}`")]
    UndefinedLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("malformed operand: {0}")]
    MalformedOperand(String),
    #[error("immediate out of range: {0}")]
    ImmediateOverflow(String),
    #[error("unknown mnemonic or directive `{0}`")]
    UnknownMnemonic(String),
    #[error("byte at {0:#06x} emitted twice")]
    Overlap(u32),
}

/// A constant that may still refer to a label.
#[derive(Debug, Clone)]
enum Value {
    Num(u32),
    Label(String),
}

#[derive(Debug, Clone)]
enum Stmt {
    Pos(u32),
    Align(u32),
    Long(Value),
    Item(Template),
}

/// An item whose address operands may be unresolved.
#[derive(Debug, Clone)]
enum Template {
    Fixed(Item),
    Irmovl(Value, Reg),
    Rmmovl(Reg, Option<Reg>, Value),
    Mrmovl(Option<Reg>, Value, Reg),
    Iaddl(Value, Reg),
    Jump(super::Cond, Value),
    Call(Value),
    Create(Value),
    Mass { mode: MassMode, count: Reg, addr: Reg, stride: i32, body: Value },
}

impl Template {
    fn len(&self) -> u32 {
        // Resolve with dummy values: the encoded length is fixed per class.
        encode(&self.resolve(&|_| Some(0)).expect("dummy resolution")).len() as u32
    }

    fn resolve(&self, lookup: &dyn Fn(&str) -> Option<u32>) -> Result<Item, String> {
        let v = |val: &Value| match val {
            Value::Num(n) => Ok(*n),
            Value::Label(l) => lookup(l).ok_or_else(|| l.clone()),
        };
        Ok(match self {
            Template::Fixed(item) => *item,
            Template::Irmovl(imm, dst) => Instr::Irmovl { imm: v(imm)?, dst: *dst }.into(),
            Template::Rmmovl(src, base, d) => Instr::Rmmovl { src: *src, base: *base, disp: v(d)? }.into(),
            Template::Mrmovl(base, d, dst) => Instr::Mrmovl { dst: *dst, base: *base, disp: v(d)? }.into(),
            Template::Iaddl(imm, dst) => Instr::Iaddl { imm: v(imm)?, dst: *dst }.into(),
            Template::Jump(cond, t) => Instr::Jump { cond: *cond, target: v(t)? }.into(),
            Template::Call(t) => Instr::Call { target: v(t)? }.into(),
            Template::Create(t) => Meta::Create { target: v(t)? }.into(),
            Template::Mass { mode, count, addr, stride, body } => Meta::Mass(MassSpec {
                mode: *mode,
                count_reg: *count,
                addr_reg: *addr,
                stride: *stride,
                body: v(body)?,
            })
            .into(),
        })
    }
}

struct Line<'a> {
    number: usize,
    source: &'a str,
    labels: Vec<&'a str>,
    stmt: Option<Stmt>,
}

/// Assembles a source text into an object image.
pub fn assemble(source: &str) -> Result<ObjectImage, AsmError> {
    let lines = source
        .lines()
        .enumerate()
        .map(|(i, text)| parse_line(i + 1, text))
        .collect::<Result<Vec<_>, _>>()?;

    // Pass 1: addresses and symbols.
    let mut symbols = BTreeMap::new();
    let mut addr: u32 = 0;
    let mut placed = Vec::with_capacity(lines.len());
    for line in &lines {
        let err = |kind| AsmError { line: line.number, kind };
        // `.pos` and `.align` move the location counter before labels on
        // the same line bind.
        match &line.stmt {
            Some(Stmt::Pos(p)) => addr = *p,
            Some(Stmt::Align(a)) => addr = align_up(addr, *a).ok_or_else(|| err(overflow("alignment")))?,
            _ => {}
        }
        for label in &line.labels {
            if symbols.insert((*label).to_string(), addr).is_some() {
                return Err(err(AsmErrorKind::DuplicateLabel((*label).to_string())));
            }
        }
        placed.push(addr);
        let size = match &line.stmt {
            Some(Stmt::Long(_)) => 4,
            Some(Stmt::Item(t)) => t.len(),
            _ => 0,
        };
        addr = addr.checked_add(size).ok_or_else(|| err(overflow("location counter")))?;
    }

    // Pass 2: encode.
    let mut bytes = BTreeMap::new();
    let mut listing = BTreeMap::new();
    let mut entry = None;
    for (line, &at) in lines.iter().zip(&placed) {
        let err = |kind| AsmError { line: line.number, kind };
        let lookup = |name: &str| symbols.get(name).copied();
        let encoded = match &line.stmt {
            Some(Stmt::Long(v)) => match v {
                Value::Num(n) => n.to_le_bytes().to_vec(),
                Value::Label(l) => lookup(l)
                    .ok_or_else(|| err(AsmErrorKind::UndefinedLabel(l.clone())))?
                    .to_le_bytes()
                    .to_vec(),
            },
            Some(Stmt::Item(t)) => {
                entry.get_or_insert(at);
                let item = t
                    .resolve(&lookup)
                    .map_err(|l| err(AsmErrorKind::UndefinedLabel(l)))?;
                encode(&item)
            }
            _ => continue,
        };
        for (i, b) in encoded.iter().enumerate() {
            let a = at + i as u32;
            if bytes.insert(a, *b).is_some() {
                return Err(err(AsmErrorKind::Overlap(a)));
            }
        }
        listing.insert(
            at,
            ListingLine { len: encoded.len() as u32, source: line.source.trim().to_string() },
        );
    }

    Ok(ObjectImage { bytes, entry: entry.unwrap_or(0), symbols, listing })
}

fn overflow(what: &str) -> AsmErrorKind {
    AsmErrorKind::ImmediateOverflow(what.to_string())
}

fn align_up(addr: u32, align: u32) -> Option<u32> {
    let rem = addr % align;
    if rem == 0 {
        Some(addr)
    } else {
        addr.checked_add(align - rem)
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '.')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn parse_line(number: usize, source: &str) -> Result<Line<'_>, AsmError> {
    let err = |kind| AsmError { line: number, kind };
    let mut rest = source.split('#').next().unwrap_or("").trim();
    let mut labels = Vec::new();
    while let Some(colon) = rest.find(':') {
        let candidate = rest[..colon].trim();
        if !is_ident(candidate) {
            break;
        }
        labels.push(candidate);
        rest = rest[colon + 1..].trim();
    }
    let stmt = if rest.is_empty() {
        None
    } else {
        let (mnemonic, args) = match rest.find(char::is_whitespace) {
            Some(i) => (&rest[..i], rest[i..].trim()),
            None => (rest, ""),
        };
        let ops: Vec<&str> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(str::trim).collect()
        };
        Some(parse_stmt(mnemonic, &ops).map_err(err)?)
    };
    Ok(Line { number, source, labels, stmt })
}

fn malformed(msg: impl Into<String>) -> AsmErrorKind {
    AsmErrorKind::MalformedOperand(msg.into())
}

fn expect_ops<'a, const N: usize>(mnemonic: &str, ops: &[&'a str]) -> Result<[&'a str; N], AsmErrorKind> {
    ops.try_into()
        .map_err(|_| malformed(format!("`{mnemonic}` takes {N} operand(s), got {}", ops.len())))
}

fn parse_reg(s: &str) -> Result<Reg, AsmErrorKind> {
    Reg::from_name(s).ok_or_else(|| malformed(format!("expected register, got `{s}`")))
}

fn parse_number(s: &str) -> Result<Option<i64>, AsmErrorKind> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let parsed = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16)
    } else if body.starts_with(|c: char| c.is_ascii_digit()) {
        body.parse::<i64>()
    } else {
        return Ok(None);
    };
    match parsed {
        Ok(v) => Ok(Some(if neg { -v } else { v })),
        Err(e) if matches!(e.kind(), std::num::IntErrorKind::PosOverflow) => Err(overflow(s)),
        Err(_) => Err(malformed(format!("bad number `{s}`"))),
    }
}

/// A 32-bit constant: accepts the signed and unsigned ranges.
fn parse_value(s: &str) -> Result<Value, AsmErrorKind> {
    let s = s.strip_prefix('$').unwrap_or(s).trim();
    match parse_number(s)? {
        Some(v) if (-(1i64 << 31)..(1i64 << 32)).contains(&v) => Ok(Value::Num(v as u32)),
        Some(_) => Err(overflow(s)),
        None if is_ident(s) => Ok(Value::Label(s.to_string())),
        None => Err(malformed(format!("expected constant or label, got `{s}`"))),
    }
}

fn parse_plain_number(s: &str) -> Result<i64, AsmErrorKind> {
    let s = s.strip_prefix('$').unwrap_or(s);
    parse_number(s)?.ok_or_else(|| malformed(format!("expected number, got `{s}`")))
}

fn parse_mem(s: &str) -> Result<(Option<Reg>, Value), AsmErrorKind> {
    match s.find('(') {
        Some(open) => {
            let inner = s[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| malformed(format!("unbalanced memory operand `{s}`")))?;
            let base = parse_reg(inner.trim())?;
            let disp = s[..open].trim();
            let disp = if disp.is_empty() { Value::Num(0) } else { parse_value(disp)? };
            Ok((Some(base), disp))
        }
        None => Ok((None, parse_value(s)?)),
    }
}

fn parse_stmt(mnemonic: &str, ops: &[&str]) -> Result<Stmt, AsmErrorKind> {
    use Template as T;
    let fixed = |i: Instr| Ok(Stmt::Item(T::Fixed(i.into())));
    match mnemonic {
        ".pos" => {
            let [v] = expect_ops(mnemonic, ops)?;
            let p = parse_plain_number(v)?;
            u32::try_from(p).map(Stmt::Pos).map_err(|_| overflow(v))
        }
        ".align" => {
            let [v] = expect_ops(mnemonic, ops)?;
            match parse_plain_number(v)? {
                a @ 1..=0x10000 => Ok(Stmt::Align(a as u32)),
                _ => Err(malformed(format!("bad alignment `{v}`"))),
            }
        }
        ".long" => {
            let [v] = expect_ops(mnemonic, ops)?;
            Ok(Stmt::Long(parse_value(v)?))
        }
        "halt" | "nop" | "ret" => {
            expect_ops::<0>(mnemonic, ops)?;
            fixed(match mnemonic {
                "halt" => Instr::Halt,
                "nop" => Instr::Nop,
                _ => Instr::Ret,
            })
        }
        "irmovl" | "iaddl" => {
            let [imm, dst] = expect_ops(mnemonic, ops)?;
            let (imm, dst) = (parse_value(imm)?, parse_reg(dst)?);
            Ok(Stmt::Item(if mnemonic == "irmovl" { T::Irmovl(imm, dst) } else { T::Iaddl(imm, dst) }))
        }
        "rmmovl" => {
            let [src, mem] = expect_ops(mnemonic, ops)?;
            let (base, disp) = parse_mem(mem)?;
            Ok(Stmt::Item(T::Rmmovl(parse_reg(src)?, base, disp)))
        }
        "mrmovl" => {
            let [mem, dst] = expect_ops(mnemonic, ops)?;
            let (base, disp) = parse_mem(mem)?;
            Ok(Stmt::Item(T::Mrmovl(base, disp, parse_reg(dst)?)))
        }
        "call" => {
            let [t] = expect_ops(mnemonic, ops)?;
            Ok(Stmt::Item(T::Call(parse_value(t)?)))
        }
        "pushl" | "popl" => {
            let [r] = expect_ops(mnemonic, ops)?;
            let r = parse_reg(r)?;
            fixed(if mnemonic == "pushl" { Instr::Pushl { src: r } } else { Instr::Popl { dst: r } })
        }
        _ => {
            if let Some(op) = AluOp::ALL.iter().copied().find(|o| o.mnemonic() == mnemonic) {
                let [src, dst] = expect_ops(mnemonic, ops)?;
                return fixed(Instr::Op { op, src: parse_reg(src)?, dst: parse_reg(dst)? });
            }
            if let Some(cond) = cmov_mnemonic(mnemonic) {
                let [src, dst] = expect_ops(mnemonic, ops)?;
                return fixed(Instr::Move { cond, src: parse_reg(src)?, dst: parse_reg(dst)? });
            }
            if let Some(cond) = jump_mnemonic(mnemonic) {
                let [t] = expect_ops(mnemonic, ops)?;
                return Ok(Stmt::Item(T::Jump(cond, parse_value(t)?)));
            }
            parse_meta(mnemonic, ops)
        }
    }
}

fn parse_meta(mnemonic: &str, ops: &[&str]) -> Result<Stmt, AsmErrorKind> {
    use Template as T;
    let meta = |m: Meta| Ok(Stmt::Item(T::Fixed(m.into())));
    match mnemonic.to_ascii_lowercase().as_str() {
        "qcreate" => {
            let [t] = expect_ops(mnemonic, ops)?;
            Ok(Stmt::Item(T::Create(parse_value(t)?)))
        }
        "qterm" => {
            expect_ops::<0>(mnemonic, ops)?;
            meta(Meta::Term)
        }
        "qwait" => {
            expect_ops::<0>(mnemonic, ops)?;
            meta(Meta::Wait)
        }
        "qfwd" => {
            expect_ops::<0>(mnemonic, ops)?;
            meta(Meta::Fwd)
        }
        "qprealloc" => {
            let [n] = expect_ops(mnemonic, ops)?;
            match parse_plain_number(n)? {
                c @ 1..=255 => meta(Meta::Prealloc { count: c as u8 }),
                c if c > 255 => Err(overflow(n)),
                _ => Err(malformed(format!("preallocation count must be positive, got `{n}`"))),
            }
        }
        "qmass" => {
            let [mode, count, addr, stride, body] = expect_ops(mnemonic, ops)?;
            let mode = match mode.to_ascii_uppercase().as_str() {
                "FOR" => MassMode::For,
                "SUMUP" => MassMode::Sumup,
                _ => return Err(malformed(format!("mass mode must be FOR or SUMUP, got `{mode}`"))),
            };
            let (count, addr) = (parse_reg(count)?, parse_reg(addr)?);
            if count.is_pseudo() || addr.is_pseudo() {
                return Err(malformed("mass count and address sources must be real registers"));
            }
            let stride = i32::try_from(parse_plain_number(stride)?).map_err(|_| overflow(stride))?;
            if stride == 0 {
                return Err(malformed("mass stride must be nonzero"));
            }
            Ok(Stmt::Item(T::Mass { mode, count, addr, stride, body: parse_value(body)? }))
        }
        _ => Err(AsmErrorKind::UnknownMnemonic(mnemonic.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::decode;

    fn kind_of(src: &str) -> AsmErrorKind {
        assemble(src).unwrap_err().kind
    }

    #[test]
    fn single_halt_at_zero() {
        let img = assemble(".pos 0\nhalt\n").unwrap();
        assert_eq!(img.bytes.len(), 1);
        assert_eq!(img.bytes[&0], 0x00);
        assert_eq!(img.entry, 0);
    }

    #[test]
    fn labels_resolve_forward_and_backward() {
        let img = assemble("start: jmp end\nnop\nend: jmp start\n").unwrap();
        assert_eq!(img.symbols["start"], 0);
        assert_eq!(img.symbols["end"], 6);
        let bytes = img.flat_bytes();
        assert_eq!(decode(&bytes, 0).unwrap().0, Instr::Jump { cond: super::super::Cond::Always, target: 6 }.into());
    }

    #[test]
    fn prealloc_and_mass_encode_round_trip() {
        let src = "QPrealloc 1\nQMass FOR, %edx, %ecx, 4, body\nbody: QTerm\n";
        let img = assemble(src).unwrap();
        let bytes = img.flat_bytes();
        let (a, la) = decode(&bytes, 0).unwrap();
        let (b, lb) = decode(&bytes, la as u32).unwrap();
        assert_eq!(a, Meta::Prealloc { count: 1 }.into());
        assert_eq!(
            b,
            Meta::Mass(MassSpec {
                mode: MassMode::For,
                count_reg: Reg::Edx,
                addr_reg: Reg::Ecx,
                stride: 4,
                body: img.symbols["body"],
            })
            .into()
        );
        assert_eq!(crate::isa::encode(&a), bytes[..la].to_vec());
        assert_eq!(crate::isa::encode(&b), bytes[la..la + lb].to_vec());
    }

    #[test]
    fn error_kinds_carry_line_numbers() {
        let e = assemble("nop\njmp nowhere\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(e.kind, AsmErrorKind::UndefinedLabel("nowhere".into()));
        assert_eq!(kind_of("a: nop\na: nop"), AsmErrorKind::DuplicateLabel("a".into()));
        assert!(matches!(kind_of("irmovl $1, %eex"), AsmErrorKind::MalformedOperand(_)));
        assert!(matches!(kind_of("irmovl $0x100000000, %eax"), AsmErrorKind::ImmediateOverflow(_)));
        assert!(matches!(kind_of("irmovl $-2147483649, %eax"), AsmErrorKind::ImmediateOverflow(_)));
        assert!(matches!(kind_of("QPrealloc 300"), AsmErrorKind::ImmediateOverflow(_)));
        assert!(matches!(kind_of("QMass FOR, %pr, %ecx, 4, x\nx: QTerm"), AsmErrorKind::MalformedOperand(_)));
        assert!(matches!(kind_of("QMass FOR, %edx, %ecx, 0, x\nx: QTerm"), AsmErrorKind::MalformedOperand(_)));
        assert!(matches!(kind_of("frob %eax"), AsmErrorKind::UnknownMnemonic(_)));
        assert_eq!(kind_of(".pos 0\n.long 1\n.pos 2\n.long 2"), AsmErrorKind::Overlap(2));
    }

    #[test]
    fn immediates_accept_signed_and_unsigned_forms() {
        let img = assemble("irmovl $-1, %ebx\nirmovl 0xffffffff, %ecx\n").unwrap();
        let bytes = img.flat_bytes();
        assert_eq!(bytes[2..6], bytes[8..12]);
    }

    #[test]
    fn align_and_long_directives() {
        let img = assemble("nop\n.align 4\nv: .long 7\n.long v\n").unwrap();
        assert_eq!(img.symbols["v"], 4);
        assert_eq!(img.read_word(4), Some(7));
        assert_eq!(img.read_word(8), Some(4));
    }

    #[test]
    fn memory_operand_forms() {
        let img = assemble("mrmovl (%ecx), %esi\nmrmovl 8(%ebp), %eax\nrmmovl %eax, 0x100\nmrmovl 0(%pr), %esi\n").unwrap();
        let bytes = img.flat_bytes();
        let items: Vec<Item> = [0u32, 6, 12, 18].iter().map(|a| decode(&bytes, *a).unwrap().0).collect();
        assert_eq!(items[0], Instr::Mrmovl { dst: Reg::Esi, base: Some(Reg::Ecx), disp: 0 }.into());
        assert_eq!(items[1], Instr::Mrmovl { dst: Reg::Eax, base: Some(Reg::Ebp), disp: 8 }.into());
        assert_eq!(items[2], Instr::Rmmovl { src: Reg::Eax, base: None, disp: 0x100 }.into());
        assert_eq!(items[3], Instr::Mrmovl { dst: Reg::Esi, base: Some(Reg::Pseudo), disp: 0 }.into());
    }

    #[test]
    fn assembly_is_deterministic() {
        let src = crate::programs::source(crate::programs::SumupVariant::Sumup);
        assert_eq!(assemble(src).unwrap(), assemble(src).unwrap());
    }
}
