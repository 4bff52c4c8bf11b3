//! A deliberately separate sequential Y86 interpreter working on raw bytes.
//! It shares no code with the simulator and knows nothing about
//! metainstructions or the pseudo-register.

#![allow(dead_code)]

pub const MEM_SIZE: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefState {
    pub regs: [u32; 8],
    pub zf: bool,
    pub sf: bool,
    pub of: bool,
    pub pc: u32,
    pub mem: Vec<u8>,
    pub clocks: u64,
}

/// Clock cost per opcode nibble (0x0..=0xC).
pub type Costs = [u64; 13];

fn rd(mem: &[u8], a: u32) -> Result<u32, String> {
    let a = a as usize;
    let b = mem.get(a..a + 4).ok_or(format!("read {a:#x} out of range"))?;
    Ok(u32::from_le_bytes(b.try_into().unwrap()))
}

fn wr(mem: &mut [u8], a: u32, v: u32) -> Result<(), String> {
    let a = a as usize;
    let b = mem.get_mut(a..a + 4).ok_or(format!("write {a:#x} out of range"))?;
    b.copy_from_slice(&v.to_le_bytes());
    Ok(())
}

fn reg(n: u8) -> Result<usize, String> {
    if n < 8 {
        Ok(n as usize)
    } else {
        Err(format!("register nibble {n:#x}"))
    }
}

impl RefState {
    fn cond(&self, f: u8) -> Result<bool, String> {
        let lt = self.sf ^ self.of;
        Ok(match f {
            0 => true,
            1 => lt || self.zf,
            2 => lt,
            3 => self.zf,
            4 => !self.zf,
            5 => !lt,
            6 => !lt && !self.zf,
            _ => return Err(format!("condition {f}")),
        })
    }
}

/// Runs from `entry` until `halt`, charging `costs` per executed item.
pub fn run(image: &[u8], entry: u32, costs: &Costs, max_steps: u64) -> Result<RefState, String> {
    let mut mem = vec![0u8; MEM_SIZE];
    mem[..image.len()].copy_from_slice(image);
    let mut s = RefState { regs: [0; 8], zf: true, sf: false, of: false, pc: entry, mem, clocks: 0 };
    for _ in 0..max_steps {
        let pc = s.pc as usize;
        let op = *s.mem.get(pc).ok_or("pc out of range")?;
        let (icode, ifun) = (op >> 4, op & 0xF);
        if icode > 0xC {
            return Err(format!("opcode {op:#04x} at {pc:#x}"));
        }
        s.clocks += costs[icode as usize];
        let byte = |i: usize| s.mem.get(pc + i).copied().ok_or("truncated".to_string());
        let regs_byte = if matches!(icode, 2..=6 | 0xA..=0xC) { byte(1)? } else { 0 };
        let (ra, rb) = (regs_byte >> 4, regs_byte & 0xF);
        match icode {
            0 => return Ok(s),
            1 => s.pc += 1,
            2 => {
                if s.cond(ifun)? {
                    s.regs[reg(rb)?] = s.regs[reg(ra)?];
                }
                s.pc += 2;
            }
            3 => {
                s.regs[reg(rb)?] = rd(&s.mem, s.pc + 2)?;
                s.pc += 6;
            }
            4 | 5 => {
                let d = rd(&s.mem, s.pc + 2)?;
                let base = if rb == 0xF { 0 } else { s.regs[reg(rb)?] };
                let a = base.wrapping_add(d);
                if icode == 4 {
                    let v = s.regs[reg(ra)?];
                    wr(&mut s.mem, a, v)?;
                } else {
                    s.regs[reg(ra)?] = rd(&s.mem, a)?;
                }
                s.pc += 6;
            }
            6 | 0xC => {
                let (a, dst) = if icode == 6 {
                    (s.regs[reg(ra)?], reg(rb)?)
                } else {
                    (rd(&s.mem, s.pc + 2)?, reg(rb)?)
                };
                let b = s.regs[dst];
                let f = if icode == 0xC { 0 } else { ifun };
                let (t, of) = match f {
                    0 => {
                        let t = b.wrapping_add(a);
                        (t, (a as i32).checked_add(b as i32).is_none())
                    }
                    1 => {
                        let t = b.wrapping_sub(a);
                        (t, (b as i32).checked_sub(a as i32).is_none())
                    }
                    2 => (b & a, false),
                    3 => (b ^ a, false),
                    _ => return Err(format!("alu function {f}")),
                };
                s.regs[dst] = t;
                s.zf = t == 0;
                s.sf = (t as i32) < 0;
                s.of = of;
                s.pc += if icode == 6 { 2 } else { 6 };
            }
            7 => {
                let t = rd(&s.mem, s.pc + 1)?;
                s.pc = if s.cond(ifun)? { t } else { s.pc + 5 };
            }
            8 => {
                let t = rd(&s.mem, s.pc + 1)?;
                let sp = s.regs[4].wrapping_sub(4);
                wr(&mut s.mem, sp, s.pc + 5)?;
                s.regs[4] = sp;
                s.pc = t;
            }
            9 => {
                let sp = s.regs[4];
                s.pc = rd(&s.mem, sp)?;
                s.regs[4] = sp.wrapping_add(4);
            }
            0xA => {
                let v = s.regs[reg(ra)?];
                let sp = s.regs[4].wrapping_sub(4);
                wr(&mut s.mem, sp, v)?;
                s.regs[4] = sp;
                s.pc += 2;
            }
            0xB => {
                let sp = s.regs[4];
                let v = rd(&s.mem, sp)?;
                s.regs[4] = sp.wrapping_add(4);
                s.regs[reg(ra)?] = v;
                s.pc += 2;
            }
            _ => unreachable!(),
        }
    }
    Err("step budget exhausted".into())
}

/// Cost table from the shipped timing file, keyed by opcode nibble.
pub fn default_costs() -> Costs {
    let t = empa::TimingConfig::default();
    let c = u64::from;
    [
        c(t.halt),
        c(t.nop),
        c(t.rrmovl),
        c(t.irmovl),
        c(t.rmmovl),
        c(t.mrmovl),
        c(t.opl),
        c(t.jxx),
        c(t.call),
        c(t.ret),
        c(t.pushl),
        c(t.popl),
        c(t.iaddl),
    ]
}
