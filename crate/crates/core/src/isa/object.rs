//! Assembled program image and its textual object format.
//!
//! One record per emitted item, `ADDRESS: HEXBYTES | source-line`, followed
//! by a `symbols:` footer (one `ADDRESS NAME` line per label) and an
//! `entry: ADDRESS` line. Output is a pure function of the image.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListingLine {
    /// Number of bytes emitted at this address.
    pub len: u32,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObjectImage {
    pub bytes: BTreeMap<u32, u8>,
    pub entry: u32,
    pub symbols: BTreeMap<String, u32>,
    pub listing: BTreeMap<u32, ListingLine>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("object line {line}: {msg}")]
pub struct ObjectParseError {
    pub line: usize,
    pub msg: String,
}

impl ObjectImage {
    /// Highest address written, plus one.
    pub fn end(&self) -> u32 {
        self.bytes.keys().next_back().map_or(0, |a| a + 1)
    }

    /// The image as a contiguous buffer starting at address 0, gaps zeroed.
    pub fn flat_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.end() as usize];
        for (a, b) in &self.bytes {
            out[*a as usize] = *b;
        }
        out
    }

    pub fn read_word(&self, addr: u32) -> Option<u32> {
        let mut w = [0u8; 4];
        for (i, b) in w.iter_mut().enumerate() {
            *b = *self.bytes.get(&(addr + i as u32))?;
        }
        Some(u32::from_le_bytes(w))
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<ObjectImage, ObjectParseError> {
        let mut img = ObjectImage::default();
        let mut in_symbols = false;
        let mut saw_entry = false;
        for (i, raw) in text.lines().enumerate() {
            let err = |msg: &str| ObjectParseError { line: i + 1, msg: msg.to_string() };
            let line = raw.trim_end();
            if line.trim().is_empty() {
                continue;
            }
            if line == "symbols:" {
                in_symbols = true;
                continue;
            }
            if let Some(e) = line.strip_prefix("entry: ") {
                img.entry = parse_addr(e).ok_or_else(|| err("bad entry address"))?;
                saw_entry = true;
                continue;
            }
            if in_symbols {
                let (a, name) = line
                    .trim()
                    .split_once(' ')
                    .ok_or_else(|| err("expected `ADDRESS NAME`"))?;
                let a = parse_addr(a).ok_or_else(|| err("bad symbol address"))?;
                img.symbols.insert(name.to_string(), a);
                continue;
            }
            let (addr, rest) = line.split_once(": ").ok_or_else(|| err("expected `ADDRESS: ...`"))?;
            let addr = parse_addr(addr).ok_or_else(|| err("bad record address"))?;
            let (hex, source) = rest.split_once(" |").ok_or_else(|| err("missing `|` separator"))?;
            let hex = hex.trim();
            if hex.len() % 2 != 0 {
                return Err(err("odd number of hex digits"));
            }
            let mut len = 0;
            for (k, pair) in hex.as_bytes().chunks(2).enumerate() {
                let s = std::str::from_utf8(pair).map_err(|_| err("bad hex"))?;
                let b = u8::from_str_radix(s, 16).map_err(|_| err("bad hex"))?;
                if img.bytes.insert(addr + k as u32, b).is_some() {
                    return Err(err("overlapping records"));
                }
                len += 1;
            }
            let source = source.strip_prefix(' ').unwrap_or(source).to_string();
            img.listing.insert(addr, ListingLine { len, source });
        }
        if !saw_entry {
            return Err(ObjectParseError { line: 0, msg: "missing `entry:` line".into() });
        }
        Ok(img)
    }
}

fn parse_addr(s: &str) -> Option<u32> {
    u32::from_str_radix(s.trim().strip_prefix("0x")?, 16).ok()
}

impl fmt::Display for ObjectImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (addr, l) in &self.listing {
            let mut hex = String::with_capacity(l.len as usize * 2);
            for a in *addr..addr + l.len {
                write!(hex, "{:02x}", self.bytes.get(&a).copied().unwrap_or(0))?;
            }
            writeln!(f, "{addr:#06x}: {hex} | {}", l.source)?;
        }
        writeln!(f, "symbols:")?;
        let mut by_addr: Vec<_> = self.symbols.iter().collect();
        by_addr.sort_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)));
        for (name, addr) in by_addr {
            writeln!(f, "  {addr:#06x} {name}")?;
        }
        writeln!(f, "entry: {:#06x}", self.entry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::assemble;

    #[test]
    fn text_format_round_trips() {
        let src = "main: irmovl $3, %eax   # three\n  jmp main\n.align 4\nd: .long 0xdeadbeef\n";
        let img = assemble(src).unwrap();
        let text = img.to_text();
        assert!(text.starts_with("0x0000: 30f003000000 | main: irmovl $3, %eax   # three\n"));
        assert!(text.contains("0x000c: efbeadde | d: .long 0xdeadbeef\n"));
        assert!(text.ends_with("symbols:\n  0x0000 main\n  0x000c d\nentry: 0x0000\n"));
        assert_eq!(ObjectImage::parse(&text).unwrap(), img);
    }

    #[test]
    fn malformed_object_is_rejected() {
        assert!(ObjectImage::parse("0x0000: 0 | halt\nentry: 0x0000\n").is_err());
        assert!(ObjectImage::parse("0x0000: 00 | halt\n").is_err());
        assert!(ObjectImage::parse("zz: 00 | halt\nentry: 0x0000\n").is_err());
    }
}
