use thiserror::Error;

use crate::isa::ObjectImage;

pub const DEFAULT_MEMORY_SIZE: usize = 64 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MemoryError {
    #[error("access of {len} byte(s) at {addr:#x} is outside memory of {size} bytes")]
    OutOfBounds { addr: u32, len: u32, size: usize },
}

/// Flat byte-addressed memory with little-endian word access. Unaligned
/// word access is allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Memory {
    bytes: Vec<u8>,
}

impl Default for Memory {
    fn default() -> Self {
        Memory::new(DEFAULT_MEMORY_SIZE)
    }
}

impl Memory {
    pub fn new(size: usize) -> Memory {
        Memory { bytes: vec![0; size] }
    }

    pub fn size(&self) -> usize {
        self.bytes.len()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    fn range(&self, addr: u32, len: u32) -> Result<std::ops::Range<usize>, MemoryError> {
        let start = addr as usize;
        match start.checked_add(len as usize) {
            Some(end) if end <= self.bytes.len() => Ok(start..end),
            _ => Err(MemoryError::OutOfBounds { addr, len, size: self.bytes.len() }),
        }
    }

    pub fn read_byte(&self, addr: u32) -> Result<u8, MemoryError> {
        Ok(self.bytes[self.range(addr, 1)?][0])
    }

    pub fn read_word(&self, addr: u32) -> Result<u32, MemoryError> {
        let r = self.range(addr, 4)?;
        let b = &self.bytes[r];
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn write_word(&mut self, addr: u32, value: u32) -> Result<(), MemoryError> {
        let r = self.range(addr, 4)?;
        self.bytes[r].copy_from_slice(&value.to_le_bytes());
        Ok(())
    }

    /// Copies an object image into memory. Fails without modifying memory if
    /// any byte falls outside.
    pub fn load(&mut self, image: &ObjectImage) -> Result<(), MemoryError> {
        if let Some(last) = image.bytes.keys().next_back() {
            self.range(*last, 1)?;
        }
        for (a, b) in &image.bytes {
            self.bytes[*a as usize] = *b;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::assemble;

    #[test]
    fn words_are_little_endian_and_may_be_unaligned() {
        let mut m = Memory::new(16);
        m.write_word(1, 0x1122_3344).unwrap();
        assert_eq!(m.read_byte(1).unwrap(), 0x44);
        assert_eq!(m.read_word(1).unwrap(), 0x1122_3344);
        assert!(m.read_word(13).is_err());
        assert!(m.write_word(u32::MAX, 0).is_err());
    }

    #[test]
    fn loading_halt_image() {
        let mut m = Memory::new(16);
        m.load(&assemble("halt").unwrap()).unwrap();
        assert_eq!(m.read_byte(0).unwrap(), 0x00);
    }

    #[test]
    fn image_past_the_end_is_rejected() {
        let img = assemble(".pos 14\n.long 5\n").unwrap();
        let mut m = Memory::new(16);
        assert_eq!(m.load(&img), Err(MemoryError::OutOfBounds { addr: 17, len: 1, size: 16 }));
        assert!(m.as_bytes().iter().all(|b| *b == 0));
    }
}
