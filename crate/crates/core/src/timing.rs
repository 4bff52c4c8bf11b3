//! Clock costs, loaded from a line-oriented `key = integer` file.

use std::fmt;

use thiserror::Error;

use crate::isa::InstrClass;

/// The calibrated configuration shipped with the crate.
pub const DEFAULT_TIMING: &str = include_str!("../data/default.timing");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("timing line {line}: {msg}")]
pub struct TimingError {
    pub line: usize,
    pub msg: String,
}

/// Clock cost of every instruction class and supervisor operation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimingConfig {
    pub halt: u32,
    pub nop: u32,
    pub rrmovl: u32,
    pub irmovl: u32,
    pub rmmovl: u32,
    pub mrmovl: u32,
    pub opl: u32,
    pub iaddl: u32,
    pub jxx: u32,
    pub call: u32,
    pub ret: u32,
    pub pushl: u32,
    pub popl: u32,
    pub qcreate: u32,
    pub qterm: u32,
    pub qwait: u32,
    pub qprealloc: u32,
    pub qmass: u32,
    pub qfwd: u32,
    /// Clocks between a child being rented by `QCreate` and its first fetch.
    pub clone: u32,
    /// Clocks a mass controller needs per launch (clone and enable included).
    pub mass_launch: u32,
    /// Clocks the SUMUP adder needs per summand; also the delay of handing
    /// the final sum to the parent.
    pub mass_accumulate: u32,
    /// Maximum number of SUMUP children a controller keeps reserved.
    pub sumup_window: u32,
}

macro_rules! timing_keys {
    ($($key:ident),* $(,)?) => {
        impl TimingConfig {
            /// Every recognised key, in file order.
            pub const KEYS: &'static [&'static str] = &[$(stringify!($key)),*];

            fn slot(&mut self, key: &str) -> Option<&mut u32> {
                match key {
                    $(stringify!($key) => Some(&mut self.$key),)*
                    _ => None,
                }
            }

            fn entries(&self) -> Vec<(&'static str, u32)> {
                vec![$((stringify!($key), self.$key)),*]
            }
        }
    };
}

timing_keys!(
    halt, nop, rrmovl, irmovl, rmmovl, mrmovl, opl, iaddl, jxx, call, ret, pushl, popl, qcreate, qterm,
    qwait, qprealloc, qmass, qfwd, clone, mass_launch, mass_accumulate, sumup_window,
);

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig::parse(DEFAULT_TIMING).expect("shipped timing file is valid")
    }
}

impl TimingConfig {
    /// Parses a timing file. Keys not mentioned keep the shipped default, so
    /// a file may override a subset.
    pub fn parse(text: &str) -> Result<TimingConfig, TimingError> {
        let mut cfg = TimingConfig::zeroed();
        let mut seen = vec![false; Self::KEYS.len()];
        for (i, raw) in text.lines().enumerate() {
            let err = |msg: String| TimingError { line: i + 1, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = integer`, got `{line}`")))?;
            let key = key.trim();
            let value: u32 = value
                .trim()
                .parse()
                .map_err(|_| err(format!("`{}` is not a non-negative integer", value.trim())))?;
            if value == 0 {
                return Err(err(format!("`{key}` must be at least 1")));
            }
            let idx = Self::KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| err(format!("unknown key `{key}`")))?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            *cfg.slot(key).expect("key listed") = value;
        }
        if seen.iter().all(|s| *s) {
            return Ok(cfg);
        }
        // Fill the gaps from the shipped file.
        let base = TimingConfig::parse(DEFAULT_TIMING).expect("shipped timing file is complete");
        for ((key, v), s) in base.entries().into_iter().zip(seen) {
            if !s {
                *cfg.slot(key).expect("key listed") = v;
            }
        }
        Ok(cfg)
    }

    fn zeroed() -> TimingConfig {
        TimingConfig {
            halt: 0,
            nop: 0,
            rrmovl: 0,
            irmovl: 0,
            rmmovl: 0,
            mrmovl: 0,
            opl: 0,
            iaddl: 0,
            jxx: 0,
            call: 0,
            ret: 0,
            pushl: 0,
            popl: 0,
            qcreate: 0,
            qterm: 0,
            qwait: 0,
            qprealloc: 0,
            qmass: 0,
            qfwd: 0,
            clone: 0,
            mass_launch: 0,
            mass_accumulate: 0,
            sumup_window: 0,
        }
    }

    pub fn instr_cost(&self, class: InstrClass) -> u32 {
        match class {
            InstrClass::Halt => self.halt,
            InstrClass::Nop => self.nop,
            InstrClass::Rrmovl => self.rrmovl,
            InstrClass::Irmovl => self.irmovl,
            InstrClass::Rmmovl => self.rmmovl,
            InstrClass::Mrmovl => self.mrmovl,
            InstrClass::Opl => self.opl,
            InstrClass::Iaddl => self.iaddl,
            InstrClass::Jxx => self.jxx,
            InstrClass::Call => self.call,
            InstrClass::Ret => self.ret,
            InstrClass::Pushl => self.pushl,
            InstrClass::Popl => self.popl,
        }
    }
}

impl fmt::Display for TimingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_file_defines_every_key() {
        let cfg = TimingConfig::default();
        assert_eq!(cfg.entries().len(), TimingConfig::KEYS.len());
        assert!(cfg.entries().iter().all(|(_, v)| *v >= 1));
        assert_eq!(TimingConfig::parse(&cfg.to_string()).unwrap(), cfg);
    }

    #[test]
    fn loop_kernel_costs_thirty_clocks() {
        let t = TimingConfig::default();
        // mrmovl, addl, irmovl, addl, irmovl, addl, jne
        assert_eq!(t.mrmovl + 3 * t.opl + 2 * t.irmovl + t.jxx, 30);
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let cfg = TimingConfig::parse("# faster loads\nmrmovl = 3\n").unwrap();
        assert_eq!(cfg.mrmovl, 3);
        assert_eq!(cfg.opl, TimingConfig::default().opl);
    }

    #[test]
    fn bad_lines_are_rejected() {
        assert_eq!(TimingConfig::parse("opl = 4\nfoo = 1").unwrap_err().line, 2);
        assert!(TimingConfig::parse("opl 4").is_err());
        assert!(TimingConfig::parse("opl = -1").is_err());
        assert!(TimingConfig::parse("opl = 0").is_err());
        assert!(TimingConfig::parse("opl = 1\nopl = 2").is_err());
    }
}
