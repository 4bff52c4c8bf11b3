//! Browser bindings. The plain functions return `String` errors so they can be
//! tested natively; the `#[wasm_bindgen]` wrappers turn those into `JsError`.

use wasm_bindgen::prelude::*;

use empa::cpu::CoreState;
use empa::isa::assemble;
use empa::machine::{run_image, RunOptions};
use empa::metrics::{self, Format};
use empa::programs::{program, SumupVariant};
use empa::trace::{EventKind, TraceEvent};
use empa::TimingConfig;

/// Bar kinds in a [`Timeline`].
pub const EXEC: u32 = 0;
pub const SV_OP: u32 = 1;
pub const BLOCKED: u32 = 2;

#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeline {
    clocks: u64,
    peak: usize,
    pool: usize,
    eax: u32,
    segments: Vec<u32>,
    trace: String,
}

#[wasm_bindgen]
impl Timeline {
    pub fn clocks(&self) -> u32 {
        self.clocks as u32
    }

    pub fn peak(&self) -> u32 {
        self.peak as u32
    }

    pub fn pool(&self) -> u32 {
        self.pool as u32
    }

    pub fn eax(&self) -> u32 {
        self.eax
    }

    /// Flat `(core, start, length, kind)` quadruples.
    pub fn segments(&self) -> Vec<u32> {
        self.segments.clone()
    }

    pub fn trace(&self) -> String {
        self.trace.clone()
    }
}

/// Turns an event trace into per-core bars.
pub fn segments(events: &[TraceEvent], end: u64) -> Vec<u32> {
    let mut out = Vec::new();
    let mut push = |core: usize, start: u64, len: u64, kind: u32| {
        out.extend([core as u32, start as u32, len.max(1) as u32, kind]);
    };
    let mut blocked_since: Vec<Option<u64>> = Vec::new();
    for e in events {
        let Some(c) = e.core else { continue };
        let i = c.index();
        if blocked_since.len() <= i {
            blocked_since.resize(i + 1, None);
        }
        match e.kind {
            EventKind::Exec { clocks, .. } => push(i, e.clock, u64::from(clocks), EXEC),
            EventKind::SvOp { .. } => push(i, e.clock, 1, SV_OP),
            EventKind::Block { .. } => blocked_since[i] = Some(e.clock),
            EventKind::State { from: CoreState::Blocked, .. } => {
                if let Some(s) = blocked_since[i].take() {
                    push(i, s, e.clock - s, BLOCKED);
                }
            }
            _ => {}
        }
    }
    for (i, s) in blocked_since.iter().enumerate() {
        if let Some(s) = s {
            push(i, *s, end - s, BLOCKED);
        }
    }
    out
}

fn run(src: &str, pool: usize) -> Result<Timeline, String> {
    let image = assemble(src).map_err(|e| e.to_string())?;
    let options = RunOptions { pool, trace: true, check_invariants: true, ..RunOptions::default() };
    let r = run_image(&image, &TimingConfig::default(), &options).map_err(|e| e.to_string())?;
    Ok(Timeline {
        clocks: r.clocks,
        peak: r.peak_cores,
        pool,
        eax: r.regs.get(empa::isa::Reg::Eax),
        segments: segments(&r.trace, r.clocks),
        trace: empa::trace::render(&r.trace),
    })
}

pub fn timeline_of(mode: &str, veclen: u32, pool: usize) -> Result<Timeline, String> {
    let mode: SumupVariant = mode.parse().map_err(|e: <SumupVariant as std::str::FromStr>::Err| e.to_string())?;
    if veclen > 2000 {
        return Err("vector length is limited to 2000 here".into());
    }
    run(&program(mode, veclen), pool)
}

pub fn sweep_of(lengths: &str, pool: usize) -> Result<String, String> {
    let lengths = metrics::parse_lengths(lengths).map_err(|e| e.to_string())?;
    let options = RunOptions { pool, ..RunOptions::default() };
    let rows = metrics::sweep_with(&lengths, &SumupVariant::ALL, &TimingConfig::default(), &options)
        .map_err(|e| e.to_string())?;
    Ok(metrics::render(&rows, Format::Csv))
}

#[wasm_bindgen]
pub fn timeline(mode: &str, veclen: u32, pool: u32) -> Result<Timeline, JsError> {
    timeline_of(mode, veclen, pool as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sweep(lengths: &str, pool: u32) -> Result<String, JsError> {
    sweep_of(lengths, pool as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn run_source(src: &str, pool: u32) -> Result<Timeline, JsError> {
    run(src, pool as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn example_source(mode: &str) -> Result<String, JsError> {
    let mode: SumupVariant = mode.parse().map_err(|_| JsError::new("unknown mode"))?;
    Ok(empa::programs::source(mode).to_string())
}
