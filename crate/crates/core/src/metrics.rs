//! Speedup, efficiency and effective parallelization, plus the length
//! sweeps behind the result tables.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::error::SimError;
use crate::isa::{assemble, AsmError};
use crate::machine::{run_image, RunOptions};
use crate::programs::{program, SumupVariant};
use crate::timing::TimingConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("execution times must be at least one clock")]
    ZeroTime,
    #[error("effective parallelization needs at least two cores, got {0}")]
    TooFewCores(usize),
    #[error("speedup must be positive")]
    NonPositiveSpeedup,
    #[error("no vector lengths given")]
    EmptyLengths,
    #[error("bad length list `{0}`")]
    BadLengths(String),
    #[error("{mode} program of length {length}: {source}")]
    Assemble { mode: SumupVariant, length: u32, source: AsmError },
    #[error("{mode} run of length {length}: {source}")]
    Run { mode: SumupVariant, length: u32, source: SimError },
}

/// Ratio of execution times.
pub fn speedup(t_base: u64, t: u64) -> Result<f64, MetricsError> {
    if t_base == 0 || t == 0 {
        return Err(MetricsError::ZeroTime);
    }
    Ok(t_base as f64 / t as f64)
}

/// Effective parallelization from `k` cores and measured speedup `s`:
/// `k/(k-1) * (s-1)/s`.
pub fn alpha_eff(k: usize, s: f64) -> Result<f64, MetricsError> {
    if k < 2 {
        return Err(MetricsError::TooFewCores(k));
    }
    if s.is_nan() || s <= 0.0 {
        return Err(MetricsError::NonPositiveSpeedup);
    }
    let k = k as f64;
    Ok(k / (k - 1.0) * (s - 1.0) / s)
}

/// Upper bound on usefully employed cores when a core is recycled after
/// `recycle_latency` clocks.
pub fn effective_cores(requested: usize, recycle_latency: usize) -> usize {
    requested.min(recycle_latency + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult {
    pub length: u32,
    pub mode: SumupVariant,
    pub clocks: u64,
    pub k: usize,
    pub speedup: f64,
    pub s_over_k: f64,
    /// `None` for single-core rows, where the formula is undefined.
    pub alpha_eff: Option<f64>,
}

impl ModeResult {
    /// Builds a row from measured clocks against the same-length baseline.
    pub fn new(length: u32, mode: SumupVariant, clocks: u64, k: usize, base_clocks: u64) -> Result<ModeResult, MetricsError> {
        let s = speedup(base_clocks, clocks)?;
        let alpha = if k >= 2 { Some(alpha_eff(k, s)?) } else { None };
        Ok(ModeResult { length, mode, clocks, k, speedup: s, s_over_k: s / k.max(1) as f64, alpha_eff: alpha })
    }

    /// The α column as displayed: single-core rows show 1.
    pub fn alpha_display(&self) -> f64 {
        self.alpha_eff.unwrap_or(1.0)
    }
}

/// Assembles and runs one shipped program at length `n`.
pub fn measure(mode: SumupVariant, n: u32, timing: &TimingConfig, options: &RunOptions) -> Result<(u64, usize), MetricsError> {
    let image = assemble(&program(mode, n)).map_err(|source| MetricsError::Assemble { mode, length: n, source })?;
    let r = run_image(&image, timing, options).map_err(|source| MetricsError::Run { mode, length: n, source })?;
    Ok((r.clocks, r.peak_cores))
}

/// Runs every (length, mode) pair; rows come out ordered by length, then
/// mode. Speedups are relative to the NO run of the same length.
pub fn sweep(lengths: &[u32], modes: &[SumupVariant], pool: usize, timing: &TimingConfig) -> Result<Vec<ModeResult>, MetricsError> {
    sweep_with(lengths, modes, timing, &RunOptions { pool, ..RunOptions::default() })
}

pub fn sweep_with(
    lengths: &[u32],
    modes: &[SumupVariant],
    timing: &TimingConfig,
    options: &RunOptions,
) -> Result<Vec<ModeResult>, MetricsError> {
    if lengths.is_empty() {
        return Err(MetricsError::EmptyLengths);
    }
    let mut modes = modes.to_vec();
    modes.sort();
    modes.dedup();
    let mut rows = Vec::with_capacity(lengths.len() * modes.len());
    for &n in lengths {
        let (base, _) = measure(SumupVariant::No, n, timing, options)?;
        for &mode in &modes {
            let (clocks, k) = match mode {
                SumupVariant::No => (base, 1),
                _ => measure(mode, n, timing, options)?,
            };
            rows.push(ModeResult::new(n, mode, clocks, k, base)?);
        }
    }
    Ok(rows)
}

/// Lengths of the result table.
pub const TABLE_LENGTHS: [u32; 4] = [1, 2, 4, 6];

pub fn table1(pool: usize, timing: &TimingConfig) -> Result<Vec<ModeResult>, MetricsError> {
    sweep(&TABLE_LENGTHS, &SumupVariant::ALL, pool, timing)
}

/// Parses `a..b`, `a..=b` (both inclusive) or a comma-separated list.
pub fn parse_lengths(text: &str) -> Result<Vec<u32>, MetricsError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(MetricsError::EmptyLengths);
    }
    let bad = || MetricsError::BadLengths(text.to_string());
    let num = |s: &str| s.trim().parse::<u32>().map_err(|_| bad());
    let out: Vec<u32> = if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err(MetricsError::EmptyLengths);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
    Plain,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            "plain" => Ok(Format::Plain),
            _ => Err(format!("unknown format `{s}` (expected csv, markdown or plain)")),
        }
    }
}

pub const COLUMNS: [&str; 7] = ["length", "mode", "clocks", "k", "S", "S_over_k", "alpha_eff"];

fn cells(r: &ModeResult) -> [String; 7] {
    [
        r.length.to_string(),
        r.mode.to_string(),
        r.clocks.to_string(),
        r.k.to_string(),
        format!("{:.2}", r.speedup),
        format!("{:.2}", r.s_over_k),
        format!("{:.2}", r.alpha_display()),
    ]
}

/// Renders rows; every format carries the same cell strings.
pub fn render(rows: &[ModeResult], format: Format) -> String {
    let body: Vec<[String; 7]> = rows.iter().map(cells).collect();
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&COLUMNS.join(","));
            out.push('\n');
            for r in &body {
                out.push_str(&r.join(","));
                out.push('\n');
            }
        }
        Format::Markdown => {
            let _ = writeln!(out, "| {} |", COLUMNS.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(COLUMNS.len()));
            for r in &body {
                let _ = writeln!(out, "| {} |", r.join(" | "));
            }
        }
        Format::Plain => {
            let mut width: Vec<usize> = COLUMNS.iter().map(|c| c.len()).collect();
            for r in &body {
                for (w, c) in width.iter_mut().zip(r) {
                    *w = (*w).max(c.len());
                }
            }
            let line = |cols: Vec<&str>| {
                let v: Vec<String> = cols.iter().zip(&width).map(|(c, w)| format!("{c:>w$}")).collect();
                v.join("  ").trim_end().to_string()
            };
            let _ = writeln!(out, "{}", line(COLUMNS.to_vec()));
            for r in &body {
                let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
            }
        }
    }
    out
}
