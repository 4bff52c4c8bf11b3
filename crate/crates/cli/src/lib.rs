//! Subcommands of the `empa` binary. Each `cmd_*` writes its report to the
//! given writer and returns an error instead of exiting, so tests can call
//! them directly.

pub mod golden;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use empa::isa::{assemble, AsmError, ObjectImage, ObjectParseError, Reg};
use empa::machine::{run_image, RunOptions};
use empa::metrics::{self, Format, MetricsError, TABLE_LENGTHS};
use empa::programs::{program, with_length, SumupVariant};
use empa::timing::TimingError;
use empa::{trace, SimError, TimingConfig};

#[derive(Debug, Parser)]
#[command(name = "empa", version, about = "Assembler and cycle-level simulator for a supervisor-coordinated many-core processor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble a source file into the textual object format.
    Asm(AsmArgs),
    /// Run a source or object file and print clocks, cores and registers.
    Run(RunArgs),
    /// Reproduce the result table for vector lengths 1, 2, 4 and 6.
    Bench(BenchArgs),
    /// Emit metrics for a range of vector lengths as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct MachineArgs {
    /// Number of cores in the pool.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u8).range(1..=64))]
    pub pool: u8,
    /// Timing file; defaults to the shipped calibration.
    #[arg(long)]
    pub timing: Option<PathBuf>,
    /// Check structural invariants after every clock.
    #[arg(long)]
    pub invariants: bool,
}

#[derive(Debug, Args)]
pub struct AsmArgs {
    pub source: PathBuf,
    /// Patch the vector block to the elements 1..=N before assembling.
    #[arg(long)]
    pub veclen: Option<u32>,
    /// Output path; standard output if omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// `.eys` source (assembled on the fly) or object file.
    pub input: PathBuf,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[arg(long)]
    pub veclen: Option<u32>,
    /// Write the event trace to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub machine: MachineArgs,
    #[arg(long, default_value = "plain")]
    pub format: Format,
    /// Compare against the golden table and fail on any difference.
    #[arg(long)]
    pub check: bool,
    /// Write the traces of all twelve runs to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `A..B` (inclusive) or a comma-separated list.
    #[arg(long)]
    pub lengths: String,
    #[arg(long, value_delimiter = ',', default_value = "FOR,SUMUP")]
    pub modes: Vec<SumupVariant>,
    #[command(flatten)]
    pub machine: MachineArgs,
    #[arg(long, default_value = "csv")]
    pub format: Format,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Asm { path: PathBuf, source: AsmError },
    #[error("{path}: {source}")]
    Object { path: PathBuf, source: ObjectParseError },
    #[error("{path}: {source}")]
    Timing { path: PathBuf, source: TimingError },
    #[error("{path}: no `# @count` / `# @vector-begin` / `# @vector-end` markers to patch")]
    NoMarkers { path: PathBuf },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("golden comparison failed:\n{}", .0.join("\n"))]
    Check(Vec<String>),
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    /// Process exit status: 2 for usage problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Metrics(MetricsError::EmptyLengths | MetricsError::BadLengths(_)) => 2,
            _ => 1,
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Writes to `--out` when given, else to `out`.
fn emit(target: &Option<PathBuf>, out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    match target {
        Some(p) => write_file(p, text),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

pub fn load_timing(path: &Option<PathBuf>) -> Result<TimingConfig, CliError> {
    match path {
        None => Ok(TimingConfig::default()),
        Some(p) => TimingConfig::parse(&read(p)?).map_err(|source| CliError::Timing { path: p.clone(), source }),
    }
}

fn assemble_file(path: &Path, veclen: Option<u32>) -> Result<ObjectImage, CliError> {
    let mut src = read(path)?;
    if let Some(n) = veclen {
        src = with_length(&src, n).ok_or_else(|| CliError::NoMarkers { path: path.to_path_buf() })?;
    }
    assemble(&src).map_err(|source| CliError::Asm { path: path.to_path_buf(), source })
}

fn is_source(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "eys" || e == "ys")
}

fn run_options(m: &MachineArgs, trace: bool) -> RunOptions {
    RunOptions { pool: usize::from(m.pool), trace, check_invariants: m.invariants, ..RunOptions::default() }
}

pub fn cmd_asm(args: &AsmArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let image = assemble_file(&args.source, args.veclen)?;
    emit(&args.out, out, &image.to_text())
}

pub fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let image = if is_source(&args.input) {
        assemble_file(&args.input, args.veclen)?
    } else {
        let text = read(&args.input)?;
        ObjectImage::parse(&text).map_err(|source| CliError::Object { path: args.input.clone(), source })?
    };
    let timing = load_timing(&args.machine.timing)?;
    let report = run_image(&image, &timing, &run_options(&args.machine, args.trace.is_some()))?;
    if let Some(p) = &args.trace {
        write_file(p, &trace::render(&report.trace))?;
    }
    let mut text = format!("clocks={} k={}\n", report.clocks, report.peak_cores);
    let regs: Vec<String> = Reg::ARCHITECTURAL
        .iter()
        .map(|r| format!("{}={:#010x}", &r.name()[1..], report.regs.get(*r)))
        .collect();
    text.push_str(&regs.join(" "));
    text.push('\n');
    let cc = report.cc;
    text.push_str(&format!("zf={} sf={} of={}\n", u8::from(cc.zf), u8::from(cc.sf), u8::from(cc.of)));
    emit(&args.out, out, &text)
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let timing = load_timing(&args.machine.timing)?;
    let options = run_options(&args.machine, false);
    let rows = metrics::sweep_with(&TABLE_LENGTHS, &SumupVariant::ALL, &timing, &options)?;
    if let Some(p) = &args.trace {
        let mut text = String::new();
        let traced = run_options(&args.machine, true);
        for &n in &TABLE_LENGTHS {
            for mode in SumupVariant::ALL {
                let image = assemble(&program(mode, n)).expect("shipped programs assemble");
                let r = run_image(&image, &timing, &traced)?;
                text.push_str(&format!("# {mode} length {n}\n"));
                text.push_str(&trace::render(&r.trace));
            }
        }
        write_file(p, &text)?;
    }
    emit(&args.out, out, &metrics::render(&rows, args.format))?;
    if args.check {
        let deltas = golden::compare(&rows, &golden::table1());
        if !deltas.is_empty() {
            return Err(CliError::Check(deltas));
        }
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let lengths = metrics::parse_lengths(&args.lengths)?;
    let timing = load_timing(&args.machine.timing)?;
    let rows = metrics::sweep_with(&lengths, &args.modes, &timing, &run_options(&args.machine, false))?;
    emit(&args.out, out, &metrics::render(&rows, args.format))
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Asm(a) => cmd_asm(a, out),
        Command::Run(a) => cmd_run(a, out),
        Command::Bench(a) => cmd_bench(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
    }
}
