//! Cycle-level simulator of a many-core processor in which a supervisor
//! rents cores to quasi-threads, executes metainstructions one per control
//! clock and runs FOR/SUMUP mass-processing controllers. Includes an
//! assembler for Y86 extended with the metainstructions.

pub mod cpu;
pub mod error;
pub mod invariants;
pub mod isa;
pub mod machine;
pub mod mask;
pub mod memory;
pub mod metrics;
pub mod programs;
pub mod supervisor;
pub mod timing;
pub mod trace;

pub use error::SimError;
pub use isa::{assemble, ObjectImage};
pub use machine::{run_image, Machine, RunOptions, RunReport};
pub use programs::SumupVariant;
pub use timing::TimingConfig;
