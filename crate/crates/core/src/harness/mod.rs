//! Run configuration, initial conditions and the subcommands of the `cbf`
//! binary.

pub mod commands;
pub mod config;
pub mod ic;

pub use commands::{
    cmd_check_inequalities, cmd_energy_audit, cmd_rescale_test, cmd_run, cmd_sweep, initial_stepper, observe_now,
    run_cell, worker_count, write_sweep_csv, AuditReport, CheckpointWriter, InequalityCheck, RescaleReport, RunSummary,
    SweepRow, SWEEP_HEADER, WORKERS_ENV,
};
pub use config::{IcKind, IcSpec, RunConfig};
pub use ic::{beltrami, initial_condition, random_spectrum, shear, taylor_green};

/// Process exit codes of the `cbf` binary.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const ASSERTION: i32 = 3;
    pub const BLOWUP: i32 = 4;
}
