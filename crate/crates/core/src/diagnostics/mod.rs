//! Energy ledger, regularity monitors and checkpoints.

pub mod checkpoint;
pub mod ledger;
pub mod monitors;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use ledger::{energy_inequality, read_ndjson, EnergyLedger, InequalityReport, LedgerRow};
pub use monitors::{
    gronwall_constant, gronwall_monitor, monotonicity_monitor, GronwallReport, MonotonicityReport, RegularityProbe,
    RegularityRecorder,
};
