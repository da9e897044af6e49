//! Verdicts computed from realizations: correlation sweeps along index sets,
//! rigidity scans, obstruction replays, and horizon estimators for the builders.

mod correlation;
mod estimators;
mod rigidity;

pub use correlation::{
    k_bound_check, sweep, BandDeviation, CorrelationReport, CorrelationSummary, KBoundVerdict,
    DEFAULT_TAIL_FRACTION,
};
pub use estimators::{EmpiricalEstimator, EstimatorConfig};
pub use rigidity::{
    alpha_obstruction_check, intersection_of_powers, m1_m2_partition_audit, rigidity_scan, ClassStat,
    IntersectionBound, ObstructionEntry, ObstructionVerdict, PartitionAudit, RigidityEntry, RigidityReport,
    TimeClass,
};
