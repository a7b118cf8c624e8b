//! Scaling experiments and coupling property suites.

mod hydro;
mod properties;
mod sampling;

pub use hydro::{
    check_flux, glue, run_hydro_experiment, run_riemann_current, CurrentExperiment, CurrentReport, CurrentRow,
    HydroReport, ScaleReport, ScalingExperiment,
};
pub use properties::{
    opposite_discrepancies, ordered_pair, test_discrepancy_decay, test_macroscopic_stability, test_ordering,
    DiscrepancyInit, DiscrepancyReport, OrderingReport, StabilityInit, StabilityReport, CHECKPOINTS,
};
pub use sampling::{empirical_measure, sample_initial, EmpiricalMeasure, Embedding};
