//! Homogenized flux estimation from equilibrium runs on a ring.

mod estimate;
mod microscopic;
mod table;

pub use estimate::{
    canonical_configuration, estimate_flux_on, estimate_flux_point, estimate_flux_points, mean_stderr, pool,
    run_flux_replica, FluxParams, FluxPoint, ReplicaEstimate, MIN_BATCHES,
};
pub use microscopic::{flux_stencil, microscopic_flux};
pub use table::{build_flux_table, FluxMeta, FluxTable, PointDiagnostics, FLUX_TABLE_VERSION};
