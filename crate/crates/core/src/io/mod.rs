//! Configuration documents, hashing and output persistence.

mod config;
mod hash;
mod output;

pub use config::{
    CouplingSection, DiscrepancySection, FluxSection, GeometrySpec, HydroSection, NamedProfile, OrderingSection,
    PdeSection, ProfileSpec, RiemannSection, RunConfig, SimulateSection, StabilitySection, Thresholds,
};
pub use hash::{model_hash, sha256_hex};
pub use output::{
    read_document, verify_outputs, Document, Manifest, OutputDir, VerifyReport, CONFIG_SNAPSHOT, MANIFEST,
    OUTPUT_VERSION,
};
