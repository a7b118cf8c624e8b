//! Poisson graphical construction: event streams, update maps, coupled
//! evolution and observer currents.

mod config;
mod current;
mod evolve;
mod stream;
mod update;

pub use config::{Configuration, ConfigurationRecord};
pub use current::{count_current, CurrentCounter, ObserverPath};
pub use evolve::{
    evolve, evolve_coupled, evolve_observed, stream_for, Checkpoint, CoupledEnsemble, EventObserver, EventTrace,
    CHECKPOINT_VERSION,
};
pub use stream::{Event, EventStream};
pub use update::{apply_update, traffic_direct_rate, Dynamics, Move};
