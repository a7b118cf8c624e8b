//! Model families, rate functions, jump kernels and quenched environments.

mod environment;
mod kernel;
mod lattice;
mod paths;
mod rate;
mod report;
mod spec;

pub use environment::{
    EnvironmentField, EnvironmentLaw, FieldKind, JumpField, JumpVariant, KStepField, TrafficField,
    ValueDistribution,
};
pub use kernel::JumpKernel;
pub use lattice::{Geometry, Lattice};
pub use paths::{
    enumerate_self_avoiding, kstep_rates, kstep_target, random_walk_paths, KPath, KStepTarget,
    PathLaw, SelfAvoidingLaw, StepIndex,
};
pub use rate::RateFunction;
pub use report::{AssumptionCheck, ValidationReport};
pub use spec::{lipschitz_kstep, traffic_envelope, Family, FamilyClass, ModelSpec};
