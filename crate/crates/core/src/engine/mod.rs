//! Constraint store, propagation rules and constraint generation.

mod constraint;
mod generate;
mod propagate;
mod registry;
mod store;
mod trace;

pub use constraint::{ConflictRecord, Constraint, ConstraintDisplay, Origin, Posted, Source};
pub use generate::{generate_constraints, prepare_registry, GenerateError};
pub use propagate::Status;
pub use registry::{AtomicRule, Registry, RegistryError, ResultRule, Rule, RuleSpec};
pub use store::{replay, ConstraintStore, DEFAULT_STEP_BUDGET};
pub use trace::{Effect, TraceEvent};
