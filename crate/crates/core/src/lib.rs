//! Joint edge-server placement and base-station workload allocation.
//!
//! Stations become a [`Topology`]; a solver from the [`SolverRegistry`]
//! turns it into a [`Placement`], and [`evaluation`] checks and scores it.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod geo;
pub mod learner;
pub mod mdp;
pub mod placement;
pub mod registry;

pub use dataset::BaseStation;
pub use error::{Error, Result};
pub use evaluation::{brute_force_optimal, feasibility_check, metrics, MetricsReport, Violation};
pub use geo::{build_topology, haversine_km, GeoPoint, Topology};
pub use learner::{train, Mode, TrainResult};
pub use mdp::HyperParams;
pub use placement::Placement;
pub use registry::{derive_seed, Solution, Solver, SolverRegistry};
