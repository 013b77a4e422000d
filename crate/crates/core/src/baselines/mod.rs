//! Heuristic comparison algorithms. Each returns a [`Placement`] that
//! respects the capacity, distance and single-assignment constraints.
//!
//! [`Placement`]: crate::placement::Placement

mod genetic;
mod head_cluster;
mod kmeans;
mod kmtk;

pub use genetic::{decode, fitness, genetic, repair, GaParams};
pub use head_cluster::{head_cluster, HeadRule};
pub use kmeans::{kmeans, kmeans_repetitive, kmeans_repetitive_with_k, Clustering, MAX_ITERATIONS};
pub use kmtk::{kmtk, kmtk_detailed, KmtkOutcome};
