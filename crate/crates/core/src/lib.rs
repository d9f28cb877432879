//! Random simplicial complexes built on marked Poisson processes, with
//! q-percolation events, an exploration algorithm and Monte Carlo estimators.

pub mod complex;
pub mod config;
pub mod connection;
pub mod error;
pub mod estimation;
pub mod exploration;
pub mod export;
pub mod geometry;
pub mod graphs;
pub mod render;
pub mod sampler;
pub mod stats;
pub mod stream;

pub use complex::{build, Complex, Simplex};
pub use config::RunConfig;
pub use connection::{verify_v1_v2, BoundsReport, ConnectionFamily, FamilyKind, Kernel, Mark, MarkLaw};
pub use error::{Error, Result};
pub use estimation::{
    decay_fit, estimate_beta_c, near_critical_slope, theta_sweep, CriticalConfig, CriticalEstimate, DecayFit, Model,
    NearCritical, SweepResult,
};
pub use exploration::{explore, explore_complex, influence, osss_check, revealment, ExplorationTrace, OsssReport, Setup};
pub use geometry::{window_for_radius, CubeGrid, CubeIndex, Point, Window};
pub use graphs::{components, down_graph, duality_check, event_b_r, origin_reach, up_graph, PercolationVerdict, QGraph};
pub use sampler::{sample, MarkedPoint, Realization, VertexId};
pub use stats::Estimate;
