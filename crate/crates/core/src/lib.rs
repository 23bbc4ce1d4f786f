//! Localization of wireless sensor networks from range measurements.
//!
//! Two localizers are provided and compared on simulated deployments:
//!
//! * [`mds::mds_map`]: all-pairs shortest paths, classical multidimensional
//!   scaling, then a similarity transform fitted on the anchor nodes.
//! * [`sdp::sdp_localize`]: the semidefinite relaxation of the quadratic
//!   distance constraints, solved by an in-crate PSD feasibility solver.
//!
//! [`topology`] generates random, square-grid and hexagonal-grid
//! deployments, [`netgraph`] builds the range-limited graph, and [`bench`]
//! runs seeded Monte Carlo sweeps over radio range and anchor count.

pub mod bench;
pub mod error;
pub mod format;
pub mod linalg;
pub mod mds;
pub mod netgraph;
pub mod sdp;
pub mod topology;

pub use error::{Error, Result};
pub use mds::{Algorithm, LocalizationResult, RelativeMap, Transform2};
pub use netgraph::{DistanceMatrix, DistanceMode, NetworkGraph};
pub use topology::{Deployment, GridNoise, Point2, TopologyKind};
