//! Planning engine for aerial (drone) base stations.
//!
//! Given a snapshot of ground users, `skycell` sizes a drone fleet from the
//! per-drone capacity, searches 3D drone positions with a staged-utility
//! particle swarm (capacity, then coverage, then spectral efficiency), and
//! drops drones whose removal keeps every service constraint satisfied.
//!
//! Modules:
//! - [`channel`]: air-to-ground pathloss and downlink SINR
//! - [`scenario`]: service region, density subareas, user snapshots
//! - [`capacity`]: fleet sizing, footprints and constraint evaluation
//! - [`pso`]: the staged particle swarm
//! - [`pruning`]: redundant-drone elimination
//! - [`reporting`]: SINR CDF, Voronoi view, exported tables
//! - [`pipeline`]: everything above chained together

pub mod capacity;
pub mod channel;
pub mod error;
pub mod geom;
pub mod pipeline;
pub mod placement;
pub mod pruning;
pub mod pso;
pub mod reporting;
pub mod scenario;

pub use capacity::{ConstraintReport, FootprintModel, Problem};
pub use channel::{ChannelParams, RadioConfig};
pub use error::{Error, Result};
pub use geom::{Point, Rect};
pub use pipeline::{plan, PlanOptions, PlanResult};
pub use placement::{Drone, Placement};
pub use pso::{PsoParams, Stage};
pub use scenario::{Region, Scenario, Subarea};
