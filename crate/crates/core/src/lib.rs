//! Sampling-based planners on 2D occupancy grids.
//!
//! Three planners share one tree engine: classical RRT*, a variant whose
//! samples are drawn from a mixture of a learned prior and the uniform
//! distribution, and an informed variant that additionally restricts samples
//! to the ellipse of points that could still shorten the current best path.
//! The crate also carries everything needed to benchmark them: procedural
//! maps, a grid A* used for dataset labels and oracle priors, metrics, a
//! seeded experiment runner, SVG rendering and dataset export.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod planner;
pub mod prior;
pub mod render;
pub mod search;
pub mod seed;

pub use error::{Error, Location, Result};
pub use grid::{Cell, CellIdx, Density, OccupancyGrid, PlanningProblem, Point2};
pub use planner::{PlanOutcome, PlannerConfig, PlannerKind, Tree};
pub use prior::{InformedEllipse, ProbabilityMap, SamplerConfig};
