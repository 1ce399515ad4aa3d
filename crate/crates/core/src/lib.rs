//! Federated edge learning in the typical cell of a Poisson cellular
//! network: closed-form spatial convergence analysis plus a Monte Carlo
//! simulator that checks it.

pub mod analytics;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod learning;
pub mod oracle;
pub mod rng;
pub mod scalar;
pub mod simulator;

pub use analytics::{Mobility, Scheme};
pub use error::{FeelError, Result};
pub use scalar::Scalar;

pub type Point = geometry::Point2<f64>;
pub type HexGrid = geometry::HexGrid<f64>;
pub type CellRealization = geometry::CellRealization<f64>;
pub type NetworkConfig = analytics::NetworkConfig<f64>;
pub type TaskSpec = analytics::TaskSpec<f64>;
pub type BoundReport = analytics::BoundReport<f64>;
