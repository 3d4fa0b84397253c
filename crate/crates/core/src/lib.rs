//! Simulation and asymptotic analysis of nested growing mutation balls on a torus.
//!
//! Type-`j` mutations arrive as Poisson points in space-time and are accepted
//! only where the location already carries exactly `j - 1` mutations. Each
//! accepted mutation grows as a ball at constant speed. The crate simulates
//! the process exactly, evaluates the limiting laws of the first-passage times
//! and distances, classifies parameter families into scaling regimes and
//! checks simulations against the predicted laws.

pub mod asymptotics;
pub mod error;
pub mod geometry;
pub mod process;
pub mod quadrature;
pub mod regimes;
pub mod rng;
pub mod stats;

pub use asymptotics::{LimitLaw, Rate};
pub use error::{Error, Result};
pub use geometry::{torus_distance, union_volume, Torus, TorusPoint, VolumeMethod};
pub use process::{simulate_replicate, Guards, ModelParams, PassageRecord};
pub use regimes::{classify, Regime, ScalingFamily};
pub use rng::ReplicateSeed;
