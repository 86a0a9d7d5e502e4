//! Sensor network localization by registering overlapping cliques.
//!
//! The pipeline partitions the measurement graph into overlapping maximal
//! cliques ([`cliques`]), checks and enforces the max-flow rigidity
//! condition on the clique/node correspondence graph ([`rigidity`]),
//! localizes every clique with classical multidimensional scaling
//! ([`mds`]), and registers the cliques in a common frame through an
//! ADMM-solved semidefinite relaxation ([`registration`]). [`eval`] holds
//! the error metric and the experiment harness.

pub mod cliques;
pub mod error;
pub mod eval;
pub mod graph;
pub mod mds;
pub mod numerics;
pub mod registration;
pub mod rigidity;

pub use error::{Result, SnlError};
pub use graph::{MeasurementGraph, NodeId, Point};
pub use registration::pipeline::{localize_network, LocalizationReport, PipelineOptions};
