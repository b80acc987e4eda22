pub mod checkers;
pub mod constants;
pub mod domain;
pub mod error;
pub mod experiments;
pub mod geodesic;
pub mod graph;
pub mod mapping;
pub mod metrics;
pub mod norm;
pub mod plot;
pub mod quad;
pub mod report;
pub mod sampling;
pub mod serde_ext;
pub mod tower;
pub mod visibility;
