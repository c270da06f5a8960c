//! First passage percolation on boxes of `Z^d` and torus products, with
//! exact Fourier-Walsh tooling for small hypercubes.

pub mod averaging;
pub mod boolean;
pub mod circumference;
pub mod env;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod metric;
pub mod rng;
pub mod stats;
pub mod verify;

pub use env::{Environment, EnvironmentDescriptor, EnvironmentSampler};
pub use error::{FppError, Result};
pub use graph::{build_box, build_torus_product, EdgeId, FiberGraph, VertexId, WeightedGraph};
