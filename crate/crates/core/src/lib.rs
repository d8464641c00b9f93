//! Exact all-k-nearest-neighbor graphs in `O(n log n)` distance evaluations
//! for fixed `k` and dimension.
//!
//! The pipeline: [`build_rst`] splits the points into a rectangle split tree,
//! [`annotate`] attaches a 3/2-approximate enclosing ball to every node, and
//! [`all_knn`] sweeps a frontier of tree nodes from the root down to the
//! leaves while maintaining, per node, the set of nodes that may still hold a
//! nearest neighbor.
//!
//! ```
//! use allknn::{all_knn, PointSet, PointId};
//!
//! let pts = PointSet::from_flat(1, vec![0.0, 1.0, 3.0, 7.0]).unwrap();
//! let g = all_knn(&pts, 1).unwrap();
//! assert_eq!(g.neighbors(PointId(3))[0].id, PointId(2));
//! ```

pub mod annotate;
pub mod engine;
pub mod error;
pub mod gen;
pub mod geometry;
pub mod graph;
pub mod instrument;
pub mod io;
pub mod meb;
pub mod oracle;
pub mod rst;
pub mod scaling;

pub use annotate::annotate;
pub use engine::{all_knn, all_knn_with, qlty, EngineReport, KnnOptions, QualityBound};
pub use error::{Error, Result};
pub use gen::{generate, Distribution};
pub use geometry::{distance, Ball, PointId, PointSet, Rect};
pub use graph::{KnnGraph, Neighbor};
pub use meb::meb_update;
pub use oracle::{brute_all_knn, brute_all_knn_parallel, exact_meb};
pub use rst::{build_rst, NodeId, Rst, RstNode};
